"""On-disk data contracts and corpus loading.

Corpora are JSONL (one UTF-8 object per line). A code change is a unified
diff plus optional full before/after file text; reviews and human annotation
records reference changes by id. All loaders validate eagerly: malformed
lines, duplicate ids, unparseable diffs, and dangling references fail at
load time, never at score time.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CannotMaterializeError, DataError, DiffParseError, PatchApplyError

_LANG_ALIASES = {
    "py": "python",
    "python": "python",
    "python3": "python",
    "java": "java",
    "js": "javascript",
    "javascript": "javascript",
}

SMELL_LANGUAGES = ("python", "java", "javascript")


@dataclass(frozen=True)
class Language:
    """Canonical language: python/java/javascript, or other with its tag."""

    name: str  # "python" | "java" | "javascript" | "other"
    tag: str   # normalized source string, e.g. "go" for other("go")

    @classmethod
    def from_string(cls, raw: str) -> "Language":
        tag = raw.strip().lower()
        name = _LANG_ALIASES.get(tag)
        if name is None:
            return cls("other", tag)
        return cls(name, name)

    @property
    def supports_smells(self) -> bool:
        return self.name in SMELL_LANGUAGES


@dataclass(frozen=True)
class DiffHunk:
    """One @@-delimited hunk; lines are (kind, text) with kind in
    {"context", "added", "removed"}."""

    old_start: int
    old_len: int
    new_start: int
    new_len: int
    lines: tuple[tuple[str, str], ...]


@dataclass
class CodeChange:
    """The unit of evaluation: a language-tagged unified diff."""

    id: str
    language: Language
    diff_text: str
    before_text: str | None = None
    after_text: str | None = None
    meta: dict[str, str] = field(default_factory=dict)

    def hunks(self) -> list[DiffHunk]:
        return parse_unified_diff(self.diff_text)


@dataclass
class ReviewDoc:
    """One review comment produced by a system for a change."""

    change_id: str
    system_id: str
    text: str

    @property
    def is_empty(self) -> bool:
        return not self.text.strip()


@dataclass
class AnnotationRecord:
    """Human Likert judgments (1..5) for one (change, system) review."""

    change_id: str
    system_id: str
    con: int
    comp: int
    rel: int
    covered_ref_ids: list[str] = field(default_factory=list)
    unnecessary_ref_ids: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        for name in ("con", "comp", "rel"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or not 1 <= v <= 5:
                raise DataError(
                    f"annotation {self.change_id}/{self.system_id}: "
                    f"{name}={v!r} outside Likert range 1..5"
                )
        overlap = set(self.covered_ref_ids) & set(self.unnecessary_ref_ids)
        if overlap:
            raise DataError(
                f"annotation {self.change_id}/{self.system_id}: refs both covered "
                f"and unnecessary: {sorted(overlap)}"
            )


# ---------------------------------------------------------------------------
# Unified diff parsing / application
# ---------------------------------------------------------------------------

_HUNK_HEADER_RE = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@")
_FILE_HEADER_PREFIXES = (
    "--- ", "+++ ", "diff ", "index ", "new file", "deleted file",
    "old mode", "new mode", "similarity", "rename ", "Binary files",
)


def parse_unified_diff(diff_text: str) -> list[DiffHunk]:
    """Parse unified-diff text into validated hunks.

    Header counts are checked against the body, "\\ No newline at end of
    file" markers are consumed, file headers before/between hunks are
    skipped, and overlapping hunks are rejected. A completely empty line
    inside a hunk body is tolerated as an empty context line (common in
    diffs whose trailing whitespace was stripped).
    """
    hunks: list[DiffHunk] = []
    header: tuple[int, int, int, int] | None = None
    lines: list[tuple[str, str]] = []
    old_seen = new_seen = 0
    hunk_idx = -1

    def close_hunk() -> None:
        nonlocal header, lines, old_seen, new_seen
        if header is None:
            return
        old_start, old_len, new_start, new_len = header
        if old_seen != old_len or new_seen != new_len:
            raise DiffParseError(
                f"hunk {hunk_idx}: header counts -{old_len}/+{new_len} do not match "
                f"body counts -{old_seen}/+{new_seen}"
            )
        hunks.append(DiffHunk(old_start, old_len, new_start, new_len, tuple(lines)))
        header = None
        lines = []
        old_seen = new_seen = 0

    for raw in diff_text.splitlines():
        m = _HUNK_HEADER_RE.match(raw)
        if m:
            close_hunk()
            hunk_idx += 1
            header = (
                int(m.group(1)),
                int(m.group(2)) if m.group(2) is not None else 1,
                int(m.group(3)),
                int(m.group(4)) if m.group(4) is not None else 1,
            )
            continue
        if header is None:
            if not raw.strip() or raw.startswith(_FILE_HEADER_PREFIXES) or raw.startswith("\\"):
                continue
            raise DiffParseError(f"content line outside any hunk: {raw!r}")
        if raw.startswith("\\"):
            continue  # "\ No newline at end of file"
        old_len, new_len = header[1], header[3]
        if old_seen >= old_len and new_seen >= new_len:
            # Body already satisfied; only headers/markers may follow.
            if not raw.strip() or raw.startswith(_FILE_HEADER_PREFIXES):
                close_hunk()
                continue
            raise DiffParseError(f"hunk {hunk_idx}: unexpected line after body complete: {raw!r}")
        if raw.startswith("+"):
            lines.append(("added", raw[1:]))
            new_seen += 1
        elif raw.startswith("-"):
            lines.append(("removed", raw[1:]))
            old_seen += 1
        elif raw.startswith(" ") or raw == "":
            lines.append(("context", raw[1:] if raw else ""))
            old_seen += 1
            new_seen += 1
        else:
            raise DiffParseError(f"hunk {hunk_idx}: unrecognized line prefix: {raw!r}")
    close_hunk()

    if not hunks:
        raise DiffParseError("diff contains no hunks")
    _reject_overlaps(hunks)
    return hunks


def _reject_overlaps(hunks: Sequence[DiffHunk]) -> None:
    by_start = sorted(hunks, key=lambda h: h.old_start)
    prev_end = -1
    for h in by_start:
        # A zero-length old range still occupies an insertion point.
        start = h.old_start
        end = h.old_start + max(h.old_len, 1) - 1
        if start <= prev_end:
            raise DiffParseError(
                f"overlapping hunks: old-file line ranges intersect at line {start}"
            )
        prev_end = end


def render_hunks(hunks: Iterable[DiffHunk]) -> str:
    """Render hunks back to canonical unified-diff text."""
    prefix = {"context": " ", "added": "+", "removed": "-"}
    out: list[str] = []
    for h in hunks:
        out.append(f"@@ -{h.old_start},{h.old_len} +{h.new_start},{h.new_len} @@")
        for kind, text in h.lines:
            out.append(prefix[kind] + text)
    return "\n".join(out) + "\n"


def apply_hunks(before: str, hunks: Sequence[DiffHunk]) -> str:
    """Apply hunks to full before-file text; validates context lines.

    Files are treated as newline-terminated line sequences: the result is
    newline-terminated whenever it is non-empty.
    """
    src = before.splitlines()
    out: list[str] = []
    cursor = 0  # 0-based index into src
    for h in sorted(hunks, key=lambda h: h.old_start):
        # old_start is 1-based; old_len == 0 means insertion after that line.
        start = h.old_start - 1 if h.old_len > 0 else h.old_start
        if start < cursor or start > len(src):
            raise PatchApplyError(
                f"hunk at old line {h.old_start} does not fit (file has {len(src)} lines)"
            )
        out.extend(src[cursor:start])
        cursor = start
        for kind, text in h.lines:
            if kind == "added":
                out.append(text)
                continue
            if cursor >= len(src):
                raise PatchApplyError(
                    f"hunk at old line {h.old_start}: ran past end of file"
                )
            if src[cursor] != text:
                raise PatchApplyError(
                    f"{kind} line mismatch at old line {cursor + 1}: "
                    f"expected {text!r}, found {src[cursor]!r}"
                )
            if kind == "context":
                out.append(text)
            cursor += 1
    out.extend(src[cursor:])
    return "\n".join(out) + "\n" if out else ""


def materialize_before_after(change: CodeChange) -> tuple[str, str]:
    """Reconstruct (before, after) file text for a change.

    Uses ``before_text`` when present. Without it, only a self-contained
    full-file diff (a single hunk starting at old line 0 or 1) can be
    materialized; anything else raises CannotMaterializeError.
    """
    hunks = change.hunks()
    if change.before_text is not None:
        before = change.before_text
        return before, apply_hunks(before, hunks)
    if len(hunks) == 1 and hunks[0].old_start <= 1:
        h = hunks[0]
        old = [t for k, t in h.lines if k in ("context", "removed")]
        new = [t for k, t in h.lines if k in ("context", "added")]
        before = "\n".join(old) + "\n" if old else ""
        after = "\n".join(new) + "\n" if new else ""
        return before, after
    raise CannotMaterializeError(
        f"change {change.id}: cannot materialize before/after from a partial diff "
        "without before_text"
    )


# ---------------------------------------------------------------------------
# JSONL loaders
# ---------------------------------------------------------------------------

def _iter_jsonl(path: str | Path) -> Iterable[tuple[int, dict]]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise DataError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def _require(obj: dict, key: str, path: str | Path, lineno: int) -> object:
    if key not in obj:
        raise DataError(f"{path}:{lineno}: missing required key {key!r}")
    return obj[key]


def load_changes(path: str | Path) -> list[CodeChange]:
    """Load a code-change corpus.

    Expected keys per line: ``id``, ``lang``, ``patch``; optional ``oldf``,
    ``newf``, ``meta``. The patch must parse into at least one hunk, and when
    both ``oldf`` and ``newf`` are present the applied patch must reproduce
    ``newf`` exactly.
    """
    changes: list[CodeChange] = []
    seen: set[str] = set()
    for lineno, obj in _iter_jsonl(path):
        cid = str(_require(obj, "id", path, lineno))
        if cid in seen:
            raise DataError(f"{path}:{lineno}: duplicate change id {cid!r}")
        seen.add(cid)
        lang = Language.from_string(str(_require(obj, "lang", path, lineno)))
        patch = str(_require(obj, "patch", path, lineno))
        meta = obj.get("meta") or {}
        if not isinstance(meta, dict):
            raise DataError(f"{path}:{lineno}: meta must be an object")
        change = CodeChange(
            id=cid,
            language=lang,
            diff_text=patch,
            before_text=obj.get("oldf"),
            after_text=obj.get("newf"),
            meta={str(k): str(v) for k, v in meta.items()},
        )
        try:
            hunks = change.hunks()
        except DiffParseError as exc:
            raise DataError(f"{path}:{lineno}: change {cid!r}: {exc}") from exc
        if change.before_text is not None and change.after_text is not None:
            try:
                applied = apply_hunks(change.before_text, hunks)
            except PatchApplyError as exc:
                raise DataError(f"{path}:{lineno}: change {cid!r}: {exc}") from exc
            if applied != change.after_text:
                raise DataError(
                    f"{path}:{lineno}: change {cid!r}: applying the patch to oldf "
                    "does not reproduce newf"
                )
        changes.append(change)
    return changes


def load_reviews(path: str | Path, change_ids: set[str] | None = None) -> list[ReviewDoc]:
    """Load review documents; rejects dangling change ids when given the set."""
    reviews: list[ReviewDoc] = []
    for lineno, obj in _iter_jsonl(path):
        doc = ReviewDoc(
            change_id=str(_require(obj, "change_id", path, lineno)),
            system_id=str(_require(obj, "system_id", path, lineno)),
            text=str(_require(obj, "text", path, lineno)),
        )
        if change_ids is not None and doc.change_id not in change_ids:
            raise DataError(
                f"{path}:{lineno}: review references unknown change {doc.change_id!r}"
            )
        reviews.append(doc)
    return reviews


def load_annotations(
    path: str | Path, change_ids: set[str] | None = None
) -> list[AnnotationRecord]:
    """Load human annotation records; Likert values outside 1..5 are errors."""
    records: list[AnnotationRecord] = []
    for lineno, obj in _iter_jsonl(path):
        try:
            rec = AnnotationRecord(
                change_id=str(_require(obj, "change_id", path, lineno)),
                system_id=str(_require(obj, "system_id", path, lineno)),
                con=_require(obj, "con", path, lineno),
                comp=_require(obj, "comp", path, lineno),
                rel=_require(obj, "rel", path, lineno),
                covered_ref_ids=[str(x) for x in obj.get("covered_ref_ids", [])],
                unnecessary_ref_ids=[str(x) for x in obj.get("unnecessary_ref_ids", [])],
            )
        except DataError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if change_ids is not None and rec.change_id not in change_ids:
            raise DataError(
                f"{path}:{lineno}: annotation references unknown change {rec.change_id!r}"
            )
        records.append(rec)
    return records


def load_pseudorefs(path: str | Path, change_ids: set[str] | None = None):
    """Load a pseudo-reference corpus written by gen-refs (or hand-authored)."""
    from .pseudoref import PseudoRef  # local import: avoids a module cycle

    refs: list[PseudoRef] = []
    for lineno, obj in _iter_jsonl(path):
        try:
            ref = PseudoRef(
                id=str(_require(obj, "id", path, lineno)),
                change_id=str(_require(obj, "change_id", path, lineno)),
                kind=str(_require(obj, "kind", path, lineno)),
                text=str(_require(obj, "text", path, lineno)),
                source=str(_require(obj, "source", path, lineno)),
                verdict=obj.get("verdict"),
            )
        except (DataError, ValueError) as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
        if change_ids is not None and ref.change_id not in change_ids:
            raise DataError(
                f"{path}:{lineno}: pseudo-ref references unknown change {ref.change_id!r}"
            )
        refs.append(ref)
    return refs
