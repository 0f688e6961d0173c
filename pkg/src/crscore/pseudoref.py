"""Pseudo-reference production: LLM claims/implications plus static-analysis
smells, combined into the reference set a review is scored against.

The LLM side talks to any chat-completion endpoint through ``LlmClient``
(bounded retries, on-disk response cache keyed by request content, so warm
reruns are free and byte-identical). The analyzer side wraps external tools
behind a declarative subprocess contract, runs them on before/after file
snapshots, and keeps the findings the change is responsible for.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import requests

from .corpus import materialize_before_after, parse_unified_diff
from .errors import (
    AnalyzerError,
    AnalyzerTimeoutError,
    AnalyzerUnavailableError,
    DataError,
    TransportError,
    UnparseableClaimsError,
)
from .textproc import ParsedClaim, parse_claims

if TYPE_CHECKING:
    from .corpus import CodeChange, DiffHunk

KINDS = ("claim", "implication", "smell", "issue")
VERDICTS = ("correct", "incorrect", "unverifiable", "ambiguous", "added")


@dataclass
class PseudoRef:
    """One claim/implication/smell sentence attributed to its source."""

    id: str
    change_id: str
    kind: str
    text: str
    source: str  # "llm:<model>" or "analyzer:<tool>"
    verdict: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise DataError(f"unknown pseudo-ref kind {self.kind!r}")
        if not self.text.strip():
            raise DataError("pseudo-ref text must be non-empty")
        if self.kind in ("smell", "issue") and not self.source.startswith("analyzer:"):
            raise DataError(f"{self.kind} pseudo-refs must come from an analyzer")
        if self.verdict is not None and self.verdict not in VERDICTS:
            raise DataError(f"unknown verdict {self.verdict!r}")

    def to_json(self) -> dict:
        obj = {
            "id": self.id,
            "change_id": self.change_id,
            "kind": self.kind,
            "text": self.text,
            "source": self.source,
        }
        if self.verdict is not None:
            obj["verdict"] = self.verdict
        return obj


@dataclass
class SmellFinding:
    """One normalized static-analysis finding."""

    tool: str
    rule_id: str
    message: str
    file: str
    line_start: int
    line_end: int
    severity: str | None = None

    def __post_init__(self) -> None:
        if not self.rule_id:
            raise DataError("finding rule_id must be non-empty")
        if self.line_start > self.line_end:
            raise DataError(
                f"finding line range inverted: {self.line_start} > {self.line_end}"
            )


# ---------------------------------------------------------------------------
# Chat-completion client with response cache
# ---------------------------------------------------------------------------

@dataclass
class LlmClientConfig:
    endpoint: str = ""
    model: str = ""
    temperature: float = 0.0
    max_tokens: int = 1024
    max_in_flight: int = 4
    retry_attempts: int = 3
    retry_backoff_s: float = 0.5
    cache_dir: str = ""
    response_path: str = "choices.0.message.content"
    timeout_s: float = 120.0
    api_key: str = ""

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise DataError("temperature must be >= 0")
        if self.retry_attempts < 1:
            raise DataError("retry attempts must be >= 1")


def _walk_path(obj, dotted: str):
    for part in dotted.split("."):
        if isinstance(obj, list):
            obj = obj[int(part)]
        elif isinstance(obj, dict):
            obj = obj[part]
        else:
            raise KeyError(part)
    return obj


class LlmClient:
    """Minimal chat-completion client: POST {model, messages, temperature,
    max_tokens}, extract text at the configured response path.

    Every successful exchange is persisted as one JSON file (request,
    response, timestamp) keyed by a content hash, and replayed from disk on
    later calls. A custom ``transport`` callable may replace HTTP for tests.
    """

    def __init__(self, config: LlmClientConfig, transport=None):
        self.config = config
        self._transport = transport or self._http_transport
        self._session = requests.Session()

    def _http_transport(self, payload: dict) -> dict:
        headers = {}
        if self.config.api_key:
            headers["Authorization"] = f"Bearer {self.config.api_key}"
        resp = self._session.post(
            self.config.endpoint, json=payload, headers=headers,
            timeout=self.config.timeout_s,
        )
        if resp.status_code >= 500:
            raise TransportError(f"{self.config.endpoint} returned {resp.status_code}")
        resp.raise_for_status()
        return resp.json()

    def _cache_path(self, key_parts: Sequence[str]) -> Path | None:
        if not self.config.cache_dir:
            return None
        digest = hashlib.sha256("\x00".join(key_parts).encode("utf-8")).hexdigest()
        return Path(self.config.cache_dir) / f"{digest}.json"

    def complete(self, messages: list[dict], key_parts: Sequence[str]) -> str:
        """Return the completion text, from cache when possible."""
        key = (self.config.model, *key_parts)
        path = self._cache_path(key)
        if path is not None and path.exists():
            try:
                entry = json.loads(path.read_text("utf-8"))
                return str(_walk_path(entry["response"], self.config.response_path))
            except (json.JSONDecodeError, KeyError, IndexError, ValueError):
                path.unlink(missing_ok=True)

        payload = {
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }
        last_exc: Exception | None = None
        response = None
        for attempt in range(self.config.retry_attempts):
            try:
                response = self._transport(payload)
                break
            except (requests.RequestException, TransportError) as exc:
                last_exc = exc
                if attempt + 1 < self.config.retry_attempts:
                    time.sleep(self.config.retry_backoff_s * 2**attempt)
        if response is None:
            raise TransportError(
                f"chat completion failed after {self.config.retry_attempts} "
                f"attempts: {last_exc}"
            )
        try:
            text = str(_walk_path(response, self.config.response_path))
        except (KeyError, IndexError, ValueError) as exc:
            raise TransportError(
                f"response lacks text at path {self.config.response_path!r}"
            ) from exc
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            entry = {"request": payload, "response": response, "timestamp": time.time()}
            tmp = path.with_suffix(f".tmp{os.getpid()}")
            tmp.write_text(json.dumps(entry), encoding="utf-8")
            tmp.replace(path)
        return text


def load_claim_prompt() -> str:
    """The shipped claim-generation prompt template ({diff} slot)."""
    return resources.files("crscore.resources").joinpath("claim-prompt.txt").read_text("utf-8")


def generate_claims(
    change: "CodeChange", client: LlmClient, prompt_template: str | None = None
) -> list[PseudoRef]:
    """Generate claim/implication pseudo-refs for one change.

    The raw exchange is cached by (model, template, diff); an unparseable
    reply triggers exactly one fresh generation before giving up.
    """
    template = prompt_template if prompt_template is not None else load_claim_prompt()
    prompt = template.replace("{diff}", change.diff_text)
    messages = [{"role": "user", "content": prompt}]
    items: list[ParsedClaim] | None = None
    for attempt in range(2):
        text = client.complete(
            messages, key_parts=("claims", template, change.diff_text, str(attempt))
        )
        try:
            items = parse_claims(text)
            break
        except UnparseableClaimsError:
            continue
    if items is None:
        raise UnparseableClaimsError(
            f"change {change.id}: no parseable claims after retry"
        )
    source = f"llm:{client.config.model}"
    return [
        PseudoRef(
            id=f"{change.id}#llm{i}",
            change_id=change.id,
            kind=item.kind,
            text=item.text,
            source=source,
        )
        for i, item in enumerate(items)
    ]


# ---------------------------------------------------------------------------
# Analyzer adapters
# ---------------------------------------------------------------------------

_EXTENSIONS = {"python": "py", "java": "java", "javascript": "js"}


@dataclass
class AnalyzerSpec:
    """Declarative subprocess contract for a static-analysis tool.

    ``argv`` entries may contain a ``{file}`` slot. ``parser`` is either
    ``json`` (stdout is a JSON array of objects with ``rule``, ``message``,
    ``line``, optional ``end_line``/``severity``) or ``line-regex`` (one
    finding per matching stdout line, named groups ``rule``/``line``/
    ``message``; a missing rule group falls back to the tool name).
    """

    name: str
    language: str
    argv: list[str]
    parser: str = "json"
    regex: str = ""
    timeout_s: float = 60.0
    finding_kind: str = "smell"  # kind given to assembled pseudo-refs

    def __post_init__(self) -> None:
        if self.parser not in ("json", "line-regex"):
            raise DataError(f"unknown parser {self.parser!r}")
        if self.parser == "line-regex" and not self.regex:
            raise DataError("line-regex parser requires a regex")


def default_analyzer_specs() -> dict[str, AnalyzerSpec]:
    """The three shipped adapter configs. The external tools are not bundled;
    a missing binary surfaces as an analyzer-unavailable error."""
    return {
        "python-smells": AnalyzerSpec(
            name="python-smells",
            language="python",
            argv=["pyscent", "{file}"],
            parser="line-regex",
            regex=r"^(?:[^:\n]+):(?P<line>\d+):\s*(?P<rule>[\w.-]+):\s*(?P<message>.+)$",
        ),
        "java-pmd": AnalyzerSpec(
            name="java-pmd",
            language="java",
            argv=["pmd", "check", "-d", "{file}", "-R", "rulesets/java/quickstart.xml",
                  "-f", "json"],
            parser="json",
        ),
        "javascript-jshint": AnalyzerSpec(
            name="javascript-jshint",
            language="javascript",
            argv=["jshint", "--reporter=unix", "{file}"],
            parser="line-regex",
            regex=r"^(?:[^:\n]+):(?P<line>\d+):\d+:\s*(?P<message>.+)$",
            finding_kind="issue",
        ),
    }


def _parse_findings(spec: AnalyzerSpec, stdout: str, file_label: str) -> list[SmellFinding]:
    findings: list[SmellFinding] = []
    if spec.parser == "json":
        try:
            rows = json.loads(stdout) if stdout.strip() else []
        except json.JSONDecodeError as exc:
            raise AnalyzerError(f"{spec.name}: stdout is not valid JSON: {exc}") from exc
        if not isinstance(rows, list):
            raise AnalyzerError(f"{spec.name}: expected a JSON array of findings")
        for row in rows:
            line = int(row.get("line", 1))
            findings.append(
                SmellFinding(
                    tool=spec.name,
                    rule_id=str(row.get("rule") or spec.name),
                    message=str(row.get("message", "")).strip() or "(no message)",
                    file=file_label,
                    line_start=line,
                    line_end=int(row.get("end_line", line)),
                    severity=row.get("severity"),
                )
            )
    else:
        pattern = re.compile(spec.regex)
        for line_text in stdout.splitlines():
            m = pattern.match(line_text)
            if not m:
                continue
            groups = m.groupdict()
            line = int(groups.get("line") or 1)
            findings.append(
                SmellFinding(
                    tool=spec.name,
                    rule_id=groups.get("rule") or spec.name,
                    message=(groups.get("message") or "").strip() or "(no message)",
                    file=file_label,
                    line_start=line,
                    line_end=line,
                )
            )
    return findings


def run_analyzer(
    spec: AnalyzerSpec, file_path: Path, file_label: str | None = None
) -> list[SmellFinding]:
    """Run one tool on one file snapshot and parse its findings.

    A nonzero exit that still yields parseable findings is normal linter
    behavior, not an error.
    """
    if shutil.which(spec.argv[0]) is None:
        raise AnalyzerUnavailableError(f"analyzer unavailable: {spec.argv[0]!r} not found")
    argv = [a.replace("{file}", str(file_path)) for a in spec.argv]
    try:
        proc = subprocess.run(
            argv, capture_output=True, text=True, timeout=spec.timeout_s,
            cwd=file_path.parent,
        )
    except subprocess.TimeoutExpired as exc:
        raise AnalyzerTimeoutError(
            f"{spec.name} timed out after {spec.timeout_s}s"
        ) from exc
    label = file_label if file_label is not None else file_path.name
    findings = _parse_findings(spec, proc.stdout, label)
    if proc.returncode != 0 and not findings:
        raise AnalyzerError(
            f"{spec.name} exited {proc.returncode} with no parseable findings: "
            f"{proc.stderr.strip()[:500]}"
        )
    return findings


def added_line_numbers(hunks: Sequence["DiffHunk"]) -> set[int]:
    """New-file line numbers introduced or changed by the hunks."""
    added: set[int] = set()
    for h in hunks:
        new_line = h.new_start
        for kind, _ in h.lines:
            if kind == "added":
                added.add(new_line)
                new_line += 1
            elif kind == "context":
                new_line += 1
            # removed lines do not advance the new-file cursor
    return added


def smell_delta(
    before: Sequence[SmellFinding],
    after: Sequence[SmellFinding],
    hunks: Sequence["DiffHunk"],
) -> list[SmellFinding]:
    """Findings attributable to the change.

    Keeps after-findings that are new by (rule, message) key, plus ones
    present on both sides whose line range touches an added/changed region.
    """
    before_keys = {(f.rule_id, f.message) for f in before}
    added = added_line_numbers(hunks)
    kept = []
    for f in after:
        if (f.rule_id, f.message) not in before_keys:
            kept.append(f)
        elif any(f.line_start <= line <= f.line_end for line in added):
            kept.append(f)
    return kept


def detect_smells(
    change: "CodeChange", spec: AnalyzerSpec, whole_file: bool = False
) -> list[SmellFinding]:
    """Run an analyzer over a change's before/after snapshots.

    Returns the after-snapshot findings, filtered to the changed regions via
    ``smell_delta`` unless ``whole_file`` is set. The change's language must
    match the adapter's.
    """
    if change.language.name != spec.language:
        raise DataError(
            f"change {change.id} is {change.language.tag!r}; analyzer "
            f"{spec.name} handles {spec.language!r}"
        )
    before_text, after_text = materialize_before_after(change)
    ext = _EXTENSIONS[spec.language]
    label = Path(change.meta["path"]).name if "path" in change.meta else f"change.{ext}"
    with tempfile.TemporaryDirectory(prefix="crscore-analyze-") as tmp:
        root = Path(tmp)
        before_dir = root / "before"
        after_dir = root / "after"
        before_dir.mkdir()
        after_dir.mkdir()
        (before_dir / label).write_text(before_text, encoding="utf-8")
        (after_dir / label).write_text(after_text, encoding="utf-8")
        after_findings = run_analyzer(spec, after_dir / label, label)
        if whole_file:
            return after_findings
        before_findings = run_analyzer(spec, before_dir / label, label)
    return smell_delta(before_findings, after_findings, parse_unified_diff(change.diff_text))


# ---------------------------------------------------------------------------
# Cyclomatic-complexity ranks
# ---------------------------------------------------------------------------

_RANK_BOUNDS = ((5, "A"), (10, "B"), (20, "C"), (30, "D"), (40, "E"))
_FLAGGED_RANKS = frozenset("CDEF")


def cyclomatic_rank(score: int) -> str:
    """Letter grade for a cyclomatic-complexity score: 1-5 A, 6-10 B,
    11-20 C, 21-30 D, 31-40 E, 41+ F."""
    if score < 1:
        raise DataError(f"cyclomatic complexity must be >= 1, got {score}")
    for bound, rank in _RANK_BOUNDS:
        if score <= bound:
            return rank
    return "F"


def rank_is_flagged(rank: str) -> bool:
    """Blocks of rank C or worse count as code smells."""
    if rank not in "ABCDEF" or len(rank) != 1:
        raise DataError(f"unknown rank {rank!r}")
    return rank in _FLAGGED_RANKS


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

def render_smell(finding: SmellFinding) -> str:
    """One-sentence rendering of a finding, stable for embedding."""
    return (
        f"{finding.tool}: {finding.message} at lines "
        f"{finding.line_start}–{finding.line_end} of {finding.file}"
    )


def assemble_pseudorefs(
    claims: Sequence[PseudoRef],
    smells: Sequence[SmellFinding],
    smell_kind: str = "smell",
    change_id: str | None = None,
) -> list[PseudoRef]:
    """Combine claims and rendered smells into the final pseudo-ref set.

    Claims come first, exact duplicates (case-folded) keep their first
    occurrence, and ids are reassigned as ``<change_id>#<k>`` in order.
    """
    change_ids = {c.change_id for c in claims}
    if change_id is not None:
        change_ids.add(change_id)
    if len(change_ids) > 1:
        raise DataError(f"claims span multiple changes: {sorted(change_ids)}")
    change_id = next(iter(change_ids)) if change_ids else ""

    combined: list[PseudoRef] = []
    seen: set[str] = set()

    def push(ref: PseudoRef) -> None:
        key = ref.text.strip().casefold()
        if key in seen:
            return
        seen.add(key)
        combined.append(ref)

    for claim in claims:
        push(claim)
    for finding in smells:
        push(
            PseudoRef(
                id="",
                change_id=change_id,
                kind=smell_kind,
                text=render_smell(finding),
                source=f"analyzer:{finding.tool}",
            )
        )
    for k, ref in enumerate(combined):
        ref.id = f"{ref.change_id}#{k}"
    return combined
