"""Sentence segmentation, tokenization, stopword filtering, claim parsing.

All functions here are pure and rule-based so that downstream scores are
reproducible bit-for-bit. Review text routinely quotes code in backtick
spans; the splitter and tokenizer treat such spans as atomic.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

from .errors import UnparseableClaimsError

_TERMINATORS = ".!?"
# A word chunk, or an inline code span kept intact.
_TOKEN_RE = re.compile(r"`([^`]*)`|[A-Za-z0-9_']+")
_BLANK_LINE_RE = re.compile(r"\n[ \t]*\n")


@dataclass(frozen=True)
class StopwordLexicon:
    """Case-insensitive stopword set with a version tag for reports."""

    words: frozenset[str]
    version_tag: str

    def __post_init__(self) -> None:
        if not self.words:
            raise ValueError("stopword lexicon must be non-empty")

    def __contains__(self, token: str) -> bool:
        return token.lower() in self.words

    @classmethod
    def from_words(cls, words: Iterable[str], version_tag: str) -> "StopwordLexicon":
        return cls(frozenset(w.lower() for w in words), version_tag)


def load_default_lexicon() -> StopwordLexicon:
    """Load the stopword list shipped with the package."""
    text = resources.files("crscore.resources").joinpath("stopwords-en.txt").read_text("utf-8")
    version = "unversioned"
    words = []
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("#"):
            m = re.search(r"version:\s*(\S+)", line)
            if m:
                version = m.group(1)
            continue
        if line:
            words.append(line.lower())
    return StopwordLexicon(frozenset(words), version)


def tokenize(text: str) -> list[str]:
    """Lowercased word tokens; backtick-delimited code spans stay intact.

    Words are maximal alphanumeric/underscore/apostrophe runs; everything
    else is a separator. The contents of a `span` become a single token
    (backticks stripped).
    """
    out: list[str] = []
    for m in _TOKEN_RE.finditer(text):
        if m.group(1) is not None:
            span = m.group(1).strip()
            if span:
                out.append(span.lower())
        else:
            tok = m.group(0).strip("'")
            if tok:
                out.append(tok.lower())
    return out


def split_sentences(text: str) -> list[str]:
    """Split text into sentences.

    Splits on ``. ! ?`` followed by whitespace and on blank lines. Terminators
    inside backtick spans never split (an unbalanced backtick suppresses
    splitting for the rest of its block); dots inside decimal numbers are not
    followed by whitespace and therefore never split. Empty segments are
    dropped.
    """
    sentences: list[str] = []
    for block in _BLANK_LINE_RE.split(text):
        sentences.extend(_split_block(block))
    return sentences


def _split_block(block: str) -> list[str]:
    out: list[str] = []
    start = 0
    in_code = False
    i = 0
    n = len(block)
    while i < n:
        ch = block[i]
        if ch == "`":
            in_code = not in_code
        elif ch in _TERMINATORS and not in_code:
            j = i
            while j + 1 < n and block[j + 1] in _TERMINATORS:
                j += 1
            if j + 1 >= n or block[j + 1].isspace():
                piece = block[start : j + 1].strip()
                if piece:
                    out.append(piece)
                start = j + 1
            i = j
        i += 1
    tail = block[start:].strip()
    if tail:
        out.append(tail)
    return out


def filter_stopwords(sentence: str, lexicon: StopwordLexicon) -> list[str]:
    """Tokenize and drop stopwords, preserving order.

    Code-span tokens are kept verbatim and never treated as stopwords unless
    their full text happens to be one.
    """
    return [tok for tok in tokenize(sentence) if tok not in lexicon]


@dataclass
class SentenceSet:
    """A review decomposed into sentences with stopword-filtered tokens."""

    doc_id: str
    sentences: list[tuple[str, list[str]]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.sentences)

    def embed_texts(self) -> list[str]:
        """Text per sentence as fed to the embedding provider.

        Filtered tokens re-joined with single spaces; a sentence that is all
        stopwords falls back to its raw lowercased text so it still occupies
        a slot in the candidate set instead of embedding as the empty string.
        """
        out = []
        for raw, toks in self.sentences:
            out.append(" ".join(toks) if toks else raw.lower())
        return out


def sentence_set(doc_id: str, text: str, lexicon: StopwordLexicon) -> SentenceSet:
    """Build the sentence decomposition used by the similarity metric."""
    sents = [(raw, filter_stopwords(raw, lexicon)) for raw in split_sentences(text)]
    return SentenceSet(doc_id=doc_id, sentences=sents)


_ITEM_RE = re.compile(r"^\s*(?:(\d+)[.)]|[-*+])\s+(.*)$")
_HEADING_RE = re.compile(r"^\s*[#*_]*\s*(claims?|implications?|issues?)\b[:\s*_]*$", re.IGNORECASE)
_IMPLICATION_RE = re.compile(r"implication", re.IGNORECASE)


@dataclass(frozen=True)
class ParsedClaim:
    text: str
    kind: str  # "claim" or "implication"


def parse_claims(llm_output: str) -> list[ParsedClaim]:
    """Extract discrete claim/implication items from LLM list output.

    Accepts numbered ("1.", "2)") and bulleted ("-", "*") items, drops
    heading lines, and joins the continuation lines of an item with single
    spaces. Items under an "Implications" heading are tagged as such.

    Raises:
        UnparseableClaimsError: no list items could be found.
    """
    items: list[ParsedClaim] = []
    kind = "claim"
    current: list[str] | None = None

    def flush() -> None:
        nonlocal current
        if current:
            text = " ".join(p.strip() for p in current if p.strip())
            if text:
                items.append(ParsedClaim(text=text, kind=kind))
        current = None

    for line in llm_output.splitlines():
        heading = _HEADING_RE.match(line)
        if heading:
            flush()
            kind = "implication" if _IMPLICATION_RE.search(heading.group(1)) else "claim"
            continue
        m = _ITEM_RE.match(line)
        if m:
            flush()
            current = [m.group(2)]
        elif line.strip():
            if current is not None:
                current.append(line)
        else:
            flush()
    flush()

    if not items:
        raise UnparseableClaimsError("no claim items found in LLM output")
    return items


def reconstructs(text: str, sentences: Sequence[str]) -> bool:
    """Whitespace-insensitive check that sentences cover the source text."""
    squash = lambda s: re.sub(r"\s+", "", s)  # noqa: E731
    return squash(text) == squash("".join(sentences))
