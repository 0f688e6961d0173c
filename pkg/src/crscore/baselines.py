"""Reference-based comparison metrics.

Sentence-level BLEU (with optional stopword removal), ROUGE-L F-measures,
character-F scores with and without word n-grams, normalized edit distance,
and an LLM-judge scorer. All n-gram metrics share the tokenizer from
``textproc``; the DP-heavy inner loops (edit distance, LCS) run on the
compiled kernels when available.

Conventions for degenerate inputs: similarity-style metrics return 0.0 for
an empty candidate; the edit distance of two empty texts is 0.0. Note the
edit distance is reported raw (lower is better); report tooling must not
silently invert it.
"""

from __future__ import annotations

import logging
import re
from collections import Counter
from importlib import resources
from math import exp, log

from . import _kernels, textproc
from .errors import DataError
from .textproc import StopwordLexicon

logger = logging.getLogger(__name__)

BLEU_MAX_ORDER = 4
CHRF_MAX_ORDER = 6
CHRF_BETA = 2.0
CHRF_WORD_MAX_ORDER = 2


def _ngram_counts(items: list, n: int) -> Counter:
    return Counter(tuple(items[i : i + n]) for i in range(len(items) - n + 1))


def bleu(
    candidate: str,
    reference: str,
    drop_stopwords: bool = False,
    smoothing: bool = True,
    lexicon: StopwordLexicon | None = None,
) -> float:
    """Sentence-level BLEU, orders 1..4, with brevity penalty.

    Zero counts at orders >= 2 get add-one smoothing (disable via
    ``smoothing=False``); orders for which the candidate has no n-grams are
    dropped from the geometric mean. ``drop_stopwords`` filters both sides
    through the lexicon first.
    """
    cand = textproc.tokenize(candidate)
    ref = textproc.tokenize(reference)
    if drop_stopwords:
        lex = lexicon or _default_lexicon()
        cand = [t for t in cand if t not in lex]
        ref = [t for t in ref if t not in lex]
    if not cand or not ref:
        logger.debug("bleu: empty candidate or reference; scoring 0")
        return 0.0

    log_sum = 0.0
    orders = 0
    for n in range(1, BLEU_MAX_ORDER + 1):
        total = len(cand) - n + 1
        if total < 1:
            continue
        cand_counts = _ngram_counts(cand, n)
        ref_counts = _ngram_counts(ref, n)
        matched = sum(min(c, ref_counts[g]) for g, c in cand_counts.items())
        if matched == 0:
            if n == 1 or not smoothing:
                return 0.0
            p = 1.0 / (total + 1)
        else:
            p = matched / total
        log_sum += log(p)
        orders += 1
    if orders == 0:
        return 0.0
    precision = exp(log_sum / orders)
    bp = 1.0 if len(cand) >= len(ref) else exp(1.0 - len(ref) / len(cand))
    return bp * precision


def rouge_l_f(candidate: str, reference: str) -> float:
    """ROUGE-L sentence-level F-measure (beta = 1) from LCS length."""
    cand = textproc.tokenize(candidate)
    ref = textproc.tokenize(reference)
    if not cand or not ref:
        return 0.0
    lcs = _kernels.lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    p = lcs / len(cand)
    r = lcs / len(ref)
    return 2 * p * r / (p + r)


def _char_stream(text: str) -> list[str]:
    return [c for c in text if not c.isspace()]


def _order_f(cand_grams: Counter, ref_grams: Counter, beta: float) -> float | None:
    """F_beta for one n-gram order; None when the order is impossible on
    both sides (excluded from the average)."""
    n_cand = sum(cand_grams.values())
    n_ref = sum(ref_grams.values())
    if n_cand == 0 and n_ref == 0:
        return None
    matched = sum(min(c, ref_grams[g]) for g, c in cand_grams.items())
    p = matched / n_cand if n_cand else 0.0
    r = matched / n_ref if n_ref else 0.0
    denom = beta * beta * p + r
    if denom == 0.0:
        return 0.0
    return (1 + beta * beta) * p * r / denom


def chrf(candidate: str, reference: str) -> float:
    """Character-level F score: per-order F_2 over character n-grams 1..6,
    averaged across the orders present on either side."""
    return _chrf_impl(candidate, reference, word_orders=0)


def chrf_pp(candidate: str, reference: str) -> float:
    """chrF plus word n-grams of orders 1..2 averaged into the same mean."""
    return _chrf_impl(candidate, reference, word_orders=CHRF_WORD_MAX_ORDER)


def _chrf_impl(candidate: str, reference: str, word_orders: int) -> float:
    cand_chars = _char_stream(candidate)
    ref_chars = _char_stream(reference)
    scores: list[float] = []
    for n in range(1, CHRF_MAX_ORDER + 1):
        f = _order_f(_ngram_counts(cand_chars, n), _ngram_counts(ref_chars, n), CHRF_BETA)
        if f is not None:
            scores.append(f)
    if word_orders:
        cand_words = textproc.tokenize(candidate)
        ref_words = textproc.tokenize(reference)
        for n in range(1, word_orders + 1):
            f = _order_f(_ngram_counts(cand_words, n), _ngram_counts(ref_words, n), CHRF_BETA)
            if f is not None:
                scores.append(f)
    if not scores:
        return 0.0
    return sum(scores) / len(scores)


def norm_edit_distance(candidate: str, reference: str, char_level: bool = False) -> float:
    """Levenshtein distance normalized by the longer side's length.

    Token-level by default (comparable with the BLEU tokenization);
    ``char_level=True`` switches to characters. Two empty texts score 0.
    """
    if char_level:
        a: list = list(candidate)
        b: list = list(reference)
    else:
        a = textproc.tokenize(candidate)
        b = textproc.tokenize(reference)
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return _kernels.levenshtein(a, b) / longest


_default_lex_cache: StopwordLexicon | None = None


def _default_lexicon() -> StopwordLexicon:
    global _default_lex_cache
    if _default_lex_cache is None:
        _default_lex_cache = textproc.load_default_lexicon()
    return _default_lex_cache


# ---------------------------------------------------------------------------
# LLM-as-a-judge
# ---------------------------------------------------------------------------

_SCORE_RE = re.compile(r"(?<!\d)([1-5])(?!\d)")

_LANG_LABELS = {"python": "Python", "java": "Java", "javascript": "Javascript"}


def load_judge_prompts() -> tuple[str, str]:
    """The judge's system prompt and task template ({lang}, {code_change},
    {review} slots)."""
    res = resources.files("crscore.resources")
    system = res.joinpath("laaj-system-prompt.txt").read_text("utf-8").rstrip("\n")
    task = res.joinpath("laaj-task-prompt.txt").read_text("utf-8").rstrip("\n")
    return system, task


def parse_judge_score(reply: str) -> int | None:
    """First standalone integer in 1..5, or None."""
    m = _SCORE_RE.search(reply)
    return int(m.group(1)) if m else None


def laaj_score(change, review: str, client) -> int:
    """Rate a review's relevance 1..5 with a judge LLM.

    The prompt is assembled verbatim from the shipped templates. The reply
    must contain an integer 1..5; one fresh retry is attempted before the
    pair is reported as unscorable.
    """
    system, task = load_judge_prompts()
    lang = _LANG_LABELS.get(change.language.name, change.language.tag)
    prompt = (
        task.replace("{lang}", lang)
        .replace("{code_change}", change.diff_text)
        .replace("{review}", review)
    )
    messages = [
        {"role": "system", "content": system},
        {"role": "user", "content": prompt},
    ]
    for attempt in range(2):
        reply = client.complete(messages, key_parts=("laaj", change.id, review, str(attempt)))
        value = parse_judge_score(reply)
        if value is not None:
            return value
    raise DataError(f"judge returned no 1..5 score for change {change.id}")
