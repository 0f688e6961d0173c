"""Core review-quality metric: similarity matrix, thresholded scores,
threshold calibration/sweep, and similarity-pair classifier evaluation.

Scores for one review are computed from the pairwise cosine matrix between
its pseudo-references (rows) and its sentences (columns):

* conciseness   — fraction of sentences whose best pseudo-reference
  similarity strictly exceeds the threshold (precision-like),
* comprehensiveness — fraction of pseudo-references some sentence exceeds
  the threshold against (recall-like),
* relevance     — harmonic mean of the two, 0 when both are 0.

Degenerate inputs score 0 and are flagged: no sentences sets
``empty_sents`` (an empty review conveys nothing), no pseudo-references
sets ``empty_prefs`` (such changes are excluded from correlation reports).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .embed import EmbeddingVector
from .errors import CrscoreError, DataError
from .textproc import SentenceSet, StopwordLexicon, filter_stopwords, load_default_lexicon

PAPER_BEST_TAU = 0.7314
PAPER_GT_TAU = 0.6576

FLAG_EMPTY_PREFS = "empty_prefs"
FLAG_EMPTY_SENTS = "empty_sents"


@dataclass
class ThresholdConfig:
    """High-similarity cutoff with provenance for reports."""

    tau: float
    provenance: str = "fixed"  # "fixed" | "paper-best" | "paper-gt" | "calibrated"
    run_tag: str = ""

    def __post_init__(self) -> None:
        if not 0.0 < self.tau < 1.0:
            raise DataError(f"threshold must lie in (0, 1); got {self.tau}")

    @classmethod
    def paper_best(cls) -> "ThresholdConfig":
        return cls(PAPER_BEST_TAU, provenance="paper-best")

    @classmethod
    def paper_gt(cls) -> "ThresholdConfig":
        return cls(PAPER_GT_TAU, provenance="paper-gt")


@dataclass
class SimilarityMatrix:
    """Pairwise cosine values: rows are pseudo-refs, columns are sentences."""

    change_id: str
    system_id: str
    pref_ids: list[str]
    sent_index: list[int]
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        expected = (len(self.pref_ids), len(self.sent_index))
        if self.values.shape != expected:
            raise DataError(
                f"similarity matrix shape {self.values.shape} does not match "
                f"{len(self.pref_ids)} prefs x {len(self.sent_index)} sentences"
            )
        if self.values.size and not np.all(np.isfinite(self.values)):
            raise DataError("similarity matrix contains non-finite values")


@dataclass
class ScoreTriple:
    """Conciseness/comprehensiveness/relevance plus degeneracy flags."""

    con: float
    comp: float
    rel: float
    n_prefs: int
    n_sents: int
    degenerate_flags: set[str] = field(default_factory=set)


def pref_embed_text(text: str, lexicon: StopwordLexicon) -> str:
    """Stopword-filtered embedding form of a pseudo-ref, mirroring the
    sentence-side treatment (raw lowercased text when all stopwords)."""
    tokens = filter_stopwords(text, lexicon)
    return " ".join(tokens) if tokens else text.lower()


def similarity_matrix(
    prefs: Sequence,
    sents: SentenceSet,
    provider,
    lexicon: StopwordLexicon | None = None,
    change_id: str | None = None,
    system_id: str | None = None,
) -> SimilarityMatrix:
    """Embed pseudo-refs and sentences and compute all pairwise cosines.

    Both sides are embedded in stopword-filtered form. Each unique text is
    embedded exactly once per call; pair a caching provider to make that
    hold across calls too. ``change_id``/``system_id`` default to the
    pseudo-refs' change and the sentence set's doc id.
    """
    if lexicon is None:
        lexicon = load_default_lexicon()
    pref_texts = [pref_embed_text(p.text, lexicon) for p in prefs]
    sent_texts = sents.embed_texts()
    unique = list(dict.fromkeys(pref_texts + sent_texts))
    try:
        vectors = provider.embed(unique)
    except CrscoreError as exc:
        raise type(exc)(f"change {sents.doc_id}: {exc}") from exc
    by_text = dict(zip(unique, vectors))

    def unit_rows(texts: list[str]) -> np.ndarray:
        dim = vectors[0].dim if vectors else 0
        rows = np.zeros((len(texts), dim), dtype=np.float64)
        for i, t in enumerate(texts):
            vec: EmbeddingVector = by_text[t]
            norm = float(np.linalg.norm(vec.values))
            if norm == 0.0:
                raise DataError(f"zero embedding for text {t!r}")
            rows[i] = vec.values / norm
        return rows

    if pref_texts and sent_texts:
        values = np.clip(unit_rows(pref_texts) @ unit_rows(sent_texts).T, -1.0, 1.0)
    else:
        values = np.zeros((len(pref_texts), len(sent_texts)), dtype=np.float64)
    if change_id is None:
        change_id = prefs[0].change_id if prefs else sents.doc_id
    return SimilarityMatrix(
        change_id=change_id,
        system_id=system_id if system_id is not None else sents.doc_id,
        pref_ids=[p.id for p in prefs],
        sent_index=list(range(len(sent_texts))),
        values=values,
    )


def score(m: SimilarityMatrix, th: ThresholdConfig) -> ScoreTriple:
    """Apply the strict-threshold indicator scoring to one matrix."""
    n_prefs, n_sents = m.values.shape
    flags: set[str] = set()
    if n_prefs == 0:
        flags.add(FLAG_EMPTY_PREFS)
    if n_sents == 0:
        flags.add(FLAG_EMPTY_SENTS)

    if n_sents == 0 or n_prefs == 0:
        con = 0.0
    else:
        con = float(np.mean(m.values.max(axis=0) > th.tau))
    if n_prefs == 0 or n_sents == 0:
        comp = 0.0
    else:
        comp = float(np.mean(m.values.max(axis=1) > th.tau))
    rel = 0.0 if con + comp == 0.0 else 2.0 * con * comp / (con + comp)
    return ScoreTriple(
        con=con, comp=comp, rel=rel,
        n_prefs=n_prefs, n_sents=n_sents, degenerate_flags=flags,
    )


@dataclass
class CalibrationResult:
    """Calibrated threshold plus coverage accounting."""

    threshold: ThresholdConfig
    n_sentences: int
    n_skipped_sentences: int


def calibrate_threshold(
    matrices: Iterable[SimilarityMatrix], run_tag: str = ""
) -> CalibrationResult:
    """Calibrate the threshold as the mean best-match similarity of sentences.

    Every review sentence contributes the maximum similarity over its
    change's pseudo-references; sentences of changes with zero
    pseudo-references are skipped (imputing 0 would bias the mean downward)
    and counted.
    """
    total = 0.0
    n = 0
    skipped = 0
    for m in matrices:
        n_prefs, n_sents = m.values.shape
        if n_prefs == 0:
            skipped += n_sents
            continue
        if n_sents == 0:
            continue
        total += float(m.values.max(axis=0).sum())
        n += n_sents
    if n == 0:
        raise DataError("calibration needs at least one sentence with pseudo-references")
    tau = total / n
    return CalibrationResult(
        threshold=ThresholdConfig(tau, provenance="calibrated", run_tag=run_tag),
        n_sentences=n,
        n_skipped_sentences=skipped,
    )


@dataclass
class SweepRow:
    tau: float
    spearman: "CorrelationResult"
    kendall: "CorrelationResult"
    n: int


def threshold_sweep(
    matrices: Sequence[SimilarityMatrix],
    human_rel: Sequence,
    grid: Sequence[float],
) -> list[SweepRow]:
    """Correlate relevance with human relevance across a threshold grid.

    Instances flagged ``empty_prefs`` are excluded from the correlations.
    Alignment between matrices and annotations must be exact; mismatches
    raise with the offending (change_id, system_id) keys listed.
    """
    from .evalstats import kendall, spearman

    ann_by_key = {(a.change_id, a.system_id): a for a in human_rel}
    mat_keys = [(m.change_id, m.system_id) for m in matrices]
    missing = [k for k in mat_keys if k not in ann_by_key]
    extra = sorted(set(ann_by_key) - set(mat_keys))
    if missing or extra:
        raise DataError(
            f"matrix/annotation alignment failure; unannotated={missing[:5]} "
            f"unmatched={extra[:5]}"
        )

    rows: list[SweepRow] = []
    for tau_value in grid:
        th = ThresholdConfig(tau_value)
        xs: list[float] = []
        ys: list[float] = []
        for m in matrices:
            triple = score(m, th)
            if FLAG_EMPTY_PREFS in triple.degenerate_flags:
                continue
            xs.append(triple.rel)
            ys.append(float(ann_by_key[(m.change_id, m.system_id)].rel))
        rows.append(
            SweepRow(
                tau=tau_value,
                spearman=spearman(xs, ys),
                kendall=kendall(xs, ys),
                n=len(xs),
            )
        )
    return rows


@dataclass
class ClassifierEval:
    precision: float
    recall: float
    f1: float


def sts_classifier_eval(
    pairs: Sequence[tuple[float, bool]], tau: float
) -> ClassifierEval:
    """Evaluate similarity > tau as a binary coverage classifier.

    Zero-denominator conventions: precision 0 with no predicted positives,
    recall 0 with no actual positives, F1 0 when precision + recall is 0.
    """
    if not pairs:
        raise DataError("sts_classifier_eval: empty pair list")
    tp = fp = fn = 0
    for sim, covered in pairs:
        predicted = sim > tau
        if predicted and covered:
            tp += 1
        elif predicted:
            fp += 1
        elif covered:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 0.0 if precision + recall == 0.0 else 2 * precision * recall / (precision + recall)
    return ClassifierEval(precision=precision, recall=recall, f1=f1)
