"""Validation statistics: rank correlations, Likert normalization, system
rankings, pseudo-reference quality rates, inter-rater reliability, and
failure-case mining.

Correlations use the tie-aware conventions (mid-ranks for Spearman, tau-b
for Kendall). Coefficients are computed in exact integer/rational
arithmetic wherever the algebra permits, so tie-free inputs reproduce the
closed-form values bit-for-bit. P-values are exact (full permutation
enumeration) for n <= 10 and asymptotic beyond.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Hashable, Mapping, NamedTuple, Optional, Sequence

import numpy as np
from scipy import stats as _scipy_stats

from .errors import DataError

EXACT_P_MAX_N = 10
_PERM_CHUNK = 200_000


@dataclass
class CorrelationResult:
    """A rank-correlation coefficient with its p-value."""

    coefficient: float
    p_value: float
    n: int
    method: str  # "spearman" | "kendall_b"
    undefined: bool = False

    @classmethod
    def make_undefined(cls, n: int, method: str) -> "CorrelationResult":
        return cls(float("nan"), float("nan"), n, method, undefined=True)


def _check_pair(xs: Sequence[float], ys: Sequence[float]) -> int:
    if len(xs) != len(ys):
        raise DataError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        raise DataError("correlation needs at least two observations")
    return n


def _double_midranks(values: Sequence[float]) -> list[int]:
    """Mid-ranks scaled by 2 so ties (.5 ranks) stay integral."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0] * len(values)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # 1-based ranks i+1..j+1 average to (i+j+2)/2; doubled: i+j+2.
        for k in range(i, j + 1):
            ranks[order[k]] = i + j + 2
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> CorrelationResult:
    """Spearman rank correlation with mid-rank tie handling.

    Constant input on either side yields an undefined (NaN) result rather
    than an error.
    """
    n = _check_pair(xs, ys)
    rx = _double_midranks(xs)
    ry = _double_midranks(ys)
    sx, sy = sum(rx), sum(ry)
    sxx = n * sum(r * r for r in rx) - sx * sx
    syy = n * sum(r * r for r in ry) - sy * sy
    if sxx == 0 or syy == 0:
        return CorrelationResult.make_undefined(n, "spearman")
    sxy = n * sum(a * b for a, b in zip(rx, ry)) - sx * sy
    coeff = _ratio_over_root(sxy, sxx, syy)
    if n <= EXACT_P_MAX_N:
        p = _exact_p_spearman(rx, ry, sxy)
    else:
        p = _t_approx_p(coeff, n)
    return CorrelationResult(coeff, p, n, "spearman")


def _ratio_over_root(num: int, d1: int, d2: int) -> float:
    """num / sqrt(d1*d2), exact whenever the radicand is a perfect square."""
    prod = d1 * d2
    root = math.isqrt(prod)
    if root * root == prod:
        return float(Fraction(num, root))
    return num / math.sqrt(prod)


def _t_approx_p(r: float, n: int) -> float:
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt((n - 2) / (1.0 - r * r))
    return float(2.0 * _scipy_stats.t.sf(abs(t), n - 2))


def _exact_p_spearman(rx: list[int], ry: list[int], sxy_obs: int) -> float:
    """Two-sided exact p by enumerating all permutations of the y ranks.

    With the rank marginals fixed, |r| ordering reduces to |n*S - Sx*Sy|
    ordering where S = sum(x_i * y_perm_i); everything stays integral, so
    the comparison is exact.
    """
    n = len(rx)
    sx, sy = sum(rx), sum(ry)
    target = abs(sxy_obs)
    x = np.asarray(rx, dtype=np.int64)
    hits = 0
    total = 0
    perms = itertools.permutations(ry)
    while True:
        chunk = list(itertools.islice(perms, _PERM_CHUNK))
        if not chunk:
            break
        arr = np.asarray(chunk, dtype=np.int64)
        stat = np.abs(n * (arr @ x) - sx * sy)
        hits += int(np.count_nonzero(stat >= target))
        total += arr.shape[0]
    return hits / total


def kendall(xs: Sequence[float], ys: Sequence[float]) -> CorrelationResult:
    """Kendall tau-b (tie-corrected) correlation."""
    n = _check_pair(xs, ys)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    sgn = lambda v: (v > 0) - (v < 0)  # noqa: E731
    cmd = sum(sgn(xs[j] - xs[i]) * sgn(ys[j] - ys[i]) for i, j in pairs)
    n0 = n * (n - 1) // 2
    tx = Counter(xs).values()
    ty = Counter(ys).values()
    n1 = sum(t * (t - 1) // 2 for t in tx)
    n2 = sum(u * (u - 1) // 2 for u in ty)
    if n0 == n1 or n0 == n2:
        return CorrelationResult.make_undefined(n, "kendall_b")
    coeff = _ratio_over_root(cmd, n0 - n1, n0 - n2)
    if n <= EXACT_P_MAX_N:
        p = _exact_p_kendall(xs, ys, cmd)
    else:
        p = _normal_approx_p_kendall(xs, ys, cmd, n)
    return CorrelationResult(coeff, p, n, "kendall_b")


def _exact_p_kendall(xs: Sequence[float], ys: Sequence[float], cmd_obs: int) -> float:
    """Two-sided exact p over all y permutations; tie marginals are invariant
    so comparing |C - D| is exact."""
    n = len(xs)
    target = abs(cmd_obs)
    pair_idx = [(i, j) for i in range(n) for j in range(i + 1, n)]
    sx = np.asarray(
        [np.sign(xs[j] - xs[i]) for i, j in pair_idx], dtype=np.int64
    )
    perms = itertools.permutations(range(n))
    hits = 0
    total = 0
    while True:
        chunk = list(itertools.islice(perms, _PERM_CHUNK))
        if not chunk:
            break
        arr = np.asarray(chunk, dtype=np.int64)
        y = np.asarray(ys, dtype=np.float64)[arr]  # (m, n) permuted values
        stat = np.zeros(arr.shape[0], dtype=np.int64)
        for k, (i, j) in enumerate(pair_idx):
            stat += sx[k] * np.sign(y[:, j] - y[:, i]).astype(np.int64)
        hits += int(np.count_nonzero(np.abs(stat) >= target))
        total += arr.shape[0]
    return hits / total


def _normal_approx_p_kendall(
    xs: Sequence[float], ys: Sequence[float], cmd: int, n: int
) -> float:
    tx = list(Counter(xs).values())
    ty = list(Counter(ys).values())
    v0 = n * (n - 1) * (2 * n + 5)
    vt = sum(t * (t - 1) * (2 * t + 5) for t in tx)
    vu = sum(u * (u - 1) * (2 * u + 5) for u in ty)
    v1 = sum(t * (t - 1) for t in tx) * sum(u * (u - 1) for u in ty)
    v2 = sum(t * (t - 1) * (t - 2) for t in tx) * sum(u * (u - 1) * (u - 2) for u in ty)
    var = (
        (v0 - vt - vu) / 18.0
        + v1 / (2.0 * n * (n - 1))
        + v2 / (9.0 * n * (n - 1) * (n - 2))
    )
    if var <= 0:
        return float("nan")
    z = cmd / math.sqrt(var)
    return float(2.0 * _scipy_stats.norm.sf(abs(z)))


# ---------------------------------------------------------------------------
# Likert handling, rankings
# ---------------------------------------------------------------------------

def normalize_likert(v: int) -> float:
    """Map a 1..5 Likert value onto [0, 1] as (v - 1) / 4."""
    if not isinstance(v, int) or isinstance(v, bool) or not 1 <= v <= 5:
        raise DataError(f"Likert value out of range 1..5: {v!r}")
    return (v - 1) / 4


def system_ranking(
    scores: Mapping[str, Sequence[float]],
    exclude: frozenset[str] | set[str] = frozenset(),
) -> list[tuple[str, float]]:
    """Rank systems by mean score, descending; ties break lexicographically."""
    filtered = {s: v for s, v in scores.items() if s not in exclude}
    if not filtered:
        raise DataError("system_ranking: no systems to rank")
    for system, values in filtered.items():
        if not values:
            raise DataError(f"system_ranking: system {system!r} has no values")
    means = [(s, sum(v) / len(v)) for s, v in filtered.items()]
    return sorted(means, key=lambda kv: (-kv[1], kv[0]))


def ranking_correlation(
    metric_ranking: Sequence, human_ranking: Sequence
) -> tuple[CorrelationResult, CorrelationResult]:
    """Spearman and Kendall correlation between two system rankings.

    Rankings are ordered best-to-worst lists of system ids (or (id, mean)
    pairs). The two rankings must cover exactly the same systems.
    """
    ids_a = [r[0] if isinstance(r, (tuple, list)) else r for r in metric_ranking]
    ids_b = [r[0] if isinstance(r, (tuple, list)) else r for r in human_ranking]
    extra = sorted(set(ids_a) - set(ids_b))
    missing = sorted(set(ids_b) - set(ids_a))
    if extra or missing or len(ids_a) != len(ids_b):
        raise DataError(
            f"ranking system sets differ; only in metric ranking: {extra}, "
            f"only in human ranking: {missing}"
        )
    systems = sorted(ids_a)
    pos_a = {s: i for i, s in enumerate(ids_a)}
    pos_b = {s: i for i, s in enumerate(ids_b)}
    xs = [float(pos_a[s]) for s in systems]
    ys = [float(pos_b[s]) for s in systems]
    return spearman(xs, ys), kendall(xs, ys)


# ---------------------------------------------------------------------------
# Pseudo-reference quality rates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QualityCounts:
    """Counts of correct/incorrect/unverifiable/added pseudo-references."""

    n_correct: int
    n_incorrect: int
    n_unverifiable: int
    n_added: int

    def __post_init__(self) -> None:
        for name in ("n_correct", "n_incorrect", "n_unverifiable", "n_added"):
            if getattr(self, name) < 0:
                raise DataError(f"{name} must be non-negative")


class QualityRates(NamedTuple):
    accuracy: float
    error_rate: float
    unverifiable_rate: float
    missing_rate: float


def quality_rates(c: QualityCounts) -> QualityRates:
    """Rates over the evaluated pseudo-references.

    The denominator is correct + unverifiable + incorrect; the first three
    rates sum to 1, and the missing rate (added claims) shares the same
    denominator.
    """
    denom = c.n_correct + c.n_unverifiable + c.n_incorrect
    if denom < 1:
        raise DataError("quality_rates: evaluated-claim count is zero")
    return QualityRates(
        accuracy=c.n_correct / denom,
        error_rate=c.n_incorrect / denom,
        unverifiable_rate=c.n_unverifiable / denom,
        missing_rate=c.n_added / denom,
    )


# ---------------------------------------------------------------------------
# Inter-rater reliability
# ---------------------------------------------------------------------------

def cohen_kappa(a: Sequence[Hashable], b: Sequence[Hashable]) -> float:
    """Cohen's kappa for two raters over categorical labels."""
    if len(a) != len(b):
        raise DataError(f"cohen_kappa: length mismatch {len(a)} vs {len(b)}")
    n = len(a)
    if n < 1:
        raise DataError("cohen_kappa: empty label lists")
    p_o = sum(1 for x, y in zip(a, b) if x == y) / n
    ca = Counter(a)
    cb = Counter(b)
    p_e = sum(ca[l] * cb.get(l, 0) for l in ca) / (n * n)
    if p_e == 1.0:
        return 1.0  # both raters constant on the same label => agreement
    return (p_o - p_e) / (1.0 - p_e)


def krippendorff_alpha(
    ratings: Sequence[Sequence[Optional[float]]], level: str = "ordinal"
) -> float:
    """Krippendorff's alpha over an items x raters matrix with missing cells.

    Only the ordinal difference function is provided. Items with fewer than
    two ratings are ignored; at least two such items are required.
    """
    if level != "ordinal":
        raise DataError(f"unsupported level {level!r}; only 'ordinal' is implemented")
    units = [
        [v for v in row if v is not None]
        for row in ratings
    ]
    units = [u for u in units if len(u) >= 2]
    if len(units) < 2:
        raise DataError("krippendorff_alpha: fewer than two items with >= 2 ratings")

    values = sorted({v for u in units for v in u})
    index = {v: i for i, v in enumerate(values)}
    k = len(values)
    coincidence = np.zeros((k, k), dtype=np.float64)
    for u in units:
        m = len(u)
        for i in range(m):
            for j in range(m):
                if i != j:
                    coincidence[index[u[i]], index[u[j]]] += 1.0 / (m - 1)
    marginals = coincidence.sum(axis=1)
    n_total = marginals.sum()

    def delta_sq(ci: int, ki: int) -> float:
        if ci == ki:
            return 0.0
        lo, hi = min(ci, ki), max(ci, ki)
        span = marginals[lo : hi + 1].sum() - (marginals[ci] + marginals[ki]) / 2.0
        return float(span * span)

    d_o = 0.0
    d_e = 0.0
    for ci in range(k):
        for ki in range(k):
            if ci == ki:
                continue
            d = delta_sq(ci, ki)
            d_o += coincidence[ci, ki] * d
            d_e += marginals[ci] * marginals[ki] * d
    if d_e == 0.0:
        if d_o == 0.0:
            return 1.0
        raise DataError("krippendorff_alpha: zero expected disagreement")
    return 1.0 - (n_total - 1.0) * d_o / d_e


# ---------------------------------------------------------------------------
# Failure-case mining
# ---------------------------------------------------------------------------

def hazen_quantile(sorted_values: Sequence[float], q: float) -> float:
    """Mid-rank (Hazen) linear-interpolation quantile on sorted data."""
    n = len(sorted_values)
    if n == 0:
        raise DataError("quantile of empty data")
    h = q * n + 0.5
    if h <= 1.0:
        return float(sorted_values[0])
    if h >= n:
        return float(sorted_values[-1])
    lo = int(math.floor(h))
    frac = h - lo
    return float(sorted_values[lo - 1] + frac * (sorted_values[lo] - sorted_values[lo - 1]))


def failure_cases(
    rel_scores: Sequence[tuple[str, float]],
    human: Sequence[tuple[str, int]],
) -> tuple[list[str], list[str]]:
    """Mine systematic under- and over-estimation cases.

    The metric's score distribution is cut into five equal-mass bins; the
    bin edges Q1..Q4 sit at cumulative fractions 0.2/0.4/0.6/0.8 under the
    mid-rank quantile definition. Underestimation: score below Q1 yet rated
    5 by the human. Overestimation: score above Q4 yet rated 1.
    """
    if not rel_scores or not human:
        raise DataError("failure_cases: empty input")
    human_by_id = dict(human)
    ids = [i for i, _ in rel_scores]
    if set(ids) != set(human_by_id) or len(ids) != len(human_by_id):
        raise DataError("failure_cases: id sets do not align")
    values = sorted(v for _, v in rel_scores)
    q1 = hazen_quantile(values, 0.2)
    q4 = hazen_quantile(values, 0.8)
    under = [i for i, v in rel_scores if v < q1 and human_by_id[i] == 5]
    over = [i for i, v in rel_scores if v > q4 and human_by_id[i] == 1]
    return under, over
