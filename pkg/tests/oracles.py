"""Independent oracle implementations used to cross-check the package.

Everything here is written from the definitions, structured differently
from the production code (full-matrix DPs, explicit indicator loops,
recursive LCS), and stays import-independent of the modules it checks.
"""

from __future__ import annotations

import hashlib
import math
import re
import struct
from collections import Counter
from functools import lru_cache

import numpy as np

# ---------------------------------------------------------------------------
# Indicator scoring (conciseness/comprehensiveness/relevance)
# ---------------------------------------------------------------------------

def brute_force_score(values, tau):
    """Direct indicator enumeration over a similarity matrix."""
    n_prefs = len(values)
    n_sents = len(values[0]) if n_prefs else 0

    con_hits = 0
    for j in range(n_sents):
        best = None
        for i in range(n_prefs):
            if best is None or values[i][j] > best:
                best = values[i][j]
        if best is not None and best > tau:
            con_hits += 1
    con = con_hits / n_sents if n_sents else 0.0

    comp_hits = 0
    for i in range(n_prefs):
        best = None
        for j in range(n_sents):
            if best is None or values[i][j] > best:
                best = values[i][j]
        if best is not None and best > tau:
            comp_hits += 1
    comp = comp_hits / n_prefs if n_prefs else 0.0

    rel = 0.0 if con + comp == 0 else 2 * con * comp / (con + comp)
    return con, comp, rel


# ---------------------------------------------------------------------------
# Hash-bag embedding (reimplementation of the documented algorithm)
# ---------------------------------------------------------------------------

_WORD_OR_SPAN = re.compile(r"`([^`]*)`|[A-Za-z0-9_']+")


def hashbag_tokens(text):
    toks = []
    for match in _WORD_OR_SPAN.finditer(text):
        span, word = match.group(1), match.group(0)
        if span is not None:
            stripped = span.strip()
            if stripped:
                toks.append(stripped.lower())
        else:
            stripped = word.strip("'")
            if stripped:
                toks.append(stripped.lower())
    return toks


@lru_cache(maxsize=None)
def hashbag_direction(seed, token, dim):
    values = []
    blocks = (dim + 7) // 8
    for block in range(blocks):
        digest = hashlib.sha256(f"{seed}|{token}|{block}".encode()).digest()
        ints = struct.unpack(">8I", digest)
        us = [(x + 0.5) / 4294967296.0 for x in ints]
        for a, b in zip(us[0::2], us[1::2]):
            mag = math.sqrt(-2.0 * math.log(a))
            values.append(mag * math.cos(2.0 * math.pi * b))
            values.append(mag * math.sin(2.0 * math.pi * b))
    vec = np.array(values[:dim])
    return vec / math.sqrt(float(vec @ vec))


def hashbag_vector(text, seed=0, dim=256, normalize=True):
    toks = hashbag_tokens(text) or ["\x00empty"]
    total = np.zeros(dim)
    for tok in toks:
        total = total + hashbag_direction(seed, tok, dim)
    if normalize:
        total = total / math.sqrt(float(total @ total))
    return total


def cosine_oracle(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return float(u @ v / (math.sqrt(float(u @ u)) * math.sqrt(float(v @ v))))


# ---------------------------------------------------------------------------
# Sequence oracles
# ---------------------------------------------------------------------------

def levenshtein_full_matrix(a, b):
    rows = len(a) + 1
    cols = len(b) + 1
    table = [[0] * cols for _ in range(rows)]
    for i in range(rows):
        table[i][0] = i
    for j in range(cols):
        table[0][j] = j
    for i in range(1, rows):
        for j in range(1, cols):
            sub = table[i - 1][j - 1] + (a[i - 1] != b[j - 1])
            table[i][j] = min(table[i - 1][j] + 1, table[i][j - 1] + 1, sub)
    return table[-1][-1]


def lcs_recursive(a, b):
    @lru_cache(maxsize=None)
    def go(i, j):
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + go(i + 1, j + 1)
        return max(go(i + 1, j), go(i, j + 1))

    return go(0, 0)


# ---------------------------------------------------------------------------
# n-gram metric oracles (on pre-tokenized input)
# ---------------------------------------------------------------------------

def bleu_oracle(cand_tokens, ref_tokens, smoothing=True, max_order=4):
    if not cand_tokens or not ref_tokens:
        return 0.0
    log_precisions = []
    for order in range(1, max_order + 1):
        cand_grams = [tuple(cand_tokens[i:i + order])
                      for i in range(len(cand_tokens) - order + 1)]
        if not cand_grams:
            continue
        ref_grams = Counter(
            tuple(ref_tokens[i:i + order])
            for i in range(len(ref_tokens) - order + 1)
        )
        matched = 0
        budget = dict(ref_grams)
        for gram in cand_grams:
            if budget.get(gram, 0) > 0:
                budget[gram] -= 1
                matched += 1
        if matched == 0:
            if order == 1 or not smoothing:
                return 0.0
            precision = 1.0 / (len(cand_grams) + 1)
        else:
            precision = matched / len(cand_grams)
        log_precisions.append(math.log(precision))
    if not log_precisions:
        return 0.0
    geo = math.exp(sum(log_precisions) / len(log_precisions))
    if len(cand_tokens) >= len(ref_tokens):
        bp = 1.0
    else:
        bp = math.exp(1.0 - len(ref_tokens) / len(cand_tokens))
    return bp * geo


def rouge_l_oracle(cand_tokens, ref_tokens):
    if not cand_tokens or not ref_tokens:
        return 0.0
    lcs = lcs_recursive(tuple(cand_tokens), tuple(ref_tokens))
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand_tokens)
    recall = lcs / len(ref_tokens)
    return 2 * precision * recall / (precision + recall)


def chrf_oracle(cand, ref, beta=2.0, max_char_order=6, word_orders=0,
                word_tokenizer=None):
    """Per-order F_beta averaged across orders present on either side."""

    def grams(seq, order):
        return Counter(tuple(seq[i:i + order]) for i in range(len(seq) - order + 1))

    def f_beta(cg, rg):
        total_c = sum(cg.values())
        total_r = sum(rg.values())
        if total_c == 0 and total_r == 0:
            return None
        overlap = sum((cg & rg).values())
        p = overlap / total_c if total_c else 0.0
        r = overlap / total_r if total_r else 0.0
        if beta * beta * p + r == 0:
            return 0.0
        return (1 + beta * beta) * p * r / (beta * beta * p + r)

    cand_chars = [c for c in cand if not c.isspace()]
    ref_chars = [c for c in ref if not c.isspace()]
    per_order = []
    for order in range(1, max_char_order + 1):
        f = f_beta(grams(cand_chars, order), grams(ref_chars, order))
        if f is not None:
            per_order.append(f)
    if word_orders:
        tok = word_tokenizer or (lambda s: s.split())
        cw, rw = tok(cand), tok(ref)
        for order in range(1, word_orders + 1):
            f = f_beta(grams(cw, order), grams(rw, order))
            if f is not None:
                per_order.append(f)
    return sum(per_order) / len(per_order) if per_order else 0.0


# ---------------------------------------------------------------------------
# Statistics oracles
# ---------------------------------------------------------------------------

def spearman_d2_formula(xs, ys):
    """Closed form for distinct values: 1 - 6*sum(d^2)/(n(n^2-1)), evaluated
    in exact rational arithmetic and rounded to float once."""
    from fractions import Fraction

    n = len(xs)
    rank_x = {v: i + 1 for i, v in enumerate(sorted(xs))}
    rank_y = {v: i + 1 for i, v in enumerate(sorted(ys))}
    d2 = sum((rank_x[a] - rank_y[b]) ** 2 for a, b in zip(xs, ys))
    return float(Fraction(1) - Fraction(6 * d2, n * (n * n - 1)))


def kendall_pair_count(xs, ys):
    """(C - D) / (n(n-1)/2) for distinct values."""
    n = len(xs)
    concordant = discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            prod = (xs[i] - xs[j]) * (ys[i] - ys[j])
            if prod > 0:
                concordant += 1
            elif prod < 0:
                discordant += 1
    return (concordant - discordant) / (n * (n - 1) / 2)


def hazen_quantile_oracle(values, q):
    return float(np.quantile(np.asarray(values, dtype=float), q, method="hazen"))
