"""Benchmark: compiled sequence kernels vs the pure-Python fallback.

The edit-distance and LCS dynamic programs dominate baseline-metric runtime
on large corpora (every (change, system) pair costs O(n*m) per metric), so
the package ships a Cython extension with a pure-Python fallback selected at
import. This script times both on review-sized token sequences.

Run:
    python benchmarks/bench_kernels.py [--pairs 2000] [--max-len 120]
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from crscore._kernels import BACKEND, _pykernels

try:
    from crscore._kernels import _ckernels
except ImportError:
    _ckernels = None


def make_pairs(n_pairs: int, max_len: int, vocab: int, seed: int):
    rng = random.Random(seed)
    pairs = []
    for _ in range(n_pairs):
        la = rng.randint(3, max_len)
        lb = rng.randint(3, max_len)
        a = [rng.randrange(vocab) for _ in range(la)]
        b = [rng.randrange(vocab) for _ in range(lb)]
        pairs.append((a, b))
    return pairs


def bench(label, fn, pairs, convert=None):
    if convert:
        pairs = [(convert(a), convert(b)) for a, b in pairs]
    start = time.perf_counter()
    checksum = 0
    for a, b in pairs:
        checksum += fn(a, b)
    elapsed = time.perf_counter() - start
    rate = len(pairs) / elapsed
    print(f"  {label:<28} {elapsed:8.3f} s   {rate:10.0f} pairs/s   checksum={checksum}")
    return elapsed


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=2000)
    parser.add_argument("--max-len", type=int, default=120)
    parser.add_argument("--vocab", type=int, default=500)
    parser.add_argument("--seed", type=int, default=17)
    args = parser.parse_args()

    print(f"active backend at import: {BACKEND}")
    print(f"{args.pairs} random pairs, lengths 3..{args.max_len}, vocab {args.vocab}\n")
    pairs = make_pairs(args.pairs, args.max_len, args.vocab, args.seed)
    to_i32 = lambda seq: np.asarray(seq, dtype=np.int32)  # noqa: E731

    print("levenshtein:")
    t_py = bench("pure python", _pykernels.levenshtein, pairs)
    if _ckernels is not None:
        t_c = bench("cython", _ckernels.levenshtein, pairs, convert=to_i32)
        print(f"  speedup: {t_py / t_c:.1f}x")
    else:
        print("  cython kernels not built; skipping")

    print("\nlcs_length:")
    t_py = bench("pure python", _pykernels.lcs_length, pairs)
    if _ckernels is not None:
        t_c = bench("cython", _ckernels.lcs_length, pairs, convert=to_i32)
        print(f"  speedup: {t_py / t_c:.1f}x")
    else:
        print("  cython kernels not built; skipping")


if __name__ == "__main__":
    main()
