"""Sequence kernels with a compiled fast path.

At import time the Cython extension is preferred; if it is missing (or the
``CRSCORE_PURE_PYTHON`` environment variable is set) the pure-Python
implementation is used instead. ``BACKEND`` records which one is active.

Public entry points accept sequences of hashable tokens or plain strings
(character mode) and map them to integer ids before dispatching.
"""

from __future__ import annotations

import os
from typing import Callable, Sequence

import numpy as np

from . import _pykernels

BACKEND = "python"
_lev: Callable = _pykernels.levenshtein
_lcs: Callable = _pykernels.lcs_length
_compiled = os.environ.get("CRSCORE_PURE_PYTHON") is None

if _compiled:
    try:
        from . import _ckernels  # type: ignore[attr-defined]

        BACKEND = "c"
    except ImportError:
        _compiled = False


def _to_ids(a: Sequence, b: Sequence) -> tuple[list[int], list[int]]:
    table: dict = {}
    ids_a = [table.setdefault(tok, len(table)) for tok in a]
    ids_b = [table.setdefault(tok, len(table)) for tok in b]
    return ids_a, ids_b


def levenshtein(a: Sequence, b: Sequence) -> int:
    """Edit distance between two token sequences (or strings, per character)."""
    ids_a, ids_b = _to_ids(a, b)
    if _compiled:
        return _ckernels.levenshtein(
            np.asarray(ids_a, dtype=np.int32), np.asarray(ids_b, dtype=np.int32)
        )
    return _pykernels.levenshtein(ids_a, ids_b)


def lcs_length(a: Sequence, b: Sequence) -> int:
    """Longest-common-subsequence length between two token sequences."""
    ids_a, ids_b = _to_ids(a, b)
    if _compiled:
        return _ckernels.lcs_length(
            np.asarray(ids_a, dtype=np.int32), np.asarray(ids_b, dtype=np.int32)
        )
    return _pykernels.lcs_length(ids_a, ids_b)
