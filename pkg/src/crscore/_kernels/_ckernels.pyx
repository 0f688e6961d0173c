# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled sequence kernels: Levenshtein distance and LCS length.

Same semantics as ``crscore._kernels._pykernels``; operates on int32 buffers.
"""

from libc.stdlib cimport free, malloc


def levenshtein(const int[:] a, const int[:] b) -> int:
    cdef Py_ssize_t la = a.shape[0]
    cdef Py_ssize_t lb = b.shape[0]
    if la == 0:
        return lb
    if lb == 0:
        return la
    cdef Py_ssize_t i, j
    cdef int cost, best, tmp
    cdef int *prev = <int *> malloc((lb + 1) * sizeof(int))
    cdef int *cur = <int *> malloc((lb + 1) * sizeof(int))
    if prev == NULL or cur == NULL:
        free(prev)
        free(cur)
        raise MemoryError()
    try:
        for j in range(lb + 1):
            prev[j] = <int> j
        for i in range(la):
            cur[0] = <int> (i + 1)
            for j in range(1, lb + 1):
                cost = 0 if a[i] == b[j - 1] else 1
                best = prev[j] + 1
                tmp = cur[j - 1] + 1
                if tmp < best:
                    best = tmp
                tmp = prev[j - 1] + cost
                if tmp < best:
                    best = tmp
                cur[j] = best
            prev, cur = cur, prev
        return prev[lb]
    finally:
        free(prev)
        free(cur)


def lcs_length(const int[:] a, const int[:] b) -> int:
    cdef Py_ssize_t la = a.shape[0]
    cdef Py_ssize_t lb = b.shape[0]
    if la == 0 or lb == 0:
        return 0
    cdef Py_ssize_t i, j
    cdef int *prev = <int *> malloc((lb + 1) * sizeof(int))
    cdef int *cur = <int *> malloc((lb + 1) * sizeof(int))
    if prev == NULL or cur == NULL:
        free(prev)
        free(cur)
        raise MemoryError()
    try:
        for j in range(lb + 1):
            prev[j] = 0
            cur[j] = 0
        for i in range(la):
            for j in range(1, lb + 1):
                if a[i] == b[j - 1]:
                    cur[j] = prev[j - 1] + 1
                elif cur[j - 1] >= prev[j]:
                    cur[j] = cur[j - 1]
                else:
                    cur[j] = prev[j]
            prev, cur = cur, prev
            cur[0] = 0
        return prev[lb]
    finally:
        free(prev)
        free(cur)
