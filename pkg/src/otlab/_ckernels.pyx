# cython: boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled kernels; same contracts as ``otlab._pykernels``."""

import numpy as np

from libc.stdint cimport int64_t, uint8_t, uint64_t
from libcpp.algorithm cimport partial_sort, sort
from libcpp.utility cimport pair
from libcpp.vector cimport vector


ctypedef pair[uint64_t, int64_t] Entry


cdef Py_ssize_t _take(vector[Entry]& group, Py_ssize_t k, int64_t* out) noexcept nogil:
    """Write the ``k`` smallest (key, pos) entries of ``group`` to ``out`` in order."""
    cdef Py_ssize_t m = <Py_ssize_t>group.size(), i
    if k > m:
        k = m
    if k <= 0:
        return 0
    if k < m:
        partial_sort(group.begin(), group.begin() + k, group.end())
    else:
        sort(group.begin(), group.end())
    for i in range(k):
        out[i] = group[i].second
    return k


def transfer(honest, raw, guess_threshold=0):
    cdef const uint8_t[::1] h = np.ascontiguousarray(honest, dtype=np.uint8)
    cdef const uint64_t[::1] r = np.ascontiguousarray(raw, dtype=np.uint64)
    cdef Py_ssize_t n = r.shape[0], i
    cdef uint64_t thr = guess_threshold
    cdef uint64_t low = (<uint64_t>1 << 63) - 1
    out_r = np.empty(n, dtype=np.uint8)
    out_g = np.zeros(n, dtype=np.uint8)
    cdef uint8_t[::1] rec = out_r
    cdef uint8_t[::1] gue = out_g
    with nogil:
        for i in range(n):
            rec[i] = h[i] & <uint8_t>(r[i] >> 63)
            if thr and not rec[i] and (r[i] & low) < thr:
                gue[i] = 1
    return out_r, out_g


cdef object _select(const uint8_t[::1] elig, const uint8_t[::1] prio, bint has_prio,
                    const uint64_t[::1] keys, Py_ssize_t k):
    cdef Py_ssize_t n = elig.shape[0], i, got = 0
    cdef vector[Entry] first, second
    if k <= 0:
        return np.empty(0, dtype=np.int64)
    for i in range(n):
        if elig[i]:
            if has_prio and prio[i]:
                first.push_back(Entry(keys[i], i))
            else:
                second.push_back(Entry(keys[i], i))
    cdef Py_ssize_t total = <Py_ssize_t>(first.size() + second.size())
    out = np.empty(min(k, total), dtype=np.int64)
    if total == 0:
        return out
    cdef int64_t[::1] res = out
    with nogil:
        got = _take(first, k, &res[0])
        if got < k and got < total:
            _take(second, k - got, &res[got])
    return out


def select_top(eligible, priority, keys, k):
    cdef const uint8_t[::1] e = np.ascontiguousarray(eligible, dtype=np.uint8)
    cdef const uint64_t[::1] kv = np.ascontiguousarray(keys, dtype=np.uint64)
    if priority is None:
        return _select(e, e, False, kv, k)
    cdef const uint8_t[::1] p = np.ascontiguousarray(priority, dtype=np.uint8)
    return _select(e, p, True, kv, k)


def ech_round(honest, priority, raw_coins, raw_keys, keep, guess_threshold=0):
    cdef const uint8_t[::1] h = np.ascontiguousarray(honest, dtype=np.uint8)
    cdef const uint64_t[::1] r = np.ascontiguousarray(raw_coins, dtype=np.uint64)
    cdef Py_ssize_t n = r.shape[0], i, total = 0
    cdef uint64_t thr = guess_threshold
    cdef uint64_t low = (<uint64_t>1 << 63) - 1
    out_r = np.empty(n, dtype=np.uint8)
    out_g = np.zeros(n, dtype=np.uint8)
    known = np.empty(n, dtype=np.uint8)
    cdef uint8_t[::1] rec = out_r
    cdef uint8_t[::1] gue = out_g
    cdef uint8_t[::1] kn = known
    with nogil:
        for i in range(n):
            rec[i] = h[i] & <uint8_t>(r[i] >> 63)
            if thr and not rec[i] and (r[i] & low) < thr:
                gue[i] = 1
            kn[i] = rec[i] | gue[i]
            total += kn[i]
    if total < keep:
        return out_r, out_g, np.empty(0, dtype=np.int64)
    return out_r, out_g, select_top(known, priority, raw_keys, keep)


def splitmix_block(seed, start, n):
    cdef uint64_t s = <uint64_t>seed
    cdef uint64_t c = <uint64_t>start
    cdef Py_ssize_t m = n if n > 0 else 0, i
    out = np.empty(m, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef uint64_t z
    with nogil:
        for i in range(m):
            c += 1
            z = s + c * <uint64_t>0x9E3779B97F4A7C15
            z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
            z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
            o[i] = z ^ (z >> 31)
    return out
