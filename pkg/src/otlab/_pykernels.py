"""Pure-Python (numpy) kernels.

Reference semantics for ``_ckernels.pyx``; both must return identical arrays
for identical inputs.
"""

from __future__ import annotations

import numpy as np

_TOP = np.uint64(63)
_LOW63 = np.uint64((1 << 63) - 1)


def transfer(honest, raw, guess_threshold=0):
    """Receipts of a batch of all-or-nothing transfers.

    ``received[i]`` is the top bit of ``raw[i]`` for honest sends and 0 for
    garbage. ``guessed[i]`` flags a non-received position whose low 63 raw bits
    fall under ``guess_threshold``.
    """
    honest = np.asarray(honest, dtype=np.uint8)
    raw = np.asarray(raw, dtype=np.uint64)
    received = honest & (raw >> _TOP).astype(np.uint8)
    if guess_threshold:
        guessed = ((raw & _LOW63) < np.uint64(guess_threshold)).astype(np.uint8)
        guessed &= received ^ np.uint8(1)
    else:
        guessed = np.zeros(raw.shape[0], dtype=np.uint8)
    return received, guessed


def select_top(eligible, priority, keys, k):
    """Up to ``k`` eligible positions ordered by (priority desc, key, position)."""
    pos = np.flatnonzero(np.asarray(eligible, dtype=np.uint8))
    if k <= 0 or pos.size == 0:
        return np.empty(0, dtype=np.int64)
    sub_keys = np.asarray(keys, dtype=np.uint64)[pos]
    if priority is None:
        order = np.lexsort((pos, sub_keys))
    else:
        sub_prio = np.asarray(priority, dtype=np.uint8)[pos]
        order = np.lexsort((pos, sub_keys, np.uint8(1) - sub_prio))
    return pos[order[:k]].astype(np.int64)


def ech_round(honest, priority, raw_coins, raw_keys, keep, guess_threshold=0):
    """One element-choosing round: transfer, then Bob's publication.

    Returns ``(received, guessed, published)``; ``published`` is empty when
    fewer than ``keep`` positions are known to Bob.
    """
    received, guessed = transfer(honest, raw_coins, guess_threshold)
    known = received | guessed
    if int(known.sum()) < keep:
        return received, guessed, np.empty(0, dtype=np.int64)
    return received, guessed, select_top(known, priority, raw_keys, keep)


_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def splitmix_block(seed, start, n):
    """Words ``start .. start+n-1`` of the counter-mode SplitMix64 stream ``seed``."""
    if n <= 0:
        return np.empty(0, dtype=np.uint64)
    z = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    z *= _GAMMA
    z += np.uint64(seed)
    z ^= z >> np.uint64(30)
    z *= _M1
    z ^= z >> np.uint64(27)
    z *= _M2
    z ^= z >> np.uint64(31)
    return z
