"""Counter-based randomness keyed by (seed, dyadic address).

Every cascade weight is a pure function of the seed and the node it sits
on, so trees of any depth are generated lazily, re-queried consistently
and enumerated in any order.  The mixing function is the SplitMix64
finaliser chained over the packed key words.  Changing anything here
changes every simulated number, so bump ``HASH_VERSION`` with it.
"""

from __future__ import annotations

import numpy as np

HASH_VERSION = "splitmix64-addr-v1"

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30, _S27, _S31 = np.uint64(30), np.uint64(27), np.uint64(31)
_OUT1 = np.uint64(0x243F6A8885A308D3)
_OUT2 = np.uint64(0x13198A2E03707344)
_MASK64 = (1 << 64) - 1


def mix64(z):
    """SplitMix64 step on uint64 data (wrapping arithmetic)."""
    with np.errstate(over="ignore"):
        z = np.asarray(z, dtype=np.uint64) + _GAMMA
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
        return z ^ (z >> _S31)


def _unit(z):
    # 52 random bits mapped to the open interval (0, 1).
    return ((z >> np.uint64(12)).astype(np.float64) + 0.5) * 2.0**-52


def _seed_word(seed):
    if isinstance(seed, (int, np.integer)):
        return np.uint64(int(seed) & _MASK64)
    return np.asarray(seed, dtype=np.uint64)


def pack_words(depth, coords):
    """Pack per-axis indices (``depth`` bits each) into as few 64-bit words as possible."""
    width = max(depth, 1)
    words = []
    current = None
    used = 0
    for c in coords:
        c = np.asarray(c, dtype=np.uint64)
        if current is None or used + width > 64:
            if current is not None:
                words.append(current)
            current, used = c, width
        else:
            current = (current << np.uint64(width)) | c
            used += width
    if current is not None:
        words.append(current)
    return words


def address_uniforms(seed, dim, depth, step, coords, pair=True):
    """Uniform draws in (0, 1) attached to one node of the subdivision tree.

    ``step`` separates the cube itself (0) from the intermediate
    half-split boxes (1..d-1) that share its depth and index grid.
    ``seed`` may be an int or a uint64 array; it broadcasts against the
    coordinate arrays.  Returns ``(u1, u2)``, with ``u2`` None when
    ``pair`` is false.
    """
    salt = np.uint64((depth << 16) | (dim << 8) | step)
    key = mix64(_seed_word(seed) ^ mix64(salt))
    for word in pack_words(depth, coords):
        key = mix64(key ^ word)
    u1 = _unit(mix64(key ^ _OUT1))
    u2 = _unit(mix64(key ^ _OUT2)) if pair else None
    return u1, u2


def derive_seeds(master_seed: int, count: int) -> list[int]:
    """Independent 64-bit seeds for ``count`` replicas of an experiment."""
    base = mix64(np.uint64(int(master_seed) & _MASK64))
    idx = np.arange(count, dtype=np.uint64)
    return [int(v) for v in mix64(base ^ mix64(idx))]
