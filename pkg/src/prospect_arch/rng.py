"""Counter-based normal substreams.

Every standard-normal draw is a pure function of ``(seed, stream, index)``:

* the seed is hashed to a 64-bit Philox key with :class:`numpy.random.SeedSequence`;
* draw ``i`` of stream ``s`` lives in counter block ``i // 4`` with counter words
  ``(block_lo, block_hi, s_lo, s_hi)``;
* the four 32-bit output words of a block feed two Box-Muller pairs, giving
  draws ``4b .. 4b+3``.

Because nothing is sequential, any slice of any stream can be produced in any
order by any number of workers and the numbers never change.
"""

from __future__ import annotations

import math

import numba as nb
import numpy as np

__all__ = [
    "philox4x32",
    "seed_key",
    "normal_draws",
    "CounterStreams",
]

_MUL0 = np.uint64(0xD2511F53)
_MUL1 = np.uint64(0xCD9E8D57)
_WEYL0 = np.uint32(0x9E3779B9)
_WEYL1 = np.uint32(0xBB67AE85)
_LO32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_TWO_NEG32 = 2.0**-32
_TWO_PI = 2.0 * math.pi


@nb.njit(inline="always", cache=True)
def _philox(c0, c1, c2, c3, k0, k1):
    # Philox4x32 with the standard 10 rounds.
    for _ in range(10):
        p0 = _MUL0 * np.uint64(c0)
        p1 = _MUL1 * np.uint64(c2)
        h0 = np.uint32(p0 >> _SHIFT32)
        l0 = np.uint32(p0 & _LO32)
        h1 = np.uint32(p1 >> _SHIFT32)
        l1 = np.uint32(p1 & _LO32)
        c0, c1, c2, c3 = h1 ^ c1 ^ k0, l1, h0 ^ c3 ^ k1, l0
        k0 = np.uint32(k0 + _WEYL0)
        k1 = np.uint32(k1 + _WEYL1)
    return c0, c1, c2, c3


@nb.njit(inline="always", cache=True)
def _normal_block(k0, k1, stream, block):
    """Four standard normals for counter ``block`` of ``stream``."""
    w0, w1, w2, w3 = _philox(
        np.uint32(block & _LO32),
        np.uint32(block >> _SHIFT32),
        np.uint32(stream & _LO32),
        np.uint32(stream >> _SHIFT32),
        k0,
        k1,
    )
    r = math.sqrt(-2.0 * math.log((w0 + 0.5) * _TWO_NEG32))
    a = _TWO_PI * (w1 * _TWO_NEG32)
    z0 = r * math.cos(a)
    z1 = r * math.sin(a)
    r = math.sqrt(-2.0 * math.log((w2 + 0.5) * _TWO_NEG32))
    a = _TWO_PI * (w3 * _TWO_NEG32)
    return z0, z1, r * math.cos(a), r * math.sin(a)


@nb.njit(cache=True)
def _fill_normals(k0, k1, stream, start, out):
    n = out.shape[0]
    i = 0
    while i < n:
        idx = start + i
        block = idx >> 2
        zs = _normal_block(k0, k1, np.uint64(stream), np.uint64(block))
        j = idx & 3
        while j < 4 and i < n:
            out[i] = zs[j]
            i += 1
            j += 1
    return out


@nb.njit(cache=True)
def _philox_scalar(c0, c1, c2, c3, k0, k1):
    return _philox(c0, c1, c2, c3, k0, k1)


def philox4x32(counter, key):
    """Raw Philox4x32-10 block function.

    Parameters
    ----------
    counter : sequence of 4 ints (32-bit words)
    key : sequence of 2 ints (32-bit words)

    Returns
    -------
    tuple of 4 ints
    """
    c = [np.uint32(int(x) & 0xFFFFFFFF) for x in counter]
    k = [np.uint32(int(x) & 0xFFFFFFFF) for x in key]
    return tuple(int(w) for w in _philox_scalar(c[0], c[1], c[2], c[3], k[0], k[1]))


def seed_key(seed) -> tuple[np.uint32, np.uint32]:
    """Hash a master seed (any non-negative int or int sequence) to a Philox key."""
    state = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint32)
    return np.uint32(state[0]), np.uint32(state[1])


def normal_draws(seed, stream: int, start: int, count: int) -> np.ndarray:
    """Draws ``start .. start+count-1`` of substream ``stream``."""
    if stream < 0 or start < 0 or count < 0:
        raise ValueError("stream, start and count must be non-negative")
    k0, k1 = seed_key(seed)
    out = np.empty(count, dtype=np.float64)
    if count:
        _fill_normals(k0, k1, np.uint64(stream), np.int64(start), out)
    return out


class CounterStreams:
    """Convenience handle binding a master seed.

    >>> s = CounterStreams(7)
    >>> bool((s.normals(3, 10, 5) == s.normals(3, 0, 15)[10:]).all())
    True
    """

    def __init__(self, seed=0):
        self.seed = seed
        self.key = seed_key(seed)

    def normals(self, stream: int, start: int, count: int) -> np.ndarray:
        out = np.empty(count, dtype=np.float64)
        if count:
            _fill_normals(self.key[0], self.key[1], np.uint64(stream), np.int64(start), out)
        return out

    def __repr__(self):
        return f"CounterStreams(seed={self.seed!r})"
