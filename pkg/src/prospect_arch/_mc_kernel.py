"""Numba path kernel for the risk-neutral surrogate model.

Per step, with ``v = clamp(g(Y))`` the per-step volatility,

    Y      <- r * dt - v**2 / 2 + v * z
    log P  <- log P + Y

Path ``p`` (global index) draws from substream ``p`` (or ``p // 2`` with the
sign flipped on odd paths when antithetic), step ``i`` uses draw ``i``.
Paths are processed in fixed-size chunks so the result does not depend on the
number of threads.
"""

import math
import os

import numba as nb
import numpy as np

from .rng import _LO32, _SHIFT32, _TWO_NEG32, _TWO_PI, _philox

if "NUMBA_THREADING_LAYER" not in os.environ:
    # skip the TBB probe, which warns on older TBB builds
    nb.config.THREADING_LAYER = "omp"

CHUNK = 256


@nb.njit(parallel=True, cache=True, fastmath=False)
def simulate_log_prices(
    k0, k1, path_offset, n_paths, n_steps, record_steps, g_coef, vol_floor, vol_cap, r_dt, y0, log_p1, antithetic
):
    n_rec = record_steps.shape[0]
    out = np.empty((n_paths, n_rec))
    n_chunks = (n_paths + CHUNK - 1) // CHUNK
    clamps = np.zeros(n_chunks, dtype=np.int64)
    n_coef = g_coef.shape[0]
    n_blocks = (n_steps + 3) // 4
    for c in nb.prange(n_chunks):
        start = c * CHUNK
        m = min(CHUNK, n_paths - start)
        y = np.full(m, y0)
        lp = np.full(m, log_p1)
        z = np.empty((4, m))
        w = np.empty((4, m), dtype=np.uint32)
        s_lo = np.empty(m, dtype=np.uint32)
        s_hi = np.empty(m, dtype=np.uint32)
        streams = np.empty(m, dtype=np.uint64)
        signs = np.empty(m)
        for q in range(m):
            gp = path_offset + start + q
            if antithetic:
                streams[q] = np.uint64(gp // 2)
                signs[q] = -1.0 if gp % 2 else 1.0
            else:
                streams[q] = np.uint64(gp)
                signs[q] = 1.0
            s_lo[q] = np.uint32(streams[q] & _LO32)
            s_hi[q] = np.uint32(streams[q] >> _SHIFT32)
        n_clamp = 0
        ri = 0
        for b in range(n_blocks):
            b_lo = np.uint32(np.uint64(b) & _LO32)
            b_hi = np.uint32(np.uint64(b) >> _SHIFT32)
            for q in range(m):
                w0, w1, w2, w3 = _philox(b_lo, b_hi, s_lo[q], s_hi[q], k0, k1)
                w[0, q] = w0
                w[1, q] = w1
                w[2, q] = w2
                w[3, q] = w3
            for q in range(m):
                s = signs[q]
                rad = s * math.sqrt(-2.0 * math.log((w[0, q] + 0.5) * _TWO_NEG32))
                ang = _TWO_PI * (w[1, q] * _TWO_NEG32)
                z[0, q] = rad * math.cos(ang)
                z[1, q] = rad * math.sin(ang)
                rad = s * math.sqrt(-2.0 * math.log((w[2, q] + 0.5) * _TWO_NEG32))
                ang = _TWO_PI * (w[3, q] * _TWO_NEG32)
                z[2, q] = rad * math.cos(ang)
                z[3, q] = rad * math.sin(ang)
            for j in range(4):
                step = 4 * b + j
                if step >= n_steps:
                    break
                for q in range(m):
                    yq = y[q]
                    v = g_coef[n_coef - 1]
                    for t in range(n_coef - 2, -1, -1):
                        v = v * yq + g_coef[t]
                    if v < vol_floor:
                        v = vol_floor
                        n_clamp += 1
                    elif v > vol_cap:
                        v = vol_cap
                        n_clamp += 1
                    yq = r_dt - 0.5 * v * v + v * z[j, q]
                    y[q] = yq
                    lp[q] += yq
                while ri < n_rec and record_steps[ri] == step + 1:
                    for q in range(m):
                        out[start + q, ri] = lp[q]
                    ri += 1
        clamps[c] = n_clamp
    return out, clamps.sum()
