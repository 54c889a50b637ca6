"""Counter-based random numbers for reproducible, order-insensitive paths.

Each simulated path i draws from its own Philox4x32-10 stream: the key is
the 64-bit run seed, the 128-bit counter packs (draw index, path index).
Streams therefore depend only on (seed, path index), never on scheduling,
which is what makes the engine bit-identical across worker counts.  Normals
come from the Marsaglia polar transform, two per accepted counter block.
"""

from __future__ import annotations

import numpy as np
from numba import njit

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint32(0x9E3779B9)
_W1 = np.uint32(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(inline="always", cache=True)
def _philox_block(draw, path, seed):
    """One Philox4x32-10 block -> four 32-bit words."""
    c0 = np.uint32(draw & _MASK32)
    c1 = np.uint32((draw >> np.uint64(32)) & _MASK32)
    c2 = np.uint32(path & _MASK32)
    c3 = np.uint32((path >> np.uint64(32)) & _MASK32)
    k0 = np.uint32(seed & _MASK32)
    k1 = np.uint32((seed >> np.uint64(32)) & _MASK32)
    for _ in range(10):
        p0 = _M0 * np.uint64(c0)
        p1 = _M1 * np.uint64(c2)
        hi0 = np.uint32(p0 >> np.uint64(32))
        lo0 = np.uint32(p0 & _MASK32)
        hi1 = np.uint32(p1 >> np.uint64(32))
        lo1 = np.uint32(p1 & _MASK32)
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = np.uint32(k0 + _W0)
        k1 = np.uint32(k1 + _W1)
    return c0, c1, c2, c3


@njit(inline="always", cache=True)
def uniform_pair(draw, path, seed):
    """Two uniforms in (0, 1] from counter block `draw` of path `path`."""
    o0, o1, o2, o3 = _philox_block(draw, path, seed)
    u1 = (np.uint64(o0) << np.uint64(32) | np.uint64(o1)) >> np.uint64(11)
    u2 = (np.uint64(o2) << np.uint64(32) | np.uint64(o3)) >> np.uint64(11)
    return (u1 + np.uint64(1)) * _INV53, (u2 + np.uint64(1)) * _INV53


@njit(inline="always", cache=True)
def normal_pair(draw, path, seed):
    """Two standard normals by the polar method; returns the advanced counter."""
    while True:
        u, v = uniform_pair(draw, path, seed)
        draw += np.uint64(1)
        x = 2.0 * u - 1.0
        y = 2.0 * v - 1.0
        s = x * x + y * y
        if 0.0 < s < 1.0:
            fac = np.sqrt(-2.0 * np.log(s) / s)
            return x * fac, y * fac, draw


@njit(cache=True)
def normals_array(seed, path, n):
    """n sequential normals from one path's stream (testing/diagnostics)."""
    out = np.empty(n)
    draw = np.uint64(0)
    i = 0
    while i < n:
        z1, z2, draw = normal_pair(draw, np.uint64(path), np.uint64(seed))
        out[i] = z1
        i += 1
        if i < n:
            out[i] = z2
            i += 1
    return out


@njit(cache=True)
def uniforms_array(seed, path, n):
    out = np.empty(n)
    draw = np.uint64(0)
    i = 0
    while i < n:
        u1, u2 = uniform_pair(draw, np.uint64(path), np.uint64(seed))
        draw += np.uint64(1)
        out[i] = u1
        i += 1
        if i < n:
            out[i] = u2
            i += 1
    return out
