"""Counter-based randomness.

Every random number in the package is a pure function of a 64-bit seed and
an integer coordinate tuple, so values never depend on enumeration order or
on how work is split between processes.
"""
from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _zigzag(k: int) -> int:
    k = int(k)
    return (k << 1) if k >= 0 else ((-k << 1) - 1)


def derive_seed(base: int, *keys: int) -> int:
    """Hash ``(base, *keys)`` to a new 64-bit seed."""
    ss = np.random.SeedSequence([int(base) & _MASK64, *(_zigzag(k) for k in keys)])
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def uniforms_at(seed: int, coords, stream: int = 0, count: int = 1) -> np.ndarray:
    """``count`` uniforms in [0, 1) for each integer coordinate tuple.

    Philox is keyed by the seed; the high counter words hold the coordinates
    and the stream tag, the low word is left free for the draws themselves, so
    blocks belonging to different sites never overlap.
    """
    coords = [tuple(int(c) for c in cc) for cc in coords]
    out = np.empty((len(coords), count))
    key = int(seed) & _MASK64
    for i, cc in enumerate(coords):
        if len(cc) > 2:
            raise ValueError("at most two integer coordinates are supported")
        ctr = [_zigzag(c) for c in cc] + [0] * (2 - len(cc))
        bitgen = np.random.Philox(key=key, counter=[0, *ctr, int(stream)])
        out[i] = np.random.Generator(bitgen).random(count)
    return out
