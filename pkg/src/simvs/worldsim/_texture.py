"""Integer-hash procedural texture shared by both render backends.

Works elementwise on numpy uint64 arrays; the numba backend compiles a
scalar twin with the same constants (parity is locked by a unit test).
"""

import numpy as np

MIX_A = 0x9E3779B97F4A7C15
MIX_B = 0xBF58476D1CE4E5B9
MIX_C = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0


def hash01(ix, iy, seed):
    """Deterministic uniform value in [0,1) per integer cell (ix, iy)."""
    ux = np.asarray(ix).astype(np.uint64)
    uy = np.asarray(iy).astype(np.uint64)
    z = np.uint64(seed) + ux * np.uint64(MIX_A) + uy * np.uint64(MIX_B)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_B)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_C)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53
