"""Hot statevector kernels: numba-jitted with a pure-numpy fallback.

Backend selection: set QDISSECT_BACKEND=numpy to force the fallback, or
QDISSECT_BACKEND=numba to require the jitted path (ImportError if numba is
missing). Default: numba when importable, numpy otherwise. Both paths are
bit-identical; see benchmarks/bench_kernels.py.
"""

from __future__ import annotations

import math
import os

import numpy as np

_requested = os.environ.get("QDISSECT_BACKEND", "").strip().lower()


def _numpy_apply_rzy(amps: np.ndarray, n: int, a: int, b: int, theta: float) -> None:
    """In-place exp(-i theta/2 Z_a Y_b) on a 2^n amplitude vector.

    The generator squares to identity, so the gate is cos(t/2) I - i sin(t/2) G;
    with Y pairing bit-b partners the update is a real Givens rotation with a
    sign from bit a.
    """
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    view = amps.reshape((2,) * n)
    for za, sign in ((0, 1.0), (1, -1.0)):
        ix0 = [slice(None)] * n
        ix0[a] = za
        ix1 = list(ix0)
        ix0[b] = 0
        ix1[b] = 1
        ix0, ix1 = tuple(ix0), tuple(ix1)
        a0 = view[ix0].copy()
        a1 = view[ix1].copy()
        view[ix0] = c * a0 - sign * s * a1
        view[ix1] = sign * s * a0 + c * a1


def _numpy_term_expectations(probs: np.ndarray, signs: np.ndarray) -> np.ndarray:
    return signs @ probs


if _requested == "numpy":
    apply_rzy_inplace = _numpy_apply_rzy
    term_expectations = _numpy_term_expectations
    BACKEND = "numpy"
else:
    try:
        from numba import njit
    except ImportError:
        if _requested == "numba":
            raise
        apply_rzy_inplace = _numpy_apply_rzy
        term_expectations = _numpy_term_expectations
        BACKEND = "numpy"
    else:
        @njit(cache=True)
        def _numba_rzy(amps, pos_a, pos_b, c, s):  # pragma: no cover - jitted
            half = amps.size >> 1
            low = (1 << pos_b) - 1
            bit_b = 1 << pos_b
            for i in range(half):
                x0 = ((i & ~low) << 1) | (i & low)
                x1 = x0 | bit_b
                sign = -1.0 if (x0 >> pos_a) & 1 else 1.0
                a0 = amps[x0]
                a1 = amps[x1]
                amps[x0] = c * a0 - sign * s * a1
                amps[x1] = sign * s * a0 + c * a1

        @njit(cache=True)
        def _numba_expect(probs, signs):  # pragma: no cover - jitted
            t, m = signs.shape
            out = np.empty(t, dtype=np.float64)
            for i in range(t):
                acc = 0.0
                for j in range(m):
                    acc += signs[i, j] * probs[j]
                out[i] = acc
            return out

        def apply_rzy_inplace(amps: np.ndarray, n: int, a: int, b: int, theta: float) -> None:
            # qubit q sits at bit position n-1-q (qubit 0 = MSB)
            _numba_rzy(amps, n - 1 - a, n - 1 - b, math.cos(theta / 2.0), math.sin(theta / 2.0))

        def term_expectations(probs: np.ndarray, signs: np.ndarray) -> np.ndarray:
            return _numba_expect(probs, signs)

        BACKEND = "numba"
