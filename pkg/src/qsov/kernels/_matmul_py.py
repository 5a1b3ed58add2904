"""Pure-Python exact matrix multiply.

Same algorithm as the compiled kernel: clear denominators to a single
common denominator per operand, multiply integer matrices, then reduce
once per output entry.  For the structured denominators this package
produces (powers of the numerator/denominator of q and a few small
config rationals) the common denominators stay tiny, so this is several
times faster than accumulating rationals pairwise.
"""

from __future__ import annotations

import math

import numpy as np

from ..exactnum import Q


def _clear_denominators(mat: np.ndarray):
    den = 1
    for entry in mat.flat:
        d = int(entry.denominator)
        den = den * d // math.gcd(den, d)
    cleared = np.empty(mat.shape, dtype=object)
    for idx, entry in np.ndenumerate(mat):
        cleared[idx] = int(entry.numerator) * (den // int(entry.denominator))
    return cleared, den


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, m = a.shape
    m2, p = b.shape
    if m != m2:
        raise ValueError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    out = np.empty((n, p), dtype=object)
    if m == 0:
        out[...] = Q(0)
        return out
    ai, da = _clear_denominators(a)
    bi, db = _clear_denominators(b)
    ci = np.dot(ai, bi)
    dd = da * db
    for idx, value in np.ndenumerate(ci):
        out[idx] = Q(value, dd)
    return out
