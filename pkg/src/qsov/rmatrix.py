"""Constant and trigonometric R-matrices for vector evaluation modules.

The constant matrix R12(q) has q on the (jj,jj) diagonal, 1 on the
remaining diagonal, and weight q - q^-1 at row (j,i), column (i,j) for
j > i.  The spectral-parameter matrix on a pair of labeled slots is
x R12(q) - y R21(q)^-1 with R21 = P R12 P; the inverse is computed by
exact elimination and is validated elsewhere through unitarity.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .exactnum import Q, QParam, Scalar, qpow
from .tensorspace import (
    Axis,
    COL,
    LabeledSpace,
    OpTensor,
    ROW,
    aux_slot,
    identity_matrix,
    inverse,
)


def _q_of(q) -> Scalar:
    return q.q if isinstance(q, QParam) else Q(q)


@lru_cache(maxsize=None)
def r12_matrix(m: int, q: Scalar) -> np.ndarray:
    r = np.empty((m * m, m * m), dtype=object)
    r[...] = Q(0)
    weight = q - qpow(q, -1)
    for a in range(m):
        for b in range(m):
            r[a * m + b, a * m + b] = q if a == b else Q(1)
    for i in range(m):
        for j in range(i + 1, m):
            r[j * m + i, i * m + j] = weight
    return r


@lru_cache(maxsize=None)
def flip_matrix(m: int) -> np.ndarray:
    p = np.empty((m * m, m * m), dtype=object)
    p[...] = Q(0)
    for a in range(m):
        for b in range(m):
            p[a * m + b, b * m + a] = Q(1)
    return p


@lru_cache(maxsize=None)
def r21_inverse_matrix(m: int, q: Scalar) -> np.ndarray:
    p = flip_matrix(m)
    from . import kernels

    r21 = kernels.matmul(kernels.matmul(p, r12_matrix(m, q)), p)
    return inverse(r21)


def _two_slot_tensor(s1: LabeledSpace, s2: LabeledSpace, matrix: np.ndarray) -> OpTensor:
    axes = (Axis(s1, ROW), Axis(s2, ROW), Axis(s1, COL), Axis(s2, COL))
    shape = (s1.dim, s2.dim, s1.dim, s2.dim)
    return OpTensor(axes, matrix.reshape(shape))


def r12_constant(m: int, q, slots: tuple[LabeledSpace, LabeledSpace] | None = None) -> OpTensor:
    q = _q_of(q)
    if slots is None:
        slots = (aux_slot(Q(0), m), aux_slot(Q(0), m))
    return _two_slot_tensor(slots[0], slots[1], r12_matrix(m, q).copy())


def r_trig(s1: LabeledSpace, s2: LabeledSpace, q) -> OpTensor:
    """x R12(q) - y R21(q)^-1 on the ordered slot pair, x/y the slot points."""
    q = _q_of(q)
    if s1.dim != s2.dim:
        raise ValueError(f"r_trig needs equal slot dims, got {s1.dim}, {s2.dim}")
    m = s1.dim
    data = s1.point * r12_matrix(m, q) - s2.point * r21_inverse_matrix(m, q)
    return _two_slot_tensor(s1, s2, data)


def r_trig_matrix(x: Scalar, y: Scalar, m: int, q) -> np.ndarray:
    q = _q_of(q)
    return x * r12_matrix(m, q) - y * r21_inverse_matrix(m, q)


def s_pairing(sx: LabeledSpace, sy: LabeledSpace) -> OpTensor:
    """Canonical pairing sum_j e_j^* (x) e_j: covector slot on sx, vector on sy."""
    if sx.dim != sy.dim:
        raise ValueError("pairing needs equal dims")
    data = identity_matrix(sx.dim)
    return OpTensor((Axis(sx, COL), Axis(sy, ROW)), data)


def s_matrix(m: int, slots: tuple[LabeledSpace, LabeledSpace] | None = None) -> OpTensor:
    if slots is None:
        slots = (aux_slot(Q(0), m), aux_slot(Q(0), m))
    return s_pairing(slots[0], slots[1])
