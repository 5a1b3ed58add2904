"""Labeled tensor spaces, dense exact operator tensors, exact linear algebra.

An OpTensor is a dense array of rationals whose axes are tagged with
(space, side) pairs.  ``side`` is "row" or "col"; a slot carrying both
sides is an operator on that space, a col-only slot is a covector (row
vector), a row-only slot is a vector.  Composition contracts, for every
space the two factors share, the left factor's col axis against the
right factor's row axis, and tensors everything else.  With covectors
fixed as row vectors this reproduces the usual conventions: operator
products compose left to right and covector x operator = covector.

Evaluation points are part of a space's identity, so slots at x and at
x q^-2 can never be contracted against each other by accident.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from . import kernels
from .errors import QsovError
from .exactnum import Q, Scalar, is_scalar, scalar_to_str

ROW = "row"
COL = "col"

KIND_QUANTUM = "H"
KIND_FULL = "V"
KIND_AUX = "v"
KIND_FUSED = "w"


class DuplicateSpace(QsovError):
    """Two slots over the same space would collide on the same side."""


class ShapeMismatch(QsovError):
    """Slot dimensions (or axis sets) are incompatible."""


class EvaluationPointMismatch(QsovError):
    """Slots share a name but sit at different evaluation points."""


class SingularMatrix(QsovError):
    """Exact inverse requested for a singular matrix."""


_space_counter = itertools.count()


@dataclass(frozen=True)
class LabeledSpace:
    """A tensor factor: unique name, role kind, dimension, evaluation point."""

    name: str
    kind: str
    dim: int
    point: Optional[Scalar] = None
    level: Optional[int] = None  # fusion level for kind "w"

    def __repr__(self):
        pt = "" if self.point is None else f"@{self.point}"
        return f"<{self.kind}:{self.name}{pt} dim={self.dim}>"


def quantum_space(dim: int, name: str = "H") -> LabeledSpace:
    return LabeledSpace(name, KIND_QUANTUM, dim)


def full_slot(point: Scalar, dim: int, name: str | None = None) -> LabeledSpace:
    name = name or f"V{next(_space_counter)}"
    return LabeledSpace(name, KIND_FULL, dim, Q(point))


def aux_slot(point: Scalar, dim: int, name: str | None = None) -> LabeledSpace:
    name = name or f"v{next(_space_counter)}"
    return LabeledSpace(name, KIND_AUX, dim, Q(point))


def fused_slot(point: Scalar, dim: int, level: int, name: str | None = None) -> LabeledSpace:
    name = name or f"w{next(_space_counter)}"
    return LabeledSpace(name, KIND_FUSED, dim, Q(point), level)


class Axis(NamedTuple):
    space: LabeledSpace
    side: str


def _check_consistent(s1: LabeledSpace, s2: LabeledSpace):
    if s1.name != s2.name:
        return
    if s1.dim != s2.dim:
        raise ShapeMismatch(f"space {s1.name}: dims {s1.dim} != {s2.dim}")
    if s1.point != s2.point:
        raise EvaluationPointMismatch(
            f"space {s1.name}: points {s1.point} != {s2.point}"
        )


def asarray_scalars(data) -> np.ndarray:
    """Object ndarray with every entry normalized to a Scalar."""
    arr = np.empty(np.shape(data), dtype=object)
    src = np.asarray(data, dtype=object)
    for idx, value in np.ndenumerate(src):
        arr[idx] = value if is_scalar(value) else Q(value)
    return arr


class OpTensor:
    """Dense exact tensor over an ordered list of (space, side) axes."""

    __slots__ = ("axes", "data")

    def __init__(self, axes: Sequence[Axis], data: np.ndarray, *, normalize: bool = False):
        axes = tuple(Axis(*a) for a in axes)
        if normalize:
            data = asarray_scalars(data)
        data = np.asarray(data, dtype=object)
        if data.shape != tuple(ax.space.dim for ax in axes):
            raise ShapeMismatch(
                f"data shape {data.shape} does not match axes "
                f"{[(ax.space.name, ax.side, ax.space.dim) for ax in axes]}"
            )
        seen = {}
        for ax in axes:
            key = (ax.space.name, ax.side)
            if key in seen:
                raise DuplicateSpace(f"duplicate axis {key}")
            seen[key] = ax
            for other in axes:
                _check_consistent(ax.space, other.space)
        self.axes = axes
        self.data = data

    # -- inspection -------------------------------------------------------

    def axis_index(self, space_name: str, side: str) -> int:
        for i, ax in enumerate(self.axes):
            if ax.space.name == space_name and ax.side == side:
                return i
        raise KeyError((space_name, side))

    def has_axis(self, space_name: str, side: str) -> bool:
        return any(ax.space.name == space_name and ax.side == side for ax in self.axes)

    def spaces(self) -> dict[str, LabeledSpace]:
        return {ax.space.name: ax.space for ax in self.axes}

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.data.flat)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OpTensor):
            return NotImplemented
        try:
            aligned = other.align_to(self)
        except (ShapeMismatch, KeyError):
            return False
        return bool((self.data == aligned.data).all())

    def __hash__(self):  # pragma: no cover - tensors are not dict keys
        return id(self)

    # -- structural ops ---------------------------------------------------

    def permute(self, order: Sequence[int]) -> "OpTensor":
        if sorted(order) != list(range(len(self.axes))):
            raise ShapeMismatch(f"invalid permutation {order}")
        axes = tuple(self.axes[i] for i in order)
        return OpTensor(axes, np.transpose(self.data, order))

    def align_to(self, template: "OpTensor") -> "OpTensor":
        """Permute axes to match the template's (space, side) ordering."""
        if len(self.axes) != len(template.axes):
            raise ShapeMismatch(
                f"axis count {len(self.axes)} != {len(template.axes)}"
            )
        order = []
        for ax in template.axes:
            order.append(self.axis_index(ax.space.name, ax.side))
        if len(set(order)) != len(order):
            raise ShapeMismatch("axis sets do not match")
        return self.permute(order)

    def scale(self, scalar: Scalar) -> "OpTensor":
        scalar = scalar if is_scalar(scalar) else Q(scalar)
        return OpTensor(self.axes, self.data * scalar)

    def __neg__(self) -> "OpTensor":
        return self.scale(Q(-1))

    def __add__(self, other: "OpTensor") -> "OpTensor":
        aligned = other.align_to(self)
        return OpTensor(self.axes, self.data + aligned.data)

    def __sub__(self, other: "OpTensor") -> "OpTensor":
        aligned = other.align_to(self)
        return OpTensor(self.axes, self.data - aligned.data)

    # -- matrix views -----------------------------------------------------

    def to_matrix(self, row_keys: Sequence[tuple[str, str]], col_keys: Sequence[tuple[str, str]]) -> np.ndarray:
        """Flatten to 2-D with the given (space, side) keys as rows/cols."""
        order = [self.axis_index(*k) for k in row_keys] + [self.axis_index(*k) for k in col_keys]
        if sorted(order) != list(range(len(self.axes))):
            raise ShapeMismatch("row/col keys must cover all axes exactly once")
        moved = np.transpose(self.data, order)
        rdim = int(np.prod([self.axes[i].space.dim for i in order[: len(row_keys)]], initial=1))
        cdim = int(np.prod([self.axes[i].space.dim for i in order[len(row_keys):]], initial=1))
        return moved.reshape(rdim, cdim)

    def squeeze_slot(self, space_name: str) -> "OpTensor":
        """Drop a dim-1 slot (all of its axes), keeping the single fiber."""
        keep, taker = [], []
        for i, ax in enumerate(self.axes):
            if ax.space.name == space_name:
                if ax.space.dim != 1:
                    raise ShapeMismatch(f"slot {space_name} has dim {ax.space.dim} != 1")
                taker.append(i)
            else:
                keep.append(i)
        idx = tuple(0 if i in taker else slice(None) for i in range(len(self.axes)))
        return OpTensor(tuple(self.axes[i] for i in keep), self.data[idx])

    # -- serialization ----------------------------------------------------

    def to_debug_dict(self) -> dict:
        return {
            "axes": [
                {
                    "space": ax.space.name,
                    "kind": ax.space.kind,
                    "dim": ax.space.dim,
                    "point": None if ax.space.point is None else scalar_to_str(ax.space.point),
                    "side": ax.side,
                }
                for ax in self.axes
            ],
            "entries": [scalar_to_str(v) for v in self.data.reshape(-1)],
        }

    def to_debug_json(self) -> str:
        return json.dumps(self.to_debug_dict(), indent=2)


# -- constructors ----------------------------------------------------------


def identity(spaces: LabeledSpace | Sequence[LabeledSpace]) -> OpTensor:
    if isinstance(spaces, LabeledSpace):
        spaces = [spaces]
    axes = [Axis(s, ROW) for s in spaces] + [Axis(s, COL) for s in spaces]
    dim = int(np.prod([s.dim for s in spaces], initial=1))
    eye = np.empty((dim, dim), dtype=object)
    zero, one = Q(0), Q(1)
    eye[...] = zero
    for i in range(dim):
        eye[i, i] = one
    shape = tuple(s.dim for s in spaces) * 2
    return OpTensor(axes, eye.reshape(shape))


def scalar_tensor(value: Scalar) -> OpTensor:
    return OpTensor((), asarray_scalars(np.array(value, dtype=object)))


def operator_on(spaces: LabeledSpace | Sequence[LabeledSpace], matrix) -> OpTensor:
    """Square matrix (product-of-dims sized) as an operator on the slots."""
    if isinstance(spaces, LabeledSpace):
        spaces = [spaces]
    dims = [s.dim for s in spaces]
    dim = int(np.prod(dims, initial=1))
    arr = asarray_scalars(matrix)
    if arr.shape != (dim, dim):
        raise ShapeMismatch(f"matrix shape {arr.shape}, expected {(dim, dim)}")
    axes = [Axis(s, ROW) for s in spaces] + [Axis(s, COL) for s in spaces]
    return OpTensor(axes, arr.reshape(tuple(dims) * 2))


def covector_on(space: LabeledSpace, entries) -> OpTensor:
    arr = asarray_scalars(entries)
    if arr.shape != (space.dim,):
        raise ShapeMismatch(f"covector shape {arr.shape}, expected ({space.dim},)")
    return OpTensor((Axis(space, COL),), arr)


def vector_on(space: LabeledSpace, entries) -> OpTensor:
    arr = asarray_scalars(entries)
    if arr.shape != (space.dim,):
        raise ShapeMismatch(f"vector shape {arr.shape}, expected ({space.dim},)")
    return OpTensor((Axis(space, ROW),), arr)


# -- composition -----------------------------------------------------------


def compose(a: OpTensor, b: OpTensor, on: Optional[Iterable[str]] = None) -> OpTensor:
    """Contract a's col axes against b's row axes on shared spaces.

    ``on`` optionally restricts which shared spaces are contracted; any
    shared space left uncontracted must not collide side-wise.
    """
    a_spaces = a.spaces()
    b_spaces = b.spaces()
    shared = set(a_spaces) & set(b_spaces)
    for name in shared:
        _check_consistent(a_spaces[name], b_spaces[name])
    contract = []
    for name in shared:
        if on is not None and name not in set(on):
            continue
        if a.has_axis(name, COL) and b.has_axis(name, ROW):
            contract.append(name)
    a_idx = [a.axis_index(n, COL) for n in contract]
    b_idx = [b.axis_index(n, ROW) for n in contract]

    a_keep = [i for i in range(len(a.axes)) if i not in set(a_idx)]
    b_keep = [i for i in range(len(b.axes)) if i not in set(b_idx)]
    out_axes = [a.axes[i] for i in a_keep] + [b.axes[i] for i in b_keep]
    seen = set()
    for ax in out_axes:
        key = (ax.space.name, ax.side)
        if key in seen:
            raise DuplicateSpace(f"composition collides on {key}")
        seen.add(key)

    ta = np.transpose(a.data, a_keep + a_idx)
    tb = np.transpose(b.data, b_idx + b_keep)
    rows = int(np.prod([a.axes[i].space.dim for i in a_keep], initial=1))
    mid = int(np.prod([a.axes[i].space.dim for i in a_idx], initial=1))
    cols = int(np.prod([b.axes[i].space.dim for i in b_keep], initial=1))
    flat = kernels.matmul(
        np.ascontiguousarray(ta.reshape(rows, mid)),
        np.ascontiguousarray(tb.reshape(mid, cols)),
    )
    shape = tuple(a.axes[i].space.dim for i in a_keep) + tuple(b.axes[i].space.dim for i in b_keep)
    return OpTensor(out_axes, flat.reshape(shape))


def compose_chain(*tensors: OpTensor) -> OpTensor:
    out = tensors[0]
    for t in tensors[1:]:
        out = compose(out, t)
    return out


def tensor_product(a: OpTensor, b: OpTensor) -> OpTensor:
    if set(a.spaces()) & set(b.spaces()):
        raise DuplicateSpace(
            f"tensor_product requires disjoint spaces, shared: {set(a.spaces()) & set(b.spaces())}"
        )
    data = np.multiply.outer(a.data, b.data)
    return OpTensor(a.axes + b.axes, data)


def contract_covector(xi: OpTensor, a: OpTensor, slot: Optional[str] = None) -> OpTensor:
    """Apply a covector to an operator slot; the result is again a covector."""
    return compose(xi, a, on=None if slot is None else [slot])


# -- exact linear algebra ---------------------------------------------------


def _as_int_matrix(mat: np.ndarray):
    """Clear denominators row-wise (row operations are insensitive to row scaling)."""
    import math

    out = [[None] * mat.shape[1] for _ in range(mat.shape[0])]
    for i in range(mat.shape[0]):
        den = 1
        for j in range(mat.shape[1]):
            d = int(mat[i, j].denominator)
            den = den * d // math.gcd(den, d)
        for j in range(mat.shape[1]):
            e = mat[i, j]
            out[i][j] = int(e.numerator) * (den // int(e.denominator))
    return out


def rank(mat: np.ndarray) -> int:
    """Exact rank via fraction-free (Bareiss) elimination."""
    m = _as_int_matrix(asarray_scalars(mat))
    n_rows = len(m)
    n_cols = len(m[0]) if n_rows else 0
    prev = 1
    piv_r = 0
    for piv_c in range(n_cols):
        if piv_r >= n_rows:
            break
        pivot_row = None
        for r in range(piv_r, n_rows):
            if m[r][piv_c] != 0:
                pivot_row = r
                break
        if pivot_row is None:
            continue
        m[piv_r], m[pivot_row] = m[pivot_row], m[piv_r]
        pivot = m[piv_r][piv_c]
        for r in range(piv_r + 1, n_rows):
            for c in range(piv_c + 1, n_cols):
                m[r][c] = (pivot * m[r][c] - m[r][piv_c] * m[piv_r][c]) // prev
            m[r][piv_c] = 0
        prev = pivot
        piv_r += 1
    return piv_r


def rref(mat: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Exact reduced row echelon form; returns (R, pivot column indices)."""
    m = asarray_scalars(mat).copy()
    n_rows, n_cols = m.shape
    pivots = []
    r = 0
    for c in range(n_cols):
        if r >= n_rows:
            break
        pivot_row = None
        for rr in range(r, n_rows):
            if m[rr, c] != 0:
                pivot_row = rr
                break
        if pivot_row is None:
            continue
        if pivot_row != r:
            m[[r, pivot_row]] = m[[pivot_row, r]]
        m[r] = m[r] * (Q(1) / m[r, c])
        for rr in range(n_rows):
            if rr != r and m[rr, c] != 0:
                m[rr] = m[rr] - m[rr, c] * m[r]
        pivots.append(c)
        r += 1
    return m, pivots


def inverse(mat: np.ndarray) -> np.ndarray:
    mat = asarray_scalars(mat)
    n = mat.shape[0]
    if mat.shape != (n, n):
        raise ShapeMismatch(f"inverse needs a square matrix, got {mat.shape}")
    aug = np.concatenate([mat, identity_matrix(n)], axis=1)
    red, pivots = rref(aug)
    if len(pivots) < n or pivots[:n] != list(range(n)):
        raise SingularMatrix("matrix is singular")
    return red[:, n:]


def identity_matrix(n: int) -> np.ndarray:
    eye = np.empty((n, n), dtype=object)
    eye[...] = Q(0)
    for i in range(n):
        eye[i, i] = Q(1)
    return eye


def solve_xa_eq_b(a: np.ndarray, b: np.ndarray) -> Optional[np.ndarray]:
    """Exact solve of X A = B (A: m x n, B: p x n, X: p x m), or None.

    Free variables are set to zero, giving the least-structure solution.
    """
    a = asarray_scalars(a)
    b = asarray_scalars(b)
    m, n = a.shape
    p, n2 = b.shape
    if n != n2:
        raise ShapeMismatch(f"column mismatch: {a.shape} vs {b.shape}")
    # transpose: A^T X^T = B^T, eliminate on [A^T | B^T]
    aug = np.concatenate([a.T, b.T], axis=1)
    red, pivots = rref(aug)
    pivots_a = [c for c in pivots if c < m]
    # rows whose pivot landed in the B block signal inconsistency
    if any(c >= m for c in pivots):
        return None
    x_t = np.empty((m, p), dtype=object)
    x_t[...] = Q(0)
    for r, c in enumerate(pivots_a):
        x_t[c] = red[r, m:]
    return x_t.T


def nullspace(mat: np.ndarray) -> list[np.ndarray]:
    """Exact basis of the right kernel {v : M v = 0}."""
    mat = asarray_scalars(mat)
    red, pivots = rref(mat)
    n_cols = mat.shape[1]
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for fc in free:
        v = np.empty(n_cols, dtype=object)
        v[...] = Q(0)
        v[fc] = Q(1)
        for r, pc in enumerate(pivots):
            v[pc] = -red[r, fc]
        basis.append(v)
    return basis


def determinant(mat: np.ndarray) -> Scalar:
    """Exact determinant via fraction-free elimination with denominator tracking."""
    import math

    mat = asarray_scalars(mat)
    n = mat.shape[0]
    if mat.shape != (n, n):
        raise ShapeMismatch("determinant needs a square matrix")
    if n == 0:
        return Q(1)
    m = [[None] * n for _ in range(n)]
    den = Q(1)
    for i in range(n):
        row_den = 1
        for j in range(n):
            d = int(mat[i, j].denominator)
            row_den = row_den * d // math.gcd(row_den, d)
        den = den * row_den
        for j in range(n):
            e = mat[i, j]
            m[i][j] = int(e.numerator) * (row_den // int(e.denominator))
    sign = 1
    prev = 1
    for k in range(n - 1):
        if m[k][k] == 0:
            swap = None
            for r in range(k + 1, n):
                if m[r][k] != 0:
                    swap = r
                    break
            if swap is None:
                return Q(0)
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[k][k] * m[i][j] - m[i][k] * m[k][j]) // prev
            m[i][k] = 0
        prev = m[k][k]
    return Q(sign * m[n - 1][n - 1]) / den


def image_basis(p: np.ndarray) -> list[np.ndarray]:
    """Exact column-space basis (deterministic: RREF of the transpose).

    Each basis vector has leading coefficient 1 at its pivot position;
    vectors are ordered by pivot, i.e. lexicographically by the flat
    index of the constituents.
    """
    p = asarray_scalars(p)
    red, pivots = rref(p.T)
    return [red[r].copy() for r in range(len(pivots))]


def solve_exact(a: OpTensor, b: OpTensor):
    """OpTensor-level X A = B over the shared col-axis structure.

    A's and B's col axes must agree (same spaces and sides); the result X
    carries B's row axes as rows and A's row axes as cols, so for
    End(H)-valued operands X is again an operator on H.  Returns None
    when B's rows are not in the row space of A.
    """
    col_keys = sorted((ax.space.name, ax.side) for ax in a.axes if ax.side == COL)
    col_keys_b = sorted((ax.space.name, ax.side) for ax in b.axes if ax.side == COL)
    if col_keys != col_keys_b:
        raise ShapeMismatch(f"col axes differ: {col_keys} vs {col_keys_b}")
    a_rows = [(ax.space.name, ax.side) for ax in a.axes if ax.side == ROW]
    b_rows = [(ax.space.name, ax.side) for ax in b.axes if ax.side == ROW]
    a2 = a.to_matrix(a_rows, col_keys)
    b2 = b.to_matrix(b_rows, col_keys)
    x2 = solve_xa_eq_b(a2, b2)
    if x2 is None:
        return None
    x_axes = [Axis(b.axes[b.axis_index(*k)].space, ROW) for k in b_rows]
    x_axes += [Axis(a.axes[a.axis_index(*k)].space, COL) for k in a_rows]
    shape = tuple(ax.space.dim for ax in x_axes)
    return OpTensor(tuple(x_axes), x2.reshape(shape))
