"""q-antisymmetrizer projectors, fused modules, and fused R-matrices.

The level-k projector acts on k vector slots whose evaluation points
descend by q^2 from right to left: slot j (0-based) sits at
x q^{-2(k-1-j)}, so the rightmost slot is unshifted.  The recurrence
multiplies the elementary R-matrices coupling the new leftmost slot to
every older slot, then the previous projector on the older slots; since
each elementary factor is homogeneous of degree one and both its points
are proportional to x, the x^{-(k-1)} prefactor cancels the homogeneity
and the projector is a constant matrix (checked by building it at two
points).  The raw recurrence yields a multiple of an idempotent; we
rescale and record the scalar.

Fused R-matrices are products of elementary factors restricted to the
fused bases.  The factor ordering is frozen by two exact anchors: the
restriction must commute with the projectors on both sides, and the
fused matrix against the one-dimensional top module must reproduce the
scalar rho_l.  See tests for the anchor checks at several sizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb

import numpy as np

from . import kernels
from .errors import QsovError
from .exactnum import Q, QParam, Scalar, qpow
from .rmatrix import r_trig
from .tensorspace import (
    Axis,
    COL,
    LabeledSpace,
    OpTensor,
    ROW,
    aux_slot,
    compose,
    compose_chain,
    fused_slot,
    identity_matrix,
    image_basis,
    solve_xa_eq_b,
)


class NonProjector(QsovError):
    """The antisymmetrizer recurrence did not yield a multiple of a projector."""


class ProjectorLeak(QsovError):
    """A fused restriction failed to commute with the defining projectors."""


def _q_of(q) -> Scalar:
    return q.q if isinstance(q, QParam) else Q(q)


def constituent_points(k: int, x: Scalar, q: Scalar) -> list[Scalar]:
    """Evaluation points of the k constituent slots, leftmost most shifted."""
    return [x * qpow(q, -2 * (k - 1 - j)) for j in range(k)]


def constituent_slots(k: int, x: Scalar, q: Scalar, dim: int) -> list[LabeledSpace]:
    return [aux_slot(pt, dim) for pt in constituent_points(k, x, q)]


def _antisym_recurrence(k: int, m: int, q: Scalar, x: Scalar) -> np.ndarray:
    """Raw (unrescaled) recurrence value as an m^k x m^k matrix."""
    if k == 1:
        return identity_matrix(m)
    slots = constituent_slots(k, x, q, m)
    factors = [r_trig(slots[0], slots[j], q) for j in range(1, k)]
    prev = _antisym_recurrence(k - 1, m, q, x)
    prev_shape = (m,) * (2 * (k - 1))
    prev_axes = [Axis(s, ROW) for s in slots[1:]] + [Axis(s, COL) for s in slots[1:]]
    prev_tensor = OpTensor(prev_axes, prev.reshape(prev_shape))
    product = compose_chain(*factors, prev_tensor).scale(qpow(x, -(k - 1)))
    row_keys = [(s.name, ROW) for s in slots]
    col_keys = [(s.name, COL) for s in slots]
    return product.to_matrix(row_keys, col_keys)


def _rescale_to_idempotent(a: np.ndarray):
    """Return (p, c) with p = a / c idempotent, or raise NonProjector."""
    a2 = kernels.matmul(a, a)
    pivot = None
    for idx, value in np.ndenumerate(a):
        if value != 0:
            pivot = idx
            break
    if pivot is None:
        return a, Q(1)  # zero operator: already idempotent
    c = a2[pivot] / a[pivot]
    if c == 0 or not (a2 == a * c).all():
        raise NonProjector("recurrence result is not proportional to a projector")
    return a * (Q(1) / c), c


@lru_cache(maxsize=None)
def antisymmetrizer_data(k: int, m: int, q: Scalar):
    """(projector matrix, rescale scalar) for level k on m-dim slots; x-independent."""
    if not 1 <= k <= m + 1:
        raise ValueError(f"antisymmetrizer needs 1 <= k <= {m + 1}, got {k}")
    raw = _antisym_recurrence(k, m, q, Q(1))
    raw_alt = _antisym_recurrence(k, m, q, Q(17, 3))
    if not (raw == raw_alt).all():
        raise NonProjector("recurrence is not independent of the evaluation point")
    return _rescale_to_idempotent(raw)


def antisymmetrizer(k: int, m: int, q) -> np.ndarray:
    """Idempotent q-antisymmetrizer on k slots of dimension m (raw matrix)."""
    return antisymmetrizer_data(k, m, _q_of(q))[0]


@lru_cache(maxsize=None)
def fused_basis_data(k: int, m: int, q: Scalar):
    """(embed S: m^k x r, project T: r x m^k) with T S = I and S T = p."""
    p = antisymmetrizer_data(k, m, q)[0]
    basis = image_basis(p)
    expected = comb(m, k)
    if len(basis) != expected:
        raise NonProjector(
            f"projector rank {len(basis)} != binomial({m},{k}) = {expected}"
        )
    if expected == 0:
        return np.empty((p.shape[0], 0), dtype=object), np.empty((0, p.shape[0]), dtype=object)
    s = np.stack(basis, axis=1)
    # T = S^+ p : solve S T = p column-wise; exact because im p = im S
    t = solve_xa_eq_b(s.T, p.T)
    if t is None:
        raise ProjectorLeak("projector columns escape the span of the image basis")
    return s, t.T


@dataclass(frozen=True)
class FusedModule:
    """Level-k fused module at point x inside k shifted vector slots."""

    k: int
    m: int  # constituent slot dimension
    q: Scalar
    x: Scalar
    space: LabeledSpace
    constituents: tuple[LabeledSpace, ...]
    projector: np.ndarray
    embed: np.ndarray  # m^k x dim, columns = basis of the image
    project: np.ndarray  # dim x m^k, project . embed = identity
    scale: Scalar  # idempotency rescale recorded for audit

    @property
    def dim(self) -> int:
        return self.space.dim

    def projector_tensor(self) -> OpTensor:
        shape = (self.m,) * (2 * self.k)
        axes = [Axis(s, ROW) for s in self.constituents] + [
            Axis(s, COL) for s in self.constituents
        ]
        return OpTensor(axes, self.projector.reshape(shape))

    def embed_tensor(self) -> OpTensor:
        """Rows on the constituents, col on the fused slot (maps fused -> big)."""
        axes = [Axis(s, ROW) for s in self.constituents] + [Axis(self.space, COL)]
        shape = (self.m,) * self.k + (self.dim,)
        return OpTensor(axes, self.embed.reshape(shape))

    def project_tensor(self) -> OpTensor:
        """Row on the fused slot, cols on the constituents (maps big -> fused)."""
        axes = [Axis(self.space, ROW)] + [Axis(s, COL) for s in self.constituents]
        shape = (self.dim,) + (self.m,) * self.k
        return OpTensor(axes, self.project.reshape(shape))


def build_fused_module(
    k: int,
    m: int,
    q,
    x: Scalar,
    constituents: tuple[LabeledSpace, ...] | None = None,
    name: str | None = None,
) -> FusedModule:
    q = _q_of(q)
    x = Q(x)
    p, scale = antisymmetrizer_data(k, m, q)
    s, t = fused_basis_data(k, m, q)
    if constituents is None:
        constituents = tuple(constituent_slots(k, x, q, m))
    else:
        pts = constituent_points(k, x, q)
        for slot, pt in zip(constituents, pts):
            if slot.point != pt or slot.dim != m:
                raise ValueError(
                    f"constituent {slot} incompatible with level-{k} module at {x}"
                )
    space = fused_slot(x, comb(m, k), k, name)
    return FusedModule(k, m, q, x, space, tuple(constituents), p, s, t, scale)


# -- fused R-matrices --------------------------------------------------------
#
# Factor ordering, frozen by the exact anchors (see module docstring): each
# sweep couples one source slot to the target constituents starting from the
# most shifted one, and for a fused source the sweeps start from its
# unshifted constituent.  This is the unique ordering (out of the four
# candidates) whose product maps the image of the defining projectors into
# itself at every size checked, which is what makes the restriction to the
# fused bases well defined; the rho_l scalar reduction then pins the overall
# normalization.


def _sweep(source: LabeledSpace, w: FusedModule, q: Scalar) -> OpTensor:
    return compose_chain(*[r_trig(source, s, q) for s in w.constituents])


def _check_preserves_image(big: OpTensor, projector: OpTensor, level: str):
    rp = compose(big, projector)
    if not ((compose(projector, rp) - rp).is_zero()):
        raise ProjectorLeak(
            f"fused R-matrix does not preserve the projector image ({level})"
        )


def fused_r_vw(vspace: LabeledSpace, w: FusedModule, q=None) -> OpTensor:
    """R-matrix on v(point) (x) w^k(x), restricted to the fused basis."""
    q = w.q if q is None else _q_of(q)
    if w.k == 1:
        return _relabel_axes(r_trig(vspace, w.constituents[0], q), w.constituents[0], w.space)
    big = _sweep(vspace, w, q)
    _check_preserves_image(big, w.projector_tensor(), f"level {w.k} target")
    return compose_chain(w.project_tensor(), big, w.embed_tensor())


def fused_r_ww(wl: FusedModule, wk: FusedModule) -> OpTensor:
    """R-matrix on w^l(y) (x) w^k(x), restricted on both sides."""
    if wl.q != wk.q:
        raise ValueError("fused modules must share q")
    q = wl.q
    big = compose_chain(*[_sweep(t, wk, q) for t in reversed(wl.constituents)])
    combined = compose(wl.projector_tensor(), wk.projector_tensor())
    _check_preserves_image(big, combined, f"levels {wl.k},{wk.k}")
    out = big
    if wk.k > 1:
        out = compose_chain(wk.project_tensor(), out, wk.embed_tensor())
    else:
        out = _relabel_axes(out, wk.constituents[0], wk.space)
    if wl.k > 1:
        out = compose_chain(wl.project_tensor(), out, wl.embed_tensor())
    else:
        out = _relabel_axes(out, wl.constituents[0], wl.space)
    return out


def _relabel_axes(tensor: OpTensor, old: LabeledSpace, new: LabeledSpace) -> OpTensor:
    if old.dim != new.dim:
        raise ValueError("relabel requires equal dims")
    axes = tuple(
        Axis(new, ax.side) if ax.space.name == old.name else ax for ax in tensor.axes
    )
    return OpTensor(axes, tensor.data)


def top_module(n: int, q, x: Scalar, constituents=None) -> FusedModule:
    """The one-dimensional level-(N-1) module on (N-1)-dim slots."""
    return build_fused_module(n - 1, n - 1, q, x, constituents)


def top_module_vector(n: int, q) -> np.ndarray:
    """Normalized basis vector of the one-dimensional top module.

    Leading (lexicographically first) nonzero coefficient is 1; its dual
    functional is the matching row of the projection map.
    """
    s, _ = fused_basis_data(n - 1, n - 1, _q_of(q))
    return s[:, 0].copy()


def top_module_functional(n: int, q) -> np.ndarray:
    _, t = fused_basis_data(n - 1, n - 1, _q_of(q))
    return t[0].copy()
