"""Concrete quantum space and L-operator with the triangular degree pattern.

The model is an inhomogeneous twisted chain: T(x) acts on the auxiliary
N-dimensional slot V0(x) tensored with H = V^(x)n, and is the product of
the trigonometric R-matrices coupling V0 to each site at its own
inhomogeneity, with a constant diagonal twist applied on V0.  Any such
product satisfies the quadratic exchange relation because the elementary
factors satisfy the Yang-Baxter equation, and the diagonal twist
commutes with the R-matrix on V0 (x) V0.

Blocks over the distinguished first basis vector of V:
a = scalar (1,1) entry, b = first row (covector over v), c = first
column, d = the remaining (N-1) x (N-1) matrix, all with entries in
End(H).  The degree pattern (strict upper part of degree <= n-1, diagonal
of degree n, strict lower part divisible by x of degree <= n) is enforced
at build time by exact interpolation and is what bounds deg B by g later.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, QsovError
from .exactnum import DEFAULT_Q, Q, QParam, Scalar, on_q_orbit, qpow, scalar_to_str
from .fusion import FusedModule, fused_r_vw
from .rmatrix import r_trig, s_pairing
from .tensorspace import (
    Axis,
    COL,
    LabeledSpace,
    OpTensor,
    ROW,
    aux_slot,
    compose,
    full_slot,
    operator_on,
    quantum_space,
)


class DegeneracyDetected(QsovError):
    """A degree or triangularity invariant of the model failed."""


class ResonanceDetected(QsovError):
    """A dressing slot sits on the q-power orbit of the operator's point."""


@dataclass(frozen=True)
class ModelConfig:
    N: int
    sites: int
    q: QParam
    inhomogeneities: tuple[Scalar, ...]
    twist: tuple[Scalar, ...]
    seed: int = 1

    def __post_init__(self):
        if self.N < 2:
            raise ConfigError(f"N must be >= 2, got {self.N}")
        if self.sites < 1:
            raise ConfigError(f"sites must be >= 1, got {self.sites}")
        if len(self.inhomogeneities) != self.sites:
            raise ConfigError(
                f"expected {self.sites} inhomogeneities, got {len(self.inhomogeneities)}"
            )
        if len(self.twist) != self.N:
            raise ConfigError(f"expected {self.N} twist entries, got {len(self.twist)}")
        for y in self.inhomogeneities:
            if y == 0:
                raise ConfigError("inhomogeneities must be nonzero")
        for i, yi in enumerate(self.inhomogeneities):
            for yj in self.inhomogeneities[i + 1 :]:
                if yi == yj:
                    raise ConfigError("inhomogeneities must be distinct")
                if on_q_orbit(yi, yj, self.q, 4 * self.N):
                    raise ConfigError(
                        f"inhomogeneities {yi}, {yj} lie on a common q^2m orbit"
                    )
        for t in self.twist:
            if t == 0:
                raise ConfigError("twist entries must be nonzero")
        if len(set(self.twist)) != self.N:
            raise ConfigError("twist entries must be distinct")
        if self.genus < 0:
            raise ConfigError("negative genus")

    @property
    def genus(self) -> int:
        num = (self.N - 1) * (self.N * self.sites - 2)
        assert num % 2 == 0
        return num // 2

    @property
    def dim_h(self) -> int:
        return self.N**self.sites

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "sites": self.sites,
            "q": scalar_to_str(self.q.q),
            "inhomogeneities": [scalar_to_str(y) for y in self.inhomogeneities],
            "twist": [scalar_to_str(t) for t in self.twist],
            "seed": self.seed,
        }


_PRIMES = (2, 3, 5, 7, 11, 13)


def default_config(N: int = 3, sites: int = 1, q: Scalar = DEFAULT_Q, seed: int = 1) -> ModelConfig:
    """Deterministic generic model: prime inhomogeneities, powers-of-3/2 twist."""
    t = Q(3, 2)
    return ModelConfig(
        N=N,
        sites=sites,
        q=QParam.for_model(Q(q), N, sites),
        inhomogeneities=tuple(Q(p) for p in _PRIMES[:sites]),
        twist=tuple(qpow(t, i) for i in range(N)),
        seed=seed,
    )


@dataclass
class Blocks:
    """a, b, c, d blocks of T(x) over a labeled (N-1)-dim slot."""

    x: Scalar
    vspace: LabeledSpace
    a: OpTensor  # End(H)
    b: OpTensor  # covector slot on v, End(H)-valued
    c: OpTensor  # vector slot on v, End(H)-valued
    d: OpTensor  # End(v) (x) End(H)


class LOperator:
    """Monodromy evaluator with cached exact values and block extraction."""

    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        self.N = cfg.N
        self.sites = cfg.sites
        self.q = cfg.q.q
        self.H = quantum_space(cfg.dim_h)
        self._t_cache: dict[Scalar, np.ndarray] = {}
        self._block_cache: dict[tuple[Scalar, str], Blocks] = {}
        self._verify_structure()

    # -- construction ------------------------------------------------------

    def t_matrix(self, x: Scalar) -> np.ndarray:
        """T(x) as an (N * dimH) square matrix, rows (V0, H) row-major."""
        x = Q(x)
        cached = self._t_cache.get(x)
        if cached is not None:
            return cached
        v0 = full_slot(x, self.N, "V0")
        site_spaces = [
            full_slot(y, self.N, f"site{i}")
            for i, y in enumerate(self.cfg.inhomogeneities, start=1)
        ]
        twist_mat = np.empty((self.N, self.N), dtype=object)
        twist_mat[...] = Q(0)
        for i, t in enumerate(self.cfg.twist):
            twist_mat[i, i] = t
        t_tensor = operator_on(v0, twist_mat)
        for i in range(self.sites, 0, -1):
            t_tensor = compose(t_tensor, r_trig(v0, site_spaces[i - 1], self.q))
        row_keys = [(v0.name, ROW)] + [(s.name, ROW) for s in site_spaces]
        col_keys = [(v0.name, COL)] + [(s.name, COL) for s in site_spaces]
        mat = t_tensor.to_matrix(row_keys, col_keys)
        self._t_cache[x] = mat
        return mat

    def as_tensor(self, x: Scalar, v0: LabeledSpace) -> OpTensor:
        mat = self.t_matrix(x)
        dim_h = self.cfg.dim_h
        axes = (Axis(v0, ROW), Axis(self.H, ROW), Axis(v0, COL), Axis(self.H, COL))
        return OpTensor(axes, mat.reshape(self.N, dim_h, self.N, dim_h))

    def blocks(self, x: Scalar, vspace: Optional[LabeledSpace] = None) -> Blocks:
        x = Q(x)
        if vspace is None:
            vspace = aux_slot(x, self.N - 1)
        key = (x, vspace.name)
        cached = self._block_cache.get(key)
        if cached is not None:
            return cached
        if vspace.dim != self.N - 1 or vspace.point != x:
            raise ConfigError(f"block slot {vspace} does not match point {x}")
        dim_h = self.cfg.dim_h
        t = self.t_matrix(x).reshape(self.N, dim_h, self.N, dim_h)
        h_axes = (Axis(self.H, ROW), Axis(self.H, COL))
        m = self.N - 1
        a = OpTensor(h_axes, t[0, :, 0, :])
        b = OpTensor((Axis(vspace, COL),) + h_axes, t[0, :, 1:, :].transpose(1, 0, 2))
        c = OpTensor((Axis(vspace, ROW),) + h_axes, t[1:, :, 0, :])
        d = OpTensor(
            (Axis(vspace, ROW), Axis(vspace, COL)) + h_axes,
            t[1:, :, 1:, :].transpose(0, 2, 1, 3),
        )
        blocks = Blocks(x, vspace, a, b, c, d)
        self._block_cache[key] = blocks
        return blocks

    # -- invariants --------------------------------------------------------

    def _entry_polynomials(self) -> np.ndarray:
        """Exact coefficient array, shape (sites+2, N*dimH, N*dimH)."""
        n = self.sites
        points = [Q(i) for i in range(1, n + 3)]
        values = [self.t_matrix(p) for p in points]
        return _lagrange_coefficients(points, values)

    def _verify_structure(self):
        n = self.sites
        dim_h = self.cfg.dim_h
        coeffs = self._entry_polynomials()
        top = coeffs[n + 1]
        if not all(v == 0 for v in top.flat):
            raise DegeneracyDetected("monodromy degree exceeds the site count")
        lead = coeffs[n].reshape(self.N, dim_h, self.N, dim_h)
        const = coeffs[0].reshape(self.N, dim_h, self.N, dim_h)
        for i in range(self.N):
            for j in range(self.N):
                if i < j and not all(v == 0 for v in lead[i, :, j, :].flat):
                    raise DegeneracyDetected(
                        "strict upper block has full degree; twist not generic"
                    )
                if i > j and not all(v == 0 for v in const[i, :, j, :].flat):
                    raise DegeneracyDetected("strict lower block does not vanish at 0")
            if all(v == 0 for v in lead[i, :, i, :].flat):
                raise DegeneracyDetected("diagonal block dropped degree")
        self._coeffs = coeffs

    # -- dressing ----------------------------------------------------------

    def dress(
        self,
        blocks: Blocks,
        aux,
        *,
        allow_resonance: bool = False,
    ) -> Blocks:
        """Multiply b and d by the R-matrix coupling their slot to aux.

        aux is either a LabeledSpace (plain vector slot) or a FusedModule.
        """
        r = self._dressing_r(blocks.vspace, aux, allow_resonance=allow_resonance)
        return Blocks(
            blocks.x,
            blocks.vspace,
            blocks.a,
            compose(blocks.b, r),
            blocks.c,
            compose(blocks.d, r),
        )

    def _dressing_r(self, vspace: LabeledSpace, aux, *, allow_resonance: bool = False) -> OpTensor:
        point = aux.x if isinstance(aux, FusedModule) else aux.point
        if not allow_resonance and on_q_orbit(vspace.point, point, self.q, 2 * self.N):
            raise ResonanceDetected(
                f"dressing slot at {point} resonates with operator point {vspace.point}"
            )
        if isinstance(aux, FusedModule):
            return fused_r_vw(vspace, aux)
        return r_trig(vspace, aux, self.q)


def build_model(cfg: ModelConfig) -> LOperator:
    return LOperator(cfg)


def _lagrange_coefficients(points: Sequence[Scalar], values: Sequence[np.ndarray]) -> np.ndarray:
    """Exact polynomial coefficients through (point, matrix) samples.

    Returns an array of len(points) coefficient matrices (degree
    len(points)-1 fit; trailing coefficients vanish when the data has
    lower degree).
    """
    npts = len(points)
    shape = values[0].shape
    coeffs = np.empty((npts,) + shape, dtype=object)
    coeffs[...] = Q(0)
    for s, (xs, val) in enumerate(zip(points, values)):
        # expand the Lagrange basis polynomial for sample s
        basis = [Q(1)]
        denom = Q(1)
        for t, xt in enumerate(points):
            if t == s:
                continue
            denom *= xs - xt
            new = [Q(0)] * (len(basis) + 1)
            for deg, cf in enumerate(basis):
                new[deg] -= cf * xt
                new[deg + 1] += cf
            basis = new
        inv = Q(1) / denom
        for deg, cf in enumerate(basis):
            if cf != 0:
                coeffs[deg] = coeffs[deg] + val * (cf * inv)
    return coeffs


# -- exchange-relation checks ------------------------------------------------


@dataclass
class CommReport:
    bb: bool
    dd: bool
    bd: bool
    component: bool

    @property
    def all_zero(self) -> bool:
        return self.bb and self.dd and self.bd and self.component


def rtt_check(model: LOperator, x: Scalar, y: Scalar) -> bool:
    """Exact R T T = T T R residual on V(x) (x) V(y) (x) H."""
    x, y = Q(x), Q(y)
    v1 = full_slot(x, model.N)
    v2 = full_slot(y, model.N)
    r = r_trig(v1, v2, model.q)
    t1 = model.as_tensor(x, v1)
    t2 = model.as_tensor(y, v2)
    lhs = compose(compose(r, t1), t2)
    rhs = compose(compose(t2, t1), r)
    return (lhs - rhs).is_zero()


def comm_relation_residuals(
    bx: Blocks, by: Blocks, q: Scalar
) -> tuple[OpTensor, OpTensor, OpTensor]:
    """Exact residual tensors of the three exchange relations.

    Works for raw and dressed blocks alike: any carried slots simply ride
    along in the residual.
    """
    x, y = bx.x, by.x
    sx, sy = bx.vspace, by.vspace
    r = r_trig(sx, sy, q)
    s = s_pairing(sx, sy)
    bb = compose(bx.b, by.b).scale(x * q - y / q) - compose(compose(by.b, bx.b), r)
    dd = compose(r, compose(bx.d, by.d)) - compose(compose(by.d, bx.d), r)
    bd = (
        compose(bx.b, by.d).scale(x - y)
        + compose(compose(s, bx.d), by.b).scale(y * (q - 1 / q))
        - compose(compose(by.d, bx.b), r)
    )
    return bb, dd, bd


def comm_check(model: LOperator, x: Scalar, y: Scalar) -> CommReport:
    """Exact residuals of the exchange relations plus the component form.

    The component check re-evaluates the third relation index by index
    from plain End(H) matrices, independent of the tensor machinery.
    """
    x, y = Q(x), Q(y)
    q = model.q
    bx = model.blocks(x)
    by = model.blocks(y)
    bb, dd, bd = comm_relation_residuals(bx, by, q)

    m = model.N - 1
    h_keys_row = [(model.H.name, ROW)]
    h_keys_col = [(model.H.name, COL)]
    b_x = [bx.b.to_matrix(h_keys_row, [(bx.vspace.name, COL)] + h_keys_col)
           .reshape(model.cfg.dim_h, m, model.cfg.dim_h)[:, i, :] for i in range(m)]
    b_y = [by.b.to_matrix(h_keys_row, [(by.vspace.name, COL)] + h_keys_col)
           .reshape(model.cfg.dim_h, m, model.cfg.dim_h)[:, i, :] for i in range(m)]
    d_x = _d_entries(bx, model)
    d_y = _d_entries(by, model)
    rmat = r_trig(bx.vspace, by.vspace, q).to_matrix(
        [(bx.vspace.name, ROW), (by.vspace.name, ROW)],
        [(bx.vspace.name, COL), (by.vspace.name, COL)],
    )
    from . import kernels

    component_ok = True
    weight = y * (q - 1 / q)
    for i in range(m):
        for j in range(m):
            for k in range(m):
                lhs = kernels.matmul(b_x[i], d_y[k][j]) * (x - y) + kernels.matmul(
                    d_x[k][i], b_y[j]
                ) * weight
                rhs = np.zeros_like(lhs)
                for l in range(m):
                    for mm in range(m):
                        coeff = rmat[l * m + mm, i * m + j]
                        if coeff != 0:
                            rhs = rhs + kernels.matmul(d_y[k][mm], b_x[l]) * coeff
                if not (lhs == rhs).all():
                    component_ok = False
    return CommReport(bb.is_zero(), dd.is_zero(), bd.is_zero(), component_ok)


def _d_entries(blocks: Blocks, model: LOperator):
    """d[k][j]: End(H) matrix at row k, column j of the d block."""
    m = model.N - 1
    dim_h = model.cfg.dim_h
    d = blocks.d.to_matrix(
        [(blocks.vspace.name, ROW), (model.H.name, ROW)],
        [(blocks.vspace.name, COL), (model.H.name, COL)],
    ).reshape(m, dim_h, m, dim_h)
    return [[d[k, :, j, :] for j in range(m)] for k in range(m)]
