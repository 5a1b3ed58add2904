"""Exact rational scalars and the C-number structure functions.

Every exact computation in this package runs over arbitrary-precision
rationals: gmpy2's ``mpq`` when available (much faster), otherwise
``fractions.Fraction``.  Both normalize to lowest terms with a positive
denominator, so the Scalar invariants hold by construction and no
operation ever rounds.

The module also houses all scalar structure functions of the operator
identities (kappa, phi, chi, psi, rho, sigma) and the scalar identity
that makes the B-family commute.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .errors import ConfigError, QsovError

_FORCE_FRACTION = os.environ.get("QSOV_SCALAR", "").lower() == "fraction"

try:
    if _FORCE_FRACTION:
        raise ImportError
    from gmpy2 import mpq as _mpq

    _SCALAR_CTOR = _mpq
    SCALAR_BACKEND = "gmpy2"
except ImportError:  # pragma: no cover - exercised via QSOV_SCALAR=fraction
    _SCALAR_CTOR = Fraction
    SCALAR_BACKEND = "fraction"

Scalar = Union["_mpq", Fraction]  # runtime duck type; see Q()


class PoleAtEqualArguments(QsovError):
    """kappa(x, y) evaluated on its pole locus x = y."""


class PoleInPsi(QsovError):
    """A factor of psi vanishes, so the product of inverses is undefined."""


def Q(num, den=None) -> Scalar:
    """Construct an exact rational scalar.

    Accepts ints, existing scalars, and strings like ``"7/5"`` or ``"-3"``.
    """
    if den is not None:
        return _SCALAR_CTOR(num) / _SCALAR_CTOR(den)
    if isinstance(num, str):
        text = num.strip()
        if "/" in text:
            p, q = text.split("/", 1)
            return _SCALAR_CTOR(int(p)) / _SCALAR_CTOR(int(q))
        return _SCALAR_CTOR(int(text))
    return _SCALAR_CTOR(num)


ZERO = Q(0)
ONE = Q(1)
DEFAULT_Q = Q(7, 5)


def is_scalar(value) -> bool:
    return isinstance(value, (Fraction, type(ZERO)))


def scalar_to_str(value: Scalar) -> str:
    """Serialize as ``"p/q"`` (or ``"p"`` when the denominator is 1)."""
    return str(value)


def qpow(base: Scalar, exponent: int) -> Scalar:
    """Exact integer power, negative exponents allowed."""
    if exponent >= 0:
        return base**exponent
    return ONE / base ** (-exponent)


@dataclass(frozen=True)
class QParam:
    """Deformation parameter with a genericity window.

    ``q**m != 1`` is required for every ``2 <= m <= window`` so that no
    root-of-unity degeneration can silently collapse a fused module or a
    structure-function denominator at the configured sizes.
    """

    q: Scalar
    window: int = 24

    def __post_init__(self):
        q = self.q
        if q == 0 or q == 1 or q == -1:
            raise ConfigError(f"q must avoid {{0, 1, -1}}, got {q}")
        power = q
        for m in range(2, self.window + 1):
            power = power * q
            if power == 1:
                raise ConfigError(f"q is a root of unity: q**{m} == 1")

    @classmethod
    def for_model(cls, q: Scalar, N: int, sites: int) -> "QParam":
        return cls(Q(q), window=2 * N * (sites + 2))


def _q_of(q) -> Scalar:
    return q.q if isinstance(q, QParam) else q


def kappa(x: Scalar, y: Scalar, q) -> Scalar:
    """(x q^2 - y)(x q^-2 - y) / (x - y); antisymmetric under x <-> y."""
    q = _q_of(q)
    if x == y:
        raise PoleAtEqualArguments(f"kappa pole at x = y = {x}")
    return (x * qpow(q, 2) - y) * (x * qpow(q, -2) - y) / (x - y)


def phi(k: int, x: Scalar, y: Scalar, N: int, q) -> Scalar:
    """Scalar picked up by one fused covector block under a top-module slot.

    Double product over the block's shift depth j and the inner factor
    index i; the exponent k - j counts how many constituent blocks sit at
    shift depth j.
    """
    if not 1 <= k <= N - 1:
        raise ValueError(f"phi requires 1 <= k <= N-1, got k={k}, N={N}")
    q = _q_of(q)
    total = ONE
    for j in range(k):
        factor = x * qpow(q, -(2 * j + 1)) - y * qpow(q, 1 - 2 * N)
        for i in range(N - 2):
            factor *= x * qpow(q, -2 * j) - y * qpow(q, -2 * i)
        total *= qpow(factor, k - j)
    return total


def chi(k: int, l: int, x: Scalar, y: Scalar, q) -> Scalar:
    """Product of kappa values over shifted argument pairs."""
    q = _q_of(q)
    total = ONE
    for j in range(k):
        inner = ONE
        for i in range(l):
            inner *= kappa(x * qpow(q, -2 * j), y * qpow(q, -2 * i), q)
        total *= qpow(inner, k - j)
    return total


def psi(l: int, k: int, y: Scalar, x: Scalar, q) -> Scalar:
    """Product of inverse linear factors (y q^{-2i-1} - x q^{-2j+1})^-1."""
    q = _q_of(q)
    total = ONE
    for j in range(k):
        for i in range(l):
            factor = y * qpow(q, -2 * i - 1) - x * qpow(q, -2 * j + 1)
            if factor == 0:
                raise PoleInPsi(f"psi factor vanishes at i={i}, j={j}")
            total /= factor
    return total


def rho(l: int, y: Scalar, x: Scalar, N: int, q) -> Scalar:
    """Scalar value of the fused R-matrix against the one-dimensional top module."""
    q = _q_of(q)
    total = ONE
    for i in range(l):
        total *= y * qpow(q, -2 * i + 1) - x * qpow(q, 3 - 2 * N)
        for j in range(N - 2):
            total *= y * qpow(q, -2 * i) - x * qpow(q, -2 * j)
    return total


def sigma(k: int, x: Scalar, y: Scalar, q) -> Scalar:
    """Product of kappa(x q^{-2j}, y) over the k shift depths."""
    q = _q_of(q)
    total = ONE
    for j in range(k):
        total *= kappa(x * qpow(q, -2 * j), y, q)
    return total


def theorem1_scalar_identity(N: int, x: Scalar, y: Scalar, q) -> bool:
    """Exact scalar identity equivalent to commutativity of the B-family.

    chi_{N-1,N-1}(x,y) phi_{N-1}(y,x)
        == chi_{N-1,N-1}(y,x) phi_{N-1}(x,y) psi_{N-1,N-1}(y,x) rho_{N-1}(y,x)
    """
    m = N - 1
    lhs = chi(m, m, x, y, q) * phi(m, y, x, N, q)
    rhs = chi(m, m, y, x, q) * phi(m, x, y, N, q) * psi(m, m, y, x, q) * rho(m, y, x, N, q)
    return lhs == rhs


def on_q_orbit(a: Scalar, b: Scalar, q, window: int) -> bool:
    """True when a == b * q**m for some |m| <= window."""
    q = _q_of(q)
    if b == 0:
        return a == 0
    ratio = a / b
    power = ONE
    if ratio == power:
        return True
    for _ in range(window):
        power *= q
        if ratio == power or ratio * power == 1:
            return True
    return False
