"""Weighting functions on [0, 1] and exact derivatives of the exponential bump.

Three weights are supported:

``uniform``
    ``w(x) = 1`` on ``[0, 1)``; gives the plain (unweighted) Birkhoff average.
``sin_squared``
    ``w(x) = 2 sin^2(pi x)`` on ``[0, 1]``; vanishes to second order at the ends.
``exponential_bump``
    ``w(x) = exp(-1 / (x (1 - x))) / Z`` on ``(0, 1)``, zero elsewhere, where ``Z``
    normalizes the integral to one. All derivatives vanish at 0 and 1.

Derivatives of the bump are carried exactly: ``w^(n)(x) = R_n(x) w(x)`` with
``R_n = P_n / (x (1 - x))^(2n)`` and ``P_n`` an integer polynomial.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

__all__ = [
    "MAX_DERIVATIVE_ORDER",
    "QuadratureError",
    "DerivativeCapError",
    "WeightKind",
    "WeightFunction",
    "RationalFunction",
    "bump_normalizer",
    "make_weight",
    "eval_weight",
    "weight_sum",
    "bump_derivative_symbolic",
    "bump_derivative",
    "bump_derivative_roots",
    "bump_derivative_l1",
]

MAX_DERIVATIVE_ORDER = 12

# exp(-t) underflows to 0.0 for t beyond this
_EXP_UNDERFLOW = 745.0


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""


class DerivativeCapError(ValueError):
    """Requested derivative order exceeds :data:`MAX_DERIVATIVE_ORDER`."""


class WeightKind(str, enum.Enum):
    UNIFORM = "uniform"
    SIN_SQUARED = "sin_squared"
    EXPONENTIAL_BUMP = "exponential_bump"


_ALIASES = {
    "uniform": WeightKind.UNIFORM,
    "none": WeightKind.UNIFORM,
    "sin2": WeightKind.SIN_SQUARED,
    "sin_squared": WeightKind.SIN_SQUARED,
    "bump": WeightKind.EXPONENTIAL_BUMP,
    "exp": WeightKind.EXPONENTIAL_BUMP,
    "exponential_bump": WeightKind.EXPONENTIAL_BUMP,
}


def _bump_kernel(t):
    return math.exp(-1.0 / (t * (1.0 - t)))


@functools.lru_cache(maxsize=None)
def bump_normalizer() -> float:
    """Return ``Z = int_0^1 exp(-1/(t(1-t))) dt`` to about 1e-13 relative."""
    value, err = integrate.quad(
        _bump_kernel, 0.0, 1.0, points=[0.5], epsabs=0.0, epsrel=1e-13, limit=200
    )
    if err > 1e-12 * value:
        raise QuadratureError(f"normalizer quadrature error {err:.3e} too large")
    return value


@dataclass(frozen=True)
class WeightFunction:
    """A normalized weight on [0, 1].

    ``normalizer`` is ``Z`` for the exponential bump and 1 otherwise. Instances
    are immutable; build them with :func:`make_weight`.
    """

    kind: WeightKind
    normalizer: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        if self.kind is WeightKind.UNIFORM:
            out[(x >= 0.0) & (x < 1.0)] = 1.0
        elif self.kind is WeightKind.SIN_SQUARED:
            inside = (x >= 0.0) & (x <= 1.0)
            out[inside] = 2.0 * np.sin(np.pi * x[inside]) ** 2
        else:
            inside = (x > 0.0) & (x < 1.0)
            xi = x[inside]
            out[inside] = np.exp(-1.0 / (xi * (1.0 - xi))) / self.normalizer
        return out

    @property
    def name(self) -> str:
        return self.kind.value


def make_weight(kind: str | WeightKind) -> WeightFunction:
    """Build a weight from its kind or a CLI alias (``uniform``, ``sin2``, ``bump``)."""
    if isinstance(kind, str) and not isinstance(kind, WeightKind):
        try:
            kind = _ALIASES[kind.lower()]
        except KeyError:
            raise ValueError(f"unknown weight kind {kind!r}") from None
    kind = WeightKind(kind)
    if kind is WeightKind.EXPONENTIAL_BUMP:
        return WeightFunction(kind, bump_normalizer())
    return WeightFunction(kind)


def eval_weight(w: WeightFunction, x: float) -> float:
    return float(w(np.array([x]))[0])


def weight_sum(w: WeightFunction, N: int) -> float:
    """``A_N = sum_{s=0}^{N-1} w(s/N)``, summed with :func:`math.fsum`."""
    if N < 1:
        raise ValueError("N must be positive")
    return math.fsum(w(np.arange(N) / N))


# --- exact rational derivatives ------------------------------------------

def _padd(a, b):
    n = max(len(a), len(b))
    out = [0] * n
    for i, c in enumerate(a):
        out[i] += c
    for i, c in enumerate(b):
        out[i] += c
    return _trim(out)


def _pmul(a, b):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] += ca * cb
    return _trim(out)


def _pscale(a, k):
    return _trim([k * c for c in a])


def _pderiv(a):
    return _trim([i * c for i, c in enumerate(a)][1:])


def _trim(a):
    a = list(a)
    while a and a[-1] == 0:
        a.pop()
    return a


def _peval_exact(coeffs, x: Fraction) -> Fraction:
    p, q = x.numerator, x.denominator
    deg = len(coeffs) - 1
    if deg < 0:
        return Fraction(0)
    acc = 0
    # Horner on p/q with everything multiplied by q^deg
    qpow = 1
    for i in range(deg, -1, -1):
        acc = acc * p + coeffs[i] * qpow
        qpow *= q
    return Fraction(acc, q ** deg)


@dataclass(frozen=True)
class RationalFunction:
    """Quotient of two integer-coefficient polynomials.

    Coefficients are stored lowest degree first. Evaluation is exact (the
    float argument is converted to the rational it represents) and rounded
    once at the end.
    """

    numerator: tuple[int, ...]
    denominator: tuple[int, ...]

    def __post_init__(self):
        if not any(self.denominator):
            raise ZeroDivisionError("zero denominator polynomial")

    def exact(self, x) -> Fraction:
        x = Fraction(x)
        return _peval_exact(self.numerator, x) / _peval_exact(self.denominator, x)

    def __call__(self, x) -> float:
        return float(self.exact(x))

    def log_abs(self, x) -> float:
        """``log|R(x)|`` without overflow; ``-inf`` at a zero."""
        val = self.exact(x)
        if val == 0:
            return -math.inf
        val = abs(val)
        return _log_fraction(val)

    @property
    def degrees(self) -> tuple[int, int]:
        return len(self.numerator) - 1, len(self.denominator) - 1


def _log_fraction(v: Fraction) -> float:
    num, den = v.numerator, v.denominator
    shift = num.bit_length() - den.bit_length()
    # bring the ratio into float range before taking the log
    if shift > 0:
        den <<= shift
    else:
        num <<= -shift
    return math.log(num / den) + shift * math.log(2.0)


_U = [0, 1, -1]          # x (1 - x)
_DU = [1, -2]            # 1 - 2x


@functools.lru_cache(maxsize=None)
def _bump_numerators(n: int) -> tuple[tuple[int, ...], ...]:
    polys = [[1]]
    u2 = _pmul(_U, _U)
    for k in range(n):
        P = polys[-1]
        nxt = _padd(_pmul(u2, _pderiv(P)), _pscale(_pmul(_pmul(_U, _DU), P), -2 * k))
        nxt = _padd(nxt, _pmul(_DU, P))
        polys.append(nxt)
    return tuple(tuple(p) for p in polys)


def _check_order(n: int) -> None:
    if n < 0:
        raise ValueError("derivative order must be nonnegative")
    if n > MAX_DERIVATIVE_ORDER:
        raise DerivativeCapError(
            f"order {n} exceeds supported cap {MAX_DERIVATIVE_ORDER}"
        )


@functools.lru_cache(maxsize=None)
def bump_derivative_symbolic(n: int) -> RationalFunction:
    """Exact ``R_n`` with ``d^n/dx^n exp(-1/(x(1-x))) = R_n(x) exp(-1/(x(1-x)))``.

    Uses ``R_0 = 1`` and ``R_{k+1} = R_k' + R_k g'`` with ``g = -1/(x(1-x))``.
    Writing ``R_k = P_k / u^(2k)`` for ``u = x(1-x)`` keeps everything in integer
    polynomials::

        P_{k+1} = u^2 P_k' - 2k u u' P_k + u' P_k
    """
    _check_order(n)
    num = _bump_numerators(n)[n]
    den = [1]
    for _ in range(2 * n):
        den = _pmul(den, _U)
    return RationalFunction(tuple(num), tuple(den))


def _log_bump_derivative_abs(n: int, x: float) -> float:
    u = x * (1.0 - x)
    return bump_derivative_symbolic(n).log_abs(x) - 1.0 / u - math.log(bump_normalizer())


def bump_derivative(n: int, x: float) -> float:
    """Value of ``w^(n)(x)`` for the normalized exponential bump."""
    _check_order(n)
    if not 0.0 < x < 1.0:
        return 0.0
    u = x * (1.0 - x)
    if 1.0 / u > _EXP_UNDERFLOW + 40.0 * n:
        return 0.0
    R = bump_derivative_symbolic(n)
    val = R.exact(x)
    if val == 0:
        return 0.0
    logmag = _log_fraction(abs(val)) - 1.0 / u - math.log(bump_normalizer())
    if logmag < -_EXP_UNDERFLOW:
        return 0.0
    return math.copysign(math.exp(logmag), val)


@functools.lru_cache(maxsize=None)
def bump_derivative_roots(n: int) -> tuple[float, ...]:
    """Sign changes of ``w^(n)`` inside (0, 1), sorted.

    These are the real roots of ``P_n`` in (0, 1) of odd multiplicity, isolated
    exactly with sympy and refined to double precision.
    """
    _check_order(n)
    import sympy

    num = bump_derivative_symbolic(n).numerator
    if len(num) <= 1:
        return ()
    x = sympy.Symbol("x")
    poly = sympy.Poly(list(reversed(num)), x)
    roots = []
    for (a, b), mult in poly.intervals(inf=0, sup=1, eps=sympy.Rational(1, 10**18)):
        if mult % 2 == 1:
            r = float((a + b) / 2)
            if 0.0 < r < 1.0:
                roots.append(r)
    return tuple(sorted(roots))


@functools.lru_cache(maxsize=None)
def bump_derivative_l1(n: int, rtol: float = 1e-10) -> float:
    """``||w^(n)||_{L^1(0,1)}`` by adaptive quadrature between sign changes.

    Raises
    ------
    QuadratureError
        If the summed error estimate exceeds ``rtol`` times the result.
    """
    _check_order(n)
    if n == 0:
        return 1.0
    edges = (0.0, *bump_derivative_roots(n), 1.0)
    f = functools.partial(bump_derivative, n)
    parts = []
    errs = []
    for a, b in zip(edges[:-1], edges[1:]):
        val, err = integrate.quad(f, a, b, epsabs=0.0, epsrel=rtol * 0.1, limit=500)
        parts.append(abs(val))
        errs.append(err)
    total = math.fsum(parts)
    if math.fsum(errs) > rtol * total:
        raise QuadratureError(
            f"L1 quadrature for n={n}: error {math.fsum(errs):.3e} vs value {total:.3e}"
        )
    return total
