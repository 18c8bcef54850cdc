"""Weighted multiple ergodic averages along torus rotations.

Discrete::

    DMW_N = (1/A_N) sum_{n<N} w(n/N) prod_j F_j(theta0 + n rho_j)

Continuous::

    CMW_T = int_0^1 w(y) prod_j F_j(theta0 + T y rho_j) dy

plus the two closed forms used as exact references for the continuous case.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .observables import FourierObservable, spatial_average
from .rotations import JointRotation, RotationVector, make_joint
from .weights import WeightFunction

__all__ = [
    "EVALUATION_GUARD",
    "BudgetExceededError",
    "SingularDenominatorError",
    "Discrete",
    "Continuous",
    "AverageSpec",
    "AverageResult",
    "orbit",
    "weighted_average",
    "dmw",
    "cmw",
    "average",
    "error_curve",
    "counterexample_rhos",
    "counterexample_H",
    "resonant_H",
]

EVALUATION_GUARD = 10**8
GL_ORDER = 16
MIN_PANELS = 64
EPS = np.finfo(float).eps


class BudgetExceededError(ValueError):
    """The quadrature would need more than :data:`EVALUATION_GUARD` integrand evaluations."""


class SingularDenominatorError(ZeroDivisionError):
    pass


@dataclass(frozen=True)
class Discrete:
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")

    @property
    def scale(self) -> float:
        return self.N


@dataclass(frozen=True)
class Continuous:
    T: float
    nodes_per_period: int = 8

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T!r}")
        if self.nodes_per_period < 8:
            raise ValueError("nodes_per_period must be at least 8")

    @property
    def scale(self) -> float:
        return self.T


@dataclass(frozen=True)
class AverageSpec:
    """Everything needed for one average.

    ``theta0`` is a point of ``T^d`` shared by all factors; a float is accepted
    when ``d == 1``.
    """

    weight: WeightFunction
    observables: tuple[FourierObservable, ...]
    joint: JointRotation
    theta0: tuple[float, ...]
    mode: Discrete | Continuous

    def __post_init__(self):
        obs = tuple(self.observables)
        joint = self.joint
        if not isinstance(joint, JointRotation):
            joint = make_joint(joint)
        theta0 = tuple(float(t) for t in np.atleast_1d(self.theta0))
        object.__setattr__(self, "observables", obs)
        object.__setattr__(self, "joint", joint)
        object.__setattr__(self, "theta0", theta0)
        if len(obs) != joint.ell:
            raise ValueError(f"{len(obs)} observables but {joint.ell} rotations")
        dims = {f.dim for f in obs}
        if dims != {joint.d}:
            raise ValueError(f"observable dims {sorted(dims)} do not match rotation dim {joint.d}")
        if len(theta0) != joint.d:
            raise ValueError(f"theta0 has dimension {len(theta0)}, expected {joint.d}")

    @property
    def target(self) -> float:
        return _target(self.observables)

    def at(self, scale) -> "AverageSpec":
        """Same spec at another N or T."""
        if isinstance(self.mode, Discrete):
            return replace(self, mode=Discrete(int(scale)))
        return replace(self, mode=Continuous(float(scale), self.mode.nodes_per_period))


@dataclass(frozen=True)
class AverageResult:
    value: float
    target: float
    abs_error: float
    scale: float
    floor: float = field(default=0.0)

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "value": self.value,
            "target": self.target,
            "abs_error": self.abs_error,
            "floor": self.floor,
        }


def _target(observables) -> float:
    t = 1.0
    for f in observables:
        m = spatial_average(f)
        t *= m.real if f.real_valued else m
    return t


def _result(value, target, scale, magnitude, norm) -> AverageResult:
    return AverageResult(
        value=value,
        target=target,
        abs_error=abs(value - target),
        scale=scale,
        floor=float(10.0 * EPS * magnitude / abs(norm)),
    )


def orbit(theta0: Sequence[float], rho: Sequence[float], N: int) -> np.ndarray:
    """``(N, d)`` array of ``theta0 + n rho`` mod 1 by repeated fractional addition."""
    cols = []
    for t, r in zip(theta0, rho):
        step = lambda a, _b, r=r: (a + r) % 1.0
        cols.append(list(itertools.accumulate(itertools.repeat(None, N - 1), step, initial=t % 1.0)))
    return np.array(cols, dtype=float).T.reshape(N, len(rho))


def weighted_average(weights, values) -> float:
    """``sum(w v) / sum(w)``, both sums correctly rounded."""
    weights = np.asarray(weights, dtype=float)
    values = np.asarray(values, dtype=float)
    A = math.fsum(weights)
    if A == 0.0:
        raise ZeroDivisionError("weights sum to zero")
    return math.fsum(weights * values) / A


def _product_along(spec: AverageSpec, points_for) -> np.ndarray:
    vals = None
    for f, rot in zip(spec.observables, spec.joint.components):
        v = np.asarray(f(points_for(rot.phases)))
        vals = v if vals is None else vals * v
    return vals


def dmw(spec: AverageSpec) -> AverageResult:
    """Discrete weighted multiple average at ``N = spec.mode.N``."""
    if not isinstance(spec.mode, Discrete):
        raise TypeError("dmw needs a Discrete mode")
    N = spec.mode.N
    w = spec.weight(np.arange(N) / N)
    vals = _product_along(spec, lambda rho: orbit(spec.theta0, rho, N))
    A = math.fsum(w)
    if A == 0.0:
        raise ZeroDivisionError(f"A_N = 0 for weight {spec.weight.name} at N={N}")
    value = math.fsum(w * vals) / A
    return _result(value, spec.target, N, math.fsum(np.abs(w * vals)), A)


def _gauss_legendre(panels: int, order: int = GL_ORDER):
    x, wt = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * wt[None, :]).ravel()
    return nodes, weights


def panel_count(spec: AverageSpec) -> int:
    """Panels so that each oscillation of the integrand gets ``nodes_per_period`` panels."""
    T = spec.mode.T
    omega = T * sum(
        f.max_frequency * max(abs(p) for p in rot.phases)
        for f, rot in zip(spec.observables, spec.joint.components)
    )
    return max(MIN_PANELS, math.ceil(spec.mode.nodes_per_period * omega))


def cmw(spec: AverageSpec) -> AverageResult:
    """Continuous weighted multiple average at ``T = spec.mode.T`` by composite Gauss-Legendre.

    Raises
    ------
    BudgetExceededError
        If the panel count times the rule order exceeds :data:`EVALUATION_GUARD`.
    """
    if not isinstance(spec.mode, Continuous):
        raise TypeError("cmw needs a Continuous mode")
    T = spec.mode.T
    panels = panel_count(spec)
    if panels * GL_ORDER > EVALUATION_GUARD:
        raise BudgetExceededError(
            f"T={T} needs {panels * GL_ORDER} evaluations (guard {EVALUATION_GUARD})"
        )
    y, qw = _gauss_legendre(panels)
    theta0 = np.array(spec.theta0)
    vals = _product_along(
        spec, lambda rho: np.mod(theta0[None, :] + (T * y)[:, None] * np.array(rho)[None, :], 1.0)
    )
    wq = qw * spec.weight(y)
    value = math.fsum(wq * vals)
    return _result(value, spec.target, T, math.fsum(np.abs(wq * vals)), 1.0)


def average(spec: AverageSpec) -> AverageResult:
    return dmw(spec) if isinstance(spec.mode, Discrete) else cmw(spec)


def error_curve(spec: AverageSpec, scales: Sequence[float], threads: int = 1) -> list[AverageResult]:
    """Averages of ``spec`` at each scale, in order. ``threads=0`` picks a default pool size."""
    scales = list(scales)
    if any(b <= a for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be strictly increasing")
    specs = [spec.at(s) for s in scales]
    if threads == 1 or len(specs) < 2:
        return [average(s) for s in specs]
    with ThreadPoolExecutor(max_workers=threads or None) as pool:
        return list(pool.map(average, specs))


# --- closed forms -------------------------------------------------------------

def counterexample_rhos() -> tuple[float, float]:
    """``((4 + pi)/2, (4 - pi)/2)``: gap ``pi`` and ``(rho1 + rho2)/(rho1 - rho2) = 4/pi``."""
    return (4 + math.pi) / 2, (4 - math.pi) / 2


def _sinc_term(a: float, T: float) -> float:
    den = a * T * (a * a * T * T - 1.0)
    if abs(a * a * T * T - 1.0) < 1e-12 or a * T == 0:
        raise SingularDenominatorError(f"singular denominator at a*T = {a * T!r}")
    return math.sin(2 * math.pi * a * T) / den


def counterexample_H(T: float, rho1: float | None = None, rho2: float | None = None) -> float:
    """Exact ``CMW_T`` for ``w = 2 sin^2(pi x)``, ``F_1 = F_2 = sin(2 pi x)``, ``theta0 = 0``.

    Defaults to the pair of :func:`counterexample_rhos`, i.e. ``(4 +- pi)/2``.
    """
    if rho1 is None or rho2 is None:
        rho1, rho2 = counterexample_rhos()
    s, d = rho1 + rho2, rho1 - rho2
    return (_sinc_term(s, T) - _sinc_term(d, T)) / (4 * math.pi)


def resonant_H(T: float, rho: float) -> float:
    """Exact ``CMW_T`` for the same setup with ``rho1 = rho2 = rho``; tends to 1/2."""
    if rho == 0:
        raise SingularDenominatorError("rho must be nonzero")
    a = math.pi * T * rho
    den = a - 4 * math.pi * T**3 * rho**3
    if abs(den) < 1e-12 * max(1.0, abs(a)):
        raise SingularDenominatorError(f"singular denominator at T*rho = {T * rho!r}")
    return (4.0 - math.sin(4 * math.pi * T * rho) / den) / 8.0
