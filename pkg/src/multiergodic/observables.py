"""Sparse Fourier-series observables on the d-torus.

An observable is ``f(theta) = sum_k c_k exp(2 pi i k . theta)`` with finitely
many stored coefficients. Infinite series are used at an explicit truncation.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "ImaginaryResidueError",
    "FourierObservable",
    "DecayFamily",
    "DecaySpec",
    "DecayReport",
    "constant",
    "make_sin",
    "make_weak_regularity_series",
    "make_random_analytic",
    "eval_observable",
    "spatial_average",
    "decay_audit",
    "neumaier_columns",
]

# relative to sum |c_k|
IMAG_RESIDUE_TOL = 1e-12


class ImaginaryResidueError(ValueError):
    """A real-valued observable evaluated to a number with a sizeable imaginary part."""


def neumaier_columns(terms: np.ndarray) -> np.ndarray:
    """Compensated sum along the last axis, accumulated column by column in order.

    Works for real and complex arrays (real and imaginary parts are
    compensated separately, which is what Neumaier's update does anyway).
    """
    terms = np.asarray(terms)
    s = np.zeros(terms.shape[:-1], dtype=terms.dtype)
    c = np.zeros_like(s)
    for j in range(terms.shape[-1]):
        x = terms[..., j]
        t = s + x
        if np.iscomplexobj(terms):
            c = c + _neumaier_err(s.real, x.real, t.real) + 1j * _neumaier_err(s.imag, x.imag, t.imag)
        else:
            c = c + _neumaier_err(s, x, t)
        s = t
    return s + c


def _neumaier_err(s, x, t):
    return np.where(np.abs(s) >= np.abs(x), (s - t) + x, (x - t) + s)


@dataclass(frozen=True)
class FourierObservable:
    """Finite Fourier series on ``T^dim``.

    ``coeffs`` maps integer frequency tuples to complex coefficients. With
    ``real_valued`` set, ``c_{-k} = conj(c_k)`` is enforced at construction and
    evaluation returns the real part.
    """

    dim: int
    coeffs: Mapping[tuple[int, ...], complex]
    real_valued: bool = True

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be positive")
        clean: dict[tuple[int, ...], complex] = {}
        for k, c in self.coeffs.items():
            k = tuple(int(v) for v in k)
            if len(k) != self.dim:
                raise ValueError(f"frequency {k} has wrong dimension for dim={self.dim}")
            c = complex(c)
            if c != 0:
                clean[k] = c
        if self.real_valued:
            for k, c in clean.items():
                mk = tuple(-v for v in k)
                other = clean.get(mk, 0j)
                if abs(other - c.conjugate()) > 1e-15 * max(abs(c), 1.0):
                    raise ValueError(f"conjugate symmetry fails at k={k}")
        ordered = dict(sorted(clean.items()))
        object.__setattr__(self, "coeffs", ordered)
        freqs = np.array(list(ordered), dtype=np.int64).reshape(len(ordered), self.dim)
        object.__setattr__(self, "_freqs", freqs)
        object.__setattr__(self, "_values", np.array(list(ordered.values()), dtype=complex))

    @property
    def frequencies(self) -> np.ndarray:
        return self._freqs

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def max_frequency(self) -> int:
        """Largest 1-norm among stored frequencies (0 for a constant)."""
        if not len(self._freqs):
            return 0
        return int(np.abs(self._freqs).sum(axis=1).max())

    @property
    def l1_coeffs(self) -> float:
        return math.fsum(abs(c) for c in self._values)

    def __call__(self, theta):
        return eval_observable(self, theta)

    def norm_sigma(self, sigma: float) -> float:
        """Analytic norm ``sum |c_k| exp(2 pi sigma ||k||)`` over the stored support."""
        norms = np.abs(self._freqs).sum(axis=1)
        return math.fsum(np.abs(self._values) * np.exp(2 * math.pi * sigma * norms))

    def rotated(self, shift) -> "FourierObservable":
        """Observable ``theta -> f(theta + shift)``, i.e. ``c_k exp(2 pi i k . shift)``."""
        shift = np.atleast_1d(np.asarray(shift, dtype=float))
        arg = np.mod(self._freqs @ shift, 1.0)
        new = self._values * np.exp(2j * math.pi * arg)
        coeffs = dict(zip(map(tuple, self._freqs.tolist()), new))
        if self.real_valued:
            # restore exact conjugate pairs spoiled by rounding
            for k in list(coeffs):
                mk = tuple(-v for v in k)
                if mk in coeffs and k > mk:
                    coeffs[k] = coeffs[mk].conjugate()
        return FourierObservable(self.dim, coeffs, self.real_valued)

    # --- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "real_valued": self.real_valued,
            "coeffs": [
                {"k": list(k), "re": float(c.real).hex(), "im": float(c.imag).hex()}
                for k, c in self.coeffs.items()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> "FourierObservable":
        coeffs = {
            tuple(item["k"]): complex(_read_float(item["re"]), _read_float(item.get("im", 0.0)))
            for item in data["coeffs"]
        }
        return cls(int(data["dim"]), coeffs, bool(data.get("real_valued", True)))

    @classmethod
    def from_json(cls, text: str) -> "FourierObservable":
        return cls.from_dict(json.loads(text))


def _read_float(v) -> float:
    if isinstance(v, str):
        try:
            return float.fromhex(v)
        except ValueError:
            return float(v)
    return float(v)


def constant(value: float, dim: int = 1) -> FourierObservable:
    return FourierObservable(dim, {(0,) * dim: value})


def make_sin(d: int = 1, axis: int = 0) -> FourierObservable:
    """``sin(2 pi theta_axis)``."""
    if not 0 <= axis < d:
        raise ValueError(f"axis {axis} out of range for d={d}")
    e = [0] * d
    e[axis] = 1
    k = tuple(e)
    mk = tuple(-v for v in e)
    return FourierObservable(d, {k: -0.5j, mk: 0.5j})


def make_weak_regularity_series(Kmax: int = 100) -> FourierObservable:
    """``sum_{k=1}^{Kmax} k^-2 sin(2 pi k x)`` (below C^2 in the limit)."""
    if Kmax < 1:
        raise ValueError("Kmax must be positive")
    coeffs = {}
    for k in range(1, Kmax + 1):
        coeffs[(k,)] = -0.5j / k**2
        coeffs[(-k,)] = 0.5j / k**2
    return FourierObservable(1, coeffs)


def _ball_points(d: int, K: int) -> np.ndarray:
    axes = [np.arange(-K, K + 1)] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    return grid[np.abs(grid).sum(axis=1) <= K]


def make_random_analytic(d: int, sigma: float, cutoff: int, seed: int) -> FourierObservable:
    """Real analytic observable with ``|c_k| = exp(-2 pi sigma ||k||)`` and seeded phases.

    The mean ``c_0`` is a seeded real number in [-1, 1]. Phases come from
    ``numpy.random.default_rng(seed)`` (PCG64), drawn in lexicographic order
    of the half-space ``k > 0``, so equal seeds give equal observables on every
    platform.

    Raises
    ------
    ValueError
        If ``exp(-2 pi sigma cutoff) >= 1e-16``: the dropped tail would be visible.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if math.exp(-2 * math.pi * sigma * cutoff) >= 1e-16:
        raise ValueError(
            f"cutoff {cutoff} too small for sigma={sigma}; need exp(-2 pi sigma cutoff) < 1e-16"
        )
    rng = np.random.default_rng(seed)
    mean = float(rng.uniform(-1.0, 1.0))
    pts = [tuple(p) for p in _ball_points(d, cutoff).tolist()]
    positive = sorted(p for p in pts if p > (0,) * d)
    phases = rng.uniform(0.0, 1.0, size=len(positive))
    coeffs: dict[tuple[int, ...], complex] = {(0,) * d: mean}
    for k, ph in zip(positive, phases):
        c = math.exp(-2 * math.pi * sigma * sum(abs(v) for v in k)) * complex(
            math.cos(2 * math.pi * ph), math.sin(2 * math.pi * ph)
        )
        coeffs[k] = c
        coeffs[tuple(-v for v in k)] = c.conjugate()
    return FourierObservable(d, coeffs)


def eval_observable(f: FourierObservable, theta):
    """Evaluate ``f`` at one point (shape ``(d,)`` or scalar for d=1) or many (``(n, d)``).

    Terms are added in the sorted frequency order with compensated summation.
    Real-valued observables return floats; an imaginary part above
    ``1e-12 * sum|c_k|`` raises :class:`ImaginaryResidueError`.
    """
    theta = np.asarray(theta, dtype=float)
    single = theta.ndim == 0 or (theta.ndim == 1 and f.dim > 1)
    pts = theta.reshape(-1, f.dim) if theta.ndim <= 1 else theta
    if theta.ndim == 1 and f.dim == 1:
        pts = theta.reshape(-1, 1)
        single = False
    if theta.ndim == 0:
        pts = theta.reshape(1, 1)
    if pts.shape[1] != f.dim:
        raise ValueError(f"point dimension {pts.shape[1]} does not match dim={f.dim}")
    if not len(f.values):
        out = np.zeros(len(pts), dtype=float if f.real_valued else complex)
    else:
        # reduce k . theta mod 1 before scaling by 2 pi
        arg = np.mod(pts @ f.frequencies.T.astype(float), 1.0)
        terms = f.values[None, :] * np.exp(2j * math.pi * arg)
        out = neumaier_columns(terms)
        if f.real_valued:
            tol = IMAG_RESIDUE_TOL * max(f.l1_coeffs, 1e-300)
            worst = float(np.max(np.abs(out.imag)))
            if worst > tol:
                raise ImaginaryResidueError(
                    f"imaginary residue {worst:.3e} exceeds {tol:.3e}; conjugate symmetry broken"
                )
            out = out.real
    if single or theta.ndim == 0:
        return out[0].item()
    return out


def spatial_average(f: FourierObservable) -> complex:
    return f.coeffs.get((0,) * f.dim, 0j)


class DecayFamily(str, enum.Enum):
    TRIG_POLY = "trig_poly"
    POLYNOMIAL = "polynomial_decay"
    ANALYTIC = "analytic"


@dataclass(frozen=True)
class DecaySpec:
    """Coefficient-decay class with its weight ``Delta~``.

    ``polynomial_decay``: ``Delta~(r) = r^M``; ``analytic``: ``exp(2 pi sigma r)``;
    ``trig_poly``: coefficients vanish beyond ``cutoff`` (weight 1 inside).
    """

    family: DecayFamily
    param: float = 0.0
    cutoff: int | None = None

    @classmethod
    def polynomial(cls, M: float, cutoff: int | None = None) -> "DecaySpec":
        return cls(DecayFamily.POLYNOMIAL, float(M), cutoff)

    @classmethod
    def analytic(cls, sigma: float, cutoff: int | None = None) -> "DecaySpec":
        return cls(DecayFamily.ANALYTIC, float(sigma), cutoff)

    @classmethod
    def trig_poly(cls, cutoff: int) -> "DecaySpec":
        return cls(DecayFamily.TRIG_POLY, 0.0, cutoff)

    def weight(self, r):
        r = np.asarray(r, dtype=float)
        if self.family is DecayFamily.POLYNOMIAL:
            return r**self.param
        if self.family is DecayFamily.ANALYTIC:
            return np.exp(2 * math.pi * self.param * r)
        return np.ones_like(r)


@dataclass(frozen=True)
class DecayReport:
    sup: float
    argmax_k: tuple[int, ...] | None
    ceiling: float | None
    passed: bool | None


def decay_audit(f: FourierObservable, spec: DecaySpec, ceiling: float | None = None) -> DecayReport:
    """``sup_{k != 0} Delta~(||k||) |c_k|`` over the stored support, with an optional ceiling test."""
    best, arg = 0.0, None
    outside = False
    zero = (0,) * f.dim
    # smallest norm first, positive half-space before its mirror
    order = sorted(f.coeffs, key=lambda k: (sum(abs(v) for v in k), k < zero, k))
    for k in order:
        c = f.coeffs[k]
        r = sum(abs(v) for v in k)
        if r == 0:
            continue
        if spec.family is DecayFamily.TRIG_POLY and spec.cutoff is not None and r > spec.cutoff:
            outside = True
        val = float(spec.weight(r)) * abs(c)
        if val > best * (1 + 1e-12):
            best, arg = val, k
    if spec.family is DecayFamily.TRIG_POLY and outside:
        best = math.inf
    passed = None if ceiling is None else bool(best <= ceiling)
    return DecayReport(best, arg, ceiling, passed)
