"""Convergence-rate fits for error curves and numerical audits of the balancing conditions.

Curves are sequences of ``(scale, abs_error)`` or ``(scale, abs_error, floor)``
tuples, or :class:`~multiergodic.averaging.AverageResult` objects.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate, special

from .rotations import GuardExceededError, SHELL_GUARD, l1_ball_size, shell_count

__all__ = [
    "PLATEAU_RTOL",
    "STEEPENING_RATIO",
    "FitError",
    "RateFit",
    "Verdict",
    "Condition",
    "ConditionAudit",
    "GrowthFunction",
    "parse_growth",
    "as_curve",
    "window",
    "envelope",
    "fit_power",
    "fit_stretched",
    "fit_all",
    "radial_multiplicity",
    "truncated_space_size",
    "truncation_radius",
    "audit_boundedness",
    "audit_truncated_smallness",
]

# verdict thresholds
PLATEAU_RTOL = 1e-6
GROWTH_RUN = 3
STEEPENING_RATIO = 1.25

TERM_GUARD = 10**7
RADIAL_CAP = 10**6
NEGLIGIBLE_LOG = 40.0


class FitError(ValueError):
    """Too few usable points, or degenerate abscissae."""


# --- curves -----------------------------------------------------------------

def as_curve(curve) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split a curve into ``scales, errors, floors`` (floors default to 0)."""
    s, e, f = [], [], []
    for p in curve:
        if hasattr(p, "abs_error"):
            s.append(p.scale)
            e.append(p.abs_error)
            f.append(getattr(p, "floor", 0.0))
        else:
            s.append(p[0])
            e.append(p[1])
            f.append(p[2] if len(p) > 2 else 0.0)
    return np.array(s, dtype=float), np.array(e, dtype=float), np.array(f, dtype=float)


def window(curve, lo: float, hi: float) -> list[tuple[float, float, float]]:
    """Points with ``lo <= scale <= hi``."""
    s, e, f = as_curve(curve)
    keep = (s >= lo) & (s <= hi)
    return list(zip(s[keep].tolist(), e[keep].tolist(), f[keep].tolist()))


def envelope(curve, min_points: int = 6) -> list[tuple[float, float, float]]:
    """Forward dyadic running maximum with floor clipping.

    Points whose error is at or below their floor are discarded first. Each
    survivor at scale ``s`` is replaced by the largest error among survivors
    in ``[s, 2s)``; the window is cut short at the end of the data.

    Raises
    ------
    FitError
        Fewer than ``min_points`` inputs, or fewer than 3 points survive.
    """
    s, e, f = as_curve(curve)
    if len(s) < min_points:
        raise FitError(f"envelope needs at least {min_points} points, got {len(s)}")
    if np.any(np.diff(s) <= 0):
        raise FitError("scales must be strictly increasing")
    keep = e > f
    s, e, f = s[keep], e[keep], f[keep]
    if len(s) < 3:
        raise FitError(f"only {len(s)} points above the error floor")
    hi = np.searchsorted(s, 2 * s, side="left")
    env = np.array([e[i:j].max() for i, j in enumerate(hi)])
    return list(zip(s.tolist(), env.tolist(), f.tolist()))


# --- fits -------------------------------------------------------------------

@dataclass(frozen=True)
class RateFit:
    """Result of a rate fit.

    ``residual`` is the root-mean-square misfit of ``log(err)`` for every model,
    so residuals of different models can be compared directly.
    """

    model: str
    params: dict
    residual: float
    points_used: int

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": dict(self.params),
            "residual": self.residual,
            "points_used": self.points_used,
        }


def _linfit(x, y):
    if len(x) < 2 or np.ptp(x) == 0:
        raise FitError("degenerate abscissae")
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def _rms(r) -> float:
    return float(np.sqrt(np.mean(np.square(r))))


def fit_power(curve) -> RateFit:
    """Fit ``err = C N^-m`` by least squares in log-log coordinates."""
    s, e, _ = as_curve(curve)
    ok = e > 0
    s, e = s[ok], e[ok]
    if len(s) < 3:
        raise FitError(f"power fit needs 3 positive points, got {len(s)}")
    x, y = np.log(s), np.log(e)
    slope, b = _linfit(x, y)
    res = _rms(y - (b + slope * x))
    return RateFit("power", {"m": -slope, "C": math.exp(b)}, res, len(s))


def fit_stretched(curve, model: str = "stretched_exp") -> RateFit:
    """Fit ``err = exp(-c N^zeta)`` or ``err = exp(-c (log N)^zeta)``.

    Linearized as ``log(-log err) = log c + zeta * X`` with ``X = log N``
    (``stretched_exp``) or ``X = log log N`` (``log_stretched_exp``). Points with
    ``err >= 1`` carry no information and are dropped.
    """
    if model not in ("stretched_exp", "log_stretched_exp"):
        raise ValueError(f"unknown stretched model {model!r}")
    s, e, _ = as_curve(curve)
    ok = (e > 0) & (e < 1)
    if model == "log_stretched_exp":
        ok &= s > 1
    s, e = s[ok], e[ok]
    if len(s) < 4:
        raise FitError(f"{model} fit needs 4 points with 0 < err < 1, got {len(s)}")
    x = np.log(s) if model == "stretched_exp" else np.log(np.log(s))
    y = np.log(-np.log(e))
    zeta, b = _linfit(x, y)
    c = math.exp(b)
    pred = -c * np.exp(zeta * x)
    res = _rms(np.log(e) - pred)
    return RateFit(model, {"c": c, "zeta": zeta}, res, len(s))


def fit_all(curve, models: Iterable[str] = ("power", "stretched_exp", "log_stretched_exp")) -> list[RateFit]:
    out = []
    for m in models:
        out.append(fit_power(curve) if m == "power" else fit_stretched(curve, m))
    return out


# --- growth functions ---------------------------------------------------------

@dataclass(frozen=True)
class GrowthFunction:
    """Monotone function used as ``Delta``, ``Delta~`` or the adaptive ``phi``.

    ============  =======================
    family        value at ``y``
    ============  =======================
    power         ``y^p``
    exp           ``exp(p y)``
    double_exp    ``exp(exp(p y))``
    log_power     ``log(1 + y)^p``
    ============  =======================

    Evaluation goes through :meth:`log` so the double exponential never overflows.
    """

    family: str
    p: float

    _FAMILIES = ("power", "exp", "double_exp", "log_power")

    def __post_init__(self):
        if self.family not in self._FAMILIES:
            raise ValueError(f"unknown growth family {self.family!r}")
        if not self.p > 0:
            raise ValueError("growth parameter must be positive")

    def log(self, y):
        y = np.asarray(y, dtype=float)
        if self.family == "power":
            with np.errstate(divide="ignore"):
                return self.p * np.log(y)
        if self.family == "exp":
            return self.p * y
        if self.family == "double_exp":
            return np.exp(self.p * y)
        return self.p * np.log(np.log1p(y))

    def __call__(self, y):
        if self.family == "power":
            return np.asarray(y, dtype=float) ** self.p
        return np.exp(self.log(y))

    def inverse(self, z):
        z = np.asarray(z, dtype=float)
        if self.family == "power":
            return z ** (1.0 / self.p)
        if self.family == "exp":
            return np.log(z) / self.p
        if self.family == "double_exp":
            return np.log(np.log(z)) / self.p
        return np.expm1(z ** (1.0 / self.p))

    def __str__(self):
        return f"{self.family}:{self.p!r}"


_GROWTH_RE = re.compile(r"^\s*([a-z_]+)\s*:\s*([0-9.eE+\-]+)\s*$")


def parse_growth(text: str | GrowthFunction) -> GrowthFunction:
    """Parse ``family:param``. ``analytic:sigma`` means ``exp(2 pi sigma y)``; ``sqrt`` means ``y^(1/2)``."""
    if isinstance(text, GrowthFunction):
        return text
    if text.strip() == "sqrt":
        return GrowthFunction("power", 0.5)
    m = _GROWTH_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse growth function {text!r}; expected family:param")
    fam, p = m.group(1), float(m.group(2))
    if fam == "analytic":
        return GrowthFunction("exp", 2 * math.pi * p)
    return GrowthFunction(fam, p)


# --- lattice counting ------------------------------------------------------------

def radial_multiplicity(d: int, r) -> np.ndarray:
    """``#{k in Z^d : ||k||_1 = r}`` for ``r >= 1``, vectorized (float)."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    for i in range(1, d + 1):
        out = out + 2.0**i * special.comb(d, i) * special.binom(r - 1, i - 1)
    return out


def _log_mult(d: int | None, eta: int | None, r: np.ndarray) -> np.ndarray:
    if eta is not None:
        if r.size and r.max() > SHELL_GUARD:
            raise GuardExceededError(f"shell norm {int(r.max())} exceeds guard {SHELL_GUARD}")
        counts = np.array([shell_count(eta, int(v)) for v in r], dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(counts)
    return np.log(radial_multiplicity(d, r))


def truncation_radius(Delta: GrowthFunction, phi: GrowthFunction, ell: int, x: float) -> float:
    """``ell^-1 Delta^-1(x / phi(x))``."""
    return float(Delta.inverse(x / phi(x))) / ell


def _floor(v: float) -> int:
    # radii that should be integers come out a few ulps low
    return math.floor(v * (1 + 1e-12))


def truncated_space_size(tau: float, phi, ell: int, d: int, x: float) -> int:
    """Size of the truncated space for ``Delta(y) = y^tau``.

    Each of the ``ell`` factors ranges over nonzero ``k`` in ``Z^d`` with
    ``||k||_1 <= B``, ``B = floor(ell^-1 (x/phi(x))^(1/tau))``.
    """
    phi = parse_growth(phi)
    B = _floor(truncation_radius(GrowthFunction("power", tau), phi, ell, x))
    if B < 1:
        return 0
    return (l1_ball_size(d, B) - 1) ** ell


# --- audits -------------------------------------------------------------------

class Verdict(str, enum.Enum):
    PLATEAUING = "plateauing"
    DIVERGING = "diverging"
    INCONCLUSIVE = "inconclusive"


class Condition(str, enum.Enum):
    BOUNDEDNESS_FINITE = "boundedness_finite"
    BOUNDEDNESS_INFINITE = "boundedness_infinite"
    TRUNCATED_SMALLNESS_FINITE = "truncated_smallness_finite"
    TRUNCATED_SMALLNESS_INFINITE = "truncated_smallness_infinite"


@dataclass(frozen=True)
class ConditionAudit:
    """Partial sums (or tails) along a grid, with a verdict.

    ``log_values`` holds natural logs; ``partial_sums`` is their exponential
    and may be ``inf`` where the sum exceeds double range.
    """

    condition: Condition
    cutoffs: tuple[float, ...]
    partial_sums: tuple[float, ...]
    log_values: tuple[float, ...]
    verdict: Verdict
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "condition": self.condition.value,
            "verdict": self.verdict.value,
            "details": self.details,
            "table": [
                {"cutoff": c, "value": v, "log_value": lv}
                for c, v, lv in zip(self.cutoffs, self.partial_sums, self.log_values)
            ],
        }


def _safe_exp(v: float) -> float:
    return math.exp(v) if v < 709.0 else math.inf


def audit_boundedness(Delta, tilde_Deltas: Sequence, m: int, d: int | None, cutoffs: Sequence[int],
                      eta: int | None = None) -> ConditionAudit:
    """Partial sums of ``sum Delta^m(sum_j ||k^j||) / prod_j Delta~_j(||k^j||)`` over nonzero ``k^j``.

    Terms are grouped by the radii ``r_j = ||k^j||`` and weighted by the lattice
    multiplicity, either of ``Z^d`` (1-norm) or, with ``eta`` given, of the
    eta-weighted lattice. Everything is summed in log space.

    Verdict: plateauing when the last two partial sums differ by less than
    ``PLATEAU_RTOL`` relative; diverging when the last ``GROWTH_RUN`` increments
    grow strictly; otherwise inconclusive.
    """
    Delta = parse_growth(Delta)
    tds = [parse_growth(t) for t in tilde_Deltas]
    ell = len(tds)
    cutoffs = [int(c) for c in cutoffs]
    if m < 1:
        raise ValueError("m must be positive")
    if any(b <= a for a, b in zip(cutoffs, cutoffs[1:])) or cutoffs[0] < 1:
        raise ValueError("cutoffs must be positive and strictly increasing")
    K = cutoffs[-1]
    if K**ell > TERM_GUARD:
        raise GuardExceededError(f"{K}^{ell} radius tuples exceed guard {TERM_GUARD}")
    r = np.arange(1, K + 1, dtype=float)
    logmult = _log_mult(d, eta, r)
    grids = np.meshgrid(*([r] * ell), indexing="ij")
    total_r = sum(grids)
    logt = m * Delta.log(total_r)
    for j, g in enumerate(grids):
        idx = g.astype(int) - 1
        logt = logt - tds[j].log(g) + logmult[idx]
    rmax = np.maximum.reduce(grids) if ell > 1 else grids[0]
    # accumulate band by band so the partial sums cannot decrease through rounding
    logs, incs = [], []
    acc, prev = -math.inf, 0
    for c in cutoffs:
        inc = float(special.logsumexp(logt[(rmax > prev) & (rmax <= c)]))
        acc = float(np.logaddexp(acc, inc))
        logs.append(acc)
        incs.append(inc)
        prev = c
    sums = [_safe_exp(v) for v in logs]
    last_rel = math.exp(incs[-1] - logs[-1]) if len(logs) > 1 else math.inf
    if len(logs) > 1 and last_rel < PLATEAU_RTOL:
        verdict = Verdict.PLATEAUING
    elif len(incs) > GROWTH_RUN and all(b > a for a, b in zip(incs[-GROWTH_RUN - 1:], incs[-GROWTH_RUN:])):
        verdict = Verdict.DIVERGING
    else:
        verdict = Verdict.INCONCLUSIVE
    cond = Condition.BOUNDEDNESS_INFINITE if eta is not None else Condition.BOUNDEDNESS_FINITE
    return ConditionAudit(
        cond, tuple(cutoffs), tuple(sums), tuple(logs), verdict,
        {"m": m, "last_relative_increment": last_rel, "log_increments": incs},
    )


def _radial_logsum(logg: Callable[[np.ndarray], np.ndarray], lo: int, hi: int | None,
                   cap: int, lattice: bool = False) -> float:
    """``log sum_{r=lo}^{hi} exp(logg(r))``; ``hi=None`` sums until terms are negligible."""
    if hi is not None:
        if hi < lo:
            return -math.inf
        return float(special.logsumexp(logg(np.arange(lo, hi + 1, dtype=float))))
    acc = -math.inf
    start, chunk = lo, 256
    while True:
        stop = min(start + chunk, cap + 1)
        terms = logg(np.arange(start, stop, dtype=float))
        acc = float(np.logaddexp(acc, special.logsumexp(terms)))
        if terms[-1] < acc - NEGLIGIBLE_LOG and terms[-1] <= terms[0]:
            return acc
        if stop > cap:
            break
        start, chunk = stop, chunk * 2
    if lattice:
        raise GuardExceededError(f"shell sum not negligible by norm {cap}")
    # slow (polynomial) decay: bound the remainder by an integral
    scale = acc
    rem, _ = integrate.quad(lambda t: math.exp(float(logg(np.array([t]))[0]) - scale), cap + 0.5, math.inf,
                            limit=200)
    return acc + math.log1p(rem)


def audit_truncated_smallness(tilde_Deltas: Sequence, Delta, phi, ell: int, x_grid: Sequence[float],
                              d: int | None = None, eta: int | None = None) -> ConditionAudit:
    """Tails ``sum 1/prod_j Delta~_j(||k^j||)`` over nonzero factor tuples outside the truncated space.

    A tuple lies outside when some factor has norm above
    ``B(x) = ell^-1 Delta^-1(x / phi(x))``. The tail is split by the first
    factor that exceeds ``B``, which keeps every piece positive, and is summed
    in log space. Give ``d`` for ``Z^d`` with the 1-norm or ``eta`` for the
    eta-weighted lattice (``Delta`` is then the infinite-dimensional ``theta``).

    The report fits ``log tail`` against ``x`` (rate ``c``) and
    ``log(-log tail)`` against ``log x`` (``zeta``). Verdict: plateauing (the
    tail is exponentially small) when the semilog slope is negative and the
    log-log slope steepens by ``STEEPENING_RATIO`` between the two halves of the
    grid; diverging when the tail does not decrease; otherwise inconclusive.
    """
    if (d is None) == (eta is None):
        raise ValueError("give exactly one of d or eta")
    tds = [parse_growth(t) for t in tilde_Deltas]
    if len(tds) != ell:
        raise ValueError(f"{len(tds)} decay functions for ell={ell}")
    Delta, phi = parse_growth(Delta), parse_growth(phi)
    xs = [float(x) for x in x_grid]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValueError("x_grid must be strictly increasing")
    cap = SHELL_GUARD if eta is not None else RADIAL_CAP

    def logg(td):
        return lambda r: _log_mult(d, eta, r) - td.log(r)

    full = [_radial_logsum(logg(td), 1, None, cap, eta is not None) for td in tds]
    logs, radii = [], []
    for x in xs:
        B = max(_floor(truncation_radius(Delta, phi, ell, x)), 0)
        radii.append(B)
        if eta is not None and B + 1 > SHELL_GUARD:
            raise GuardExceededError(f"truncation radius {B} exceeds shell guard {SHELL_GUARD}")
        inside = [_radial_logsum(logg(td), 1, B, cap) for td in tds]
        outside = [_radial_logsum(logg(td), B + 1, None, cap, eta is not None) for td in tds]
        pieces = []
        for i in range(ell):
            pieces.append(sum(inside[:i]) + outside[i] + sum(full[i + 1:]))
        logs.append(float(special.logsumexp(pieces)))
    la = np.array(logs)
    xa = np.array(xs)
    details: dict = {"radii": radii}
    finite = np.isfinite(la)
    if finite.sum() >= 2:
        slope, _ = _linfit(xa[finite], la[finite])
        details["semilog_slope"] = slope
        details["rate"] = -slope
    if finite.sum() >= 4 and np.all(la[finite] < 0):
        zeta, b = _linfit(np.log(xa[finite]), np.log(-la[finite]))
        details["zeta"] = zeta
        details["c"] = math.exp(b)
    verdict = Verdict.INCONCLUSIVE
    if finite.sum() >= 4:
        lx, lf = np.log(xa[finite]), la[finite]
        h = len(lx) // 2
        s1, _ = _linfit(lx[: h + 1], lf[: h + 1])
        s2, _ = _linfit(lx[h:], lf[h:])
        details["loglog_slopes"] = [s1, s2]
        if details["semilog_slope"] >= 0:
            verdict = Verdict.DIVERGING
        elif s1 < 0 and s2 <= STEEPENING_RATIO * s1:
            verdict = Verdict.PLATEAUING
    elif finite.sum() < len(la) and np.all(np.isneginf(la[~finite])):
        # tail vanished exactly past some x (finite support)
        verdict = Verdict.PLATEAUING
    cond = (Condition.TRUNCATED_SMALLNESS_INFINITE if eta is not None
            else Condition.TRUNCATED_SMALLNESS_FINITE)
    return ConditionAudit(cond, tuple(xs), tuple(_safe_exp(v) for v in logs), tuple(logs), verdict, details)
