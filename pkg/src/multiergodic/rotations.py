"""Rotation vectors, small-divisor scans and the eta-weighted lattice.

Finite-dimensional part: joint rotations ``rho~ = (rho_1, ..., rho_l)`` and
exhaustive scans of ``|k . rho~ - n|`` (discrete time) or ``|k . rho~|``
(continuous time) over the 1-norm ball ``0 < ||k|| <= K``.

Infinite-dimensional part: integer sequences with finite support and the
weighted norm ``|k|_eta = sum_j <j>^eta |k_j|`` with ``<j> = max(1, |j|)``.
Shells ``{k : |k|_eta = nu}`` are enumerated exactly; their sizes are also
available through a generating-function count that never builds the vectors.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

__all__ = [
    "BALL_GUARD",
    "SHELL_GUARD",
    "GuardExceededError",
    "RotationVector",
    "JointRotation",
    "LatticeVector",
    "DivisorScan",
    "golden",
    "liouville_truncated",
    "liouville_series",
    "rational",
    "make_joint",
    "l1_ball_size",
    "smallest_divisor",
    "diophantine_witness",
    "continued_fraction",
    "shell_count",
    "enumerate_eta_shell",
    "theta_product",
    "sup_theta_over_ball",
]

BALL_GUARD = 10**8
SHELL_GUARD = 30


class GuardExceededError(ValueError):
    """An enumeration would exceed its size guard."""


@dataclass(frozen=True)
class RotationVector:
    """Rotation ``theta -> theta + rho`` on the d-torus.

    Phases are kept as given rather than reduced mod 1: in continuous time
    ``rho = 1`` and ``rho = 0`` are different flows. Discrete-time code reduces
    mod 1 where it matters.
    """

    phases: tuple[float, ...]
    tag: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
        if not self.phases:
            raise ValueError("rotation vector needs at least one phase")
        if not all(math.isfinite(p) for p in self.phases):
            raise ValueError("phases must be finite")

    @property
    def dim(self) -> int:
        return len(self.phases)

    @classmethod
    def of(cls, *phases: float, tag: str | None = None) -> "RotationVector":
        return cls(tuple(phases), tag)


def golden() -> RotationVector:
    """``(sqrt(5) - 1) / 2``."""
    return RotationVector(((math.sqrt(5.0) - 1.0) / 2.0,), "golden")


def liouville_truncated() -> RotationVector:
    """``10^-2 + 10^-5 + 10^-9 = 0.010010001``, the truncation used by the fig2 preset."""
    value = Fraction(1, 10**2) + Fraction(1, 10**5) + Fraction(1, 10**9)
    return RotationVector((float(value),), "liouville_trunc")


def liouville_series() -> RotationVector:
    """``0.1001000100001...``: digit 1 at places ``k(k+3)/2 - 1``, summed to double precision."""
    value = Fraction(0)
    k = 1
    while True:
        place = k * (k + 3) // 2 - 1
        if place > 40:
            break
        value += Fraction(1, 10**place)
        k += 1
    return RotationVector((float(value),), "liouville_series")


def rational(p: int, q: int) -> RotationVector:
    return RotationVector((p / q,), f"rational {p}/{q}")


@dataclass(frozen=True)
class JointRotation:
    components: tuple[RotationVector, ...]

    @property
    def ell(self) -> int:
        return len(self.components)

    @property
    def d(self) -> int:
        return self.components[0].dim

    @property
    def joint(self) -> tuple[float, ...]:
        return tuple(p for c in self.components for p in c.phases)


def make_joint(rotations: Sequence[RotationVector | float]) -> JointRotation:
    comps = tuple(
        r if isinstance(r, RotationVector) else RotationVector((float(r),)) for r in rotations
    )
    if not comps:
        raise ValueError("need at least one rotation")
    dims = {c.dim for c in comps}
    if len(dims) != 1:
        raise ValueError(f"rotation dimensions differ: {sorted(dims)}")
    return JointRotation(comps)


# --- small divisors ---------------------------------------------------------

def l1_ball_size(D: int, K: int) -> int:
    """Number of integer points with 1-norm at most ``K`` in ``Z^D`` (origin included)."""
    return sum(2**i * math.comb(D, i) * math.comb(K, i) for i in range(min(D, K) + 1))


def _half_ball_chunks(D: int, K: int) -> Iterator[np.ndarray]:
    """Yield the nonzero ``k`` with ``||k|| <= K`` whose first nonzero entry is positive.

    Chunks come out in lexicographic order; each fixes all but the last entry.
    """

    def rec(prefix: list[int], budget: int, positive_seen: bool):
        depth = len(prefix)
        if depth == D - 1:
            lo = 1 if not positive_seen else -budget
            if lo > budget:
                return
            last = np.arange(lo, budget + 1, dtype=np.int64)
            block = np.empty((last.size, D), dtype=np.int64)
            block[:, :-1] = prefix
            block[:, -1] = last
            yield block
            return
        start = 0 if not positive_seen else -budget
        for v in range(start, budget + 1):
            yield from rec(prefix + [v], budget - abs(v), positive_seen or v > 0)

    yield from rec([], K, False)


def _nearest_int(x: np.ndarray) -> np.ndarray:
    # ties away from zero
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


@dataclass(frozen=True)
class DivisorScan:
    K: int
    mode: str
    min_divisor: float
    argmin_k: tuple[int, ...]
    argmin_n: int | None
    alpha_estimate: float | None = None

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "mode": self.mode,
            "min_divisor": self.min_divisor,
            "argmin_k": list(self.argmin_k),
            "argmin_n": self.argmin_n,
            "alpha_estimate": self.alpha_estimate,
        }


def _scan(joint: JointRotation, K: int, mode: str, score: Callable | None):
    if K < 1:
        raise ValueError("K must be positive")
    if mode not in ("discrete", "continuous"):
        raise ValueError(f"mode must be 'discrete' or 'continuous', got {mode!r}")
    rho = np.array(joint.joint, dtype=float)
    D = rho.size
    if l1_ball_size(D, K) > BALL_GUARD:
        raise GuardExceededError(f"ball of radius {K} in Z^{D} exceeds {BALL_GUARD} points")

    active = np.ones(D, dtype=bool)
    if mode == "discrete":
        # integer phases act trivially on the torus, so their k-entries are held at 0
        rho = rho - np.floor(rho)
        active = rho != 0.0
        if not active.any():
            return 0.0, (1,) + (0,) * (D - 1), 0, 0.0
    sub = rho[active]

    best = (math.inf, None, None)
    best_score = math.inf
    for block in _half_ball_chunks(int(active.sum()), K):
        dots = block @ sub
        if mode == "discrete":
            n = _nearest_int(dots)
            div = np.abs(dots - n)
        else:
            n = None
            div = np.abs(dots)
        i = int(np.argmin(div))
        if div[i] < best[0]:
            best = (float(div[i]), block[i].copy(), None if n is None else int(n[i]))
        if score is not None:
            norms = np.abs(block).sum(axis=1)
            s = float(np.min(div * score(norms)))
            best_score = min(best_score, s)
    full = np.zeros(D, dtype=np.int64)
    full[active] = best[1]
    return best[0], tuple(int(v) for v in full), best[2], best_score


def smallest_divisor(joint: JointRotation, K: int, mode: str = "discrete",
                     delta: Callable | None = None) -> DivisorScan:
    """Exhaustive minimum of the small divisor over ``0 < ||k|| <= K``.

    ``k`` and ``-k`` give the same divisor, so only the half-space whose first
    nonzero entry is positive is scanned; among equal minima the
    lexicographically first ``k`` wins. In discrete mode ``n`` is the nearest
    integer to ``k . rho~`` (ties away from zero) and coordinates whose phase is
    an integer are skipped, since they move nothing on the torus.

    If ``delta`` is given, ``alpha_estimate`` is the minimum of
    ``divisor * delta(||k||)`` over the scan.
    """
    m, k, n, alpha = _scan(joint, K, mode, delta)
    return DivisorScan(K, mode, m, k, n, alpha if delta is not None else None)


def diophantine_witness(joint: JointRotation, K: int, tau: float,
                        mode: str = "discrete") -> float:
    """``min |k . rho~ - n| * ||k||^tau`` over the scan (``|k . rho~|`` in continuous mode)."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    return _scan(joint, K, mode, lambda r: r.astype(float) ** tau)[3]


def continued_fraction(x: float, n: int) -> tuple[list[int], list[Fraction]]:
    """First ``n`` partial quotients of ``x`` in (0, 1) and their convergents.

    The expansion runs on the exact binary value of ``x`` and stops early once
    a convergent rounds back to ``x`` (the number is rational at double
    precision) or the remainder vanishes.
    """
    if not 0.0 < x < 1.0:
        raise ValueError("x must lie in (0, 1)")
    if not 1 <= n <= 40:
        raise ValueError("n must be in [1, 40]")
    r = Fraction(x)
    quotients: list[int] = []
    convergents: list[Fraction] = []
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    for _ in range(n):
        if r == 0:
            break
        r = 1 / r
        a = math.floor(r)
        r -= a
        quotients.append(a)
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        convergents.append(Fraction(p, q))
        if p / q == x:
            break
    return quotients, convergents


# --- eta-weighted lattice -----------------------------------------------------

def _bracket(j: int) -> int:
    return max(1, abs(j))


@dataclass(frozen=True)
class LatticeVector:
    """Finite-support integer sequence ``k = (k_0, k_1, ...)``.

    ``entries`` maps index to a nonzero integer; zero entries are dropped.
    """

    entries: tuple[tuple[int, int], ...]
    eta: int = 2

    def __post_init__(self):
        cleaned = tuple(sorted((int(j), int(v)) for j, v in dict(self.entries).items() if v != 0))
        if any(j < 0 for j, _ in cleaned):
            raise ValueError("indices must be nonnegative")
        if self.eta < 2:
            raise ValueError("eta must be at least 2")
        object.__setattr__(self, "entries", cleaned)

    @classmethod
    def from_dict(cls, entries: dict[int, int], eta: int = 2) -> "LatticeVector":
        return cls(tuple(entries.items()), eta)

    @classmethod
    def from_dense(cls, values: Sequence[int], eta: int = 2) -> "LatticeVector":
        return cls(tuple(enumerate(values)), eta)

    @property
    def norm(self) -> int:
        return sum(_bracket(j) ** self.eta * abs(v) for j, v in self.entries)

    @property
    def support_max(self) -> int:
        return self.entries[-1][0] if self.entries else -1

    def dense(self) -> tuple[int, ...]:
        out = [0] * (self.support_max + 1)
        for j, v in self.entries:
            out[j] = v
        return tuple(out)

    def sort_key(self):
        return (self.norm, self.support_max, self.dense())

    def __bool__(self) -> bool:
        return bool(self.entries)


def _max_index(eta: int, nu: int) -> int:
    J = 0
    while _bracket(J + 1) ** eta <= nu:
        J += 1
    return J


@functools.lru_cache(maxsize=None)
def shell_count(eta: int, nu: int) -> int:
    """``#{k != 0 : |k|_eta = nu}`` by a signed knapsack count (no enumeration)."""
    if eta < 2:
        raise ValueError("eta must be at least 2")
    if nu <= 0:
        return 0
    ways = [0] * (nu + 1)
    ways[0] = 1
    for j in range(_max_index(eta, nu) + 1):
        c = _bracket(j) ** eta
        new = ways[:]
        for total in range(nu + 1):
            if ways[total]:
                m = 1
                while total + m * c <= nu:
                    new[total + m * c] += 2 * ways[total]
                    m += 1
        ways = new
    return ways[nu]


def enumerate_eta_shell(eta: int, nu: int) -> list[LatticeVector]:
    """All ``k`` in the eta-shell of radius ``nu``, ordered by (support max, entries)."""
    if eta < 2:
        raise ValueError("eta must be at least 2")
    if nu > SHELL_GUARD:
        raise GuardExceededError(f"nu={nu} exceeds shell guard {SHELL_GUARD}")
    if nu <= 0:
        return []
    J = _max_index(eta, nu)
    costs = [_bracket(j) ** eta for j in range(J + 1)]
    out: list[LatticeVector] = []

    def rec(j: int, remaining: int, acc: list[int]):
        if j < 0:
            if remaining == 0:
                out.append(LatticeVector(tuple(enumerate(acc)), eta))
            return
        c = costs[j]
        for m in range(remaining // c + 1):
            rest = remaining - m * c
            for v in ((0,) if m == 0 else (m, -m)):
                acc[j] = v
                rec(j - 1, rest, acc)
        acc[j] = 0

    rec(J, nu, [0] * (J + 1))
    out.sort(key=LatticeVector.sort_key)
    return out


def theta_product(k: LatticeVector, mu: float) -> float:
    """``prod_j (1 + |k_j|^mu <j>^mu)`` over the support of ``k``."""
    if mu <= 1:
        raise ValueError("mu must exceed 1")
    return math.prod(1.0 + abs(v) ** mu * _bracket(j) ** mu for j, v in k.entries)


def sup_theta_over_ball(eta: int, N: int) -> tuple[float, LatticeVector]:
    """Largest :func:`theta_product` (with ``mu = eta``) over ``0 < |k|_eta <= N``.

    Returns the value and the first maximizer in enumeration order.
    """
    if N < 1:
        raise ValueError("N must be positive")
    best = (-math.inf, None)
    for nu in range(1, N + 1):
        for k in enumerate_eta_shell(eta, nu):
            t = theta_product(k, eta)
            if t > best[0]:
                best = (t, k)
    return best
