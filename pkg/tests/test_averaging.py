import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multiergodic.averaging import (
    AverageSpec,
    BudgetExceededError,
    Continuous,
    Discrete,
    SingularDenominatorError,
    cmw,
    counterexample_H,
    counterexample_rhos,
    dmw,
    error_curve,
    orbit,
    resonant_H,
    weighted_average,
)
from multiergodic.observables import constant, make_sin, make_weak_regularity_series
from multiergodic.rotations import golden, make_joint
from multiergodic.weights import make_weight

PHI = (math.sqrt(5) - 1) / 2
EPS = np.finfo(float).eps
SIN = make_sin(1)


def golden_spec(weight="bump", N=100, theta0=0.1):
    return AverageSpec(make_weight(weight), (SIN, SIN), make_joint([golden(), 1.0]), theta0, Discrete(N))


def cont_spec(rhos, T, weight="sin2"):
    return AverageSpec(make_weight(weight), (SIN, SIN), make_joint(list(rhos)), 0.0, Continuous(T))


def test_spec_validation():
    with pytest.raises(ValueError):
        AverageSpec(make_weight("bump"), (SIN,), make_joint([0.1, 0.2]), 0.0, Discrete(10))
    with pytest.raises(ValueError):
        AverageSpec(make_weight("bump"), (make_sin(2),), make_joint([0.1]), 0.0, Discrete(10))
    with pytest.raises(ValueError):
        Discrete(0)
    with pytest.raises(ValueError):
        Continuous(-1.0)
    with pytest.raises(ValueError):
        Continuous(10.0, nodes_per_period=4)


def test_hand_sum():
    spec = AverageSpec(make_weight("uniform"), (SIN,), make_joint([0.125]), 0.0, Discrete(4))
    assert dmw(spec).value == pytest.approx((1 + math.sqrt(2)) / 4, rel=1e-15)


def test_golden_weighted():
    r = dmw(golden_spec())
    assert r.target == 0.0
    assert r.abs_error <= 1e-8
    assert r.abs_error == abs(r.value - r.target)


def test_orbit_phases():
    pts = orbit([0.1], [PHI], 1000)
    direct = np.mod(0.1 + np.arange(1000) * PHI, 1.0)
    assert np.max(np.abs(pts[:, 0] - direct)) < 1e-12
    assert np.all((pts >= 0) & (pts < 1))


@pytest.mark.parametrize("weight", ["uniform", "sin2", "bump"])
@pytest.mark.parametrize("N", [1, 2, 17, 300])
def test_constants_are_exact(weight, N):
    if weight != "uniform" and N == 1:
        pytest.skip("A_1 = 0 for weights vanishing at 0")
    spec = AverageSpec(make_weight(weight), (constant(1.0), constant(1.0)), make_joint([PHI, 0.3]), 0.2,
                       Discrete(N))
    assert dmw(spec).abs_error <= 10 * EPS


def test_zero_weight_sum_guarded():
    spec = AverageSpec(make_weight("bump"), (SIN,), make_joint([PHI]), 0.0, Discrete(1))
    with pytest.raises(ZeroDivisionError):
        dmw(spec)


@settings(max_examples=40, deadline=None)
@given(st.integers(-20, 20), st.integers(2, 200))
def test_normalization_invariance_power_of_two(e, N):
    w = make_weight("bump")(np.arange(N) / N)
    v = np.sin(np.arange(N) * 0.7)
    if math.fsum(w) == 0:
        return
    assert weighted_average(w * 2.0**e, v) == weighted_average(w, v)


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-3, 1e3), st.integers(2, 200))
def test_normalization_invariance_general(c, N):
    w = make_weight("sin2")(np.arange(N) / N)
    v = np.cos(np.arange(N) * 1.3)
    a, b = weighted_average(w * c, v), weighted_average(w, v)
    assert a == pytest.approx(b, rel=1e-14, abs=1e-14 * np.max(np.abs(v)))


def test_initial_point_robustness():
    vals = [dmw(golden_spec(N=2000, theta0=t)).value for t in (0.1, 0.37, 0.91)]
    assert max(vals) - min(vals) < 1e-8


def test_determinism():
    assert dmw(golden_spec(N=777)) == dmw(golden_spec(N=777))


def test_continuous_constant():
    spec = AverageSpec(make_weight("bump"), (constant(1.0),), make_joint([PHI]), 0.0, Continuous(3.0))
    assert cmw(spec).abs_error <= 10 * EPS


def test_counterexample_rhos():
    r1, r2 = counterexample_rhos()
    assert r1 - r2 == pytest.approx(math.pi)
    assert (r1 + r2) / (r1 - r2) == pytest.approx(4 / math.pi)


@pytest.mark.parametrize("T", [5.0, 10.0, 20.0])
def test_cmw_matches_closed_form(T):
    assert cmw(cont_spec(counterexample_rhos(), T)).value == pytest.approx(counterexample_H(T), abs=1e-9)


@pytest.mark.parametrize("n", [5, 17, 60, 200])
def test_closed_form_at_T_n(n):
    ups = 4 / math.pi
    ref = abs(math.sin(8 * n)) / (4 * math.pi * ups * n * (ups**2 * n * n - 1))
    assert abs(counterexample_H(n / math.pi)) == pytest.approx(ref, rel=1e-8)


def test_closed_form_against_quad():
    from scipy import integrate
    r1, r2 = counterexample_rhos()
    T = 7.3
    f = lambda y: 2 * math.sin(math.pi * y) ** 2 * math.sin(2 * math.pi * T * y * r1) * math.sin(2 * math.pi * T * y * r2)
    val, _ = integrate.quad(f, 0, 1, limit=400, epsabs=1e-14)
    assert counterexample_H(T) == pytest.approx(val, abs=1e-12)
    g = lambda y: 2 * math.sin(math.pi * y) ** 2 * math.sin(2 * math.pi * T * y * PHI) ** 2
    val, _ = integrate.quad(g, 0, 1, limit=400, epsabs=1e-14)
    assert resonant_H(T, PHI) == pytest.approx(val, abs=1e-12)


@pytest.mark.parametrize("T", [50.0, 100.0])
def test_cmw_matches_resonant(T):
    assert cmw(cont_spec((PHI, PHI), T)).value == pytest.approx(resonant_H(T, PHI), abs=1e-9)


def test_resonant_limit():
    assert abs(resonant_H(1000, PHI) - 0.5) < 1e-9
    for T in (100, 300, 1000, 3000):
        assert cmw(cont_spec((PHI, PHI), T)).abs_error > 0.49


def test_singular_denominators():
    r1, r2 = counterexample_rhos()
    with pytest.raises(SingularDenominatorError):
        counterexample_H(1 / (r1 - r2))
    with pytest.raises(SingularDenominatorError):
        resonant_H(1.0, 0.5)
    with pytest.raises(SingularDenominatorError):
        resonant_H(1.0, 0.0)


def test_budget_guard():
    with pytest.raises(BudgetExceededError):
        cmw(cont_spec((PHI, PHI), 1e8))


def test_error_curve():
    scales = [10, 20, 50, 100, 200, 500, 1000, 2000]
    weighted = error_curve(golden_spec(), scales)
    plain = error_curve(golden_spec("uniform"), scales)
    assert [r.scale for r in weighted] == scales
    for a, b in zip(weighted, plain):
        if a.scale >= 50:
            assert a.abs_error < b.abs_error
    threaded = error_curve(golden_spec(), scales, threads=4)
    assert threaded == weighted
    with pytest.raises(ValueError):
        error_curve(golden_spec(), [10, 10])


def test_floor_reported():
    r = dmw(golden_spec(N=1000))
    assert 0 < r.floor < 1e-14


def test_weak_regularity_is_slower():
    w = make_weak_regularity_series(100)
    spec = AverageSpec(make_weight("bump"), (w, SIN), make_joint([0.010010001, 1.0]), 0.1, Discrete(100))
    assert dmw(spec).abs_error > 1e3 * dmw(golden_spec()).abs_error
