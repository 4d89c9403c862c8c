import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import count_oracle, gamma_oracle
from sequential_chsh import quantum, strategy
from sequential_chsh.errors import DomainError, HypothesisViolated, InfeasibleAtPrecision
from sequential_chsh.strategy import UNREACHABLE

QP = math.pi / 4

# Frozen from tests/oracles.gamma_oracle (mpmath, naive threshold formula).
FROZEN_GAMMAS = [
    ((0.1, 0.01), [0.05054212545929418, 0.1139497003897348, 0.35894902731101536, None]),
    ((0.01, 0.01), [0.005050042083754171, 0.011387947163327278, 0.035874018280458386, 0.33177590060783396, None]),
    ((QP, 0.01), [0.418355697996826, 0.9293452869599381, None]),
    ((QP, 0.1), [0.45563491861040456, None]),
    ((0.1, 1.0), [0.10008341675107758, 0.3002508826149978, None]),
    ((1e-5, 0.1), [5.500000000045834e-06, 1.2663750000076521e-05, 4.2968262047227056e-05,
                   0.0004921162637880559, 0.10754274243858009, None]),
]


def _as_optional(seq):
    return [None if g is UNREACHABLE else g for g in seq]


@pytest.mark.parametrize("args,expected", FROZEN_GAMMAS)
def test_gamma_sequence_frozen(args, expected):
    got = _as_optional(strategy.gamma_sequence(*args, len(expected)))
    assert [g is None for g in got] == [g is None for g in expected]
    for g, e in zip(got, expected):
        if e is not None:
            assert g == pytest.approx(e, rel=1e-12)


def test_gamma_sequence_with_lambdas_frozen():
    got = strategy.gamma_sequence(0.3, 0.1, 3, lambda1=0.5)
    assert got[0] == pytest.approx(0.2351112226432816, rel=1e-12)
    assert got[1] == pytest.approx(0.6111914455026632, rel=1e-12)
    assert got[2] is UNREACHABLE


@settings(max_examples=40, deadline=None)
@given(st.floats(-12, math.log10(QP)), st.sampled_from([0.0, 0.01, 0.1, 1.0]), st.floats(0.1, 1.0))
def test_gamma_sequence_matches_oracle(log_theta, eps, lam1):
    theta = 10.0**log_theta
    got = _as_optional(strategy.gamma_sequence(theta, eps, 8, lambda1=lam1))
    want = gamma_oracle(theta, eps, 8, lambda1=lam1)
    for g, w in zip(got, want):
        if w is None or g is None:
            # a term within rounding of 1 may land on either side
            other = g if w is None else w
            assert other is None or other > 1 - 1e-9
        else:
            assert g == pytest.approx(w, rel=1e-9)


def test_gamma_sequence_tiny_theta_does_not_underflow():
    seq = strategy.gamma_sequence(1e-300, 0.01, 12)
    assert all(g > 0 for g in seq.finite)
    assert seq[0] == pytest.approx(1.01 * 0.5e-300, rel=1e-12)


def test_gamma_sequence_epsilon_zero_saturates():
    for theta in (1e-6, 0.1, QP):
        assert strategy.gamma_sequence(theta, 0.0, 1)[0] == pytest.approx(math.tan(theta / 2), rel=1e-14)


def test_gamma_sequence_domain_errors():
    for bad in (0.0, -1.0, 1.0):
        with pytest.raises(DomainError):
            strategy.gamma_sequence(bad, 0.1, 3)
    with pytest.raises(DomainError):
        strategy.gamma_sequence(0.1, -0.1, 3)
    with pytest.raises(DomainError):
        strategy.gamma_sequence(0.1, 0.1, 3, lambda1=0.0)


@pytest.mark.parametrize(
    "theta,eps,count",
    [(0.1, 0.01, 3), (0.01, 0.01, 4), (1e-3, 0.01, 4), (1e-10, 0.01, 6), (1e-40, 0.01, 8),
     (QP, 0.01, 2), (QP, 0.1, 1), (QP, 1.0, 1)],
)
def test_count_violations_frozen(theta, eps, count):
    # frozen from tests/oracles.count_oracle
    assert strategy.count_violations(theta, eps) == count


@settings(max_examples=25, deadline=None)
@given(st.floats(-40, math.log10(QP)), st.sampled_from([0.01, 0.1, 1.0]))
def test_count_matches_oracle_away_from_thresholds(log_theta, eps):
    theta = 10.0**log_theta
    near = [count_oracle(theta * f, eps) for f in (1 - 1e-7, 1 + 1e-7)]
    if near[0] == near[1]:
        assert strategy.count_violations(theta, eps) == near[0]


@pytest.mark.parametrize("n", range(1, 10))
def test_find_theta_certifies_n(n):
    theta = strategy.find_theta(n, 0.01)
    assert 0 < theta <= QP
    assert all(g is not None for g in gamma_oracle(theta, 0.01, n))
    assert strategy.count_violations(theta, 0.01) >= n


def test_find_theta_small_n_is_quarter_pi():
    assert strategy.find_theta(1, 0.1) == QP
    assert strategy.find_theta(2, 0.01) == QP


def test_find_theta_infeasible():
    with pytest.raises(InfeasibleAtPrecision):
        strategy.find_theta(12, 0.01)


def _excess_oracle(k, theta, gammas, dps=400):
    with mpmath.workdps(dps):
        th = mpmath.mpf(theta)
        prod = mpmath.mpf(1)
        for g in gammas[: k - 1]:
            prod *= 1 + mpmath.sqrt(1 - mpmath.mpf(g) ** 2)
        s = mpmath.mpf(2) ** (2 - k) * (mpmath.mpf(gammas[k - 1]) * mpmath.sin(th) + mpmath.cos(th) * prod)
        return float(s - 2)


@pytest.mark.parametrize("n", [3, 5, 7, 9])
def test_chsh_excess_matches_oracle(n):
    theta = strategy.find_theta(n, 0.01)
    gammas = strategy.gamma_sequence(theta, 0.01, n).finite
    for k in range(1, n + 1):
        got = strategy.chsh_excess(k, theta, gammas)
        want = _excess_oracle(k, theta, gammas)
        assert got > 0
        assert got == pytest.approx(want, rel=1e-8)


def test_chsh_analytic_tsirelson_and_bound():
    assert strategy.chsh_analytic(1, QP, [1.0]) == pytest.approx(2 * math.sqrt(2), abs=1e-15)
    theta = 0.2
    gammas = strategy.gamma_sequence(theta, 0.01, 3).finite
    for k in range(1, 4):
        assert strategy.chsh_analytic(k, theta, gammas) <= 2 + 2 ** (2 - k) * theta


def test_build_plan_for_states():
    plan = strategy.build_plan(quantum.make_bell_state(), 4, 0.01)
    assert plan.n == 4 and all(0 < g < 1 for g in plan.gammas)
    assert 1e-3 < plan.theta < 0.1
    schmidt = strategy.build_plan(quantum.make_schmidt_state(0.3), 3, 0.1)
    assert schmidt.lambda1 == pytest.approx(math.sin(0.6) ** 2)
    with pytest.raises(HypothesisViolated):
        strategy.build_plan(quantum.make_maximally_mixed(), 1)
    with pytest.raises(HypothesisViolated):
        strategy.build_plan(quantum.make_family_state(1.0, 0), 1)


def test_plan_validation():
    with pytest.raises(DomainError):
        strategy.MeasurementPlan.standard(0.1, [])
    with pytest.raises(DomainError):
        strategy.MeasurementPlan.standard(0.1, [1.5])
    with pytest.raises(DomainError):
        strategy.MeasurementPlan(0.1, 0.0, (0.5,), ((0, 0, 1), (0, 0, 1)), ((0, 0, 1), (1, 0, 0)))


def test_simulate_bell_high_precision():
    plan = strategy.build_plan(quantum.make_bell_state(), 7, 0.01)
    report = strategy.simulate_sequence(quantum.make_bell_state(), plan, dps=strategy.required_dps(plan.theta))
    assert report.n_violations == 7
    assert report.consistent(1e-12)
    for row in report.rows:
        assert row.bound_ok
        assert row.excess_simulated == pytest.approx(row.excess_analytic, rel=1e-9)


def test_simulate_double_precision_family_state():
    state = quantum.make_family_state(0.6, 0.4)
    plan = strategy.build_plan(state, 3, 0.1)
    report = strategy.simulate_sequence(state, plan)
    assert report.consistent(1e-12)
    assert report.n_violations == 3


def test_simulate_mixed_override_gives_zero():
    plan = strategy.build_plan(quantum.make_bell_state(), 3, 0.01)
    report = strategy.simulate_sequence(quantum.make_maximally_mixed(), plan)
    assert all(r.s_analytic == 0 and abs(r.s_simulated) < 1e-15 and not r.violates for r in report.rows)
