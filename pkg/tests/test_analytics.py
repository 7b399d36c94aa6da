"""Sweep, bound-fit, and scaling-report tests (with brute-force oracles)."""

import io
import math

import numpy as np
import pytest

from wiesnerlab import qcore
from wiesnerlab.analytics import (FITTED_BOUND_CONSTANT, OutcomeTriple,
                                  bound_0tn0_check, bt_outcomes,
                                  default_sweep_grid, pm_scaling_check,
                                  sweep_theta, write_sweep_csv)
from wiesnerlab.bt_attack import reflection_about


def test_bt_outcomes_dud():
    out = bt_outcomes(0.0, 500)
    assert out.p_caught == pytest.approx(0.0, abs=1e-12)
    assert out.p_probe0 == pytest.approx(0.0, abs=1e-12)
    assert out.p_probe1 == pytest.approx(1.0, abs=1e-12)


def test_bt_outcomes_orthogonal_even():
    out = bt_outcomes(math.pi / 2, 500)
    assert out.p_caught == pytest.approx(0.0, abs=1e-12)
    assert out.p_probe0 == pytest.approx(1.0, abs=1e-12)
    assert out.p_probe1 == pytest.approx(0.0, abs=1e-12)


def test_bt_outcomes_crossover_catches():
    """theta near 1/sqrt(N): constant-order probability of getting caught."""
    n = 10_000
    out = bt_outcomes(1.0 / math.sqrt(n), n)
    assert out.p_caught >= 0.2


def test_outcomes_sum_to_one_everywhere():
    for n in (100, 1000, 10_000):
        for x in default_sweep_grid(50):
            theta = min(x / math.sqrt(n), math.pi / 2)
            out = bt_outcomes(theta, n)
            assert abs(out.total() - 1.0) <= 1e-10
            for p in (out.p_caught, out.p_probe0, out.p_probe1):
                assert -1e-12 <= p <= 1.0 + 1e-12


def _brute_force_outcomes(theta, n_rounds):
    """Full joint-state round-by-round postselected evolution (oracle)."""
    money = qcore.from_polar(theta)
    gate = qcore.controlled(reflection_about(qcore.KET0))
    delta = math.pi / (2 * n_rounds)
    rot = qcore.rotation(delta).as_array()
    v = np.array([1.0 + 0j, 0.0 + 0j])  # unnormalized probe
    for _ in range(n_rounds):
        probe = rot @ v
        joint = gate.apply(qcore.JointState.from_array(np.kron(probe, money.as_array())))
        v = np.array([
            money.a0.conjugate() * joint.c00 + money.a1.conjugate() * joint.c01,
            money.a0.conjugate() * joint.c10 + money.a1.conjugate() * joint.c11,
        ])
    p0 = float(abs(v[0]) ** 2)
    p1 = float(abs(v[1]) ** 2)
    return OutcomeTriple(1.0 - p0 - p1, p0, p1)


@pytest.mark.parametrize("theta", [0.02, 0.05, 0.2, 0.7, 1.3])
def test_bt_outcomes_matches_brute_force(theta):
    n = 1000
    fast = bt_outcomes(theta, n)
    slow = _brute_force_outcomes(theta, n)
    assert fast.p_caught == pytest.approx(slow.p_caught, abs=1e-10)
    assert fast.p_probe0 == pytest.approx(slow.p_probe0, abs=1e-10)
    assert fast.p_probe1 == pytest.approx(slow.p_probe1, abs=1e-10)


def test_sweep_endpoints():
    rows = sweep_theta(10_000)
    assert rows[0].theta_sqrt_n == pytest.approx(0.01)
    assert rows[-1].theta_sqrt_n == pytest.approx(10.0)
    assert rows[0].outcome.p_probe1 >= 0.99
    # the Zeno-side catch mass dies off like pi^2/(4 x^2): still ~2.4% at x=10
    assert rows[-1].outcome.p_probe0 >= 0.97
    assert rows[-1].outcome.p_probe0 > rows[-1].outcome.p_probe1
    # dominance flips across the sweep
    assert rows[0].outcome.p_probe1 > rows[0].outcome.p_probe0


def test_sweep_scaling_collapse():
    grid = default_sweep_grid(60)
    r1 = sweep_theta(10_000, grid)
    r2 = sweep_theta(40_000, grid)
    sup = 0.0
    for a, b in zip(r1, r2):
        sup = max(sup,
                  abs(a.outcome.p_caught - b.outcome.p_caught),
                  abs(a.outcome.p_probe0 - b.outcome.p_probe0),
                  abs(a.outcome.p_probe1 - b.outcome.p_probe1))
    assert sup <= 0.01


def test_sweep_csv_format():
    rows = sweep_theta(1000, default_sweep_grid(5))
    buf = io.StringIO()
    write_sweep_csv(rows, buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "theta,N,delta,theta_sqrtN,p_caught,p_probe0,p_probe1"
    assert len(lines) == 6
    fields = lines[1].split(",")
    assert int(fields[1]) == 1000
    assert float(fields[3]) == pytest.approx(0.01)


def test_bound_fit_constant():
    report = bound_0tn0_check()
    assert report.satisfied
    assert report.c_fit <= 1e3
    # the shipped constant still bounds the freshly fitted one
    assert report.c_fit <= FITTED_BOUND_CONSTANT
    assert report.c_fit == pytest.approx(0.979, abs=0.01)


def test_bound_fit_rejects_theta_zero():
    with pytest.raises(ValueError):
        bound_0tn0_check(np.array([0.0, 0.3]))


def test_bound_slack_grows_toward_small_theta():
    """At fixed N the bound ratio grows as theta shrinks toward theta_min."""
    n = 10_000
    thetas = [0.1, 0.4, 0.9, 1.4]
    ratios = []
    for theta in thetas:
        rep = bound_0tn0_check(np.array([theta]), (n,))
        ratios.append(rep.c_fit)
    assert ratios == sorted(ratios, reverse=True)


def test_pm_scaling_eigenstate_exact_zero():
    rep = pm_scaling_check(qcore.SIGMA_X, [qcore.PLUS, qcore.MINUS], math.pi / 8)
    for row in rep.rows:
        assert row.n_times_catch == pytest.approx(0.0, abs=1e-9)
        assert row.n_times_eig_err == pytest.approx(0.0, abs=1e-9)
        assert row.n_times_state_err == pytest.approx(0.0, abs=1e-9)
    assert rep.bounded


def test_pm_scaling_zero_expectation_value():
    rep = pm_scaling_check(qcore.SIGMA_X, [qcore.KET0], math.pi / 2, (1000,))
    row = rep.rows[0]
    assert row.n_times_catch / 1000 == pytest.approx(
        1 - math.cos(math.pi / 2000) ** 2000, abs=1e-12)


def test_pm_scaling_bounded_for_random_states():
    rng = np.random.default_rng(42)
    states = [qcore.random_qubit(rng) for _ in range(50)]
    rep = pm_scaling_check(qcore.SIGMA_X, states, math.pi / 8)
    assert rep.bounded
