"""Unit and property tests for the exact state/operator core."""

import math

import numpy as np
import pytest

from wiesnerlab import qcore
from wiesnerlab.qcore import (DensityQubit, JointState, controlled,
                              fidelity_pure, measure_money, rotate,
                              trace_distance)


def test_rotate_quarter_and_identity():
    assert rotate(qcore.KET0, 0.0).same_state(qcore.KET0, 1e-14)
    out = rotate(qcore.KET0, math.pi / 4)
    assert out.a0 == pytest.approx(math.cos(math.pi / 4), abs=1e-15)
    assert out.a1 == pytest.approx(math.sin(math.pi / 4), abs=1e-15)
    assert rotate(qcore.KET0, math.pi / 2).same_state(qcore.KET1, 1e-14)


def test_controlled_x_fixes_plus():
    cx = controlled(qcore.SIGMA_X)
    joint = cx.apply(JointState.product(qcore.KET1, qcore.PLUS))
    expect = JointState.product(qcore.KET1, qcore.PLUS)
    assert np.allclose(joint.as_array(), expect.as_array(), atol=1e-14)


def test_controlled_identity_is_identity():
    ci = controlled(qcore.IDENTITY2)
    rng = np.random.default_rng(7)
    for _ in range(20):
        probe, money = qcore.random_qubit(rng), qcore.random_qubit(rng)
        joint = JointState.product(probe, money)
        assert np.allclose(ci.apply(joint).as_array(), joint.as_array(), atol=1e-14)


def test_controlled_x_is_cnot():
    cx = controlled(qcore.SIGMA_X)
    joint = cx.apply(JointState.product(qcore.KET1, qcore.KET0))
    assert np.allclose(joint.as_array(),
                       JointState.product(qcore.KET1, qcore.KET1).as_array(),
                       atol=1e-15)


def test_measure_money_product_match():
    joint = JointState.product(qcore.KET0, qcore.PLUS)
    br = measure_money(joint, qcore.PLUS)
    assert br.p_pass == pytest.approx(1.0, abs=1e-12)
    assert br.pass_probe.same_state(qcore.KET0, 1e-12)
    assert br.p_fail == pytest.approx(0.0, abs=1e-12)
    assert br.fail_probe is None  # empty branch marker


def test_measure_money_entangled_branches():
    delta = 0.3
    c, s = math.cos(delta), math.sin(delta)
    joint = JointState(c, 0, 0, s)  # cos d |00> + sin d |11>
    br = measure_money(joint, qcore.KET0)
    assert br.p_pass == pytest.approx(c * c, abs=1e-14)
    assert br.p_fail == pytest.approx(s * s, abs=1e-14)
    assert br.pass_probe.same_state(qcore.KET0, 1e-12)
    assert br.fail_probe.same_state(qcore.KET1, 1e-12)


def test_measure_money_half_half():
    joint = JointState.product(qcore.KET0, qcore.KET0)
    br = measure_money(joint, qcore.PLUS)
    assert br.p_pass == pytest.approx(0.5, abs=1e-12)
    assert br.p_fail == pytest.approx(0.5, abs=1e-12)
    assert br.pass_probe.same_state(qcore.KET0, 1e-12)
    assert br.fail_probe.same_state(qcore.KET0, 1e-12)


def test_fidelity_pure_examples():
    assert fidelity_pure(DensityQubit((0, 0, 1)), qcore.KET0) == pytest.approx(1.0)
    assert fidelity_pure(DensityQubit.maximally_mixed(), qcore.PLUS) == pytest.approx(0.5)
    assert fidelity_pure(DensityQubit((1, 0, 0)), qcore.MINUS) == pytest.approx(0.0, abs=1e-14)


def test_fidelity_rejects_nonpositive():
    with pytest.raises(ValueError):
        fidelity_pure(DensityQubit((0, 0, 2)), qcore.KET0)


def test_trace_distance_examples():
    a = DensityQubit((0.3, -0.2, 0.5))
    assert trace_distance(a, a) == 0.0
    assert trace_distance(DensityQubit((0, 0, 1)), DensityQubit((0, 0, -1))) == pytest.approx(1.0)
    # non-positive input allowed; cross-check via eigenvalues of the matrix difference
    a, b = DensityQubit((0, 0, 2)), DensityQubit((0, 0, 1))
    assert trace_distance(a, b) == pytest.approx(0.5)
    diff = a.as_matrix() - b.as_matrix()
    eig_sum = 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))
    assert trace_distance(a, b) == pytest.approx(eig_sum, abs=1e-12)


def test_trace_distance_matches_matrix_form_random():
    rng = np.random.default_rng(5)
    for _ in range(200):
        ra = rng.uniform(-1, 1, 3)
        rb = rng.uniform(-1, 1, 3)
        a, b = DensityQubit(tuple(ra)), DensityQubit(tuple(rb))
        eig_sum = 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(a.as_matrix() - b.as_matrix()))))
        assert trace_distance(a, b) == pytest.approx(eig_sum, abs=1e-12)


# ---------------------------------------------------------------------------
# Invariants over random inputs
# ---------------------------------------------------------------------------

def test_normalization_closed_under_operations():
    rng = np.random.default_rng(11)
    for _ in range(10_000):
        q = qcore.random_qubit(rng)
        assert abs(rotate(q, rng.uniform(0, 2 * math.pi)).norm2() - 1.0) <= 1e-12
        assert abs(q.orthogonal().norm2() - 1.0) <= 1e-12


def test_measurement_branches_normalized_and_complete():
    rng = np.random.default_rng(13)
    for _ in range(10_000):
        v = rng.normal(size=8)
        z = v[:4] + 1j * v[4:]
        z /= np.linalg.norm(z)
        joint = JointState.from_array(z)
        key = qcore.random_qubit(rng)
        br = measure_money(joint, key)
        assert abs(br.p_pass + br.p_fail - 1.0) <= 1e-12
        if br.pass_probe is not None:
            assert abs(br.pass_probe.norm2() - 1.0) <= 1e-12
        if br.fail_probe is not None:
            assert abs(br.fail_probe.norm2() - 1.0) <= 1e-12


def test_unitarity_of_building_blocks():
    rng = np.random.default_rng(17)
    for op in (qcore.IDENTITY2, qcore.SIGMA_X, qcore.SIGMA_Y, qcore.SIGMA_Z):
        assert op.unitarity_defect() <= 1e-12
    for _ in range(200):
        delta = rng.uniform(0, 2 * math.pi)
        assert qcore.rotation(delta).unitarity_defect() <= 1e-12
        axis = rng.normal(size=3)
        pauli = qcore.pauli_from_axis(*axis)
        assert pauli.unitarity_defect() <= 1e-12
        assert controlled(pauli).unitarity_defect() <= 1e-12


def test_born_rule_sampling_oracle():
    """Sampled outcome frequencies match branch probabilities to 4 sigma."""
    rng = np.random.default_rng(19)
    trials = 100_000
    for p_target in (0.133, 0.5, 0.871):
        theta = math.acos(math.sqrt(p_target))
        joint = JointState.product(qcore.KET0, qcore.from_polar(theta))
        br = measure_money(joint, qcore.KET0)
        assert br.p_pass == pytest.approx(p_target, abs=1e-12)
        hits = int(np.count_nonzero(rng.random(trials) < br.p_pass))
        sigma = math.sqrt(p_target * (1 - p_target) / trials)
        assert abs(hits / trials - p_target) <= 4 * sigma


def test_postselected_probe_maps_contract():
    """E_pass/E_fail reproduce the measured branches of op acting on a product."""
    rng = np.random.default_rng(23)
    for _ in range(200):
        money = qcore.random_qubit(rng)
        probe = qcore.random_qubit(rng)
        op = controlled(qcore.pauli_from_axis(*rng.normal(size=3)))
        e_pass, e_fail = qcore.postselected_probe_maps(op, money)
        joint = op.apply(JointState.product(probe, money))
        br = measure_money(joint, money)
        v_pass = e_pass @ probe.as_array()
        v_fail = e_fail @ probe.as_array()
        assert np.vdot(v_pass, v_pass).real == pytest.approx(br.p_pass, abs=1e-12)
        assert np.vdot(v_fail, v_fail).real == pytest.approx(br.p_fail, abs=1e-12)
        if br.pass_probe is not None:
            got = v_pass / np.linalg.norm(v_pass)
            assert abs(abs(np.vdot(got, br.pass_probe.as_array())) - 1.0) <= 1e-12


def test_bloch_roundtrip():
    rng = np.random.default_rng(29)
    for _ in range(500):
        q = qcore.random_qubit(rng)
        rho = q.to_density()
        assert rho.is_positive(1e-12)
        assert fidelity_pure(rho, q) == pytest.approx(1.0, abs=1e-12)
        mat = rho.as_matrix()
        outer = np.outer(q.as_array(), q.as_array().conj())
        assert np.allclose(mat, outer, atol=1e-12)
