"""The compiled kernel and the pure-Python fallback must agree."""

import math

import numpy as np
import pytest

from wiesnerlab import qcore
from wiesnerlab._rounds import BACKEND, get_backend


def _have_cython():
    try:
        get_backend("cython")
        return True
    except ImportError:
        return False


pytestmark = pytest.mark.skipif(not _have_cython(),
                                reason="compiled kernel not built")


def _random_case(rng):
    theta = rng.uniform(0, math.pi / 2)
    delta = rng.uniform(1e-4, 0.2)
    money = qcore.from_polar(theta)
    from wiesnerlab.bt_attack import reflection_about
    e_pass, _ = qcore.postselected_probe_maps(
        qcore.controlled(reflection_about(qcore.KET0)), money)
    m_pass = e_pass @ qcore.rotation(delta).as_array()
    probe = qcore.random_qubit(rng).as_array()
    return m_pass, probe


def test_backends_agree_exactly_on_shared_uniforms():
    py = get_backend("python")
    cy = get_backend("cython")
    rng = np.random.default_rng(0)
    for _ in range(200):
        m_pass, probe = _random_case(rng)
        n = int(rng.integers(1, 400))
        uniforms = rng.random(n)
        r_py = py.sample_transfer_rounds(m_pass, probe, n, uniforms)
        r_cy = cy.sample_transfer_rounds(m_pass, probe, n, uniforms)
        assert r_py[0] == r_cy[0]
        assert np.max(np.abs(r_py[1] - r_cy[1])) <= 1e-13


def test_backend_rejects_short_uniforms():
    cy = get_backend("cython")
    m = np.eye(2, dtype=complex)
    with pytest.raises(ValueError):
        cy.sample_transfer_rounds(m, np.array([1.0 + 0j, 0j]), 10, np.zeros(3))


def test_backend_reports_identity():
    assert BACKEND in ("cython", "python")


def test_kernel_survival_statistics():
    """Kernel survival frequency matches the closed form (live-bomb case)."""
    cy = get_backend("cython")
    n = 100
    delta = math.pi / (2 * n)
    e_pass, _ = qcore.postselected_probe_maps(
        qcore.controlled(qcore.SIGMA_X), qcore.KET0)
    m_pass = e_pass @ qcore.rotation(delta).as_array()
    probe = qcore.KET0.as_array()
    rng = np.random.default_rng(1)
    trials = 20_000
    survived = 0
    for _ in range(trials):
        caught, _out = cy.sample_transfer_rounds(m_pass, probe, n, rng.random(n))
        survived += caught == 0
    p = (1 - math.sin(delta) ** 2) ** n
    sigma = math.sqrt(p * (1 - p) / trials)
    assert abs(survived / trials - p) <= 4 * sigma
