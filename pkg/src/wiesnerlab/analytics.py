"""Closed-form and matrix-power numerics for the probe round maps.

Reproduces the three-outcome behavior of a reflection probe run as a
function of θ√N, fits the constant in the one-round-map survival bound, and
tabulates the O(1/N) error scalings of the weak-coupling round map. These
numbers calibrate the attack round budgets and back the acceptance checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bt_attack import TransferMatrix
from .pm_attack import RoundMap
from .qcore import Operator2, PureQubit

# Fitted constant of the survival bound 1 − ⟨0|T^N|0⟩ ≤ c·Nδ²/(1−q) over
# θ ∈ [0.1, 1.4], N ∈ {10², 10³, 10⁴} (see bound_0tn0_check): the fit gives
# ≈ 0.979, shipped rounded up so the list attack can budget rounds without
# re-fitting.
FITTED_BOUND_CONSTANT = 1.0


@dataclass(frozen=True)
class OutcomeTriple:
    """Probabilities of the three run outcomes: caught, probe 0, probe 1."""

    p_caught: float
    p_probe0: float
    p_probe1: float

    def total(self) -> float:
        return self.p_caught + self.p_probe0 + self.p_probe1


@dataclass(frozen=True)
class SweepRow:
    theta: float
    n_rounds: int
    delta: float
    theta_sqrt_n: float
    outcome: OutcomeTriple


def bt_outcomes(theta: float, n_rounds: int) -> OutcomeTriple:
    """Exact outcome probabilities of an N-round reflection probe run.

    v = T^N|0⟩ gives p(probe 0) = |v₀|², p(probe 1) = |v₁|², and the
    norm deficit 1 − ‖v‖² is the probability of getting caught.
    """
    if not (0.0 <= theta <= math.pi / 2):
        raise ValueError("theta must be in [0, pi/2]")
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    t = TransferMatrix(theta, math.pi / (2 * n_rounds))
    v = t.power_state(n_rounds)
    p0 = float(abs(v[0]) ** 2)
    p1 = float(abs(v[1]) ** 2)
    return OutcomeTriple(max(0.0, 1.0 - p0 - p1), p0, p1)


def default_sweep_grid(points: int = 200) -> np.ndarray:
    """Log-spaced θ√N grid over [10⁻², 10¹]."""
    return np.logspace(-2.0, 1.0, points)


def sweep_theta(n_rounds: int = 10_000, theta_sqrt_n: np.ndarray | None = None) -> list[SweepRow]:
    """Outcome probabilities along a θ√N grid at fixed (large) N.

    Plotted against θ√N the curves are N-independent, which is what makes
    the large-but-finite N here a faithful stand-in for the N → ∞ limit:
    the caught probability vanishes at both ends of the sweep and the
    dominant probe reading flips from 1 to 0 across it.
    """
    if theta_sqrt_n is None:
        theta_sqrt_n = default_sweep_grid()
    sqrt_n = math.sqrt(n_rounds)
    delta = math.pi / (2 * n_rounds)
    rows = []
    for x in theta_sqrt_n:
        theta = min(float(x) / sqrt_n, math.pi / 2)
        rows.append(SweepRow(theta, n_rounds, delta, float(x),
                             bt_outcomes(theta, n_rounds)))
    return rows


SWEEP_CSV_HEADER = "theta,N,delta,theta_sqrtN,p_caught,p_probe0,p_probe1"


def write_sweep_csv(rows: list[SweepRow], fh) -> None:
    """Emit sweep rows as CSV with 12-significant-digit floats."""
    fh.write(SWEEP_CSV_HEADER + "\n")
    for r in rows:
        o = r.outcome
        fields = (r.theta, r.n_rounds, r.delta, r.theta_sqrt_n,
                  o.p_caught, o.p_probe0, o.p_probe1)
        fh.write(",".join(f"{f:.12g}" if isinstance(f, float) else str(f)
                          for f in fields) + "\n")


# ---------------------------------------------------------------------------
# Survival-bound fit
# ---------------------------------------------------------------------------

@dataclass
class BoundFitReport:
    """Fit of 1 − ⟨0|T^N|0⟩ ≤ c·Nδ²/(1−q) across a (θ, N) grid."""

    c_fit: float
    satisfied: bool
    cap: float
    worst_theta: float
    worst_n: int
    table: list[dict]


def bound_0tn0_check(theta_grid: np.ndarray | None = None,
                     n_grid: tuple[int, ...] = (100, 1_000, 10_000),
                     cap: float = 1e3) -> BoundFitReport:
    """Fit the single constant of the one-run survival-amplitude bound.

    For each grid point computes (1 − ⟨0|T^N|0⟩)·(1 − q)/(Nδ²); the maximum
    over the grid is the smallest constant making the bound hold everywhere.
    Fails (satisfied=False) if no constant under `cap` works.
    """
    if theta_grid is None:
        theta_grid = np.linspace(0.1, 1.4, 27)
    c_fit = 0.0
    worst = (0.0, 0)
    table = []
    for theta in theta_grid:
        theta = float(theta)
        q = math.cos(2.0 * theta)
        if q >= 1.0:
            raise ValueError("theta grid must keep q = cos 2θ below 1")
        for n in n_grid:
            delta = math.pi / (2 * n)
            t = TransferMatrix(theta, delta)
            amp = float(np.real(t.power_state(n)[0]))
            ratio = (1.0 - amp) * (1.0 - q) / (n * delta * delta)
            table.append({"theta": theta, "N": n, "one_minus_amp": 1.0 - amp,
                          "ratio": ratio})
            if ratio > c_fit:
                c_fit = ratio
                worst = (theta, n)
    return BoundFitReport(c_fit, c_fit <= cap, cap, worst[0], worst[1], table)


# ---------------------------------------------------------------------------
# Weak-coupling error scalings
# ---------------------------------------------------------------------------

@dataclass
class ScalingRow:
    exp_a: float
    n_rounds: int
    n_times_catch: float        # N · (1 − p_pass)
    n_times_eig_err: float      # N · max |λ^N − e^{∓ic⟨A⟩}|
    n_times_state_err: float    # N · ‖φ_N − e^{−ic⟨A⟩σx}φ₀‖


@dataclass
class ScalingReport:
    rows: list[ScalingRow]
    bounded: bool
    growth_factor: float


def pm_scaling_check(observable: Operator2, money_states: list[PureQubit],
                     coupling_budget: float,
                     n_grid: tuple[int, ...] = (100, 1_000, 10_000),
                     growth_factor: float = 1.25,
                     probe_init: PureQubit | None = None) -> ScalingReport:
    """Tabulate the N-scaled weak-coupling errors and check they don't grow.

    All three columns are O(1) in N if the round map converges to the
    unitary e^{−ic⟨A⟩σx} at rate 1/N; `bounded` asserts that no column
    grows by more than `growth_factor` over the N grid (tiny absolute
    values are exempt — eigenstates make all columns exactly zero).
    """
    from . import qcore

    if probe_init is None:
        probe_init = qcore.KET0
    n_grid = tuple(sorted(n_grid))
    rows = []
    bounded = True
    for alpha in money_states:
        exp_a = float(observable.expectation(alpha).real)
        per_state = []
        for n in n_grid:
            delta = coupling_budget / n
            w = RoundMap(delta, exp_a)
            v = w.power_apply(probe_init, n)
            p_pass = float(np.real(np.vdot(v, v)))
            target_phase = coupling_budget * exp_a
            eig_err = max(
                abs(w.eig_plus**n - complex(math.cos(target_phase), -math.sin(target_phase))),
                abs(w.eig_minus**n - complex(math.cos(target_phase), math.sin(target_phase))),
            )
            phi_n = v / math.sqrt(p_pass)
            target = np.array([
                math.cos(target_phase) * probe_init.a0 - 1j * math.sin(target_phase) * probe_init.a1,
                -1j * math.sin(target_phase) * probe_init.a0 + math.cos(target_phase) * probe_init.a1,
            ])
            state_err = float(np.linalg.norm(phi_n - target))
            row = ScalingRow(exp_a, n, n * (1.0 - p_pass), n * eig_err, n * state_err)
            rows.append(row)
            per_state.append(row)
        first = per_state[0]
        for row in per_state[1:]:
            for attr in ("n_times_catch", "n_times_eig_err", "n_times_state_err"):
                base = getattr(first, attr)
                if getattr(row, attr) > max(growth_factor * base, 1e-6):
                    bounded = False
    return ScalingReport(rows, bounded, growth_factor)
