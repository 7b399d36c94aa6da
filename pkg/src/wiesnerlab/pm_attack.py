"""Protective-measurement probing: weak coupling, estimation, tomography.

Instead of a controlled gate, each round weakly couples the probe to the
money qubit with U = e^{−iδ(σx ⊗ A)} for a dichotomic observable A
(eigenvalues ±1) and a small δ = c/N, then submits the note. Conditioned on
passing, the probe evolves by the fixed non-unitary map

    W = cos δ · I − i sin δ · ⟨A⟩ · σx,

whose N-th power rotates the probe about x by an angle ≈ c·⟨A⟩ while each
round risks detection only at O(δ²), independent of the money state. A σy
readout of the probe then estimates ⟨A⟩; three Pauli estimates per qubit
give a Bloch vector, and projecting it back into the Bloch ball yields a
forgeable classical description of the note.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import qcore
from .bank import Oracle, Outcome
from .bt_attack import Identification, KeyRecoveryResult, _MAX_REISSUE_RESTARTS
from .qcore import DensityQubit, Operator2, PureQubit, trace_distance

# The estimator below inverts p = (1 − sin(c·⟨A⟩·...))/2, which is only the
# simple arcsin form for this coupling budget.
ESTIMATION_COUPLING = math.pi / 8.0

# Worst-case catch probability of one N-round estimation run is c²/N, and a
# full tomography spends 3·n·m runs, so N = 3c²·m·n / f keeps the total
# catch probability within f.
FORGE_ROUNDS_COEFF = 3.0 * ESTIMATION_COUPLING**2

_PAULIS = (("x", qcore.SIGMA_X), ("y", qcore.SIGMA_Y), ("z", qcore.SIGMA_Z))


def require_dichotomic(a: Operator2, tol: float = 1e-12) -> None:
    """Check that A is Hermitian with eigenvalues exactly ±1 (A² = I)."""
    if not a.is_hermitian(tol):
        raise ValueError("observable must be Hermitian")
    m = a.as_array()
    if float(np.max(np.abs(m @ m - np.eye(2)))) > tol:
        raise ValueError("observable must have eigenvalues ±1 (A² = I)")


@dataclass(frozen=True)
class PmParams:
    """Coupling budget c, round count N (δ = c/N), observable, probe start."""

    coupling_budget: float
    n_rounds: int
    observable: Operator2
    probe_init: PureQubit = qcore.KET0

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        require_dichotomic(self.observable)

    @property
    def delta(self) -> float:
        return self.coupling_budget / self.n_rounds


def coupling_unitary(delta: float, observable: Operator2) -> qcore.JointOperator:
    """U = e^{−iδ(σx ⊗ A)} = e^{−iδσx} ⊗ P + e^{+iδσx} ⊗ P⊥, P = (I + A)/2.

    The two projector subspaces of A are invariant, so the exponential
    splits exactly into the two probe rotations.
    """
    require_dichotomic(observable)
    c, s = math.cos(delta), math.sin(delta)
    e_minus = np.array([[c, -1j * s], [-1j * s, c]])
    e_plus = np.array([[c, 1j * s], [1j * s, c]])
    p = 0.5 * (np.eye(2) + observable.as_array())
    p_perp = np.eye(2) - p
    return qcore.JointOperator.from_array(np.kron(e_minus, p) + np.kron(e_plus, p_perp))


@dataclass(frozen=True)
class RoundMap:
    """W = cos δ·I − i sin δ·⟨A⟩·σx, the postselected per-round probe map.

    Its eigenvectors are |±⟩ with eigenvalues cos δ ∓ i⟨A⟩ sin δ, so N
    rounds act as a diagonal phase pair in the |±⟩ basis; the norm loss of
    W^N is exactly the probability of failing some verification.
    """

    delta: float
    exp_a: float

    def __post_init__(self):
        if abs(self.exp_a) > 1.0 + 1e-12:
            raise ValueError("|⟨A⟩| must be <= 1")

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.delta), math.sin(self.delta)
        return np.array([[c, -1j * s * self.exp_a], [-1j * s * self.exp_a, c]])

    @property
    def eig_plus(self) -> complex:
        """Eigenvalue on |+⟩: cos δ − i⟨A⟩ sin δ."""
        return complex(math.cos(self.delta), -self.exp_a * math.sin(self.delta))

    @property
    def eig_minus(self) -> complex:
        """Eigenvalue on |−⟩: cos δ + i⟨A⟩ sin δ."""
        return complex(math.cos(self.delta), self.exp_a * math.sin(self.delta))

    def power_apply(self, probe: PureQubit, n_rounds: int) -> np.ndarray:
        """W^N |probe⟩ (unnormalized), via the |±⟩ eigenbasis."""
        cp = qcore.PLUS.inner(probe)
        cm = qcore.MINUS.inner(probe)
        lp = self.eig_plus**n_rounds
        lm = self.eig_minus**n_rounds
        inv = 1.0 / math.sqrt(2.0)
        return np.array([
            inv * (cp * lp + cm * lm),
            inv * (cp * lp - cm * lm),
        ])


def round_map(delta: float, exp_a: float) -> RoundMap:
    return RoundMap(delta, exp_a)


def pm_evolve(oracle: Oracle, qubit_index: int, params: PmParams,
              mode: str = "sampled",
              rng: np.random.Generator | None = None):
    """N rounds of weak coupling + verification on one money qubit.

    In postselected mode the final probe is the normalized W^N|φ₀⟩ and the
    reported pass probability is ‖W^N|φ₀⟩‖², computed by a matrix power;
    fastforward mode draws survival once from that probability; sampled mode
    plays the rounds out one by one.
    """
    couple = coupling_unitary(params.delta, params.observable)
    return oracle.run_probe_rounds(
        qubit_index, params.probe_init, qcore.IDENTITY2, couple,
        params.n_rounds, mode, rng,
        gate_label=f"weak-couple(delta={params.delta:.3g})",
    )


def sigma_y_pass_prob(probe: PureQubit) -> float:
    """|⟨y₊|probe⟩|² with ⟨y₊| = (⟨0| − i⟨1|)/√2."""
    return qcore.Y_PLUS.overlap2(probe)


def chernoff_m(eta: float, nu: float) -> int:
    """Repetitions so the σy frequency is within ν/4 w.p. ≥ 1 − η.

    m = ⌈336·ln(2/η)/ν²⌉; the constant covers the worst case of the
    multiplicative Chernoff bound given that the σy pass probability is
    bounded away from 0 and 1 by the c = π/8 coupling budget.
    """
    if not (0.0 < eta < 1.0):
        raise ValueError("eta must be in (0, 1)")
    if not (0.0 < nu < 1.0):
        raise ValueError("nu must be in (0, 1)")
    return math.ceil(336.0 * math.log(2.0 / eta) / nu**2)


@dataclass(frozen=True)
class TomoParams:
    """Per-observable estimation schedule: accuracy ν, confidence 1 − η."""

    eta: float
    nu: float
    n_rounds: int
    m: int | None = None

    def __post_init__(self):
        if self.m is None:
            object.__setattr__(self, "m", chernoff_m(self.eta, self.nu))
        elif self.m < chernoff_m(self.eta, self.nu):
            raise ValueError("m below the Chernoff schedule for (eta, nu)")
        if self.n_rounds < 10 * self.m:
            warnings.warn(
                f"n_rounds={self.n_rounds} is not >> m={self.m}; "
                "catch probability may dominate", stacklevel=2,
            )


@dataclass
class EstimateResult:
    estimate: float
    p_hat: float | None
    samples_used: int
    caught_count: int
    reissued: bool
    verifications: int


class EstimationFailedError(RuntimeError):
    """No surviving repetitions to estimate from."""


def _invert_sigma_y(p_hat: float) -> float:
    """⟨A⟩ from the σy frequency: clamp((4/π)·arcsin(1 − 2p̂), [−1, 1])."""
    raw = 1.0 - 2.0 * p_hat
    if abs(raw) > 0.75:
        warnings.warn(
            f"sigma-y frequency {p_hat:.4g} outside the arcsin comfort zone",
            stacklevel=3,
        )
    est = (4.0 / math.pi) * math.asin(max(-1.0, min(1.0, raw)))
    return max(-1.0, min(1.0, est))


def estimate_expectation(oracle: Oracle, qubit_index: int, observable: Operator2,
                         tomo: TomoParams, rng: np.random.Generator,
                         mode: str = "fastforward",
                         trace: list | None = None,
                         trace_label: str = "") -> EstimateResult:
    """Estimate ⟨A⟩ of one money qubit from m weak-coupling runs.

    Each repetition evolves a fresh |0⟩ probe for N rounds at coupling
    budget c = π/8 and measures σy on it; the estimate inverts the mean
    frequency. Repetitions whose run was caught contribute no sample; under
    the strict policy the first catch ends the batch (the note is gone).
    In postselected mode the exact frequency replaces the sample mean.
    """
    couple = coupling_unitary(ESTIMATION_COUPLING / tomo.n_rounds, observable)
    if mode == "postselected":
        res = oracle.run_probe_rounds(qubit_index, qcore.KET0, qcore.IDENTITY2,
                                      couple, tomo.n_rounds, "postselected")
        p_hat = sigma_y_pass_prob(res.probe)
        return EstimateResult(_invert_sigma_y(p_hat), p_hat, 0, 0, False,
                              res.verifications)
    if mode == "fastforward":
        rep = oracle.run_probe_rounds_repeated(
            qubit_index, qcore.KET0, qcore.IDENTITY2, couple,
            tomo.n_rounds, tomo.m, rng,
        )
        caught_count = 1 if rep.caught else 0
        if rep.runs_passed == 0:
            raise EstimationFailedError("caught before any repetition survived")
        p_y = sigma_y_pass_prob(rep.probe)
        ys = rng.random(rep.runs_passed) < p_y
        if trace is not None:
            for t, y in enumerate(ys):
                trace.append({"qubit": qubit_index, "observable": trace_label,
                              "repetition": t, "passed": True, "y_outcome": int(y)})
            if rep.caught:
                trace.append({"qubit": qubit_index, "observable": trace_label,
                              "repetition": rep.runs_passed, "passed": False,
                              "y_outcome": None})
        p_hat = float(np.count_nonzero(ys)) / rep.runs_passed
        return EstimateResult(_invert_sigma_y(p_hat), p_hat, rep.runs_passed,
                              caught_count, False, rep.verifications)
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    hits = 0
    samples = 0
    caught_count = 0
    verifications = 0
    params = PmParams(ESTIMATION_COUPLING, tomo.n_rounds, observable)
    for t in range(tomo.m):
        res = pm_evolve(oracle, qubit_index, params, "sampled", rng)
        verifications += res.verifications
        if res.status is Outcome.REISSUED:
            return EstimateResult(0.0, None, samples, caught_count, True, verifications)
        if res.status is Outcome.CAUGHT:
            caught_count += 1
            if trace is not None:
                trace.append({"qubit": qubit_index, "observable": trace_label,
                              "repetition": t, "passed": False, "y_outcome": None})
            if oracle.destroyed:
                break
            continue
        y = int(rng.random() < sigma_y_pass_prob(res.probe))
        if trace is not None:
            trace.append({"qubit": qubit_index, "observable": trace_label,
                          "repetition": t, "passed": True, "y_outcome": y})
        hits += y
        samples += 1
    if samples == 0:
        raise EstimationFailedError("every repetition was caught")
    p_hat = hits / samples
    return EstimateResult(_invert_sigma_y(p_hat), p_hat, samples, caught_count,
                          False, verifications)


# ---------------------------------------------------------------------------
# Four-state identification (c = π/2)
# ---------------------------------------------------------------------------

def pm_identify_wiesner(oracle: Oracle, qubit_index: int, n_rounds: int,
                        rng: np.random.Generator | None = None,
                        mode: str = "sampled") -> Identification:
    """Identify one 4-state qubit with a single weak-coupling run.

    With A = σx, c = π/2 and probe |0⟩, an x-basis money state rotates the
    probe all the way to |1⟩ without ever risking detection, while a z-basis
    state leaves it exactly at |0⟩ (at catch probability 1 − cos²ᴺδ). The
    probe reading therefore selects the basis in which the money qubit can
    then be measured directly.
    """
    params = PmParams(math.pi / 2.0, n_rounds, qcore.SIGMA_X)
    res = pm_evolve(oracle, qubit_index, params, mode, rng)
    if res.status is not Outcome.PASSED:
        return Identification(caught=res.status is Outcome.CAUGHT,
                              reissued=res.status is Outcome.REISSUED)
    basis = "x" if res.probe.prob1() > 0.5 else "z"
    symbol = oracle.measure_money_symbol(qubit_index, basis, rng)
    return Identification(symbol=symbol)


def pm_recover_key(oracle: Oracle, n_rounds: int,
                   rng: np.random.Generator | None = None,
                   mode: str = "sampled") -> KeyRecoveryResult:
    """Recover a full 4-state key via per-qubit weak-coupling identification.

    Works unchanged under the error-tolerant bank policy: a qubit that
    collapses wrong stays a small fraction of the note, so the bank keeps
    handing the note back; a reissue restarts the attack on the fresh note.
    """
    n = oracle.n
    for _ in range(_MAX_REISSUE_RESTARTS):
        symbols = []
        restart = False
        for i in range(n):
            ident = pm_identify_wiesner(oracle, i, n_rounds, rng, mode)
            if ident.caught:
                return KeyRecoveryResult(True, None, oracle.verifications,
                                         oracle.serial, caught_at_qubit=i,
                                         reissues=oracle.reissues)
            if ident.reissued:
                restart = True
                break
            symbols.append(ident.symbol)
        if not restart:
            return KeyRecoveryResult(False, symbols, oracle.verifications,
                                     oracle.serial, reissues=oracle.reissues)
    raise RuntimeError("too many reissues; attack abandoned")


# ---------------------------------------------------------------------------
# Reconstruction
# ---------------------------------------------------------------------------

def reconstruct_qubit(est: tuple[float, float, float]) -> DensityQubit:
    """The physical state nearest (in trace distance) to a raw Bloch estimate.

    The raw triple of Pauli estimates defines ρ′ = (I + r·σ)/2, which need
    not be positive; radial projection r → r/‖r‖ when ‖r‖ > 1 is the
    trace-distance-nearest state for a single qubit. Clamped estimators keep
    each component in [−1, 1], but any finite vector is accepted.
    """
    for comp in est:
        if not math.isfinite(comp):
            raise ValueError("Bloch components must be finite")
    norm = math.sqrt(sum(c * c for c in est))
    if norm > 1.0:
        return DensityQubit(tuple(c / norm for c in est))
    return DensityQubit(tuple(float(c) for c in est))


@dataclass
class Reconstruction:
    """Per-qubit Pauli estimates and the projected physical states."""

    estimates: list[tuple[float, float, float] | None]
    raw_states: list[DensityQubit | None]
    states: list[DensityQubit | None]

    @property
    def complete(self) -> bool:
        return all(s is not None for s in self.states)


@dataclass
class ForgeResult:
    caught: bool
    reconstruction: Reconstruction
    nu: float
    m: int
    n_rounds: int
    catch_events: int
    verifications: int
    serial: int
    f_budget: float | None = None


def forge_round_budget(m: int, n: int, f_budget: float) -> int:
    """Rounds per repetition keeping the total catch probability within f."""
    if not (0.0 < f_budget):
        raise ValueError("f_budget must be positive")
    return math.ceil(FORGE_ROUNDS_COEFF * m * n / f_budget)


def pm_forge_note(oracle: Oracle, eta: float, nu_final: float,
                  rng: np.random.Generator,
                  f_budget: float | None = None,
                  n_rounds: int | None = None,
                  mode: str = "fastforward",
                  traces: list | None = None) -> ForgeResult:
    """Tomograph a whole note: 3 Pauli estimates per qubit, then project.

    Splits the fidelity budget as ν = ν_final/6n per observable, takes
    m = chernoff_m(η, ν) repetitions each, and (unless given explicitly)
    chooses N from the catch budget f. Conditioned on never being caught,
    the reconstructed product state has fidelity ≥ 1 − ν_final with
    probability ≥ 1 − 3ηn. A catch aborts with the partial reconstruction.
    """
    n = oracle.n
    nu = nu_final / (6.0 * n)
    m = chernoff_m(eta, nu)
    if n_rounds is None:
        if f_budget is None:
            raise ValueError("give f_budget or n_rounds")
        n_rounds = forge_round_budget(m, n, f_budget)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tomo = TomoParams(eta, nu, n_rounds, m)
    if tomo.n_rounds < 10 * tomo.m:
        warnings.warn(f"n_rounds={n_rounds} is not >> m={m}", stacklevel=2)
    estimates: list = [None] * n
    raw_states: list = [None] * n
    states: list = [None] * n
    catch_events = 0
    caught = False
    for i in range(n):
        triple = []
        for label, pauli in _PAULIS:
            try:
                r = estimate_expectation(oracle, i, pauli, tomo, rng, mode,
                                         trace=traces, trace_label=label)
            except EstimationFailedError:
                catch_events += 1
                caught = True
                break
            catch_events += r.caught_count
            if r.reissued:
                caught = True
                break
            triple.append(r.estimate)
            if oracle.destroyed:
                caught = True
                break
        if len(triple) == 3:
            estimates[i] = tuple(triple)
            raw_states[i] = DensityQubit(tuple(triple))
            states[i] = reconstruct_qubit(tuple(triple))
        if caught:
            break
    recon = Reconstruction(estimates, raw_states, states)
    return ForgeResult(caught, recon, nu, m, n_rounds, catch_events,
                       oracle.verifications, oracle.serial, f_budget=f_budget)


# ---------------------------------------------------------------------------
# Fidelity accounting (scoring helpers; need the true states)
# ---------------------------------------------------------------------------

def product_fidelity(states: list[DensityQubit], true_states) -> float:
    """F(ρ₁⊗…⊗ρₙ, |α₁…αₙ⟩) = Π ⟨αᵢ|ρᵢ|αᵢ⟩."""
    f = 1.0
    for rho, alpha in zip(states, true_states):
        f *= qcore.fidelity_pure(rho, alpha)
    return f


def fidelity_chain_bound(raw_states: list[DensityQubit], true_states) -> float:
    """The tomography guarantee: F ≥ 1 − Σᵢ 2·D(ρ′ᵢ, |αᵢ⟩⟨αᵢ|).

    Takes the *raw* (possibly unphysical) per-qubit estimates ρ′ᵢ; the bound
    holds for the projected states because projection can at most double the
    distance to the true pure state.
    """
    total = 0.0
    for rho_raw, alpha in zip(raw_states, true_states):
        total += 2.0 * trace_distance(rho_raw, DensityQubit.from_pure(alpha))
    return 1.0 - total
