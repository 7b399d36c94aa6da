"""Interaction-free (bomb-tester) probing of a strict verification oracle.

The primitive: keep a probe qubit, and N times per run (1) rotate the probe
by a small angle δ = π/2N, (2) apply a probe-controlled gate G to the money
qubit, (3) submit the note for verification. If G fixes the money state the
probe rotates freely to |1⟩ and verification never fails; if G moves it, the
quantum Zeno effect pins the probe at |0⟩ at a per-round detection risk of
sin²δ — so each run certifies or rules out "G fixes this qubit" while the
total detection probability stays O(1/N).

With G ∈ {X, −X} plus a final computational-basis measurement this
identifies all four states of the 4-state scheme; with controlled
reflections G = 2|β⟩⟨β| − I it identifies a qubit drawn from any finite
state list with a known minimum pairwise angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import qcore
from ._rounds import sample_transfer_rounds
from .bank import KeySymbol, Oracle, Outcome, StateList, pairwise_theta_min
from .qcore import Operator2, PureQubit

# Prefactor for the per-candidate round budget of the list attack,
# N = ceil(coeff / (epsilon · theta_min²)). Derived from the fitted
# survival-bound constant (analytics.FITTED_BOUND_CONSTANT = 1.0, see
# analytics.bound_0tn0_check): one run errs with probability at most
# c_fit·π⁴/(16·N·θ_min²), so coeff = c_fit·π⁴/16.
LIST_ROUNDS_COEFF = 1.0 * math.pi**4 / 16.0


@dataclass(frozen=True)
class BtParams:
    """Round count and probe rotation step for one bomb-tester run."""

    n_rounds: int
    delta: float | None = None

    def __post_init__(self):
        if self.n_rounds < 1:
            raise ValueError("n_rounds must be >= 1")
        if self.delta is None:
            object.__setattr__(self, "delta", math.pi / (2 * self.n_rounds))
        if not (0.0 < self.delta <= math.pi / 2):
            raise ValueError("delta must be in (0, pi/2]")


def even_rounds(n: int) -> int:
    """Round a run length up to the next even number.

    Runs that rely on the probe returning to |0⟩ through sign flips
    (testing −X, or a candidate orthogonal to the money state) only close
    their two-round cycle when N is even.
    """
    return n if n % 2 == 0 else n + 1


def serial_round_budget(n: int, epsilon: float) -> int:
    """Rounds per run so that a full n-qubit serial attack fails w.p. ≤ ε.

    Each qubit takes at most two N-round runs and each run survives with
    probability at least (1 − sin²δ)^N ≥ 1 − π²/4N, so
    N = π²n/2ε makes the whole attack succeed with probability ≥ 1 − ε.
    """
    if n < 1 or not (0.0 < epsilon < 1.0):
        raise ValueError("need n >= 1 and 0 < epsilon < 1")
    return even_rounds(math.ceil(math.pi**2 * n / (2.0 * epsilon)))


# ---------------------------------------------------------------------------
# The Elitzur–Vaidman bomb test (no bank involved)
# ---------------------------------------------------------------------------

@dataclass
class EvBombResult:
    exploded: bool
    probe_outcome: int | None
    rounds_survived: int
    survival_probability: float | None = None


def ev_bomb_test(is_live: bool, params: BtParams, mode: str = "sampled",
                 rng: np.random.Generator | None = None) -> EvBombResult:
    """Quality-test a quantum bomb without setting it off.

    The bomb's trigger is a controlled gate: X for a live bomb, I for a dud.
    The system register is prepared in |0⟩ and measured in the computational
    basis each round; measuring |1⟩ is the explosion. A dud lets the probe
    rotate to |1⟩; a live bomb keeps it at |0⟩ via the Zeno effect, and the
    survival probability is exactly (1 − sin²δ)^N.
    """
    gate = qcore.SIGMA_X if is_live else qcore.IDENTITY2
    m_pass, _ = qcore.postselected_probe_maps(qcore.controlled(gate), qcore.KET0)
    m_pass = m_pass @ qcore.rotation(params.delta).as_array()
    probe0 = qcore.KET0.as_array()
    if mode == "postselected":
        v = np.linalg.matrix_power(m_pass, params.n_rounds) @ probe0
        p = float(np.real(np.vdot(v, v)))
        probe = PureQubit.from_array(v / math.sqrt(p))
        outcome = 1 if probe.prob1() > 0.5 else 0
        return EvBombResult(False, outcome, params.n_rounds, survival_probability=p)
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    uniforms = rng.random(params.n_rounds)
    caught_round, out = sample_transfer_rounds(m_pass, probe0, params.n_rounds, uniforms)
    if caught_round:
        return EvBombResult(True, None, caught_round - 1)
    probe = PureQubit.from_array(out)
    return EvBombResult(False, 1 if probe.prob1() > 0.5 else 0, params.n_rounds)


# ---------------------------------------------------------------------------
# Probe runs against the bank
# ---------------------------------------------------------------------------

@dataclass
class ProbeRunOutcome:
    status: Outcome
    probe_outcome: int | None
    verifications: int
    caught_round: int | None = None
    pass_probability: float | None = None


def bt_probe_run(oracle: Oracle, qubit_index: int, probe_gate: Operator2,
                 params: BtParams, mode: str = "sampled",
                 rng: np.random.Generator | None = None,
                 gate_label: str = "") -> ProbeRunOutcome:
    """One N-round probe run of the controlled `probe_gate` on one qubit.

    Returns the probe's computational-basis reading (1 means the money qubit
    is fixed by the gate) unless a verification failed first. The probe ends
    exponentially close to an exact basis state, so the reading is
    thresholded at probability 1/2 rather than sampled.
    """
    if not probe_gate.is_unitary(1e-10):
        raise ValueError("probe gate must be unitary")
    res = oracle.run_probe_rounds(
        qubit_index, qcore.KET0, qcore.rotation(params.delta),
        qcore.controlled(probe_gate), params.n_rounds, mode, rng,
        gate_label=gate_label,
    )
    outcome = None
    if res.status is Outcome.PASSED:
        outcome = 1 if res.probe.prob1() > 0.5 else 0
    return ProbeRunOutcome(res.status, outcome, res.verifications,
                           res.caught_round, res.pass_probability)


@dataclass(frozen=True)
class Identification:
    """Result of identifying one money qubit; caught excludes identification."""

    caught: bool = False
    reissued: bool = False
    symbol: KeySymbol | None = None
    list_index: int | None = None

    def __post_init__(self):
        identified = self.symbol is not None or self.list_index is not None
        if (self.caught or self.reissued) and identified:
            raise ValueError("caught/reissued and identified are mutually exclusive")


def bt_identify_qubit(oracle: Oracle, qubit_index: int, params: BtParams,
                      mode: str = "sampled",
                      rng: np.random.Generator | None = None) -> Identification:
    """Identify one 4-state qubit: test X, then −X, then measure in z.

    Probe reading 1 under controlled-X certifies |+⟩; under controlled-(−X)
    it certifies |−⟩; otherwise the qubit is a computational-basis state and
    can be measured directly. Conditioned on never failing a verification
    the identification is exact.
    """
    params = BtParams(even_rounds(params.n_rounds), None)
    r = bt_probe_run(oracle, qubit_index, qcore.SIGMA_X, params, mode, rng, "X")
    if r.status is not Outcome.PASSED:
        return Identification(caught=r.status is Outcome.CAUGHT,
                              reissued=r.status is Outcome.REISSUED)
    if r.probe_outcome == 1:
        return Identification(symbol=KeySymbol.XPLUS)
    r = bt_probe_run(oracle, qubit_index, qcore.SIGMA_X.scaled(-1), params, mode, rng, "-X")
    if r.status is not Outcome.PASSED:
        return Identification(caught=r.status is Outcome.CAUGHT,
                              reissued=r.status is Outcome.REISSUED)
    if r.probe_outcome == 1:
        return Identification(symbol=KeySymbol.XMINUS)
    symbol = oracle.measure_money_symbol(qubit_index, "z", rng)
    return Identification(symbol=symbol)


# ---------------------------------------------------------------------------
# Full-note key recovery
# ---------------------------------------------------------------------------

@dataclass
class KeyRecoveryResult:
    caught: bool
    recovered: list | None
    verifications: int
    serial: int
    caught_at_qubit: int | None = None
    reissues: int = 0
    pass_probability: float | None = None


_MAX_REISSUE_RESTARTS = 32


def bt_recover_key_serial(oracle: Oracle, epsilon: float,
                          rng: np.random.Generator | None = None,
                          mode: str = "sampled",
                          n_rounds: int | None = None) -> KeyRecoveryResult:
    """Recover a full 4-state key qubit-by-qubit.

    Uses N = π²n/2ε rounds per run, at most two runs per qubit, so at most
    2nN verifications; succeeds with probability ≥ 1 − ε and the recovered
    key is exact whenever no verification fails. Under the error-tolerant
    bank policy a reissue restarts the attack on the fresh note.
    """
    n = oracle.n
    params = BtParams(n_rounds if n_rounds is not None else serial_round_budget(n, epsilon))
    for _ in range(_MAX_REISSUE_RESTARTS):
        symbols = []
        restart = False
        for i in range(n):
            ident = bt_identify_qubit(oracle, i, params, mode, rng)
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


def bt_recover_key_parallel(oracle: Oracle, epsilon: float,
                            rng: np.random.Generator | None = None,
                            mode: str = "sampled",
                            n_rounds: int | None = None) -> KeyRecoveryResult:
    """Recover a full 4-state key with one probe per qubit, 2N rounds total.

    Every round perturbs all unidentified qubits and submits the note once,
    so the whole attack spends 2N = π²n/ε verifications instead of 2nN.
    """
    n = oracle.n
    N = even_rounds(n_rounds if n_rounds is not None else serial_round_budget(n, epsilon))
    pre = qcore.rotation(math.pi / (2 * N))
    cx = qcore.controlled(qcore.SIGMA_X)
    cmx = qcore.controlled(qcore.SIGMA_X.scaled(-1))

    for _ in range(_MAX_REISSUE_RESTARTS):
        symbols: dict[int, KeySymbol] = {}
        # phase 1: controlled-X on every qubit; probe 1 certifies |+⟩
        programs = {i: (qcore.KET0, pre, cx) for i in range(n)}
        res = oracle.run_parallel_rounds(programs, N, mode, rng)
        if res.status is Outcome.CAUGHT:
            return KeyRecoveryResult(True, None, oracle.verifications, oracle.serial,
                                     reissues=oracle.reissues)
        if res.status is Outcome.REISSUED:
            continue
        for i, probe in res.probes.items():
            if probe.prob1() > 0.5:
                symbols[i] = KeySymbol.XPLUS
        # phase 2: controlled-(−X) on the rest; probe 1 certifies |−⟩
        rest = [i for i in range(n) if i not in symbols]
        if rest:
            programs = {i: (qcore.KET0, pre, cmx) for i in rest}
            res = oracle.run_parallel_rounds(programs, N, mode, rng)
            if res.status is Outcome.CAUGHT:
                return KeyRecoveryResult(True, None, oracle.verifications, oracle.serial,
                                         reissues=oracle.reissues)
            if res.status is Outcome.REISSUED:
                continue
            for i, probe in res.probes.items():
                if probe.prob1() > 0.5:
                    symbols[i] = KeySymbol.XMINUS
        # remaining qubits are computational-basis states
        for i in range(n):
            if i not in symbols:
                symbols[i] = oracle.measure_money_symbol(i, "z", rng)
        return KeyRecoveryResult(False, [symbols[i] for i in range(n)],
                                 oracle.verifications, oracle.serial,
                                 reissues=oracle.reissues)
    raise RuntimeError("too many reissues; attack abandoned")


# ---------------------------------------------------------------------------
# Generalized list attack via controlled reflections
# ---------------------------------------------------------------------------

def reflection_about(beta: PureQubit) -> Operator2:
    """The reflection 2|β⟩⟨β| − I: fixes |β⟩, negates |β⊥⟩; an involution."""
    if not beta.is_normalized(1e-10):
        raise ValueError("beta must be normalized")
    b = beta.as_array()
    return Operator2.from_array(2.0 * np.outer(b, b.conj()) - np.eye(2))


def list_round_budget(epsilon_run: float, theta_min: float,
                      coeff: float = LIST_ROUNDS_COEFF) -> int:
    """Rounds so one reflection run errs with probability ≤ epsilon_run."""
    if theta_min <= 0.0:
        raise ValueError("theta_min must be positive")
    return even_rounds(math.ceil(coeff / (epsilon_run * theta_min**2)))


@dataclass
class ListAttackResult:
    caught: bool
    recovered: list[int] | None
    verifications: int
    serial: int
    caught_at_qubit: int | None = None
    runs: int = 0


def bt_identify_qubit_listed(oracle: Oracle, qubit_index: int, state_list: StateList,
                             epsilon_run: float, mode: str = "sampled",
                             rng: np.random.Generator | None = None,
                             coeff: float = LIST_ROUNDS_COEFF) -> tuple[Identification, int]:
    """Identify one qubit drawn from a known state list.

    Tries candidates in list order with the controlled reflection about each;
    the probe reads 1 exactly when the candidate is the money state (never
    risking detection in that case), and reads 0 with probability ≥ 1 − ε_run
    otherwise. Eliminated candidates shrink the list, and the minimum angle
    is recomputed over the remainder so later runs get cheaper.
    """
    candidates = list(range(len(state_list)))
    runs = 0
    while len(candidates) > 1:
        theta_min = pairwise_theta_min([state_list.states[j] for j in candidates])
        n_run = list_round_budget(epsilon_run, theta_min, coeff)
        beta_idx = candidates[0]
        gate = reflection_about(state_list.states[beta_idx])
        r = bt_probe_run(oracle, qubit_index, gate, BtParams(n_run), mode, rng,
                         gate_label=f"reflect[{beta_idx}]")
        runs += 1
        if r.status is not Outcome.PASSED:
            return (Identification(caught=r.status is Outcome.CAUGHT,
                                   reissued=r.status is Outcome.REISSUED), runs)
        if r.probe_outcome == 1:
            return (Identification(list_index=beta_idx), runs)
        candidates.remove(beta_idx)
    return (Identification(list_index=candidates[0]), runs)


def bt_list_attack(oracle: Oracle, state_list: StateList, epsilon: float,
                   mode: str = "sampled",
                   rng: np.random.Generator | None = None,
                   coeff: float = LIST_ROUNDS_COEFF) -> ListAttackResult:
    """Identify every qubit of a note drawn from `state_list`.

    Splits the failure budget as ε_run = ε/(n·r) across at most n·r runs, so
    the whole attack succeeds with probability ≥ 1 − ε.
    """
    n = oracle.n
    eps_run = epsilon / (n * len(state_list))
    indices: list[int] = []
    total_runs = 0
    for i in range(n):
        ident, runs = bt_identify_qubit_listed(oracle, i, state_list, eps_run,
                                               mode, rng, coeff)
        total_runs += runs
        if ident.caught or ident.reissued:
            return ListAttackResult(True, None, oracle.verifications, oracle.serial,
                                    caught_at_qubit=i, runs=total_runs)
        indices.append(ident.list_index)
    return ListAttackResult(False, indices, oracle.verifications, oracle.serial,
                            runs=total_runs)


# ---------------------------------------------------------------------------
# The postselected one-round probe map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TransferMatrix:
    """The 2×2 real map of one postselected reflection round.

    With q = cos 2θ (θ the angle between the money state and the reflection
    axis), a passed round sends the unnormalized probe through
    [[cos δ, −sin δ], [q sin δ, q cos δ]]; the squared norm of the N-th
    power applied to |0⟩ is the probability of passing all N rounds.
    """

    theta: float
    delta: float

    @property
    def q(self) -> float:
        return math.cos(2.0 * self.theta)

    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.delta), math.sin(self.delta)
        return np.array([[c, -s], [self.q * s, self.q * c]])

    def power_state(self, n_rounds: int) -> np.ndarray:
        """T^N |0⟩ (unnormalized), by eigendecomposition when well-conditioned."""
        t = self.matrix()
        e0 = np.array([1.0, 0.0])
        evals, evecs = np.linalg.eig(t)
        if abs(evals[0] - evals[1]) > 1e-8:
            c = np.linalg.solve(evecs, e0.astype(complex))
            v = evecs @ (c * evals**n_rounds)
            return v
        return np.linalg.matrix_power(t, n_rounds) @ e0
