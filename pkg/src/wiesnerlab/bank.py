"""The issuing bank: key generation, serial database, and verification oracles.

A Bank issues banknotes (serial number + product of secret single-qubit
states), keeps the secret keys in a database (or derives them from a master
secret with a keyed hash), and verifies submitted notes qubit-by-qubit in
the secret bases. Attacks never see the database: they interact through an
`Oracle`, which models the attacker's physical possession of a note (local
gates, probe coupling, own measurements) plus the ability to submit it for
verification.

Two verification policies are supported:

* `StrictDestroy` — the note is returned iff every qubit measures correctly;
  any wrong outcome means the note is confiscated (the submitter is caught)
  and no quantum state comes back.
* `NoisyThreshold(return_frac, reissue_frac)` — if at most `return_frac` of
  the qubits measure wrong the note is handed back as-is (wrong qubits come
  back collapsed to the orthogonal key state, no repairs); between the two
  thresholds (inclusive) the bank confiscates the note and issues a fresh
  one with a new serial and key; above `reissue_frac` the submitter is
  caught. Thresholds count inclusively ("at most").

Sampling convention: a submitted qubit that is *exactly* the key state (or
exactly its orthogonal) has a deterministic outcome and consumes no
randomness; anything else consumes exactly one uniform draw per qubit per
verification. Between verifications a note held by the oracle is always a
product of per-qubit (probe, money) factors, because each verification
measures every money qubit.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import qcore
from ._rounds import sample_transfer_rounds
from .qcore import JointOperator, JointState, Operator2, PureQubit


class BankError(Exception):
    """Base class for protocol-level errors (distinct from being caught)."""


class UnknownSerialError(BankError):
    """The submitted serial number is not in the database."""


class NoteDestroyedError(BankError):
    """The serial's note was confiscated earlier; nothing left to verify."""


class PostselectionUnderflowError(BankError):
    """All-pass probability underflowed (below 1e-300)."""


# ---------------------------------------------------------------------------
# Key symbols and schemes
# ---------------------------------------------------------------------------

class KeySymbol(Enum):
    """The four secret states of the 4-state scheme."""

    Z0 = "0"
    Z1 = "1"
    XPLUS = "+"
    XMINUS = "-"

    @property
    def state(self) -> PureQubit:
        return _SYMBOL_STATE[self]

    @property
    def basis(self) -> str:
        return "z" if self in (KeySymbol.Z0, KeySymbol.Z1) else "x"


_SYMBOL_STATE = {
    KeySymbol.Z0: qcore.KET0,
    KeySymbol.Z1: qcore.KET1,
    KeySymbol.XPLUS: qcore.PLUS,
    KeySymbol.XMINUS: qcore.MINUS,
}
_SYMBOLS = (KeySymbol.Z0, KeySymbol.Z1, KeySymbol.XPLUS, KeySymbol.XMINUS)


@dataclass(frozen=True)
class StateList:
    """An ordered list of candidate money states for the generalized scheme.

    theta_min is the smallest pairwise angle arccos|⟨β_i|β_j⟩|; it governs
    how many rounds the generalized probe attack needs per candidate.
    """

    states: tuple[PureQubit, ...]
    theta_min: float = field(init=False)

    def __post_init__(self):
        if len(self.states) < 2:
            raise ValueError("a state list needs at least 2 states")
        object.__setattr__(self, "theta_min", pairwise_theta_min(self.states))

    def __len__(self) -> int:
        return len(self.states)


def pairwise_theta_min(states) -> float:
    """min over pairs i≠j of arccos|⟨β_i|β_j⟩|."""
    tmin = math.pi / 2
    for i in range(len(states)):
        for j in range(i + 1, len(states)):
            ov = min(abs(states[i].inner(states[j])), 1.0)
            tmin = min(tmin, math.acos(ov))
    return tmin


@dataclass(frozen=True)
class FourStateScheme:
    """Keys drawn i.i.d. uniform from {|0⟩, |1⟩, |+⟩, |−⟩}."""

    def n_symbols(self) -> int:
        return 4

    def key_state(self, symbol) -> PureQubit:
        return symbol.state

    def symbol_from_index(self, idx: int) -> KeySymbol:
        return _SYMBOLS[idx]


@dataclass(frozen=True)
class ListedScheme:
    """Keys drawn i.i.d. uniform from an arbitrary finite state list."""

    state_list: StateList

    def n_symbols(self) -> int:
        return len(self.state_list)

    def key_state(self, symbol) -> PureQubit:
        return self.state_list.states[symbol]

    def symbol_from_index(self, idx: int) -> int:
        return idx


# ---------------------------------------------------------------------------
# Policies, notes, submissions, reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StrictDestroy:
    """Valid notes are returned; any wrong qubit confiscates the note."""


@dataclass(frozen=True)
class NoisyThreshold:
    """Error-tolerant policy: hand back / reissue / report by wrong fraction."""

    return_frac: float = 0.05
    reissue_frac: float = 0.10

    def __post_init__(self):
        if not (0.0 <= self.return_frac <= self.reissue_frac <= 1.0):
            raise ValueError("need 0 <= return_frac <= reissue_frac <= 1")


@dataclass(frozen=True)
class Banknote:
    """A serial number with its bank-side key and holder-side qubit states."""

    serial: int
    n: int
    key: tuple
    states: tuple[PureQubit, ...]


@dataclass(frozen=True)
class Submission:
    """A note sent in for verification.

    Each entry is either a bare money qubit or a probe ⊗ money JointState
    whose second factor is the money qubit.
    """

    serial: int
    entries: tuple


class Outcome(Enum):
    PASSED = "passed"
    CAUGHT = "caught"
    REISSUED = "reissued"


@dataclass
class VerificationReport:
    """Result of one verification.

    On PASSED (and REISSUED) the collapsed money qubits are listed in
    `returned_money` and, for entangled entries, the attacker's conditional
    probe states in `probe_states`. On CAUGHT no quantum state is returned.
    `qubit_passed` is the bank's own measurement log.
    """

    outcome: Outcome
    qubit_passed: list[bool]
    returned_money: list[PureQubit] | None
    probe_states: dict[int, PureQubit] | None
    new_note: Banknote | None = None
    pass_probability: float | None = None


@dataclass
class RoundRunResult:
    """Outcome of a multi-round probe session against one money qubit."""

    status: Outcome
    probe: PureQubit | None
    verifications: int
    caught_round: int | None = None
    pass_probability: float | None = None


@dataclass
class ParallelRoundResult:
    """Outcome of a multi-round session coupling several qubits at once."""

    status: Outcome
    probes: dict[int, PureQubit] | None
    verifications: int
    caught_round: int | None = None
    pass_probability: float | None = None


@dataclass
class RepeatedRoundsResult:
    """Outcome of a batch of identical fast-forward sessions."""

    runs_passed: int
    caught: bool
    probe: PureQubit | None
    pass_probability: float
    verifications: int


# ---------------------------------------------------------------------------
# Deterministic key derivation (fixed-function variant)
# ---------------------------------------------------------------------------

def derive_key(master_secret: bytes, serial: int, n: int, n_symbols: int = 4) -> list[int]:
    """Derive the n key-symbol indices for a serial from a master secret.

    Uses BLAKE2b keyed with the master secret over (serial, block counter);
    hash bytes are mapped to symbols by rejection sampling, so the per-symbol
    distribution over serials is uniform. Deterministic and stable; not
    meant to be cryptographically hardened.
    """
    if not master_secret:
        raise ValueError("master_secret must be nonempty")
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (2 <= n_symbols <= 256):
        raise ValueError("n_symbols out of range")
    limit = 256 - (256 % n_symbols)
    symbols: list[int] = []
    counter = 0
    while len(symbols) < n:
        h = hashlib.blake2b(
            serial.to_bytes(8, "big") + counter.to_bytes(4, "big"),
            key=master_secret,
        ).digest()
        counter += 1
        for b in h:
            if b < limit:
                symbols.append(b % n_symbols)
                if len(symbols) == n:
                    break
    return symbols


# ---------------------------------------------------------------------------
# The bank
# ---------------------------------------------------------------------------

@dataclass
class _Record:
    key: tuple
    alpha: tuple[PureQubit, ...]
    alpha_perp: tuple[PureQubit, ...]
    alive: bool = True


class Bank:
    """Issues notes, stores keys, and verifies submissions.

    The database maps serials to keys. Verification against distinct serials
    is independent; a note is consumed/returned atomically per call (this
    implementation is single-threaded, and all verification state lives in
    the per-serial record).
    """

    def __init__(self, scheme=None, policy=None, master_secret: bytes | None = None):
        self.scheme = scheme if scheme is not None else FourStateScheme()
        self.policy = policy if policy is not None else StrictDestroy()
        self.master_secret = master_secret
        self._records: dict[int, _Record] = {}
        self._next_serial = 1

    # -- issuing ------------------------------------------------------------

    def issue(self, n: int, rng: np.random.Generator) -> Banknote:
        """Issue a fresh note of n qubits with an i.i.d. uniform secret key."""
        if n < 1:
            raise ValueError("n must be >= 1")
        serial = self._next_serial
        self._next_serial += 1
        r = self.scheme.n_symbols()
        if self.master_secret is not None:
            idx = derive_key(self.master_secret, serial, n, r)
        else:
            idx = [int(k) for k in rng.integers(0, r, size=n)]
        key = tuple(self.scheme.symbol_from_index(i) for i in idx)
        alpha = tuple(self.scheme.key_state(s) for s in key)
        perp = tuple(a.orthogonal() for a in alpha)
        self._records[serial] = _Record(key=key, alpha=alpha, alpha_perp=perp)
        return Banknote(serial=serial, n=n, key=key, states=alpha)

    def key_of(self, serial: int) -> tuple:
        """Bank-side key lookup (test/scoring use; attacks get only an Oracle)."""
        return self._require(serial).key

    def _require(self, serial: int) -> _Record:
        rec = self._records.get(serial)
        if rec is None:
            raise UnknownSerialError(f"serial {serial} not in database")
        if not rec.alive:
            raise NoteDestroyedError(f"serial {serial} was confiscated")
        return rec

    # -- verification -------------------------------------------------------

    def verify_sampled(self, sub: Submission, rng: np.random.Generator) -> VerificationReport:
        """Measure every qubit in its key basis and apply the policy."""
        rec = self._require(sub.serial)
        n = len(rec.alpha)
        if len(sub.entries) != n:
            raise ValueError(f"submission has {len(sub.entries)} entries, note has {n}")
        flags: list[bool] = []
        money_out: list[PureQubit] = []
        probes: dict[int, PureQubit] = {}
        for i, entry in enumerate(sub.entries):
            alpha, perp = rec.alpha[i], rec.alpha_perp[i]
            if isinstance(entry, JointState):
                br = qcore.measure_money(entry, alpha)
                p = min(max(br.p_pass, 0.0), 1.0)
                if rng.random() < p:
                    flags.append(True)
                    money_out.append(alpha)
                    probes[i] = br.pass_probe
                else:
                    flags.append(False)
                    money_out.append(perp)
                    probes[i] = br.fail_probe
            else:
                if entry is alpha:
                    flags.append(True)
                    money_out.append(alpha)
                elif entry is perp:
                    flags.append(False)
                    money_out.append(perp)
                else:
                    p = min(max(alpha.overlap2(entry), 0.0), 1.0)
                    if rng.random() < p:
                        flags.append(True)
                        money_out.append(alpha)
                    else:
                        flags.append(False)
                        money_out.append(perp)
        return self._apply_policy(sub.serial, rec, flags, money_out, probes, rng)

    def _apply_policy(self, serial, rec, flags, money_out, probes, rng) -> VerificationReport:
        n_wrong = flags.count(False)
        if isinstance(self.policy, StrictDestroy):
            if n_wrong == 0:
                return VerificationReport(Outcome.PASSED, flags, money_out, probes)
            rec.alive = False
            return VerificationReport(Outcome.CAUGHT, flags, None, None)
        frac = n_wrong / len(flags)
        if frac <= self.policy.return_frac:
            return VerificationReport(Outcome.PASSED, flags, money_out, probes)
        if frac <= self.policy.reissue_frac:
            rec.alive = False
            new_note = self.issue(len(flags), rng)
            return VerificationReport(Outcome.REISSUED, flags, None, probes, new_note=new_note)
        rec.alive = False
        return VerificationReport(Outcome.CAUGHT, flags, None, None)

    def verify_postselected(self, sub: Submission) -> VerificationReport:
        """Exact all-pass branch: probability and conditional probe states.

        Available under the strict policy only; consumes no randomness and
        does not alter the database (it is the exact postselection the
        sampled path is checked against).
        """
        if not isinstance(self.policy, StrictDestroy):
            raise BankError("postselected verification requires the strict policy")
        rec = self._require(sub.serial)
        n = len(rec.alpha)
        if len(sub.entries) != n:
            raise ValueError(f"submission has {len(sub.entries)} entries, note has {n}")
        p_all = 1.0
        flags = [True] * n
        money_out: list[PureQubit] = []
        probes: dict[int, PureQubit] = {}
        for i, entry in enumerate(sub.entries):
            alpha = rec.alpha[i]
            if isinstance(entry, JointState):
                br = qcore.measure_money(entry, alpha)
                p_all *= br.p_pass
                if br.pass_probe is None:
                    p_all = 0.0
                else:
                    probes[i] = br.pass_probe
            else:
                p_all *= 1.0 if entry is alpha else min(max(alpha.overlap2(entry), 0.0), 1.0)
            money_out.append(alpha)
        if p_all < 1e-300:
            raise PostselectionUnderflowError(f"all-pass probability underflowed ({p_all!r})")
        return VerificationReport(
            Outcome.PASSED, flags, money_out, probes, pass_probability=p_all
        )

    # -- attacker handle ----------------------------------------------------

    def oracle_for(self, note: Banknote) -> "Oracle":
        """Hand a note's qubits to an attacker as an Oracle (no key access)."""
        self._require(note.serial)
        return Oracle(self, note.serial, list(note.states))

    # -- database export ----------------------------------------------------

    def export_json(self) -> str:
        """Serialize the live database as {serial: {scheme, key_symbols[]}}."""
        doc = {}
        for serial, rec in self._records.items():
            if not rec.alive:
                continue
            if isinstance(self.scheme, FourStateScheme):
                doc[str(serial)] = {
                    "scheme": "four-state",
                    "key_symbols": [s.value for s in rec.key],
                }
            else:
                doc[str(serial)] = {
                    "scheme": "listed",
                    "key_symbols": list(rec.key),
                }
        return json.dumps(doc, indent=2, sort_keys=True)

    @staticmethod
    def import_json(doc: str, policy=None, state_list: StateList | None = None) -> "Bank":
        """Rebuild a bank database from export_json output."""
        data = json.loads(doc)
        schemes = {entry["scheme"] for entry in data.values()}
        if schemes == {"listed"}:
            if state_list is None:
                raise ValueError("importing a listed-scheme database needs its StateList")
            bank = Bank(scheme=ListedScheme(state_list), policy=policy)
        else:
            bank = Bank(scheme=FourStateScheme(), policy=policy)
        for serial_str, entry in sorted(data.items(), key=lambda kv: int(kv[0])):
            serial = int(serial_str)
            if entry["scheme"] == "four-state":
                key = tuple(KeySymbol(v) for v in entry["key_symbols"])
            else:
                key = tuple(int(v) for v in entry["key_symbols"])
            alpha = tuple(bank.scheme.key_state(s) for s in key)
            perp = tuple(a.orthogonal() for a in alpha)
            bank._records[serial] = _Record(key=key, alpha=alpha, alpha_perp=perp)
            bank._next_serial = max(bank._next_serial, serial + 1)
        return bank


# ---------------------------------------------------------------------------
# The attacker's handle
# ---------------------------------------------------------------------------

class _Slot:
    """One qubit of the held note: a bare money state or probe ⊗ money."""

    __slots__ = ("money", "probe", "joint")

    def __init__(self, money: PureQubit):
        self.money: PureQubit | None = money
        self.probe: PureQubit | None = None
        self.joint: JointState | None = None

    @property
    def entangled(self) -> bool:
        return self.joint is not None


class Oracle:
    """The attacker's view: physical possession of a note + a verify button.

    All operations are things the holder of the note can physically do:
    local gates on their own probe registers, coupling gates between a probe
    and a money qubit, measurements of registers in their possession, and
    submitting the note for verification. The secret key never crosses this
    interface; verification responses carry only what the bank's protocol
    hands back.
    """

    def __init__(self, bank: Bank, serial: int, states: list[PureQubit]):
        self._bank = bank
        self.serial = serial
        self._slots = [_Slot(s) for s in states]
        self.n = len(states)
        self.verifications = 0
        self.reissues = 0
        self.destroyed = False
        self.transcript: list[dict] | None = None

    # -- local physical operations -------------------------------------

    def _slot(self, i: int) -> _Slot:
        if self.destroyed:
            raise NoteDestroyedError("the note was confiscated")
        return self._slots[i]

    def attach_probe(self, i: int, probe: PureQubit) -> None:
        slot = self._slot(i)
        if slot.probe is not None or slot.entangled:
            raise ValueError(f"qubit {i} already has a probe")
        slot.probe = probe

    def rotate_probe(self, i: int, op: Operator2) -> None:
        slot = self._slot(i)
        if slot.entangled:
            slot.joint = qcore.kron2(op, qcore.IDENTITY2).apply(slot.joint)
        elif slot.probe is not None:
            slot.probe = op.apply(slot.probe)
        else:
            raise ValueError(f"qubit {i} has no probe")

    def apply_coupling(self, i: int, op: JointOperator) -> None:
        """Apply a joint probe ⊗ money unitary on slot i."""
        slot = self._slot(i)
        if not slot.entangled:
            if slot.probe is None:
                raise ValueError(f"qubit {i} has no probe to couple")
            slot.joint = JointState.product(slot.probe, slot.money)
            slot.probe = None
            slot.money = None
        slot.joint = op.apply(slot.joint)

    def measure_probe(self, i: int, rng: np.random.Generator | None = None) -> int:
        """Read the probe in the computational basis and release it.

        With an rng this is a Born-rule draw; without one the outcome is
        thresholded at probability 1/2 (the probes of the attacks here end
        up exponentially close to |0⟩ or |1⟩, so thresholding only absorbs
        accumulated float error).
        """
        slot = self._slot(i)
        if slot.entangled:
            raise ValueError("probe is entangled with money; verify first")
        if slot.probe is None:
            raise ValueError(f"qubit {i} has no probe")
        p1 = slot.probe.prob1()
        if rng is None:
            outcome = 1 if p1 > 0.5 else 0
        else:
            outcome = 1 if rng.random() < p1 else 0
        slot.probe = None
        return outcome

    def measure_money_symbol(self, i: int, basis: str,
                             rng: np.random.Generator | None = None) -> KeySymbol:
        """Measure the held money qubit in the z or x basis (a local action).

        A Born-rule draw when an rng is given; thresholded at probability 1/2
        otherwise (for deterministic postselected analyses, where the money
        qubit is exactly a basis state when this is called).
        """
        slot = self._slot(i)
        if slot.entangled:
            raise ValueError("money is entangled with a probe; verify first")
        if basis == "z":
            states = (qcore.KET0, qcore.KET1)
            symbols = (KeySymbol.Z0, KeySymbol.Z1)
        elif basis == "x":
            states = (qcore.PLUS, qcore.MINUS)
            symbols = (KeySymbol.XPLUS, KeySymbol.XMINUS)
        else:
            raise ValueError(f"unknown basis {basis!r}")
        p0 = min(max(states[0].overlap2(slot.money), 0.0), 1.0)
        if rng is None:
            k = 0 if p0 > 0.5 else 1
        else:
            k = 0 if rng.random() < p0 else 1
        slot.money = states[k]
        return symbols[k]

    # -- verification --------------------------------------------------

    def _submission(self) -> Submission:
        entries = []
        for slot in self._slots:
            entries.append(slot.joint if slot.entangled else slot.money)
        return Submission(self.serial, tuple(entries))

    def _apply_report(self, report: VerificationReport) -> Outcome:
        if report.outcome is Outcome.CAUGHT:
            self.destroyed = True
            for slot in self._slots:
                slot.money = None
                slot.joint = None
            return report.outcome
        for i, slot in enumerate(self._slots):
            if slot.entangled:
                slot.joint = None
                slot.probe = report.probe_states[i]
            if report.outcome is Outcome.REISSUED:
                slot.money = report.new_note.states[i]
            else:
                slot.money = report.returned_money[i]
        if report.outcome is Outcome.REISSUED:
            self.serial = report.new_note.serial
            self.reissues += 1
        return report.outcome

    def submit(self, rng: np.random.Generator) -> Outcome:
        """Send the whole note in for one sampled verification."""
        report = self._bank.verify_sampled(self._submission(), rng)
        self.verifications += 1
        return self._apply_report(report)

    def submit_postselected(self) -> float:
        """One verification conditioned on passing; returns its probability."""
        report = self._bank.verify_postselected(self._submission())
        self.verifications += 1
        self._apply_report(report)
        return report.pass_probability

    # -- multi-round sessions -------------------------------------------

    def run_probe_rounds(
        self,
        i: int,
        probe0: PureQubit,
        pre: Operator2,
        couple: JointOperator,
        n_rounds: int,
        mode: str,
        rng: np.random.Generator | None = None,
        force_explicit: bool = False,
        gate_label: str = "",
    ) -> RoundRunResult:
        """Run n_rounds of [rotate probe by `pre`; apply `couple`; verify].

        Semantically identical to the explicit per-round loop through
        submit(); the sampled fast path exploits that, conditioned on
        passing, the probe evolves by a fixed 2×2 postselected map while the
        money qubit returns to the key state each round. `mode` is one of
        "sampled" (Bernoulli per round), "postselected" (exact all-pass
        branch, no randomness), or "fastforward" (one Bernoulli against the
        N-round pass probability; the caught round is not resolved).
        """
        slot = self._slot(i)
        if slot.entangled or slot.probe is not None:
            raise ValueError(f"qubit {i} must be unentangled with no probe attached")
        if mode == "sampled":
            if force_explicit or self.transcript is not None or not self._fast_path_ok():
                return self._run_rounds_explicit(
                    i, probe0, pre, couple, n_rounds, rng, gate_label
                )
            return self._run_rounds_fast(i, probe0, pre, couple, n_rounds, rng)
        if mode in ("postselected", "fastforward"):
            return self._run_rounds_closed(i, probe0, pre, couple, n_rounds, mode, rng)
        raise ValueError(f"unknown mode {mode!r}")

    def _fast_path_ok(self) -> bool:
        """Fast path needs every money qubit to sit exactly in its key state."""
        rec = self._bank._require(self.serial)
        for j, slot in enumerate(self._slots):
            if slot.entangled or slot.probe is not None:
                return False
            if slot.money is not rec.alpha[j]:
                return False
        return True

    def _pass_fail_maps(self, i: int, pre: Operator2, couple: JointOperator):
        rec = self._bank._require(self.serial)
        e_pass, e_fail = qcore.postselected_probe_maps(couple, rec.alpha[i])
        pre_arr = pre.as_array()
        return e_pass @ pre_arr, e_fail @ pre_arr

    def _run_rounds_fast(self, i, probe0, pre, couple, n_rounds, rng) -> RoundRunResult:
        rec = self._bank._require(self.serial)
        slot = self._slots[i]
        m_pass, m_fail = self._pass_fail_maps(i, pre, couple)
        probe_arr = probe0.as_array()
        done = 0
        while True:
            remaining = n_rounds - done
            uniforms = rng.random(remaining)
            caught_round, probe_arr = sample_transfer_rounds(
                m_pass, probe_arr, remaining, uniforms
            )
            if caught_round == 0:
                self.verifications += remaining
                return RoundRunResult(
                    Outcome.PASSED, PureQubit.from_array(probe_arr), n_rounds
                )
            done += caught_round
            self.verifications += caught_round
            # the coupled qubit measured wrong this round
            policy = self._bank.policy
            if isinstance(policy, StrictDestroy):
                rec.alive = False
                self.destroyed = True
                for s in self._slots:
                    s.money = None
                    s.joint = None
                return RoundRunResult(Outcome.CAUGHT, None, done, caught_round=done)
            v = m_fail @ probe_arr
            fail_probe = PureQubit.from_array(v / np.linalg.norm(v))
            # all other qubits are exactly their key states, so exactly one
            # qubit measured wrong in this round
            frac = 1.0 / self.n
            if frac <= policy.return_frac:
                # handed back: money collapsed to the orthogonal key state
                slot.money = rec.alpha_perp[i]
                if done == n_rounds:
                    return RoundRunResult(Outcome.PASSED, fail_probe, done)
                # coupled qubit no longer undisturbed; finish explicitly
                rest = self._run_rounds_explicit(
                    i, fail_probe, pre, couple, n_rounds - done, rng, ""
                )
                rest.verifications = done + rest.verifications
                if rest.caught_round is not None:
                    rest.caught_round += done
                return rest
            rec.alive = False
            if frac <= policy.reissue_frac:
                new_note = self._bank.issue(self.n, rng)
                for j, s in enumerate(self._slots):
                    s.money = new_note.states[j]
                    s.joint = None
                    s.probe = None
                self.serial = new_note.serial
                self.reissues += 1
                return RoundRunResult(Outcome.REISSUED, fail_probe, done, caught_round=done)
            self.destroyed = True
            for s in self._slots:
                s.money = None
                s.joint = None
            return RoundRunResult(Outcome.CAUGHT, None, done, caught_round=done)

    def _run_rounds_explicit(self, i, probe0, pre, couple, n_rounds, rng,
                             gate_label: str = "") -> RoundRunResult:
        """Reference per-round loop through the full submission machinery."""
        slot = self._slots[i]
        slot.probe = probe0
        for k in range(1, n_rounds + 1):
            self.rotate_probe(i, pre)
            self.apply_coupling(i, couple)
            outcome = self.submit(rng)
            if self.transcript is not None:
                entry = {
                    "round": self.verifications,
                    "qubit": i,
                    "perturbation_gate": gate_label,
                    "pass": outcome is Outcome.PASSED,
                }
                if outcome is not Outcome.CAUGHT:
                    p = self._slots[i].probe
                    entry["probe_state"] = [p.a0.real, p.a0.imag, p.a1.real, p.a1.imag]
                self.transcript.append(entry)
            if outcome is Outcome.CAUGHT:
                return RoundRunResult(Outcome.CAUGHT, None, k, caught_round=k)
            if outcome is Outcome.REISSUED:
                probe = self._slots[i].probe
                self._slots[i].probe = None
                return RoundRunResult(Outcome.REISSUED, probe, k, caught_round=k)
        probe = slot.probe
        slot.probe = None
        return RoundRunResult(Outcome.PASSED, probe, n_rounds)

    def _run_rounds_closed(self, i, probe0, pre, couple, n_rounds, mode, rng) -> RoundRunResult:
        """Exact N-round postselected branch via a 2×2 matrix power."""
        if not isinstance(self._bank.policy, StrictDestroy):
            raise BankError(f"{mode} mode requires the strict policy")
        rec = self._bank._require(self.serial)
        if not self._fast_path_ok():
            raise BankError(f"{mode} mode requires an undisturbed note")
        m_pass, _ = self._pass_fail_maps(i, pre, couple)
        v = np.linalg.matrix_power(m_pass, n_rounds) @ probe0.as_array()
        p_pass = float(np.real(np.vdot(v, v)))
        if p_pass < 1e-300:
            raise PostselectionUnderflowError(f"all-pass probability underflowed ({p_pass!r})")
        probe = PureQubit.from_array(v / math.sqrt(p_pass))
        self.verifications += n_rounds
        if mode == "postselected":
            return RoundRunResult(Outcome.PASSED, probe, n_rounds, pass_probability=p_pass)
        # fastforward: one aggregate Bernoulli; caught round not resolved
        if rng.random() < min(p_pass, 1.0):
            return RoundRunResult(Outcome.PASSED, probe, n_rounds, pass_probability=p_pass)
        rec.alive = False
        self.destroyed = True
        for s in self._slots:
            s.money = None
            s.joint = None
        return RoundRunResult(Outcome.CAUGHT, None, n_rounds, pass_probability=p_pass)

    def run_probe_rounds_repeated(
        self,
        i: int,
        probe0: PureQubit,
        pre: Operator2,
        couple: JointOperator,
        n_rounds: int,
        repeats: int,
        rng: np.random.Generator,
    ) -> RepeatedRoundsResult:
        """A batch of `repeats` independent fast-forward sessions.

        Conditioned on passing, a session hands the note back exactly in its
        key states, so consecutive sessions are i.i.d.; the closed form is
        computed once and each session costs one Bernoulli draw. Under the
        strict policy the first caught session destroys the note and ends
        the batch (runs after it never happen).
        """
        if not isinstance(self._bank.policy, StrictDestroy):
            raise BankError("fastforward mode requires the strict policy")
        rec = self._bank._require(self.serial)
        if not self._fast_path_ok():
            raise BankError("fastforward mode requires an undisturbed note")
        m_pass, _ = self._pass_fail_maps(i, pre, couple)
        v = np.linalg.matrix_power(m_pass, n_rounds) @ probe0.as_array()
        p_pass = float(np.real(np.vdot(v, v)))
        if p_pass < 1e-300:
            raise PostselectionUnderflowError(f"all-pass probability underflowed ({p_pass!r})")
        probe = PureQubit.from_array(v / math.sqrt(p_pass))
        draws = rng.random(repeats)
        fails = np.nonzero(draws >= min(p_pass, 1.0))[0]
        if fails.size == 0:
            self.verifications += n_rounds * repeats
            return RepeatedRoundsResult(repeats, False, probe, p_pass,
                                        n_rounds * repeats)
        first = int(fails[0])
        rec.alive = False
        self.destroyed = True
        for s in self._slots:
            s.money = None
            s.joint = None
        self.verifications += n_rounds * (first + 1)
        return RepeatedRoundsResult(first, True, probe if first else None, p_pass,
                                    n_rounds * (first + 1))

    def run_parallel_rounds(
        self,
        programs: dict[int, tuple[PureQubit, Operator2, JointOperator]],
        n_rounds: int,
        mode: str,
        rng: np.random.Generator | None = None,
    ) -> ParallelRoundResult:
        """Couple several qubits at once; one verification covers all of them.

        Each programs[i] = (probe0, pre, couple). Under the strict policy
        the per-qubit round outcomes are independent, so sampled mode runs
        each coupled qubit's rounds separately and the earliest failure
        (if any) is the round the whole note is confiscated.
        """
        if not isinstance(self._bank.policy, StrictDestroy):
            return self._run_parallel_explicit(programs, n_rounds, mode, rng)
        rec = self._bank._require(self.serial)
        if not self._fast_path_ok():
            raise BankError("parallel sessions require an undisturbed note")
        for i in programs:
            if self._slots[i].money is not rec.alpha[i]:
                raise BankError("parallel sessions require an undisturbed note")
        maps = {}
        for i in sorted(programs):
            probe0, pre, couple = programs[i]
            m_pass, _ = self._pass_fail_maps(i, pre, couple)
            maps[i] = (m_pass, probe0.as_array())

        if mode in ("postselected", "fastforward"):
            p_all = 1.0
            probes = {}
            for i in sorted(maps):
                m_pass, parr = maps[i]
                v = np.linalg.matrix_power(m_pass, n_rounds) @ parr
                p = float(np.real(np.vdot(v, v)))
                p_all *= p
                if p_all < 1e-300:
                    raise PostselectionUnderflowError("all-pass probability underflowed")
                probes[i] = PureQubit.from_array(v / math.sqrt(p))
            self.verifications += n_rounds
            if mode == "fastforward" and rng.random() >= min(p_all, 1.0):
                rec.alive = False
                self.destroyed = True
                for s in self._slots:
                    s.money = None
                    s.joint = None
                return ParallelRoundResult(Outcome.CAUGHT, None, n_rounds, pass_probability=p_all)
            return ParallelRoundResult(
                Outcome.PASSED, probes, n_rounds, pass_probability=p_all
            )

        if mode != "sampled":
            raise ValueError(f"unknown mode {mode!r}")
        first_catch = 0
        probes = {}
        for i in sorted(maps):
            m_pass, parr = maps[i]
            uniforms = rng.random(n_rounds)
            caught_round, out = sample_transfer_rounds(m_pass, parr, n_rounds, uniforms)
            if caught_round and (first_catch == 0 or caught_round < first_catch):
                first_catch = caught_round
            probes[i] = out
        if first_catch:
            rec.alive = False
            self.destroyed = True
            for s in self._slots:
                s.money = None
                s.joint = None
            self.verifications += first_catch
            return ParallelRoundResult(
                Outcome.CAUGHT, None, first_catch, caught_round=first_catch
            )
        self.verifications += n_rounds
        out = {i: PureQubit.from_array(arr) for i, arr in probes.items()}
        return ParallelRoundResult(Outcome.PASSED, out, n_rounds)

    def _run_parallel_explicit(self, programs, n_rounds, mode, rng) -> ParallelRoundResult:
        if mode != "sampled":
            raise BankError("only sampled mode is supported outside the strict policy")
        for i, (probe0, _pre, _c) in programs.items():
            self._slot(i).probe = probe0
        for k in range(1, n_rounds + 1):
            for i, (_p0, pre, couple) in programs.items():
                self.rotate_probe(i, pre)
                self.apply_coupling(i, couple)
            outcome = self.submit(rng)
            if outcome is Outcome.CAUGHT:
                return ParallelRoundResult(Outcome.CAUGHT, None, k, caught_round=k)
            if outcome is Outcome.REISSUED:
                for i in programs:
                    self._slots[i].probe = None
                return ParallelRoundResult(Outcome.REISSUED, None, k, caught_round=k)
        probes = {}
        for i in programs:
            probes[i] = self._slots[i].probe
            self._slots[i].probe = None
        return ParallelRoundResult(Outcome.PASSED, probes, n_rounds)
