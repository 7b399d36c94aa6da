"""Exact complex linear algebra for one- and two-qubit systems.

States are plain complex amplitude vectors (dim 2 for a single qubit, dim 4
for a probe ⊗ money pair), operators are small dense complex matrices, and
projective measurement is implemented as explicit branch postselection.
Everything here is immutable and pure, so values can be shared freely
between concurrent workers.

Tensor ordering is fixed globally: the *probe* register is always the first
factor and the *money* register the second, so basis order for a joint state
is |00⟩, |01⟩, |10⟩, |11⟩ with the left bit belonging to the probe.

Two states are considered physically equal when |⟨a|b⟩| = 1; amplitudes are
never compared component-wise because global phases are irrelevant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12
EMPTY_BRANCH_TOL = 1e-15


# ---------------------------------------------------------------------------
# Single-qubit pure states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PureQubit:
    """A pure qubit state a0|0⟩ + a1|1⟩ with exact complex amplitudes."""

    a0: complex
    a1: complex

    def norm2(self) -> float:
        return abs(self.a0) ** 2 + abs(self.a1) ** 2

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm2() - 1.0) <= tol

    def normalized(self) -> "PureQubit":
        n = math.sqrt(self.norm2())
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return PureQubit(self.a0 / n, self.a1 / n)

    def inner(self, other: "PureQubit") -> complex:
        """⟨self|other⟩."""
        return self.a0.conjugate() * other.a0 + self.a1.conjugate() * other.a1

    def overlap2(self, other: "PureQubit") -> float:
        """|⟨self|other⟩|², the Born probability of projecting onto self."""
        return abs(self.inner(other)) ** 2

    def same_state(self, other: "PureQubit", tol: float = 1e-10) -> bool:
        """Physical equality: |⟨self|other⟩| = 1 up to tol (phase-blind)."""
        return abs(abs(self.inner(other)) - 1.0) <= tol

    def orthogonal(self) -> "PureQubit":
        """The state orthogonal to this one (canonical phase choice)."""
        return PureQubit(-self.a1.conjugate(), self.a0.conjugate())

    def prob1(self) -> float:
        """Computational-basis probability of outcome 1."""
        return abs(self.a1) ** 2

    def bloch(self) -> tuple[float, float, float]:
        c = self.a0.conjugate() * self.a1
        return (2.0 * c.real, 2.0 * c.imag, abs(self.a0) ** 2 - abs(self.a1) ** 2)

    def to_density(self) -> "DensityQubit":
        return DensityQubit(self.bloch())

    def as_array(self) -> np.ndarray:
        return np.array([self.a0, self.a1], dtype=np.complex128)

    @staticmethod
    def from_array(v) -> "PureQubit":
        return PureQubit(complex(v[0]), complex(v[1]))


_INV_SQRT2 = 1.0 / math.sqrt(2.0)

KET0 = PureQubit(1.0 + 0.0j, 0.0 + 0.0j)
KET1 = PureQubit(0.0 + 0.0j, 1.0 + 0.0j)
PLUS = PureQubit(_INV_SQRT2 + 0.0j, _INV_SQRT2 + 0.0j)
MINUS = PureQubit(_INV_SQRT2 + 0.0j, -_INV_SQRT2 + 0.0j)
Y_PLUS = PureQubit(_INV_SQRT2 + 0.0j, 1j * _INV_SQRT2)
Y_MINUS = PureQubit(_INV_SQRT2 + 0.0j, -1j * _INV_SQRT2)


def from_polar(theta: float, phi: float = 0.0) -> PureQubit:
    """cos θ |0⟩ + e^{iφ} sin θ |1⟩."""
    return PureQubit(math.cos(theta) + 0.0j, math.sin(theta) * complex(math.cos(phi), math.sin(phi)))


def random_qubit(rng: np.random.Generator) -> PureQubit:
    """Haar-random single-qubit pure state."""
    v = rng.normal(size=4)
    z = np.array([v[0] + 1j * v[1], v[2] + 1j * v[3]])
    z /= np.linalg.norm(z)
    return PureQubit(complex(z[0]), complex(z[1]))


# ---------------------------------------------------------------------------
# 2x2 operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Operator2:
    """A 2×2 complex operator on a single qubit."""

    m00: complex
    m01: complex
    m10: complex
    m11: complex

    @staticmethod
    def from_array(m) -> "Operator2":
        return Operator2(complex(m[0][0]), complex(m[0][1]), complex(m[1][0]), complex(m[1][1]))

    def as_array(self) -> np.ndarray:
        return np.array([[self.m00, self.m01], [self.m10, self.m11]], dtype=np.complex128)

    def apply(self, q: PureQubit) -> PureQubit:
        return PureQubit(self.m00 * q.a0 + self.m01 * q.a1, self.m10 * q.a0 + self.m11 * q.a1)

    def dagger(self) -> "Operator2":
        return Operator2(
            self.m00.conjugate(), self.m10.conjugate(),
            self.m01.conjugate(), self.m11.conjugate(),
        )

    def __matmul__(self, other: "Operator2") -> "Operator2":
        return Operator2.from_array(self.as_array() @ other.as_array())

    def scaled(self, c: complex) -> "Operator2":
        return Operator2(c * self.m00, c * self.m01, c * self.m10, c * self.m11)

    def unitarity_defect(self) -> float:
        """‖M†M − I‖_max; zero (to round-off) for unitaries."""
        m = self.as_array()
        return float(np.max(np.abs(m.conj().T @ m - np.eye(2))))

    def is_unitary(self, tol: float = NORM_TOL) -> bool:
        return self.unitarity_defect() <= tol

    def is_hermitian(self, tol: float = NORM_TOL) -> bool:
        m = self.as_array()
        return float(np.max(np.abs(m - m.conj().T))) <= tol

    def expectation(self, q: PureQubit) -> complex:
        """⟨q|M|q⟩."""
        return q.inner(self.apply(q))


IDENTITY2 = Operator2(1, 0, 0, 1)
SIGMA_X = Operator2(0, 1, 1, 0)
SIGMA_Y = Operator2(0, -1j, 1j, 0)
SIGMA_Z = Operator2(1, 0, 0, -1)


def rotation(delta: float) -> Operator2:
    """Counterclockwise rotation by `delta` in the real |0⟩,|1⟩ plane."""
    c, s = math.cos(delta), math.sin(delta)
    return Operator2(c, -s, s, c)


def rotate(state: PureQubit, delta: float) -> PureQubit:
    """Rotate a (normalized) qubit counterclockwise by `delta`."""
    return rotation(delta).apply(state)


def pauli_from_axis(nx: float, ny: float, nz: float) -> Operator2:
    """n·σ for a unit vector n; a dichotomic observable with eigenvalues ±1."""
    norm = math.sqrt(nx * nx + ny * ny + nz * nz)
    nx, ny, nz = nx / norm, ny / norm, nz / norm
    return Operator2(nz, complex(nx, -ny), complex(nx, ny), -nz)


# ---------------------------------------------------------------------------
# Two-qubit (probe ⊗ money) states and operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class JointState:
    """Probe ⊗ money amplitudes c_pm on |00⟩, |01⟩, |10⟩, |11⟩.

    May be unnormalized (e.g. a postselected branch before renormalization);
    norm2() always reports the actual Σ|c|².
    """

    c00: complex
    c01: complex
    c10: complex
    c11: complex

    @staticmethod
    def product(probe: PureQubit, money: PureQubit) -> "JointState":
        return JointState(
            probe.a0 * money.a0, probe.a0 * money.a1,
            probe.a1 * money.a0, probe.a1 * money.a1,
        )

    def norm2(self) -> float:
        return abs(self.c00) ** 2 + abs(self.c01) ** 2 + abs(self.c10) ** 2 + abs(self.c11) ** 2

    def is_normalized(self, tol: float = NORM_TOL) -> bool:
        return abs(self.norm2() - 1.0) <= tol

    def as_array(self) -> np.ndarray:
        return np.array([self.c00, self.c01, self.c10, self.c11], dtype=np.complex128)

    @staticmethod
    def from_array(v) -> "JointState":
        return JointState(complex(v[0]), complex(v[1]), complex(v[2]), complex(v[3]))


@dataclass(frozen=True)
class JointOperator:
    """A 4×4 complex operator on probe ⊗ money, basis order |00⟩..|11⟩."""

    mat: tuple  # 16 complex entries, row-major

    @staticmethod
    def from_array(m) -> "JointOperator":
        a = np.asarray(m, dtype=np.complex128).reshape(4, 4)
        return JointOperator(tuple(complex(x) for x in a.ravel()))

    def as_array(self) -> np.ndarray:
        return np.array(self.mat, dtype=np.complex128).reshape(4, 4)

    def apply(self, s: JointState) -> JointState:
        return JointState.from_array(self.as_array() @ s.as_array())

    def unitarity_defect(self) -> float:
        m = self.as_array()
        return float(np.max(np.abs(m.conj().T @ m - np.eye(4))))

    def is_unitary(self, tol: float = NORM_TOL) -> bool:
        return self.unitarity_defect() <= tol


def kron2(a: Operator2, b: Operator2) -> JointOperator:
    return JointOperator.from_array(np.kron(a.as_array(), b.as_array()))


def controlled(p: Operator2) -> JointOperator:
    """|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ P, the probe-controlled interaction."""
    m = np.eye(4, dtype=np.complex128)
    m[2:, 2:] = p.as_array()
    return JointOperator.from_array(m)


# ---------------------------------------------------------------------------
# Projective measurement of the money register
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasurementBranches:
    """Postselection structure of measuring the money factor in {|α⟩, |α⊥⟩}.

    Each branch carries its probability and the conditional probe state the
    branch leaves behind. A branch with probability below EMPTY_BRANCH_TOL is
    marked empty (state None) instead of renormalizing a near-zero vector.
    """

    p_pass: float
    pass_probe: PureQubit | None
    p_fail: float
    fail_probe: PureQubit | None


def measure_money(joint: JointState, key: PureQubit) -> MeasurementBranches:
    """Measure the money register of `joint` in the {key, key⊥} basis.

    The pass branch conditions on the money collapsing to `key`, the fail
    branch on `key⊥`. Branch probabilities sum to 1 for a normalized input.
    """
    perp = key.orthogonal()
    # ⟨key|_money acting on the joint state leaves a probe amplitude vector.
    pass0 = key.a0.conjugate() * joint.c00 + key.a1.conjugate() * joint.c01
    pass1 = key.a0.conjugate() * joint.c10 + key.a1.conjugate() * joint.c11
    fail0 = perp.a0.conjugate() * joint.c00 + perp.a1.conjugate() * joint.c01
    fail1 = perp.a0.conjugate() * joint.c10 + perp.a1.conjugate() * joint.c11
    p_pass = abs(pass0) ** 2 + abs(pass1) ** 2
    p_fail = abs(fail0) ** 2 + abs(fail1) ** 2
    if p_pass > EMPTY_BRANCH_TOL:
        n = math.sqrt(p_pass)
        pass_probe = PureQubit(pass0 / n, pass1 / n)
    else:
        pass_probe = None
    if p_fail > EMPTY_BRANCH_TOL:
        n = math.sqrt(p_fail)
        fail_probe = PureQubit(fail0 / n, fail1 / n)
    else:
        fail_probe = None
    return MeasurementBranches(p_pass, pass_probe, p_fail, fail_probe)


def postselected_probe_maps(op: JointOperator, money: PureQubit) -> tuple[np.ndarray, np.ndarray]:
    """Contract a joint operator against a fixed money state.

    Returns the pair of 2×2 probe maps (E_pass, E_fail) with
    E_pass = (I ⊗ ⟨money|) · op · (I ⊗ |money⟩) and E_fail the analogous
    contraction onto ⟨money⊥|. Applying E_pass to the probe reproduces the
    unnormalized pass branch of op followed by a money measurement.
    """
    m4 = op.as_array().reshape(2, 2, 2, 2)  # [probe_out, money_out, probe_in, money_in]
    alpha = money.as_array()
    perp = money.orthogonal().as_array()
    e_pass = np.einsum("l,ilkm,m->ik", alpha.conj(), m4, alpha)
    e_fail = np.einsum("l,ilkm,m->ik", perp.conj(), m4, alpha)
    return e_pass, e_fail


# ---------------------------------------------------------------------------
# Single-qubit density operators (Bloch form)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityQubit:
    """ρ = (I + r·σ)/2 stored as the Bloch vector r.

    Hermitian and trace 1 by construction; a physical state iff ‖r‖ ≤ 1.
    Vectors with ‖r‖ > 1 are allowed so that raw tomographic estimates can
    be represented before projection back onto the Bloch ball.
    """

    bloch: tuple[float, float, float]

    @staticmethod
    def from_pure(q: PureQubit) -> "DensityQubit":
        return DensityQubit(q.bloch())

    @staticmethod
    def maximally_mixed() -> "DensityQubit":
        return DensityQubit((0.0, 0.0, 0.0))

    def bloch_norm(self) -> float:
        rx, ry, rz = self.bloch
        return math.sqrt(rx * rx + ry * ry + rz * rz)

    def is_positive(self, tol: float = 1e-9) -> bool:
        return self.bloch_norm() <= 1.0 + tol

    def as_matrix(self) -> np.ndarray:
        rx, ry, rz = self.bloch
        return 0.5 * np.array(
            [[1.0 + rz, rx - 1j * ry], [rx + 1j * ry, 1.0 - rz]], dtype=np.complex128
        )


def fidelity_pure(rho: DensityQubit, target: PureQubit) -> float:
    """⟨target|ρ|target⟩, the probability ρ passes a projective test on target."""
    if not rho.is_positive():
        raise ValueError(f"rho is not positive (‖r‖ = {rho.bloch_norm():.6g} > 1)")
    rx, ry, rz = rho.bloch
    nx, ny, nz = target.bloch()
    return 0.5 * (1.0 + rx * nx + ry * ny + rz * nz)


def trace_distance(a: DensityQubit, b: DensityQubit) -> float:
    """½‖a − b‖_tr = ‖r_a − r_b‖₂ / 2 for single qubits (positivity not required)."""
    ax, ay, az = a.bloch
    bx, by, bz = b.bloch
    return 0.5 * math.sqrt((ax - bx) ** 2 + (ay - by) ** 2 + (az - bz) ** 2)
