"""Minimal quantum state algebra for single-photon communication protocols.

Photon states come in two flavours: a symbolic (basis, bit) form that is cheap
enough for million-photon protocol runs, and an explicit state-vector form for
the operations that genuinely need linear algebra (Pauli action on
superpositions, Bell-state measurement, teleportation).  Density matrices with
partial trace and von Neumann entropy round out the toolkit.

State equality throughout this package means equality of measurement outcome
distributions (equivalently, of density matrices); global phases are never
observable and are silently dropped.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

SQRT_HALF = 1.0 / np.sqrt(2.0)

#: numerical tolerance for Hermiticity / trace / positivity checks
ATOL = 1e-10

#: eigenvalues below this are treated as exact zeros in entropy computations
EIGENVALUE_CLAMP = 1e-10


class Basis(enum.IntEnum):
    """Preparation/measurement basis.

    Z and X carry protocol data.  All three bases are mutually unbiased, so
    measuring any eigenstate in a different basis yields a fair coin; in
    particular a Y-basis measurement of a Z- or X-prepared photon is
    completely random.
    """

    Z = 0
    X = 1
    Y = 2


# Basis eigenstates, KETS[basis][bit]; bit 0 is the +1 eigenstate.
KETS = {
    Basis.Z: (
        np.array([1.0, 0.0], dtype=complex),
        np.array([0.0, 1.0], dtype=complex),
    ),
    Basis.X: (
        np.array([SQRT_HALF, SQRT_HALF], dtype=complex),
        np.array([SQRT_HALF, -SQRT_HALF], dtype=complex),
    ),
    Basis.Y: (
        np.array([SQRT_HALF, SQRT_HALF * 1j], dtype=complex),
        np.array([SQRT_HALF, -SQRT_HALF * 1j], dtype=complex),
    ),
}


class PauliOp(enum.Enum):
    """Single-qubit Pauli operators plus the bit-encoding operation iY.

    IY is i times sigma_y; applying it twice gives minus the identity, which
    acts as the identity on density matrices.  It flips the bit of both Z- and
    X-basis eigenstates, which is what makes it usable as a basis-transparent
    logical-bit encoder.
    """

    I = "I"  # noqa: E741  (conventional Pauli name)
    X = "X"
    Y = "Y"
    Z = "Z"
    IY = "iY"


PAULI_MATRICES = {
    PauliOp.I: np.eye(2, dtype=complex),
    PauliOp.X: np.array([[0, 1], [1, 0]], dtype=complex),
    PauliOp.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    PauliOp.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    PauliOp.IY: np.array([[0, 1], [-1, 0]], dtype=complex),
}

# Symbolic action of each Pauli on a (basis, bit) eigenstate: True where the
# bit flips.  Phases are unobservable and dropped.  sigma_x flips Z and Y
# bits, sigma_z flips X and Y bits, sigma_y (and iY) flips Z and X bits.
PAULI_FLIPS = {
    PauliOp.I: {Basis.Z: False, Basis.X: False, Basis.Y: False},
    PauliOp.X: {Basis.Z: True, Basis.X: False, Basis.Y: True},
    PauliOp.Z: {Basis.Z: False, Basis.X: True, Basis.Y: True},
    PauliOp.Y: {Basis.Z: True, Basis.X: True, Basis.Y: False},
    PauliOp.IY: {Basis.Z: True, Basis.X: True, Basis.Y: False},
}


class LostPhotonError(ValueError):
    """Raised when an operation that needs a live photon receives a lost one."""


def state_vector(amplitudes) -> np.ndarray:
    """Validate and return a normalized complex state vector.

    Dimension must be 2, 4 or 8; the squared amplitudes must sum to one
    within 1e-12.
    """
    vec = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if vec.shape[0] not in (2, 4, 8):
        raise ValueError(f"state vector dimension must be 2, 4 or 8, got {vec.shape[0]}")
    norm_sq = float(np.sum(np.abs(vec) ** 2))
    if abs(norm_sq - 1.0) > 1e-12:
        raise ValueError(f"state vector is not normalized: sum |a|^2 = {norm_sq!r}")
    return vec


@dataclass(frozen=True)
class PhotonState:
    """A single transmitted quantum carrier.

    Either symbolic, ``(basis, bit)`` naming an eigenstate, or explicit via a
    2-dimensional ``vector``.  ``lost`` photons carry no state and never
    produce a detector click.
    """

    basis: Basis | None = None
    bit: int | None = None
    vector: np.ndarray | None = field(default=None, repr=False)
    lost: bool = False

    def __post_init__(self):
        if self.lost:
            return
        symbolic = self.basis is not None and self.bit is not None
        if symbolic == (self.vector is not None):
            raise ValueError("photon needs exactly one of (basis, bit) or vector")
        if symbolic and self.bit not in (0, 1):
            raise ValueError(f"bit must be 0 or 1, got {self.bit!r}")
        if self.vector is not None and self.vector.shape != (2,):
            raise ValueError("photon vector must be 2-dimensional")

    @property
    def is_symbolic(self) -> bool:
        return self.vector is None

    def __eq__(self, other):
        # Representational equality; for semantic (phase-free) comparisons
        # use density_of.  Defined by hand because ndarray fields break the
        # generated comparison.
        if not isinstance(other, PhotonState):
            return NotImplemented
        if self.lost or other.lost:
            return self.lost == other.lost
        if self.is_symbolic and other.is_symbolic:
            return self.basis == other.basis and self.bit == other.bit
        if self.vector is not None and other.vector is not None:
            return bool(np.array_equal(self.vector, other.vector))
        return False

    def to_vector(self) -> np.ndarray:
        """Explicit amplitudes of this photon (error if lost)."""
        if self.lost:
            raise LostPhotonError("lost photon has no state vector")
        if self.vector is not None:
            return self.vector
        return KETS[self.basis][self.bit]


LOST_PHOTON = PhotonState(lost=True)


def prepare(basis: Basis, bit: int) -> PhotonState:
    """Prepare a single photon in the given basis eigenstate (bit 0 or 1)."""
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    return PhotonState(basis=basis, bit=bit)


def apply_pauli(op: PauliOp, photon: PhotonState) -> PhotonState:
    """Apply a Pauli operation to a photon.

    Symbolic photons stay symbolic (the Paulis permute basis eigenstates up
    to phase).  Operating on a lost photon is a protocol logic bug and
    raises.
    """
    if photon.lost:
        raise LostPhotonError("cannot apply a Pauli to a lost photon")
    if photon.is_symbolic:
        flip = PAULI_FLIPS[op][photon.basis]
        return PhotonState(basis=photon.basis, bit=photon.bit ^ 1 if flip else photon.bit)
    return PhotonState(vector=PAULI_MATRICES[op] @ photon.vector)


def measure(photon: PhotonState, basis: Basis, rng: np.random.Generator) -> int | None:
    """Projective measurement of a photon; destroys the photon.

    Returns the outcome bit, or None (no click) if the photon was lost.
    Measuring a symbolic photon in its own basis is deterministic; in any
    other basis the outcome is a fair coin (the bases are mutually unbiased).
    """
    if photon.lost:
        return None
    if photon.is_symbolic:
        if basis == photon.basis:
            return photon.bit
        return int(rng.integers(0, 2))
    p0 = float(np.abs(np.vdot(KETS[basis][0], photon.vector)) ** 2)
    return 0 if rng.random() < p0 else 1


def density_of(photon: PhotonState) -> np.ndarray:
    """2x2 density matrix of a photon; the phase-free state representation."""
    vec = photon.to_vector()
    return np.outer(vec, vec.conj())


# ---------------------------------------------------------------------------
# Bell states and two-qubit machinery
# ---------------------------------------------------------------------------

# Fixed Bell-state indexing convention used across the whole package:
#   1: (|00> + |11>)/sqrt2   (Phi+)
#   2: (|00> - |11>)/sqrt2   (Phi-)
#   3: (|01> + |10>)/sqrt2   (Psi+)
#   4: (|01> - |10>)/sqrt2   (Psi-)
# Index 1 is the error-free pair; 2/3/4 correspond to a sigma_z / sigma_x /
# iY disturbance on one half of the index-1 pair.
BELL_VECTORS = {
    1: np.array([1, 0, 0, 1], dtype=complex) * SQRT_HALF,
    2: np.array([1, 0, 0, -1], dtype=complex) * SQRT_HALF,
    3: np.array([0, 1, 1, 0], dtype=complex) * SQRT_HALF,
    4: np.array([0, 1, -1, 0], dtype=complex) * SQRT_HALF,
}

_BELL_BASIS = np.stack([BELL_VECTORS[i] for i in (1, 2, 3, 4)])

# Pauli correction that completes teleportation through an index-1 resource
# pair, keyed by the Bell measurement outcome.
TELEPORT_CORRECTIONS = {1: PauliOp.I, 2: PauliOp.Z, 3: PauliOp.X, 4: PauliOp.IY}


def make_bell(index: int) -> np.ndarray:
    """Return the Bell state vector for index 1..4 (see convention above)."""
    if index not in BELL_VECTORS:
        raise ValueError(f"Bell index must be 1..4, got {index!r}")
    return BELL_VECTORS[index].copy()


def bell_measure(joint: np.ndarray, rng: np.random.Generator) -> int:
    """Ideal (unit-efficiency) Bell-state measurement of a two-qubit state.

    Samples outcome i with probability |<Bell_i|joint>|^2 and returns the
    index 1..4.
    """
    joint = state_vector(joint)
    if joint.shape[0] != 4:
        raise ValueError("bell_measure needs a 4-dimensional joint state")
    probs = np.abs(_BELL_BASIS.conj() @ joint) ** 2
    probs = probs / probs.sum()
    return int(rng.choice(4, p=probs)) + 1


def bell_project_pair(joint: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Bell-measurement branches for the first two qubits of a 3-qubit state.

    Returns (probs, branches): probs[i] is the probability of Bell outcome
    i+1, branches[i] the normalized post-measurement state of the third
    qubit (zero vector where the branch has no weight).
    """
    amp = np.asarray(joint, dtype=complex).reshape(4, 2)
    branch = _BELL_BASIS.conj() @ amp  # (4, 2) unnormalized retained states
    probs = np.sum(np.abs(branch) ** 2, axis=1)
    total = probs.sum()
    probs = probs / total
    norms = np.sqrt(np.sum(np.abs(branch) ** 2, axis=1))
    safe = np.where(norms > 0, norms, 1.0)
    return probs, branch / safe[:, None]


def teleport(
    resource: np.ndarray, payload: PhotonState, rng: np.random.Generator
) -> tuple[int, PhotonState]:
    """Teleport a payload photon through a two-qubit resource pair.

    The resource vector is ordered (port, output): the port qubit enters the
    Bell measurement together with the payload, the output qubit is retained.
    Returns the Bell outcome index and the retained photon after the
    outcome-determined Pauli correction.  With an index-1 resource pair the
    retained photon equals the payload state; each outcome occurs with
    probability 1/4.
    """
    if payload.lost:
        raise LostPhotonError("cannot teleport a lost photon")
    resource = state_vector(resource)
    if resource.shape[0] != 4:
        raise ValueError("teleport resource must be a two-qubit state")
    joint = np.kron(payload.to_vector(), resource)  # qubits: payload, port, output
    probs, branches = bell_project_pair(joint)
    outcome = int(rng.choice(4, p=probs)) + 1
    corrected = PAULI_MATRICES[TELEPORT_CORRECTIONS[outcome]] @ branches[outcome - 1]
    return outcome, PhotonState(vector=corrected)


def apply_pauli_to_qubit(state: np.ndarray, qubit: int, op: PauliOp) -> np.ndarray:
    """Apply a single-qubit Pauli to one qubit of a multi-qubit state vector."""
    state = np.asarray(state, dtype=complex)
    n = state.shape[0].bit_length() - 1
    tensor = state.reshape((2,) * n)
    moved = np.moveaxis(tensor, qubit, 0)
    out = np.tensordot(PAULI_MATRICES[op], moved, axes=([1], [0]))
    return np.moveaxis(out, 0, qubit).reshape(-1)


def measure_qubit(
    state: np.ndarray, qubit: int, basis: Basis, rng: np.random.Generator
) -> tuple[int, np.ndarray]:
    """Measure one qubit of a multi-qubit state vector in the given basis.

    Returns (outcome bit, collapsed state of the remaining qubits).  Used for
    intercept attacks on one half of an entangled pair.
    """
    state = np.asarray(state, dtype=complex)
    n = state.shape[0].bit_length() - 1
    tensor = np.moveaxis(state.reshape((2,) * n), qubit, 0)
    amp0 = np.tensordot(KETS[basis][0].conj(), tensor, axes=([0], [0])).reshape(-1)
    amp1 = np.tensordot(KETS[basis][1].conj(), tensor, axes=([0], [0])).reshape(-1)
    p0 = float(np.sum(np.abs(amp0) ** 2))
    outcome = 0 if rng.random() < p0 else 1
    rest = amp0 if outcome == 0 else amp1
    return outcome, rest / np.linalg.norm(rest)


# ---------------------------------------------------------------------------
# Density matrices and entropies
# ---------------------------------------------------------------------------


class DensityMatrix:
    """Validated Hermitian, PSD, unit-trace complex matrix (dim 2, 4 or 8).

    Dimension 8 exists only for the joint sender/eavesdropper states used by
    the capacity calculations; protocol code never goes beyond dimension 4.
    """

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        mat = np.asarray(matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {mat.shape}")
        if mat.shape[0] not in (2, 4, 8):
            raise ValueError(f"density matrix dimension must be 2, 4 or 8, got {mat.shape[0]}")
        if not np.allclose(mat, mat.conj().T, atol=ATOL):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > ATOL or abs(np.trace(mat).imag) > ATOL:
            raise ValueError(f"density matrix trace is {np.trace(mat)!r}, expected 1")
        if np.linalg.eigvalsh(mat).min() < -ATOL:
            raise ValueError("density matrix has a negative eigenvalue")
        self.matrix = mat

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_vector(cls, vec) -> "DensityMatrix":
        vec = state_vector(vec)
        return cls(np.outer(vec, vec.conj()))

    @classmethod
    def from_photon(cls, photon: PhotonState) -> "DensityMatrix":
        return cls(density_of(photon))

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


def partial_trace(rho: DensityMatrix, subsystem: str) -> DensityMatrix:
    """Trace out one qubit of a two-qubit density matrix.

    ``subsystem`` names the qubit that is traced out, "first" or "second";
    the returned 2x2 state describes the other one.  Trace and positivity are
    preserved.
    """
    if rho.dim != 4:
        raise ValueError(f"partial_trace needs a 4-dimensional state, got dim {rho.dim}")
    t = rho.matrix.reshape(2, 2, 2, 2)
    if subsystem == "first":
        reduced = np.trace(t, axis1=0, axis2=2)
    elif subsystem == "second":
        reduced = np.trace(t, axis1=1, axis2=3)
    else:
        raise ValueError(f"subsystem must be 'first' or 'second', got {subsystem!r}")
    return DensityMatrix(reduced)


def von_neumann_entropy(rho) -> float:
    """Von Neumann entropy in bits: S = -sum_k lam_k log2 lam_k.

    Accepts a DensityMatrix or a raw Hermitian ndarray.  Eigenvalues within
    EIGENVALUE_CLAMP of zero are treated as exact zeros (0 log 0 := 0), which
    keeps numerically near-singular matrices from producing NaNs.
    """
    mat = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    eigenvalues = np.linalg.eigvalsh(mat)
    eigenvalues = eigenvalues[eigenvalues > EIGENVALUE_CLAMP]
    return float(-np.sum(eigenvalues * np.log2(eigenvalues)))


def binary_entropy(p: float) -> float:
    """Binary Shannon entropy h(p) in bits, with h(0) = h(1) = 0."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binary_entropy argument must be in [0, 1], got {p!r}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1.0 - p) * np.log2(1.0 - p))
