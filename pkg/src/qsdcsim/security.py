"""Secrecy-capacity calculators and the numerical eavesdropper-information oracle.

Closed forms
------------
Main channel capacity:      C_M = Q_Bob * (1 - h(e))
Two-basis wiretap bound:    C_W <= Q_Eve * h(eps_x + eps_z)
Z-basis-only wiretap:       C_W  = Q_Eve * h(eps_z)   (operating estimate)
Secrecy capacity:           C_S  = C_M - C_W

Numerical oracle
----------------
The most general single-photon collective attack compatible with detected
bit error rates (eps_x, eps_z) is parametrized by Bell-diagonal weights
lambda_1..lambda_4 with eps_x = lambda_2 + lambda_4 and
eps_z = lambda_3 + lambda_4.  The attack purifies to a pure state on the
sender pair (A, B) and a four-dimensional ancilla E held by the
eavesdropper, built from the Bell states |Phi_i> tensored with orthonormal
ancilla basis states.  Tracing out B leaves an 8x8 joint state rho_AE; the
logical bit is encoded on A with the identity (bit 0) or iY (bit 1) at
probability 1/2 each, and the eavesdropper's extractable information is the
Holevo quantity of the resulting two-state ensemble.  ``max_holevo``
maximizes it over the one free parameter lambda_4.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum import (
    BELL_VECTORS,
    PAULI_MATRICES,
    PauliOp,
    binary_entropy,
)

CAPACITY_MODES = ("two_basis", "z_basis")

#: tolerance used when validating lambda constraints
LAMBDA_ATOL = 1e-9


@dataclass(frozen=True)
class DberEstimate:
    """Detected/quantum bit error rates with their sample counts.

    eps_x and eps_z come from the pre-encoding detection rounds, e from the
    post-encoding integrity check.  A rate whose count is zero is
    unavailable and its value must not be trusted.
    """

    eps_x: float = 0.0
    eps_z: float = 0.0
    e: float = 0.0
    n_x: int = 0
    n_z: int = 0
    n_e: int = 0

    def __post_init__(self):
        for name in ("eps_x", "eps_z", "e"):
            v = getattr(self, name)
            if not 0.0 <= v <= 0.5:
                raise ValueError(f"{name} must be in [0, 0.5], got {v!r}")
        for name in ("n_x", "n_z", "n_e"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def has_x(self) -> bool:
        return self.n_x > 0

    @property
    def has_z(self) -> bool:
        return self.n_z > 0

    @property
    def has_e(self) -> bool:
        return self.n_e > 0

    @property
    def pooled(self) -> float:
        """Error rate pooled over both detection bases (0 if none measured)."""
        total = self.n_x + self.n_z
        if total == 0:
            return 0.0
        return (self.eps_x * self.n_x + self.eps_z * self.n_z) / total


@dataclass(frozen=True)
class CapacityReport:
    """Capacities of one channel configuration, in bits per channel use.

    c_s is the raw difference c_m - c_w and may be negative, meaning no
    secure transmission is possible; c_s_clamped is max(c_s, 0) for
    reporting.  The error-rate inputs are retained so the report can be
    recomputed under a different gain assumption.
    """

    q_bob: float
    q_eve: float
    g: float
    e: float
    eps_x: float
    eps_z: float
    c_m: float
    c_w: float
    c_s: float
    mode: str = "two_basis"

    @property
    def c_s_clamped(self) -> float:
        return max(self.c_s, 0.0)


def _check_rate(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must be in [0, 1], got {value!r}")


def _check_error(name: str, value: float) -> None:
    if not 0.0 <= value <= 0.5:
        raise ValueError(f"{name} must be in [0, 0.5], got {value!r}")


def main_capacity(q_bob: float, e: float) -> float:
    """Main channel capacity Q_Bob * (1 - h(e)) of the erasure/flip cascade."""
    _check_rate("q_bob", q_bob)
    _check_error("e", e)
    return q_bob * (1.0 - binary_entropy(e))


def wiretap_capacity_bound(q_eve: float, eps_x: float, eps_z: float) -> float:
    """Two-basis wiretap capacity bound Q_Eve * h(eps_x + eps_z)."""
    _check_rate("q_eve", q_eve)
    _check_error("eps_x", eps_x)
    _check_error("eps_z", eps_z)
    return q_eve * binary_entropy(min(eps_x + eps_z, 1.0))


def wiretap_capacity_zbasis(q_eve: float, eps_z: float) -> float:
    """Z-basis-only wiretap capacity Q_Eve * h(eps_z).

    The single-basis analysis states this quantity as a floor on the true
    wiretap capacity; it serves as the operating estimate when both
    encoding and detection run in the Z basis.  It sits below the two-basis
    bound whenever eps_x > 0, which is exactly why the single-basis
    refinement buys distance.
    """
    _check_rate("q_eve", q_eve)
    _check_error("eps_z", eps_z)
    return q_eve * binary_entropy(eps_z)


def secrecy_capacity(
    q_bob: float,
    q_eve: float,
    e: float,
    eps_x: float,
    eps_z: float,
    mode: str = "two_basis",
) -> CapacityReport:
    """Populate a CapacityReport for one channel configuration."""
    if mode not in CAPACITY_MODES:
        raise ValueError(f"mode must be one of {CAPACITY_MODES}, got {mode!r}")
    _check_rate("q_bob", q_bob)
    _check_rate("q_eve", q_eve)
    c_m = main_capacity(q_bob, e)
    if mode == "two_basis":
        c_w = wiretap_capacity_bound(q_eve, eps_x, eps_z)
    else:
        c_w = wiretap_capacity_zbasis(q_eve, eps_z)
    g = q_eve / q_bob if q_bob > 0 else float("inf")
    return CapacityReport(
        q_bob=q_bob,
        q_eve=q_eve,
        g=g,
        e=e,
        eps_x=eps_x,
        eps_z=eps_z,
        c_m=c_m,
        c_w=c_w,
        c_s=c_m - c_w,
        mode=mode,
    )


def apply_incum(report: CapacityReport) -> CapacityReport:
    """Recompute a report under masking: the eavesdropper's rate collapses to
    the receiver's (g = 1); everything else is unchanged."""
    return secrecy_capacity(
        q_bob=report.q_bob,
        q_eve=report.q_bob,
        e=report.e,
        eps_x=report.eps_x,
        eps_z=report.eps_z,
        mode=report.mode,
    )


# ---------------------------------------------------------------------------
# Numerical Holevo oracle
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HolevoProblem:
    """Attack parameters lambda_1..lambda_4 under DBER constraints.

    The weights are nonnegative, sum to one, and satisfy
    eps_x = lambda_2 + lambda_4 and eps_z = lambda_3 + lambda_4.  The bit
    values 0/1 are encoded with probability p_encode = 1/2 each; the
    maximization over encoding priors is intentionally not implemented.
    """

    lambdas: tuple[float, float, float, float]
    p_encode: float = 0.5

    def __post_init__(self):
        lam = self.lambdas
        if len(lam) != 4:
            raise ValueError("lambdas must have exactly 4 entries")
        if any(v < -LAMBDA_ATOL for v in lam):
            raise ValueError(f"lambdas must be >= 0, got {lam!r}")
        if abs(sum(lam) - 1.0) > LAMBDA_ATOL:
            raise ValueError(f"lambdas must sum to 1, got sum {sum(lam)!r}")
        if self.p_encode != 0.5:
            raise ValueError("encoding prior is fixed to 1/2")

    @property
    def eps_x(self) -> float:
        return self.lambdas[1] + self.lambdas[3]

    @property
    def eps_z(self) -> float:
        return self.lambdas[2] + self.lambdas[3]


def _build_cross_kernel() -> np.ndarray:
    """Precompute K[i, j] = Tr_B(|Phi_i><Phi_j|) (x) |e_i><e_j| as 8x8 blocks.

    rho_AE(lambda) = sum_ij sqrt(lambda_i lambda_j) K[i, j]; the ancilla
    states |e_i> are the computational basis of a 4-dimensional space, the
    minimal dimension that keeps every cross term of the purification.
    """
    kernel = np.zeros((4, 4, 8, 8), dtype=complex)
    for i in range(4):
        bi = BELL_VECTORS[i + 1].reshape(2, 2)
        for j in range(4):
            bj = BELL_VECTORS[j + 1].reshape(2, 2)
            # Tr over the B (second) index of |Phi_i><Phi_j|
            block = np.einsum("ab,cb->ac", bi, bj.conj())
            e_ij = np.zeros((4, 4), dtype=complex)
            e_ij[i, j] = 1.0
            kernel[i, j] = np.kron(block, e_ij)
    return kernel


_CROSS_KERNEL = _build_cross_kernel()
_Y8 = np.kron(PAULI_MATRICES[PauliOp.IY], np.eye(4, dtype=complex))


def _joint_states(lambdas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """rho_AE for a batch of lambda vectors, plus the equal mixture of the
    two encoded states.  lambdas has shape (batch, 4)."""
    weights = np.sqrt(np.einsum("bi,bj->bij", lambdas, lambdas))
    rho = np.einsum("bij,ijkl->bkl", weights, _CROSS_KERNEL)
    rho_enc = _Y8 @ rho @ _Y8.conj().T
    return rho, 0.5 * (rho + rho_enc)


def _batch_entropy(rho: np.ndarray) -> np.ndarray:
    eig = np.linalg.eigvalsh(rho)
    eig = np.where(eig > 1e-12, eig, 1.0)  # 0 log 0 := 0
    return -np.sum(eig * np.log2(eig), axis=-1)


def _holevo_batch(lambdas: np.ndarray) -> np.ndarray:
    rho, mix = _joint_states(lambdas)
    # The two encoded states are unitarily related, so they share an entropy.
    return np.clip(_batch_entropy(mix) - _batch_entropy(rho), 0.0, 1.0)


def holevo_quantity(problem: HolevoProblem) -> float:
    """Eavesdropper's extractable information, in bits, for one attack.

    Builds the 8x8 joint sender/eavesdropper state for the given Bell
    weights, applies the two encodings, and evaluates
    S(mean) - mean of S(branch); the result lies in [0, 1].
    """
    lam = np.clip(np.asarray(problem.lambdas, dtype=float), 0.0, None)
    return float(_holevo_batch(lam.reshape(1, 4))[0])


def _family(eps_x: float, eps_z: float, lam4: np.ndarray) -> np.ndarray:
    """Lambda vectors of the feasible one-parameter family at fixed DBERs."""
    lam4 = np.atleast_1d(np.asarray(lam4, dtype=float))
    lam = np.stack(
        [1.0 - eps_x - eps_z + lam4, eps_x - lam4, eps_z - lam4, lam4], axis=1
    )
    return np.clip(lam, 0.0, None)


def max_holevo(eps_x: float, eps_z: float) -> tuple[float, HolevoProblem]:
    """Maximize the Holevo quantity over all attacks with the given DBERs.

    The feasible set is the interval
    lambda_4 in [max(0, eps_x + eps_z - 1), min(eps_x, eps_z)]; a 1000-point
    grid scan followed by golden-section refinement (interval 1e-10) finds
    the global maximum of this smooth one-dimensional problem.
    Returns (maximum, maximizing problem).
    """
    _check_error("eps_x", eps_x)
    _check_error("eps_z", eps_z)
    if eps_x + eps_z > 1.0:
        raise ValueError("infeasible constraints: eps_x + eps_z > 1")

    lo = max(0.0, eps_x + eps_z - 1.0)
    hi = min(eps_x, eps_z)
    if hi - lo < 1e-15:
        lam4 = lo
        value = float(_holevo_batch(_family(eps_x, eps_z, np.array([lam4])))[0])
        return value, _problem_at(eps_x, eps_z, lam4)

    grid = np.linspace(lo, hi, 1000)
    values = _holevo_batch(_family(eps_x, eps_z, grid))
    best = int(np.argmax(values))

    # Golden-section refinement around the best grid point.
    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, len(grid) - 1)]
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc = float(_holevo_batch(_family(eps_x, eps_z, np.array([c])))[0])
    fd = float(_holevo_batch(_family(eps_x, eps_z, np.array([d])))[0])
    while b - a > 1e-10:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = float(_holevo_batch(_family(eps_x, eps_z, np.array([c])))[0])
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = float(_holevo_batch(_family(eps_x, eps_z, np.array([d])))[0])
    lam4 = 0.5 * (a + b)
    candidates = np.array([grid[best], lam4])
    cand_values = _holevo_batch(_family(eps_x, eps_z, candidates))
    pick = int(np.argmax(cand_values))
    return float(cand_values[pick]), _problem_at(eps_x, eps_z, float(candidates[pick]))


def _problem_at(eps_x: float, eps_z: float, lam4: float) -> HolevoProblem:
    lam = _family(eps_x, eps_z, np.array([lam4]))[0]
    lam = lam / lam.sum()
    return HolevoProblem(lambdas=tuple(float(v) for v in lam))
