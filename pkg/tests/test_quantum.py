"""Tests for the quantum state algebra: preparation, Pauli action,
measurement statistics, Bell machinery, teleportation, density matrices."""

import numpy as np
import pytest

from qsdcsim.quantum import (
    Basis,
    DensityMatrix,
    KETS,
    LOST_PHOTON,
    LostPhotonError,
    PAULI_MATRICES,
    PauliOp,
    PhotonState,
    apply_pauli,
    bell_measure,
    bell_project_pair,
    binary_entropy,
    density_of,
    make_bell,
    measure,
    measure_qubit,
    partial_trace,
    prepare,
    state_vector,
    teleport,
    von_neumann_entropy,
)

RNG = np.random.default_rng(20240817)


def random_density(dim: int, rng) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


class TestPrepareAndMeasure:
    """Born-rule behaviour of symbolic photons."""

    def test_same_basis_round_trip_deterministic(self):
        rng = np.random.default_rng(0)
        for basis in Basis:
            for bit in (0, 1):
                for _ in range(20):
                    assert measure(prepare(basis, bit), basis, rng) == bit

    def test_cross_basis_is_fair_coin(self):
        # |<+|0>|^2 = 1/2: Z-prepared photon measured in X.
        rng = np.random.default_rng(1)
        n = 100_000
        outcomes = [measure(prepare(Basis.Z, 0), Basis.X, rng) for _ in range(n)]
        assert np.mean(outcomes) == pytest.approx(0.5, abs=0.01)

    def test_y_basis_measurement_of_x_state_random(self):
        # |<+i|+>|^2 = 1/2: the Y basis learns nothing about X/Z states.
        rng = np.random.default_rng(2)
        n = 100_000
        outcomes = [measure(prepare(Basis.X, 0), Basis.Y, rng) for _ in range(n)]
        assert np.mean(outcomes) == pytest.approx(0.5, abs=0.01)

    def test_lost_photon_gives_no_click(self):
        rng = np.random.default_rng(3)
        for basis in Basis:
            assert measure(LOST_PHOTON, basis, rng) is None

    def test_vector_photon_measurement_matches_symbolic(self):
        rng = np.random.default_rng(4)
        explicit = PhotonState(vector=KETS[Basis.X][1])
        assert measure(explicit, Basis.X, rng) == 1

    def test_prepare_rejects_bad_bit(self):
        with pytest.raises(ValueError):
            prepare(Basis.Z, 2)

    def test_photon_needs_exactly_one_representation(self):
        with pytest.raises(ValueError):
            PhotonState(basis=Basis.Z, bit=0, vector=KETS[Basis.Z][0])
        with pytest.raises(ValueError):
            PhotonState()


class TestPauli:
    """Symbolic Pauli table against explicit 2x2 matrix arithmetic."""

    @pytest.mark.parametrize("op", list(PauliOp))
    @pytest.mark.parametrize("basis", list(Basis))
    @pytest.mark.parametrize("bit", [0, 1])
    def test_symbolic_matches_matrix_oracle(self, op, basis, bit):
        # Oracle: multiply the operator into the explicit eigenvector and
        # compare density matrices (phase-free).
        symbolic = apply_pauli(op, prepare(basis, bit))
        vec = PAULI_MATRICES[op] @ KETS[basis][bit]
        oracle = np.outer(vec, vec.conj())
        assert np.allclose(density_of(symbolic), oracle, atol=1e-12)

    def test_identity_is_identity(self):
        p = prepare(Basis.Z, 0)
        assert apply_pauli(PauliOp.I, p) == p

    def test_iy_flips_z_eigenstate(self):
        # iY |0> = -|1>, equal to |1> up to global phase.
        out = apply_pauli(PauliOp.IY, prepare(Basis.Z, 0))
        assert np.allclose(density_of(out), density_of(prepare(Basis.Z, 1)))

    def test_iy_flips_x_eigenstate(self):
        # Basis transparency: the same operation flips X eigenstates too.
        out = apply_pauli(PauliOp.IY, prepare(Basis.X, 0))
        assert np.allclose(density_of(out), density_of(prepare(Basis.X, 1)))

    @pytest.mark.parametrize("op", [PauliOp.I, PauliOp.X, PauliOp.Z, PauliOp.IY])
    def test_pauli_involution(self, op):
        # Applying twice is measurement-indistinguishable from the input.
        for basis in Basis:
            for bit in (0, 1):
                start = prepare(basis, bit)
                twice = apply_pauli(op, apply_pauli(op, start))
                assert np.allclose(density_of(twice), density_of(start), atol=1e-12)

    def test_iy_flips_bit_in_data_bases(self):
        rng = np.random.default_rng(5)
        for basis in (Basis.Z, Basis.X):
            for bit in (0, 1):
                flipped = apply_pauli(PauliOp.IY, prepare(basis, bit))
                assert measure(flipped, basis, rng) == 1 - bit

    def test_pauli_on_lost_photon_raises(self):
        with pytest.raises(LostPhotonError):
            apply_pauli(PauliOp.IY, LOST_PHOTON)


class TestBell:
    def test_index_1_is_standard_pair(self):
        assert np.allclose(make_bell(1), np.array([1, 0, 0, 1]) / np.sqrt(2))

    def test_orthonormal(self):
        for i in range(1, 5):
            for j in range(1, 5):
                ip = np.vdot(make_bell(i), make_bell(j))
                assert ip == pytest.approx(1.0 if i == j else 0.0, abs=1e-12)

    def test_bad_index_rejected(self):
        with pytest.raises(ValueError):
            make_bell(0)

    def test_eigenstate_measurement_deterministic(self):
        rng = np.random.default_rng(6)
        for i in range(1, 5):
            for _ in range(10):
                assert bell_measure(make_bell(i), rng) == i

    def test_product_state_splits_between_phi_outcomes(self):
        # Oracle: |00> expanded in the Bell basis has weight 1/2 on each of
        # the two Phi states and none on the Psi states.
        joint = np.kron(KETS[Basis.Z][0], KETS[Basis.Z][0])
        weights = [abs(np.vdot(make_bell(i), joint)) ** 2 for i in range(1, 5)]
        assert weights == pytest.approx([0.5, 0.5, 0.0, 0.0], abs=1e-12)
        rng = np.random.default_rng(7)
        outcomes = np.array([bell_measure(joint, rng) for _ in range(40_000)])
        assert np.mean(outcomes == 1) == pytest.approx(0.5, abs=0.01)
        assert np.mean(outcomes == 2) == pytest.approx(0.5, abs=0.01)
        assert set(outcomes) == {1, 2}

    def test_completeness_on_random_states(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            psi = rng.normal(size=4) + 1j * rng.normal(size=4)
            psi = psi / np.linalg.norm(psi)
            total = sum(abs(np.vdot(make_bell(i), psi)) ** 2 for i in range(1, 5))
            assert total == pytest.approx(1.0, abs=1e-10)


class TestTeleport:
    def test_identity_branch_preserves_z_eigenstate(self):
        rng = np.random.default_rng(9)
        seen = False
        for _ in range(100):
            outcome, photon = teleport(make_bell(1), prepare(Basis.Z, 0), rng)
            if outcome == 1:
                seen = True
                assert measure(photon, Basis.Z, rng) == 0
        assert seen

    def test_all_branches_reproduce_payload(self):
        # 8-dimensional oracle: evaluate each Bell branch explicitly and
        # check the corrected retained state equals the payload.
        from qsdcsim.quantum import TELEPORT_CORRECTIONS

        payload = prepare(Basis.X, 1)
        joint = np.kron(payload.to_vector(), make_bell(1))
        probs, branches = bell_project_pair(joint)
        assert probs == pytest.approx([0.25] * 4, abs=1e-12)
        for i in range(4):
            corrected = PAULI_MATRICES[TELEPORT_CORRECTIONS[i + 1]] @ branches[i]
            dm = np.outer(corrected, corrected.conj())
            assert np.allclose(dm, density_of(payload), atol=1e-10)

    def test_retained_measures_payload_bit_every_branch(self):
        rng = np.random.default_rng(10)
        for _ in range(200):
            _, photon = teleport(make_bell(1), prepare(Basis.X, 1), rng)
            assert measure(photon, Basis.X, rng) == 1

    def test_outcomes_uniform(self):
        rng = np.random.default_rng(11)
        n = 30_000
        counts = np.zeros(5)
        for _ in range(n):
            outcome, _ = teleport(make_bell(1), prepare(Basis.Z, 0), rng)
            counts[outcome] += 1
        for i in range(1, 5):
            assert counts[i] / n == pytest.approx(0.25, abs=0.01)

    def test_lost_payload_rejected(self):
        rng = np.random.default_rng(12)
        with pytest.raises(LostPhotonError):
            teleport(make_bell(1), LOST_PHOTON, rng)


class TestMeasureQubit:
    def test_pair_collapse_is_correlated(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            outcome, rest = measure_qubit(make_bell(1), 0, Basis.Z, rng)
            assert np.allclose(
                np.outer(rest, rest.conj()),
                density_of(prepare(Basis.Z, outcome)),
                atol=1e-12,
            )


class TestDensityMatrix:
    def test_valid_construction(self):
        dm = DensityMatrix(np.eye(2) / 2)
        assert dm.dim == 2

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.array([[0.5, 0.5], [0.0, 0.5]]))

    def test_rejects_bad_trace(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.eye(2))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.diag([1.5, -0.5]))

    def test_rejects_wrong_dimension(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.eye(3) / 3)

    def test_state_vector_normalization_enforced(self):
        with pytest.raises(ValueError):
            state_vector([1.0, 1.0])
        with pytest.raises(ValueError):
            state_vector([1.0, 0.0, 0.0])


class TestPartialTrace:
    def test_bell_pair_reduces_to_maximally_mixed(self):
        rho = DensityMatrix.from_vector(make_bell(1))
        reduced = partial_trace(rho, "second")
        assert np.allclose(reduced.matrix, np.eye(2) / 2, atol=1e-12)

    def test_product_state_factorizes(self):
        rng = np.random.default_rng(14)
        rho_a = random_density(2, rng)
        rho_b = random_density(2, rng)
        joint = DensityMatrix(np.kron(rho_a, rho_b))
        assert np.allclose(partial_trace(joint, "second").matrix, rho_a, atol=1e-10)
        assert np.allclose(partial_trace(joint, "first").matrix, rho_b, atol=1e-10)

    def test_trace_and_positivity_preserved_on_random_inputs(self):
        rng = np.random.default_rng(15)
        for _ in range(100):
            rho = DensityMatrix(random_density(4, rng))
            for side in ("first", "second"):
                reduced = partial_trace(rho, side)
                assert np.trace(reduced.matrix).real == pytest.approx(1.0, abs=1e-10)
                assert np.linalg.eigvalsh(reduced.matrix).min() >= -1e-10

    def test_rejects_wrong_dimension(self):
        with pytest.raises(ValueError):
            partial_trace(DensityMatrix(np.eye(2) / 2), "first")
        with pytest.raises(ValueError):
            partial_trace(DensityMatrix(np.eye(4) / 4), "third")


class TestEntropies:
    def test_pure_state_has_zero_entropy(self):
        s = von_neumann_entropy(DensityMatrix.from_photon(prepare(Basis.X, 0)))
        assert s == pytest.approx(0.0, abs=1e-12)

    def test_maximally_mixed_qubit(self):
        assert von_neumann_entropy(np.eye(2) / 2) == pytest.approx(1.0, abs=1e-12)

    def test_maximally_mixed_two_qubits(self):
        assert von_neumann_entropy(np.diag([0.25] * 4)) == pytest.approx(2.0, abs=1e-12)

    def test_entropy_bounds_on_random_states(self):
        rng = np.random.default_rng(16)
        for dim in (2, 4):
            for _ in range(50):
                s = von_neumann_entropy(random_density(dim, rng))
                assert -1e-10 <= s <= np.log2(dim) + 1e-10

    def test_binary_entropy_maximum_and_endpoints(self):
        assert binary_entropy(0.5) == pytest.approx(1.0, abs=1e-15)
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_binary_entropy_pinned_value(self):
        # Frozen from a 50-digit evaluation of -p log2 p - (1-p) log2 (1-p).
        assert binary_entropy(0.11) == pytest.approx(0.499915958164528, abs=1e-12)

    def test_binary_entropy_domain(self):
        with pytest.raises(ValueError):
            binary_entropy(-0.1)
        with pytest.raises(ValueError):
            binary_entropy(1.1)
