import json
import math

import numpy as np
import pytest

from qobjectivity import quantum_state as qs
from qobjectivity import tensor_core as tc
from qobjectivity.errors import (
    BasisNotOrthonormal,
    DegenerateBranches,
    NormalizationError,
    NotHermitian,
    NotPSD,
    NotUnitTrace,
    PartitionError,
    ShapeError,
)

SEED = 40817


def rand_ket(rng, dims):
    d = math.prod(dims)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return qs.Ket(v / np.linalg.norm(v), dims)


def rand_density(rng, dims):
    d = math.prod(dims)
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = a @ a.conj().T
    return qs.DensityMatrix(m / np.trace(m).real, dims)


def rand_unitary(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def ghz_ket(alpha=0.6, beta=0.8):
    amps = np.zeros(8, dtype=complex)
    amps[0], amps[7] = alpha, beta
    return qs.Ket(amps, (2, 2, 2))


class TestKet:
    def test_accepts_unit_vector(self):
        k = qs.Ket(np.array([0.6, 0.8j]), (2,))
        assert k.dim == 2
        assert k.dims == (2,)

    def test_rejects_unnormalized(self):
        with pytest.raises(NormalizationError) as err:
            qs.Ket(np.array([1.0, 1.0]), (2,))
        assert err.value.violation == pytest.approx(np.sqrt(2) - 1)

    def test_rejects_dims_mismatch(self):
        with pytest.raises(ShapeError):
            qs.Ket(np.array([1.0, 0.0]), (3,))
        with pytest.raises(ShapeError):
            qs.Ket(np.array([1.0, 0.0]), (2, 0))

    def test_overlap(self):
        a = qs.Ket(np.array([1.0, 0.0]), (2,))
        b = qs.Ket(np.array([0.6, 0.8]), (2,))
        assert a.overlap(b) == pytest.approx(0.6)
        assert b.overlap(b) == pytest.approx(1.0)
        with pytest.raises(ShapeError):
            a.overlap(qs.Ket(np.eye(4)[0], (4,)))

    def test_tolerance_boundary(self):
        v = np.array([1.0, 0.0]) * (1 + 5e-11)
        qs.Ket(v, (2,))  # within NORM_ATOL


class TestDensityMatrix:
    def test_accepts_valid(self):
        rho = qs.DensityMatrix(np.eye(2) / 2, (2,))
        assert rho.dim == 2

    def test_rejects_non_hermitian(self):
        m = np.array([[0.5, 0.3], [0.0, 0.5]])
        with pytest.raises(NotHermitian):
            qs.DensityMatrix(m, (2,))

    def test_rejects_bad_trace(self):
        with pytest.raises(NotUnitTrace) as err:
            qs.DensityMatrix(np.eye(2), (2,))
        assert err.value.violation == pytest.approx(1.0)

    def test_rejects_shape_mismatch(self):
        with pytest.raises(ShapeError):
            qs.DensityMatrix(np.eye(4) / 4, (2,))

    def test_negative_eigenvalue_allowed_without_validation(self):
        # construction checks Hermiticity and trace only; see validate_density
        qs.DensityMatrix(np.diag([1.5, -0.5]), (2,))


class TestBranchBasis:
    def test_properties(self):
        b = qs.BranchBasis(0, [qs.Ket(np.eye(3)[i], (3,)) for i in range(2)])
        assert b.size == 2 and b.dim == 3
        assert np.array_equal(b.matrix(), np.eye(3)[:, :2])

    def test_rejects_dependent_kets(self):
        k = qs.Ket(np.array([0.6, 0.8]), (2,))
        with pytest.raises(DegenerateBranches):
            qs.BranchBasis(0, [k, qs.Ket(np.array([0.6, 0.8]) * np.exp(0.3j), (2,))])

    def test_rejects_empty_and_mixed_dims(self):
        with pytest.raises(ShapeError):
            qs.BranchBasis(0, [])
        with pytest.raises(ShapeError):
            qs.BranchBasis(0, [qs.Ket(np.eye(2)[0], (2,)), qs.Ket(np.eye(3)[0], (3,))])

    def test_nonorthogonal_allowed(self):
        plus = qs.Ket(np.array([1.0, 1.0]) / np.sqrt(2), (2,))
        b = qs.BranchBasis(1, [qs.Ket(np.eye(2)[0], (2,)), plus])
        g = qs.gram(b)
        assert g[0, 1] == pytest.approx(1 / np.sqrt(2))


class TestReductions:
    def test_density_from_ket_branch_structure(self):
        rho = qs.density_from_ket(ghz_ket()).matrix
        expected = np.zeros((8, 8))
        expected[0, 0], expected[7, 7] = 0.36, 0.64
        expected[0, 7] = expected[7, 0] = 0.48
        assert np.allclose(rho, expected, atol=1e-15)

    def test_ket_and_matrix_paths_agree(self):
        rng = np.random.default_rng(SEED)
        psi = rand_ket(rng, (2, 3, 2))
        rho = qs.density_from_ket(psi)
        for keep in ((0,), (1,), (2,), (0, 2), (1, 2)):
            fast = qs.reduced_density(psi, keep)
            slow = qs.reduced_density(rho, keep)
            assert fast.dims == slow.dims
            assert np.allclose(fast.matrix, slow.matrix, atol=1e-12)

    def test_keep_all_returns_state(self):
        rng = np.random.default_rng(SEED + 1)
        rho = rand_density(rng, (2, 2))
        out = qs.reduced_density(rho, (0, 1))
        assert np.allclose(out.matrix, rho.matrix, atol=1e-15)

    def test_bad_keep(self):
        rho = qs.DensityMatrix(np.eye(4) / 4, (2, 2))
        with pytest.raises(ShapeError):
            qs.reduced_density(rho, ())
        with pytest.raises(ShapeError):
            qs.reduced_density(rho, (2,))


class TestEntropies:
    def test_pure_state_zero(self):
        rng = np.random.default_rng(SEED + 2)
        rho = qs.density_from_ket(rand_ket(rng, (4,)))
        assert qs.von_neumann_entropy(rho) <= 1e-12

    def test_maximally_mixed(self):
        rho = qs.DensityMatrix(np.eye(2) / 2, (2,))
        assert qs.von_neumann_entropy(rho) == pytest.approx(np.log(2), abs=1e-12)

    def test_known_two_level_value(self):
        rho = qs.DensityMatrix(np.diag([0.25, 0.75]), (2,))
        expected = -(0.25 * np.log(0.25) + 0.75 * np.log(0.75))
        assert qs.von_neumann_entropy(rho) == pytest.approx(expected, abs=1e-12)

    def test_unitary_invariance(self):
        rng = np.random.default_rng(SEED + 3)
        rho = rand_density(rng, (4,))
        u = rand_unitary(rng, 4)
        rotated = qs.DensityMatrix(u @ rho.matrix @ u.conj().T, (4,))
        assert qs.von_neumann_entropy(rotated) == pytest.approx(
            qs.von_neumann_entropy(rho), abs=1e-10
        )

    def test_subadditivity(self):
        rng = np.random.default_rng(SEED + 4)
        for _ in range(5):
            rho = rand_density(rng, (2, 3))
            h_ab = qs.von_neumann_entropy(rho)
            h_a = qs.von_neumann_entropy(qs.reduced_density(rho, (0,)))
            h_b = qs.von_neumann_entropy(qs.reduced_density(rho, (1,)))
            assert h_ab <= h_a + h_b + 1e-10

    def test_shannon(self):
        assert qs.shannon_entropy([0.5, 0.5]) == pytest.approx(np.log(2), abs=1e-12)
        assert qs.shannon_entropy([1.0, 0.0]) == 0.0
        assert qs.shannon_entropy(np.full(5, 0.2)) == pytest.approx(np.log(5), abs=1e-12)
        with pytest.raises(NormalizationError):
            qs.shannon_entropy([0.5, 0.6])
        with pytest.raises(NotPSD):
            qs.shannon_entropy([1.1, -0.1])

    def test_mixture_entropy_bounded_by_weights(self):
        # H(sum p_i |d_i><d_i|) <= H(p), equality exactly for orthonormal kets
        rng = np.random.default_rng(SEED + 5)
        p = np.array([0.2, 0.3, 0.5])
        ortho = [qs.Ket(np.eye(4)[i], (4,)) for i in range(3)]
        mix = sum(w * np.outer(k.amplitudes, k.amplitudes.conj()) for w, k in zip(p, ortho))
        h = qs.von_neumann_entropy(qs.DensityMatrix(mix, (4,)))
        assert h == pytest.approx(qs.shannon_entropy(p), abs=1e-12)
        skew = [rand_ket(rng, (4,)) for _ in range(3)]
        mix = sum(w * np.outer(k.amplitudes, k.amplitudes.conj()) for w, k in zip(p, skew))
        h = qs.von_neumann_entropy(qs.DensityMatrix(mix, (4,)))
        assert h < qs.shannon_entropy(p) + 1e-12


class TestBasisEntropy:
    def test_computational_basis_reads_diagonal(self):
        rho = qs.DensityMatrix(np.diag([0.25, 0.75]), (2,))
        basis = qs.BranchBasis(0, [qs.Ket(np.eye(2)[i], (2,)) for i in range(2)])
        expected = -(0.25 * np.log(0.25) + 0.75 * np.log(0.75))
        assert qs.basis_entropy(rho, basis) == pytest.approx(expected, abs=1e-12)

    def test_rotated_basis_on_pure_state(self):
        rho = qs.DensityMatrix(np.diag([1.0, 0.0]), (2,))
        h = np.array([[1.0, 1.0], [1.0, -1.0]]) / np.sqrt(2)
        basis = qs.BranchBasis(0, [qs.Ket(h[:, i], (2,)) for i in range(2)])
        assert qs.basis_entropy(rho, basis) == pytest.approx(np.log(2), abs=1e-12)

    def test_invariant_under_joint_rotation(self):
        rng = np.random.default_rng(SEED + 6)
        rho = rand_density(rng, (3,))
        u = rand_unitary(rng, 3)
        basis = qs.BranchBasis(0, [qs.Ket(np.eye(3)[i], (3,)) for i in range(3)])
        rotated_rho = qs.DensityMatrix(u @ rho.matrix @ u.conj().T, (3,))
        rotated_basis = qs.BranchBasis(0, [qs.Ket(u[:, i], (3,)) for i in range(3)])
        assert qs.basis_entropy(rotated_rho, rotated_basis) == pytest.approx(
            qs.basis_entropy(rho, basis), abs=1e-10
        )

    def test_rejects_incomplete_or_skew(self):
        rho = qs.DensityMatrix(np.eye(2) / 2, (2,))
        one = qs.BranchBasis(0, [qs.Ket(np.eye(2)[0], (2,))])
        with pytest.raises(ShapeError):
            qs.basis_entropy(rho, one)
        plus = qs.Ket(np.array([1.0, 1.0]) / np.sqrt(2), (2,))
        skew = qs.BranchBasis(0, [qs.Ket(np.eye(2)[0], (2,)), plus])
        with pytest.raises(BasisNotOrthonormal) as err:
            qs.basis_entropy(rho, skew)
        assert err.value.violation == pytest.approx(1 / np.sqrt(2))


class TestMutualInformation:
    def test_product_state_zero(self):
        rng = np.random.default_rng(SEED + 7)
        a, b = rand_density(rng, (2,)), rand_density(rng, (3,))
        rho = qs.DensityMatrix(tc.kron(a.matrix, b.matrix), (2, 3))
        assert abs(qs.mutual_information(rho, (0,))) <= 1e-10

    def test_bell_pair(self):
        amps = np.zeros(4, dtype=complex)
        amps[0] = amps[3] = 1 / np.sqrt(2)
        rho = qs.density_from_ket(qs.Ket(amps, (2, 2)))
        assert qs.mutual_information(rho, (0,)) == pytest.approx(2 * np.log(2), abs=1e-10)

    def test_branch_pair_reduction(self):
        # tracing one leg of an entangled triple leaves classical correlations
        rho_sd = qs.reduced_density(ghz_ket(), (0, 1))
        expected = -(0.36 * np.log(0.36) + 0.64 * np.log(0.64))
        assert qs.mutual_information(rho_sd, (0,)) == pytest.approx(expected, abs=1e-10)

    def test_pure_tripartite_cut(self):
        # pure state: I(A:BC) = 2 H(A)
        psi = ghz_ket()
        rho = qs.density_from_ket(psi)
        h_s = qs.von_neumann_entropy(qs.reduced_density(psi, (0,)))
        assert qs.mutual_information(rho, (0,)) == pytest.approx(2 * h_s, abs=1e-10)
        assert qs.mutual_information(rho, (1, 2)) == pytest.approx(2 * h_s, abs=1e-10)

    def test_invalid_cuts(self):
        rho = qs.DensityMatrix(np.eye(4) / 4, (2, 2))
        for cut in ((), (0, 1), (0, 0), (2,), (-1,)):
            with pytest.raises(PartitionError):
                qs.mutual_information(rho, cut)


class TestValidateDensity:
    def test_accepts_positive(self):
        rng = np.random.default_rng(SEED + 8)
        rho = rand_density(rng, (4,))
        out = qs.validate_density(rho.matrix, (4,))
        assert np.allclose(out.matrix, rho.matrix)

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(NotPSD) as err:
            qs.validate_density(np.diag([1.5, -0.5]), (2,))
        assert err.value.violation == pytest.approx(0.5, abs=1e-12)

    def test_rejects_overweight_coherence(self):
        # branch coherence above sqrt(p1 p2) makes the matrix indefinite
        m = np.zeros((8, 8))
        m[0, 0], m[7, 7] = 0.36, 0.64
        m[0, 7] = m[7, 0] = 0.49
        with pytest.raises(NotPSD):
            qs.validate_density(m, (2, 2, 2))
        m[0, 7] = m[7, 0] = 0.48
        qs.validate_density(m, (2, 2, 2))


class TestJson:
    def test_ket_round_trip_bit_exact(self):
        rng = np.random.default_rng(SEED + 9)
        for dims in ((2,), (2, 3), (2, 2, 2)):
            k = rand_ket(rng, dims)
            blob = json.dumps(qs.ket_to_json(k))
            back = qs.ket_from_json(json.loads(blob))
            assert back.dims == k.dims
            assert np.array_equal(back.amplitudes, k.amplitudes)

    def test_density_round_trip_bit_exact(self):
        rng = np.random.default_rng(SEED + 10)
        rho = rand_density(rng, (2, 2))
        blob = json.dumps(qs.density_to_json(rho))
        back = qs.density_from_json(json.loads(blob))
        assert back.dims == rho.dims
        assert np.array_equal(back.matrix, rho.matrix)

    def test_basis_round_trip(self):
        plus = qs.Ket(np.array([1.0, 1.0]) / np.sqrt(2), (2,))
        b = qs.BranchBasis(2, [qs.Ket(np.eye(2)[0], (2,)), plus])
        back = qs.basis_from_json(json.loads(json.dumps(qs.basis_to_json(b))))
        assert back.label == 2 and back.size == 2
        assert np.array_equal(back.matrix(), b.matrix())

    def test_density_from_json_validates(self):
        obj = {
            "dims": [2],
            "matrix": [[[1.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-0.5, 0.0]]],
        }
        with pytest.raises(NotPSD):
            qs.density_from_json(obj)

    def test_malformed_payloads(self):
        with pytest.raises(ShapeError):
            qs.ket_from_json({"dims": [2]})
        with pytest.raises(ShapeError):
            qs.ket_from_json({"dims": [2], "amplitudes": [1.0, 0.0]})
        with pytest.raises(ShapeError):
            qs.density_from_json({"dims": [2], "matrix": [[1.0, 0.0]]})
        with pytest.raises(ShapeError):
            qs.basis_from_json({"kets": []})
