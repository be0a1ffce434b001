import numpy as np
import pytest

from hamkrylov import (
    CsrMatrix,
    InnerProduct,
    LinearHamiltonianSystem,
    NotPositiveDefiniteError,
    SeriousBreakdownError,
    arnoldi,
    assemble_reduced_hamiltonian,
    block_j_basis,
    gen_random,
    j_apply,
    j_orthogonality_error,
    small_j,
    symplectic_lanczos,
)


def relation_residual(a_dense, basis):
    lhs = a_dense @ basis.vectors
    rhs = basis.vectors @ basis.projected
    if basis.residual_vector is not None:
        rhs = rhs.copy()
        rhs[:, -1] += basis.residual_coeff * basis.residual_vector
    return np.max(np.abs(lhs - rhs))


def sparse_random_system(m, seed, density=0.2):
    """Canonical system whose weight is stored in CSR with a sparse pattern."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((2 * m, 2 * m))
    raw[rng.random((2 * m, 2 * m)) > density] = 0.0
    sym = 0.5 * (raw + raw.T) + 2.0 * np.eye(2 * m)
    return LinearHamiltonianSystem(CsrMatrix.from_dense(sym)), rng.standard_normal(2 * m)


class TestArnoldi:
    def test_two_step_rotation_by_hand(self):
        # A = J, b = e1: v1 = e1, A v1 = -e2 gives h11 = 0, h21 = 1 and
        # v2 = -e2; then A v2 = -e1 gives h12 = -1 and an exact breakdown.
        system = LinearHamiltonianSystem(np.eye(2))
        basis = arnoldi(system.apply_a, np.array([1.0, 0.0]), 2)
        assert np.array_equal(basis.vectors[:, 0], [1.0, 0.0])
        assert np.array_equal(basis.vectors[:, 1], [0.0, -1.0])
        assert np.array_equal(basis.projected, [[0.0, -1.0], [1.0, 0.0]])
        assert basis.breakdown == 2
        a = system.materialize_a()
        assert relation_residual(a, basis) == 0.0

    def test_eigenvector_start_breaks_down_immediately(self):
        # H = [[0, -1], [-1, 0]] makes A e1 = -e1, an invariant direction.
        system = LinearHamiltonianSystem(np.array([[0.0, -1.0], [-1.0, 0.0]]))
        basis = arnoldi(system.apply_a, np.array([1.0, 0.0]), 3)
        assert basis.breakdown == 1
        assert basis.num_vectors == 1
        assert np.array_equal(basis.projected, [[-1.0]])

    def test_identity_weight_equals_euclidean(self):
        system, y0 = gen_random("random_full", 6, 0)
        plain = arnoldi(system.apply_a, y0, 5)
        weighted = arnoldi(
            system.apply_a, y0, 5, InnerProduct.weighted_by(np.eye(12))
        )
        assert np.array_equal(plain.vectors, weighted.vectors)
        assert np.array_equal(plain.projected, weighted.projected)

    def test_relation_residual_sparse(self):
        system, y0 = sparse_random_system(50, 1)
        basis = arnoldi(system.apply_a, y0, 8)
        a = system.materialize_a()
        scale = np.linalg.norm(a, 2) * np.linalg.norm(basis.vectors, 2)
        assert relation_residual(a, basis) <= 1e-11 * scale

    def test_orthonormality(self):
        system, y0 = gen_random("random_full", 20, 2)
        basis = arnoldi(system.apply_a, y0, 8)
        gram = basis.vectors.T @ basis.vectors
        assert np.max(np.abs(gram - np.eye(8))) <= 1e-10

    def test_weighted_orthonormality_and_residual(self):
        system, y0 = gen_random("random_full", 20, 3)
        basis = arnoldi(system.apply_a, y0, 8, InnerProduct.weighted_by(system.weight))
        w = system.weight_dense()
        gram = basis.vectors.T @ (w @ basis.vectors)
        assert np.max(np.abs(gram - np.eye(8))) <= 1e-10
        assert basis.residual_vector is not None
        against_next = basis.vectors.T @ (w @ basis.residual_vector)
        assert np.max(np.abs(against_next)) <= 1e-10

    def test_weighted_projected_matrix_is_skew(self):
        system, y0 = gen_random("random_full", 25, 4)
        basis = arnoldi(system.apply_a, y0, 6, InnerProduct.weighted_by(system.weight))
        hn = basis.projected
        assert np.max(np.abs(hn + hn.T)) <= 1e-10 * np.max(np.abs(hn))

    @pytest.mark.parametrize("m", [2, 4, 6])
    def test_span_property(self, m):
        system, y0 = gen_random("random_full", m, 5 + m)
        n = min(2 * m, 6)
        basis = arnoldi(system.apply_a, y0, n)
        v = basis.vectors
        power = y0.copy()
        for _ in range(v.shape[1]):
            resid = power - v @ (v.T @ power)
            assert np.linalg.norm(resid) <= 1e-9 * np.linalg.norm(power)
            power = system.apply_a(power)

    def test_determinism(self):
        system, y0 = gen_random("random_full", 12, 6)
        first = arnoldi(system.apply_a, y0, 6)
        second = arnoldi(system.apply_a, y0, 6)
        assert np.array_equal(first.vectors, second.vectors)
        assert np.array_equal(first.projected, second.projected)

    def test_zero_start_rejected(self):
        system, _ = gen_random("random_full", 3, 7)
        with pytest.raises(ValueError):
            arnoldi(system.apply_a, np.zeros(6), 2)

    def test_indefinite_weight_rejected(self):
        weight = np.diag([1.0, 1.0, -1.0, 1.0])
        op = lambda x: x  # any operator; the failure comes from the weight
        with pytest.raises(NotPositiveDefiniteError):
            arnoldi(op, np.array([0.0, 0.0, 1.0, 0.0]), 2, InnerProduct.weighted_by(weight))


class TestSymplecticLanczos:
    def test_single_pair_by_hand(self):
        # H = I, y0 = e1: the pair is (e1, e2) and the projected matrix is
        # the 2x2 canonical J.
        system = LinearHamiltonianSystem(np.eye(2))
        basis = symplectic_lanczos(system.apply_a, np.array([1.0, 0.0]), 1)
        assert np.array_equal(basis.vectors, np.eye(2))
        assert np.array_equal(basis.projected, [[0.0, 1.0], [-1.0, 0.0]])
        assert basis.residual_vector is None

    def test_j_orthogonality_invariant(self):
        system, y0 = gen_random("random_full", 25, 8)
        basis = symplectic_lanczos(system.apply_a, y0, 5)
        assert j_orthogonality_error(basis.vectors) <= 1e-8

    def test_recurrence_matches_projected_formula(self):
        system, y0 = gen_random("random_full", 25, 9)
        basis = symplectic_lanczos(system.apply_a, y0, 5)
        assembled = assemble_reduced_hamiltonian(system.apply_a, basis.vectors)
        assert np.max(np.abs(basis.projected - assembled)) <= 1e-8

    def test_projected_matrix_is_hamiltonian(self):
        system, y0 = gen_random("random_full", 20, 10)
        basis = symplectic_lanczos(system.apply_a, y0, 4)
        jinv_h = -small_j(4) @ basis.projected
        assert np.max(np.abs(jinv_h - jinv_h.T)) <= 1e-8

    def test_relation_residual(self):
        system, y0 = gen_random("random_full", 25, 11)
        basis = symplectic_lanczos(system.apply_a, y0, 5)
        a = system.materialize_a()
        scale = np.linalg.norm(a, 2) * np.linalg.norm(basis.vectors, 2)
        assert relation_residual(a, basis) <= 1e-10 * scale

    def test_residual_is_j_orthogonal_to_basis(self):
        system, y0 = gen_random("random_full", 25, 12)
        basis = symplectic_lanczos(system.apply_a, y0, 5)
        assert basis.residual_vector is not None
        pairings = basis.vectors.T @ j_apply(basis.residual_vector)
        assert np.max(np.abs(pairings)) <= 1e-10

    def test_serious_breakdown_detected(self):
        # The indefinite weight makes omega(v, A v) = -v^T H v vanish for the
        # chosen start without the candidate vanishing.
        weight = np.diag([1.0, -1.0, 1.0, -1.0])
        system = LinearHamiltonianSystem(weight)
        y0 = np.array([1.0, 1.0, 0.0, 0.0]) / np.sqrt(2.0)
        with pytest.raises(SeriousBreakdownError):
            symplectic_lanczos(system.apply_a, y0, 2)

    def test_unpaired_direction_becomes_residual(self):
        # The degenerate spectrum of the 3D Maxwell surrogate exhausts the
        # pairable Krylov space early; the dropped direction must show up as
        # the residual so the Lanczos relation still holds.
        from hamkrylov import maxwell3d

        system, u0 = maxwell3d(4, 1)
        basis = symplectic_lanczos(system.apply_a, u0, 8)
        assert basis.breakdown == 3
        assert basis.num_vectors == 6
        assert basis.residual_vector is not None
        assert basis.residual_coeff > 1.0
        a = system.materialize_a()
        scale = np.linalg.norm(a, 2) * np.linalg.norm(basis.vectors, 2)
        assert relation_residual(a, basis) <= 1e-10 * scale
        # the residual direction is J-orthogonal to the kept basis
        pairings = basis.vectors.T @ j_apply(basis.residual_vector)
        assert np.max(np.abs(pairings)) <= 1e-10

    def test_full_space_exhaustion_is_benign(self):
        system, y0 = gen_random("random_full", 4, 13)
        basis = symplectic_lanczos(system.apply_a, y0, 4)
        assert basis.num_vectors == 8
        assert basis.breakdown is None
        assert basis.residual_vector is None

    def test_determinism(self):
        system, y0 = gen_random("random_full", 15, 14)
        first = symplectic_lanczos(system.apply_a, y0, 4)
        second = symplectic_lanczos(system.apply_a, y0, 4)
        assert np.array_equal(first.vectors, second.vectors)


class TestBlockJBasis:
    def test_canonical_spans(self):
        y0 = np.array([1.0, 0.0, 0.0, 1.0])
        system = LinearHamiltonianSystem(np.eye(4))
        basis = block_j_basis(system.apply_a, y0, 1, stabilized=False)
        assert basis.half_block.shape == (2, 2)
        assert np.max(np.abs(np.abs(basis.half_block) - np.eye(2))) <= 1e-15
        assert basis.num_vectors == 4

    def test_duplicate_halves_collapse_rank(self):
        y0 = np.array([1.0, 0.0, 1.0, 0.0])
        system = LinearHamiltonianSystem(np.eye(4))
        basis = block_j_basis(system.apply_a, y0, 1, stabilized=False)
        assert basis.half_block.shape == (2, 1)
        assert np.max(np.abs(np.abs(basis.half_block[:, 0]) - [1.0, 0.0])) <= 1e-15

    def test_stabilized_j_orthogonality(self):
        system, y0 = gen_random("random_full", 40, 15)
        basis = block_j_basis(system.apply_a, y0, 6)
        assert j_orthogonality_error(basis.vectors) <= 1e-12

    def test_raw_mode_also_j_orthogonal(self):
        system, y0 = gen_random("random_full", 10, 16)
        basis = block_j_basis(system.apply_a, y0, 3, stabilized=False)
        assert j_orthogonality_error(basis.vectors) <= 1e-12

    def test_projected_matrix_is_hamiltonian(self):
        system, y0 = gen_random("random_full", 12, 17)
        basis = block_j_basis(system.apply_a, y0, 3)
        k = basis.num_vectors // 2
        jinv_h = -small_j(k) @ basis.projected
        assert np.max(np.abs(jinv_h - jinv_h.T)) <= 1e-12

    def test_zero_start_rejected(self):
        system, _ = gen_random("random_full", 3, 18)
        with pytest.raises(ValueError):
            block_j_basis(system.apply_a, np.zeros(6), 2)


def brute_force_weighted_basis(a_dense, w_dense, start, num_vectors):
    """Independent construction: modified Gram-Schmidt in the W inner
    product applied to the Krylov sequence, two passes."""
    cols = []
    v = start.astype(float).copy()
    for _ in range(num_vectors):
        if cols:
            v = a_dense @ cols[-1]
        for _ in range(2):
            for u in cols:
                v = v - (u @ (w_dense @ v)) * u
        v = v / np.sqrt(v @ (w_dense @ v))
        cols.append(v)
    return np.column_stack(cols)


class TestAgainstBruteForce:
    def test_weighted_arnoldi_matches_gram_schmidt_oracle(self):
        system, y0 = gen_random("random_full", 10, 40)
        a = system.materialize_a()
        w = system.weight_dense()
        oracle = brute_force_weighted_basis(a, w, y0, 6)
        basis = arnoldi(system.apply_a, y0, 6, InnerProduct.weighted_by(system.weight))
        assert np.max(np.abs(basis.vectors - oracle)) <= 1e-10

    def test_euclidean_arnoldi_matches_gram_schmidt_oracle(self):
        system, y0 = gen_random("random_full", 10, 41)
        a = system.materialize_a()
        oracle = brute_force_weighted_basis(a, np.eye(20), y0, 6)
        basis = arnoldi(system.apply_a, y0, 6)
        assert np.max(np.abs(basis.vectors - oracle)) <= 1e-10

    def test_lanczos_projected_block_pattern(self):
        # In the [v | w] ordering the projected matrix is [[0, T], [N, 0]]
        # with N diagonal and T tridiagonal.
        system, y0 = gen_random("random_full", 20, 42)
        n = 5
        basis = symplectic_lanczos(system.apply_a, y0, n)
        h = basis.projected
        scale = np.max(np.abs(h))
        assert np.max(np.abs(h[:n, :n])) <= 1e-12 * scale
        assert np.max(np.abs(h[n:, n:])) <= 1e-12 * scale
        lower = h[n:, :n]
        assert np.max(np.abs(lower - np.diag(np.diag(lower)))) <= 1e-12 * scale
        upper = h[:n, n:]
        off_band = upper - np.triu(np.tril(upper, 1), -1)
        assert np.max(np.abs(off_band)) <= 1e-12 * scale


class TestAcrossSeeds:
    @pytest.mark.parametrize("seed", range(5))
    def test_structural_invariants_random_seeds(self, seed):
        system, y0 = gen_random("random_full", 20, 100 + seed)
        a = system.materialize_a()
        scale = np.linalg.norm(a, 2)

        eu = arnoldi(system.apply_a, y0, 8)
        assert relation_residual(a, eu) <= 1e-10 * scale
        wa = arnoldi(system.apply_a, y0, 8, InnerProduct.weighted_by(system.weight))
        gram = wa.vectors.T @ (system.weight_dense() @ wa.vectors)
        assert np.max(np.abs(gram - np.eye(8))) <= 1e-10
        sl = symplectic_lanczos(system.apply_a, y0, 4)
        assert j_orthogonality_error(sl.vectors) <= 1e-8
        bj = block_j_basis(system.apply_a, y0, 4)
        assert j_orthogonality_error(bj.vectors) <= 1e-12
