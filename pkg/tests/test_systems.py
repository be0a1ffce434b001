import numpy as np
import pytest
import scipy.linalg

from hamkrylov import (
    DimensionMismatch,
    FirstIntegralFamily,
    LinearHamiltonianSystem,
    NotPositiveDefiniteError,
    energy_bound,
    gen_random,
    poisson_bracket,
    run_method,
    structure_flags,
)


class TestConstruction:
    def test_asymmetric_weight_rejected(self):
        bad = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(ValueError):
            LinearHamiltonianSystem(bad)

    def test_nonfinite_weight_rejected(self):
        with pytest.raises(ValueError):
            LinearHamiltonianSystem(np.array([[np.inf, 0.0], [0.0, 1.0]]))

    def test_odd_dimension_rejected_for_canonical(self):
        with pytest.raises(DimensionMismatch):
            LinearHamiltonianSystem(np.eye(3))

    def test_validation_escape_hatch(self):
        bad = np.array([[1.0, 2.0], [0.0, 1.0]])
        system = LinearHamiltonianSystem(bad, validate=False)
        assert system.dim == 2

    def test_general_skew_must_be_skew(self):
        with pytest.raises(ValueError):
            LinearHamiltonianSystem(np.eye(2), skew=np.eye(2))

    def test_a_application_matches_materialized(self):
        system, y0 = gen_random("random_full", 5, 0)
        assert np.max(np.abs(system.apply_a(y0) - system.materialize_a() @ y0)) <= 1e-14


class TestEnergy:
    def test_identity_weight(self):
        system = LinearHamiltonianSystem(np.eye(2))
        assert system.energy(np.array([3.0, 4.0])) == 12.5

    def test_zero_state(self):
        system = LinearHamiltonianSystem(np.eye(4))
        assert system.energy(np.zeros(4)) == 0.0

    def test_constant_along_exact_flow(self):
        system, y0 = gen_random("random_full", 3, 7)
        a = system.materialize_a()
        e0 = system.energy(y0)
        for t in np.linspace(0.1, 2.0, 20):
            yt = scipy.linalg.expm(t * a) @ y0
            assert abs(system.energy(yt) - e0) <= 1e-12 * (1.0 + abs(e0))

    def test_dimension_mismatch(self):
        system = LinearHamiltonianSystem(np.eye(2))
        with pytest.raises(DimensionMismatch):
            system.energy(np.ones(3))


class TestFirstIntegrals:
    def test_k0_is_energy(self):
        system, y0 = gen_random("random_full", 4, 1)
        assert system.first_integral(0, y0) == system.energy(y0)

    def test_hand_value_m1(self):
        # H = I so A = J and A^2 = -I; the k = 1 integral at (1, 0) is
        # 0.5 * y^T (-I) y = -1/2.
        system = LinearHamiltonianSystem(np.eye(2))
        assert system.first_integral(1, np.array([1.0, 0.0])) == -0.5

    def test_constant_along_exact_flow(self):
        system, y0 = gen_random("random_full", 3, 2)
        a = system.materialize_a()
        family = FirstIntegralFamily(system, 2)
        ref = family.values(y0)
        for t in np.linspace(0.2, 2.0, 10):
            yt = scipy.linalg.expm(t * a) @ y0
            drift = np.abs(family.values(yt) - ref)
            assert np.all(drift <= 1e-11 * (1.0 + np.abs(ref)))

    def test_matches_dense_matrix_formula(self):
        # Independent path: materialize W (JH)^{2k} and evaluate the
        # quadratic form directly.
        system, y0 = gen_random("random_full", 4, 26)
        a = system.materialize_a()
        w = system.weight_dense()
        for k in range(4):
            dense_val = 0.5 * y0 @ (w @ np.linalg.matrix_power(a, 2 * k) @ y0)
            assert system.first_integral(k, y0) == pytest.approx(
                dense_val, rel=1e-12, abs=1e-14
            )

    def test_cap_on_k(self):
        system = LinearHamiltonianSystem(np.eye(2))
        with pytest.raises(ValueError):
            system.first_integral(3, np.ones(2))
        with pytest.raises(ValueError):
            system.first_integral(-1, np.ones(2))


class TestPoissonBracket:
    def test_equal_indices_vanish(self):
        system, y0 = gen_random("random_full", 2, 3)
        scale = (y0 @ y0) * np.linalg.norm(system.materialize_a(), 2)
        assert abs(poisson_bracket(system, 1, 1, y0)) <= 1e-12 * scale

    def test_zero_state(self):
        system, _ = gen_random("random_full", 2, 4)
        assert poisson_bracket(system, 0, 1, np.zeros(4)) == 0.0

    def test_involution_m2(self):
        system, _ = gen_random("random_full", 2, 5)
        rng = np.random.default_rng(6)
        norm_a = np.linalg.norm(system.materialize_a(), 2)
        for _ in range(25):
            y = rng.standard_normal(4)
            scale = (y @ y) * norm_a**3
            assert abs(poisson_bracket(system, 0, 1, y)) <= 1e-12 * scale


class TestInvolutionAndIndependence:
    @pytest.mark.parametrize("m", [2, 3, 4])
    def test_involution_all_pairs(self, m):
        system, _ = gen_random("random_full", m, 10 + m)
        rng = np.random.default_rng(m)
        norm_a = np.linalg.norm(system.materialize_a(), 2)
        for _ in range(100):
            y = rng.standard_normal(2 * m)
            for k in range(m):
                for p in range(m):
                    scale = (y @ y) * norm_a ** (2 * (k + p) + 1)
                    assert abs(poisson_bracket(system, k, p, y)) <= 1e-11 * scale

    @pytest.mark.parametrize("m", [2, 3, 4])
    def test_gradients_functionally_independent(self, m):
        system, _ = gen_random("random_full", m, 20 + m)
        family = FirstIntegralFamily(system, m - 1)
        rng = np.random.default_rng(m + 1)
        for _ in range(5):
            y = rng.standard_normal(2 * m)
            assert family.rank_of_gradients(y) == m


class TestStructureFlags:
    def test_identity_weight_gives_j(self):
        system = LinearHamiltonianSystem(np.eye(4))
        assert structure_flags(system).as_tuple() == (True, True, True)

    def test_diagonal_weight_breaks_commutation(self):
        # A = J diag(2, 1) = [[0, 1], [-2, 0]] is Hamiltonian but not skew,
        # and J A != A J by direct 2x2 products.
        system = LinearHamiltonianSystem(np.diag([2.0, 1.0]))
        assert structure_flags(system).as_tuple() == (True, False, False)

    def test_constructed_systems_always_hamiltonian(self):
        for family in ("random_full", "random_blockdiag_spd", "random_skew_hamiltonian"):
            system, _ = gen_random(family, 4, 9)
            assert structure_flags(system).is_hamiltonian

    def test_skew_family_biconditional(self):
        skew_sys, _ = gen_random("random_skew_hamiltonian", 5, 12)
        flags = structure_flags(skew_sys)
        assert flags.is_skew and flags.commutes_with_j
        spd_sys, _ = gen_random("random_blockdiag_spd", 5, 12)
        flags = structure_flags(spd_sys)
        assert not flags.is_skew and not flags.commutes_with_j


class TestEnergyBound:
    def test_identity_weight(self):
        system = LinearHamiltonianSystem(np.eye(2))
        assert energy_bound(system, np.array([1.0, 0.0])) == pytest.approx(0.5, rel=1e-6)

    def test_scaled_identity(self):
        system = LinearHamiltonianSystem(2.0 * np.eye(4))
        y0 = np.ones(4) / 2.0
        assert energy_bound(system, y0) == pytest.approx(1.0, rel=1e-6)

    def test_warns_without_commutation(self):
        system, y0 = gen_random("random_blockdiag_spd", 3, 1)
        with pytest.warns(UserWarning):
            energy_bound(system, y0)

    def test_bounds_apm_energies(self):
        system, y0 = gen_random("random_skew_hamiltonian", 4, 2)
        bound = energy_bound(system, y0)
        record = run_method(system, y0, "APM", 4, 100.0, 0.02)
        assert np.max(record.energy) <= bound + 1e-10


class TestSpdCheck:
    def test_indefinite_weight_rejected_for_weighted_inner(self):
        system = LinearHamiltonianSystem(np.diag([1.0, -1.0]))
        with pytest.raises(NotPositiveDefiniteError):
            system.require_spd_weight()

    def test_spd_weight_accepted(self):
        system, _ = gen_random("random_full", 3, 3)
        system.require_spd_weight()
