"""Property suite: every structural and conservation claim of the library,
checked at desk scale with measured magnitudes and a machine-readable verdict.

The report is fully deterministic in the seed (no timestamps, no wall clock),
so identical invocations produce byte-identical JSON.
"""

from __future__ import annotations

import json

import numpy as np
import scipy.linalg

from .bases import (
    arnoldi,
    assemble_reduced_hamiltonian,
    block_j_basis,
    j_orthogonality_error,
    small_j,
    symplectic_lanczos,
)
from .errors import NotPositiveDefiniteError
from .linalg import (
    CayleyPropagator,
    InnerProduct,
    cayley_step,
    j_apply,
    qr_factor,
)
from .problems import (
    FAMILY_BLOCKDIAG_SPD,
    FAMILY_FULL,
    FAMILY_SEPARABLE,
    FAMILY_SKEW_HAMILTONIAN,
    gen_random,
    maxwell1d,
    maxwell1d_matrices,
    maxwell3d,
    wave2d,
)
from .projections import build_projection, run_method
from .systems import (
    FirstIntegralFamily,
    LinearHamiltonianSystem,
    energy_bound,
    poisson_bracket,
    structure_flags,
)


def _f(x) -> float:
    return float(x)


class _Suite:
    def __init__(self, seed: int):
        self.seed = int(seed)
        self.properties = []

    def record(self, prop_id: str, measured: float, tolerance: float, note: str = ""):
        entry = {
            "id": prop_id,
            "measured": _f(measured),
            "tolerance": _f(tolerance),
            "passed": bool(_f(measured) <= _f(tolerance)),
        }
        if note:
            entry["note"] = note
        self.properties.append(entry)

    def report(self, corrupt: bool) -> dict:
        failed = [p["id"] for p in self.properties if not p["passed"]]
        return {
            "seed": self.seed,
            "corrupt": bool(corrupt),
            "passed": not failed,
            "failed": failed,
            "properties": self.properties,
        }


def _rel_residual(a_dense, basis) -> float:
    """Arnoldi-relation residual of a basis, relative to ||A|| ||basis||."""
    v = basis.vectors
    lhs = a_dense @ v
    rhs = v @ basis.projected
    if basis.residual_vector is not None:
        rhs = rhs.copy()
        rhs[:, -1] += basis.residual_coeff * basis.residual_vector
    scale = np.linalg.norm(a_dense, 2) * max(np.linalg.norm(v, 2), 1.0)
    return float(np.max(np.abs(lhs - rhs))) / max(scale, 1e-300)


def invariant_suite(seed: int = 0, corrupt: bool = False) -> dict:
    """Run every property check and return the verdict report."""
    suite = _Suite(seed)
    rng = np.random.default_rng(seed)

    # -- core kernels --------------------------------------------------------
    x = rng.standard_normal(14)
    suite.record(
        "core/j_involution",
        np.max(np.abs(j_apply(j_apply(x)) + x)),
        0.0,
        "J(Jx) = -x holds exactly",
    )
    worst = 0.0
    for _ in range(20):
        v = rng.standard_normal(10)
        worst = max(worst, abs(v @ j_apply(v)) / (v @ v))
    suite.record("core/symplectic_self_pairing", worst, 1e-14)

    mat = rng.standard_normal((30, 12))
    mat[:, -1] *= 1e-8  # push conditioning toward 1e8
    q, r, _ = qr_factor(mat)
    suite.record(
        "core/qr_orthonormality",
        np.max(np.abs(q.T @ q - np.eye(q.shape[1]))),
        1e-12,
    )
    suite.record("core/qr_reconstruction", np.max(np.abs(q @ r - mat)), 1e-12)

    system, y0 = gen_random(FAMILY_FULL, 5, seed)
    a = system.materialize_a()
    y = y0.copy()
    worst = 0.0
    for _ in range(50):
        y_next = cayley_step(a, 0.05, y)
        worst = max(
            worst,
            abs(system.energy(y_next) - system.energy(y))
            / (1.0 + abs(system.energy(y))),
        )
        y = y_next
    suite.record("core/cayley_energy_per_step", worst, 1e-11)

    small = rng.standard_normal((4, 4))
    y = rng.standard_normal(4)
    worst = 0.0
    for _ in range(20):
        y_cay = cayley_step(small, 0.1, y)
        y_mid = y.copy()
        for _ in range(200):  # fixed-point solve of the implicit midpoint rule
            y_mid = y + 0.05 * (small @ (y + y_mid))
        worst = max(worst, np.max(np.abs(y_cay - y_mid)))
        y = y_cay
    suite.record("core/cayley_midpoint_agreement", worst, 1e-12)

    # -- system model --------------------------------------------------------
    weight_defect = 0.0
    for family, m in (
        (FAMILY_BLOCKDIAG_SPD, 6),
        (FAMILY_SKEW_HAMILTONIAN, 6),
        (FAMILY_FULL, 6),
        (FAMILY_SEPARABLE, 6),
    ):
        sys_i, _ = gen_random(family, m, seed)
        w = sys_i.weight_dense()
        scale = max(np.max(np.abs(w)), 1e-300)
        weight_defect = max(weight_defect, np.max(np.abs(w - w.T)) / scale)
        if not structure_flags(sys_i).is_hamiltonian:
            weight_defect = max(weight_defect, 1.0)
    if corrupt:
        bad = rng.standard_normal((6, 6))  # deliberately asymmetric weight
        crooked = LinearHamiltonianSystem(bad, validate=False)
        w = crooked.weight_dense()
        weight_defect = max(
            weight_defect, np.max(np.abs(w - w.T)) / max(np.max(np.abs(w)), 1e-300)
        )
    suite.record("model/weight_symmetry", weight_defect, 1e-12)

    worst = 0.0
    for m in (2, 3, 4):
        sys_i, _ = gen_random(FAMILY_FULL, m, seed + m)
        norm_a = np.linalg.norm(sys_i.materialize_a(), 2)
        for _ in range(100):
            y = rng.standard_normal(2 * m)
            for k in range(m):
                for p in range(m):
                    denom = (y @ y) * norm_a ** (2 * (k + p) + 1)
                    worst = max(
                        worst, abs(poisson_bracket(sys_i, k, p, y)) / denom
                    )
    suite.record("model/involution", worst, 1e-11)

    deficiency = 0
    for m in (2, 3, 4):
        sys_i, _ = gen_random(FAMILY_FULL, m, seed + 10 + m)
        family_k = FirstIntegralFamily(sys_i, m - 1)
        for _ in range(5):
            y = rng.standard_normal(2 * m)
            deficiency = max(deficiency, m - family_k.rank_of_gradients(y))
    suite.record("model/gradient_independence", deficiency, 0.0)

    sys3, y3 = gen_random(FAMILY_FULL, 3, seed + 1)
    a3 = sys3.materialize_a()
    family3 = FirstIntegralFamily(sys3, 2)
    ref_vals = family3.values(y3)
    worst = 0.0
    for t in np.linspace(0.1, 2.0, 20):
        yt = scipy.linalg.expm(t * a3) @ y3
        drift = np.abs(family3.values(yt) - ref_vals) / (1.0 + np.abs(ref_vals))
        worst = max(worst, float(np.max(drift)))
    suite.record("model/conservation_exact_flow", worst, 1e-11)

    skew_sys, _ = gen_random(FAMILY_SKEW_HAMILTONIAN, 5, seed)
    spd_sys, _ = gen_random(FAMILY_BLOCKDIAG_SPD, 5, seed)
    flags_skew = structure_flags(skew_sys)
    flags_spd = structure_flags(spd_sys)
    bicond_ok = (
        flags_skew.is_skew
        and flags_skew.commutes_with_j
        and not flags_spd.is_skew
        and not flags_spd.commutes_with_j
    )
    suite.record("model/skew_biconditional", 0.0 if bicond_ok else 1.0, 0.0)

    # -- bases ---------------------------------------------------------------
    worst_rel = worst_orth = worst_worth = worst_skew = 0.0
    worst_jorth = worst_match = worst_block = worst_ham = 0.0
    for s in range(3):
        sys_i, y0_i = gen_random(FAMILY_FULL, 15, seed + s)
        a_i = sys_i.materialize_a()
        b_eu = arnoldi(sys_i.apply_a, y0_i, 6)
        worst_rel = max(worst_rel, _rel_residual(a_i, b_eu))
        worst_orth = max(
            worst_orth,
            np.max(np.abs(b_eu.vectors.T @ b_eu.vectors - np.eye(6))),
        )
        b_w = arnoldi(
            sys_i.apply_a, y0_i, 6, InnerProduct.weighted_by(sys_i.weight)
        )
        worst_rel = max(worst_rel, _rel_residual(a_i, b_w))
        gram = b_w.vectors.T @ (sys_i.weight_dense() @ b_w.vectors)
        worst_worth = max(worst_worth, np.max(np.abs(gram - np.eye(6))))
        hn = b_w.projected
        worst_skew = max(
            worst_skew, np.max(np.abs(hn + hn.T)) / max(np.max(np.abs(hn)), 1e-300)
        )
        b_sl = symplectic_lanczos(sys_i.apply_a, y0_i, 3)
        worst_rel = max(worst_rel, _rel_residual(a_i, b_sl))
        worst_jorth = max(worst_jorth, j_orthogonality_error(b_sl.vectors))
        assembled = assemble_reduced_hamiltonian(sys_i.apply_a, b_sl.vectors)
        worst_match = max(worst_match, np.max(np.abs(b_sl.projected - assembled)))
        jinv_h = -small_j(3) @ b_sl.projected
        worst_ham = max(worst_ham, np.max(np.abs(jinv_h - jinv_h.T)))
        b_bl = block_j_basis(sys_i.apply_a, y0_i, 3)
        worst_block = max(worst_block, j_orthogonality_error(b_bl.vectors))
    suite.record("bases/arnoldi_relation", worst_rel, 1e-10)
    suite.record("bases/arnoldi_orthonormality", worst_orth, 1e-10)
    suite.record("bases/weighted_orthonormality", worst_worth, 1e-10)
    suite.record("bases/weighted_projected_skew", worst_skew, 1e-10)
    suite.record("bases/lanczos_j_orthogonality", worst_jorth, 1e-8)
    suite.record("bases/lanczos_matches_projection", worst_match, 1e-8)
    suite.record("bases/lanczos_projected_hamiltonian", worst_ham, 1e-8)
    suite.record("bases/blockj_j_orthogonality", worst_block, 1e-12)

    sys_d, y0_d = gen_random(FAMILY_FULL, 10, seed + 7)
    first = arnoldi(sys_d.apply_a, y0_d, 5)
    second = arnoldi(sys_d.apply_a, y0_d, 5)
    identical = np.array_equal(first.vectors, second.vectors) and np.array_equal(
        first.projected, second.projected
    )
    suite.record("bases/determinism", 0.0 if identical else 1.0, 0.0)

    sys_s, y0_s = gen_random(FAMILY_FULL, 5, seed + 8)
    b_span = arnoldi(sys_s.apply_a, y0_s, 6)
    v = b_span.vectors
    worst = 0.0
    power = y0_s.copy()
    for _ in range(v.shape[1]):
        resid = power - v @ (v.T @ power)
        worst = max(worst, np.linalg.norm(resid) / np.linalg.norm(power))
        power = sys_s.apply_a(power)
    suite.record("bases/arnoldi_span", worst, 1e-9)

    # -- projection integrators ----------------------------------------------
    worst_energy = 0.0
    worst_bj_energy = worst_bj_defect = 0.0
    for m, dims in ((50, (4,)), (100, (4, 8, 16))):
        sys_i, y0_i = gen_random(FAMILY_FULL, m, seed + m)
        for dim in dims:
            for restart in (None, 0.4):
                rec = run_method(sys_i, y0_i, "SLPM", dim, 20.0, 0.004, restart=restart)
                worst_energy = max(worst_energy, rec.max_abs_energy_error())
                rec = run_method(sys_i, y0_i, "BJPM", dim, 20.0, 0.004, restart=restart)
                worst_bj_energy = max(worst_bj_energy, rec.max_abs_energy_error())
                worst_bj_defect = max(worst_bj_defect, rec.meta["projection_defect"])
    suite.record("proj/slpm_energy", worst_energy, 1e-10)
    suite.record("proj/bjpm_energy", worst_bj_energy, 1e-10)
    suite.record("proj/bjpm_defect", worst_bj_defect, 1e-10)

    sys_i, y0_i = gen_random(FAMILY_FULL, 50, seed + 2)
    rec = run_method(sys_i, y0_i, "APMH", 4, 20.0, 0.004, integrals=(0, 1))
    worst = max(
        rec.max_integral_drift(k) / (1.0 + abs(rec.integrals[k][0])) for k in (0, 1)
    )
    suite.record("proj/apmh_integrals", worst, 1e-11)

    sys_i, y0_i = gen_random(FAMILY_SKEW_HAMILTONIAN, 50, seed + 3)
    rec = run_method(sys_i, y0_i, "APM", 4, 20.0, 0.004, integrals=(0, 1))
    bound = energy_bound(sys_i, y0_i, seed=seed)
    suite.record(
        "proj/apm_energy_bound",
        float(np.max(rec.energy)) - bound,
        1e-10,
        "max sampled energy minus the a-priori bound",
    )
    worst = max(
        rec.max_integral_drift(k) / (1.0 + abs(rec.integrals[k][0])) for k in (0, 1)
    )
    suite.record("proj/apm_modified_integrals", worst, 1e-11)

    sys_i, y0_i = gen_random(FAMILY_FULL, 20, seed + 4)
    rec_plain = run_method(sys_i, y0_i, "SLPM", 4, 2.0, 0.004)
    rec_restart = run_method(sys_i, y0_i, "SLPM", 4, 2.0, 0.004, restart=2.0)
    same = np.array_equal(rec_plain.energy, rec_restart.energy) and np.array_equal(
        rec_plain.states, rec_restart.states
    )
    suite.record("proj/restart_consistency", 0.0 if same else 1.0, 0.0)

    sys_c, y0_c = gen_random(FAMILY_FULL, 10, seed + 5)
    prop = CayleyPropagator(sys_c.materialize_a(), 0.004)
    y_ref = y0_c.copy()
    for _ in range(500):
        y_ref = prop.step(y_ref)
    final_errors = {}
    for method in ("APMH", "SLPM", "BJPM"):
        errs = []
        for dim in (4, 8, 12, 16, 20):
            rec = run_method(sys_c, y0_c, method, dim, 2.0, 0.004)
            errs.append(float(np.linalg.norm(rec.final_state - y_ref)))
        final_errors[method] = errs
    worst_final = max(errs[-1] for errs in final_errors.values())
    monotone_ok = all(
        all(e[i + 1] <= max(e[i], 1e-13) for i in range(len(e) - 1))
        for e in final_errors.values()
    )
    suite.record("proj/convergence_full_dim", worst_final, 1e-12)
    suite.record("proj/convergence_monotone", 0.0 if monotone_ok else 1.0, 0.0)

    from .projections import model_reduction_equivalence

    h11 = gen_random(FAMILY_BLOCKDIAG_SPD, 10, seed + 6)[0].weight_dense()[:10, :10]
    p0 = np.random.default_rng(seed + 6).standard_normal(10)
    eq = model_reduction_equivalence(h11, p0, 2)
    suite.record(
        "proj/model_reduction_equivalence",
        max(eq.basis_deviation, eq.trajectory_deviation),
        eq.tolerance,
    )

    # -- problem generators ----------------------------------------------------
    worst = -np.inf
    for n_grid in (4, 8):
        sys_w, _ = wave2d(n_grid, seed)
        inner = (n_grid - 1) ** 2
        neg_g = sys_w.weight_dense()[:inner, :inner]  # the -G block, SPD
        eigs = np.linalg.eigvalsh(neg_g)
        worst = max(worst, float(-eigs.min()))
    suite.record(
        "problems/wave2d_laplacian_definite",
        worst,
        0.0,
        "smallest eigenvalue of -G must stay positive",
    )

    skew_m, weight_m = maxwell1d_matrices(8)
    s_dense = skew_m.to_dense()
    suite.record(
        "problems/maxwell1d_skew", np.max(np.abs(s_dense + s_dense.T)), 0.0
    )
    sys_m, u0_m = maxwell1d(8)
    b_m = arnoldi(sys_m.apply_a, u0_m, 4, InnerProduct.weighted_by(sys_m.weight))
    hn = b_m.projected
    suite.record(
        "problems/maxwell1d_weighted_skew",
        np.max(np.abs(hn + hn.T)) / max(np.max(np.abs(hn)), 1e-300),
        1e-10,
    )

    sys_3d, u0_3d = maxwell3d(4, seed)
    flags = structure_flags(sys_3d)
    rejected = False
    try:
        build_projection(sys_3d, u0_3d, "APMH", 4)
    except NotPositiveDefiniteError:
        rejected = True
    ok = flags.is_skew and flags.is_hamiltonian and flags.commutes_with_j and rejected
    suite.record(
        "problems/maxwell3d_structure",
        0.0 if ok else 1.0,
        0.0,
        "A skew and Hamiltonian; weighted Arnoldi rejected on indefinite weight",
    )

    sys_a, y_a = gen_random(FAMILY_BLOCKDIAG_SPD, 8, seed)
    sys_b, y_b = gen_random(FAMILY_BLOCKDIAG_SPD, 8, seed)
    same = np.array_equal(sys_a.weight_dense(), sys_b.weight_dense()) and np.array_equal(
        y_a, y_b
    )
    w_a = wave2d(5, seed)[1]
    w_b = wave2d(5, seed)[1]
    same = same and np.array_equal(w_a, w_b)
    suite.record("problems/generator_determinism", 0.0 if same else 1.0, 0.0)

    return suite.report(corrupt)


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
