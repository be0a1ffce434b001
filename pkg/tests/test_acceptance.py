"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines.
"""

import time

import numpy as np
import scipy.linalg

from hamkrylov import (
    CayleyPropagator,
    InnerProduct,
    NotPositiveDefiniteError,
    arnoldi,
    block_j_basis,
    build_projection,
    energy_bound,
    gen_random,
    j_orthogonality_error,
    maxwell1d,
    maxwell3d,
    model_reduction_equivalence,
    run_method,
    symplectic_lanczos,
    wave2d,
)
from hamkrylov.cli import main as cli_main


def report(name: str, passed: bool, detail: str) -> None:
    state = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {name}: {state} ({detail})")
    assert passed, f"{name}: {detail}"


def test_criterion_1_oracle_equivalence():
    start = time.perf_counter()
    worst_dev = 0.0
    ratios = []
    for m in (1, 2, 3, 4):
        system, y0 = gen_random("random_full", m, 100 + m)
        a = system.materialize_a()
        devs = []
        for h in (0.004, 0.002):
            prop = CayleyPropagator(a, h)
            exact_step = scipy.linalg.expm(h * a)
            y_c, y_e = y0.copy(), y0.copy()
            dev = 0.0
            for _ in range(int(round(2.0 / h))):
                y_c = prop.step(y_c)
                y_e = exact_step @ y_e
                dev = max(dev, float(np.linalg.norm(y_c - y_e)))
            devs.append(dev)
        worst_dev = max(worst_dev, devs[0])
        ratios.append(devs[0] / devs[1])
    elapsed = time.perf_counter() - start
    ok = (
        worst_dev <= 1e-5
        and all(3.2 <= r <= 4.8 for r in ratios)
        and elapsed < 5.0
    )
    report(
        "1-oracle-equivalence",
        ok,
        f"max dev {worst_dev:.3e}, ratios {[f'{r:.2f}' for r in ratios]}, "
        f"{elapsed:.1f}s",
    )


def test_criterion_2_slpm_energy_preservation():
    start = time.perf_counter()
    system, y0 = gen_random("random_full", 100, 7)
    record = run_method(system, y0, "SLPM", 4, 200.0, 0.004, restart=0.4)
    elapsed = time.perf_counter() - start
    err = record.max_abs_energy_error()
    report(
        "2-slpm-energy",
        err <= 1e-9 and elapsed < 60.0,
        f"max |energy error| {err:.3e}, {elapsed:.1f}s",
    )


def test_criterion_3_bjpm_energy_preservation():
    system, y0 = gen_random("random_full", 100, 7)
    record = run_method(system, y0, "BJPM", 4, 200.0, 0.004, restart=0.4)
    err = record.max_abs_energy_error()
    defect = record.meta["projection_defect"]
    report(
        "3-bjpm-energy",
        defect <= 1e-10 and err <= 1e-9,
        f"defect {defect:.3e}, max |energy error| {err:.3e}",
    )


def test_criterion_4_apmh_first_integrals():
    system, y0 = gen_random("random_full", 100, 13)
    record = run_method(system, y0, "APMH", 4, 20.0, 0.004, integrals=(0, 1))
    drifts = {}
    ok = True
    for k in (0, 1):
        drift = record.max_integral_drift(k)
        tol = 1e-11 * (1.0 + abs(record.integrals[k][0]))
        drifts[k] = (drift, tol)
        ok = ok and drift <= tol
    report(
        "4-apmh-integrals",
        ok,
        ", ".join(f"H_{k} drift {d:.3e} (tol {t:.3e})" for k, (d, t) in drifts.items()),
    )


def test_criterion_5_apm_bounded_energy_and_modified_integrals():
    system, y0 = gen_random("random_skew_hamiltonian", 100, 17)
    record = run_method(system, y0, "APM", 4, 200.0, 0.004, integrals=(0, 1))
    bound = energy_bound(system, y0, seed=17)
    max_energy = float(np.max(record.energy))
    ok = max_energy <= bound + 1e-10
    drifts = []
    for k in (0, 1):
        drift = record.max_integral_drift(k)
        tol = 1e-11 * (1.0 + abs(record.integrals[k][0]))
        drifts.append(drift)
        ok = ok and drift <= tol
    report(
        "5-apm-skew-bound",
        ok,
        f"max energy {max_energy:.6f} vs bound {bound:.6f}; modified-integral "
        f"drifts {drifts[0]:.2e}, {drifts[1]:.2e}",
    )


def test_criterion_6_apm_energy_drift_negative_result():
    system, y0 = gen_random("random_blockdiag_spd", 100, 11)
    apm = run_method(system, y0, "APM", 4, 200.0, 0.004)
    slpm = run_method(system, y0, "SLPM", 4, 200.0, 0.004)
    apm_err = apm.max_abs_energy_error()
    slpm_err = slpm.max_abs_energy_error()
    ok = apm_err > 1e-3 and apm_err > 100.0 * slpm_err
    report(
        "6-apm-drift",
        ok,
        f"APM drift {apm_err:.3e} vs SLPM {slpm_err:.3e}",
    )


def test_criterion_7_model_reduction_equivalence():
    worst_basis = worst_traj = 0.0
    for m in (5, 10, 20):
        block_sys, _ = gen_random("random_blockdiag_spd", m, 40 + m)
        h11 = block_sys.weight_dense()[:m, :m]
        rng = np.random.default_rng(m)
        p0 = rng.standard_normal(m)
        for n in (2, 3):
            eq = model_reduction_equivalence(h11, p0, n, horizon=2.0, step=0.004)
            worst_basis = max(worst_basis, eq.basis_deviation)
            worst_traj = max(worst_traj, eq.trajectory_deviation)
    ok = worst_basis <= 1e-10 and worst_traj <= 1e-10
    report(
        "7-apm-model-reduction",
        ok,
        f"max basis dev {worst_basis:.3e}, max trajectory dev {worst_traj:.3e}",
    )


def test_criterion_8_convergence_in_krylov_dimension():
    system, y0 = gen_random("random_blockdiag_spd", 10, 8)
    prop = CayleyPropagator(system.materialize_a(), 0.004)
    y_ref = y0.copy()
    for _ in range(500):
        y_ref = prop.step(y_ref)
    ok = True
    finals = {}
    for method in ("APMH", "SLPM", "BJPM"):
        errs = []
        for dim in range(2, 21, 2):
            record = run_method(system, y0, method, dim, 2.0, 0.004)
            errs.append(float(np.linalg.norm(record.final_state - y_ref)))
        monotone = all(
            errs[i + 1] <= max(errs[i], 1e-13) for i in range(len(errs) - 1)
        )
        finals[method] = errs[-1]
        ok = ok and monotone and errs[-1] <= 1e-12
    report(
        "8-convergence",
        ok,
        "final errors "
        + ", ".join(f"{m}={e:.2e}" for m, e in finals.items()),
    )


def test_criterion_9_pde_suite():
    start = time.perf_counter()
    details = []
    ok = True

    wave_sys, wave_u0 = wave2d(8, 3)
    for method in ("SLPM", "BJPM", "APMH"):
        record = run_method(wave_sys, wave_u0, method, 4, 20.0, 0.004, restart=0.4)
        err = record.max_abs_energy_error()
        ok = ok and err <= 1e-9
        details.append(f"wave2d {method} {err:.2e}")

    mx_sys, mx_u0 = maxwell1d(32)
    record = run_method(mx_sys, mx_u0, "APMH", 4, 2.0, 0.004, integrals=(0, 1))
    for k in (0, 1):
        drift = record.max_integral_drift(k)
        ok = ok and drift <= 1e-10
        details.append(f"maxwell1d H_{k} {drift:.2e}")

    m3_sys, m3_u0 = maxwell3d(4, 1)
    record = run_method(m3_sys, m3_u0, "APM", 4, 20.0, 0.004, integrals=(0, 1))
    for k in (0, 1):
        drift = record.max_integral_drift(k)
        ok = ok and drift <= 1e-10
        details.append(f"maxwell3d H_{k} {drift:.2e}")
    rejected = False
    try:
        build_projection(m3_sys, m3_u0, "APMH", 4)
    except NotPositiveDefiniteError:
        rejected = True
    ok = ok and rejected
    details.append(f"apmh rejected {rejected}")

    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 120.0
    report("9-pde-suite", ok, "; ".join(details) + f"; {elapsed:.1f}s")


def test_criterion_10_structural_invariants_across_seeds():
    worst = {"relation": 0.0, "weighted": 0.0, "lanczos": 0.0, "blockj": 0.0, "skew": 0.0}
    for seed in range(20):
        m = 20 if seed % 2 == 0 else 50
        system, y0 = gen_random("random_full", m, 200 + seed)
        a = system.materialize_a()
        scale = np.linalg.norm(a, 2)

        basis = arnoldi(system.apply_a, y0, 8)
        lhs = a @ basis.vectors
        rhs = basis.vectors @ basis.projected
        if basis.residual_vector is not None:
            rhs = rhs.copy()
            rhs[:, -1] += basis.residual_coeff * basis.residual_vector
        worst["relation"] = max(
            worst["relation"], float(np.max(np.abs(lhs - rhs))) / scale
        )

        wbasis = arnoldi(system.apply_a, y0, 8, InnerProduct.weighted_by(system.weight))
        gram = wbasis.vectors.T @ (system.weight_dense() @ wbasis.vectors)
        worst["weighted"] = max(worst["weighted"], float(np.max(np.abs(gram - np.eye(8)))))
        hn = wbasis.projected
        worst["skew"] = max(
            worst["skew"], float(np.max(np.abs(hn + hn.T)) / np.max(np.abs(hn)))
        )

        lanczos = symplectic_lanczos(system.apply_a, y0, 4)
        worst["lanczos"] = max(worst["lanczos"], j_orthogonality_error(lanczos.vectors))

        blockj = block_j_basis(system.apply_a, y0, 4)
        worst["blockj"] = max(worst["blockj"], j_orthogonality_error(blockj.vectors))

    ok = (
        worst["relation"] <= 1e-10
        and worst["weighted"] <= 1e-10
        and worst["lanczos"] <= 1e-8
        and worst["blockj"] <= 1e-12
        and worst["skew"] <= 1e-10
    )
    report(
        "10-structural-invariants",
        ok,
        ", ".join(f"{k} {v:.2e}" for k, v in worst.items()),
    )


def test_criterion_11_deterministic_invariant_reports(tmp_path):
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    code_a = cli_main(["invariants", "--seed", "7", "--output", str(out_a)])
    code_b = cli_main(["invariants", "--seed", "7", "--output", str(out_b)])
    bytes_a = (out_a / "invariants_report.json").read_bytes()
    bytes_b = (out_b / "invariants_report.json").read_bytes()
    ok = code_a == 0 and code_b == 0 and bytes_a == bytes_b
    report(
        "11-determinism",
        ok,
        f"exit codes ({code_a}, {code_b}), reports identical {bytes_a == bytes_b}",
    )
