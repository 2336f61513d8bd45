"""End-to-end acceptance checks.

Each test prints one PASS/FAIL line with the measured numbers so a
plain ``pytest -s tests/test_acceptance.py`` doubles as the acceptance
report.  Tolerances and runtime budgets are asserted, not just shown.
"""

import time

import numpy as np
import pytest

from flatdd.basis import KernelSpec, kernel_gram, named_basis
from flatdd.experiments import ExperimentConfig, example2_defaults, run_example1, run_example2, run_sweep
from flatdd.membership import data_length_check, flat_membership, flat_stack, lti_membership
from flatdd.plant import collect_trajectory, example1_model, generate_excitation, simulate
from flatdd.signals import build_hankel, pe_check
from flatdd.simulation import SimProblem, dd_simulate
from flatdd.solver import (
    NonlinearResidualProblem,
    RidgeProblem,
    nonlinear_solve,
    ridge_solve,
)


def _report(num: int, label: str, ok: bool, detail: str) -> None:
    print(f"criterion {num} {'PASS' if ok else 'FAIL'}: {label} ({detail})")
    assert ok, f"criterion {num} {label}: {detail}"


def _lti_response(u: np.ndarray, x0: float = 0.0) -> np.ndarray:
    x = x0
    ys = []
    for uk in u:
        ys.append(x)
        x = 0.5 * x + uk
    return np.array(ys)


def test_criterion_1_lti_exactness():
    start = time.perf_counter()
    u_data = generate_excitation(60, (-1.0, 1.0), seed=0).flat
    y_data = _lti_response(u_data)
    rng = np.random.default_rng(2024)
    fresh_max = 0.0
    pert_min = np.inf
    for _ in range(100):
        u_bar = rng.uniform(-1.0, 1.0, 10)
        y_bar = _lti_response(u_bar, x0=rng.uniform(-2.0, 2.0))
        fresh_max = max(fresh_max, lti_membership(u_data, y_data, 1, 10, u_bar, y_bar).residual)
        bump = rng.uniform(0.05, 0.2, 10) * rng.choice([-1.0, 1.0], 10)
        pert_min = min(pert_min, lti_membership(u_data, y_data, 1, 10, u_bar, y_bar + bump).residual)
    elapsed = time.perf_counter() - start
    ok = fresh_max < 1e-8 and pert_min > 1e-3 and elapsed < 1.0
    _report(
        1,
        "LTI exactness",
        ok,
        f"fresh max {fresh_max:.2e} < 1e-8, perturbed min {pert_min:.2e} > 1e-3, {elapsed:.2f}s < 1s",
    )


def test_criterion_2_flat_exactness():
    start = time.perf_counter()
    model = example1_model()
    basis = named_basis("example1-poly")
    traj = collect_trajectory(model, 500, (-0.5, 0.5), seed=1)
    rng = np.random.default_rng(77)
    members = 0
    fresh_max = 0.0
    for i in range(20):
        u_bar = generate_excitation(48, (-0.5, 0.5), seed=3000 + i).flat
        y_bar = simulate(model, rng.uniform(-0.5, 0.5, 2), u_bar).flat
        v = flat_membership(traj, basis, 50, u_bar, y_bar, tol=1e-6)
        members += int(v.is_member)
        fresh_max = max(fresh_max, v.residual)
    M = flat_stack(traj, basis, 50)
    sol, *_ = np.linalg.lstsq(M, M, rcond=None)
    window_max = float(np.linalg.norm(M @ sol - M, axis=0).max())
    elapsed = time.perf_counter() - start
    ok = members == 20 and window_max <= 1e-10 and elapsed < 10.0
    _report(
        2,
        "flat exactness",
        ok,
        f"{members}/20 fresh members (worst {fresh_max:.2e}), "
        f"451-window max {window_max:.2e} <= 1e-10, {elapsed:.2f}s < 10s",
    )


def test_criterion_3_explicit_simulation():
    model = example1_model()
    basis = named_basis("example1-poly")
    traj = collect_trajectory(model, 500, (-0.5, 0.5), seed=1)
    worst = 0.0
    for i in range(10):
        u_new = generate_excitation(48, (-0.5, 0.5), seed=4000 + i).flat
        y_true = simulate(model, np.zeros(2), u_new).flat
        res = dd_simulate(
            SimProblem(traj, 50, u_new, y_true[:2], "explicit", basis=basis, lam=1e-8)
        )
        worst = max(worst, np.linalg.norm(res.y.flat - y_true) / np.linalg.norm(y_true))
    ok = worst <= 1e-3
    _report(3, "explicit data-based simulation", ok, f"worst relative error {worst:.2e} <= 1e-3 on 10 fresh inputs")


def test_criterion_4_output_matching_regime(tmp_path):
    start = time.perf_counter()
    summary = run_sweep(ExperimentConfig(seed=5, out_dir=str(tmp_path)), count=20)
    y_med = summary["median_y_err_2"]
    u_med = summary["median_u_err_2"]
    elapsed = time.perf_counter() - start
    ok = 0.08 <= y_med <= 0.75 and 0.02 <= u_med <= 0.25 and elapsed < 120.0
    _report(
        4,
        "output matching, noisy regime",
        ok,
        f"median y_err {y_med:.4f} in [0.08, 0.75], median u_err {u_med:.4f} in [0.02, 0.25], "
        f"{elapsed:.1f}s < 120s",
    )


def test_criterion_5_kernel_simulation_regime(tmp_path):
    start = time.perf_counter()
    summary = run_sweep(example2_defaults(seed=5, out_dir=str(tmp_path)), count=10)
    y_med = summary["median_y_err_2"]
    guarded = all(
        m["converged"] or m["objective"] <= m["initial_objective"] for m in summary["per_seed"]
    )
    elapsed = time.perf_counter() - start
    ok = 0.1 <= y_med <= 1.0 and guarded and elapsed < 600.0
    _report(
        5,
        "kernel simulation, noisy regime",
        ok,
        f"median y_err {y_med:.4f} in [0.1, 1.0], all runs converged-or-guarded: {guarded}, "
        f"{elapsed:.1f}s < 600s",
    )


def test_criterion_6_solver_correctness():
    rng = np.random.default_rng(1)
    worst_rel = 0.0
    for _ in range(1000):
        m, p = int(rng.integers(2, 40)), int(rng.integers(1, 20))
        A = rng.normal(size=(m, p))
        b = rng.normal(size=m)
        lam = float(rng.uniform(1e-6, 2.0))
        alpha = ridge_solve(RidgeProblem(A, b, lam))
        grad = 2 * A.T @ (A @ alpha - b) + 2 * lam * alpha
        worst_rel = max(worst_rel, np.linalg.norm(grad) / (1 + np.linalg.norm(A.T @ b)))
    optimal = worst_rel <= 1e-8

    worst_gap = 0.0
    for _ in range(50):
        m, p = int(rng.integers(3, 25)), int(rng.integers(1, 12))
        A = rng.normal(size=(m, p))
        b = rng.normal(size=m)
        lam = float(rng.uniform(1e-4, 1.0))
        direct = ridge_solve(RidgeProblem(A, b, lam))
        iterated = nonlinear_solve(
            NonlinearResidualProblem(A, lambda _, b=b: b, lam), np.zeros(p)
        )
        worst_gap = max(worst_gap, float(np.abs(iterated.alpha - direct).max()))
    linear_agree = worst_gap <= 1e-8

    toy = nonlinear_solve(
        NonlinearResidualProblem(
            np.array([[1.0]]), lambda a: np.array([1.0 + 0.5 * np.tanh(a[0])]), 0.1
        ),
        np.zeros(1),
    )
    grid = np.arange(-5.0, 5.0 + 1e-9, 1e-4)
    grid_best = grid[np.argmin((grid - 0.5 * np.tanh(grid) - 1.0) ** 2 + 0.1 * grid**2)]
    toy_gap = abs(toy.alpha[0] - grid_best)
    toy_ok = toy_gap <= 1e-3

    ok = optimal and linear_agree and toy_ok
    _report(
        6,
        "solver correctness",
        ok,
        f"optimality {worst_rel:.2e} <= 1e-8 on 1000 instances, "
        f"linear-residual gap {worst_gap:.2e} <= 1e-8, toy vs grid {toy_gap:.2e} <= 1e-3",
    )


def test_criterion_7_pe_hankel_properties():
    start = time.perf_counter()
    rng = np.random.default_rng(9)

    hankel_ok = True
    for _ in range(20):
        z = rng.normal(size=30)
        L = int(rng.integers(1, 11))
        H = build_hankel(z, L).entries
        for j in range(H.shape[1]):
            hankel_ok &= bool(np.array_equal(H[:, j], z[j : j + L]))

    pe_monotone = True
    for _ in range(20):
        z = rng.uniform(-1, 1, int(rng.integers(20, 60)))
        L = int(rng.integers(2, 8))
        if pe_check(z, L).order_satisfied:
            pe_monotone &= pe_check(z, L - 1).order_satisfied

    chk = data_length_check(351, 50, 2, 6)
    bound_ok = chk.feasible and chk.required_N == 351 and not data_length_check(350, 50, 2, 6).feasible

    spec = KernelSpec("gaussian", sigma=1.0)
    psd_ok = True
    for _ in range(10):
        pts = rng.normal(size=(int(rng.integers(2, 51)), 3))
        eig = np.linalg.eigvalsh(kernel_gram(spec, pts))
        psd_ok &= bool(eig[0] >= -1e-10 * max(1.0, eig[-1]))

    elapsed = time.perf_counter() - start
    ok = hankel_ok and pe_monotone and bound_ok and psd_ok and elapsed < 5.0
    _report(
        7,
        "PE/Hankel property suite",
        ok,
        f"hankel windows {hankel_ok}, PE monotone {pe_monotone}, "
        f"required_N {chk.required_N} == 351, Gram PSD {psd_ok}, {elapsed:.2f}s < 5s",
    )


def test_criterion_8_determinism(tmp_path):
    pairs = []
    run_example1(seed=7, out_dir=str(tmp_path / "m1a"))
    run_example1(seed=7, out_dir=str(tmp_path / "m1b"))
    for name in ("example1_inputs.csv", "example1_outputs.csv", "example1_metrics.json"):
        pairs.append(
            (tmp_path / "m1a" / name).read_bytes() == (tmp_path / "m1b" / name).read_bytes()
        )
    run_example2(seed=5, out_dir=str(tmp_path / "s2a"))
    run_example2(seed=5, out_dir=str(tmp_path / "s2b"))
    for name in ("example2_outputs.csv", "example2_metrics.json"):
        pairs.append(
            (tmp_path / "s2a" / name).read_bytes() == (tmp_path / "s2b" / name).read_bytes()
        )
    ok = all(pairs)
    _report(8, "byte-identical reruns", ok, f"{sum(pairs)}/{len(pairs)} emitted files identical")
