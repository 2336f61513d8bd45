import numpy as np
import pytest

from flatdd.basis import (
    BasisSet,
    KernelSpec,
    affine_u_decomposition,
    build_psi_hankel,
    eval_psi_hat,
    named_basis,
)
from flatdd.errors import ConfigError, DataLengthWarning, DimensionError, PersistencyWarning
from flatdd.matching import MatchProblem, _reference_windows, dd_match
from flatdd.plant import collect_trajectory, example1_model, matching_input_oracle, simulate
from flatdd.signals import build_hankel
from flatdd.solver import (
    NonlinearResidualProblem,
    RidgeProblem,
    nonlinear_solve,
    ridge_solve,
)


@pytest.fixture(scope="module")
def model():
    return example1_model()


@pytest.fixture(scope="module")
def basis():
    return named_basis("example1-poly")


@pytest.fixture(scope="module")
def clean_traj(model):
    return collect_trajectory(model, 500, (-0.5, 0.5), seed=1)


@pytest.fixture(scope="module")
def sin_ref():
    return 0.5 * np.sin(2 * np.pi * np.arange(50) / 25)


def test_window_reference_recovers_data_input(clean_traj, basis):
    y_ref = clean_traj.y.flat[100:150]
    res = dd_match(MatchProblem(clean_traj, 50, y_ref, "explicit", basis=basis, lam=1e-8))
    assert np.allclose(res.u.flat, clean_traj.u.flat[100:148], atol=1e-4)


def test_sinusoid_reference_matches_model_inverse(clean_traj, basis, model, sin_ref):
    res = dd_match(MatchProblem(clean_traj, 50, sin_ref, "explicit", basis=basis, lam=1e-8))
    u_oracle = matching_input_oracle(model, sin_ref)
    assert np.linalg.norm(res.u.flat - u_oracle) <= 1e-2 * np.linalg.norm(u_oracle)


def test_closed_loop_reproduces_reference(clean_traj, basis, model, sin_ref):
    res = dd_match(MatchProblem(clean_traj, 50, sin_ref, "explicit", basis=basis, lam=1e-8))
    y = simulate(model, sin_ref[:2], res.u.flat).flat[:50]
    assert np.linalg.norm(y - sin_ref) <= 1e-2 * np.linalg.norm(sin_ref)


def test_input_recovery_identity_is_exact(clean_traj, basis, sin_ref):
    res = dd_match(MatchProblem(clean_traj, 50, sin_ref, "explicit", basis=basis, lam=0.1))
    U = build_hankel(clean_traj.u, 48).entries
    assert np.array_equal(res.u.flat, U @ res.alpha)


def test_identity_row_matches_returned_input(clean_traj, basis, sin_ref):
    res = dd_match(MatchProblem(clean_traj, 50, sin_ref, "explicit", basis=basis, lam=0.1))
    psi = eval_psi_hat(basis, res.u.flat, _reference_windows(sin_ref, 2))
    assert np.array_equal(psi[:, basis.identity_index], res.u.flat)


def test_substituted_residual_is_linear_in_alpha(clean_traj, basis, sin_ref):
    H_psi = build_psi_hankel(clean_traj, basis, 50).entries
    U = build_hankel(clean_traj.u, 48).entries
    A = np.vstack([H_psi, build_hankel(clean_traj.y, 50).entries])
    xi_ref = _reference_windows(sin_ref, 2)

    def residual(alpha):
        psi = eval_psi_hat(basis, U @ alpha, xi_ref)
        return A @ alpha - np.concatenate([psi.reshape(-1), sin_ref])

    rng = np.random.default_rng(0)
    alpha = rng.normal(size=A.shape[1])
    step = rng.normal(size=A.shape[1])
    second_diff = residual(alpha + step) - 2 * residual(alpha) + residual(alpha - step)
    assert np.abs(second_diff).max() <= 1e-10


def test_qp_agrees_with_generic_solver(clean_traj, basis, sin_ref):
    # the affine split turns the residual into a constant-target ridge
    # problem; the generic iteration must land on the same point
    H_psi = build_psi_hankel(clean_traj, basis, 50).entries
    U = build_hankel(clean_traj.u, 48).entries
    H_L_y = build_hankel(clean_traj.y, 50).entries
    A = np.vstack([H_psi, H_L_y])
    xi_ref = _reference_windows(sin_ref, 2)
    base, slope = affine_u_decomposition(basis, xi_ref)
    C = np.zeros_like(A)
    for k in range(48):
        C[k * basis.r : (k + 1) * basis.r, :] = np.outer(slope[k], U[k, :])
    rhs0 = np.concatenate([base.reshape(-1), sin_ref])

    direct = ridge_solve(RidgeProblem(A - C, rhs0, 0.1))
    alpha0 = ridge_solve(RidgeProblem(H_L_y, sin_ref, 0.1))
    iterated = nonlinear_solve(
        NonlinearResidualProblem(A - C, lambda _: rhs0, 0.1), alpha0
    )
    assert iterated.converged
    assert np.abs(iterated.alpha - direct).max() <= 1e-8

    res = dd_match(MatchProblem(clean_traj, 50, sin_ref, "explicit", basis=basis, lam=0.1))
    assert np.abs(res.alpha - direct).max() <= 1e-8


def test_kernel_mode_recovers_data_window(model):
    traj = collect_trajectory(model, 200, (-0.5, 0.5), seed=3)
    y_ref = traj.y.flat[60:80]
    res = dd_match(
        MatchProblem(
            traj,
            20,
            y_ref,
            "kernel",
            kernel=KernelSpec("gaussian_plus_linear", sigma=1.0),
            lam=1e-8,
        )
    )
    assert np.allclose(res.u.flat, traj.u.flat[60:78], atol=1e-4)
    assert res.objective <= res.initial_objective
    assert res.u.length == 18


def test_noisy_regime_error_scale(model, basis, sin_ref):
    from flatdd.plant import NoiseSpec

    traj = collect_trajectory(
        model, 500, (-0.5, 0.5), seed=5, noise=NoiseSpec(-0.025, 0.025, seed=77)
    )
    res = dd_match(MatchProblem(traj, 50, sin_ref, "explicit", basis=basis, lam=0.1))
    u_oracle = matching_input_oracle(model, sin_ref)
    y = simulate(model, np.zeros(2), res.u.flat).flat[:50]
    assert np.linalg.norm(res.u.flat - u_oracle) < 0.2
    assert np.linalg.norm(y - sin_ref) < 0.5


def test_explicit_mode_needs_identity_function(clean_traj, sin_ref):
    no_identity = BasisSet(
        name="squares-only",
        n=2,
        functions=(lambda u, xi: u * u, lambda u, xi: xi[..., 0]),
        affine_in_u=False,
        identity_index=None,
    )
    with pytest.raises(ConfigError, match="identity"):
        MatchProblem(clean_traj, 50, sin_ref, "explicit", basis=no_identity, lam=0.1)


def test_plain_gaussian_kernel_rejected(clean_traj, sin_ref):
    with pytest.raises(ConfigError, match="unrecoverable"):
        MatchProblem(
            clean_traj, 50, sin_ref, "kernel", kernel=KernelSpec("gaussian", sigma=1.0), lam=0.1
        )


def test_validation_errors(clean_traj, basis, sin_ref):
    with pytest.raises(ConfigError, match="lam"):
        MatchProblem(clean_traj, 50, sin_ref, "explicit", basis=basis, lam=0.0)
    with pytest.raises(DimensionError, match="expected L=40"):
        MatchProblem(clean_traj, 40, sin_ref, "explicit", basis=basis, lam=0.1)
    with pytest.raises(ConfigError, match="exceed"):
        MatchProblem(clean_traj, 2, sin_ref[:2], "explicit", basis=basis, lam=0.1)
    with pytest.raises(ConfigError, match="mode"):
        MatchProblem(clean_traj, 50, sin_ref, "implicit", basis=basis, lam=0.1)
    with pytest.raises(ConfigError, match="kernel"):
        MatchProblem(clean_traj, 50, sin_ref, "kernel", lam=0.1)


def test_short_data_warns(model, basis):
    traj = collect_trajectory(model, 120, (-0.5, 0.5), seed=2)
    y_ref = traj.y.flat[10:60]
    with pytest.warns(DataLengthWarning, match="below the excitation bound 351"):
        dd_match(MatchProblem(traj, 50, y_ref, "explicit", basis=basis, lam=0.1))


def test_unexciting_data_warns(model, basis):
    u = np.full(248, 0.1)
    y = simulate(model, np.zeros(2), u)
    from flatdd.signals import IoTrajectory

    traj = IoTrajectory.from_arrays(u, y.flat, 2)
    with pytest.warns(PersistencyWarning, match="not persistently exciting"):
        dd_match(MatchProblem(traj, 50, y.flat[20:70], "explicit", basis=basis, lam=0.1))
