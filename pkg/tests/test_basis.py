import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from flatdd.basis import (
    BasisSet,
    KernelSpec,
    affine_u_decomposition,
    affine_xi_decomposition,
    build_psi_hankel,
    eval_psi_hat,
    kernel_eval,
    kernel_gram,
    named_basis,
    psi_hat_signal,
)
from flatdd.errors import ConfigError, EvaluationError
from flatdd.plant import collect_trajectory, example1_model

TRUE_COEFFS = np.array([2.0, 0.0, 0.0, 0.0, 1.0, 0.0])


@pytest.fixture(scope="module")
def ex1_traj():
    return collect_trajectory(example1_model(), 120, (-0.5, 0.5), seed=11)


def test_named_bases_validate():
    named_basis("example1-poly").validate()
    named_basis("identity-only", n=3).validate()
    with pytest.raises(ConfigError):
        named_basis("no-such-basis")
    with pytest.raises(ConfigError):
        named_basis("example1-poly", n=3)


def test_validate_rejects_wrong_declarations():
    quad = BasisSet((lambda u, xi: u**2,), 2, "quad", affine_in_u=True)
    with pytest.raises(ConfigError, match="affine in u"):
        quad.validate()
    not_id = BasisSet((lambda u, xi: 2.0 * u,), 2, "scaled", identity_index=0)
    with pytest.raises(ConfigError, match="identity"):
        not_id.validate()


def test_example1_basis_spans_recursion(ex1_traj):
    # y_{k+2} = 2 u_k + u_k y_k^2 is a fixed linear combination of the basis
    psi = psi_hat_signal(ex1_traj, named_basis("example1-poly"))
    y = ex1_traj.y.flat
    assert_allclose(psi.values @ TRUE_COEFFS, y[2:], rtol=1e-12, atol=1e-14)


def test_psi_hat_signal_matches_pointwise(ex1_traj):
    basis = named_basis("example1-poly")
    psi = psi_hat_signal(ex1_traj, basis)
    u, y = ex1_traj.u.flat, ex1_traj.y.flat
    assert psi.length == ex1_traj.N - 2 and psi.sigma == 6
    for k in (0, 5, psi.length - 1):
        row = eval_psi_hat(basis, np.array([u[k]]), y[k : k + 2].reshape(1, 2))
        assert_allclose(psi.values[k], row[0])


def test_psi_hankel_shape_on_long_record():
    traj = collect_trajectory(example1_model(), 500, (-0.5, 0.5), seed=0)
    H = build_psi_hankel(traj, named_basis("example1-poly"), 50)
    assert H.entries.shape == (288, 451)
    assert H.depth == 48 and H.sigma == 6


def test_psi_hankel_requires_window_beyond_order(ex1_traj):
    with pytest.raises(ConfigError):
        build_psi_hankel(ex1_traj, named_basis("example1-poly"), 2)


def test_affine_u_split(ex1_traj):
    basis = named_basis("example1-poly")
    rng = np.random.default_rng(2)
    xi = rng.normal(size=(40, 2))
    u = rng.normal(size=40)
    base, slope = affine_u_decomposition(basis, xi)
    assert_allclose(base + slope * u[:, None], eval_psi_hat(basis, u, xi), rtol=1e-13)
    undeclared = BasisSet((lambda u, xi: u,), 2, "x", affine_in_u=False)
    with pytest.raises(ConfigError):
        affine_u_decomposition(undeclared, xi)


def test_affine_xi_split():
    basis = named_basis("identity-only")
    rng = np.random.default_rng(3)
    u = rng.normal(size=15)
    xi = rng.normal(size=(15, 2))
    base, grad = affine_xi_decomposition(basis, u)
    recon = base + np.einsum("mrn,mn->mr", grad, xi)
    assert_allclose(recon, eval_psi_hat(basis, u, xi), atol=1e-14)


def test_eval_rejects_nonfinite():
    bad = BasisSet((lambda u, xi: 1.0 / u,), 1, "recip")
    with pytest.raises(EvaluationError, match="non-finite"):
        eval_psi_hat(bad, np.array([0.0]), np.zeros((1, 1)))


def test_gaussian_kernel_values():
    spec = KernelSpec("gaussian", sigma=1.0)
    z = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    K = kernel_eval(spec, z, z)
    assert_allclose(np.diag(K), 1.0)
    assert_allclose(K[0, 1], np.exp(-0.5))
    wide = kernel_eval(KernelSpec("gaussian", sigma=2.0), z, z)
    assert_allclose(wide[0, 1], np.exp(-1.0 / 8.0))


def test_linear_term_adds_input_product():
    g = KernelSpec("gaussian", sigma=1.3)
    gl = KernelSpec("gaussian_plus_linear", sigma=1.3)
    rng = np.random.default_rng(5)
    Z1, Z2 = rng.normal(size=(4, 3)), rng.normal(size=(6, 3))
    assert_allclose(
        kernel_eval(gl, Z1, Z2) - kernel_eval(g, Z1, Z2),
        np.outer(Z1[:, 0], Z2[:, 0]),
        atol=1e-14,
    )


def test_kernel_spec_validation():
    with pytest.raises(ConfigError):
        KernelSpec("cubic")
    with pytest.raises(ConfigError):
        KernelSpec("gaussian", sigma=0.0)


@given(st.integers(0, 500))
def test_gram_symmetric_psd(seed):
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(rng.integers(2, 12), 3))
    for kind in ("gaussian", "gaussian_plus_linear"):
        G = kernel_gram(KernelSpec(kind, sigma=0.8), Z)
        assert_allclose(G, G.T)
        assert np.linalg.eigvalsh(G).min() > -1e-10


@given(st.integers(0, 300))
def test_psi_hankel_columns_stack_windows(seed):
    rng = np.random.default_rng(seed)
    traj = collect_trajectory(example1_model(), 20, (-0.5, 0.5), seed=rng)
    basis = named_basis("example1-poly")
    L = int(rng.integers(3, 10))
    H = build_psi_hankel(traj, basis, L)
    psi = psi_hat_signal(traj, basis).values
    assert H.cols == traj.N - L + 1
    for j in range(0, H.cols, 3):
        assert_allclose(H.entries[:, j], psi[j : j + L - 2].reshape(-1))
