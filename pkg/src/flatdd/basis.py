"""Feature maps over (input, output window) pairs, and kernel substitutes.

A basis is a list of functions psi_i(u_k, xi_k) with xi_k the output
window (y_k, ..., y_{k+n-1}).  The stacked vector Psi_k drives the
synthetic-input recursion y_{k+n} = a^T Psi_k, so trajectories of the
plant are parameterized by Hankel matrices of Psi and y.  Kernels replace
an explicit (possibly infinite) basis with pairwise inner products.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

from .errors import ConfigError, EvaluationError
from .signals import HankelMatrix, IoTrajectory, Signal, build_hankel

__all__ = [
    "BasisSet",
    "named_basis",
    "eval_psi_hat",
    "psi_hat_signal",
    "build_psi_hankel",
    "affine_u_decomposition",
    "affine_xi_decomposition",
    "KernelSpec",
    "kernel_eval",
    "kernel_gram",
]

BasisFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class BasisSet:
    """Ordered basis functions psi_i(u, xi) with xi of width ``n``.

    Each function must accept a batch: u of shape (m,) and xi of shape
    (m, n), returning shape (m,).  ``identity_index`` marks a function
    equal to u itself, required for retrieving inputs in matching.  The
    affine flags declare structure exploited by the quadratic solve paths;
    ``validate`` probes them numerically.
    """

    functions: tuple[BasisFn, ...]
    n: int
    name: str
    affine_in_u: bool = False
    affine_in_xi: bool = False
    identity_index: int | None = None

    @property
    def r(self) -> int:
        return len(self.functions)

    def validate(self, probes: int = 8, seed: int = 0, tol: float = 1e-9) -> None:
        if self.r == 0:
            raise ConfigError("basis has no functions")
        if self.n < 1:
            raise ConfigError(f"window width must be >= 1, got n={self.n}")
        if self.identity_index is not None and not (0 <= self.identity_index < self.r):
            raise ConfigError(f"identity_index {self.identity_index} out of range for r={self.r}")
        rng = np.random.default_rng(seed)
        u = rng.uniform(-1.0, 1.0, size=probes)
        xi = rng.uniform(-1.0, 1.0, size=(probes, self.n))
        P = eval_psi_hat(self, u, xi)
        if self.identity_index is not None:
            if not np.allclose(P[:, self.identity_index], u, atol=tol):
                raise ConfigError(f"function {self.identity_index} of {self.name!r} is not the identity in u")
        if self.affine_in_u:
            u2 = rng.uniform(-1.0, 1.0, size=probes)
            mid = eval_psi_hat(self, 0.5 * (u + u2), xi)
            if not np.allclose(mid, 0.5 * (P + eval_psi_hat(self, u2, xi)), atol=tol):
                raise ConfigError(f"basis {self.name!r} declared affine in u but is not")
        if self.affine_in_xi:
            xi2 = rng.uniform(-1.0, 1.0, size=(probes, self.n))
            mid = eval_psi_hat(self, u, 0.5 * (xi + xi2))
            if not np.allclose(mid, 0.5 * (P + eval_psi_hat(self, u, xi2)), atol=tol):
                raise ConfigError(f"basis {self.name!r} declared affine in xi but is not")


def named_basis(name: str, n: int = 2) -> BasisSet:
    """Bundled bases by name.

    ``example1-poly``: [u, u xi1, u xi2, xi1 xi2, u xi1^2, u xi2^2] with
    n = 2; spans the example-1 recursion u (xi1^2 + 2) with coefficients
    (2, 0, 0, 0, 1, 0).  ``identity-only``: the single function u.
    """
    if name == "example1-poly":
        if n != 2:
            raise ConfigError(f"basis {name!r} is defined for n=2, got n={n}")
        fns = (
            lambda u, xi: u,
            lambda u, xi: u * xi[:, 0],
            lambda u, xi: u * xi[:, 1],
            lambda u, xi: xi[:, 0] * xi[:, 1],
            lambda u, xi: u * xi[:, 0] ** 2,
            lambda u, xi: u * xi[:, 1] ** 2,
        )
        return BasisSet(fns, 2, name, affine_in_u=True, affine_in_xi=False, identity_index=0)
    if name == "identity-only":
        return BasisSet(
            (lambda u, xi: u,), n, name, affine_in_u=True, affine_in_xi=True, identity_index=0
        )
    raise ConfigError(f"unknown basis {name!r}")


def eval_psi_hat(basis: BasisSet, u: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Evaluate all basis functions at a batch of (u_k, xi_k) pairs.

    Returns shape (m, r): row k is Psi(u_k, xi_k).
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 1:
        xi = xi.reshape(1, -1) if u.size == 1 else xi.reshape(-1, 1)
    if xi.shape != (u.size, basis.n):
        raise EvaluationError(
            f"window batch has shape {xi.shape}, expected {(u.size, basis.n)}"
        )
    out = np.empty((u.size, basis.r))
    # evaluation faults (division by zero, log of negatives) surface as
    # non-finite entries and are reported below
    with np.errstate(all="ignore"):
        for i, fn in enumerate(basis.functions):
            col = np.asarray(fn(u, xi), dtype=float).reshape(-1)
            if col.size != u.size:
                raise EvaluationError(f"basis function {i} returned {col.size} values for {u.size} points")
            out[:, i] = col
    if not np.all(np.isfinite(out)):
        bad = int(np.argwhere(~np.isfinite(out))[0][1])
        raise EvaluationError(f"basis function {bad} returned a non-finite value at finite arguments")
    return out


def psi_hat_signal(traj: IoTrajectory, basis: BasisSet) -> Signal:
    """The sequence Psi_0 ... Psi_{N-n-1} along a recorded trajectory."""
    if basis.n != traj.n:
        raise ConfigError(f"basis window width {basis.n} != trajectory order {traj.n}")
    n, N = traj.n, traj.N
    y = traj.y.flat
    xi = np.lib.stride_tricks.sliding_window_view(y, n)[: N - n]
    return Signal(eval_psi_hat(basis, traj.u.flat, xi))


def build_psi_hankel(traj: IoTrajectory, basis: BasisSet, L: int) -> HankelMatrix:
    """Depth-(L-n) Hankel matrix of the Psi sequence.

    Shape r(L-n) x (N-L+1); its columns align with the depth-L Hankel
    matrix of y over the same trajectory.
    """
    if L <= traj.n:
        raise ConfigError(f"window length L={L} must exceed order n={traj.n}")
    return build_hankel(psi_hat_signal(traj, basis), L - traj.n)


def affine_u_decomposition(basis: BasisSet, xi: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split psi_i(u, xi) = base_i(xi) + slope_i(xi) u for an affine-in-u basis.

    Exact only when the basis is affine in u.  Returns (base, slope), both
    of shape (m, r), for the batch of windows xi of shape (m, n).
    """
    if not basis.affine_in_u:
        raise ConfigError(f"basis {basis.name!r} is not declared affine in u")
    xi = np.asarray(xi, dtype=float)
    m = xi.shape[0]
    base = eval_psi_hat(basis, np.zeros(m), xi)
    slope = eval_psi_hat(basis, np.ones(m), xi) - base
    return base, slope


def affine_xi_decomposition(basis: BasisSet, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split psi_i(u, xi) = base_i(u) + sum_j grad_ij(u) xi_j for an
    affine-in-xi basis.

    Returns (base, grad) with shapes (m, r) and (m, r, n).
    """
    if not basis.affine_in_xi:
        raise ConfigError(f"basis {basis.name!r} is not declared affine in xi")
    u = np.asarray(u, dtype=float).reshape(-1)
    m = u.size
    base = eval_psi_hat(basis, u, np.zeros((m, basis.n)))
    grad = np.empty((m, basis.r, basis.n))
    for j in range(basis.n):
        e = np.zeros((m, basis.n))
        e[:, j] = 1.0
        grad[:, :, j] = eval_psi_hat(basis, u, e) - base
    return base, grad


@dataclass(frozen=True)
class KernelSpec:
    """Positive-definite kernel over points z = (u, xi) in R^{1+n}.

    ``gaussian``: exp(-|z - z'|^2 / (2 sigma^2)).
    ``gaussian_plus_linear``: the same plus u u', whose linear-in-input
    part lets matching problems retrieve the input explicitly.
    """

    kind: Literal["gaussian", "gaussian_plus_linear"]
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian", "gaussian_plus_linear"):
            raise ConfigError(f"unknown kernel kind {self.kind!r}")
        if self.sigma <= 0:
            raise ConfigError(f"kernel width must be positive, got sigma={self.sigma}")


def kernel_eval(spec: KernelSpec, Z1: np.ndarray, Z2: np.ndarray) -> np.ndarray:
    """Pairwise kernel values, shape (len(Z1), len(Z2)).

    Rows of Z are points (u, xi_1, ..., xi_n); the input is the first
    coordinate.
    """
    Z1 = np.atleast_2d(np.asarray(Z1, dtype=float))
    Z2 = np.atleast_2d(np.asarray(Z2, dtype=float))
    if Z1.shape[1] != Z2.shape[1]:
        raise EvaluationError(f"point widths differ: {Z1.shape[1]} vs {Z2.shape[1]}")
    sq = (
        np.sum(Z1**2, axis=1)[:, None]
        + np.sum(Z2**2, axis=1)[None, :]
        - 2.0 * (Z1 @ Z2.T)
    )
    np.maximum(sq, 0.0, out=sq)
    K = np.exp(-sq / (2.0 * spec.sigma**2))
    if spec.kind == "gaussian_plus_linear":
        K += np.outer(Z1[:, 0], Z2[:, 0])
    return K


def kernel_gram(spec: KernelSpec, Z: np.ndarray) -> np.ndarray:
    """Symmetric Gram matrix of a point set."""
    K = kernel_eval(spec, Z, Z)
    return 0.5 * (K + K.T)
