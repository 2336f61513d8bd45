"""Data-based simulation.

Given recorded data of an unknown flat plant, a new input and the first n
outputs, the output response over a horizon L is found as a combination
of data windows: alpha solves

    [H_{L-n}(Psi(u, y)); H_n(y_init-part)] alpha = [Psi(u_new, H_L(y) alpha); y_init]

in the regularized least-squares sense, and the response is H_L(y) alpha.
The right-hand side depends on alpha, so the solve is iterative except
when the basis is affine in the output window, which collapses the
problem to plain ridge regression.  Kernel mode carries the same
objective through Gram matrices without materializing any basis.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .basis import (
    BasisSet,
    KernelSpec,
    affine_xi_decomposition,
    build_psi_hankel,
    eval_psi_hat,
    kernel_eval,
    psi_hat_signal,
)
from .errors import ConfigError, DataLengthWarning, DimensionError, PersistencyWarning
from .membership import data_length_check
from .signals import IoTrajectory, Signal, build_hankel, pe_check
from .solver import (
    NonlinearResidualProblem,
    NonlinearResult,
    NormalEquationsProblem,
    RidgeProblem,
    ridge_solve,
)
from .solver import nonlinear_solve

__all__ = ["SimProblem", "SimResult", "dd_simulate", "kernel_sim_problem"]


@dataclass(frozen=True)
class SimProblem:
    """Inputs of a data-based simulation over one horizon.

    ``mode`` is "explicit" (requires ``basis``) or "kernel" (requires
    ``kernel``).  ``u_new`` has length L - n and ``y_init`` length n.
    """

    traj: IoTrajectory
    L: int
    u_new: np.ndarray
    y_init: np.ndarray
    mode: str = "explicit"
    basis: BasisSet | None = None
    kernel: KernelSpec | None = None
    lam: float = 0.1
    max_iter: int = 500
    rel_tol: float = 1e-8
    damping: float = 1.0
    polish: bool = True
    polish_maxiter: int = 100

    def __post_init__(self) -> None:
        n = self.traj.n
        if self.L <= n:
            raise ConfigError(f"horizon L={self.L} must exceed order n={n}")
        if self.lam <= 0:
            raise ConfigError(f"simulation requires lam > 0, got {self.lam}")
        u_new = np.asarray(self.u_new, dtype=float).reshape(-1)
        y_init = np.asarray(self.y_init, dtype=float).reshape(-1)
        if u_new.size != self.L - n:
            raise DimensionError(f"new input has {u_new.size} samples, expected L-n={self.L - n}")
        if y_init.size != n:
            raise DimensionError(f"initial output has {y_init.size} samples, expected n={n}")
        if self.mode == "explicit":
            if self.basis is None:
                raise ConfigError("explicit mode requires a basis")
            if self.basis.n != n:
                raise ConfigError(f"basis window width {self.basis.n} != trajectory order {n}")
        elif self.mode == "kernel":
            if self.kernel is None:
                raise ConfigError("kernel mode requires a kernel spec")
        else:
            raise ConfigError(f"unknown mode {self.mode!r}")
        object.__setattr__(self, "u_new", u_new)
        object.__setattr__(self, "y_init", y_init)


@dataclass(frozen=True)
class SimResult:
    """Simulated response y = H_L(y_data) alpha and solve diagnostics.

    ``initial_objective`` is the objective at the solver's starting point
    (equal to ``objective`` when the problem is solved in closed form);
    the guard guarantees objective <= initial_objective.
    """

    y: Signal
    alpha: np.ndarray
    objective: float
    iterations: int
    converged: bool
    initial_objective: float = float("nan")


def _window_points(traj: IoTrajectory) -> np.ndarray:
    """Data points z_k = (u_k, y_k, ..., y_{k+n-1}), shape (N-n, 1+n)."""
    y = traj.y.flat
    xi = np.lib.stride_tricks.sliding_window_view(y, traj.n)[: traj.N - traj.n]
    return np.column_stack([traj.u.flat, xi])


def _candidate_points(u_new: np.ndarray, y_candidate: np.ndarray, n: int) -> np.ndarray:
    xi = np.lib.stride_tricks.sliding_window_view(y_candidate, n)[: u_new.size]
    return np.column_stack([u_new, xi])


def _slice_sum_gram(K: np.ndarray, depth: int, cols: int) -> np.ndarray:
    """sum_k K[k:k+cols, k:k+cols] for k = 0..depth-1."""
    G = np.zeros((cols, cols))
    for k in range(depth):
        G += K[k : k + cols, k : k + cols]
    return G


def _diag_band_sum(K: np.ndarray, cols: int) -> np.ndarray:
    """c[j] = sum_k K[k, k+j], for a (depth x depth+cols-1) block."""
    c = np.zeros(cols)
    for k in range(K.shape[0]):
        c += K[k, k : k + cols]
    return c


def kernel_sim_problem(
    traj: IoTrajectory,
    L: int,
    u_new: np.ndarray,
    y_init: np.ndarray,
    pair_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    lam: float,
    **controls,
) -> tuple[NormalEquationsProblem, np.ndarray, np.ndarray]:
    """Assemble the Gram-space simulation objective.

    ``pair_fn(Z1, Z2)`` returns pairwise inner products of feature vectors
    at points z = (u, output window).  Returns the problem, the depth-L
    output Hankel matrix (for recovering y from alpha), and the starting
    point alpha0 fit to the initial-output rows.
    """
    n = traj.n
    cols = traj.N - L + 1
    Z_data = _window_points(traj)
    K_data = pair_fn(Z_data, Z_data)
    G_psi = _slice_sum_gram(K_data, L - n, cols)
    Y0 = build_hankel(traj.y.window(0, traj.N - L + n - 1), n).entries
    H_L_y = build_hankel(traj.y, L).entries
    gram = G_psi + Y0.T @ Y0
    const_cross = Y0.T @ y_init

    def cross(alpha: np.ndarray) -> np.ndarray:
        y_cand = H_L_y @ alpha
        Z_bar = _candidate_points(u_new, y_cand, n)
        return _diag_band_sum(pair_fn(Z_bar, Z_data), cols) + const_cross

    y_init_sq = float(y_init @ y_init)

    def offset(alpha: np.ndarray) -> float:
        y_cand = H_L_y @ alpha
        Z_bar = _candidate_points(u_new, y_cand, n)
        return float(np.trace(pair_fn(Z_bar, Z_bar))) + y_init_sq

    prob = NormalEquationsProblem(gram, cross, offset, lam, **controls)
    alpha0 = ridge_solve(RidgeProblem(Y0, y_init, lam))
    return prob, H_L_y, alpha0


def _explicit_qp(
    prob: SimProblem, A: np.ndarray, H_L_y: np.ndarray, b_const: np.ndarray
) -> NonlinearResult:
    """Affine-in-window bases collapse the residual to (A - C) alpha - b."""
    basis = prob.basis
    n = prob.traj.n
    base, grad = affine_xi_decomposition(basis, prob.u_new)
    C = np.zeros_like(A)
    for k in range(prob.L - n):
        for j in range(n):
            C[k * basis.r : (k + 1) * basis.r, :] += np.outer(
                grad[k, :, j], H_L_y[k + j, :]
            )
    rhs0 = np.concatenate([base.reshape(-1), b_const])
    alpha = ridge_solve(RidgeProblem(A - C, rhs0, prob.lam))
    r = (A - C) @ alpha - rhs0
    obj = float(r @ r + prob.lam * (alpha @ alpha))
    return NonlinearResult(alpha, obj, 0, True, obj)


def dd_simulate(prob: SimProblem) -> SimResult:
    """Simulate the response to ``u_new`` from ``y_init`` using data only.

    Warns when the recorded data cannot certify completeness (excitation
    rank or data-length bound); these checks need explicit features and
    are skipped in kernel mode.
    """
    traj, n, L = prob.traj, prob.traj.n, prob.L
    controls = dict(
        max_iter=prob.max_iter,
        rel_tol=prob.rel_tol,
        damping=prob.damping,
        polish=prob.polish,
        polish_maxiter=prob.polish_maxiter,
    )

    if prob.mode == "kernel":
        normal, H_L_y, alpha0 = kernel_sim_problem(
            traj,
            L,
            prob.u_new,
            prob.y_init,
            lambda Z1, Z2: kernel_eval(prob.kernel, Z1, Z2),
            prob.lam,
            **controls,
        )
        res = nonlinear_solve(normal, alpha0)
        return SimResult(
            Signal(H_L_y @ res.alpha),
            res.alpha,
            res.objective,
            res.iterations,
            res.converged,
            res.initial_objective,
        )

    basis = prob.basis
    chk = data_length_check(traj.N, L, n, basis.r)
    if not chk.feasible:
        warnings.warn(
            f"data length N={traj.N} is below the excitation bound {chk.required_N}",
            DataLengthWarning,
            stacklevel=2,
        )
    pe = pe_check(psi_hat_signal(traj, basis), L)
    if not pe.order_satisfied:
        warnings.warn(
            f"basis-function sequence is not persistently exciting of order L={L} "
            f"(rank {pe.numerical_rank} of {basis.r * L})",
            PersistencyWarning,
            stacklevel=2,
        )

    H_psi = build_psi_hankel(traj, basis, L).entries
    Y0 = build_hankel(traj.y.window(0, traj.N - L + n - 1), n).entries
    H_L_y = build_hankel(traj.y, L).entries
    A = np.vstack([H_psi, Y0])

    if basis.affine_in_xi:
        res = _explicit_qp(prob, A, H_L_y, prob.y_init)
        return SimResult(
            Signal(H_L_y @ res.alpha),
            res.alpha,
            res.objective,
            res.iterations,
            res.converged,
            res.initial_objective,
        )

    def rhs(alpha: np.ndarray) -> np.ndarray:
        y_cand = H_L_y @ alpha
        xi = np.lib.stride_tricks.sliding_window_view(y_cand, n)[: L - n]
        psi = eval_psi_hat(basis, prob.u_new, xi)
        return np.concatenate([psi.reshape(-1), prob.y_init])

    rows0 = [Y0]
    rhs0 = [prob.y_init]
    if basis.identity_index is not None:
        rows0.insert(0, H_psi[basis.identity_index :: basis.r, :])
        rhs0.insert(0, prob.u_new)
    alpha0 = ridge_solve(RidgeProblem(np.vstack(rows0), np.concatenate(rhs0), prob.lam))

    nl = NonlinearResidualProblem(A, rhs, prob.lam, **controls)
    res = nonlinear_solve(nl, alpha0)
    return SimResult(
        Signal(H_L_y @ res.alpha),
        res.alpha,
        res.objective,
        res.iterations,
        res.converged,
        res.initial_objective,
    )
