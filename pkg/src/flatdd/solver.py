"""Regularized least-squares engines.

Two problem shapes are handled: plain ridge regression for residuals that
are linear in the coefficient vector, and a damped fixed-point scheme for
residuals whose right-hand side depends on the coefficients (the
simulation and matching problems).  A kernelized variant carries the same
objective through Gram matrices instead of explicit residual rows.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import ConfigError, DivergenceError, SingularMatrixError
from .errors import ConditioningWarning

__all__ = [
    "RidgeProblem",
    "NonlinearResidualProblem",
    "NormalEquationsProblem",
    "NonlinearResult",
    "ridge_solve",
    "nonlinear_solve",
]

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class RidgeProblem:
    """minimize over alpha:  |A alpha - b|^2 + lam |alpha|^2"""

    A: np.ndarray
    b: np.ndarray
    lam: float = 0.0

    def __post_init__(self) -> None:
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if A.ndim != 2 or A.shape[0] != b.size:
            raise ConfigError(f"A has shape {A.shape}, b has {b.size} entries")
        if self.lam < 0:
            raise ConfigError(f"regularization weight must be >= 0, got {self.lam}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)


class _RidgeOperator:
    """SVD-based solver for min |A x - b|^2 + lam |x|^2, reusable across b."""

    def __init__(self, A: np.ndarray, lam: float):
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        if lam == 0.0:
            cutoff = max(A.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
            if s.size == 0 or s[-1] <= cutoff:
                raise SingularMatrixError(
                    "data block is rank-deficient and lam = 0; set lam > 0 to regularize"
                )
        cond = (s[0] ** 2 + lam) / (s[-1] ** 2 + lam)
        if cond > _COND_LIMIT:
            warnings.warn(
                f"normal equations have condition number {cond:.3e}",
                ConditioningWarning,
                stacklevel=3,
            )
        self._U, self._Vt = U, Vt
        self._filter = s / (s**2 + lam)

    def solve(self, b: np.ndarray) -> np.ndarray:
        return self._Vt.T @ (self._filter * (self._U.T @ b))


def ridge_solve(prob: RidgeProblem) -> np.ndarray:
    """Minimizer of |A alpha - b|^2 + lam |alpha|^2.

    Solved through the SVD of A, so the normal equations are never formed
    explicitly.  With lam = 0 the data block must have full column rank;
    a near-singular solve raises with advice to regularize.
    """
    return _RidgeOperator(prob.A, prob.lam).solve(prob.b)


def _check_controls(max_iter: int, rel_tol: float, damping: float) -> None:
    if max_iter < 1:
        raise ConfigError(f"max_iter must be >= 1, got {max_iter}")
    if rel_tol <= 0:
        raise ConfigError(f"rel_tol must be positive, got {rel_tol}")
    if not (0.0 < damping <= 1.0):
        raise ConfigError(f"damping must lie in (0, 1], got {damping}")


@dataclass(frozen=True)
class NonlinearResidualProblem:
    """minimize over alpha:  |A alpha - rhs(alpha)|^2 + lam |alpha|^2

    The data block A is fixed; only the right-hand side moves with alpha.
    """

    A: np.ndarray
    rhs: Callable[[np.ndarray], np.ndarray]
    lam: float
    max_iter: int = 500
    rel_tol: float = 1e-8
    damping: float = 1.0
    polish: bool = True
    polish_maxiter: int = 100

    def __post_init__(self) -> None:
        object.__setattr__(self, "A", np.asarray(self.A, dtype=float))
        if self.lam < 0:
            raise ConfigError(f"regularization weight must be >= 0, got {self.lam}")
        _check_controls(self.max_iter, self.rel_tol, self.damping)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def objective(self, alpha: np.ndarray) -> float:
        r = self.A @ alpha - self.rhs(alpha)
        return float(r @ r + self.lam * (alpha @ alpha))


@dataclass(frozen=True)
class NormalEquationsProblem:
    """Same objective as NonlinearResidualProblem, expressed through inner
    products so that kernelized (implicit-basis) residuals fit.

    objective(alpha) = alpha' gram alpha - 2 cross(alpha)' alpha
                       + offset(alpha) + lam |alpha|^2

    ``gram`` collects the alpha-independent products, ``cross`` the mixed
    terms and ``offset`` the alpha-only block |rhs(alpha)|^2.  The frozen
    linear step solves (gram + lam I) alpha = cross(alpha_t).
    """

    gram: np.ndarray
    cross: Callable[[np.ndarray], np.ndarray]
    offset: Callable[[np.ndarray], float]
    lam: float
    max_iter: int = 500
    rel_tol: float = 1e-8
    damping: float = 1.0
    polish: bool = True
    polish_maxiter: int = 100

    def __post_init__(self) -> None:
        G = np.asarray(self.gram, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1]:
            raise ConfigError(f"gram matrix must be square, got shape {G.shape}")
        if self.lam < 0:
            raise ConfigError(f"regularization weight must be >= 0, got {self.lam}")
        _check_controls(self.max_iter, self.rel_tol, self.damping)
        object.__setattr__(self, "gram", G)

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    def objective(self, alpha: np.ndarray) -> float:
        quad = float(alpha @ (self.gram @ alpha))
        return quad - 2.0 * float(self.cross(alpha) @ alpha) + float(self.offset(alpha)) + self.lam * float(
            alpha @ alpha
        )


@dataclass(frozen=True)
class NonlinearResult:
    alpha: np.ndarray
    objective: float
    iterations: int
    converged: bool
    initial_objective: float = float("nan")


class _NormalOperator:
    """Cholesky solver for (G + lam I) x = c, reusable across c."""

    def __init__(self, G: np.ndarray, lam: float):
        M = G + lam * np.eye(G.shape[0])
        try:
            self._cf = scipy.linalg.cho_factor(M)
        except np.linalg.LinAlgError:
            raise SingularMatrixError(
                "gram matrix is numerically singular and lam = 0; set lam > 0 to regularize"
            ) from None
        ev = scipy.linalg.eigvalsh(M, subset_by_index=[0, 0])[0]
        top = scipy.linalg.eigvalsh(M, subset_by_index=[G.shape[0] - 1, G.shape[0] - 1])[0]
        if ev <= 0:
            raise SingularMatrixError(
                "gram matrix is numerically singular and lam = 0; set lam > 0 to regularize"
            )
        if top / ev > _COND_LIMIT:
            warnings.warn(
                f"normal equations have condition number {top / ev:.3e}",
                ConditioningWarning,
                stacklevel=3,
            )

    def solve(self, c: np.ndarray) -> np.ndarray:
        return scipy.linalg.cho_solve(self._cf, c)


def nonlinear_solve(
    prob: NonlinearResidualProblem | NormalEquationsProblem,
    alpha0: np.ndarray | None = None,
) -> NonlinearResult:
    """Damped fixed-point iteration with a monotonicity guard.

    At iterate alpha_t the alpha-dependent right-hand side is frozen and
    the resulting ridge problem solved for alpha*; the update is
    alpha_t + damping (alpha* - alpha_t), with the damping re-halved up to
    20 times whenever the true objective would increase.  Iteration stops
    once the fixed-point gap |alpha* - alpha_t| falls below
    rel_tol * max(1, |alpha_t|), or at max_iter, or when no halving yields
    descent.  ``iterations`` counts accepted steps.

    The fixed point of the frozen iteration is biased away from the true
    minimizer in proportion to the residual, so a quasi-Newton polish of
    the exact objective runs afterwards (disable with polish=False); its
    result is kept only when it lowers the objective.  The returned
    objective is never above the objective at alpha0.
    """
    if isinstance(prob, NonlinearResidualProblem):
        op = _RidgeOperator(prob.A, prob.lam)
        frozen_target = lambda a: prob.rhs(a)
    elif isinstance(prob, NormalEquationsProblem):
        op = _NormalOperator(prob.gram, prob.lam)
        frozen_target = lambda a: prob.cross(a)
    else:
        raise ConfigError(f"unsupported problem type {type(prob).__name__}")

    alpha = np.zeros(prob.dim) if alpha0 is None else np.asarray(alpha0, dtype=float).reshape(-1)
    if alpha.size != prob.dim:
        raise ConfigError(f"alpha0 has {alpha.size} entries, problem dimension is {prob.dim}")
    if not np.all(np.isfinite(alpha)):
        raise DivergenceError("alpha0 is not finite")

    obj = prob.objective(alpha)
    if not np.isfinite(obj):
        raise DivergenceError("objective is not finite at alpha0")
    initial_obj = obj
    best_alpha, best_obj = alpha.copy(), obj

    iterations = 0
    converged = False
    for _ in range(prob.max_iter):
        target = frozen_target(alpha)
        if not np.all(np.isfinite(target)):
            raise DivergenceError(f"right-hand side became non-finite at iteration {iterations}")
        alpha_star = op.solve(target)
        gap = np.linalg.norm(alpha_star - alpha)
        if gap <= prob.rel_tol * max(1.0, np.linalg.norm(alpha)):
            converged = True
            break
        step = prob.damping
        accepted = False
        for _halving in range(20):
            cand = alpha + step * (alpha_star - alpha)
            cand_obj = prob.objective(cand)
            if np.isfinite(cand_obj) and cand_obj <= obj:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        alpha, obj = cand, cand_obj
        iterations += 1
        if obj < best_obj:
            best_alpha, best_obj = alpha.copy(), obj

    if prob.polish:
        def safe_obj(a: np.ndarray) -> float:
            v = prob.objective(a)
            return v if np.isfinite(v) else 1e300

        res = scipy.optimize.minimize(
            safe_obj,
            best_alpha,
            method="L-BFGS-B",
            options={"maxiter": prob.polish_maxiter},
        )
        if np.all(np.isfinite(res.x)) and res.fun < best_obj:
            best_alpha, best_obj = res.x, float(res.fun)
            converged = converged or bool(res.success)

    return NonlinearResult(best_alpha, best_obj, iterations, converged, initial_obj)
