"""Trajectory-membership tests.

A candidate window is a trajectory of the unknown plant exactly when it
is a linear combination of time-shifted windows of recorded data.  For
LTI plants the stacked input/output Hankel matrices carry this; for flat
nonlinear plants the input block is replaced by the Hankel matrix of the
basis-function sequence.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .basis import BasisSet, build_psi_hankel, eval_psi_hat
from .errors import DimensionError, PersistencyWarning
from .signals import IoTrajectory, Signal, build_hankel, pe_check

__all__ = [
    "MembershipVerdict",
    "DataLengthCheck",
    "lti_membership",
    "flat_membership",
    "flat_stack",
    "candidate_stack",
    "data_length_check",
]


@dataclass(frozen=True)
class MembershipVerdict:
    """Minimum-norm combination coefficients together with the fit residual."""

    alpha: np.ndarray
    residual: float
    is_member: bool


class DataLengthCheck(NamedTuple):
    feasible: bool
    required_N: int


def data_length_check(N: int, L: int, n: int, r: int) -> DataLengthCheck:
    """Feasibility of the excitation-rank requirement: N >= (r+1)L + n - 1.

    A sequence of r-dimensional samples can only be persistently exciting
    of order L when its depth-L Hankel matrix has at least rL columns.
    """
    if min(N, L, n, r) < 1 or L <= n:
        raise DimensionError(f"need positive sizes with L > n, got N={N} L={L} n={n} r={r}")
    required = (r + 1) * L + n - 1
    return DataLengthCheck(N >= required, required)


def _min_norm_verdict(M: np.ndarray, rhs: np.ndarray, tol: float | None) -> MembershipVerdict:
    if tol is None:
        tol = 1e-6 * (1.0 + float(np.linalg.norm(rhs)))
    alpha = np.linalg.lstsq(M, rhs, rcond=None)[0]
    residual = float(np.linalg.norm(M @ alpha - rhs))
    return MembershipVerdict(alpha, residual, residual <= tol)


def lti_membership(
    u: np.ndarray | Signal,
    y: np.ndarray | Signal,
    n: int,
    L: int,
    u_bar: np.ndarray,
    y_bar: np.ndarray,
    tol: float | None = None,
    verify_pe: bool = True,
) -> MembershipVerdict:
    """Is (u_bar, y_bar) a length-L window of the LTI plant behind (u, y)?

    Stacks [H_L(u); H_L(y)] alpha = [u_bar; y_bar] and returns the
    minimum-norm least-squares alpha.  The data input must be
    persistently exciting of order L + n for the span to be complete; a
    violation is reported as a warning since the residual remains
    informative.
    """
    u = u if isinstance(u, Signal) else Signal(np.asarray(u, dtype=float))
    y = y if isinstance(y, Signal) else Signal(np.asarray(y, dtype=float))
    u_bar = np.asarray(u_bar, dtype=float).reshape(-1)
    y_bar = np.asarray(y_bar, dtype=float).reshape(-1)
    if u.length != y.length:
        raise DimensionError(f"data lengths differ: {u.length} inputs, {y.length} outputs")
    if u_bar.size != L or y_bar.size != L:
        raise DimensionError(
            f"candidate lengths ({u_bar.size}, {y_bar.size}) must both equal L={L}"
        )
    if verify_pe:
        pe = pe_check(u, L + n)
        if not pe.order_satisfied:
            warnings.warn(
                f"data input is not persistently exciting of order L+n={L + n} "
                f"(rank {pe.numerical_rank})",
                PersistencyWarning,
                stacklevel=2,
            )
    M = np.vstack([build_hankel(u, L).entries, build_hankel(y, L).entries])
    return _min_norm_verdict(M, np.concatenate([u_bar, y_bar]), tol)


def flat_stack(traj: IoTrajectory, basis: BasisSet, L: int) -> np.ndarray:
    """The stacked data matrix [H_{L-n}(Psi); H_L(y)], shape
    (r(L-n) + L) x (N-L+1)."""
    H_psi = build_psi_hankel(traj, basis, L)
    H_y = build_hankel(traj.y, L)
    return np.vstack([H_psi.entries, H_y.entries])


def candidate_stack(basis: BasisSet, u_bar: np.ndarray, y_bar: np.ndarray) -> np.ndarray:
    """Right-hand side [Psi(u_bar, y_bar windows); y_bar] for a candidate
    window of length L = len(u_bar) + n."""
    u_bar = np.asarray(u_bar, dtype=float).reshape(-1)
    y_bar = np.asarray(y_bar, dtype=float).reshape(-1)
    n = basis.n
    if y_bar.size != u_bar.size + n:
        raise DimensionError(
            f"candidate output length {y_bar.size} must equal input length + n = {u_bar.size + n}"
        )
    xi = np.lib.stride_tricks.sliding_window_view(y_bar, n)[: u_bar.size]
    psi = eval_psi_hat(basis, u_bar, xi)
    return np.concatenate([psi.reshape(-1), y_bar])


def flat_membership(
    traj: IoTrajectory,
    basis: BasisSet,
    L: int,
    u_bar: np.ndarray,
    y_bar: np.ndarray,
    tol: float | None = None,
    verify_pe: bool = True,
) -> MembershipVerdict:
    """Is (u_bar, y_bar) a length-L trajectory window of the flat plant
    behind the recorded data?

    Solves [H_{L-n}(Psi(u,y)); H_L(y)] alpha = [Psi(u_bar, y_bar); y_bar]
    in the minimum-norm least-squares sense.  Completeness of the span
    requires the Psi sequence to be persistently exciting of order L;
    violations warn rather than fail.
    """
    n = traj.n
    u_bar = np.asarray(u_bar, dtype=float).reshape(-1)
    y_bar = np.asarray(y_bar, dtype=float).reshape(-1)
    if u_bar.size != L - n or y_bar.size != L:
        raise DimensionError(
            f"candidate lengths ({u_bar.size}, {y_bar.size}) must be (L-n, L) = ({L - n}, {L})"
        )
    if verify_pe:
        from .basis import psi_hat_signal

        pe = pe_check(psi_hat_signal(traj, basis), L)
        if not pe.order_satisfied:
            warnings.warn(
                f"basis-function sequence is not persistently exciting of order L={L} "
                f"(rank {pe.numerical_rank} of {basis.r * L})"
                + (f": {pe.diagnostic}" if pe.diagnostic else ""),
                PersistencyWarning,
                stacklevel=2,
            )
    M = flat_stack(traj, basis, L)
    return _min_norm_verdict(M, candidate_stack(basis, u_bar, y_bar), tol)
