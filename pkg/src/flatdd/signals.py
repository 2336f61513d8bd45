"""Trajectory data model, Hankel matrices, excitation checks and CSV I/O."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError, ParseError

__all__ = [
    "Signal",
    "IoTrajectory",
    "HankelMatrix",
    "PeResult",
    "build_hankel",
    "pe_check",
    "read_trajectory",
    "write_trajectory",
    "read_signal_csv",
    "write_signal_csv",
]

# Floats are written with 17 significant digits, enough for a lossless
# decimal round trip of binary64.
_FLOAT_FMT = "{:.17g}"


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Signal:
    """Finite sequence of real samples, each of fixed width ``sigma``.

    ``values`` has shape ``(N, sigma)``; row k is the sample z_k.  The
    stacked vector of the sequence is ``values.reshape(-1)``.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v.reshape(-1, 1)
        if v.ndim != 2:
            raise DimensionError(f"signal samples must be scalars or fixed-width vectors, got ndim={v.ndim}")
        if v.shape[0] < 1 or v.shape[1] < 1:
            raise DimensionError(f"signal needs N >= 1 and sigma >= 1, got shape {v.shape}")
        object.__setattr__(self, "values", _freeze(v))

    @property
    def length(self) -> int:
        return self.values.shape[0]

    @property
    def sigma(self) -> int:
        return self.values.shape[1]

    @property
    def flat(self) -> np.ndarray:
        """1-D view of a scalar signal."""
        if self.sigma != 1:
            raise DimensionError(f"flat view requires sigma=1, got sigma={self.sigma}")
        return self.values[:, 0]

    def window(self, l: int, j: int) -> "Signal":
        """Samples z_l ... z_j (inclusive), requiring 0 <= l < j <= N-1."""
        if not (0 <= l < j <= self.length - 1):
            raise DimensionError(f"window [{l},{j}] out of range for length {self.length}")
        return Signal(self.values[l : j + 1])

    def stacked(self) -> np.ndarray:
        """The stacked column vector [z_0; z_1; ...; z_{N-1}]."""
        return self.values.reshape(-1)


def as_signal(z: "Signal | np.ndarray | list") -> Signal:
    return z if isinstance(z, Signal) else Signal(np.asarray(z, dtype=float))


@dataclass(frozen=True)
class IoTrajectory:
    """Paired input/output record of a system of order ``n``.

    The output carries ``n`` more samples than the input: the response to
    u_0 ... u_{N-n-1} is observed as y_0 ... y_{N-1}.
    """

    u: Signal
    y: Signal
    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DimensionError(f"system order must be >= 1, got n={self.n}")
        if self.u.sigma != 1 or self.y.sigma != 1:
            raise DimensionError("trajectory signals must be scalar")
        if self.y.length != self.u.length + self.n:
            raise FormatError(
                f"length(y)={self.y.length} must equal length(u)+n={self.u.length + self.n}"
            )

    @property
    def N(self) -> int:
        return self.y.length

    @classmethod
    def from_arrays(cls, u, y, n: int) -> "IoTrajectory":
        return cls(as_signal(u), as_signal(y), n)


@dataclass(frozen=True)
class HankelMatrix:
    """Depth-``depth`` block-Hankel arrangement of a length-``source_length``
    sequence with ``sigma``-dimensional samples.

    ``entries`` has shape (sigma*depth) x (source_length - depth + 1);
    column j stacks z_j ... z_{j+depth-1}.
    """

    entries: np.ndarray
    depth: int
    sigma: int
    source_length: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", _freeze(self.entries))

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    def block(self, i: int, j: int) -> np.ndarray:
        """Block entry (i, j), i.e. the sample z_{i+j}."""
        return self.entries[i * self.sigma : (i + 1) * self.sigma, j]

    def block_row(self, i: int) -> np.ndarray:
        """Block row i, the sigma x cols matrix [z_i ... z_{i+cols-1}]."""
        return self.entries[i * self.sigma : (i + 1) * self.sigma, :]


def build_hankel(z: Signal | np.ndarray, L: int) -> HankelMatrix:
    """Hankel matrix of depth L whose column j stacks z_j ... z_{j+L-1}."""
    z = as_signal(z)
    N = z.length
    if not (1 <= L <= N):
        raise DimensionError(f"Hankel depth L={L} out of range for sequence length N={N}")
    cols = N - L + 1
    H = np.empty((z.sigma * L, cols))
    for i in range(L):
        H[i * z.sigma : (i + 1) * z.sigma, :] = z.values[i : i + cols, :].T
    return HankelMatrix(H, depth=L, sigma=z.sigma, source_length=N)


@dataclass(frozen=True)
class PeResult:
    order_satisfied: bool
    numerical_rank: int
    diagnostic: str | None = field(default=None)


def pe_check(z: Signal | np.ndarray, L: int, rank_tol: float | None = None) -> PeResult:
    """Persistency-of-excitation check of order L.

    The sequence is persistently exciting of order L when its depth-L
    Hankel matrix has full row rank sigma*L.  The numerical rank is the
    number of singular values above ``rank_tol``; the default threshold is
    max(rows, cols) * eps * s_max.
    """
    z = as_signal(z)
    if rank_tol is not None and rank_tol <= 0:
        raise DimensionError(f"rank_tol must be positive, got {rank_tol}")
    H = build_hankel(z, L)
    full = z.sigma * L
    s = np.linalg.svd(H.entries, compute_uv=False)
    if rank_tol is None:
        rank_tol = max(H.entries.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    rank = int(np.count_nonzero(s > rank_tol))
    if H.cols < full:
        return PeResult(
            False,
            rank,
            diagnostic=f"sequence too short: {H.cols} columns < sigma*L = {full}",
        )
    return PeResult(rank == full, rank)


# ---------------------------------------------------------------------------
# CSV interchange
#
# Trajectory files: header "k,u,y", one row per output sample, u cells empty
# for the final n rows, floats with 17 significant digits, LF line endings.
# Signal files: header "k,<name>", used for bare input/reference sequences.
# ---------------------------------------------------------------------------


def write_trajectory(path: str | Path, traj: IoTrajectory) -> None:
    u = traj.u.flat
    y = traj.y.flat
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "u", "y"])
        for k in range(traj.N):
            ucell = _FLOAT_FMT.format(u[k]) if k < u.size else ""
            w.writerow([k, ucell, _FLOAT_FMT.format(y[k])])


def _parse_cell(cell: str, row: int, col: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ParseError(f"non-numeric {col} cell at row {row}: {cell!r}") from None


def read_trajectory(path: str | Path) -> IoTrajectory:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"empty trajectory file: {path}")
    if [c.strip() for c in rows[0]] != ["k", "u", "y"]:
        raise FormatError(f"expected header 'k,u,y', got {rows[0]!r}")
    u_vals: list[float] = []
    y_vals: list[float] = []
    n_trailing_empty = 0
    for idx, row in enumerate(rows[1:]):
        if len(row) != 3:
            raise FormatError(f"row {idx} has {len(row)} cells, expected 3")
        _parse_cell(row[0], idx, "k")
        if row[1].strip() == "":
            n_trailing_empty += 1
        else:
            if n_trailing_empty:
                raise FormatError(f"non-empty u cell at row {idx} after empty u cells")
            u_vals.append(_parse_cell(row[1], idx, "u"))
        y_vals.append(_parse_cell(row[2], idx, "y"))
    if not y_vals:
        raise ParseError(f"no data rows in {path}")
    if n_trailing_empty == 0:
        raise FormatError("no trailing empty u cells; cannot infer system order n")
    return IoTrajectory.from_arrays(np.array(u_vals), np.array(y_vals), n_trailing_empty)


def write_signal_csv(path: str | Path, name: str, values: np.ndarray) -> None:
    values = np.asarray(values, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", name])
        for k, v in enumerate(values):
            w.writerow([k, _FLOAT_FMT.format(v)])


def read_signal_csv(path: str | Path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"empty signal file: {path}")
    header = [c.strip() for c in rows[0]]
    if len(header) != 2 or header[0] != "k":
        raise FormatError(f"expected header 'k,<name>', got {rows[0]!r}")
    out = [_parse_cell(row[1], idx, header[1]) for idx, row in enumerate(rows[1:]) if row]
    if not out:
        raise ParseError(f"no data rows in {path}")
    return np.array(out)
