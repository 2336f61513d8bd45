"""SISO nonlinear plant models, simulation and data collection.

Models are state-space systems x+ = f(x, u), y = h(x) with scalar input
and output, f(0, 0) = 0, h(0) = 0, and relative degree equal to the state
dimension n.  For such systems the window y_k ... y_{k+n-1} acts as a
state, and y_{k+n} is a function of that window and u_k alone.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DivergenceError, EvaluationError
from .signals import IoTrajectory, Signal

__all__ = [
    "FlatModel",
    "example1_model",
    "example2_model",
    "simulate",
    "generate_excitation",
    "NoiseSpec",
    "add_noise",
    "collect_trajectory",
    "verify_relative_degree",
    "matching_input_oracle",
]


@dataclass(frozen=True)
class FlatModel:
    """SISO plant x+ = f(x, u), y = h(x) with relative degree n.

    ``flat_inverse(v, xi)`` returns the input u achieving next output
    window value v from the output window xi = (y_k, ..., y_{k+n-1});
    it is the exact inverse of the input-output recursion and is used
    for oracle checks, not by the data-driven algorithms.

    ``state_from_window(xi)`` maps an output window to the state x_k.
    """

    n: int
    f: Callable[[np.ndarray, float], np.ndarray]
    h: Callable[[np.ndarray], float]
    name: str
    flat_inverse: Callable[[float, np.ndarray], float] | None = None
    state_from_window: Callable[[np.ndarray], np.ndarray] | None = None

    @property
    def d(self) -> int:
        """Relative degree; equals n for the systems handled here."""
        return self.n


def example1_model() -> FlatModel:
    """Polynomial second-order plant: x1+ = x2, x2+ = u (x1^2 + 2), y = x1.

    Output recursion: y_{k+2} = u_k (y_k^2 + 2).
    """

    def f(x: np.ndarray, u: float) -> np.ndarray:
        return np.array([x[1], u * (x[0] ** 2 + 2.0)])

    def h(x: np.ndarray) -> float:
        return float(x[0])

    def inv(v: float, xi: np.ndarray) -> float:
        return float(v) / (float(xi[0]) ** 2 + 2.0)

    return FlatModel(2, f, h, "example1", flat_inverse=inv, state_from_window=np.asarray)


def example2_model() -> FlatModel:
    """Trigonometric second-order plant: x1+ = x2, x2+ = sin(u)/(1 + x2^2), y = x1.

    Output recursion: y_{k+2} = sin(u_k)/(1 + y_{k+1}^2).  The inverse is
    the principal arcsin branch, so it recovers inputs in (-pi/2, pi/2).
    """

    def f(x: np.ndarray, u: float) -> np.ndarray:
        return np.array([x[1], np.sin(u) / (1.0 + x[1] ** 2)])

    def h(x: np.ndarray) -> float:
        return float(x[0])

    def inv(v: float, xi: np.ndarray) -> float:
        arg = float(v) * (1.0 + float(xi[1]) ** 2)
        if abs(arg) > 1.0:
            raise EvaluationError(f"next output {v} unreachable from window {xi}: |sin(u)| would be {arg}")
        return float(np.arcsin(arg))

    return FlatModel(2, f, h, "example2", flat_inverse=inv, state_from_window=np.asarray)


def simulate(model: FlatModel, x0: np.ndarray, u: np.ndarray | Signal) -> Signal:
    """Outputs y_0 ... y_{M+n-1} produced by inputs u_0 ... u_{M-1} from x0.

    Because the relative degree is n, the last n outputs do not depend on
    any input beyond u_{M-1}; the state is stepped with zero inputs there.
    Raises DivergenceError naming the first step at which the state or
    output leaves the finite range.
    """
    uu = u.flat if isinstance(u, Signal) else np.asarray(u, dtype=float).reshape(-1)
    x = np.asarray(x0, dtype=float).reshape(-1)
    if x.size != model.n:
        raise EvaluationError(f"initial state has size {x.size}, model order is {model.n}")
    M = uu.size
    y = np.empty(M + model.n)
    # overflow surfaces as a non-finite state, reported with its step index
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(M + model.n):
            yk = model.h(x)
            if not np.isfinite(yk):
                raise DivergenceError(f"output became non-finite at step {k}")
            y[k] = yk
            if k < M + model.n - 1:
                x = np.asarray(model.f(x, uu[k] if k < M else 0.0), dtype=float)
                if not np.all(np.isfinite(x)):
                    raise DivergenceError(f"state became non-finite at step {k + 1}")
    return Signal(y)


def generate_excitation(
    length: int, bounds: tuple[float, float], seed: int | np.random.Generator
) -> np.ndarray:
    """Uniform i.i.d. excitation over [lo, hi]."""
    lo, hi = bounds
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=length)


@dataclass(frozen=True)
class NoiseSpec:
    """Additive output noise, uniform over [lo, hi]."""

    lo: float
    hi: float
    seed: int | np.random.Generator


def add_noise(y: np.ndarray | Signal, spec: NoiseSpec) -> Signal:
    yy = y.flat if isinstance(y, Signal) else np.asarray(y, dtype=float).reshape(-1)
    rng = spec.seed if isinstance(spec.seed, np.random.Generator) else np.random.default_rng(spec.seed)
    return Signal(yy + rng.uniform(spec.lo, spec.hi, size=yy.size))


def collect_trajectory(
    model: FlatModel,
    N: int,
    input_bounds: tuple[float, float],
    seed: int | np.random.Generator,
    x0: np.ndarray | None = None,
    noise: NoiseSpec | None = None,
) -> IoTrajectory:
    """Excite the plant with uniform random input and record N outputs.

    The input has N - n samples; the origin is the default initial state.
    """
    if x0 is None:
        x0 = np.zeros(model.n)
    u = generate_excitation(N - model.n, input_bounds, seed)
    y = simulate(model, x0, u)
    if noise is not None:
        y = add_noise(y, noise)
    return IoTrajectory(Signal(u), y, model.n)


def verify_relative_degree(
    model: FlatModel,
    expected: int | None = None,
    probe_points: int | list[tuple[np.ndarray, float]] = 10,
    fd_step: float = 1e-6,
    seed: int = 0,
) -> bool:
    """Check by central finite differences that the first input reaches the
    output exactly ``expected`` steps later (default: model order n).

    ``probe_points`` is either a count of random (state, input) probes or
    an explicit list of such pairs.  At every probe, d y_j / d u_0 must
    vanish for j < d (tolerance 1e-8 * (1 + |y_j|)); at j = d it must be
    nonzero for at least one probe.  A sampled check, not a proof.
    """
    d = model.n if expected is None else expected
    if isinstance(probe_points, int):
        rng = np.random.default_rng(seed)
        probes = [
            (rng.uniform(-0.5, 0.5, size=model.n), float(rng.uniform(-0.5, 0.5)))
            for _ in range(probe_points)
        ]
    else:
        probes = [(np.asarray(x, dtype=float), float(u)) for x, u in probe_points]

    def y_at(x: np.ndarray, u0: float, j: int) -> float:
        for i in range(j):
            x = np.asarray(model.f(x, u0 if i == 0 else 0.0), dtype=float)
        return model.h(x)

    saw_nonzero = False
    for x, u0 in probes:
        for j in range(1, d + 1):
            plus = y_at(x, u0 + fd_step, j)
            minus = y_at(x, u0 - fd_step, j)
            deriv = (plus - minus) / (2.0 * fd_step)
            if j < d:
                if abs(deriv) > 1e-8 * (1.0 + abs(plus)):
                    return False
            elif abs(deriv) > 1e-6:
                saw_nonzero = True
    return saw_nonzero


def matching_input_oracle(model: FlatModel, y_ref: np.ndarray) -> np.ndarray:
    """Exact input sequence reproducing the reference output window.

    For a reference y_0 ... y_{L-1} the returned u_0 ... u_{L-n-1} satisfy
    the plant's output recursion; requires the model's flat_inverse.
    """
    if model.flat_inverse is None:
        raise EvaluationError(f"model {model.name!r} has no inverse map")
    y_ref = np.asarray(y_ref, dtype=float).reshape(-1)
    n = model.n
    L = y_ref.size
    if L <= n:
        raise EvaluationError(f"reference length {L} must exceed model order {n}")
    return np.array(
        [model.flat_inverse(y_ref[k + n], y_ref[k : k + n]) for k in range(L - n)]
    )
