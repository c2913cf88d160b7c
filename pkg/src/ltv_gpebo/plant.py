"""Ground-truth simulation of the nonlinear time-varying plant

    dx/dt = A(t) x + k C(t)'x + b u(t) + m f(C(t)'x),    y = C(t)'x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exprs import Expr, compile_expr, eval_expr, parse_expr
from .numerics import DEFAULT_STEP, ContractError, grid_steps, rk4_step

DEFAULT_X_BOUND = 1e6

NONLINEARITIES: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "tanh": math.tanh,
    "square": lambda y: y * y,
    "identity": lambda y: y,
}


class SimulationError(ArithmeticError):
    def __init__(self, t: float, message: str):
        self.t = t
        super().__init__(f"t={t!r}: {message}")


class BoundedTrajectoryError(SimulationError):
    """The state left the ball ``|x| <= x_bound`` (boundedness assumption)."""


def _as_expr(item) -> Expr:
    if isinstance(item, str):
        return parse_expr(item)
    if isinstance(item, (int, float)):
        return parse_expr(repr(float(item)))
    return item


@dataclass(frozen=True)
class SystemDefinition:
    """Known structure of the plant: A(t), C(t), L(t), f and u(t).

    ``L`` is the output-injection gain that makes ``A - L C'`` uniformly
    stable; it is not used by the plant itself, only by the observer.
    Entries may be given as expression text or already-parsed trees.
    """

    n: int
    A: tuple
    C: tuple
    L: tuple
    f: str = "sin"
    u: Expr = field(default_factory=lambda: parse_expr("0"))

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise ContractError(f"n must be a positive integer, got {self.n!r}")
        A = tuple(tuple(_as_expr(e) for e in row) for row in self.A)
        C = tuple(_as_expr(e) for e in self.C)
        L = tuple(_as_expr(e) for e in self.L)
        if len(A) != self.n or any(len(row) != self.n for row in A):
            raise ContractError(f"A must be {self.n}x{self.n}")
        if len(C) != self.n:
            raise ContractError(f"C must have {self.n} entries, got {len(C)}")
        if len(L) != self.n:
            raise ContractError(f"L must have {self.n} entries, got {len(L)}")
        if self.f not in NONLINEARITIES:
            raise ContractError(f"unknown nonlinearity {self.f!r}; choose from {sorted(NONLINEARITIES)}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "u", _as_expr(self.u))
        object.__setattr__(self, "_fa", [compile_expr(e) for row in A for e in row])
        object.__setattr__(self, "_fc", [compile_expr(e) for e in C])
        object.__setattr__(self, "_fl", [compile_expr(e) for e in L])
        object.__setattr__(self, "_fu", compile_expr(self.u))
        object.__setattr__(self, "_fn", NONLINEARITIES[self.f])

    def matrices(self, t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """A(t), C(t), L(t) as numpy arrays."""
        n = self.n
        A = np.array([g(t) for g in self._fa]).reshape(n, n)
        C = np.array([g(t) for g in self._fc])
        L = np.array([g(t) for g in self._fl])
        return A, C, L

    def input(self, t: float) -> float:
        return self._fu(t)

    def nonlinearity(self, y: float) -> float:
        return self._fn(y)

    def evaluate_exact(self, t: float):
        """Same as :meth:`matrices` via the tree-walking evaluator (slow path)."""
        n = self.n
        A = np.array([[eval_expr(e, t) for e in row] for row in self.A]).reshape(n, n)
        C = np.array([eval_expr(e, t) for e in self.C])
        L = np.array([eval_expr(e, t) for e in self.L])
        return A, C, L


def _vector(v, n: int, name: str) -> np.ndarray:
    a = np.array(v, dtype=float).reshape(-1)
    if a.size != n:
        raise ContractError(f"{name} must have {n} entries, got {a.size}")
    if not np.isfinite(a).all():
        raise ContractError(f"{name} has non-finite entries")
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class TrueParameters:
    """Ground truth used only to simulate the plant and to score estimates."""

    k: np.ndarray
    b: np.ndarray
    m: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        n = np.size(self.x0)
        for name in ("k", "b", "m", "x0"):
            object.__setattr__(self, name, _vector(getattr(self, name), n, name))

    @property
    def n(self) -> int:
        return self.x0.size

    @property
    def theta(self) -> np.ndarray:
        """Regression parameter vector [e(0) | k | b | m] with e(0) = -x0."""
        return np.concatenate([-self.x0, self.k, self.b, self.m])


def plant_deriv(sys: SystemDefinition, p: TrueParameters, x: np.ndarray, t: float) -> np.ndarray:
    A, C, _ = sys.matrices(t)
    y = float(C @ x)
    with np.errstate(over="ignore", invalid="ignore"):
        dx = A @ x + p.k * y + p.b * sys.input(t) + p.m * sys.nonlinearity(y)
    if not np.isfinite(dx).all():
        raise SimulationError(t, "non-finite plant derivative")
    return dx


def output(sys: SystemDefinition, x: np.ndarray, t: float) -> float:
    _, C, _ = sys.matrices(t)
    return float(C @ np.asarray(x, dtype=float))


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    u: np.ndarray
    y: np.ndarray


def check_bound(x: np.ndarray, t: float, x_bound: float):
    norm = float(np.sqrt(x @ x))
    if not norm <= x_bound:
        raise BoundedTrajectoryError(t, f"|x| = {norm:.6g} exceeds bound {x_bound:g}")


def simulate_truth(sys: SystemDefinition, p: TrueParameters, T: float, h: float = DEFAULT_STEP,
                   x_bound: float = DEFAULT_X_BOUND) -> Trajectory:
    """RK4 trajectory of the plant on the grid ``{0, h, ..., T}``."""
    if p.n != sys.n:
        raise ContractError(f"parameter dimension {p.n} does not match system dimension {sys.n}")
    steps = grid_steps(T, h)
    ts = np.arange(steps + 1) * h
    xs = np.empty((steps + 1, sys.n))
    x = p.x0.astype(float)
    for i in range(steps + 1):
        if i:
            x = rk4_step(lambda t, s: plant_deriv(sys, p, s, t), ts[i - 1], x, h)
        check_bound(x, ts[i], x_bound)
        xs[i] = x
    us = np.array([sys.input(t) for t in ts])
    ys = np.array([output(sys, x, t) for x, t in zip(xs, ts)])
    return Trajectory(ts, xs, us, ys)


def benchmark_system() -> tuple[SystemDefinition, TrueParameters]:
    """The two-state benchmark: A0 = A - L C' = [[0, 1], [-9, 0]], f = sin."""
    sys = SystemDefinition(
        n=2,
        A=(("2 - sin(t)", "1"), ("-8 + cos(t)", "0")),
        C=("1", "0"),
        L=("2 - sin(t)", "1 + cos(t)"),
        f="sin",
        u="sin(t)",
    )
    truth = TrueParameters(k=[-1.0, 3.0], b=[1.0, 2.0], m=[-4.0, 4.0], x0=[-3.0, -2.0])
    return sys, truth
