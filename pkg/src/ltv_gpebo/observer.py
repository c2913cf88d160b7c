"""Coupled run of plant, filter cascade, estimator and reconstruction.

Simulation mode integrates ``[x | G | theta_hat | P]`` with a single RK4 step
so that the filters see the plant output at every stage of the step.
Replay mode integrates ``[G | theta_hat | P]`` and takes the stage values of
(u, y) from a :class:`SignalRecord`. A simulation run records exactly those
stage values, so replaying it reproduces the observer trace bit for bit.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .estimator import EstimatorConfig, ForgettingFactorLS
from .gpebo import CascadeLayout, FilterBankState
from .numerics import DEFAULT_STEP, ContractError, grid_steps, rk4_step
from .plant import DEFAULT_X_BOUND, SystemDefinition, TrueParameters, check_bound

log = logging.getLogger(__name__)

THETA_GUARD = 1e9


class ObserverDivergence(ArithmeticError):
    def __init__(self, t: float, norm: float):
        self.t = t
        self.norm = norm
        super().__init__(f"parameter estimate diverged at t={t!r}: |theta_hat| = {norm:.3g}")


class UnsupportedModeError(ValueError):
    pass


@dataclass
class SignalRecord:
    """Measured (u, y) on the grid plus their values at the inner RK4 stages.

    ``u_stage[i]`` / ``y_stage[i]`` hold the values at ``t_i + h/2`` (twice,
    once per midpoint stage) and ``t_i + h`` as seen by step ``i``.
    """

    h: float
    u: np.ndarray
    y: np.ndarray
    u_stage: np.ndarray
    y_stage: np.ndarray

    @property
    def steps(self) -> int:
        return self.u.size - 1

    @classmethod
    def from_samples(cls, h: float, u, y) -> "SignalRecord":
        """Build stage values from node samples alone (cubic interpolation)."""
        from scipy.interpolate import CubicSpline

        u = np.asarray(u, dtype=float)
        y = np.asarray(y, dtype=float)
        t = np.arange(u.size) * h
        mid = t[:-1] + 0.5 * h
        um = CubicSpline(t, u)(mid)
        ym = CubicSpline(t, y)(mid)
        return cls(h, u, y, np.column_stack([um, um, u[1:]]), np.column_stack([ym, ym, y[1:]]))


@dataclass
class ObserverRun:
    sys: SystemDefinition
    cfg: EstimatorConfig
    T: float
    h: float = DEFAULT_STEP
    truth: TrueParameters | None = None
    signals: SignalRecord | None = None
    x_bound: float = DEFAULT_X_BOUND

    def __post_init__(self):
        if not self.T > 0:
            raise ContractError(f"T must be positive, got {self.T!r}")
        if not 0 < self.h <= self.T:
            raise ContractError(f"h must satisfy 0 < h <= T, got {self.h!r}")
        if self.truth is None and self.signals is None:
            raise ContractError("simulation mode needs truth parameters; replay mode needs signals")
        if self.truth is not None and self.truth.n != self.sys.n:
            raise ContractError(f"truth has dimension {self.truth.n}, system has {self.sys.n}")

    @property
    def simulation(self) -> bool:
        return self.truth is not None


@dataclass
class TraceRecord:
    t: float
    x: np.ndarray | None
    x_hat: np.ndarray
    theta_hat: np.ndarray
    z: float
    psi: np.ndarray
    F_norm: float
    frozen: bool


@dataclass
class Trace:
    """Column-oriented run output; one row per grid node."""

    t: np.ndarray
    x: np.ndarray | None
    x_hat: np.ndarray
    theta_hat: np.ndarray
    z: np.ndarray
    psi: np.ndarray
    F_norm: np.ndarray
    frozen: np.ndarray
    filters: np.ndarray = field(repr=False)
    info: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    signals: SignalRecord | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return self.t.size

    def __getitem__(self, i: int) -> TraceRecord:
        return TraceRecord(
            float(self.t[i]),
            None if self.x is None else self.x[i],
            self.x_hat[i],
            self.theta_hat[i],
            float(self.z[i]),
            self.psi[i],
            float(self.F_norm[i]),
            bool(self.frozen[i]),
        )

    def __iter__(self) -> Iterator[TraceRecord]:
        return (self[i] for i in range(len(self)))

    @property
    def n(self) -> int:
        return self.x_hat.shape[1]

    def filter_bank(self, i: int) -> FilterBankState:
        return FilterBankState.from_stacked(self.filters[i], float(self.t[i]))

    def covariance(self, i: int) -> np.ndarray:
        return np.linalg.inv(self.info[i])


class _Coefficients:
    """A(t), C(t), L(t) and A0(t), memoised for the last few time points."""

    def __init__(self, sys: SystemDefinition):
        self.sys = sys
        self.cache: dict[float, tuple] = {}

    def __call__(self, t: float):
        hit = self.cache.get(t)
        if hit is None:
            A, C, L = self.sys.matrices(t)
            hit = (A, C, L, A - np.outer(L, C))
            if len(self.cache) > 4:
                self.cache.clear()
            self.cache[t] = hit
        return hit


def run_observer(run: ObserverRun, estimator=None) -> Trace:
    """Integrate the adaptive observer over ``[0, T]`` and return its trace.

    ``estimator`` defaults to :class:`ForgettingFactorLS` built from
    ``run.cfg``.
    """
    sys = run.sys
    n = sys.n
    dim = 4 * n
    h = run.h
    steps = grid_steps(run.T, h)
    layout = CascadeLayout(n)
    est = estimator if estimator is not None else ForgettingFactorLS(run.cfg, dim)
    coeffs = _Coefficients(sys)
    f = sys.nonlinearity

    sim = run.simulation
    if not sim and run.signals.steps != steps:
        raise ContractError(f"signal record has {run.signals.steps} steps, run needs {steps}")
    nx = n if sim else 0
    g0, g1 = nx, nx + layout.size
    cols = layout.cols

    if sim:
        p = run.truth
        k, b, m = p.k, p.b, p.m
        u_stage = np.empty((steps, 3))
        y_stage = np.empty((steps, 3))
    else:
        rec = run.signals

    frozen = False
    stage_inputs: list = []

    def deriv(t, s):
        A, C, L, A0 = coeffs(t)
        out = np.empty_like(s)
        if sim:
            x = s[:n]
            y = float(C @ x)
            u = sys.input(t)
            fy = f(y)
            out[:n] = A @ x + k * y + b * u + m * fy
            stage_inputs.append((u, y))
        else:
            u, y = stage_inputs.pop()
            fy = f(y)
        G = s[g0:g1].reshape(n, cols)
        out[g0:g1] = layout.rhs(A0, L, G, y, u, fy).reshape(-1)
        z, psi = layout.regression(C, G, y)
        out[g1:] = est.rhs(s[g1:], psi, z, frozen)
        return out

    state = np.concatenate([run.truth.x0 if sim else np.empty(0), layout.initial(), est.initial()])

    ts = np.arange(steps + 1) * h
    xs = np.empty((steps + 1, n)) if sim else None
    x_hat = np.empty((steps + 1, n))
    thetas = np.empty((steps + 1, dim))
    zs = np.empty(steps + 1)
    psis = np.empty((steps + 1, dim))
    F_norm = np.empty(steps + 1)
    frozen_at = np.zeros(steps + 1, dtype=bool)
    filters = np.empty((steps + 1, n, cols))
    infos = np.empty((steps + 1, dim, dim))
    ys = np.empty(steps + 1)
    us = np.empty(steps + 1)

    for i in range(steps + 1):
        t = i * h
        if i:
            if sim:
                stage_inputs.clear()
            else:
                r = i - 1
                stage_inputs[:] = [
                    (rec.u_stage[r, 2], rec.y_stage[r, 2]),
                    (rec.u_stage[r, 1], rec.y_stage[r, 1]),
                    (rec.u_stage[r, 0], rec.y_stage[r, 0]),
                    (rec.u[r], rec.y[r]),
                ]
            state = rk4_step(deriv, (i - 1) * h, state, h)
            if sim:
                u_stage[i - 1] = [v[0] for v in stage_inputs[1:]]
                y_stage[i - 1] = [v[1] for v in stage_inputs[1:]]

        _, C, _, _ = coeffs(t)
        if sim:
            x = state[:n]
            check_bound(x, t, run.x_bound)
            xs[i] = x
            y = float(C @ x)
            u = sys.input(t)
        else:
            y = rec.y[i]
            u = rec.u[i]
        G = state[g0:g1].reshape(n, cols)
        vec = state[g1:]
        theta = est.theta(vec)
        z, psi = layout.regression(C, G, y)
        frozen_before = frozen
        frozen, F_norm[i] = est.latch(vec, frozen)
        if frozen and not frozen_before:
            log.info("covariance frozen at t=%g (|F| = %.6g)", t, F_norm[i])
        th_norm = float(np.sqrt(theta @ theta))
        if not th_norm <= THETA_GUARD:
            raise ObserverDivergence(t, th_norm)

        ys[i] = y
        us[i] = u
        zs[i] = z
        psis[i] = psi
        thetas[i] = theta
        x_hat[i] = layout.reconstruct(G, theta)
        frozen_at[i] = frozen
        filters[i] = G
        infos[i] = est.info(vec)

    signals = SignalRecord(h, us, ys, u_stage, y_stage) if sim else run.signals
    return Trace(ts, xs, x_hat, thetas, zs, psis, F_norm, frozen_at, filters, infos, ys, signals)


def replay(run: ObserverRun, signals: SignalRecord) -> Trace:
    """Re-run only the observer on recorded signals (no truth)."""
    replay_run = ObserverRun(run.sys, run.cfg, run.T, run.h, truth=None, signals=signals, x_bound=run.x_bound)
    return run_observer(replay_run)


@dataclass
class ErrorSeries:
    t: np.ndarray
    theta: np.ndarray
    x: np.ndarray


def error_series(trace: Trace, truth: TrueParameters | None) -> ErrorSeries:
    """theta_hat_i(t) - Theta_i and x_hat_j(t) - x_j(t) for every node."""
    if trace.x is None or truth is None:
        raise UnsupportedModeError("error series need a simulation-mode trace and the true parameters")
    return ErrorSeries(trace.t, trace.theta_hat - truth.theta, trace.x_hat - trace.x)
