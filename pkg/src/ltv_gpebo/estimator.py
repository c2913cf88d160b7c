"""Least squares with forgetting factor, and the excitation diagnostic.

The continuous-time law is

    theta_hat' = gamma F Psi' (z - Psi theta_hat)
    F'         = -gamma F Psi' Psi F + beta F    while |F| <= M, else 0
    F(0)       = I / f0

Written this way the covariance equation is a Riccati flow whose stiffness is
``gamma * |Psi|^2 * |F|``; with gamma = 1000, f0 = 0.1 and |Psi(0)| = 1 an
explicit step of 1e-3 is far outside the RK4 stability region. The integrator
therefore carries the information matrix P = F^-1, which obeys the linear
equation

    P' = gamma Psi' Psi - beta P        (P' = 0 once frozen)

and is exactly equivalent in continuous time. ``estimator_deriv`` keeps the
covariance form for direct evaluation and cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gpebo import RegressionSample
from .numerics import ContractError, frobenius_norm, sym_eig_bounds


class EstimationError(ArithmeticError):
    pass


def gain_problems(gamma, beta, f0, M) -> list[tuple[str, str]]:
    out = []
    if not gamma > 0:
        out.append(("gamma", f"must be > 0, got {gamma!r}"))
    if not beta >= 0:
        out.append(("beta", f"must be >= 0, got {beta!r}"))
    if not f0 > 0:
        out.append(("f0", f"must be > 0 because F(0) = I/f0, got {f0!r}"))
    if not M > 0:
        out.append(("M", f"must be > 0, got {M!r}"))
    return out


@dataclass(frozen=True)
class EstimatorConfig:
    gamma: float = 1000.0
    beta: float = 1.0
    f0: float = 0.1
    M: float = 1e12
    theta0: tuple | None = None

    def __post_init__(self):
        problems = gain_problems(self.gamma, self.beta, self.f0, self.M)
        if problems:
            raise ContractError("; ".join(f"{k}: {v}" for k, v in problems))
        if self.theta0 is not None:
            object.__setattr__(self, "theta0", tuple(float(v) for v in self.theta0))

    def initial_theta(self, dim: int) -> np.ndarray:
        if self.theta0 is None:
            return np.zeros(dim)
        if len(self.theta0) != dim:
            raise ContractError(f"theta0 must have {dim} entries, got {len(self.theta0)}")
        return np.array(self.theta0, dtype=float)


@dataclass(frozen=True, eq=False)
class EstimatorState:
    """theta_hat plus the information matrix ``info`` = F^-1."""

    theta_hat: np.ndarray
    info: np.ndarray
    frozen: bool = False
    t: float = 0.0

    @classmethod
    def initial(cls, cfg: EstimatorConfig, dim: int) -> "EstimatorState":
        return cls(cfg.initial_theta(dim), cfg.f0 * np.eye(dim), False, 0.0)

    @classmethod
    def from_covariance(cls, theta_hat, F, frozen: bool = False, t: float = 0.0) -> "EstimatorState":
        F = np.atleast_2d(np.asarray(F, dtype=float))
        return cls(np.atleast_1d(np.asarray(theta_hat, dtype=float)), np.linalg.inv(F), frozen, t)

    @property
    def F(self) -> np.ndarray:
        return np.linalg.inv(self.info)

    @property
    def F_norm(self) -> float:
        return frobenius_norm(self.F)

    def covariance_eig_bounds(self) -> tuple[float, float]:
        """(min, max) eigenvalue of F, computed as reciprocals of those of P.

        Inverting first and then taking eigenvalues loses every eigenvalue
        below eps * |F| when P is badly conditioned.
        """
        lo, hi = sym_eig_bounds(self.info)
        return 1.0 / hi, 1.0 / lo


def estimator_deriv(cfg: EstimatorConfig, st: EstimatorState, s: RegressionSample):
    """(theta_hat', F') from the covariance form of the law."""
    psi = np.asarray(s.psi, dtype=float)
    if psi.size != st.theta_hat.size:
        raise ContractError(f"regressor has {psi.size} entries, estimate has {st.theta_hat.size}")
    F = st.F
    with np.errstate(over="ignore", invalid="ignore"):
        Fpsi = F @ psi
        dtheta = cfg.gamma * Fpsi * (s.z - psi @ st.theta_hat)
        if st.frozen or frobenius_norm(F) > cfg.M:
            dF = np.zeros_like(F)
        else:
            dF = -cfg.gamma * np.outer(Fpsi, Fpsi) + cfg.beta * F
    if not (np.isfinite(dtheta).all() and np.isfinite(dF).all()):
        raise EstimationError(f"non-finite estimator derivative at t={s.t!r}")
    return dtheta, dF


class ForgettingFactorLS:
    """Flat-vector form of the estimator used inside the joint integration.

    Layout: ``[theta_hat (dim) | P row-major (dim*dim)]``. Any object with the
    same methods (``initial``, ``rhs``, ``theta``, ``info``, ``latch``) can be
    plugged into the observer in its place.
    """

    def __init__(self, cfg: EstimatorConfig, dim: int):
        self.cfg = cfg
        self.dim = dim
        self.size = dim + dim * dim

    def initial(self) -> np.ndarray:
        st = EstimatorState.initial(self.cfg, self.dim)
        return np.concatenate([st.theta_hat, st.info.reshape(-1)])

    def theta(self, vec: np.ndarray) -> np.ndarray:
        return vec[:self.dim]

    def info(self, vec: np.ndarray) -> np.ndarray:
        return vec[self.dim:].reshape(self.dim, self.dim)

    def rhs(self, vec: np.ndarray, psi: np.ndarray, z: float, frozen: bool) -> np.ndarray:
        d = self.dim
        theta = vec[:d]
        P = vec[d:].reshape(d, d)
        gamma = self.cfg.gamma
        Fpsi = np.linalg.solve(P, psi)
        out = np.empty(self.size)
        out[:d] = gamma * Fpsi * (z - psi @ theta)
        if frozen:
            out[d:] = 0.0
        else:
            out[d:] = (gamma * (psi[:, None] * psi) - self.cfg.beta * P).reshape(-1)
        return out

    def latch(self, vec: np.ndarray, frozen: bool) -> tuple[bool, float]:
        """Evaluate the freeze test at a grid node. Returns (frozen, |F|_F)."""
        F_norm = frobenius_norm(np.linalg.inv(self.info(vec)))
        return frozen or F_norm > self.cfg.M, F_norm

    def state(self, vec: np.ndarray, frozen: bool, t: float) -> EstimatorState:
        return EstimatorState(self.theta(vec).copy(), self.info(vec).copy(), frozen, t)


def pe_gram(samples: Sequence[RegressionSample]) -> np.ndarray:
    """Trapezoidal approximation of the integral of Psi' Psi over the samples' span."""
    if len(samples) < 2:
        raise ContractError("excitation window needs at least two samples")
    t = np.array([s.t for s in samples], dtype=float)
    psi = np.array([np.asarray(s.psi, dtype=float) for s in samples])
    return gram_from_arrays(t, psi)


def gram_from_arrays(t: np.ndarray, psi: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.size < 2 or not t[-1] > t[0]:
        raise ContractError("excitation window must have positive length")
    dt = np.diff(t)
    if np.ptp(dt) > 1e-9 * dt.mean():
        raise ContractError("excitation window must lie on a uniform grid")
    w = np.full(t.size, dt.mean())
    w[0] *= 0.5
    w[-1] *= 0.5
    G = (psi * w[:, None]).T @ psi
    return 0.5 * (G + G.T)


@dataclass(frozen=True)
class PECertificate:
    is_pe: bool
    alpha1: float
    alpha2: float


def is_pe(gram, alpha2_min: float) -> PECertificate:
    """Excitation verdict: alpha2 = min eig, alpha1 = max eig of the Gram matrix."""
    lo, hi = sym_eig_bounds(gram)
    lo = max(lo, 0.0)
    return PECertificate(lo > 0.0 and lo >= alpha2_min, hi, lo)
