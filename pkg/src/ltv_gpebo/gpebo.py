"""Output-driven filter cascade, measurable regression and state reconstruction.

With A0(t) = A(t) - L(t)C(t)' the filters

    xi'   = A0 xi  + L y        xi(0)  = 0
    eta'  = A0 eta + I y        eta(0) = 0
    zeta' = A0 zeta + I u       zeta(0) = 0
    rho'  = A0 rho + I f(y)     rho(0) = 0
    Phi'  = A0 Phi              Phi(0) = I

make e = xi + eta k + zeta b + rho m - x obey e' = A0 e, i.e. e(t) = Phi(t) e(0)
with e(0) = -x(0). Multiplying by C' gives the linear regression
z = Psi Theta with z = y - C'xi, Psi = [-C'Phi, C'eta, C'zeta, C'rho] and
Theta = [e(0), k, b, m].

Internally the five filters are stacked column-wise into one n x (1 + 4n)
matrix ``G = [xi | Phi | eta | zeta | rho]``; that ordering puts the Phi block
first so that ``Psi = C'G[:, 1:]`` up to the sign of the first n entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import ContractError, frobenius_norm
from .plant import SystemDefinition


@dataclass(frozen=True, eq=False)
class FilterBankState:
    xi: np.ndarray
    eta: np.ndarray
    zeta: np.ndarray
    rho: np.ndarray
    phi: np.ndarray
    t: float = 0.0

    @classmethod
    def initial(cls, n: int) -> "FilterBankState":
        z = np.zeros((n, n))
        return cls(np.zeros(n), z, z.copy(), z.copy(), np.eye(n), 0.0)

    @property
    def n(self) -> int:
        return self.xi.size

    def stacked(self) -> np.ndarray:
        return np.column_stack([self.xi, self.phi, self.eta, self.zeta, self.rho])

    @classmethod
    def from_stacked(cls, G: np.ndarray, t: float = 0.0) -> "FilterBankState":
        n = G.shape[0]
        G = np.asarray(G, dtype=float).reshape(n, 1 + 4 * n)
        return cls(
            xi=G[:, 0].copy(),
            phi=G[:, 1:1 + n].copy(),
            eta=G[:, 1 + n:1 + 2 * n].copy(),
            zeta=G[:, 1 + 2 * n:1 + 3 * n].copy(),
            rho=G[:, 1 + 3 * n:].copy(),
            t=t,
        )


@dataclass(frozen=True, eq=False)
class RegressionSample:
    t: float
    z: float
    psi: np.ndarray


def theta_signs(n: int) -> np.ndarray:
    """+-1 mask mapping ``C'G[:, 1:]`` onto Psi (and Theta onto the G columns)."""
    return np.concatenate([-np.ones(n), np.ones(3 * n)])


class CascadeLayout:
    """Index bookkeeping for the stacked filter matrix of dimension ``n``."""

    def __init__(self, n: int):
        self.n = n
        self.cols = 1 + 4 * n
        self.size = n * self.cols
        self.signs = theta_signs(n)
        # flat offsets of the identity-forced diagonals inside G
        diag = np.arange(n) * self.cols
        self.eta_diag = diag + 1 + n + np.arange(n)
        self.zeta_diag = diag + 1 + 2 * n + np.arange(n)
        self.rho_diag = diag + 1 + 3 * n + np.arange(n)

    def initial(self) -> np.ndarray:
        G = np.zeros((self.n, self.cols))
        G[:, 1:1 + self.n] = np.eye(self.n)
        return G.reshape(-1)

    def rhs(self, A0: np.ndarray, L: np.ndarray, G: np.ndarray, y: float, u: float, fy: float) -> np.ndarray:
        dG = A0 @ G
        dG[:, 0] += L * y
        flat = dG.reshape(-1)
        flat[self.eta_diag] += y
        flat[self.zeta_diag] += u
        flat[self.rho_diag] += fy
        return dG

    def regression(self, C: np.ndarray, G: np.ndarray, y: float) -> tuple[float, np.ndarray]:
        row = C @ G
        return y - row[0], row[1:] * self.signs

    def reconstruct(self, G: np.ndarray, theta_hat: np.ndarray) -> np.ndarray:
        return G[:, 0] + G[:, 1:] @ (self.signs * theta_hat)


def a0_at(sys: SystemDefinition, t: float) -> np.ndarray:
    """A0(t) = A(t) - L(t) C(t)'."""
    A, C, L = sys.matrices(t)
    return A - np.outer(L, C)


def filter_deriv(sys: SystemDefinition, fb: FilterBankState, y: float, u: float, t: float) -> FilterBankState:
    """Time derivative of every filter, returned as a FilterBankState.

    Depends on the measured ``y`` and the known ``u`` only; the plant state is
    never an input.
    """
    n = sys.n
    if fb.n != n:
        raise ContractError(f"filter bank has dimension {fb.n}, system has {n}")
    A, C, L = sys.matrices(t)
    A0 = A - np.outer(L, C)
    layout = CascadeLayout(n)
    dG = layout.rhs(A0, L, fb.stacked(), y, u, sys.nonlinearity(y))
    if not np.isfinite(dG).all():
        r, c = np.argwhere(~np.isfinite(dG))[0]
        raise ArithmeticError(f"non-finite filter derivative in {_component(n, c)} at t={t!r} (row {r})")
    return FilterBankState.from_stacked(dG, t)


def _component(n: int, col: int) -> str:
    if col == 0:
        return "xi"
    return ("phi", "eta", "zeta", "rho")[(col - 1) // n]


def regression_sample(sys: SystemDefinition, fb: FilterBankState, y: float) -> RegressionSample:
    _, C, _ = sys.matrices(fb.t)
    z, psi = CascadeLayout(sys.n).regression(C, fb.stacked(), y)
    return RegressionSample(fb.t, float(z), psi)


def reconstruct_state(fb: FilterBankState, theta_hat) -> np.ndarray:
    """x_hat = xi - Phi theta + eta k + zeta b + rho m for theta_hat = [theta|k|b|m]."""
    n = fb.n
    th = np.asarray(theta_hat, dtype=float).reshape(-1)
    if th.size != 4 * n:
        raise ContractError(f"theta_hat must have {4 * n} entries, got {th.size}")
    return (fb.xi - fb.phi @ th[:n] + fb.eta @ th[n:2 * n]
            + fb.zeta @ th[2 * n:3 * n] + fb.rho @ th[3 * n:])


def phi_within_bound(fb: FilterBankState, c1: float) -> bool:
    """Uniform-stability monitor: |Phi|_F <= c1 sqrt(n)."""
    return frobenius_norm(fb.phi) <= c1 * np.sqrt(fb.n)
