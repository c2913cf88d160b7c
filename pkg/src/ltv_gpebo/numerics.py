"""Fixed-step integration and small dense matrix helpers.

Everything here works on plain numpy arrays. State vectors are flat 1-D
arrays whose packing layout is owned by the caller.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

DEFAULT_STEP = 1e-3

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


class IntegrationError(ArithmeticError):
    """A derivative evaluation produced NaN or Inf."""

    def __init__(self, t: float, index: int, message: str = ""):
        self.t = t
        self.index = index
        text = f"non-finite derivative at t={t!r}, state index {index}"
        if message:
            text = f"{text}: {message}"
        super().__init__(text)


class ContractError(ValueError):
    """An argument violates a documented precondition."""


class NumericalError(ArithmeticError):
    """An iterative routine failed to converge."""


Deriv = Callable[[float, np.ndarray], np.ndarray]


def _checked(deriv: Deriv, t: float, state: np.ndarray) -> np.ndarray:
    d = deriv(t, state)
    if not np.isfinite(d).all():
        bad = int(np.flatnonzero(~np.isfinite(d))[0])
        raise IntegrationError(t, bad)
    return d


def rk4_step(deriv: Deriv, t: float, state: np.ndarray, h: float) -> np.ndarray:
    """Advance ``state`` from ``t`` to ``t + h`` with classical Runge-Kutta.

    ``deriv(t, x)`` must return an array shaped like ``x``. Raises
    :class:`IntegrationError` if any stage derivative is non-finite.
    """
    if not h > 0:
        raise ContractError(f"step size must be positive, got {h!r}")
    half = 0.5 * h
    k1 = _checked(deriv, t, state)
    k2 = _checked(deriv, t + half, state + half * k1)
    k3 = _checked(deriv, t + half, state + half * k2)
    k4 = _checked(deriv, t + h, state + h * k3)
    return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(deriv: Deriv, state0, T: float, h: float = DEFAULT_STEP) -> tuple[np.ndarray, np.ndarray]:
    """Integrate on the uniform grid ``k*h``, k = 0..T/h. Returns (t, states)."""
    n_steps = grid_steps(T, h)
    state = np.asarray(state0, dtype=float).copy()
    out = np.empty((n_steps + 1, state.size))
    out[0] = state
    for i in range(n_steps):
        state = rk4_step(deriv, i * h, state, h)
        out[i + 1] = state
    return np.arange(n_steps + 1) * h, out


def grid_steps(T: float, h: float) -> int:
    """Number of steps of size ``h`` spanning ``[0, T]``.

    ``T/h`` has to be an integer up to rounding.
    """
    if not (h > 0 and T > 0):
        raise ContractError(f"need T > 0 and h > 0, got T={T!r}, h={h!r}")
    if h > T:
        raise ContractError(f"step h={h!r} exceeds horizon T={T!r}")
    ratio = T / h
    n = int(round(ratio))
    if abs(ratio - n) > 1e-9 * max(1.0, ratio):
        raise ContractError(f"T/h = {ratio!r} is not an integer")
    return n


def frobenius_norm(m) -> float:
    a = np.asarray(m, dtype=float)
    return float(math.sqrt(float(np.sum(a * a))))


def sym_eig_bounds(m) -> tuple[float, float]:
    """Smallest and largest eigenvalue of a symmetric matrix.

    Cyclic Jacobi rotations. A pair is skipped once its off-diagonal entry is
    below ``JACOBI_TOL`` relative to the geometric mean of the matching
    diagonal entries, which keeps small eigenvalues of positive definite
    matrices accurate to high relative precision.
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {a.shape}")
    norm = frobenius_norm(a)
    if frobenius_norm(a - a.T) > 1e-9 * (1.0 + norm):
        raise ContractError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    if n == 1:
        return float(a[0, 0]), float(a[0, 0])

    floor = np.finfo(float).tiny / np.finfo(float).eps
    for _ in range(JACOBI_MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= max(JACOBI_TOL * math.sqrt(abs(a[p, p] * a[q, q])), floor):
                    continue
                rotated = True
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                tan = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                cos = 1.0 / math.hypot(1.0, tan)
                sin = tan * cos
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = cos * rp - sin * rq
                a[q, :] = sin * rp + cos * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = cos * cp - sin * cq
                a[:, q] = sin * cp + cos * cq
                a[p, q] = a[q, p] = 0.0
        if not rotated:
            d = np.diag(a)
            return float(d.min()), float(d.max())
    raise NumericalError(f"Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps")
