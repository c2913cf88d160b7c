"""Identity checks that hold exactly in continuous time for a simulation run.

Both use the true parameters, so they isolate the filter cascade and the
integrator from the estimator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .gpebo import CascadeLayout, a0_at
from .observer import Trace
from .plant import SystemDefinition, TrueParameters

REFERENCE_STEP = 1e-3
REFERENCE_TOL = 1e-6


def oracle_tolerance(h: float) -> float:
    """1e-6 at h = 1e-3, scaled with the fourth power of the step."""
    return REFERENCE_TOL * (h / REFERENCE_STEP) ** 4


def regression_residual(trace: Trace, truth: TrueParameters) -> np.ndarray:
    """|z(t) - Psi(t) Theta| at every node."""
    return np.abs(trace.z - trace.psi @ truth.theta)


def reconstruction_error(trace: Trace, truth: TrueParameters) -> np.ndarray:
    """max_j |x_hat_j - x_j| with the estimate replaced by the true Theta."""
    layout = CascadeLayout(trace.n)
    x_true_theta = trace.filters[:, :, 0] + trace.filters[:, :, 1:] @ (layout.signs * truth.theta)
    return np.abs(x_true_theta - trace.x).max(axis=1)


def constant_a0(sys: SystemDefinition, T: float, samples: int = 17) -> np.ndarray | None:
    """A0 if it is numerically constant on [0, T], else None."""
    ref = a0_at(sys, 0.0)
    for t in np.linspace(0.0, T, samples)[1:]:
        if not np.allclose(a0_at(sys, float(t)), ref, rtol=0, atol=1e-12 * (1 + np.abs(ref).max())):
            return None
    return ref


def phi_closed_form_error(trace: Trace, A0: np.ndarray, stride: int = 1) -> float:
    """sup_t max |Phi(t) - expm(A0 t)| over every ``stride``-th node."""
    n = trace.n
    worst = 0.0
    for i in range(0, len(trace), stride):
        phi = trace.filters[i, :, 1:1 + n]
        worst = max(worst, float(np.abs(phi - expm(A0 * trace.t[i])).max()))
    return worst


@dataclass
class OracleReport:
    max_residual: float
    max_reconstruction: float
    max_phi_norm: float
    phi_closed_form: float | None
    tolerance: float

    @property
    def passed(self) -> bool:
        checks = [self.max_residual, self.max_reconstruction]
        if self.phi_closed_form is not None:
            checks.append(self.phi_closed_form)
        return all(v <= self.tolerance for v in checks)


def oracle_report(sys: SystemDefinition, trace: Trace, truth: TrueParameters, h: float) -> OracleReport:
    n = trace.n
    phi = trace.filters[:, :, 1:1 + n]
    A0 = constant_a0(sys, float(trace.t[-1]))
    return OracleReport(
        max_residual=float(regression_residual(trace, truth).max()),
        max_reconstruction=float(reconstruction_error(trace, truth).max()),
        max_phi_norm=float(np.sqrt((phi ** 2).sum(axis=(1, 2))).max()),
        phi_closed_form=None if A0 is None else phi_closed_form_error(trace, A0, stride=10),
        tolerance=max(oracle_tolerance(h), REFERENCE_TOL),
    )
