"""Unconditioned (a priori) dynamics of the monitored atom.

The mean state eta_t obeys d eta = L eta dt with a Liouvillian L that
already contains the feedback terms.  In Bloch coordinates this is the
affine ODE dx/dt = -A x + b; both representations are implemented and
cross-checked in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import ExceptionalCase, SingularDrift
from .model import (
    BlochVector,
    ControlConfig,
    IDENTITY2,
    P_MINUS,
    P_PLUS,
    SIGMA_MINUS,
    SIGMA_PLUS,
    SIGMA_X,
    SIGMA_Z,
    sigma_phase,
    validate_config,
)

EXCEPTIONAL_TOL = 1e-10
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class DriftModel:
    """Affine Bloch dynamics dx/dt = -A x + b."""

    A: np.ndarray
    b: np.ndarray
    delta_omega_c: float


def build_drift(cfg: ControlConfig) -> DriftModel:
    """Assemble the drift matrix A, the constant drift b and the shifted
    detuning for a validated configuration."""
    validate_config(cfg)
    gamma, kd, nbar = cfg.gamma, cfg.k_d, cfg.n_bar
    om, dw = cfg.omega_rabi, cfg.delta_omega
    a1, th1 = cfg.alpha1(), cfg.theta1
    c, phi = cfg.c, cfg.phi

    dwc = dw + c * gamma * a1 * np.cos(th1 - phi)
    off = gamma * (c * a1 * np.cos(th1 + phi) + c ** 2 * np.sin(2 * phi))
    a11 = gamma * (0.5 + nbar + 2 * kd
                   + 2 * c * a1 * np.cos(th1) * np.sin(phi)
                   + 2 * c ** 2 * np.sin(phi) ** 2)
    a22 = gamma * (0.5 + nbar + 2 * kd
                   - 2 * c * a1 * np.sin(th1) * np.cos(phi)
                   + 2 * c ** 2 * np.cos(phi) ** 2)
    a33 = gamma * (1 + 2 * nbar - 2 * c * a1 * np.sin(th1 - phi) + 2 * c ** 2)
    A = np.array([
        [a11, dwc - off, 0.0],
        [-dwc - off, a22, om],
        [0.0, -om, a33],
    ])
    b = np.array([0.0, 0.0, -gamma * (1 - 2 * c * a1 * np.sin(th1 - phi))])
    return DriftModel(A=A, b=b, delta_omega_c=float(dwc))


def apply_liouvillian(cfg: ControlConfig, rho: np.ndarray) -> np.ndarray:
    """Apply the generator of the mean dynamics to a 2x2 matrix.

    Assembled term by term: Hamiltonian part with the shifted detuning,
    dephasing, thermal absorption and emission corrected for the fed-back
    fraction, the feedback sandwich with K = alpha_1 sigma_- - i c
    sigma_phi, and its anticommutator counterweight.  The result is
    traceless and Hermitian for Hermitian input.
    """
    validate_config(cfg)
    rho = np.asarray(rho, dtype=complex)
    gamma, kd, nbar = cfg.gamma, cfg.k_d, cfg.n_bar
    a1, th1 = cfg.alpha1(), cfg.theta1
    c, phi = cfg.c, cfg.phi

    dwc = cfg.delta_omega + c * gamma * a1 * np.cos(th1 - phi)
    ham = dwc / 2 * SIGMA_Z + cfg.omega_rabi / 2 * SIGMA_X
    out = -1j * (ham @ rho - rho @ ham)
    out += gamma * kd * (SIGMA_Z @ rho @ SIGMA_Z - rho)
    out += gamma * nbar * (
        SIGMA_PLUS @ rho @ SIGMA_MINUS - 0.5 * (P_MINUS @ rho + rho @ P_MINUS)
    )
    out += gamma * (nbar + 1 - a1 ** 2) * (
        SIGMA_MINUS @ rho @ SIGMA_PLUS - 0.5 * (P_PLUS @ rho + rho @ P_PLUS)
    )
    k_op = a1 * np.exp(1j * th1) * SIGMA_MINUS - 1j * c * sigma_phase(phi)
    out += gamma * (k_op @ rho @ k_op.conj().T)
    anti = (a1 ** 2 - 2 * c * a1 * np.sin(th1 - phi)) * P_PLUS + c ** 2 * IDENTITY2
    out -= gamma / 2 * (anti @ rho + rho @ anti)
    return out


def exceptional_conditions(cfg: ControlConfig):
    """Evaluate the six equalities that make det A vanish.

    Returns a list of (description, satisfied, residual) triples; the
    drift matrix is singular by construction iff all six hold.
    """
    validate_config(cfg)
    a1 = cfg.alpha1()
    checks = [
        ("k_d = 0", abs(cfg.k_d)),
        ("n_bar = 0", abs(cfg.n_bar)),
        ("|alpha_1| = 1", abs(a1 - 1.0)),
        ("2 c sin(theta1 - phi) = 1",
         abs(2 * cfg.c * np.sin(cfg.theta1 - cfg.phi) - 1.0)),
        ("omega_rabi sin(theta1) = 0",
         abs(cfg.omega_rabi * np.sin(cfg.theta1))),
        ("delta_omega = -gamma c cos(theta1 - phi)",
         abs(cfg.delta_omega + cfg.gamma * cfg.c * np.cos(cfg.theta1 - cfg.phi))),
    ]
    return [(label, residual <= EXCEPTIONAL_TOL, float(residual))
            for label, residual in checks]


def is_exceptional(cfg: ControlConfig) -> bool:
    """True iff the configuration sits on the det A = 0 manifold."""
    return all(ok for _, ok, _ in exceptional_conditions(cfg))


def steady_state(cfg: ControlConfig) -> BlochVector:
    """Unique stationary Bloch vector, solving A x = b.

    Raises ExceptionalCase on the singular manifold and SingularDrift if A
    is numerically singular anywhere else (which would contradict the
    stability of the model and deserves a report rather than a guess).
    """
    if is_exceptional(cfg):
        raise ExceptionalCase(
            "det A = 0: no unique stationary state; conditions: "
            + "; ".join(label for label, ok, _ in exceptional_conditions(cfg) if ok)
        )
    drift = build_drift(cfg)
    if np.linalg.cond(drift.A) > CONDITION_LIMIT:
        raise SingularDrift(
            f"drift matrix condition number exceeds {CONDITION_LIMIT:g} "
            "outside the singular manifold"
        )
    x = np.linalg.solve(drift.A, drift.b)
    return BlochVector(float(x[0]), float(x[1]), float(x[2]))


def propagate_apriori(cfg: ControlConfig, x0, t: float) -> BlochVector:
    """Solve dx/dt = -A x + b from x0 over a time t >= 0.

    Uses the matrix exponential of the homogeneous 4x4 embedding of the
    affine system, so stiff gamma-dominated dynamics need no step-size
    tuning.
    """
    if t < 0:
        raise ValueError(f"propagation time must be >= 0, got {t}")
    drift = build_drift(cfg)
    gen = np.zeros((4, 4))
    gen[:3, :3] = -drift.A
    gen[:3, 3] = drift.b
    state = np.array([float(x0[0]), float(x0[1]), float(x0[2]), 1.0])
    out = expm(gen * t) @ state
    return BlochVector(float(out[0]), float(out[1]), float(out[2]))
