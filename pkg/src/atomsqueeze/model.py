"""Parameter and state types for a driven two-level atom under homodyne
monitoring with Markovian feedback.

Conventions
-----------
Basis ordering is (|e>, |g>) with sigma_z|e> = |e>.  The lowering operator
is sigma_- = |g><e|, and P_+ = sigma_+ sigma_- projects on the excited
state.  Bloch components carry no factor 1/2:

    x_i = Tr[rho sigma_i],    rho = (1 + x . sigma) / 2.

All rates are expressed in the same units as the line width gamma; angles
are radians.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict, fields
from typing import NamedTuple

import numpy as np

from .errors import (
    ChannelSumError,
    FeedbackWithoutChannel1,
    InvalidConfig,
    NegativeParameter,
)

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
SIGMA_PLUS = SIGMA_MINUS.conj().T
P_PLUS = SIGMA_PLUS @ SIGMA_MINUS   # |e><e|
P_MINUS = SIGMA_MINUS @ SIGMA_PLUS  # |g><g|
IDENTITY2 = np.eye(2, dtype=complex)

PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

ALG_TOL = 1e-12   # algebraic identities (trace, hermiticity, channel sum)
POS_TOL = 1e-9    # positivity slack for accumulated floating error


def sigma_phase(angle: float) -> np.ndarray:
    """Quadrature operator e^{i angle} sigma_- + e^{-i angle} sigma_+.

    Used both for the feedback quadrature (angle = phi) and for the
    measured quadratures (angle = theta_k); equals
    cos(angle) sigma_x + sin(angle) sigma_y.
    """
    return np.exp(1j * angle) * SIGMA_MINUS + np.exp(-1j * angle) * SIGMA_PLUS


class BlochVector(NamedTuple):
    """Atomic state as a point in the closed Bloch ball."""

    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def norm(self) -> float:
        return float(np.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2))


@dataclass(frozen=True)
class ControlConfig:
    """All physical and control parameters of the model.

    Parameters
    ----------
    gamma : float
        Natural line width (inverse time), > 0.
    k_d : float
        Dephasing intensity, >= 0.
    n_bar : float
        Thermal occupation of the environment, >= 0.
    omega_rabi : float
        Rabi frequency of the coherent drive, >= 0.
    delta_omega : float
        Detuning (atomic frequency minus drive frequency).
    alpha0_sq, alpha1_sq, alpha2_sq : float
        Fractions of emitted light in the lost channel, the feedback
        channel and the free channel; each in [0, 1], summing to 1.
    theta1, theta2 : float
        Local-oscillator phases of the two homodyne detectors (radians).
    c : float
        Feedback strength, >= 0.  The current of detector 1 modulates the
        drive with this dimensionless gain.
    phi : float
        Feedback quadrature phase (radians).
    """

    gamma: float = 1.0
    k_d: float = 0.0
    n_bar: float = 0.0
    omega_rabi: float = 0.0
    delta_omega: float = 0.0
    alpha0_sq: float = 1.0
    alpha1_sq: float = 0.0
    alpha2_sq: float = 0.0
    theta1: float = 0.0
    theta2: float = 0.0
    c: float = 0.0
    phi: float = 0.0

    def alpha1(self) -> float:
        """Modulus |alpha_1| of the channel-1 amplitude."""
        return float(np.sqrt(self.alpha1_sq))

    def alpha2(self) -> float:
        return float(np.sqrt(self.alpha2_sq))


_CONFIG_FIELDS = tuple(f.name for f in fields(ControlConfig))
_ANGLE_FIELDS = ("theta1", "theta2", "phi")


def validate_config(cfg: ControlConfig) -> ControlConfig:
    """Check every declared constraint; raise a specific error on the first
    violation, return the config unchanged otherwise."""
    if not cfg.gamma > 0:
        raise NegativeParameter(f"gamma must be > 0, got {cfg.gamma}")
    for name in ("k_d", "n_bar", "omega_rabi", "c"):
        value = getattr(cfg, name)
        if value < 0:
            raise NegativeParameter(f"{name} must be >= 0, got {value}")
    for name in ("alpha0_sq", "alpha1_sq", "alpha2_sq"):
        value = getattr(cfg, name)
        if not 0.0 <= value <= 1.0:
            raise NegativeParameter(f"{name} must lie in [0, 1], got {value}")
    total = cfg.alpha0_sq + cfg.alpha1_sq + cfg.alpha2_sq
    if abs(total - 1.0) > ALG_TOL:
        raise ChannelSumError(
            f"channel fractions sum to {total!r}, expected 1 within {ALG_TOL}"
        )
    if cfg.c > 0 and cfg.alpha1_sq == 0.0:
        raise FeedbackWithoutChannel1(
            "feedback (c > 0) requires alpha1_sq > 0: the fed-back current "
            "is read from channel 1"
        )
    for name in _CONFIG_FIELDS:
        value = getattr(cfg, name)
        if not np.isfinite(value):
            raise InvalidConfig(f"{name} must be finite, got {value}")
    return cfg


def bloch_from_density(rho: np.ndarray) -> BlochVector:
    """Map a 2x2 density matrix to (Tr[rho sigma_x], Tr[rho sigma_y],
    Tr[rho sigma_z])."""
    rho = np.asarray(rho, dtype=complex)
    return BlochVector(
        float(np.trace(rho @ SIGMA_X).real),
        float(np.trace(rho @ SIGMA_Y).real),
        float(np.trace(rho @ SIGMA_Z).real),
    )


def density_from_bloch(v) -> np.ndarray:
    """Inverse of :func:`bloch_from_density`; accepts any length-3 sequence."""
    x, y, z = (float(v[0]), float(v[1]), float(v[2]))
    return (IDENTITY2 + x * SIGMA_X + y * SIGMA_Y + z * SIGMA_Z) / 2.0


def validate_density(rho: np.ndarray) -> np.ndarray:
    """Assert hermiticity, unit trace and positivity of a 2x2 state."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise InvalidConfig(f"density matrix must be 2x2, got shape {rho.shape}")
    if not np.allclose(rho, rho.conj().T, atol=ALG_TOL):
        raise InvalidConfig("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > ALG_TOL or abs(np.trace(rho).imag) > ALG_TOL:
        raise InvalidConfig(f"density matrix trace is {np.trace(rho)}, expected 1")
    eigs = np.linalg.eigvalsh((rho + rho.conj().T) / 2.0)
    if eigs.min() < -POS_TOL:
        raise InvalidConfig(f"density matrix has eigenvalue {eigs.min()} < -{POS_TOL}")
    return rho


def atomic_squeezing(v) -> float:
    """Squeezing functional 1 - (x^2 + y^2) - |z| of a Bloch vector.

    Negative values certify an atomic squeezed state; the minimum over the
    Bloch ball is -1/4, attained on pure states with x^2 + y^2 = 3/4.
    """
    x, y, z = (float(v[0]), float(v[1]), float(v[2]))
    return 1.0 - (x * x + y * y) - abs(z)


def parse_angle(text) -> float:
    """Parse a radian value, accepting 'pi*<factor>' literals.

    Examples: "pi*-0.5" -> -pi/2, "pi*1" -> pi, plain "0.25" -> 0.25.
    Numeric input passes through unchanged.
    """
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip()
    if s.startswith("pi*"):
        try:
            return np.pi * float(s[3:])
        except ValueError:
            raise InvalidConfig(f"cannot parse angle literal {text!r}") from None
    try:
        return float(s)
    except ValueError:
        raise InvalidConfig(f"cannot parse angle {text!r}") from None


def config_from_dict(data: dict) -> ControlConfig:
    """Build and validate a ControlConfig from a flat mapping.

    Unknown keys are rejected.  Missing keys fall back to the field
    defaults (an undriven atom with all light in the unobserved channel).
    The angle fields accept 'pi*' literals.
    """
    unknown = sorted(set(data) - set(_CONFIG_FIELDS))
    if unknown:
        raise InvalidConfig(f"unknown config keys: {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _ANGLE_FIELDS:
            kwargs[key] = parse_angle(value)
        else:
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise InvalidConfig(f"config key {key!r} must be a number, got {value!r}")
            kwargs[key] = float(value)
    return validate_config(ControlConfig(**kwargs))


def config_to_dict(cfg: ControlConfig) -> dict:
    return asdict(cfg)


def load_config(path) -> ControlConfig:
    """Read a flat JSON object of ControlConfig fields from a file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidConfig(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidConfig(f"config file {path} must hold a JSON object")
    return config_from_dict(data)
