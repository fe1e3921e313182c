"""Shared configurations for the test suite.

The named parameter sets below are reused across modules; expected
numbers quoted in the tests were frozen from an independent reference
script that evaluates the closed-form expressions directly.
"""

import numpy as np
import pytest

from atomsqueeze import ControlConfig


def make_config(**overrides):
    """Base split (0.1, 0.45, 0.45), gamma = 1, everything else off."""
    params = dict(gamma=1.0, k_d=0.0, n_bar=0.0, omega_rabi=0.0,
                  delta_omega=0.0, alpha0_sq=0.1, alpha1_sq=0.45,
                  alpha2_sq=0.45, theta1=0.0, theta2=0.0, c=0.0, phi=0.0)
    params.update(overrides)
    return ControlConfig(**params)


def trivial_config():
    """Undriven atom, all light lost: stationary ground state, flat spectra."""
    return ControlConfig()


def as_optimal_config():
    """Strong-feedback point with atomic squeezing near the -1/4 bound."""
    return make_config(alpha0_sq=0.0, alpha1_sq=1.0, alpha2_sq=0.0,
                       delta_omega=3.0, omega_rabi=4.0, theta1=np.pi / 2,
                       c=1.3372, phi=-np.pi / 40)


def inloop_config():
    """Undriven feedback point with deep in-loop squeezing in channel 1."""
    return make_config(alpha0_sq=0.0, alpha1_sq=1.0, alpha2_sq=0.0,
                       theta1=np.pi / 2, c=1.2818, phi=0.0)


def line1_config():
    return make_config(omega_rabi=0.2976, theta1=-np.pi / 2, theta2=-np.pi / 2)


def line2_config():
    return make_config(delta_omega=1.8195, omega_rabi=1.7988,
                       theta1=-0.1438, theta2=-0.1438)


def line3_ch1_config():
    # phi - theta1 = pi/2 with theta1 = -pi/2
    return make_config(omega_rabi=0.0, c=0.2936, theta1=-np.pi / 2, phi=0.0)


def line4_ch1_config():
    return make_config(delta_omega=2.5499, omega_rabi=0.0, c=0.3772,
                       theta1=-1.3354, phi=-0.0646)


def line3_ch2_config():
    return make_config(omega_rabi=0.2698, theta1=np.pi / 2, c=0.0896,
                       phi=0.0, theta2=-np.pi / 2)


def line4_ch2_config():
    return make_config(delta_omega=1.6920, omega_rabi=1.9276, theta1=2.8168,
                       c=0.1326, phi=1.2460, theta2=-0.0851)


def freezing_config():
    """Feedback point where the channel-1 correlation vector vanishes:
    y_eq^2 + z_eq^2 = 1 and 2 c sin(theta1) = 1 + z_eq."""
    return make_config(alpha0_sq=0.0, alpha1_sq=1.0, alpha2_sq=0.0,
                       omega_rabi=0.24, theta1=np.pi / 2, c=0.8, phi=0.0)


def exceptional_config():
    """All six singularity conditions hold: det A = 0."""
    return make_config(alpha0_sq=0.0, alpha1_sq=1.0, alpha2_sq=0.0,
                       theta1=np.pi / 2, phi=0.0, c=0.5,
                       omega_rabi=0.0, delta_omega=0.0)


def random_config(rng, max_c=1.0, allow_feedback=True):
    """Valid non-exceptional configuration drawn from moderate ranges."""
    a1 = rng.uniform(0.05, 0.6)
    a2 = rng.uniform(0.05, 1.0 - a1 - 0.01)
    return make_config(
        gamma=rng.uniform(0.5, 2.0),
        k_d=rng.uniform(0.0, 0.3),
        n_bar=rng.uniform(0.0, 0.5),
        omega_rabi=rng.uniform(0.0, 2.0),
        delta_omega=rng.uniform(-2.0, 2.0),
        alpha0_sq=1.0 - a1 - a2,
        alpha1_sq=a1,
        alpha2_sq=a2,
        theta1=rng.uniform(-np.pi, np.pi),
        theta2=rng.uniform(-np.pi, np.pi),
        c=rng.uniform(0.0, max_c) if allow_feedback else 0.0,
        phi=rng.uniform(-np.pi, np.pi),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)
