import numpy as np
import pytest

from atomsqueeze import (
    ControlConfig,
    ExceptionalCase,
    apply_liouvillian,
    atomic_squeezing,
    bloch_from_density,
    build_drift,
    density_from_bloch,
    exceptional_conditions,
    is_exceptional,
    propagate_apriori,
    steady_state,
)
from atomsqueeze.model import P_MINUS, P_PLUS

from conftest import (
    as_optimal_config,
    exceptional_config,
    make_config,
    random_config,
    trivial_config,
)


def test_build_drift_trivial():
    drift = build_drift(trivial_config())
    assert np.allclose(drift.A, np.diag([0.5, 0.5, 1.0]), atol=1e-15)
    assert np.allclose(drift.b, [0.0, 0.0, -1.0], atol=1e-15)
    assert drift.delta_omega_c == 0.0


def test_build_drift_detuning_only():
    drift = build_drift(ControlConfig(delta_omega=2.0))
    assert np.allclose(np.diag(drift.A), [0.5, 0.5, 1.0], atol=1e-15)
    assert drift.A[0, 1] == pytest.approx(2.0, abs=1e-15)
    assert drift.A[1, 0] == pytest.approx(-2.0, abs=1e-15)
    assert drift.delta_omega_c == pytest.approx(2.0, abs=1e-15)


def test_build_drift_feedback_entries():
    # theta1 = -pi/2, phi - theta1 = pi/2, c = 0.2936, |alpha_1|^2 = 0.45;
    # entries frozen from a direct evaluation of the closed forms
    cfg = make_config(omega_rabi=0.0, c=0.2936, theta1=-np.pi / 2, phi=0.0)
    drift = build_drift(cfg)
    expected = np.array([
        [0.5, 0.0, 0.0],
        [0.0, 1.0663076549163630, 0.0],
        [0.0, 0.0, 1.5663076549163630],
    ])
    assert np.allclose(drift.A, expected, atol=1e-12)
    assert np.allclose(drift.b, [0.0, 0.0, -1.393905734916363], atol=1e-12)
    assert abs(drift.delta_omega_c) < 1e-12


def test_liouvillian_ground_state_stationary():
    out = apply_liouvillian(trivial_config(), P_MINUS)
    assert np.allclose(out, 0.0, atol=1e-15)


def test_liouvillian_pure_decay():
    out = apply_liouvillian(trivial_config(), P_PLUS)
    assert np.allclose(out, P_MINUS - P_PLUS, atol=1e-15)


def test_liouvillian_matches_bloch_drift(rng):
    # the matrix representation and the term-by-term superoperator must be
    # the same linear map
    for _ in range(30):
        cfg = random_config(rng)
        drift = build_drift(cfg)
        v = rng.uniform(-0.5, 0.5, 3)
        rho = density_from_bloch(v)
        image = apply_liouvillian(cfg, rho)
        assert abs(np.trace(image)) < 1e-12
        assert np.allclose(image, image.conj().T, atol=1e-12)
        got = bloch_from_density(image).as_array()
        want = -drift.A @ v + drift.b
        assert np.allclose(got, want, atol=1e-10)


def test_liouvillian_traceless_hermitian_on_random_hermitian(rng):
    cfg = random_config(rng)
    h = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    h = (h + h.conj().T) / 2
    out = apply_liouvillian(cfg, h)
    assert abs(np.trace(out)) < 1e-12
    assert np.allclose(out, out.conj().T, atol=1e-12)


def test_exceptional_detection():
    assert is_exceptional(exceptional_config())
    conditions = exceptional_conditions(exceptional_config())
    assert len(conditions) == 6
    assert all(ok for _, ok, _ in conditions)


def test_not_exceptional_when_gain_off_manifold():
    cfg = make_config(alpha0_sq=0.0, alpha1_sq=1.0, alpha2_sq=0.0,
                      theta1=np.pi / 2, c=0.4)
    assert not is_exceptional(cfg)
    # 2 c sin(theta1 - phi) = 0.8, one residual of 0.2
    _, ok, residual = exceptional_conditions(cfg)[3]
    assert not ok and residual == pytest.approx(0.2, abs=1e-12)


def test_thermal_config_never_exceptional(rng):
    for _ in range(20):
        cfg = random_config(rng)
        if cfg.n_bar > 0:
            assert not is_exceptional(cfg)


def test_steady_state_trivial():
    assert np.allclose(steady_state(trivial_config()).as_array(),
                       [0.0, 0.0, -1.0], atol=1e-15)


def test_steady_state_thermal():
    # z_eq = -1/(1 + 2 n_bar)
    x = steady_state(ControlConfig(n_bar=0.5))
    assert np.allclose(x.as_array(), [0.0, 0.0, -0.5], atol=1e-14)


def test_steady_state_strong_feedback_point():
    x = steady_state(as_optimal_config())
    assert np.allclose(
        x.as_array(),
        [0.7964994685609229, -0.13543947298022055, 0.588673945732186],
        atol=1e-12,
    )
    assert atomic_squeezing(x) == pytest.approx(-0.2414291999911785, abs=1e-12)


def test_steady_state_raises_on_exceptional():
    with pytest.raises(ExceptionalCase):
        steady_state(exceptional_config())


def test_steady_state_residual_and_ball(rng):
    for _ in range(50):
        cfg = random_config(rng)
        drift = build_drift(cfg)
        x = steady_state(cfg).as_array()
        assert np.linalg.norm(-drift.A @ x + drift.b) <= 1e-10
        assert np.linalg.norm(x) <= 1.0 + 1e-9


def test_drift_independent_of_detection_without_feedback(rng):
    # with c = 0 the mean dynamics cannot depend on how the light is split
    # or measured
    base = random_config(rng, allow_feedback=False)
    drift = build_drift(base)
    for _ in range(10):
        a1 = rng.uniform(0.0, 1.0)
        a2 = rng.uniform(0.0, 1.0 - a1)
        other = ControlConfig(
            gamma=base.gamma, k_d=base.k_d, n_bar=base.n_bar,
            omega_rabi=base.omega_rabi, delta_omega=base.delta_omega,
            alpha0_sq=1.0 - a1 - a2, alpha1_sq=a1, alpha2_sq=a2,
            theta1=rng.uniform(-np.pi, np.pi), theta2=rng.uniform(-np.pi, np.pi),
            c=0.0, phi=rng.uniform(-np.pi, np.pi),
        )
        other_drift = build_drift(other)
        assert np.allclose(other_drift.A, drift.A, atol=1e-14)
        assert np.allclose(other_drift.b, drift.b, atol=1e-14)


def test_drift_is_hurwitz_off_manifold(rng):
    for _ in range(100):
        cfg = random_config(rng)
        if is_exceptional(cfg):
            continue
        eigs = np.linalg.eigvals(build_drift(cfg).A)
        assert eigs.real.min() > 0


def test_propagate_identity_at_zero_time(rng):
    cfg = random_config(rng)
    x0 = (0.3, -0.2, 0.4)
    out = propagate_apriori(cfg, x0, 0.0)
    assert np.allclose(out.as_array(), x0, atol=1e-14)


def test_propagate_matches_scalar_decay():
    # undriven: z(t) = -1 + (z0 + 1) e^{-gamma t}
    out = propagate_apriori(trivial_config(), (0.0, 0.0, 1.0), 1.0)
    assert out.z == pytest.approx(-1.0 + 2.0 * np.exp(-1.0), abs=1e-12)
    assert abs(out.x) < 1e-14 and abs(out.y) < 1e-14


def test_propagate_converges_to_steady_state(rng):
    for _ in range(10):
        cfg = random_config(rng)
        x_eq = steady_state(cfg).as_array()
        out = propagate_apriori(cfg, (0.5, 0.0, -0.5), 50.0 / cfg.gamma)
        assert np.allclose(out.as_array(), x_eq, atol=1e-6)


def test_propagate_semigroup(rng):
    cfg = random_config(rng)
    x0 = (0.1, 0.2, -0.3)
    s, t = 0.7, 1.9
    two_leg = propagate_apriori(cfg, propagate_apriori(cfg, x0, s), t)
    one_leg = propagate_apriori(cfg, x0, s + t)
    assert np.allclose(two_leg.as_array(), one_leg.as_array(), atol=1e-9)


def test_propagate_rejects_negative_time():
    with pytest.raises(ValueError):
        propagate_apriori(trivial_config(), (0, 0, 0), -1.0)
