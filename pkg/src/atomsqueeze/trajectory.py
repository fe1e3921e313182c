"""Stochastic master equation simulator with photocurrent records.

The conditioned state follows the nonlinear diffusive unraveling

    d rho = L rho dt + sqrt(gamma) D[a_1] rho dW_1 + sqrt(gamma) D[a_2] rho dW_2

with a_1 = alpha_1 sigma_- - i c sigma_phi, a_2 = alpha_2 sigma_- and
D[a] rho = a rho + rho a* - rho Tr[(a + a*) rho].  Each detector current
is accumulated as increments dY_k = sqrt(gamma) |alpha_k| Tr[sigma_theta_k rho] dt
+ dW_k, with the same dW_k that drives the state: current and state stay
correlated, which is what produces sub-shot-noise spectra.

Integration is Euler-Maruyama on the 2x2 density matrix, followed per
step by Hermitian symmetrization, trace renormalization and a positivity
projection (for a 2x2 trace-one state, clipping the negative eigenvalue
equals shrinking the Bloch vector onto the unit sphere).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional

import numpy as np
from numba import njit

from .errors import InsufficientData, StepRejected
from .model import (
    ControlConfig,
    P_MINUS,
    SIGMA_MINUS,
    density_from_bloch,
    sigma_phase,
    validate_config,
    validate_density,
)
from .dynamics import apply_liouvillian
from .spectrum import SpectrumCurve

THREADS_ENV = "ATOMSQUEEZE_THREADS"

# A projection that moves the state by more than REJECT_FACTOR * gamma * dt
# (Frobenius norm) signals a discretization too coarse for the drift and the
# step is rejected instead of silently distorted.  The absolute floor exists
# because with every photon monitored the conditioned state rides the Bloch
# sphere and each Euler step overshoots it by an amount proportional to
# dt * dW^2 / dt = dW^2: the overshoot-to-bound ratio is independent of dt,
# so without a floor a rare wide noise draw would abort arbitrarily fine
# discretizations of perfectly healthy runs.  A cleanup displacement beyond
# a tenth of the Bloch ball is pathological at any step size; anything
# smaller is exactly what the projection is for.
REJECT_FACTOR = 10.0
REJECT_FLOOR = 0.1


def _reject_bound(gamma: float, dt: float) -> float:
    return max(REJECT_FACTOR * gamma * dt, REJECT_FLOOR)


@dataclass(frozen=True)
class SimulationPlan:
    """Discretization and ensemble layout for trajectory runs.

    state_stride thins the recorded states (every n-th step) to bound
    memory on long runs; current increments are always kept per step.
    """

    dt: float = 1e-3
    t_final: float = 500.0
    n_trajectories: int = 400
    base_seed: int = 0
    initial_state: Optional[np.ndarray] = None
    transient_cut: float = 50.0
    state_stride: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.dt > self.t_final:
            raise ValueError(f"dt = {self.dt} exceeds t_final = {self.t_final}")
        if not 0 <= self.transient_cut < self.t_final:
            raise ValueError(
                f"transient_cut must lie in [0, t_final), got {self.transient_cut}"
            )
        if self.n_trajectories < 1:
            raise ValueError("need at least one trajectory")
        if self.state_stride < 1:
            raise ValueError("state_stride must be >= 1")
        if not 0 <= int(self.base_seed) < 2 ** 64:
            raise ValueError("base_seed must fit in 64 bits")
        if self.initial_state is not None:
            validate_density(self.initial_state)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def initial_density(self) -> np.ndarray:
        if self.initial_state is None:
            return P_MINUS.copy()
        return np.asarray(self.initial_state, dtype=complex)


@dataclass
class TrajectoryRecord:
    """One sample path: thinned states plus per-step current increments."""

    times: np.ndarray          # recorded sample times, starting at 0
    states: np.ndarray         # (len(times), 3) Bloch components
    dy1: np.ndarray            # (n_steps,) channel-1 current increments
    dy2: np.ndarray            # (n_steps,) channel-2 current increments
    config: ControlConfig
    plan: SimulationPlan
    index: int

    def to_csv(self, path) -> None:
        """Write rows t,x,y,z,dY1,dY2: the state at the start of each step
        and the increments accumulated over it.  Requires state_stride 1."""
        if self.plan.state_stride != 1:
            raise ValueError("per-step CSV dump requires state_stride = 1")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,x,y,z,dY1,dY2\n")
            for j in range(len(self.dy1)):
                x, y, z = (float(v) for v in self.states[j])
                fh.write(f"{float(self.times[j])!r},{x!r},{y!r},{z!r},"
                         f"{float(self.dy1[j])!r},{float(self.dy2[j])!r}\n")


def _vec(rho: np.ndarray) -> np.ndarray:
    return np.array([rho[0, 0], rho[0, 1], rho[1, 0], rho[1, 1]], dtype=complex)


def _liouvillian_matrix(cfg: ControlConfig) -> np.ndarray:
    """4x4 matrix of the mean-dynamics generator acting on vec(rho)."""
    basis = [np.zeros((2, 2), dtype=complex) for _ in range(4)]
    for n, (i, j) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
        basis[n][i, j] = 1.0
    cols = [_vec(apply_liouvillian(cfg, e)) for e in basis]
    return np.column_stack(cols)


def _channel_operators(cfg: ControlConfig):
    a1 = cfg.alpha1() * np.exp(1j * cfg.theta1) * SIGMA_MINUS \
        - 1j * cfg.c * sigma_phase(cfg.phi)
    a2 = cfg.alpha2() * np.exp(1j * cfg.theta2) * SIGMA_MINUS
    return a1, a2


def _diffusion(a: np.ndarray, rho: np.ndarray) -> np.ndarray:
    sand = a @ rho + rho @ a.conj().T
    return sand - np.trace(sand).real * rho


def _project(rho: np.ndarray, bound: float, step_index=None) -> np.ndarray:
    """Hermitize, renormalize and clip to the Bloch ball; reject the step
    if the cleanup displaces the state beyond the given bound."""
    rho = (rho + rho.conj().T) / 2.0
    tr = np.trace(rho).real
    if not np.isfinite(tr) or tr <= 0.0:
        raise StepRejected(
            f"state trace became {tr}; dt too large", step_index=step_index
        )
    rho = rho / tr
    x = 2.0 * rho[0, 1].real
    y = -2.0 * rho[0, 1].imag
    z = (rho[0, 0] - rho[1, 1]).real
    norm = np.sqrt(x * x + y * y + z * z)
    if norm > 1.0:
        # Frobenius distance between the state and its radial projection
        displacement = (norm - 1.0) / np.sqrt(2.0)
        if displacement > bound:
            raise StepRejected(
                f"positivity projection displaced the state by {displacement:.3g} "
                f"(> {bound:.3g}); reduce dt",
                step_index=step_index,
            )
        rho = density_from_bloch((x / norm, y / norm, z / norm))
    return rho


def sme_step(cfg: ControlConfig, rho: np.ndarray, dW1: float, dW2: float,
             dt: float) -> np.ndarray:
    """One Euler-Maruyama update of the conditioned state.

    Reference implementation on plain 2x2 matrices; the trajectory loop
    uses a compiled kernel that performs the same arithmetic.
    """
    validate_config(cfg)
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    rho = np.asarray(rho, dtype=complex)
    a1, a2 = _channel_operators(cfg)
    sg = np.sqrt(cfg.gamma)
    new = (rho + apply_liouvillian(cfg, rho) * dt
           + sg * _diffusion(a1, rho) * dW1
           + sg * _diffusion(a2, rho) * dW2)
    return _project(new, _reject_bound(cfg.gamma, dt))


@njit(cache=True, nogil=True)
def _run_kernel(l_mat, a1, a2, sqg, w1, w2, dw, dt, stride, r00_0, r01_0, r11_0,
                states, dy1, dy2, reject_bound):
    """Scalar-complex trajectory loop.

    l_mat is the 4x4 generator on vec(rho); a1, a2 are the 2x2 channel
    operators flattened to length-4 complex arrays; w1, w2 the current
    weights sqrt(gamma)|alpha_k| (cos theta_k, sin theta_k).  Returns the
    step index of a rejected step, or -1 on success.
    """
    n_steps = dw.shape[0]
    r00 = r00_0 + 0.0j
    r01 = r01_0 + 0.0j
    r11 = r11_0 + 0.0j
    states[0, 0] = 2.0 * r01.real
    states[0, 1] = -2.0 * r01.imag
    states[0, 2] = (r00 - r11).real
    inv_sqrt2 = 0.7071067811865476
    for j in range(n_steps):
        r10 = np.conj(r01)
        x = 2.0 * r01.real
        y = -2.0 * r01.imag

        dw1 = dw[j, 0]
        dw2 = dw[j, 1]
        dy1[j] = (w1[0] * x + w1[1] * y) * dt + dw1
        dy2[j] = (w2[0] * x + w2[1] * y) * dt + dw2

        # drift: L acting on vec(rho)
        d00 = (l_mat[0, 0] * r00 + l_mat[0, 1] * r01
               + l_mat[0, 2] * r10 + l_mat[0, 3] * r11)
        d01 = (l_mat[1, 0] * r00 + l_mat[1, 1] * r01
               + l_mat[1, 2] * r10 + l_mat[1, 3] * r11)
        d11 = (l_mat[3, 0] * r00 + l_mat[3, 1] * r01
               + l_mat[3, 2] * r10 + l_mat[3, 3] * r11)

        # channel 1 diffusion: a rho + rho a^dag - Tr[...] rho
        p00 = a1[0] * r00 + a1[1] * r10
        p01 = a1[0] * r01 + a1[1] * r11
        p11 = a1[2] * r01 + a1[3] * r11
        q00 = r00 * np.conj(a1[0]) + r01 * np.conj(a1[1])
        q01 = r00 * np.conj(a1[2]) + r01 * np.conj(a1[3])
        q11 = r10 * np.conj(a1[2]) + r11 * np.conj(a1[3])
        m1 = (p00 + q00 + p11 + q11).real
        g00 = p00 + q00 - m1 * r00
        g01 = p01 + q01 - m1 * r01
        g11 = p11 + q11 - m1 * r11

        # channel 2 diffusion
        s00 = a2[0] * r00 + a2[1] * r10
        s01 = a2[0] * r01 + a2[1] * r11
        s11 = a2[2] * r01 + a2[3] * r11
        u00 = r00 * np.conj(a2[0]) + r01 * np.conj(a2[1])
        u01 = r00 * np.conj(a2[2]) + r01 * np.conj(a2[3])
        u11 = r10 * np.conj(a2[2]) + r11 * np.conj(a2[3])
        m2 = (s00 + u00 + s11 + u11).real
        h00 = s00 + u00 - m2 * r00
        h01 = s01 + u01 - m2 * r01
        h11 = s11 + u11 - m2 * r11

        r00 = r00 + d00 * dt + sqg * (g00 * dw1 + h00 * dw2)
        r01 = r01 + d01 * dt + sqg * (g01 * dw1 + h01 * dw2)
        r11 = r11 + d11 * dt + sqg * (g11 * dw1 + h11 * dw2)

        # hermitize (r01 picks up no cross term: r10 evolved as conjugate),
        # renormalize, project onto the Bloch ball
        r00 = complex(r00.real, 0.0)
        r11 = complex(r11.real, 0.0)
        tr = r00.real + r11.real
        if not np.isfinite(tr) or tr <= 0.0:
            return j
        r00 = r00 / tr
        r01 = r01 / tr
        r11 = r11 / tr
        x = 2.0 * r01.real
        y = -2.0 * r01.imag
        z = (r00 - r11).real
        norm = np.sqrt(x * x + y * y + z * z)
        if norm > 1.0:
            if (norm - 1.0) * inv_sqrt2 > reject_bound:
                return j
            scale = 1.0 / norm
            r01 = r01 * scale
            zc = z * scale
            r00 = complex((1.0 + zc) / 2.0, 0.0)
            r11 = complex((1.0 - zc) / 2.0, 0.0)
        if (j + 1) % stride == 0:
            m = (j + 1) // stride
            states[m, 0] = 2.0 * r01.real
            states[m, 1] = -2.0 * r01.imag
            states[m, 2] = (r00 - r11).real
    return -1


def _noise_increments(plan: SimulationPlan, index: int) -> np.ndarray:
    """Per-trajectory Gaussian increments from a counter-based stream.

    The generator key is (base_seed, trajectory index) and exactly two
    normals are consumed per step in a fixed order, so any trajectory can
    be regenerated independently of execution order.
    """
    key = np.array([int(plan.base_seed), int(index)], dtype=np.uint64)
    rng = np.random.Generator(np.random.Philox(key=key))
    return rng.standard_normal((plan.n_steps, 2)) * np.sqrt(plan.dt)


def simulate_trajectory(cfg: ControlConfig, plan: SimulationPlan,
                        index: int) -> TrajectoryRecord:
    """Integrate one conditioned trajectory, deterministic in
    (base_seed, index)."""
    validate_config(cfg)
    if not 0 <= index < plan.n_trajectories:
        raise ValueError(
            f"trajectory index {index} outside plan of {plan.n_trajectories}"
        )
    rho0 = validate_density(plan.initial_density())
    l_mat = _liouvillian_matrix(cfg)
    a1, a2 = _channel_operators(cfg)
    sg = float(np.sqrt(cfg.gamma))
    w1 = sg * cfg.alpha1() * np.array([np.cos(cfg.theta1), np.sin(cfg.theta1)])
    w2 = sg * cfg.alpha2() * np.array([np.cos(cfg.theta2), np.sin(cfg.theta2)])

    n_steps = plan.n_steps
    stride = plan.state_stride
    n_rec = n_steps // stride + 1
    states = np.empty((n_rec, 3), dtype=float)
    dy1 = np.empty(n_steps, dtype=float)
    dy2 = np.empty(n_steps, dtype=float)
    dw = _noise_increments(plan, index)

    status = _run_kernel(
        l_mat, a1.ravel(), a2.ravel(), sg, w1, w2, dw, plan.dt, stride,
        rho0[0, 0].real, rho0[0, 1], rho0[1, 1].real,
        states, dy1, dy2, _reject_bound(cfg.gamma, plan.dt),
    )
    if status >= 0:
        raise StepRejected(
            f"trajectory {index} rejected at step {status} "
            f"(t = {status * plan.dt:.6g}); reduce dt",
            step_index=int(status),
        )
    times = np.arange(n_rec) * (stride * plan.dt)
    return TrajectoryRecord(times=times, states=states, dy1=dy1, dy2=dy2,
                            config=cfg, plan=plan, index=index)


def _worker_count(n_workers: Optional[int]) -> int:
    if n_workers is not None:
        return max(1, int(n_workers))
    env = os.environ.get(THREADS_ENV, "")
    if env.strip():
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"{THREADS_ENV} must be an integer, got {env!r}")
    return 1


def simulate_ensemble(cfg: ControlConfig, plan: SimulationPlan,
                      n_workers: Optional[int] = None) -> Iterator[TrajectoryRecord]:
    """Yield all trajectories of the plan in index order.

    Results are identical for any worker count: each trajectory owns an
    independent noise stream, and records are emitted ordered.  The
    worker default comes from the ATOMSQUEEZE_THREADS environment
    variable (1 if unset); the compiled kernel releases the GIL, so
    threads give real parallelism.
    """
    workers = _worker_count(n_workers)
    indices = range(plan.n_trajectories)
    if workers == 1:
        for i in indices:
            yield simulate_trajectory(cfg, plan, i)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield from pool.map(lambda i: simulate_trajectory(cfg, plan, i), indices)


def ensemble_bloch_stats(records: Iterable[TrajectoryRecord]):
    """Mean and standard error of the Bloch components over an ensemble.

    Accumulates in iteration order; returns (times, mean, stderr) with
    mean and stderr of shape (n_samples, 3).
    """
    count = 0
    mean = None
    m2 = None
    times = None
    for rec in records:
        if mean is None:
            times = rec.times
            mean = np.zeros_like(rec.states)
            m2 = np.zeros_like(rec.states)
        count += 1
        delta = rec.states - mean
        mean += delta / count
        m2 += delta * (rec.states - mean)
    if count < 2:
        raise InsufficientData("need at least 2 trajectories for ensemble stats")
    var = m2 / (count - 1)
    stderr = np.sqrt(np.maximum(var, 0.0) / count)
    return times, mean, stderr


class PeriodogramAccumulator:
    """Streaming periodogram over trajectory records.

    Collects Z_n(mu) = sum_j exp(i mu t_j) dY_j over the post-transient
    window of each record; the spectrum estimate is the ensemble variance
    of Z_n divided by the window length.
    """

    BLOCK = 65536

    def __init__(self, k: int, mu_grid):
        if k not in (1, 2):
            raise ValueError(f"channel must be 1 or 2, got {k}")
        self.k = k
        self.mu_grid = np.asarray(mu_grid, dtype=float)
        self.z_rows = []
        self._ref_plan = None
        self._config = None
        self._phases = {}

    def _phase_block(self, start: int, stop: int, dt: float) -> np.ndarray:
        # records share a plan, so the phase matrices repeat across records
        block = self._phases.get(start)
        if block is None:
            t_block = np.arange(start, stop) * dt
            block = np.exp(1j * np.outer(self.mu_grid, t_block))
            self._phases[start] = block
        return block

    def add(self, rec: TrajectoryRecord) -> None:
        plan = rec.plan
        if self._ref_plan is None:
            self._ref_plan = plan
            self._config = rec.config
        else:
            ref = self._ref_plan
            if (plan.dt, plan.t_final, plan.transient_cut) != (
                    ref.dt, ref.t_final, ref.transient_cut):
                raise ValueError("all records must share the same plan")
        dy = rec.dy1 if self.k == 1 else rec.dy2
        j0 = int(round(plan.transient_cut / plan.dt))
        z = np.zeros(len(self.mu_grid), dtype=complex)
        for start in range(j0, len(dy), self.BLOCK):
            stop = min(start + self.BLOCK, len(dy))
            z += self._phase_block(start, stop, plan.dt) @ dy[start:stop]
        self.z_rows.append(z)

    def result(self) -> SpectrumCurve:
        n = len(self.z_rows)
        if n < 2:
            raise InsufficientData(
                f"periodogram needs at least 2 trajectories, got {n}"
            )
        plan = self._ref_plan
        j0 = int(round(plan.transient_cut / plan.dt))
        t_win = (plan.n_steps - j0) * plan.dt
        z = np.array(self.z_rows)
        centered = z - z.mean(axis=0)
        v = np.abs(centered) ** 2 / t_win
        values = v.sum(axis=0) / (n - 1)
        stderr = v.std(axis=0, ddof=1) / np.sqrt(n)
        return SpectrumCurve(channel=self.k, mu_grid=self.mu_grid.copy(),
                             values=values, config=self._config, stderr=stderr)


def periodogram_spectrum(records: Iterable[TrajectoryRecord], k: int,
                         mu_grid) -> SpectrumCurve:
    """Estimate S_k on a frequency grid from an ensemble of records.

    The window [transient_cut, t_final) must be much longer than the
    correlation time of the current for the estimate to be unbiased;
    with the default plan the window is 450 line widths.
    """
    acc = PeriodogramAccumulator(k, mu_grid)
    for rec in records:
        acc.add(rec)
    return acc.result()
