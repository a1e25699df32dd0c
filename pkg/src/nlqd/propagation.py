"""Time integration on the square-root factor.

The production path integrates i gamma_dot = G(gamma gamma^dag) gamma with
classical fixed-step RK4, re-evaluating the generator at every internal
stage; rho = gamma gamma^dag is then positive by construction.  The direct
rho-route integrator is kept only as a cross-validation oracle.  The
rho-dependent propagator S (i S_dot = G(rho(t)) S) can be accumulated
alongside gamma with the same stages, and convex mixtures of processes run
one autonomous branch per component.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import StepSizeError, ValidationError
from .generators import GeneratorSpec, generator_matrix
from .linalg import (
    DensityMatrix,
    dagger,
    herm_eig,
    max_abs,
    purity,
    sqrt_factor,
    von_neumann_entropy,
)


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_final: float
    renormalize_each_step: bool = True
    monitor_stride: int = 1
    max_step_drift: float = 1e-6

    def __post_init__(self):
        if self.dt <= 0 or self.t_final <= 0:
            raise ValidationError("dt and t_final must be positive")
        if self.dt > self.t_final:
            raise ValidationError("dt must not exceed t_final")
        if self.monitor_stride < 1:
            raise ValidationError("monitor_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))


@dataclass
class Trajectory:
    times: np.ndarray
    states: list  # ndarray snapshots, one per recorded time
    monitors: dict  # name -> ndarray aligned with times
    norm_drift: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def validate(self, trace_tol: float = 1e-9, eig_tol: float = 1e-10) -> None:
        """Check the physical-state invariants on every recorded snapshot."""
        for t, s in zip(self.times, self.states):
            if max_abs(s - dagger(s)) > 1e-9:
                raise ValidationError(f"state at t={t} not Hermitian")
            if abs(np.trace(s).real - 1.0) > trace_tol:
                raise ValidationError(f"state at t={t} trace off by > {trace_tol}")
            if float(np.min(np.linalg.eigvalsh((s + dagger(s)) / 2))) < -eig_tol:
                raise ValidationError(f"state at t={t} has eigenvalue < -{eig_tol}")


GeneratorFn = Callable[[np.ndarray], np.ndarray]
MonitorFn = Callable[[np.ndarray], dict]


def _gamma_rhs(gamma: np.ndarray, g_of_rho: GeneratorFn) -> np.ndarray:
    return -1j * (g_of_rho(gamma @ dagger(gamma)) @ gamma)


def _rk4_gamma(gamma: np.ndarray, g_of_rho: GeneratorFn, dt: float) -> np.ndarray:
    k1 = _gamma_rhs(gamma, g_of_rho)
    k2 = _gamma_rhs(gamma + 0.5 * dt * k1, g_of_rho)
    k3 = _gamma_rhs(gamma + 0.5 * dt * k2, g_of_rho)
    k4 = _gamma_rhs(gamma + dt * k3, g_of_rho)
    return gamma + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _rk4_gamma_with_propagator(gamma, s, g_of_rho, dt):
    """RK4 on the pair (gamma, S); both see the same stage generators."""

    def rhs(g, m):
        gen = g_of_rho(g @ dagger(g))
        return -1j * (gen @ g), -1j * (gen @ m)

    k1g, k1s = rhs(gamma, s)
    k2g, k2s = rhs(gamma + 0.5 * dt * k1g, s + 0.5 * dt * k1s)
    k3g, k3s = rhs(gamma + 0.5 * dt * k2g, s + 0.5 * dt * k2s)
    k4g, k4s = rhs(gamma + dt * k3g, s + dt * k3s)
    return (
        gamma + (dt / 6.0) * (k1g + 2 * k2g + 2 * k3g + k4g),
        s + (dt / 6.0) * (k1s + 2 * k2s + 2 * k3s + k4s),
    )


def _renormalize(gamma: np.ndarray, target: float, max_drift: float) -> tuple[np.ndarray, float]:
    """Project gamma back onto HS norm sqrt(target); returns (gamma, drift)."""
    nrm = np.trace(dagger(gamma) @ gamma).real
    drift = abs(nrm - target)
    if drift > max_drift:
        raise StepSizeError(
            f"norm drift {drift:.3e} exceeds {max_drift:.1e} in a single step; reduce dt"
        )
    return gamma * np.sqrt(target / nrm), drift


def step_state_operator(gamma, spec: GeneratorSpec, dt: float, max_step_drift: float = 1e-6):
    """One RK4 step of the square-root factor under the given generator spec."""
    g = gamma.matrix if hasattr(gamma, "matrix") else np.asarray(gamma, dtype=complex)
    g = _rk4_gamma(g, lambda rho: generator_matrix(spec, rho), dt)
    g, _ = _renormalize(g, 1.0, max_step_drift)
    from .linalg import StateOperator

    return StateOperator(matrix=g)


def default_monitor(H: np.ndarray) -> MonitorFn:
    def monitor(rho: np.ndarray) -> dict:
        eigs = np.linalg.eigvalsh((rho + dagger(rho)) / 2)
        return {
            "trace": np.trace(rho).real,
            "energy": np.trace(H @ rho).real,
            "purity": purity(rho),
            "entropy": von_neumann_entropy(rho),
            "eigenvalues": eigs,
        }

    return monitor


def integrate_generator(
    rho0: np.ndarray,
    g_of_rho: GeneratorFn,
    cfg: IntegratorConfig,
    monitor: MonitorFn,
) -> Trajectory:
    """Shared gamma-route engine: factorize, step, renormalize, record."""
    gamma = sqrt_factor(np.asarray(rho0, dtype=complex)).matrix
    times, states, drifts = [0.0], [gamma @ dagger(gamma)], [0.0]
    records = [monitor(states[0])]
    n = cfg.n_steps
    for step in range(1, n + 1):
        gamma = _rk4_gamma(gamma, g_of_rho, cfg.dt)
        nrm = np.vdot(gamma, gamma).real
        drift = abs(nrm - 1.0)
        if drift > cfg.max_step_drift:
            raise StepSizeError(
                f"norm drift {drift:.3e} exceeds {cfg.max_step_drift:.1e}; reduce dt"
            )
        if cfg.renormalize_each_step:
            gamma = gamma / np.sqrt(nrm)
        if step % cfg.monitor_stride == 0 or step == n:
            rho = gamma @ dagger(gamma)
            times.append(step * cfg.dt)
            states.append(rho)
            drifts.append(drift)
            records.append(monitor(rho))
    monitors = {
        key: np.array([rec[key] for rec in records]) for key in records[0]
    }
    return Trajectory(
        times=np.array(times),
        states=states,
        monitors=monitors,
        norm_drift=np.array(drifts),
    )


def evolve(rho0, spec: GeneratorSpec, cfg: IntegratorConfig) -> Trajectory:
    """Propagate a density matrix under one generator spec via the gamma route."""
    m = rho0.matrix if isinstance(rho0, DensityMatrix) else np.asarray(rho0, dtype=complex)
    DensityMatrix(matrix=m)  # validate input invariants
    traj = integrate_generator(
        m, lambda rho: generator_matrix(spec, rho), cfg, default_monitor(spec.H)
    )
    return traj


def consistency_check_rho_route(rho0, spec: GeneratorSpec, cfg: IntegratorConfig) -> float:
    """Integrate the density-matrix equation directly with the same RK4 scheme
    and report the max entrywise deviation from the gamma route over the grid.
    """
    m = rho0.matrix if isinstance(rho0, DensityMatrix) else np.asarray(rho0, dtype=complex)
    gamma = sqrt_factor(m).matrix

    def rho_rhs(rho):
        g = generator_matrix(spec, rho)
        return -1j * (g @ rho - rho @ dagger(g))

    rho_direct = m.copy()
    dev = 0.0
    for _ in range(cfg.n_steps):
        gamma = _rk4_gamma(gamma, lambda rho: generator_matrix(spec, rho), cfg.dt)
        if cfg.renormalize_each_step:
            gamma, _ = _renormalize(gamma, 1.0, cfg.max_step_drift)
        k1 = rho_rhs(rho_direct)
        k2 = rho_rhs(rho_direct + 0.5 * cfg.dt * k1)
        k3 = rho_rhs(rho_direct + 0.5 * cfg.dt * k2)
        k4 = rho_rhs(rho_direct + cfg.dt * k3)
        rho_direct = rho_direct + (cfg.dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        dev = max(dev, max_abs(gamma @ dagger(gamma) - rho_direct))
    return dev


def accumulate_propagator(
    rho0, spec: GeneratorSpec, cfg: IntegratorConfig
) -> tuple[np.ndarray, Trajectory]:
    """Integrate the state-dependent propagator alongside gamma.

    S starts at the identity and satisfies i S_dot = G(rho(t)) S; the final
    state reconstructs as S rho(0) S^dag.  When the dissipative part never
    touches the support of rho, S comes out unitary.
    """
    m = rho0.matrix if isinstance(rho0, DensityMatrix) else np.asarray(rho0, dtype=complex)
    DensityMatrix(matrix=m)
    g_of_rho = lambda rho: generator_matrix(spec, rho)
    monitor = default_monitor(spec.H)
    gamma = sqrt_factor(m).matrix
    s = np.eye(m.shape[0], dtype=complex)
    times, states, drifts = [0.0], [m.copy()], [0.0]
    records = [monitor(m)]
    n = cfg.n_steps
    for step in range(1, n + 1):
        gamma, s = _rk4_gamma_with_propagator(gamma, s, g_of_rho, cfg.dt)
        nrm = np.vdot(gamma, gamma).real
        drift = abs(nrm - 1.0)
        if drift > cfg.max_step_drift:
            raise StepSizeError(
                f"norm drift {drift:.3e} exceeds {cfg.max_step_drift:.1e}; reduce dt"
            )
        if cfg.renormalize_each_step:
            gamma = gamma / np.sqrt(nrm)
        if step % cfg.monitor_stride == 0 or step == n:
            rho = gamma @ dagger(gamma)
            times.append(step * cfg.dt)
            states.append(rho)
            drifts.append(drift)
            records.append(monitor(rho))
    monitors = {key: np.array([rec[key] for rec in records]) for key in records[0]}
    traj = Trajectory(
        times=np.array(times), states=states, monitors=monitors, norm_drift=np.array(drifts)
    )
    return s, traj


@dataclass(frozen=True)
class MixtureSpec:
    """Convex superposition of autonomous processes."""

    weights: Sequence[float]
    process_specs: Sequence[GeneratorSpec]

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.process_specs) or len(w) == 0:
            raise ValidationError("weights and process_specs lengths differ or empty")
        if np.any(w <= 0):
            raise ValidationError("all mixture weights must be > 0")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError(f"mixture weights sum to {w.sum()}, not 1")
        object.__setattr__(self, "weights", w)


def evolve_convex_mixture(
    rho0, mix: MixtureSpec, cfg: IntegratorConfig, jobs: Optional[int] = None
) -> Trajectory:
    """Each process propagates rho(0) autonomously under its own nonlinear
    law; the output state is the weight-averaged sum of the branches."""
    m = rho0.matrix if isinstance(rho0, DensityMatrix) else np.asarray(rho0, dtype=complex)
    DensityMatrix(matrix=m)
    if jobs and jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            branches = list(pool.map(lambda s: evolve(m, s, cfg), mix.process_specs))
    else:
        branches = [evolve(m, spec, cfg) for spec in mix.process_specs]
    h_bar = sum(w * s.H for w, s in zip(mix.weights, mix.process_specs))
    monitor = default_monitor(h_bar)
    times = branches[0].times
    states, records = [], []
    for i in range(len(times)):
        rho = sum(w * b.states[i] for w, b in zip(mix.weights, branches))
        states.append(rho)
        records.append(monitor(rho))
    monitors = {key: np.array([rec[key] for rec in records]) for key in records[0]}
    drift = np.max([b.norm_drift for b in branches], axis=0)
    return Trajectory(times=times.copy(), states=states, monitors=monitors, norm_drift=drift)
