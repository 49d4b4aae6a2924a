"""

Dynamics for GAAM

Time integration of the damped alpha-model with a second-order exponential
time-differencing Runge-Kutta scheme (ETD-RK2, Cox-Matthews form). The linear
part gamma + nu |k|^alpha is integrated exactly; forcing and the filtered
transport term enter through the phi-functions. Also the mollified variant of
the model and the tangent (linearized) flow along a stored trajectory.

License: BSD 3-Clause

"""

#
# IMPORTS
#
import logging
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np
from scipy import special

from gaam.constants import (
    BLOWUP_FACTOR,
    PHI_SERIES_CUTOFF,
    REFERENCE_COLUMNS,
    TRAJECTORY_COLUMNS
)
from gaam.fields_metrics import (
    ForcingField,
    delta_inner,
    lp_gradient_norm,
    sobolev_norm,
    sobolev_weight,
    strong_distance,
    transport,
    weak_distance
)
from gaam.spectral_core import (
    DivergenceFreeError,
    ModelParams,
    VectorField,
    damped_diffusion_symbol,
    derived_constants
)


#
# CONSTANTS
#
logger = logging.getLogger(__name__)


#
# ERRORS
#
class BlowUpError(RuntimeError):
    """Raised by the blow-up guard: non-finite state or runaway norm."""

    def __init__(self, message: str, step: int = -1, time: float = float("nan"), norm: float = float("nan")):
        super().__init__(message)
        self.step = step
        self.time = time
        self.norm = norm


class TrajectoryMismatchError(ValueError):
    """Raised when a tangent run does not fit the stored trajectory."""


#
# TYPES
#
@dataclass(frozen=True)
class SimulationConfig:
    """Time-stepping settings of one run."""
    dt: float
    t_end: float
    record_stride: int = 1
    mollifier_epsilon: float = 0.0
    nonlinearity_enabled: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0 (got {self.dt})")
        if not self.t_end > self.dt:
            raise ValueError(f"t_end must exceed dt (got t_end={self.t_end}, dt={self.dt})")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValueError(f"record_stride must be an integer >= 1 (got {self.record_stride})")
        if self.mollifier_epsilon < 0:
            raise ValueError(f"mollifier_epsilon must be >= 0 (got {self.mollifier_epsilon})")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))


@dataclass
class TrajectoryRecord:
    """Diagnostics sampled along a run, plus the final state.

    The per-sample arrays share the length of `times`. `energy_residual` at a
    sample is the energy-balance residual of the step that ended there (0 at
    the initial sample). `cumulative_dissipation` is
    2 int_0^t (nu ||L^{alpha/2} u||^2_delta + gamma ||u||^2_delta - (f, u)_delta) ds
    by the trapezoid rule on the step grid.
    """
    params: ModelParams
    dt: float
    steps: np.ndarray
    times: np.ndarray
    norm_sq_beta: np.ndarray
    norm_sq_delta: np.ndarray
    norm_sq_alpha_beta: np.ndarray
    energy_residual: np.ndarray
    grad_l52: np.ndarray
    cumulative_dissipation: np.ndarray
    final_state: VectorField
    max_step_residual: float = 0.0
    dist_strong: Optional[np.ndarray] = None
    dist_weak: Optional[np.ndarray] = None
    dist_delta_sq: Optional[np.ndarray] = None
    states: Optional[List[VectorField]] = None
    stage_states: Optional[List[VectorField]] = None
    mollifier_epsilon: float = 0.0
    nonlinearity_enabled: bool = True

    @property
    def has_reference(self) -> bool:
        return self.dist_strong is not None

    @property
    def columns(self) -> List[str]:
        return TRAJECTORY_COLUMNS + (REFERENCE_COLUMNS if self.has_reference else [])

    def rows(self) -> List[Dict[str, float]]:
        """One dict per sample, keyed by `columns`."""
        out = []
        for i in range(len(self.times)):
            row = {
                "step": int(self.steps[i]),
                "t": float(self.times[i]),
                "norm_sq_beta": float(self.norm_sq_beta[i]),
                "norm_sq_delta": float(self.norm_sq_delta[i]),
                "norm_sq_alpha_beta": float(self.norm_sq_alpha_beta[i]),
                "energy_residual": float(self.energy_residual[i]),
                "grad_l52": float(self.grad_l52[i]),
            }
            if self.has_reference:
                row["dist_strong"] = float(self.dist_strong[i])
                row["dist_weak"] = float(self.dist_weak[i])
            out.append(row)
        return out


#
# PUBLIC
#
def phi_functions(z: np.ndarray, dt: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exponential factor and the scaled phi-functions of ETD-RK2.

    Args:
        z: dt * lambda, non-negative.
        dt: Time step.

    Returns:
        (exp(-z), dt * phi1(-z), dt * phi2(-z)) with phi1(-z) = (1 - e^-z)/z
        and phi2(-z) = (e^-z - 1 + z)/z^2; phi2 switches to its Taylor series
        for small z.
    """
    z = np.asarray(z, dtype=float)
    expo = np.exp(-z)
    phi1 = special.exprel(-z)
    safe = np.where(z > PHI_SERIES_CUTOFF, z, 1.0)
    phi2 = np.where(
        z > PHI_SERIES_CUTOFF,
        (1.0 - phi1) / safe,
        0.5 - z / 6.0 + z ** 2 / 24.0)
    return expo, dt * phi1, dt * phi2


def absorbing_radius_sq(f: VectorField, params: ModelParams) -> float:
    """2 b^2 ||f||^2_{H^{beta/2}} / (a^2 gamma^2)."""
    k = derived_constants(params)
    f_sq = sobolev_norm(f, params.beta / 2) ** 2
    return 2 * k.b ** 2 * f_sq / (k.a ** 2 * params.gamma ** 2)


def guard_bound(u0: VectorField, f: VectorField, params: ModelParams) -> float:
    """H^{beta/2} norm above which a run is declared blown up."""
    scale = max(
        np.sqrt(absorbing_radius_sq(f, params)),
        sobolev_norm(u0, params.beta / 2),
        np.finfo(float).tiny)
    return BLOWUP_FACTOR * scale


def step(
        state: VectorField,
        f: VectorField,
        params: ModelParams,
        dt: float,
        cfg: SimulationConfig,
        bound: Optional[float] = None) -> VectorField:
    """Advance one ETD-RK2 step.

    Args:
        state: Divergence-free state u_n.
        f: Divergence-free forcing.
        params: Model parameters.
        dt: Time step (> 0).
        cfg: Run settings (mollifier width, nonlinearity switch).
        bound: Optional H^{beta/2} blow-up bound.

    Returns:
        u_{n+1}.

    Raises:
        BlowUpError: If the new state is non-finite or exceeds `bound`.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0 (got {dt})")
    _require_divergence_free(state, "state")
    stepper = _Stepper(f, params, dt, cfg.mollifier_epsilon, cfg.nonlinearity_enabled)
    new_state, _ = stepper.advance(state)
    _guard(new_state, params, bound, 1, dt)
    return new_state


def simulate(
        u0: VectorField,
        f: VectorField,
        params: ModelParams,
        cfg: SimulationConfig,
        reference: Optional[VectorField] = None,
        keep_states: bool = False,
        t0: float = 0.0) -> TrajectoryRecord:
    """Run the model from u0 to t_end.

    Samples are taken at step 0, every `record_stride` steps and at the final
    step; sample times are t0 + step * dt.

    Args:
        u0: Divergence-free initial data.
        f: Divergence-free forcing.
        params: Model parameters.
        cfg: Run settings.
        reference: Optional field (e.g. a stationary solution) to which the
            strong, weak and delta-weighted distances are recorded.
        keep_states: Keep every step state and ETD stage (needed by tangent runs).
        t0: Start time label.

    Returns:
        TrajectoryRecord.

    Raises:
        BlowUpError: Numerical fault detected by the guard.
    """
    _require_divergence_free(u0, "u0")
    _require_divergence_free(f, "f")
    u0.check_grid(f)
    if reference is not None:
        u0.check_grid(reference)
    n_steps = cfg.n_steps
    stepper = _Stepper(f, params, cfg.dt, cfg.mollifier_epsilon, cfg.nonlinearity_enabled)
    budget = _EnergyBudget(f, params)
    bound = guard_bound(u0, f, params)
    sampler = _Sampler(params, reference)
    logger.debug("simulate: %d steps of dt=%s (bound %.3e)", n_steps, cfg.dt, bound)

    states = [u0] if keep_states else None
    stages = [] if keep_states else None
    u = u0
    energy, dissipation = budget.energy(u), budget.dissipation(u)
    cumulative = 0.0
    max_residual = 0.0
    sampler.add(0, t0, u, 0.0, cumulative)
    for n in range(1, n_steps + 1):
        u_next, stage = stepper.advance(u)
        _guard(u_next, params, bound, n, t0 + n * cfg.dt)
        next_energy, next_dissipation = budget.energy(u_next), budget.dissipation(u_next)
        residual = (next_energy - energy) / cfg.dt + 0.5 * (dissipation + next_dissipation)
        cumulative += cfg.dt * (dissipation + next_dissipation)
        max_residual = max(max_residual, abs(residual))
        if keep_states:
            states.append(u_next)
            stages.append(stage)
        u, energy, dissipation = u_next, next_energy, next_dissipation
        if n % cfg.record_stride == 0 or n == n_steps:
            sampler.add(n, t0 + n * cfg.dt, u, residual, cumulative)
    return sampler.build(
        dt=cfg.dt,
        final_state=u,
        max_step_residual=max_residual,
        states=states,
        stage_states=stages,
        mollifier_epsilon=cfg.mollifier_epsilon,
        nonlinearity_enabled=cfg.nonlinearity_enabled)


def iterate(
        u0: VectorField,
        f: VectorField,
        params: ModelParams,
        cfg: SimulationConfig) -> Iterator[Tuple[int, float, VectorField]]:
    """Yield (step, time, state) for every step of a run, starting at step 0.

    Same update and blow-up guard as simulate, without diagnostics.
    """
    _require_divergence_free(u0, "u0")
    _require_divergence_free(f, "f")
    u0.check_grid(f)
    stepper = _Stepper(f, params, cfg.dt, cfg.mollifier_epsilon, cfg.nonlinearity_enabled)
    bound = guard_bound(u0, f, params)
    u = u0
    yield 0, 0.0, u
    for n in range(1, cfg.n_steps + 1):
        u, _ = stepper.advance(u)
        _guard(u, params, bound, n, n * cfg.dt)
        yield n, n * cfg.dt, u


def tangent_simulate(
        u_trajectory: TrajectoryRecord,
        v0: VectorField,
        params: ModelParams,
        cfg: SimulationConfig) -> TrajectoryRecord:
    """Evolve the linearized flow DS(t, u0) v0 along a stored trajectory.

    The update is the exact derivative of the ETD-RK2 step with respect to
    its input, so finite differences of two nonlinear runs converge to it at
    second order in the perturbation size. The energy residual is not defined
    for the linearized flow and is recorded as NaN.

    Args:
        u_trajectory: Record from simulate(..., keep_states=True).
        v0: Divergence-free initial perturbation.
        params: Model parameters of the trajectory.
        cfg: Run settings; dt and the nonlinear options must match the trajectory.

    Returns:
        TrajectoryRecord of v.

    Raises:
        TrajectoryMismatchError: Missing states or incompatible settings.
    """
    _require_divergence_free(v0, "v0")
    if u_trajectory.states is None or u_trajectory.stage_states is None:
        raise TrajectoryMismatchError("trajectory was recorded without keep_states=True")
    if u_trajectory.params != params:
        raise TrajectoryMismatchError("trajectory was computed with different model parameters")
    if not np.isclose(u_trajectory.dt, cfg.dt, rtol=1e-12, atol=0.0):
        raise TrajectoryMismatchError(f"dt mismatch: trajectory {u_trajectory.dt}, config {cfg.dt}")
    if (u_trajectory.mollifier_epsilon != cfg.mollifier_epsilon
            or u_trajectory.nonlinearity_enabled != cfg.nonlinearity_enabled):
        raise TrajectoryMismatchError("nonlinearity settings differ from the trajectory's")
    n_steps = cfg.n_steps
    if n_steps > len(u_trajectory.stage_states):
        raise TrajectoryMismatchError(
            f"config needs {n_steps} steps, trajectory stores {len(u_trajectory.stage_states)}")
    u_trajectory.states[0].check_grid(v0)

    stepper = _Stepper(ForcingField.zeros(v0.grid), params, cfg.dt,
                       cfg.mollifier_epsilon, cfg.nonlinearity_enabled)
    sampler = _Sampler(params, None)
    t0 = float(u_trajectory.times[0])
    v = v0
    sampler.add(0, t0, v, float("nan"), 0.0)
    for n in range(1, n_steps + 1):
        v = stepper.linearized(u_trajectory.states[n - 1], u_trajectory.stage_states[n - 1], v)
        if not np.all(np.isfinite(v.coefficients)):
            raise BlowUpError("non-finite tangent state", step=n, time=t0 + n * cfg.dt)
        if n % cfg.record_stride == 0 or n == n_steps:
            sampler.add(n, t0 + n * cfg.dt, v, float("nan"), 0.0)
    return sampler.build(
        dt=cfg.dt,
        final_state=v,
        max_step_residual=float("nan"),
        mollifier_epsilon=cfg.mollifier_epsilon,
        nonlinearity_enabled=cfg.nonlinearity_enabled)


#
# INTERNAL
#
class _Stepper:
    """ETD-RK2 update with its coefficients precomputed for one dt."""

    def __init__(
            self,
            f: VectorField,
            params: ModelParams,
            dt: float,
            epsilon: float = 0.0,
            nonlinear: bool = True):
        self.f = f
        self.params = params
        self.epsilon = epsilon
        self.nonlinear = nonlinear
        z = dt * damped_diffusion_symbol(f.grid, params)
        self.expo, self.phi1, self.phi2 = phi_functions(z, dt)

    def rhs(self, u: VectorField) -> np.ndarray:
        """Coefficients of f - B(u, u)."""
        if not self.nonlinear:
            return self.f.coefficients
        return self.f.coefficients - transport(u, u, self.params, self.epsilon).coefficients

    def rhs_derivative(self, u: VectorField, v: VectorField) -> np.ndarray:
        """Coefficients of -2 B(u, v)."""
        if not self.nonlinear:
            return np.zeros_like(v.coefficients)
        return -2.0 * transport(u, v, self.params, self.epsilon).coefficients

    def advance(self, u: VectorField) -> Tuple[VectorField, VectorField]:
        """Return (u_{n+1}, stage a_n)."""
        rhs_u = self.rhs(u)
        stage = u.with_coefficients(self.expo * u.coefficients + self.phi1 * rhs_u, True)
        rhs_a = self.rhs(stage)
        new = stage.coefficients + self.phi2 * (rhs_a - rhs_u)
        return u.with_coefficients(new, True), stage

    def linearized(self, u: VectorField, stage: VectorField, v: VectorField) -> VectorField:
        """Derivative of advance(u) applied to v, given the stored stage of u."""
        d_rhs_u = self.rhs_derivative(u, v)
        d_stage = v.with_coefficients(self.expo * v.coefficients + self.phi1 * d_rhs_u, True)
        d_rhs_a = self.rhs_derivative(stage, d_stage)
        return v.with_coefficients(d_stage.coefficients + self.phi2 * (d_rhs_a - d_rhs_u), True)


class _EnergyBudget:
    """E(u) = 1/2 ||u||^2_delta and D(u) = nu ||L^{alpha/2} u||^2_delta + gamma ||u||^2_delta - (f, u)_delta."""

    def __init__(self, f: VectorField, params: ModelParams):
        grid = f.grid
        self.f = f
        self.params = params
        self.weight = sobolev_weight(grid, params.beta / 2, "delta_weighted", params.delta)
        self.dissipation_weight = self.weight * damped_diffusion_symbol(grid, params)

    def _weighted(self, u: VectorField, weight: np.ndarray) -> float:
        return u.grid.spectral_sum(weight * np.sum(np.abs(u.coefficients) ** 2, axis=0))

    def energy(self, u: VectorField) -> float:
        return 0.5 * self._weighted(u, self.weight)

    def dissipation(self, u: VectorField) -> float:
        forcing = delta_inner(self.f, u, self.params.beta, self.params.delta)
        return self._weighted(u, self.dissipation_weight) - forcing


class _Sampler:
    """Accumulates per-sample diagnostics."""

    def __init__(self, params: ModelParams, reference: Optional[VectorField]):
        self.params = params
        self.reference = reference
        self.columns: Dict[str, list] = {name: [] for name in (
            "steps", "times", "norm_sq_beta", "norm_sq_delta", "norm_sq_alpha_beta",
            "energy_residual", "grad_l52", "cumulative_dissipation",
            "dist_strong", "dist_weak", "dist_delta_sq")}

    def add(self, n: int, t: float, u: VectorField, residual: float, cumulative: float) -> None:
        p = self.params
        c = self.columns
        c["steps"].append(n)
        c["times"].append(t)
        c["norm_sq_beta"].append(sobolev_norm(u, p.beta / 2) ** 2)
        c["norm_sq_delta"].append(sobolev_norm(u, p.beta / 2, "delta_weighted", p.delta) ** 2)
        c["norm_sq_alpha_beta"].append(sobolev_norm(u, (p.alpha + p.beta) / 2) ** 2)
        c["energy_residual"].append(residual)
        c["grad_l52"].append(lp_gradient_norm(u, 2.5))
        c["cumulative_dissipation"].append(cumulative)
        if self.reference is not None:
            c["dist_strong"].append(strong_distance(u, self.reference, p.beta))
            c["dist_weak"].append(weak_distance(u, self.reference, p.beta, p.delta))
            diff = u - self.reference
            c["dist_delta_sq"].append(sobolev_norm(diff, p.beta / 2, "delta_weighted", p.delta) ** 2)

    def build(self, **kwargs) -> TrajectoryRecord:
        arrays = {name: np.asarray(values) for name, values in self.columns.items()}
        if self.reference is None:
            for name in ("dist_strong", "dist_weak", "dist_delta_sq"):
                arrays[name] = None
        return TrajectoryRecord(params=self.params, **arrays, **kwargs)


def _guard(u: VectorField, params: ModelParams, bound: Optional[float], n: int, t: float) -> None:
    if not np.all(np.isfinite(u.coefficients)):
        raise BlowUpError(f"non-finite coefficients at step {n} (t={t:.6g})", step=n, time=t)
    if bound is not None:
        norm = sobolev_norm(u, params.beta / 2)
        if norm > bound:
            raise BlowUpError(
                f"||u||_H^(beta/2) = {norm:.6g} exceeds guard {bound:.6g} at step {n} (t={t:.6g})",
                step=n, time=t, norm=norm)


def _require_divergence_free(u: VectorField, name: str) -> None:
    if not u.divergence_free:
        raise DivergenceFreeError(f"{name} must be divergence-free (Leray-project it first)")
