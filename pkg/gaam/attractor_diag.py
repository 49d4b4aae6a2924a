"""

Attractor Diagnostics for GAAM

Checks of the long-time theory against computed trajectories: energy decay
bounds, the absorbing ball and its entry time, exponential convergence to a
stable stationary solution, collapse of the attractor to a single point,
continuity in data and the energy inequality. Also the dimension machinery:
the linearized operator, delta-orthonormal families, the Lyapunov trace
estimate, the Lieb-Thirring constant and the fractal-dimension bound.

Every check returns a CheckReport carrying a pass flag and the largest
relative violation; pass means violation <= 1e-9 unless stated otherwise.

License: BSD 3-Clause

"""

#
# IMPORTS
#
import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
from scipy import special

from gaam.constants import (
    CHECK_REL_TOL,
    COLLAPSE_STARTS,
    COLLAPSE_TOL,
    ENERGY_TOL,
    GRAM_DET_MIN,
    ORTHONORMAL_TOL,
    TAYLOR_SLOPE_RANGE,
    TAYLOR_STEPS
)
from gaam.dynamics import SimulationConfig, TrajectoryRecord, iterate, simulate, tangent_simulate
from gaam.fields_metrics import (
    delta_inner,
    lp_gradient_norm,
    random_divfree_field,
    sobolev_norm,
    strong_distance,
    transport
)
from gaam.spectral_core import (
    ModelParams,
    VectorField,
    damped_diffusion_apply,
    derived_constants,
    leray_project
)
from gaam.stationary import picard_solve


#
# CONSTANTS
#
logger = logging.getLogger(__name__)
TINY = np.finfo(float).tiny


#
# ERRORS
#
class RankDeficientError(ValueError):
    """Input fields are (numerically) linearly dependent."""


class NoEntryError(RuntimeError):
    """A trajectory never entered the absorbing ball."""


#
# TYPES
#
@dataclass
class CheckReport:
    name: str
    passed: bool
    max_violation: float
    details: Dict[str, Any] = field(default_factory=dict)
    skipped: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "skipped": bool(self.skipped),
            "max_violation": float(self.max_violation),
            "details": dict(self.details),
        }


@dataclass(frozen=True)
class AbsorbingSetSpec:
    """Ball of squared H^{beta/2} radius 2 b^2 ||f||^2 / (a^2 gamma^2)."""
    radius_sq: float
    f_norm_sq: float
    a: float
    b: float
    gamma: float

    def predicted_entry_time(self, u0_norm_sq: float) -> float:
        """max(0, ln(a^2 gamma^2 ||u0||^2 / (b^2 ||f||^2)) / gamma)."""
        if self.f_norm_sq == 0:
            return math.inf if u0_norm_sq > 0 else 0.0
        if u0_norm_sq == 0:
            return 0.0
        ratio = self.a ** 2 * self.gamma ** 2 * u0_norm_sq / (self.b ** 2 * self.f_norm_sq)
        return max(0.0, math.log(ratio) / self.gamma)


@dataclass(frozen=True)
class OrthonormalFamily:
    """Divergence-free fields orthonormal in (., .)_{H^{beta/2}_delta}."""
    fields: List[VectorField]
    beta: float
    delta: float

    def __len__(self) -> int:
        return len(self.fields)

    def gram(self) -> np.ndarray:
        n = len(self.fields)
        out = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                out[i, j] = out[j, i] = delta_inner(self.fields[i], self.fields[j], self.beta, self.delta)
        return out

    def validate(self, tol: float = ORTHONORMAL_TOL) -> None:
        """Raises ValueError unless the Gram matrix is the identity and members are divergence-free."""
        if not self.fields:
            raise ValueError("an orthonormal family needs at least one field")
        error = float(np.max(np.abs(self.gram() - np.eye(len(self.fields)))))
        if error >= tol:
            raise ValueError(f"family is not orthonormal (Gram error {error:.3e})")
        for i, w in enumerate(self.fields):
            if not w.is_divergence_free():
                raise ValueError(f"family member {i} is not divergence-free")


#
# PUBLIC: energy, decay and absorbing set
#
def prop1_bound(t: np.ndarray, u0_norm_sq: float, f_norm_sq: float, params: ModelParams) -> np.ndarray:
    """e^{-gamma t} ||u0||^2 + (b^2 / (a^2 gamma^2)) ||f||^2 (1 - e^{-gamma t})."""
    k = derived_constants(params)
    decay = np.exp(-params.gamma * np.asarray(t, dtype=float))
    return decay * u0_norm_sq + k.b ** 2 / (k.a ** 2 * params.gamma ** 2) * f_norm_sq * (1 - decay)


def prop1_decay_check(
        record: TrajectoryRecord,
        u0: VectorField,
        f: VectorField,
        params: ModelParams) -> CheckReport:
    """Pointwise check of the energy decay bound on ||u(t)||^2_{H^{beta/2}}."""
    t = record.times - record.times[0]
    u0_sq = sobolev_norm(u0, params.beta / 2) ** 2
    f_sq = sobolev_norm(f, params.beta / 2) ** 2
    bound = prop1_bound(t, u0_sq, f_sq, params)
    violation, slack = _relative_violation(record.norm_sq_beta, bound)
    return CheckReport(
        name="prop1_decay",
        passed=violation <= CHECK_REL_TOL,
        max_violation=max(violation, 0.0),
        details={"min_relative_slack": slack, "samples": len(t)})


def prop1_integral_check(
        record: TrajectoryRecord,
        u0: VectorField,
        f: VectorField,
        params: ModelParams,
        window_T: float) -> CheckReport:
    """Windowed check c int_t^{t+T} ||u||^2_{H^{(alpha+beta)/2}} <= B(t) + (b^2/(a^2 c)) T ||f||^2.

    B(t) is the decay bound at the window start. Window integrals use the
    trapezoid rule on the record samples; windows end at the first sample at
    or beyond t + T and the actual window length enters the right side.

    Raises:
        ValueError: If the window is longer than the record.
    """
    t = record.times - record.times[0]
    if not window_T > 0:
        raise ValueError(f"window_T must be > 0 (got {window_T})")
    if window_T > t[-1] * (1 + 1e-12):
        raise ValueError(f"window_T={window_T} is longer than the record ({t[-1]})")
    k = derived_constants(params)
    u0_sq = sobolev_norm(u0, params.beta / 2) ** 2
    f_sq = sobolev_norm(f, params.beta / 2) ** 2
    values = record.norm_sq_alpha_beta
    cumulative = np.concatenate([[0.0], np.cumsum(0.5 * np.diff(t) * (values[1:] + values[:-1]))])
    lhs, rhs = [], []
    for i in range(len(t)):
        j = int(np.searchsorted(t, t[i] + window_T * (1 - 1e-12)))
        if j >= len(t):
            break
        length = t[j] - t[i]
        lhs.append(k.c * (cumulative[j] - cumulative[i]))
        rhs.append(prop1_bound(t[i], u0_sq, f_sq, params) + k.b ** 2 / (k.a ** 2 * k.c) * length * f_sq)
    violation, slack = _relative_violation(np.array(lhs), np.array(rhs))
    return CheckReport(
        name="prop1_integral",
        passed=violation <= CHECK_REL_TOL,
        max_violation=max(violation, 0.0),
        details={"min_relative_slack": slack, "windows": len(lhs), "window_T": window_T})


def absorbing_set_spec(f: VectorField, params: ModelParams) -> AbsorbingSetSpec:
    k = derived_constants(params)
    f_sq = sobolev_norm(f, params.beta / 2) ** 2
    return AbsorbingSetSpec(
        radius_sq=2 * k.b ** 2 * f_sq / (k.a ** 2 * params.gamma ** 2),
        f_norm_sq=f_sq,
        a=k.a,
        b=k.b,
        gamma=params.gamma)


def absorbing_entry(record: TrajectoryRecord, spec: AbsorbingSetSpec) -> float:
    """First sample time (from the record start) inside the absorbing ball.

    Raises:
        NoEntryError: If no sample lies inside the ball.
    """
    inside = np.nonzero(record.norm_sq_beta <= spec.radius_sq)[0]
    if inside.size == 0:
        raise NoEntryError(
            f"trajectory never entered the absorbing ball (radius^2 {spec.radius_sq:.6g}, "
            f"last ||u||^2 {record.norm_sq_beta[-1]:.6g})")
    return float(record.times[inside[0]] - record.times[0])


def absorbing_check(record: TrajectoryRecord, spec: AbsorbingSetSpec) -> CheckReport:
    """Entry time must not exceed the predicted entry time plus one sample stride.

    A zero forcing makes the ball degenerate and the check is skipped.
    """
    if spec.f_norm_sq == 0:
        return CheckReport("absorbing_entry", True, 0.0, {"reason": "f = 0, absorbing ball degenerates"}, skipped=True)
    predicted = spec.predicted_entry_time(float(record.norm_sq_beta[0]))
    stride = float(np.max(np.diff(record.times))) if len(record.times) > 1 else 0.0
    try:
        entry = absorbing_entry(record, spec)
    except NoEntryError as error:
        return CheckReport("absorbing_entry", False, math.inf,
                           {"error": str(error), "predicted_entry_time": predicted})
    allowed = predicted + stride
    violation = (entry - allowed) / max(allowed, stride, TINY)
    return CheckReport(
        name="absorbing_entry",
        passed=entry <= allowed,
        max_violation=max(violation, 0.0),
        details={"entry_time": entry, "predicted_entry_time": predicted,
                 "radius_sq": spec.radius_sq, "stride": stride})


def energy_inequality_check(record: TrajectoryRecord, tol: float = ENERGY_TOL) -> CheckReport:
    """Energy balance per step and in integrated form.

    The per-step residual of d/dt 1/2 ||u||^2_delta + nu ||L^{alpha/2} u||^2_delta
    + gamma ||u||^2_delta - (f, u)_delta and the integrated excess
    ||u(t)||^2_delta - ||u0||^2_delta + 2 int (...) are both measured relative
    to the largest energy of the run; both must stay below tol.
    """
    scale = max(float(np.max(record.norm_sq_delta)), TINY)
    step_violation = record.max_step_residual / scale
    excess = record.norm_sq_delta - (record.norm_sq_delta[0] - record.cumulative_dissipation)
    integrated_violation = float(np.max(excess)) / scale
    violation = max(step_violation, integrated_violation, 0.0)
    return CheckReport(
        name="energy_inequality",
        passed=violation <= tol,
        max_violation=violation,
        details={"max_step_residual": record.max_step_residual,
                 "relative_step_residual": step_violation,
                 "relative_integrated_excess": integrated_violation,
                 "tolerance": tol})


#
# PUBLIC: stationary attraction
#
def theorem4_decay_check(record: TrajectoryRecord) -> CheckReport:
    """||u(t) - U||^2_delta <= ||u0 - U||^2_delta e^{-gamma t} at every sample.

    Also reports the least-squares slope of log ||u(t) - U||^2_delta (expected
    <= -gamma) and, informationally, the unweighted H^{beta/2} ratio against
    its (b/a) e^{-gamma t} bound.

    Raises:
        ValueError: If the record carries no reference distances.
    """
    if record.dist_delta_sq is None:
        raise ValueError("theorem4_decay_check needs a record simulated with a reference field")
    params = record.params
    k = derived_constants(params)
    t = record.times - record.times[0]
    d = record.dist_delta_sq
    bound = d[0] * np.exp(-params.gamma * t)
    violation, slack = _relative_violation(d, bound)
    positive = d > 1e-280
    slope = float(np.polyfit(t[positive], np.log(d[positive]), 1)[0]) if positive.sum() >= 2 else float("-inf")
    strong_sq = record.dist_strong ** 2
    unweighted_bound = (k.b / k.a) * strong_sq[0] * np.exp(-params.gamma * t)
    unweighted_violation, _ = _relative_violation(strong_sq, unweighted_bound)
    return CheckReport(
        name="theorem4_decay",
        passed=violation <= CHECK_REL_TOL,
        max_violation=max(violation, 0.0),
        details={"fitted_log_slope": slope, "gamma": params.gamma,
                 "min_relative_slack": slack,
                 "unweighted_violation": max(unweighted_violation, 0.0)})


def singleton_attractor_check(
        f: VectorField,
        params: ModelParams,
        n_starts: int = COLLAPSE_STARTS,
        t_end: float = 10.0,
        dt: float = 0.01,
        tol: float = COLLAPSE_TOL,
        U: Optional[VectorField] = None,
        starts: Optional[Sequence[VectorField]] = None,
        seed: int = 0,
        workers: int = 1) -> CheckReport:
    """Evolve several initial data and check they collapse onto U.

    Args:
        f: Divergence-free forcing.
        params: Model parameters.
        n_starts: Number of random initial data (ignored if `starts` given).
        t_end: Final time of every run.
        dt: Time step.
        tol: Tolerance on the final spread and on the distance to U.
        U: Stationary solution (computed by picard_solve when None).
        starts: Explicit initial data.
        seed: Seed of the first random start.
        workers: Thread-pool size for the independent runs.

    Returns:
        CheckReport with the final pairwise spread and distance to U.
    """
    if U is None:
        U = picard_solve(f, params).field
    if starts is None:
        scale = max(1.0, math.sqrt(absorbing_set_spec(f, params).radius_sq))
        starts = []
        for i in range(n_starts):
            start = random_divfree_field(seed + i, None, f.grid)
            starts.append(start * (scale / sobolev_norm(start, params.beta / 2)))
    cfg = SimulationConfig(dt=dt, t_end=t_end)

    def run(u0: VectorField) -> VectorField:
        for _, _, u in iterate(u0, f, params, cfg):
            pass
        return u

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            finals = list(pool.map(run, starts))
    else:
        finals = [run(u0) for u0 in starts]
    spread = 0.0
    for i in range(len(finals)):
        for j in range(i + 1, len(finals)):
            spread = max(spread, strong_distance(finals[i], finals[j], params.beta))
    to_U = max(strong_distance(u, U, params.beta) for u in finals)
    logger.debug("singleton check: %d runs, spread %.3e, distance to U %.3e", len(finals), spread, to_U)
    violation = max(spread, to_U) / tol
    return CheckReport(
        name="singleton_attractor",
        passed=spread < tol and to_U < tol,
        max_violation=max(violation - 1.0, 0.0),
        details={"spread": spread, "distance_to_U": to_U, "starts": len(finals),
                 "t_end": t_end, "tolerance": tol})


def continuity_in_data_check(
        u0: VectorField,
        f: VectorField,
        params: ModelParams,
        cfg: SimulationConfig,
        h: float = 1e-3,
        seed: int = 0) -> CheckReport:
    """Growth of a perturbation of the initial data.

    Runs u0 and u0 + w0 with ||w0||_{H^{beta/2}} = h, measures
    r(t) = ||w(t)||^2 / ||w0||^2 and the smallest K with
    r(t) <= exp(K (||u0||^2 + t ||f||^2)). Passes while r stays finite.
    """
    w0 = random_divfree_field(seed, None, u0.grid)
    w0 = w0 * (h / sobolev_norm(w0, params.beta / 2))
    u0_sq = sobolev_norm(u0, params.beta / 2) ** 2
    f_sq = sobolev_norm(f, params.beta / 2) ** 2
    w0_sq = h ** 2
    max_ratio, K = 1.0, 0.0
    for (_, t, u), (_, _, v) in zip(iterate(u0, f, params, cfg), iterate(u0 + w0, f, params, cfg)):
        ratio = sobolev_norm(v - u, params.beta / 2) ** 2 / w0_sq
        max_ratio = max(max_ratio, ratio)
        exponent = u0_sq + t * f_sq
        if exponent > 0 and ratio > 0:
            K = max(K, math.log(ratio) / exponent)
    finite = bool(np.isfinite(max_ratio))
    return CheckReport(
        name="continuity_in_data",
        passed=finite,
        max_violation=0.0 if finite else math.inf,
        details={"max_ratio": max_ratio, "measured_K": K, "h": h})


def tangent_taylor_check(
        u0: VectorField,
        f: VectorField,
        params: ModelParams,
        cfg: SimulationConfig,
        v0: Optional[VectorField] = None,
        hs: Sequence[float] = TAYLOR_STEPS,
        seed: int = 0) -> CheckReport:
    """Taylor remainder of the flow against its tangent.

    r(h) = ||S(t)(u0 + h v0) - S(t)u0 - h DS(t, u0) v0||_{H^{beta/2}} must
    shrink like h^2: the fitted log-log slope over `hs` has to lie in [1.9, 2.1].
    Skipped when the nonlinearity is switched off (r is round-off only).
    """
    if not cfg.nonlinearity_enabled:
        return CheckReport("tangent_taylor", True, 0.0, {"reason": "nonlinearity disabled"}, skipped=True)
    if v0 is None:
        v0 = random_divfree_field(seed, None, u0.grid)
        v0 = v0 * (1.0 / sobolev_norm(v0, params.beta / 2))
    base = simulate(u0, f, params, cfg, keep_states=True)
    tangent = tangent_simulate(base, v0, params, cfg).final_state
    remainders = []
    for h in hs:
        for _, _, perturbed in iterate(u0 + h * v0, f, params, cfg):
            pass
        remainders.append(sobolev_norm(perturbed - base.final_state - h * tangent, params.beta / 2))
    remainders = np.array(remainders)
    if np.any(remainders <= 0):
        return CheckReport("tangent_taylor", False, math.inf, {"remainders": remainders})
    slope = float(np.polyfit(np.log(hs), np.log(remainders), 1)[0])
    lo, hi = TAYLOR_SLOPE_RANGE
    return CheckReport(
        name="tangent_taylor",
        passed=lo <= slope <= hi,
        max_violation=max(lo - slope, slope - hi, 0.0),
        details={"slope": slope, "h": list(hs), "remainders": remainders})


#
# PUBLIC: dimension estimate
#
def l_operator_apply(w: VectorField, u_snapshot: VectorField, params: ModelParams) -> VectorField:
    """L w = -nu (-Delta)^{alpha/2} w - J^-beta_delta P((w.grad)u + (u.grad)w) - gamma w."""
    w.check_grid(u_snapshot)
    diffusion = damped_diffusion_apply(w, params)
    coupling = transport(u_snapshot, w, params)
    return w.with_coefficients(-diffusion.coefficients - 2.0 * coupling.coefficients, True)


def gram_schmidt_delta(fields: Sequence[VectorField], beta: float, delta: float) -> OrthonormalFamily:
    """Modified Gram-Schmidt in (., .)_{H^{beta/2}_delta} with Leray projection.

    Raises:
        RankDeficientError: If the normalized inputs have Gram determinant <= 1e-14.
    """
    if not fields:
        raise RankDeficientError("no fields given")
    normalized = []
    for i, w in enumerate(fields):
        norm = sobolev_norm(w, beta / 2, "delta_weighted", delta)
        if norm == 0:
            raise RankDeficientError(f"field {i} is zero")
        normalized.append(w * (1.0 / norm))
    gram = OrthonormalFamily(normalized, beta, delta).gram()
    det = float(np.linalg.det(gram))
    if det <= GRAM_DET_MIN:
        raise RankDeficientError(f"fields are linearly dependent (Gram determinant {det:.3e})")
    out: List[VectorField] = []
    for w in normalized:
        v = leray_project(w)
        for q in out:
            v = leray_project(v - q * delta_inner(v, q, beta, delta))
        out.append(v * (1.0 / sobolev_norm(v, beta / 2, "delta_weighted", delta)))
    return OrthonormalFamily(out, beta, delta)


def lieb_thirring_constant() -> float:
    """C_LT = (3 / 5^{5/3}) (16 pi^{3/2} Gamma(7/2) / Gamma(5))^{2/3}."""
    inner = 16 * math.pi ** 1.5 * special.gamma(3.5) / special.gamma(5.0)
    return float(3 / 5 ** (5 / 3) * inner ** (2 / 3))


def frak_C_from_constants(a: float, b: float, c: float, gamma: float) -> float:
    """(2/5) C_LT^{5/2} / (a c)^{3/2} (b^4 / (4 a^8 gamma^4) + 3 b^2 / (4 a^4 c^2))."""
    lead = 0.4 * lieb_thirring_constant() ** 2.5 / (a * c) ** 1.5
    return lead * (b ** 4 / (4 * a ** 8 * gamma ** 4) + 3 * b ** 2 / (4 * a ** 4 * c ** 2))


def frak_C(params: ModelParams) -> float:
    k = derived_constants(params)
    return frak_C_from_constants(k.a, k.b, k.c, params.gamma)


def fractal_bound_from_constants(f_delta_norm: float, a: float, b: float, c: float, gamma: float) -> float:
    """(2 C / gamma) max(||f||^2_delta, ||f||^4_delta)."""
    f_sq = f_delta_norm ** 2
    return 2 * frak_C_from_constants(a, b, c, gamma) / gamma * max(f_sq, f_sq ** 2)


def fractal_dim_bound(f: VectorField, params: ModelParams, strict: bool = False) -> float:
    """Upper bound on the fractal dimension of the attractor.

    The estimate is proven for alpha >= 1 and beta >= 2; outside that range a
    warning is emitted, or ValueError raised when strict.
    """
    if not (params.alpha >= 1 and params.beta >= 2):
        message = f"dimension bound assumes alpha >= 1 and beta >= 2 (got {params.alpha}, {params.beta})"
        if strict:
            raise ValueError(message)
        warnings.warn(message, stacklevel=2)
    k = derived_constants(params)
    f_norm = sobolev_norm(f, params.beta / 2, "delta_weighted", params.delta)
    return fractal_bound_from_constants(f_norm, k.a, k.b, k.c, params.gamma)


def lyapunov_trace(u_snapshot: VectorField, family: OrthonormalFamily, params: ModelParams) -> float:
    """sum_i (L w_i, w_i)_{H^{beta/2}_delta}."""
    return float(sum(
        delta_inner(l_operator_apply(w, u_snapshot, params), w, family.beta, family.delta)
        for w in family.fields))


def lyapunov_trace_check(u_snapshot: VectorField, family: OrthonormalFamily, params: ModelParams) -> CheckReport:
    """Trace of L on the family against -(gamma a / 2) n + (2/5)(C_LT^{5/2}/(a c)^{3/2}) ||grad u||^{5/2}_{L^{5/2}}.

    Raises:
        ValueError: If the family is not orthonormal and divergence-free.
    """
    family.validate()
    k = derived_constants(params)
    n = len(family)
    trace = lyapunov_trace(u_snapshot, family, params)
    grad = lp_gradient_norm(u_snapshot, 2.5)
    rhs = -(params.gamma * k.a / 2) * n + 0.4 * lieb_thirring_constant() ** 2.5 / (k.a * k.c) ** 1.5 * grad ** 2.5
    scale = max(abs(trace), abs(rhs), TINY)
    violation = (trace - rhs) / scale
    return CheckReport(
        name="lyapunov_trace",
        passed=violation <= CHECK_REL_TOL,
        max_violation=max(violation, 0.0),
        details={"trace": trace, "bound": rhs, "n": n, "grad_l52": grad,
                 "slack": rhs - trace})


def lowest_mode_family(u: VectorField, n: int, beta: float, delta: float) -> OrthonormalFamily:
    """Delta-orthonormal family built from the n lowest divergence-free single modes."""
    grid = u.grid
    candidates = []
    for mode in grid.enumerated_modes[1:]:
        k = mode.astype(float)
        for axis in range(grid.dim):
            e = np.zeros(grid.dim)
            e[axis] = 1.0
            a = e - k * (k @ e) / (k @ k)
            if np.linalg.norm(a) < 1e-8:
                continue
            for amplitude in (a, 1j * a):
                candidates.append(VectorField.single_mode(grid, tuple(mode), amplitude))
        if len(candidates) >= 4 * n:
            break
    family: List[VectorField] = []
    for w in candidates:
        try:
            family = gram_schmidt_delta(family + [w], beta, delta).fields
        except RankDeficientError:
            continue
        if len(family) == n:
            return OrthonormalFamily(family, beta, delta)
    raise RankDeficientError(f"could not build {n} independent modes on this grid")


#
# INTERNAL
#
def _relative_violation(lhs: np.ndarray, rhs: np.ndarray):
    """(max (lhs - rhs) / scale, min (rhs - lhs) / scale) with scale = max |rhs|."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    if lhs.size == 0:
        return 0.0, 0.0
    scale = max(float(np.max(np.abs(rhs))), TINY)
    diff = (lhs - rhs) / scale
    return float(np.max(diff)), float(np.min(-diff))
