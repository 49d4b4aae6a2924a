"""

Stationary Solutions for GAAM

Fixed-point construction of stationary solutions

    nu (-Delta)^{alpha/2} U + J^-beta_delta P div(U (x) U) + gamma U = f

by Picard iteration U <- (J^alpha_gamma)^-1 [f - N(U)], an epsilon-Laplacian
continuation for harder cases, the smallness-condition report that decides
which stability statement applies and a spectral regularity diagnostic.

License: BSD 3-Clause

"""

#
# IMPORTS
#
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from gaam.constants import (
    COLLAPSE_STARTS,
    DEFAULT_EPS_SCHEDULE,
    DEFAULT_SMALLNESS_C,
    STATIONARY_MAX_ITER,
    STATIONARY_TOL
)
from gaam.fields_metrics import (
    random_divfree_field,
    sobolev_norm,
    sobolev_weight,
    strong_distance,
    transport
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

Verdict = Literal["asymptotic", "orbital_only", "neither"]


#
# ERRORS
#
class NonConvergenceError(RuntimeError):
    """Fixed-point iteration did not converge.

    Attributes:
        iterate_norms: H^{beta/2} norms of the iterates of the failing solve.
        continuation_path: (epsilon, residual) pairs completed before the failure.
    """

    def __init__(
            self,
            message: str,
            iterate_norms: Optional[List[float]] = None,
            continuation_path: Optional[List[Tuple[float, float]]] = None):
        super().__init__(message)
        self.iterate_norms = iterate_norms or []
        self.continuation_path = continuation_path or []


#
# TYPES
#
@dataclass
class StationarySolution:
    field: VectorField
    residual_l2: float
    energy_ratio: float
    iterations: int
    continuation_path: List[Tuple[float, float]] = field(default_factory=list)
    iterate_norms: List[float] = field(default_factory=list)


@dataclass(frozen=True)
class SmallnessReport:
    """Evaluation of the two smallness conditions on the forcing.

    lhs = C b / a^{3/2} ||f||_{H^{beta/2}} is compared with c^{3/2}
    (asymptotic stability and uniqueness) and 2 c^{3/2} (orbital stability).
    """
    lhs: float
    rhs_orbital: float
    rhs_asymptotic: float
    C_used: float
    verdict: Verdict

    @property
    def ratio_asymptotic(self) -> float:
        return self.lhs / self.rhs_asymptotic

    @property
    def ratio_orbital(self) -> float:
        return self.lhs / self.rhs_orbital

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs_orbital": self.rhs_orbital,
            "rhs_asymptotic": self.rhs_asymptotic,
            "ratio_orbital": self.ratio_orbital,
            "ratio_asymptotic": self.ratio_asymptotic,
            "C_used": self.C_used,
            "verdict": self.verdict,
        }


@dataclass(frozen=True)
class RegularityReport:
    ratio: float
    tail_fraction: float


#
# PUBLIC
#
def energy_bound(f: VectorField, params: ModelParams) -> float:
    """(b / (a c)) ||f||_{H^{beta/2}}, the a-priori bound on ||U||_{H^{(alpha+beta)/2}}."""
    k = derived_constants(params)
    return k.b / (k.a * k.c) * sobolev_norm(f, params.beta / 2)


def stationary_residual(
        U: VectorField,
        f: VectorField,
        params: ModelParams,
        epsilon: float = 0.0) -> float:
    """||nu (-Delta)^{alpha/2} U + eps (-Delta) U + N(U) + gamma U - f||_{L^2}."""
    symbol = damped_diffusion_symbol(U.grid, params, epsilon)
    residual = symbol * U.coefficients + transport(U, U, params).coefficients - f.coefficients
    return U.with_coefficients(residual).l2_norm()


def picard_solve(
        f: VectorField,
        params: ModelParams,
        tol: float = STATIONARY_TOL,
        max_iter: int = STATIONARY_MAX_ITER,
        relaxation: float = 1.0,
        initial: Optional[VectorField] = None,
        epsilon: float = 0.0) -> StationarySolution:
    """Solve the stationary problem by (optionally under-relaxed) Picard iteration.

    Iterates U <- (1 - w) U + w (J^alpha_gamma + eps(-Delta))^-1 [f - N(U)] from
    U0 = (J^alpha_gamma)^-1 f (or `initial`) until the H^{beta/2} step drops
    below tol and the L^2 residual of the returned iterate is below tol.

    Args:
        f: Divergence-free forcing.
        params: Model parameters.
        tol: Convergence tolerance.
        max_iter: Iteration cap.
        relaxation: Under-relaxation factor w in (0, 1].
        initial: Optional divergence-free starting field.
        epsilon: Coefficient of the -eps Delta regularization (0 for the model).

    Returns:
        StationarySolution.

    Raises:
        NonConvergenceError: After max_iter iterations or on non-finite iterates.
    """
    if not f.divergence_free:
        raise DivergenceFreeError("picard_solve requires a divergence-free forcing")
    if not 0 < relaxation <= 1:
        raise ValueError(f"relaxation must be in (0, 1] (got {relaxation})")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1 (got {max_iter})")
    symbol = damped_diffusion_symbol(f.grid, params, epsilon)
    if initial is None:
        U = f.with_coefficients(f.coefficients / symbol, True)
    else:
        f.check_grid(initial)
        U = initial.with_coefficients(initial.coefficients, True)
    norms = []
    for iteration in range(1, max_iter + 1):
        update = (f.coefficients - transport(U, U, params).coefficients) / symbol
        new = U.with_coefficients(relaxation * update + (1 - relaxation) * U.coefficients, True)
        step_size = sobolev_norm(new - U, params.beta / 2)
        norms.append(sobolev_norm(new, params.beta / 2))
        U = new
        if not np.isfinite(norms[-1]):
            raise NonConvergenceError(
                f"non-finite iterate after {iteration} iterations (eps={epsilon})", norms)
        if step_size < tol:
            residual = stationary_residual(U, f, params, epsilon)
            if residual < tol:
                logger.debug("picard converged in %d iterations (eps=%s, residual=%.3e)",
                             iteration, epsilon, residual)
                return StationarySolution(
                    field=U,
                    residual_l2=residual,
                    energy_ratio=_energy_ratio(U, f, params),
                    iterations=iteration,
                    iterate_norms=norms)
    raise NonConvergenceError(
        f"Picard iteration did not converge in {max_iter} iterations (eps={epsilon}, "
        f"last norm {norms[-1]:.3e}); the smallness condition is likely violated",
        norms)


def continuation_solve(
        f: VectorField,
        params: ModelParams,
        eps_schedule: Sequence[float] = tuple(DEFAULT_EPS_SCHEDULE),
        tol: float = STATIONARY_TOL,
        max_iter: int = STATIONARY_MAX_ITER,
        relaxation: float = 1.0) -> StationarySolution:
    """Solve along a decreasing schedule of -eps Delta regularizations.

    Each level is warm-started from the previous one; the last level must be 0
    so the result solves the model itself.

    Args:
        f: Divergence-free forcing.
        params: Model parameters.
        eps_schedule: Strictly decreasing values ending at 0.
        tol: Tolerance of every level.
        max_iter: Iteration cap per level.
        relaxation: Under-relaxation factor per level.

    Returns:
        StationarySolution of the final level with the full continuation path.

    Raises:
        NonConvergenceError: At some level, carrying the completed path.
    """
    schedule = [float(e) for e in eps_schedule]
    if not schedule or schedule[-1] != 0.0:
        raise ValueError("eps_schedule must end at 0")
    if any(e < 0 for e in schedule) or any(x <= y for x, y in zip(schedule, schedule[1:])):
        raise ValueError(f"eps_schedule must be non-negative and strictly decreasing (got {schedule})")
    path: List[Tuple[float, float]] = []
    current = None
    iterations = 0
    for eps in schedule:
        try:
            sol = picard_solve(f, params, tol, max_iter, relaxation, initial=current, epsilon=eps)
        except NonConvergenceError as error:
            raise NonConvergenceError(
                f"continuation failed at eps={eps}: {error}",
                error.iterate_norms,
                list(path)) from error
        path.append((eps, sol.residual_l2))
        iterations += sol.iterations
        current = sol.field
    sol.continuation_path = path
    sol.iterations = iterations
    return sol


def multistart_solve(
        f: VectorField,
        params: ModelParams,
        starts: int = COLLAPSE_STARTS,
        tol: float = STATIONARY_TOL,
        max_iter: int = STATIONARY_MAX_ITER,
        seed: int = 0,
        workers: int = 1) -> Tuple[List[StationarySolution], float]:
    """Run picard_solve from several random starts.

    Starts are random divergence-free fields scaled to the a-priori energy
    bound. Solves are independent and may run on a thread pool.

    Returns:
        (solutions, largest pairwise H^{beta/2} distance between them)
    """
    scale = max(energy_bound(f, params), 1.0)

    def solve(i: int) -> StationarySolution:
        start = random_divfree_field(seed + i, None, f.grid)
        norm = sobolev_norm(start, params.beta / 2)
        start = start * (scale / norm)
        return picard_solve(f, params, tol, max_iter, initial=start)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solutions = list(pool.map(solve, range(starts)))
    else:
        solutions = [solve(i) for i in range(starts)]
    spread = 0.0
    for i in range(len(solutions)):
        for j in range(i + 1, len(solutions)):
            spread = max(spread, strong_distance(solutions[i].field, solutions[j].field, params.beta))
    return solutions, spread


def smallness_verdict(lhs: float, rhs_orbital: float, rhs_asymptotic: float) -> Verdict:
    """asymptotic iff lhs <= rhs_asymptotic, orbital_only iff lhs <= rhs_orbital, else neither."""
    if lhs <= rhs_asymptotic:
        return "asymptotic"
    if lhs <= rhs_orbital:
        return "orbital_only"
    return "neither"


def smallness_report(
        f: VectorField,
        params: ModelParams,
        C: float = DEFAULT_SMALLNESS_C) -> SmallnessReport:
    """Evaluate the smallness conditions for forcing f.

    Args:
        f: Forcing.
        params: Model parameters.
        C: The generic constant of the conditions (> 0).

    Returns:
        SmallnessReport.
    """
    if not C > 0:
        raise ValueError(f"C must be > 0 (got {C})")
    k = derived_constants(params)
    lhs = C * k.b / k.a ** 1.5 * sobolev_norm(f, params.beta / 2)
    rhs_asymptotic = k.c ** 1.5
    rhs_orbital = 2 * rhs_asymptotic
    return SmallnessReport(
        lhs=lhs,
        rhs_orbital=rhs_orbital,
        rhs_asymptotic=rhs_asymptotic,
        C_used=C,
        verdict=smallness_verdict(lhs, rhs_orbital, rhs_asymptotic))


def regularity_gain_diagnostic(U: VectorField, f: VectorField, params: ModelParams) -> RegularityReport:
    """Gain-of-regularity diagnostic of a converged stationary solution.

    Returns:
        RegularityReport with ratio ||U||_{H^{alpha+beta/2}} / ||f||_{H^{beta/2}}
        (0 when f = 0) and the share of the squared H^{alpha+beta/2} norm
        carried by the outer third of retained modes (max |n_i| above two
        thirds of the cutoff).
    """
    U.check_grid(f)
    grid = U.grid
    s = params.alpha + params.beta / 2
    weighted = sobolev_weight(grid, s) * np.sum(np.abs(U.coefficients) ** 2, axis=0)
    total = grid.spectral_sum(weighted)
    f_norm = sobolev_norm(f, params.beta / 2)
    ratio = 0.0 if f_norm == 0 else float(np.sqrt(total)) / f_norm
    cutoff = (grid.modes_per_axis - 1) // 3
    outer = np.max(np.abs(grid.indices), axis=0) * 3 > 2 * cutoff
    tail = grid.spectral_sum(np.where(outer, weighted, 0.0))
    return RegularityReport(ratio=ratio, tail_fraction=0.0 if total == 0 else tail / total)


#
# INTERNAL
#
def _energy_ratio(U: VectorField, f: VectorField, params: ModelParams) -> float:
    bound = energy_bound(f, params)
    norm = sobolev_norm(U, (params.alpha + params.beta) / 2)
    if bound == 0:
        return 0.0 if norm == 0 else float("inf")
    return norm / bound
