"""

Spectral Core for GAAM

Periodic-grid geometry, the spectral vector-field container and all the
Fourier-multiplier operators of the damped generalized alpha-model:
fractional Laplacian, Bessel filter, Leray projection, damped diffusion,
its heat semigroup and the Gaussian mollifier. Also the model parameters
and the constants a, b, c, d derived from them.

Coefficients are stored as a half spectrum (numpy rfftn layout) normalized
so that u(x) = sum_k u(k) exp(i k.x). Every stored field lives on the
two-thirds dealiased modes.

License: BSD 3-Clause

"""

#
# IMPORTS
#
import logging
from dataclasses import dataclass, replace
from functools import cached_property, lru_cache
from typing import Literal, Optional, Tuple

import numpy as np
from scipy import optimize

from gaam.constants import (
    DIVFREE_TOL,
    EXTREMUM_LOG_RANGE,
    EXTREMUM_SCAN_POINTS,
    EXTREMUM_TOL,
    MODEL_PRESETS,
    STABILITY_THRESHOLD,
    UNIQUENESS_THRESHOLD
)


#
# CONSTANTS
#
logger = logging.getLogger(__name__)


#
# ERRORS
#
class GridMismatchError(ValueError):
    """Raised when two fields (or a field and a grid) live on different grids."""


class DivergenceFreeError(ValueError):
    """Raised when an operation requires a divergence-free certificate."""


#
# TYPES
#
@dataclass(frozen=True)
class ModelParams:
    """The five PDE parameters plus the periodic box geometry."""
    alpha: float
    beta: float
    gamma: float
    delta: float
    nu: float
    dim: int = 3
    modes_per_axis: int = 16
    box_length: float = 2 * np.pi

    def __post_init__(self) -> None:
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0 (got {self.alpha})")
        if not self.beta >= 0:
            raise ValueError(f"beta must be >= 0 (got {self.beta})")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be > 0 (got {self.gamma})")
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0 (got {self.delta})")
        if not self.nu > 0:
            raise ValueError(f"nu must be > 0 (got {self.nu})")
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3 (got {self.dim})")
        if self.modes_per_axis < 8 or self.modes_per_axis % 2:
            raise ValueError(f"modes_per_axis must be an even integer >= 8 (got {self.modes_per_axis})")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be > 0 (got {self.box_length})")

    @classmethod
    def preset(cls, name: str, **kwargs) -> "ModelParams":
        """Build parameters for one of the named special cases of the model.

        Args:
            name: One of the keys of MODEL_PRESETS (bardina, leray_alpha_critical,
                fractional_ns, damped_ns).
            **kwargs: Remaining fields (gamma, delta, nu, geometry). alpha/beta
                may be overridden for fractional_ns.

        Returns:
            ModelParams instance.
        """
        if name not in MODEL_PRESETS:
            raise ValueError(f"Unknown preset '{name}' (choose from {sorted(MODEL_PRESETS)})")
        alpha, beta = MODEL_PRESETS[name]
        kwargs.setdefault("alpha", alpha)
        kwargs.setdefault("beta", beta)
        kwargs.setdefault("gamma", 1.0)
        kwargs.setdefault("delta", 1.0)
        kwargs.setdefault("nu", 1.0)
        return cls(**kwargs)

    @property
    def grid(self) -> "SpectralGrid":
        return make_grid(self.dim, self.modes_per_axis, self.box_length)

    def with_updates(self, **changes) -> "ModelParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class DerivedConstants:
    """Constants a, b, c, d, m_alpha, M_alpha computed from ModelParams."""
    a: float
    b: float
    m_alpha: float
    M_alpha: float
    c: float
    d: float


@dataclass(frozen=True)
class RegimeReport:
    """Which results of the theory apply to a parameter set."""
    alpha_plus_beta: float
    uniqueness_known: bool
    attractor: Literal["strong", "weak"]
    stationary_stability_applicable: bool
    dimension_bound_applicable: bool


@dataclass(frozen=True)
class SpectralGrid:
    """Periodic grid [0, L]^dim with N modes per axis in rfftn layout."""
    dim: int
    modes_per_axis: int
    box_length: float

    @property
    def physical_shape(self) -> Tuple[int, ...]:
        return (self.modes_per_axis,) * self.dim

    @property
    def spectral_shape(self) -> Tuple[int, ...]:
        n = self.modes_per_axis
        return (n,) * (self.dim - 1) + (n // 2 + 1,)

    @property
    def axes(self) -> Tuple[int, ...]:
        return tuple(range(-self.dim, 0))

    @property
    def volume(self) -> float:
        return float(self.box_length ** self.dim)

    @property
    def cell_volume(self) -> float:
        return float((self.box_length / self.modes_per_axis) ** self.dim)

    @cached_property
    def indices(self) -> np.ndarray:
        """Integer wavenumbers n, shape (dim, *spectral_shape)."""
        n = self.modes_per_axis
        freqs = [np.fft.fftfreq(n, 1.0 / n).astype(int) for _ in range(self.dim - 1)]
        freqs.append(np.arange(n // 2 + 1))
        grids = np.meshgrid(*freqs, indexing="ij")
        out = np.array(grids, dtype=int)
        out.flags.writeable = False
        return out

    @cached_property
    def wavevectors(self) -> np.ndarray:
        out = self.indices * (2 * np.pi / self.box_length)
        out.flags.writeable = False
        return out

    @cached_property
    def k_sq(self) -> np.ndarray:
        out = np.sum(self.wavevectors ** 2, axis=0)
        out.flags.writeable = False
        return out

    @cached_property
    def k_abs(self) -> np.ndarray:
        out = np.sqrt(self.k_sq)
        out.flags.writeable = False
        return out

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: retain modes with 3|n_i| < N on every axis."""
        out = np.all(3 * np.abs(self.indices) < self.modes_per_axis, axis=0)
        out.flags.writeable = False
        return out

    @cached_property
    def half_weights(self) -> np.ndarray:
        """Multiplicity of each stored entry in a full-spectrum sum."""
        n = self.modes_per_axis
        last = self.indices[-1]
        out = np.where((last > 0) & (last < n // 2), 2.0, 1.0)
        out.flags.writeable = False
        return out

    @cached_property
    def enumeration(self) -> Tuple[np.ndarray, ...]:
        """Retained canonical modes, ascending |n|^2 then lexicographic on n.

        Returns:
            Tuple of index arrays into the spectral array (numpy fancy index).
        """
        idx = self.indices
        canonical = self.dealias_mask & _canonical_half(idx)
        positions = np.nonzero(canonical)
        modes = idx[(slice(None),) + positions]
        norm_sq = np.sum(modes ** 2, axis=0)
        # lexsort: last key is primary
        order = np.lexsort(tuple(modes[::-1]) + (norm_sq,))
        return tuple(p[order] for p in positions)

    @cached_property
    def enumerated_modes(self) -> np.ndarray:
        """Integer wavenumbers of the enumeration, shape (n_modes, dim)."""
        return self.indices[(slice(None),) + self.enumeration].T

    @cached_property
    def mode_multiplicity(self) -> np.ndarray:
        """1 for the zero mode, 2 for every other canonical mode (k and -k)."""
        modes = self.enumerated_modes
        return np.where(np.all(modes == 0, axis=1), 1.0, 2.0)

    @cached_property
    def _conjugate_pairs(self) -> Tuple[np.ndarray, np.ndarray]:
        """Flat indices of redundant entries on the n_last = 0 plane and their partners."""
        idx = self.indices
        n = self.modes_per_axis
        redundant = self.dealias_mask & (idx[-1] == 0) & ~_canonical_half(idx)
        positions = np.nonzero(redundant)
        partner = tuple((-p) % n for p in positions[:-1]) + (positions[-1],)
        shape = self.spectral_shape
        return np.ravel_multi_index(positions, shape), np.ravel_multi_index(partner, shape)

    def symmetrize(self, coefficients: np.ndarray) -> np.ndarray:
        """Truncate to retained modes and enforce exact Hermitian symmetry.

        Args:
            coefficients: Array of shape (dim, *spectral_shape).

        Returns:
            New array with discarded modes zeroed, redundant entries set to the
            conjugate of their canonical partner and a real zero mode.
        """
        out = np.where(self.dealias_mask, coefficients, 0).astype(complex)
        flat = out.reshape(out.shape[0], -1)
        redundant, partner = self._conjugate_pairs
        flat[:, redundant] = np.conj(flat[:, partner])
        zero = (0,) * self.dim
        for comp in range(out.shape[0]):
            out[(comp,) + zero] = out[(comp,) + zero].real
        return out

    def to_physical(self, coefficients: np.ndarray) -> np.ndarray:
        """Inverse transform of a stack of spectral arrays (leading axes kept)."""
        scale = self.modes_per_axis ** self.dim
        return np.fft.irfftn(coefficients * scale, s=self.physical_shape, axes=self.axes)

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        """Forward transform of a stack of real arrays (leading axes kept)."""
        scale = self.modes_per_axis ** self.dim
        return np.fft.rfftn(values, axes=self.axes) / scale

    def spectral_sum(self, weighted_sq: np.ndarray) -> float:
        """Full-spectrum sum of a non-negative half-spectrum quantity, times the volume."""
        return float(self.volume * np.sum(self.half_weights * weighted_sq))


@dataclass(frozen=True, eq=False)
class VectorField:
    """Real vector field in spectral representation on a periodic grid."""
    grid: SpectralGrid
    coefficients: np.ndarray
    divergence_free: bool = False

    def __post_init__(self) -> None:
        expected = (self.grid.dim,) + self.grid.spectral_shape
        if self.coefficients.shape != expected:
            raise GridMismatchError(
                f"coefficient shape {self.coefficients.shape} does not match grid {expected}")
        self.coefficients.flags.writeable = False

    @classmethod
    def zeros(cls, grid: SpectralGrid) -> "VectorField":
        return cls(grid, np.zeros((grid.dim,) + grid.spectral_shape, dtype=complex), True)

    @classmethod
    def from_coefficients(
            cls,
            grid: SpectralGrid,
            coefficients: np.ndarray,
            divergence_free: bool = False) -> "VectorField":
        """Build a field from raw coefficients, truncating and symmetrizing them."""
        return cls(grid, grid.symmetrize(np.asarray(coefficients)), divergence_free)

    @classmethod
    def from_physical(cls, grid: SpectralGrid, values: np.ndarray) -> "VectorField":
        """Build a field from real point values of shape (dim, *physical_shape)."""
        return cls.from_coefficients(grid, grid.to_spectral(np.asarray(values, dtype=float)))

    @classmethod
    def single_mode(
            cls,
            grid: SpectralGrid,
            mode: Tuple[int, ...],
            amplitude: np.ndarray) -> "VectorField":
        """Field exp(i k.x) a + c.c. for integer wavenumber `mode` and vector `a`.

        Args:
            grid: Target grid.
            mode: Integer wavenumber (length dim), must be a retained mode.
            amplitude: Complex vector coefficient (length dim).

        Returns:
            VectorField with coefficient `amplitude` at `mode` and its conjugate at -mode.
        """
        n = grid.modes_per_axis
        mode = tuple(int(m) for m in mode)
        if any(3 * abs(m) >= n for m in mode):
            raise ValueError(f"mode {mode} is outside the retained modes of a {n}-point grid")
        if mode[-1] < 0 or (mode[-1] == 0 and not _canonical_tuple(mode)):
            mode = tuple(-m for m in mode)
            amplitude = np.conj(amplitude)
        coeffs = np.zeros((grid.dim,) + grid.spectral_shape, dtype=complex)
        position = tuple(m % n for m in mode[:-1]) + (mode[-1],)
        coeffs[(slice(None),) + position] = np.asarray(amplitude, dtype=complex)
        return cls.from_coefficients(grid, coeffs)

    def with_coefficients(self, coefficients: np.ndarray, divergence_free: Optional[bool] = None) -> "VectorField":
        flag = self.divergence_free if divergence_free is None else divergence_free
        return VectorField(self.grid, coefficients, flag)

    def physical(self) -> np.ndarray:
        """Point values on the collocation grid, shape (dim, *physical_shape)."""
        return self.grid.to_physical(self.coefficients)

    def check_grid(self, other: "VectorField") -> None:
        if self.grid != other.grid:
            raise GridMismatchError(f"grid mismatch: {self.grid} vs {other.grid}")

    def divergence_residual(self) -> float:
        """max_k |k . u(k)|."""
        div = np.sum(self.grid.wavevectors * self.coefficients, axis=0)
        return float(np.max(np.abs(div)))

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.spectral_sum(np.sum(np.abs(self.coefficients) ** 2, axis=0))))

    def is_divergence_free(self, tol: float = DIVFREE_TOL) -> bool:
        return self.divergence_residual() <= tol * max(self.l2_norm(), np.finfo(float).tiny)

    def __add__(self, other: "VectorField") -> "VectorField":
        self.check_grid(other)
        return VectorField(self.grid, self.coefficients + other.coefficients,
                           self.divergence_free and other.divergence_free)

    def __sub__(self, other: "VectorField") -> "VectorField":
        self.check_grid(other)
        return VectorField(self.grid, self.coefficients - other.coefficients,
                           self.divergence_free and other.divergence_free)

    def __mul__(self, scalar: float) -> "VectorField":
        return VectorField(self.grid, self.coefficients * float(scalar), self.divergence_free)

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField":
        return VectorField(self.grid, -self.coefficients, self.divergence_free)


#
# PUBLIC
#
@lru_cache(maxsize=None)
def make_grid(dim: int, modes_per_axis: int, box_length: float) -> SpectralGrid:
    """Shared grid instance for a geometry (its cached arrays are reused)."""
    return SpectralGrid(int(dim), int(modes_per_axis), float(box_length))


def derived_constants(params: ModelParams) -> DerivedConstants:
    """Compute a, b, m_alpha, M_alpha, c and d.

    m_alpha and M_alpha are the infimum and supremum over r >= 0 of
    h(r) = (1 + r^alpha) / (1 + r^2)^(alpha/2), found by a log-spaced scan
    refined with golden-section search; the limits h(0) = h(inf) = 1 are
    always candidates.

    Args:
        params: Model parameters.

    Returns:
        DerivedConstants.
    """
    delta_beta = params.delta ** params.beta
    a = min(1.0, delta_beta)
    b = max(1.0, delta_beta)
    m_alpha, M_alpha = _h_extrema(params.alpha)
    c = m_alpha * min(params.gamma, params.nu)
    d = M_alpha * max(params.gamma, params.nu)
    return DerivedConstants(a=a, b=b, m_alpha=m_alpha, M_alpha=M_alpha, c=c, d=d)


def regime_report(params: ModelParams) -> RegimeReport:
    """Classify a parameter set against the thresholds of the theory."""
    s = params.alpha + params.beta
    unique = s >= UNIQUENESS_THRESHOLD
    return RegimeReport(
        alpha_plus_beta=s,
        uniqueness_known=unique,
        attractor="strong" if unique else "weak",
        stationary_stability_applicable=s >= STABILITY_THRESHOLD,
        dimension_bound_applicable=params.alpha >= 1 and params.beta >= 2,
    )


def m1_symbol(xi: np.ndarray, beta: float, delta: float) -> np.ndarray:
    """m1(xi) = (1 + delta^2 |xi|^2)^(beta/2) / (1 + |xi|^2)^(beta/2)."""
    xi_sq = np.asarray(xi, dtype=float) ** 2
    return ((1 + delta ** 2 * xi_sq) / (1 + xi_sq)) ** (beta / 2)


def m2_symbol(xi: np.ndarray, params: ModelParams) -> np.ndarray:
    """m2(xi) = (gamma + nu |xi|^alpha) / (1 + |xi|^2)^(alpha/2)."""
    xi = np.abs(np.asarray(xi, dtype=float))
    return (params.gamma + params.nu * xi ** params.alpha) / (1 + xi ** 2) ** (params.alpha / 2)


def damped_diffusion_symbol(grid: SpectralGrid, params: ModelParams, epsilon: float = 0.0) -> np.ndarray:
    """gamma + nu |k|^alpha (+ epsilon |k|^2 for the continuation problem)."""
    return params.gamma + params.nu * grid.k_abs ** params.alpha + epsilon * grid.k_sq


def bessel_symbol(grid: SpectralGrid, beta: float, delta: float, power: float = 1.0) -> np.ndarray:
    """(1 + delta^2 |k|^2)^(power * beta / 2)."""
    return (1 + delta ** 2 * grid.k_sq) ** (power * beta / 2)


def fractional_laplacian(field: VectorField, order: float, grid: Optional[SpectralGrid] = None) -> VectorField:
    """Apply (-Delta)^(order/2): multiplier |k|^order, zero at k = 0.

    Args:
        field: Input field.
        order: Non-negative order of the multiplier.
        grid: Optional grid the caller expects the field to live on.

    Returns:
        Filtered field.

    Raises:
        GridMismatchError: If `grid` is given and differs from the field's grid.
    """
    if grid is not None and grid != field.grid:
        raise GridMismatchError(f"grid mismatch: {field.grid} vs {grid}")
    if order < 0:
        raise ValueError(f"order must be >= 0 (got {order})")
    g = field.grid
    symbol = np.where(g.k_sq > 0, g.k_abs ** order, 0.0)
    return field.with_coefficients(field.coefficients * symbol)


def bessel_filter(
        field: VectorField,
        beta: float,
        delta: float,
        direction: Literal["forward", "inverse"] = "inverse") -> VectorField:
    """Apply J^beta_delta (forward) or J^-beta_delta (inverse).

    Args:
        field: Input field.
        beta: Filter order (>= 0).
        delta: Filter length (> 0).
        direction: 'forward' for (1 + delta^2|k|^2)^(beta/2), 'inverse' for its reciprocal.

    Returns:
        Filtered field.
    """
    if beta < 0 or delta <= 0:
        raise ValueError(f"bessel_filter needs beta >= 0 and delta > 0 (got {beta}, {delta})")
    if direction not in ("forward", "inverse"):
        raise ValueError(f"direction must be 'forward' or 'inverse' (got {direction})")
    power = 1.0 if direction == "forward" else -1.0
    return field.with_coefficients(field.coefficients * bessel_symbol(field.grid, beta, delta, power))


def leray_project(field: VectorField) -> VectorField:
    """Project onto divergence-free fields: u(k) - k (k.u(k)) / |k|^2."""
    g = field.grid
    k = g.wavevectors
    k_sq = np.where(g.k_sq > 0, g.k_sq, 1.0)
    k_dot_u = np.sum(k * field.coefficients, axis=0)
    projected = field.coefficients - k * (k_dot_u / k_sq)
    return field.with_coefficients(projected, divergence_free=True)


def damped_diffusion_apply(
        field: VectorField,
        params: ModelParams,
        mode: Literal["apply", "invert"] = "apply",
        epsilon: float = 0.0) -> VectorField:
    """Apply J^alpha_gamma = gamma + nu(-Delta)^(alpha/2) or its inverse.

    Args:
        field: Input field.
        params: Model parameters.
        mode: 'apply' or 'invert' (always defined since gamma > 0).
        epsilon: Optional extra -epsilon*Delta term of the continuation problem.

    Returns:
        Resulting field.
    """
    symbol = damped_diffusion_symbol(field.grid, params, epsilon)
    if mode == "apply":
        return field.with_coefficients(field.coefficients * symbol)
    if mode == "invert":
        return field.with_coefficients(field.coefficients / symbol)
    raise ValueError(f"mode must be 'apply' or 'invert' (got {mode})")


def heat_semigroup(field: VectorField, params: ModelParams, t: float) -> VectorField:
    """Apply exp(-t (gamma + nu |k|^alpha))."""
    if t < 0:
        raise ValueError(f"t must be >= 0 (got {t})")
    symbol = np.exp(-t * damped_diffusion_symbol(field.grid, params))
    return field.with_coefficients(field.coefficients * symbol)


def mollify(field: VectorField, epsilon: float) -> VectorField:
    """Gaussian spectral mollifier exp(-epsilon^2 |k|^2 / 2); epsilon = 0 is the identity."""
    if epsilon < 0:
        raise ValueError(f"epsilon must be >= 0 (got {epsilon})")
    if epsilon == 0:
        return field
    symbol = np.exp(-0.5 * epsilon ** 2 * field.grid.k_sq)
    return field.with_coefficients(field.coefficients * symbol)


#
# INTERNAL
#
def _canonical_half(idx: np.ndarray) -> np.ndarray:
    """True where n is the representative of the pair {n, -n} (or n = 0).

    n_last > 0, or n_last == 0 and the first nonzero remaining component is positive.
    """
    last = idx[-1]
    rest = idx[:-1]
    first_nonzero = np.zeros(last.shape, dtype=int)
    decided = np.zeros(last.shape, dtype=bool)
    for comp in rest:
        take = ~decided & (comp != 0)
        first_nonzero = np.where(take, comp, first_nonzero)
        decided |= take
    is_zero = ~decided & (last == 0)
    return (last > 0) | ((last == 0) & (first_nonzero > 0)) | is_zero


def _canonical_tuple(mode: Tuple[int, ...]) -> bool:
    if mode[-1] != 0:
        return mode[-1] > 0
    for m in mode[:-1]:
        if m != 0:
            return m > 0
    return True


def _h_extrema(alpha: float) -> Tuple[float, float]:
    """Infimum and supremum of h(r) = (1 + r^alpha)/(1 + r^2)^(alpha/2) over r >= 0."""
    def h(s: float) -> float:
        r = 10.0 ** s
        return (1 + r ** alpha) / (1 + r ** 2) ** (alpha / 2)

    lo, hi = EXTREMUM_LOG_RANGE
    s = np.linspace(lo, hi, EXTREMUM_SCAN_POINTS)
    values = np.array([h(x) for x in s])
    minimum = min(1.0, _refine(h, s, values, int(np.argmin(values))))
    maximum = max(1.0, -_refine(lambda x: -h(x), s, -values, int(np.argmax(values))))
    logger.debug("h extrema for alpha=%s: [%s, %s]", alpha, minimum, maximum)
    return minimum, maximum


def _refine(func, s: np.ndarray, values: np.ndarray, i: int) -> float:
    """Golden-section refinement of a scan minimum at index i."""
    if i == 0 or i == len(s) - 1:
        return float(values[i])
    if not (values[i] < values[i - 1] and values[i] < values[i + 1]):
        return float(values[i])
    result = optimize.minimize_scalar(
        func, bracket=(s[i - 1], s[i], s[i + 1]), method="golden", tol=EXTREMUM_TOL)
    return float(min(result.fun, values[i]))
