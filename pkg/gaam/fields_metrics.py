"""

Fields and Metrics for GAAM

Vector-field algebra on top of the spectral core: Sobolev and delta-weighted
norms and inner products, the strong and weak distances, the filtered
transport (nonlinear) term, random divergence-free data and the L^p norm of
the velocity gradient used by the dimension estimate.

License: BSD 3-Clause

"""

#
# IMPORTS
#
import logging
from dataclasses import dataclass
from typing import Callable, Literal, Optional

import numpy as np

from gaam.constants import RANDOM_SPECTRUM_EXPONENT
from gaam.spectral_core import (
    DivergenceFreeError,
    ModelParams,
    SpectralGrid,
    VectorField,
    bessel_filter,
    leray_project,
    mollify
)


#
# CONSTANTS
#
logger = logging.getLogger(__name__)

NormVariant = Literal["inhomogeneous", "homogeneous", "delta_weighted"]


#
# TYPES
#
@dataclass(frozen=True, eq=False)
class ForcingField(VectorField):
    """Time-independent, divergence-free external force."""

    def __post_init__(self) -> None:
        super().__post_init__()
        if not self.divergence_free:
            raise DivergenceFreeError("a forcing field must carry a divergence-free certificate")

    @classmethod
    def from_field(cls, field: VectorField) -> "ForcingField":
        """Leray-project a field and certify it as a forcing."""
        projected = leray_project(field)
        return cls(projected.grid, projected.coefficients, True)

    @classmethod
    def zeros(cls, grid: SpectralGrid) -> "ForcingField":
        return cls.from_field(VectorField.zeros(grid))


#
# PUBLIC
#
def sobolev_weight(
        grid: SpectralGrid,
        s: float,
        variant: NormVariant = "inhomogeneous",
        delta: Optional[float] = None) -> np.ndarray:
    """Spectral weight of the squared H^s norm.

    Args:
        grid: Spectral grid.
        s: Sobolev order.
        variant: 'inhomogeneous' (1 + |k|^2)^s, 'homogeneous' |k|^(2s) or
            'delta_weighted' (1 + delta^2 |k|^2)^s.
        delta: Filter length, required for 'delta_weighted'.

    Returns:
        Weight array of the grid's spectral shape.
    """
    if variant == "inhomogeneous":
        return (1 + grid.k_sq) ** s
    if variant == "homogeneous":
        return np.where(grid.k_sq > 0, grid.k_sq ** s, 0.0 if s > 0 else 1.0)
    if variant == "delta_weighted":
        if delta is None:
            raise ValueError("delta_weighted norms need a delta")
        return (1 + delta ** 2 * grid.k_sq) ** s
    raise ValueError(f"Unknown norm variant '{variant}'")


def sobolev_norm(
        field: VectorField,
        s: float,
        variant: NormVariant = "inhomogeneous",
        delta: Optional[float] = None) -> float:
    """H^s norm of a field (volume-normalized so that Parseval holds).

    Args:
        field: Field to measure.
        s: Sobolev order.
        variant: Weight family, see sobolev_weight.
        delta: Filter length for the delta-weighted variant (used with s = beta/2).

    Returns:
        Non-negative norm.
    """
    weight = sobolev_weight(field.grid, s, variant, delta)
    energy = np.sum(np.abs(field.coefficients) ** 2, axis=0)
    return float(np.sqrt(field.grid.spectral_sum(weight * energy)))


def inner_product(
        u: VectorField,
        v: VectorField,
        s: float = 0.0,
        variant: NormVariant = "inhomogeneous",
        delta: Optional[float] = None) -> float:
    """Real inner product associated with sobolev_norm."""
    u.check_grid(v)
    weight = sobolev_weight(u.grid, s, variant, delta)
    cross = np.real(np.sum(u.coefficients * np.conj(v.coefficients), axis=0))
    return float(u.grid.volume * np.sum(u.grid.half_weights * weight * cross))


def delta_inner(u: VectorField, v: VectorField, beta: float, delta: float) -> float:
    """(u, v)_{H^{beta/2}_delta}."""
    return inner_product(u, v, beta / 2, "delta_weighted", delta)


def strong_distance(u: VectorField, v: VectorField, beta: float) -> float:
    """d_s(u, v) = ||u - v||_{H^{beta/2}}."""
    return sobolev_norm(u - v, beta / 2)


def basis_coordinates(field: VectorField, beta: float, delta: Optional[float] = None) -> np.ndarray:
    """Coordinates of a field against a fixed orthonormal basis of H^{beta/2}.

    Basis vectors are the unit-normalized real and imaginary parts of each
    component at each retained canonical mode, in the grid's enumeration
    order (the imaginary parts at the zero mode are absent). With `delta`
    the basis is normalized in H^{beta/2}_delta instead.

    Args:
        field: Field to expand.
        beta: Filter order.
        delta: Optional filter length selecting the delta-weighted norm.

    Returns:
        1-D array of coordinates whose squared sum is the squared norm.
    """
    grid = field.grid
    positions = grid.enumeration
    variant = "inhomogeneous" if delta is None else "delta_weighted"
    weight = sobolev_weight(grid, beta / 2, variant, delta)[positions]
    scale = np.sqrt(grid.volume * grid.mode_multiplicity * weight)
    values = field.coefficients[(slice(None),) + positions] * scale
    # (mode, component, re/im)
    stacked = np.stack([values.real.T, values.imag.T], axis=-1)
    zero_modes = np.all(grid.enumerated_modes == 0, axis=1)
    keep = np.ones(stacked.shape, dtype=bool)
    keep[zero_modes, :, 1] = False
    return stacked[keep]


def weak_distance(u: VectorField, v: VectorField, beta: float, delta: float) -> float:
    """d_w(u, v) = sum_n 2^-n |u_n - v_n| / (1 + |u_n - v_n|).

    Coordinates are taken against the H^{beta/2} basis of basis_coordinates;
    `delta` does not change the metric.
    """
    u.check_grid(v)
    diff = np.abs(basis_coordinates(u - v, beta))
    weights = 0.5 ** np.arange(diff.size)
    return float(np.sum(weights * diff / (1 + diff)))


def transport(
        u: VectorField,
        v: VectorField,
        params: ModelParams,
        epsilon: float = 0.0) -> VectorField:
    """Symmetric filtered transport J^-beta_delta P div((u (x) v + v (x) u) / 2).

    Products are formed on the collocation grid from two-thirds dealiased
    fields, so the result is the exact convolution on the retained modes.
    With epsilon > 0 the arguments and the result are mollified.

    Args:
        u: First field.
        v: Second field.
        params: Model parameters (beta, delta).
        epsilon: Mollifier width (0 for the plain model).

    Returns:
        Divergence-free field.
    """
    u.check_grid(v)
    grid = u.grid
    if epsilon > 0:
        u, v = mollify(u, epsilon), mollify(v, epsilon)
    u_x = u.physical()
    v_x = u_x if v is u else v.physical()
    k = grid.wavevectors
    div = np.zeros((grid.dim,) + grid.spectral_shape, dtype=complex)
    for i in range(grid.dim):
        for j in range(i, grid.dim):
            product = grid.to_spectral(0.5 * (u_x[i] * v_x[j] + v_x[i] * u_x[j]))
            div[i] += 1j * k[j] * product
            if j != i:
                div[j] += 1j * k[i] * product
    result = VectorField.from_coefficients(grid, div)
    result = bessel_filter(leray_project(result), params.beta, params.delta, "inverse")
    return mollify(result, epsilon)


def nonlinear_term(u: VectorField, params: ModelParams, epsilon: float = 0.0) -> VectorField:
    """N(u) = J^-beta_delta P div(u (x) u).

    Raises:
        DivergenceFreeError: If u carries no divergence-free certificate.
    """
    if not u.divergence_free:
        raise DivergenceFreeError("nonlinear_term requires a divergence-free field")
    return transport(u, u, params, epsilon)


def default_spectrum(k_sq: np.ndarray) -> np.ndarray:
    """|u(k)| ~ (1 + |k|^2)^-2."""
    return (1 + k_sq) ** RANDOM_SPECTRUM_EXPONENT


def random_divfree_field(
        seed: int,
        amplitude_spectrum: Optional[Callable[[np.ndarray], np.ndarray]],
        grid: SpectralGrid,
        amplitude: float = 1.0) -> VectorField:
    """Reproducible random divergence-free field with a prescribed spectrum.

    Every retained mode k != 0 gets |u(k)| = amplitude * amplitude_spectrum(|k|^2)
    with a random phase and a random direction orthogonal to k.

    Args:
        seed: Seed of the numpy generator.
        amplitude_spectrum: Function of |k|^2 giving the coefficient magnitude
            (default_spectrum when None).
        grid: Target grid.
        amplitude: Overall scale factor.

    Returns:
        Leray-projected, Hermitian-symmetric field with zero mean.
    """
    spectrum = default_spectrum if amplitude_spectrum is None else amplitude_spectrum
    rng = np.random.default_rng(seed)
    shape = (grid.dim,) + grid.spectral_shape
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    directions = leray_project(VectorField.from_coefficients(grid, noise)).coefficients
    length = np.sqrt(np.sum(np.abs(directions) ** 2, axis=0))
    coeffs = amplitude * spectrum(grid.k_sq) * directions / np.where(length > 0, length, 1.0)
    coeffs[(slice(None),) + (0,) * grid.dim] = 0
    return leray_project(VectorField.from_coefficients(grid, coeffs))


def lp_gradient_norm(u: VectorField, p: float = 2.5) -> float:
    """||grad (x) u||_{L^p} by rectangle-rule quadrature on the collocation grid.

    The pointwise gradient magnitude is the Frobenius norm of the matrix
    d_j u_i; the cell weight is (L/N)^dim.
    """
    if p < 1:
        raise ValueError(f"p must be >= 1 (got {p})")
    grid = u.grid
    k = grid.wavevectors
    grad_sq = np.zeros(grid.physical_shape)
    for i in range(grid.dim):
        for j in range(grid.dim):
            grad_sq += grid.to_physical(1j * k[j] * u.coefficients[i]) ** 2
    integral = grid.cell_volume * np.sum(grad_sq ** (p / 2))
    return float(integral ** (1.0 / p))
