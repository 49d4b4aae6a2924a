"""

Test Fields and Metrics

Sobolev norms, strong and weak distances, the filtered transport term and
random field generation.

License: BSD 3-Clause

"""

#
# IMPORTS
#
import math

import numpy as np
import pytest
from scipy import integrate

from conftest import scaled_field
from gaam.fields_metrics import (
    ForcingField,
    basis_coordinates,
    delta_inner,
    lp_gradient_norm,
    nonlinear_term,
    random_divfree_field,
    sobolev_norm,
    strong_distance,
    transport,
    weak_distance
)
from gaam.spectral_core import (
    DivergenceFreeError,
    ModelParams,
    VectorField,
    derived_constants,
    leray_project,
    make_grid
)


#
# TESTS - Norms
#
def test_single_mode_norm():
    """|k|^2 = 3 with unit L^2 norm has H^1 norm 2."""
    grid = make_grid(3, 8, 2 * np.pi)
    u = VectorField.single_mode(grid, (1, 1, 1), np.array([1.0, -1.0, 0.0]))
    u = u * (1.0 / u.l2_norm())
    assert sobolev_norm(u, 0.0) == pytest.approx(1.0, rel=1e-14)
    assert sobolev_norm(u, 1.0) == pytest.approx(2.0, rel=1e-14)
    assert sobolev_norm(u, 1.0, "homogeneous") == pytest.approx(math.sqrt(3.0), rel=1e-14)


def test_parseval():
    """The spectral L^2 norm equals the quadrature of the physical field."""
    grid = make_grid(2, 16, 2 * np.pi)
    u = random_divfree_field(1, None, grid)
    quadrature = math.sqrt(grid.cell_volume * np.sum(u.physical() ** 2))
    assert sobolev_norm(u, 0.0) == pytest.approx(quadrature, rel=1e-12)


def test_delta_one_matches_inhomogeneous():
    """Test that the delta-weighted norm at delta = 1 is the plain norm."""
    grid = make_grid(3, 8, 2 * np.pi)
    u = random_divfree_field(2, None, grid)
    for s in (0.5, 1.0, 1.7):
        assert sobolev_norm(u, s, "delta_weighted", 1.0) == pytest.approx(sobolev_norm(u, s), rel=1e-14)


@pytest.mark.parametrize("delta, beta", [(0.3, 2.0), (2.0, 2.0), (0.5, 0.5), (3.0, 1.0)])
def test_norm_equivalence(delta, beta):
    """a ||u|| <= ||u||_delta <= b ||u|| in H^{beta/2}, over random fields."""
    params = ModelParams(alpha=2.0, beta=beta, gamma=1.0, delta=delta, nu=1.0, dim=3, modes_per_axis=8)
    k = derived_constants(params)
    for seed in range(100):
        u = random_divfree_field(seed, None, params.grid)
        plain = sobolev_norm(u, beta / 2)
        weighted = sobolev_norm(u, beta / 2, "delta_weighted", delta)
        assert k.a * plain <= weighted * (1 + 1e-12)
        assert weighted <= k.b * plain * (1 + 1e-12)


def test_delta_weighted_needs_delta():
    """Test that the delta-weighted norm needs delta."""
    grid = make_grid(2, 16, 2 * np.pi)
    with pytest.raises(ValueError, match="delta"):
        sobolev_norm(VectorField.zeros(grid), 1.0, "delta_weighted")


#
# TESTS - Distances
#
def test_strong_distance_axioms():
    """Zero on the diagonal, symmetric and subadditive."""
    grid = make_grid(3, 8, 2 * np.pi)
    u, v, w = (random_divfree_field(seed, None, grid) for seed in (10, 11, 12))
    assert strong_distance(u, u, 2.0) == 0.0
    assert strong_distance(u, v, 2.0) == pytest.approx(strong_distance(v, u, 2.0), rel=1e-14)
    assert strong_distance(u, w, 2.0) <= strong_distance(u, v, 2.0) + strong_distance(v, w, 2.0)


def test_basis_coordinates_are_isometric():
    """Squared coordinates sum to the squared H^{beta/2} norm, or the delta-weighted one when delta is given."""
    grid = make_grid(3, 8, 2 * np.pi)
    u = random_divfree_field(13, None, grid) + VectorField.single_mode(grid, (0, 0, 0), np.array([0.5, 0.0, 0.0]))
    assert np.sum(basis_coordinates(u, 2.0) ** 2) == pytest.approx(sobolev_norm(u, 1.0) ** 2, rel=1e-12)
    coords = basis_coordinates(u, 2.0, 0.5)
    assert np.sum(coords ** 2) == pytest.approx(sobolev_norm(u, 1.0, "delta_weighted", 0.5) ** 2, rel=1e-12)


def test_weak_distance():
    """Zero on the diagonal, 1/2 for a unit gap in the first basis direction, below 2."""
    grid = make_grid(3, 8, 2 * np.pi)
    u = random_divfree_field(14, None, grid)
    assert weak_distance(u, u, 2.0, 1.0) == 0.0
    # first basis vector: real part of component 0 at the zero mode
    e0 = VectorField.single_mode(grid, (0, 0, 0), np.array([1.0, 0.0, 0.0]))
    e0 = e0 * (1.0 / sobolev_norm(e0, 1.0))
    assert weak_distance(u + e0, u, 2.0, 1.0) == pytest.approx(0.5, rel=1e-12)
    far = u * 1e6
    assert weak_distance(far, -far, 2.0, 1.0) < 2.0


def test_weak_distance_basis_ignores_delta():
    """The weak metric is built on H^{beta/2}, so the filter length drops out."""
    grid = make_grid(3, 8, 2 * np.pi)
    u, v = random_divfree_field(20, None, grid), random_divfree_field(21, None, grid)
    assert weak_distance(u, v, 2.0, 3.0) == weak_distance(u, v, 2.0, 0.3)
    e = VectorField.single_mode(grid, (1, 0, 0), np.array([0.0, 1.0, 0.0]))
    e = e * (1.0 / sobolev_norm(e, 1.0))
    assert np.max(np.abs(basis_coordinates(e, 2.0))) == pytest.approx(1.0, rel=1e-12)


def test_weak_follows_strong():
    """A sequence converging strongly converges weakly."""
    grid = make_grid(3, 8, 2 * np.pi)
    u = random_divfree_field(15, None, grid)
    e = random_divfree_field(16, None, grid)
    weak = [weak_distance(u + e * 2.0 ** (-n), u, 2.0, 1.0) for n in range(0, 40, 4)]
    assert np.all(np.diff(weak) < 0)
    assert weak[-1] < 1e-8


#
# TESTS - Transport
#
def test_nonlinear_term_zero():
    """Test that the nonlinearity vanishes at zero."""
    params = ModelParams(alpha=2.0, beta=2.0, gamma=1.0, delta=1.0, nu=1.0, dim=3, modes_per_axis=8)
    assert not np.any(nonlinear_term(VectorField.zeros(params.grid), params).coefficients)


def test_nonlinear_term_requires_divergence_free():
    """Test that the nonlinearity rejects uncertified fields."""
    params = ModelParams(alpha=2.0, beta=2.0, gamma=1.0, delta=1.0, nu=1.0, dim=3, modes_per_axis=8)
    u = VectorField.single_mode(params.grid, (1, 0, 0), np.array([0.0, 1.0, 0.0]))
    with pytest.raises(DivergenceFreeError):
        nonlinear_term(u, params)


def test_nonlinear_term_brute_force_convolution():
    """Two-mode field on 8^3: matches the explicit convolution over mode pairs."""
    params = ModelParams(alpha=2.0, beta=2.0, gamma=1.0, delta=0.7, nu=1.0, dim=3, modes_per_axis=8)
    grid = params.grid
    pairs = {(1, 0, 0): np.array([0.0, 1.0, 0.5j]), (0, 1, 0): np.array([0.3, 0.0, 1.0j])}
    u = VectorField.zeros(grid)
    for mode, amplitude in pairs.items():
        u = u + VectorField.single_mode(grid, mode, amplitude)
    u = leray_project(u)

    full = {}
    for mode, amplitude in pairs.items():
        full[mode] = amplitude.astype(complex)
        full[tuple(-m for m in mode)] = np.conj(amplitude).astype(complex)
    expected = {}
    for p, up in full.items():
        for q, uq in full.items():
            k = tuple(int(a + b) for a, b in zip(p, q))
            kv = np.array(k, dtype=float)
            expected[k] = expected.get(k, 0) + 1j * (kv @ uq) * up
    result = nonlinear_term(u, params)
    seen = np.zeros(grid.spectral_shape, dtype=bool)
    for k, value in expected.items():
        if k[-1] < 0:
            continue
        kv = np.array(k, dtype=float)
        k_sq = kv @ kv
        if k_sq > 0:
            value = value - kv * (kv @ value) / k_sq
        value = value / (1 + params.delta ** 2 * k_sq) ** (params.beta / 2)
        position = (k[0] % 8, k[1] % 8, k[2])
        seen[position] = True
        assert np.max(np.abs(result.coefficients[(slice(None),) + position] - value)) < 1e-10
    assert np.max(np.abs(result.coefficients[:, ~seen])) < 1e-10


def test_nonlinear_term_energy_neutral(bardina_3d):
    """(N(u), J^beta_delta u)_{L^2} = (N(u), u)_delta vanishes on dealiased fields."""
    for seed in range(5):
        u = random_divfree_field(seed, None, bardina_3d.grid, amplitude=10.0)
        norm = sobolev_norm(u, 0.0)
        assert abs(delta_inner(nonlinear_term(u, bardina_3d), u, 2.0, 1.0)) < 1e-11 * norm ** 3


def test_transport_symmetric(bardina_3d):
    """Test symmetry of the transport term in its arguments."""
    u = random_divfree_field(20, None, bardina_3d.grid)
    v = random_divfree_field(21, None, bardina_3d.grid)
    a = transport(u, v, bardina_3d).coefficients
    b = transport(v, u, bardina_3d).coefficients
    assert np.max(np.abs(a - b)) < 1e-14


#
# TESTS - Random Fields
#
def test_random_field_deterministic():
    """Test that a seed fixes the random field."""
    grid = make_grid(3, 8, 2 * np.pi)
    assert np.array_equal(random_divfree_field(3, None, grid).coefficients,
                          random_divfree_field(3, None, grid).coefficients)


def test_random_field_divergence_free():
    """Test that random fields are divergence-free with zero mean."""
    grid = make_grid(3, 8, 2 * np.pi)
    u = random_divfree_field(4, lambda k_sq: (1 + k_sq) ** -1.0, grid)
    assert u.divergence_free
    assert u.is_divergence_free()
    assert u.coefficients[(slice(None), 0, 0, 0)].tolist() == [0, 0, 0]


def test_random_field_spectrum_is_exact():
    """Retained modes carry exactly the prescribed magnitude; phases and directions are what the seed picks."""
    grid = make_grid(3, 8, 2 * np.pi)
    retained = grid.dealias_mask & (grid.k_sq > 0)
    expected = 2.0 * (1 + grid.k_sq[retained]) ** -2
    u = random_divfree_field(6, None, grid, amplitude=2.0)
    v = random_divfree_field(7, None, grid, amplitude=2.0)
    for field in (u, v):
        length = np.sqrt(np.sum(np.abs(field.coefficients) ** 2, axis=0))
        assert np.allclose(length[retained], expected, rtol=1e-12, atol=0)
    assert not np.allclose(u.coefficients, v.coefficients)


def test_random_field_amplitude_scaling():
    """Test linear scaling in the amplitude."""
    grid = make_grid(3, 8, 2 * np.pi)
    base = random_divfree_field(5, None, grid)
    scaled = random_divfree_field(5, None, grid, amplitude=3.0)
    for s in (0.0, 1.0, 2.0):
        assert sobolev_norm(scaled, s) == pytest.approx(3.0 * sobolev_norm(base, s), rel=1e-13)


def test_forcing_field():
    """Forcing fields are Leray-projected on construction and need the certificate."""
    grid = make_grid(3, 8, 2 * np.pi)
    gradient = VectorField.single_mode(grid, (1, 0, 0), np.array([1.0, 0.0, 0.0]))
    assert np.max(np.abs(ForcingField.from_field(gradient).coefficients)) < 1e-15
    with pytest.raises(DivergenceFreeError):
        ForcingField(grid, gradient.coefficients, False)


#
# TESTS - Gradient Norm
#
def test_gradient_norm_parseval(bardina_2d):
    """Test the L^p gradient norm at p = 2 against Parseval."""
    u = scaled_field(bardina_2d, 6, 1.0)
    assert lp_gradient_norm(VectorField.zeros(bardina_2d.grid)) == 0.0
    assert lp_gradient_norm(u, 2.0) == pytest.approx(sobolev_norm(u, 1.0, "homogeneous"), rel=1e-10)


def test_gradient_norm_single_mode_quadrature():
    """u = (0, 2 cos x): ||grad u||_{L^5/2} against 1D quadrature of |2 sin x|^{5/2}."""
    grid = make_grid(2, 256, 2 * np.pi)
    u = VectorField.single_mode(grid, (1, 0), np.array([0.0, 1.0]))
    line, _ = integrate.quad(lambda x: abs(2 * math.sin(x)) ** 2.5, 0, 2 * math.pi, limit=200)
    expected = (2 * math.pi * line) ** (1 / 2.5)
    assert lp_gradient_norm(u, 2.5) == pytest.approx(expected, rel=1e-5)
