"""

Test Attractor Diagnostics

Energy decay and absorbing-set checks, attraction to the stationary state,
the linearized operator, Lyapunov traces and the dimension bound.

License: BSD 3-Clause

"""

#
# IMPORTS
#
import math

import numpy as np
import pytest
from scipy import special

from conftest import scaled_field, scaled_forcing
from gaam.attractor_diag import (
    NoEntryError,
    RankDeficientError,
    absorbing_check,
    absorbing_entry,
    absorbing_set_spec,
    continuity_in_data_check,
    energy_inequality_check,
    fractal_dim_bound,
    frak_C,
    frak_C_from_constants,
    gram_schmidt_delta,
    l_operator_apply,
    lieb_thirring_constant,
    lowest_mode_family,
    lyapunov_trace,
    lyapunov_trace_check,
    prop1_decay_check,
    prop1_integral_check,
    singleton_attractor_check,
    tangent_taylor_check,
    theorem4_decay_check
)
from gaam.dynamics import SimulationConfig, simulate
from gaam.fields_metrics import ForcingField, delta_inner, random_divfree_field
from gaam.spectral_core import ModelParams, VectorField
from gaam.stationary import picard_solve


#
# FIXTURES
#
@pytest.fixture
def forced_run(bardina_2d):
    """(u0, f, record) for a unit initial field under weak forcing."""
    u0 = scaled_field(bardina_2d, 1, 1.0)
    f = scaled_forcing(bardina_2d, 2, 0.05)
    record = simulate(u0, f, bardina_2d, SimulationConfig(dt=0.002, t_end=3.0, record_stride=10))
    return u0, f, record


#
# TESTS - Energy estimates
#
def test_prop1_decay(bardina_2d, forced_run):
    """Test the energy decay bound along a forced run."""
    u0, f, record = forced_run
    report = prop1_decay_check(record, u0, f, bardina_2d)
    assert report.passed
    assert report.details["min_relative_slack"] >= 0


def test_prop1_decay_general_delta(bardina_3d):
    """Test the energy decay bound away from delta = 1."""
    params = bardina_3d.with_updates(delta=0.5)
    u0 = scaled_field(params, 3, 1.0)
    f = scaled_forcing(params, 4, 0.1)
    record = simulate(u0, f, params, SimulationConfig(dt=0.002, t_end=0.5, record_stride=5))
    assert prop1_decay_check(record, u0, f, params).passed


def test_prop1_integral(bardina_2d, forced_run):
    """Test the time-integrated dissipation bound over a window."""
    u0, f, record = forced_run
    report = prop1_integral_check(record, u0, f, bardina_2d, window_T=1.0)
    assert report.passed
    assert report.details["windows"] > 0
    with pytest.raises(ValueError, match="longer"):
        prop1_integral_check(record, u0, f, bardina_2d, window_T=10.0)


def test_energy_inequality(forced_run):
    """Test the per-step and integrated energy balance of a forced run."""
    _, _, record = forced_run
    report = energy_inequality_check(record)
    assert report.passed
    assert report.max_violation < 1e-3


def test_energy_inequality_tolerance(forced_run):
    """Test that a tolerance below the step residual fails the energy check."""
    _, _, record = forced_run
    assert not energy_inequality_check(record, tol=1e-12).passed


#
# TESTS - Absorbing set
#
def test_absorbing_entry(bardina_2d, forced_run):
    """Test that a forced run enters the absorbing ball."""
    _, f, record = forced_run
    spec = absorbing_set_spec(f, bardina_2d)
    assert spec.radius_sq == pytest.approx(2 * 0.05 ** 2, rel=1e-12)
    report = absorbing_check(record, spec)
    assert report.passed
    assert report.details["entry_time"] <= report.details["predicted_entry_time"]
    assert absorbing_entry(record, spec) == report.details["entry_time"]


def test_absorbing_entry_predicted_time(bardina_2d):
    """Test the entry time against its prediction."""
    f = scaled_forcing(bardina_2d, 5, 0.05)
    spec = absorbing_set_spec(f, bardina_2d)
    # a = b = gamma = 1: ln(||u0||^2 / ||f||^2)
    assert spec.predicted_entry_time(1.0) == pytest.approx(math.log(400.0), rel=1e-12)
    assert spec.predicted_entry_time(1e-6) == 0.0


def test_absorbing_never_entered(bardina_2d):
    """Test the error when no sample lies inside the ball."""
    u0 = scaled_field(bardina_2d, 6, 1.0)
    f = scaled_forcing(bardina_2d, 7, 0.05)
    record = simulate(u0, f, bardina_2d, SimulationConfig(dt=0.01, t_end=0.05))
    spec = absorbing_set_spec(f, bardina_2d)
    with pytest.raises(NoEntryError):
        absorbing_entry(record, spec)
    report = absorbing_check(record, spec)
    assert not report.passed
    assert report.max_violation == math.inf


def test_absorbing_skipped_without_forcing(bardina_2d):
    """Test that a zero forcing skips the absorbing check."""
    f = ForcingField.zeros(bardina_2d.grid)
    record = simulate(scaled_field(bardina_2d, 8, 1.0), f, bardina_2d, SimulationConfig(dt=0.01, t_end=0.1))
    report = absorbing_check(record, absorbing_set_spec(f, bardina_2d))
    assert report.skipped
    assert report.passed


#
# TESTS - Stationary attraction
#
def test_theorem4_decay(bardina_2d):
    """Test exponential convergence to the stationary state."""
    f = scaled_forcing(bardina_2d, 9, 0.05)
    U = picard_solve(f, bardina_2d).field
    u0 = scaled_field(bardina_2d, 10, 1.0)
    record = simulate(u0, f, bardina_2d, SimulationConfig(dt=0.002, t_end=2.0, record_stride=10), reference=U)
    report = theorem4_decay_check(record)
    assert report.passed
    assert report.details["fitted_log_slope"] <= -bardina_2d.gamma
    assert report.details["unweighted_violation"] == 0.0


def test_theorem4_needs_reference(forced_run):
    """Test that the decay check requires reference distances."""
    _, _, record = forced_run
    with pytest.raises(ValueError, match="reference"):
        theorem4_decay_check(record)


def test_singleton_attractor(bardina_2d):
    """Test that random starts collapse onto the stationary state."""
    f = scaled_forcing(bardina_2d, 11, 0.05)
    report = singleton_attractor_check(f, bardina_2d, n_starts=3, t_end=10.0, dt=0.01)
    assert report.passed
    assert report.details["spread"] < 1e-6
    assert report.details["starts"] == 3


def test_singleton_attractor_explicit_starts(bardina_2d):
    """Too short a run leaves the starts apart."""
    f = scaled_forcing(bardina_2d, 12, 0.05)
    starts = [scaled_field(bardina_2d, seed, 1.0) for seed in (13, 14)]
    report = singleton_attractor_check(f, bardina_2d, t_end=0.1, dt=0.01, starts=starts)
    assert not report.passed
    assert report.max_violation > 0


def test_continuity_in_data(bardina_2d):
    """Test the growth bound of a small perturbation of the initial data."""
    u0 = scaled_field(bardina_2d, 15, 1.0)
    f = scaled_forcing(bardina_2d, 16, 0.1)
    report = continuity_in_data_check(u0, f, bardina_2d, SimulationConfig(dt=0.01, t_end=0.5))
    assert report.passed
    assert report.details["max_ratio"] >= 1.0
    assert report.details["measured_K"] >= 0.0


#
# TESTS - Tangent flow
#
def test_tangent_taylor_remainder_is_quadratic(bardina_2d):
    """Remainders over h = 1e-2 ... 1e-5 fall off with slope 2."""
    u0 = scaled_field(bardina_2d, 17, 1.0)
    f = scaled_forcing(bardina_2d, 18, 0.1)
    report = tangent_taylor_check(u0, f, bardina_2d, SimulationConfig(dt=0.01, t_end=0.2))
    assert report.passed, report.details
    assert 1.9 <= report.details["slope"] <= 2.1
    assert report.details["h"] == [1e-2, 1e-3, 1e-4, 1e-5]
    assert report.details["remainders"][-1] < report.details["remainders"][0]


def test_tangent_taylor_skipped_when_linear(bardina_2d):
    """Test that the Taylor check is skipped without the nonlinearity."""
    u0 = scaled_field(bardina_2d, 19, 1.0)
    cfg = SimulationConfig(dt=0.01, t_end=0.1, nonlinearity_enabled=False)
    report = tangent_taylor_check(u0, ForcingField.zeros(bardina_2d.grid), bardina_2d, cfg)
    assert report.skipped


#
# TESTS - Linearized operator
#
def test_l_operator_at_rest(bardina_2d):
    """Around u = 0 the quadratic form of L on a unit mode is -(gamma + nu |k|^alpha)."""
    zero = VectorField.zeros(bardina_2d.grid)
    family = lowest_mode_family(zero, 2, bardina_2d.beta, bardina_2d.delta)
    for w in family.fields:
        form = delta_inner(l_operator_apply(w, zero, bardina_2d), w, 2.0, 1.0)
        assert form == pytest.approx(-2.0, rel=1e-12)


def test_l_operator_is_linear(bardina_3d):
    """Test linearity of the linearized operator in w."""
    u = scaled_field(bardina_3d, 20, 1.0)
    w1 = random_divfree_field(21, None, bardina_3d.grid)
    w2 = random_divfree_field(22, None, bardina_3d.grid)
    combined = l_operator_apply(2.0 * w1 + 3.0 * w2, u, bardina_3d).coefficients
    separate = (2.0 * l_operator_apply(w1, u, bardina_3d) + 3.0 * l_operator_apply(w2, u, bardina_3d)).coefficients
    assert np.max(np.abs(combined - separate)) < 1e-12 * np.max(np.abs(separate))


#
# TESTS - Orthonormal families
#
def test_gram_schmidt(bardina_3d):
    """Test orthonormality of the delta-weighted Gram-Schmidt family."""
    params = bardina_3d.with_updates(delta=0.5)
    fields = [random_divfree_field(seed, None, params.grid) for seed in range(4)]
    family = gram_schmidt_delta(fields, params.beta, params.delta)
    assert len(family) == 4
    assert np.max(np.abs(family.gram() - np.eye(4))) < 1e-12
    family.validate()


def test_gram_schmidt_rank_deficient(bardina_3d):
    """Test the error on linearly dependent fields."""
    w = random_divfree_field(30, None, bardina_3d.grid)
    with pytest.raises(RankDeficientError):
        gram_schmidt_delta([w, 2.0 * w], 2.0, 1.0)
    with pytest.raises(RankDeficientError, match="zero"):
        gram_schmidt_delta([w, VectorField.zeros(bardina_3d.grid)], 2.0, 1.0)
    with pytest.raises(RankDeficientError):
        gram_schmidt_delta([], 2.0, 1.0)


def test_lowest_mode_family(bardina_2d):
    """The four lowest 2D fields sit on |k| = 1."""
    family = lowest_mode_family(VectorField.zeros(bardina_2d.grid), 4, 2.0, 1.0)
    assert len(family) == 4
    family.validate()


#
# TESTS - Lyapunov traces
#
def test_lyapunov_trace_at_rest(bardina_2d):
    """On |k| = 1 modes around u = 0 the trace is -4 (gamma + nu)."""
    zero = VectorField.zeros(bardina_2d.grid)
    family = lowest_mode_family(zero, 4, 2.0, 1.0)
    assert lyapunov_trace(zero, family, bardina_2d) == pytest.approx(-8.0, rel=1e-12)
    report = lyapunov_trace_check(zero, family, bardina_2d)
    assert report.passed
    assert report.details["bound"] == pytest.approx(-2.0, rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 4])
@pytest.mark.parametrize("scale", [0.5, 2.0])
def test_lyapunov_trace_bound(bardina_3d, n, scale):
    """Test the trace bound on families around scaled snapshots."""
    u = scaled_field(bardina_3d, 31, scale)
    family = lowest_mode_family(u, n, 2.0, 1.0)
    report = lyapunov_trace_check(u, family, bardina_3d)
    assert report.passed, report.details


def test_lyapunov_trace_check_rejects_non_orthonormal(bardina_2d):
    """Test that the trace check needs an orthonormal family."""
    zero = VectorField.zeros(bardina_2d.grid)
    family = lowest_mode_family(zero, 2, 2.0, 1.0)
    family.fields[0] = 2.0 * family.fields[0]
    with pytest.raises(ValueError, match="orthonormal"):
        lyapunov_trace_check(zero, family, bardina_2d)


#
# TESTS - Dimension bound
#
def test_lieb_thirring_constant():
    """Test the numerical value of the Lieb-Thirring constant."""
    closed_form = 3 / 5 ** (5 / 3) * (5 * math.pi ** 2 / 4) ** (2 / 3)
    assert lieb_thirring_constant() == pytest.approx(closed_form, rel=1e-14)
    assert 1.095 < lieb_thirring_constant() < 1.096
    gamma_form = (16 * math.pi ** 1.5 * special.gamma(3.5) / special.gamma(5)) ** (2 / 3)
    assert lieb_thirring_constant() == pytest.approx(3 / 5 ** (5 / 3) * gamma_form, rel=1e-14)


def test_frak_C_unit_constants():
    """Test the dimension constant with a = b = c = 1."""
    assert frak_C_from_constants(1.0, 1.0, 1.0, 1.0) == pytest.approx(0.4 * lieb_thirring_constant() ** 2.5, rel=1e-14)


def test_frak_C_decreases_with_damping():
    """Test that stronger damping lowers the dimension constant."""
    values = [frak_C_from_constants(1.0, 1.0, 1.0, g) for g in (0.5, 1.0, 2.0, 4.0)]
    assert np.all(np.diff(values) < 0)


def test_fractal_dim_bound(bardina_2d):
    """Test the dimension bound inside its hypotheses."""
    assert fractal_dim_bound(ForcingField.zeros(bardina_2d.grid), bardina_2d) == 0.0
    f = scaled_forcing(bardina_2d, 32, 1.0)
    assert fractal_dim_bound(f, bardina_2d) == pytest.approx(2 * frak_C(bardina_2d), rel=1e-12)
    f = scaled_forcing(bardina_2d, 33, 2.0)
    assert fractal_dim_bound(f, bardina_2d) == pytest.approx(2 * frak_C(bardina_2d) * 16.0, rel=1e-12)


def test_fractal_dim_bound_outside_proven_range():
    """Test the warning and the strict error outside the hypotheses."""
    params = ModelParams(alpha=1.5, beta=0.0, gamma=1.0, delta=1.0, nu=1.0, dim=3, modes_per_axis=8)
    f = ForcingField.zeros(params.grid)
    with pytest.raises(ValueError, match="alpha >= 1 and beta >= 2"):
        fractal_dim_bound(f, params, strict=True)
    with pytest.warns(UserWarning):
        assert fractal_dim_bound(f, params) == 0.0
