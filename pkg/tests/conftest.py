"""

Shared fixtures for the GAAM tests

Small grids keep every simulation under a few seconds: 2D runs use 16^2
points, 3D runs 8^3.

License: BSD 3-Clause

"""

#
# IMPORTS
#
import numpy as np
import pytest

from gaam.fields_metrics import ForcingField, random_divfree_field, sobolev_norm
from gaam.spectral_core import ModelParams, VectorField


#
# HELPERS
#
def scaled_field(params: ModelParams, seed: int, norm: float) -> VectorField:
    """Random divergence-free field with ||.||_{H^{beta/2}} = norm."""
    raw = random_divfree_field(seed, None, params.grid)
    return raw * (norm / sobolev_norm(raw, params.beta / 2))


def scaled_forcing(params: ModelParams, seed: int, norm: float) -> ForcingField:
    if norm == 0:
        return ForcingField.zeros(params.grid)
    return ForcingField.from_field(scaled_field(params, seed, norm))


#
# FIXTURES
#
@pytest.fixture
def bardina_2d() -> ModelParams:
    """alpha = beta = 2, delta = 1 so that a = b = c = 1."""
    return ModelParams(alpha=2.0, beta=2.0, gamma=1.0, delta=1.0, nu=1.0, dim=2, modes_per_axis=16)


@pytest.fixture
def bardina_3d() -> ModelParams:
    return ModelParams(alpha=2.0, beta=2.0, gamma=1.0, delta=1.0, nu=1.0, dim=3, modes_per_axis=8)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
