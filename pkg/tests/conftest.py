import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from zkcyl.spectral_core import GridSpec, SpectralField, hermitian_part

settings.register_profile(
    "zkcyl", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("zkcyl")


def random_real_field(grid, seed=0, decay=2.0, dealiased=True):
    """Hermitian random coefficients with power-law decay in the weighted modulus."""
    rng = np.random.default_rng(seed)
    r = grid.weighted_modulus()
    c = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * (1 + r) ** -decay
    if dealiased:
        c = c * grid.dealias_mask()
    else:
        # drop Nyquist rows so the field stays exactly real
        c[grid.Mx // 2, :] = 0
        c[:, grid.My // 2] = 0
    return SpectralField(grid, hermitian_part(c) * grid.area)


@pytest.fixture
def small_grid():
    return GridSpec(Lx=2.0, lam=1.0, Mx=32, My=16)
