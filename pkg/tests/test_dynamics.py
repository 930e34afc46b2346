import numpy as np
import pytest

from zkcyl.dynamics import (
    IntegratorConfig,
    NumericalBlowup,
    Trajectory,
    duhamel_picard,
    evolve,
    nonlinear_rhs,
    propagate_linear,
)
from zkcyl.functionals import energy, mass
from zkcyl.spectral_core import GridSpec, SpectralField, from_function, hs_norm, inverse, l2_norm

from conftest import random_real_field

GRID = GridSpec(Lx=1.0, lam=1.0, Mx=32, My=16)


def smooth(X, Y):
    return np.cos(X + 0.3) * (1 + 0.5 * np.sin(Y)) + 0.5 * np.sin(2 * X - Y)


def terminal(scheme, n, F0, T=0.5):
    return evolve(F0, IntegratorConfig(scheme, T / n, T, save_every=n)).final


class TestLinear:
    """Exact free propagator."""

    def test_zero_time(self):
        F = random_real_field(GRID, 0)
        assert np.array_equal(propagate_linear(F, 0.0).coeffs, F.coeffs)

    def test_unit_mode_phase(self):
        g = GridSpec(Lx=8, lam=1, Mx=32, My=8)
        c = np.zeros(g.shape, complex)
        c[8, 0] = 1.0  # xi = 1, q = 0
        out = propagate_linear(SpectralField(g, c), 1.0)
        assert out.coeffs[8, 0] == pytest.approx(np.exp(1j), abs=1e-15)

    def test_group_property(self):
        F = random_real_field(GRID, 1)
        a = propagate_linear(propagate_linear(F, 0.3), 0.45).coeffs
        b = propagate_linear(F, 0.75).coeffs
        assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(F.coeffs))

    @pytest.mark.parametrize("s", [-1.0, 0.0, 1.0, 2.5])
    def test_norms_invariant(self, s):
        F = random_real_field(GRID, 2)
        assert hs_norm(propagate_linear(F, 3.7), s) == pytest.approx(hs_norm(F, s), rel=1e-13)


class TestNonlinearity:
    """Dealiased ``-1/2 d_x(u^2)``."""

    def test_zero_and_constant(self):
        assert not np.any(nonlinear_rhs(SpectralField.zeros(GRID)).coeffs)
        c = from_function(GRID, lambda X, Y: 2.5 * np.ones_like(X))
        assert np.max(np.abs(nonlinear_rhs(c).coeffs)) <= 1e-12

    def test_cosine(self):
        a, k = 0.7, 2.0
        F = from_function(GRID, lambda X, Y: a * np.cos(k * X) + 0 * Y)
        got = inverse(nonlinear_rhs(F)).values
        X, _ = GRID.points()
        assert np.max(np.abs(got - 0.5 * a * a * k * np.sin(2 * k * X))) <= 1e-12

    def test_output_is_real(self):
        F = random_real_field(GRID, 3)
        inverse(nonlinear_rhs(F), tol=1e-13)

    def test_non_finite_input(self):
        c = np.zeros(GRID.shape, complex)
        c[1, 1] = np.nan
        with pytest.raises(NumericalBlowup):
            nonlinear_rhs(SpectralField(GRID, c))


class TestIntegrators:
    """Strang splitting and ETDRK4."""

    def test_config_validation(self):
        with pytest.raises(ValueError):
            IntegratorConfig("euler")
        with pytest.raises(ValueError):
            IntegratorConfig(dt=0.3, Tend=1.0).nsteps
        assert IntegratorConfig(dt=0.25, Tend=1.0).nsteps == 4

    @pytest.mark.parametrize("scheme", ["strang", "etdrk4"])
    def test_zero_data(self, scheme):
        tr = evolve(SpectralField.zeros(GRID), IntegratorConfig(scheme, 0.1, 1.0))
        assert len(tr) == 11 and not np.any(tr.final.coeffs)

    @staticmethod
    def _linear_deviation(scheme, amp):
        F0 = from_function(GRID, smooth)
        F0 = F0 * (amp / np.max(np.abs(inverse(F0).values)))
        F0 = F0.replace(F0.coeffs * GRID.dealias_mask())
        ref = propagate_linear(F0, 1.0)
        return l2_norm(terminal(scheme, 100, F0, T=1.0) - ref) / l2_norm(ref)

    @pytest.mark.parametrize("scheme", ["strang", "etdrk4"])
    def test_tiny_amplitude_is_linear(self, scheme):
        # the deviation is the quadratic term itself, so it is first order in amplitude
        d6, d3 = self._linear_deviation(scheme, 1e-6), self._linear_deviation(scheme, 5e-7)
        assert d6 / d3 == pytest.approx(2.0, rel=1e-2)
        assert d6 <= 5e-8
        assert self._linear_deviation(scheme, 1e-7) <= 1e-8

    @pytest.mark.parametrize("scheme, order", [("strang", 2), ("etdrk4", 4)])
    def test_order(self, scheme, order):
        F0 = from_function(GRID, smooth)
        ref = terminal("etdrk4", 1024, F0)
        err = [l2_norm(terminal(scheme, n, F0) - ref) for n in (32, 64, 128)]
        exps = np.log2(np.array(err[:-1]) / err[1:])
        assert np.all(np.abs(exps - order) <= 0.3), exps

    def test_conservation_and_reality(self):
        F0 = from_function(GRID, smooth)
        tr = evolve(F0, IntegratorConfig("etdrk4", 1e-3, 0.2, save_every=50))
        m, e = [mass(F) for F in tr.states], [energy(F) for F in tr.states]
        assert np.ptp(m) / m[0] <= 2e-11
        assert np.ptp(e) / (abs(e[0]) + 1) <= 2e-7
        for F in tr.states:
            inverse(F, tol=1e-12)

    def test_callback_and_snapshots(self):
        seen = []
        tr = evolve(from_function(GRID, smooth), IntegratorConfig("strang", 0.01, 0.1, save_every=3),
                    callback=lambda t, F: seen.append(t))
        assert np.allclose(seen, [0, 0.03, 0.06, 0.09, 0.1])
        assert np.allclose(tr.times, seen) and len(tr.every(2)) == 3

    def test_blowup_is_reported(self):
        F0 = from_function(GRID, smooth) * 1e6
        with np.errstate(all="ignore"), pytest.raises(NumericalBlowup, match="t="):
            evolve(F0, IntegratorConfig("strang", 0.1, 5.0))

    def test_trajectory_validation(self):
        F = SpectralField.zeros(GRID)
        with pytest.raises(ValueError):
            Trajectory(GRID, [0.0, 0.0], [F, F])

    def test_doubling_period_is_invisible(self):
        """Data of period 2 pi on a 4 pi box evolves exactly as on the 2 pi box."""
        big = GridSpec(Lx=2.0, lam=1.0, Mx=64, My=16)
        a = terminal("etdrk4", 50, from_function(GRID, smooth), T=0.25)
        b = terminal("etdrk4", 50, from_function(big, smooth), T=0.25)
        assert np.max(np.abs(b.coeffs[::2] - 2 * a.coeffs)) <= 1e-12 * np.max(np.abs(b.coeffs))
        assert not np.any(np.abs(b.coeffs[1::2]) > 1e-12 * np.max(np.abs(b.coeffs)))


class TestPicard:
    """Iterates of the Duhamel map."""

    def test_zero(self):
        res = duhamel_picard(SpectralField.zeros(GRID), 0.01, 3)
        assert all(not np.any(it) for it in res.iterates)

    def test_first_iterate_is_free_solution(self):
        F0 = from_function(GRID, smooth)
        res = duhamel_picard(F0, 0.05, 1)
        for t, c in zip(res.times, res.iterates[0]):
            ref = propagate_linear(F0.replace(F0.coeffs * GRID.dealias_mask()), t).coeffs
            assert np.max(np.abs(c - ref)) <= 1e-13 * np.max(np.abs(ref))

    def test_contraction_and_limit(self):
        F0 = from_function(GRID, lambda X, Y: 0.2 * smooth(X, Y))
        res = duhamel_picard(F0, 0.01, 6)
        assert not res.diverged
        assert np.all(res.ratios[1:] < 0.5)
        ref = evolve(F0, IntegratorConfig("etdrk4", 1e-4, 0.01, save_every=100)).final
        final = SpectralField(GRID, res.iterates[-1][-1])
        assert l2_norm(final - ref) <= 1e-6 * l2_norm(ref)

    def test_arguments(self):
        with pytest.raises(ValueError):
            duhamel_picard(SpectralField.zeros(GRID), 0.01, 0)
        with pytest.raises(ValueError):
            duhamel_picard(SpectralField.zeros(GRID), -1.0, 2)
