import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from zkcyl.multipliers import (
    IMultiplier,
    apply_I,
    dyadic_reconstruction,
    eta,
    low_pass,
    phi,
    project_PN,
    project_QL,
    restrict_RK,
    window_transform,
)
from zkcyl.spectral_core import GridSpec, SpaceTimeField, SpectralField, hs_norm
from zkcyl.symbols import sigma

from conftest import random_real_field


def single_mode(grid, kx, ky):
    c = np.zeros(grid.shape, complex)
    c[kx, ky] = 1.0
    return SpectralField(grid, c)


class TestCutoffs:
    """The plateau function and the dyadic bump built from it."""

    def test_phi_values(self):
        assert phi(0.0) == 0.0
        assert phi(1.0) == 1.0
        assert phi(3.0) == 0.0
        assert phi(0.75) == pytest.approx(0.5, abs=1e-15)
        assert phi(1.5) == pytest.approx(0.5, abs=1e-15)

    @given(st.floats(-10, 10))
    def test_ranges(self, x):
        assert 0.0 <= eta(x) <= 1.0
        assert 0.0 <= phi(x) <= 1.0
        if abs(x) < 0.5 or abs(x) > 2:
            assert phi(x) == 0.0

    def test_eta_is_c1(self):
        x = np.linspace(0, 3, 30001)
        d = np.diff(eta(x)) / np.diff(x)
        assert np.max(np.abs(np.diff(d))) < 1e-3

    def test_partition_of_unity(self):
        J = 8
        r = np.linspace(1.0, 2.0 ** (J - 1), 20001)
        total = sum(phi(r / 2.0**j) for j in range(J + 1))
        assert np.max(np.abs(total - 1.0)) <= 1e-12

    @pytest.mark.parametrize("omega", [0.0, 0.3, 1.7, np.pi / 2, 5.0])
    def test_window_transform_by_quadrature(self, omega):
        h, c = 2.0, 0.7
        re = quad(lambda t: eta((t - c) / h) * np.cos(omega * t), c - 2 * h, c + 2 * h, limit=200)[0]
        im = quad(lambda t: -eta((t - c) / h) * np.sin(omega * t), c - 2 * h, c + 2 * h, limit=200)[0]
        assert window_transform(omega, h, c) == pytest.approx(re + 1j * im, abs=1e-9)


class TestProjections:
    """Dyadic frequency and modulation projections."""

    grid = GridSpec(Lx=8, lam=1, Mx=128, My=32)

    def test_mode_at_N_is_kept(self):
        # xi = 0, q = 4: weighted modulus 4
        F = single_mode(self.grid, 0, 4)
        assert np.array_equal(project_PN(F, 4).coeffs, F.coeffs)

    def test_mode_far_above_N_is_removed(self):
        F = single_mode(self.grid, 0, 8)
        assert not np.any(project_PN(F, 2).coeffs)

    def test_reconstruction(self):
        g = self.grid
        r = g.weighted_modulus()
        rng = np.random.default_rng(0)
        c = rng.standard_normal(g.shape) * ((r >= 1) & (r <= 8))
        F = SpectralField(g, c)
        rec = dyadic_reconstruction(F, 16)
        assert np.max(np.abs(rec.coeffs - F.coeffs)) <= 1e-10

    def test_low_pass_complements(self):
        F = single_mode(self.grid, 0, 0)
        assert np.array_equal(low_pass(F).coeffs, F.coeffs)

    def _modulation_field(self, offset, L):
        g = GridSpec(Lx=1, lam=1, Mx=16, My=16)
        s = sigma(1.0, 1.0)
        # Tspan = 2 pi makes the tau spacing 1, so tau - sigma is an integer
        idx = [[1, 1, int(s + offset)]]
        return SpaceTimeField(g, 512, 2 * np.pi, idx, [1.0])

    @pytest.mark.parametrize("L", [1, 2, 8])
    def test_modulation_weights(self, L):
        on = project_QL(self._modulation_field(0, L), L)
        assert on.coeffs[0] == 0.0
        edge = project_QL(self._modulation_field(L, L), L)
        assert edge.coeffs[0] == 1.0
        far = project_QL(self._modulation_field(4 * L, L), L)
        assert far.coeffs[0] == 0.0

    def test_restriction(self):
        g = self.grid
        F = random_real_field(g, 1)
        out = restrict_RK(F, 1.0)
        assert not np.any(out.coeffs[0, :])
        assert np.array_equal(out.coeffs[8, :], F.coeffs[8, :])
        twice = restrict_RK(out, 1.0).coeffs
        assert np.max(np.abs(twice - F.coeffs * phi(g.xi / 1.0)[:, None] ** 2)) <= 1e-13

    def test_commute(self):
        F = random_real_field(self.grid, 2)
        Imul = IMultiplier(4, 0.7)
        a = apply_I(project_PN(restrict_RK(F, 2), 8), Imul).coeffs
        b = restrict_RK(project_PN(apply_I(F, Imul), 8), 2).coeffs
        assert np.max(np.abs(a - b)) <= 1e-13 * np.max(np.abs(F.coeffs))


class TestIMultiplier:
    """The smoothing multiplier m and the operator I."""

    def test_regimes(self):
        m = IMultiplier(8, 0.6)
        assert m(0.0) == 1.0 and m(8.0) == 1.0
        assert m(16.0) == pytest.approx(2**-0.4, rel=1e-15)
        assert m(64.0) == pytest.approx(8**-0.4, rel=1e-15)

    @given(st.sampled_from([2, 4, 16, 64]), st.floats(0.05, 0.95))
    def test_monotone_and_bounded(self, N, s):
        m = IMultiplier(N, s)
        r, v = m.table(20 * N, 4001)
        assert np.all(np.diff(v) <= 0)
        assert np.all((v > 0) & (v <= 1))

    @pytest.mark.parametrize("bad", [(1, 0.5), (4, 0.0), (4, 1.0)])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            IMultiplier(*bad)

    def test_identity_at_low_frequency(self):
        g = GridSpec(Lx=2, lam=1, Mx=32, My=16)
        F = random_real_field(g, 3)
        F = F.replace(F.coeffs * (g.weighted_modulus() <= 4))
        assert np.array_equal(apply_I(F, IMultiplier(4, 0.5)).coeffs, F.coeffs)

    def test_single_mode_at_4N(self):
        g = GridSpec(Lx=8, lam=1, Mx=32, My=32)
        F = single_mode(g, 0, 8)
        out = apply_I(F, IMultiplier(2, 0.3))
        assert out.coeffs[0, 8] == pytest.approx(4**-0.7, rel=1e-15)

    @given(st.integers(0, 10_000), st.sampled_from([2, 4, 8]), st.floats(0.1, 0.95))
    def test_contraction_and_smoothing(self, seed, N, s):
        g = GridSpec(Lx=2, lam=1, Mx=32, My=16)
        F = random_real_field(g, seed, decay=0.5)
        IF = apply_I(F, IMultiplier(N, s))
        assert hs_norm(IF, 1) <= hs_norm(F, 1) * (1 + 1e-14)
        # with <r> = 1 + r the sharp constant is (N + 1)^(1 - s)
        assert hs_norm(IF, 1) <= (N + 1) ** (1 - s) * hs_norm(F, s) * (1 + 1e-12)

    def test_csv(self, tmp_path):
        IMultiplier(2, 0.5).write_csv(tmp_path / "m.csv", 10.0, n=11)
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines[0] == "abs_zeta,m" and len(lines) == 12
