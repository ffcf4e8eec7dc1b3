import math

import numpy as np
import pytest
from scipy.integrate import quad

from zakbench.errors import (
    ContractViolation,
    CutoffExceedsBoxError,
    GridRangeError,
    SingularSymbolError,
)
from zakbench.fields import Space, physical_field, spectral_field
from zakbench.grid import Grid, fft_workers
from zakbench.spectral import (
    apply_multiplier,
    bessel_power_symbol,
    dft_forward,
    dft_inverse,
    half_wave_symbol,
    lambda_power_symbol,
    lp_project,
    lp_weight,
    radial_bump,
    riesz_symbol,
    schrodinger_symbol,
    spatial_split,
)

from conftest import random_field


class TestGrid:
    def test_geometry(self):
        g = Grid(16, 8.0)
        assert g.dx * g.n == pytest.approx(g.length, abs=1e-15)
        assert g.k_max == pytest.approx(np.pi * g.n / g.length)
        # wavenumbers symmetric under negation except the Nyquist mode
        k = np.sort(g.k1d)
        body = k[k > -g.k_max + 1e-12]
        assert np.allclose(np.sort(-body), np.sort(body))

    def test_rejects_odd_or_bad(self):
        with pytest.raises(ValueError):
            Grid(15, 8.0)
        with pytest.raises(ValueError):
            Grid(16, -1.0)

    def test_workers_env(self, monkeypatch):
        monkeypatch.setenv("ZAK_THREADS", "1")
        assert fft_workers() == 1
        monkeypatch.setenv("ZAK_THREADS", "junk")
        assert fft_workers() == 1


class TestDft:
    def test_constant_field_is_zero_mode(self, grid16):
        f = physical_field(grid16, np.ones(grid16.shape))
        hat = dft_forward(f)
        off_zero = hat.values.copy()
        off_zero[0, 0, 0] = 0.0
        assert np.max(np.abs(off_zero)) < 1e-12 * abs(hat.values[0, 0, 0])

    def test_round_trip(self, grid16, rng):
        f = random_field(grid16, rng)
        back = dft_inverse(dft_forward(f))
        assert np.max(np.abs(back.values - f.values)) < 1e-12 * f.linf()

    def test_parseval_against_direct_summation(self, grid8, rng):
        # independent O(n^6) DFT oracle on the 8^3 grid
        f = random_field(grid8, rng)
        n = grid8.n
        j = np.arange(n)
        w = np.exp(-2j * np.pi * np.outer(j, j) / n)
        brute = np.einsum("ai,bj,ck,ijk->abc", w, w, w, f.values) / n**1.5
        hat = dft_forward(f)
        assert np.max(np.abs(hat.values - brute)) < 1e-12 * np.max(np.abs(brute))
        assert abs(hat.l2() - f.l2()) < 1e-12 * f.l2()

    def test_space_tag_contract(self, grid16, rng):
        f = random_field(grid16, rng)
        with pytest.raises(ContractViolation):
            dft_inverse(f)
        with pytest.raises(ContractViolation):
            dft_forward(dft_forward(f))


class TestMultipliers:
    def test_lambda_squared_on_single_mode(self):
        g = Grid(16, 8.0)
        k1 = 2 * np.pi / g.length
        X = np.broadcast_to(g.xmesh()[0], g.shape)
        f = physical_field(g, np.exp(1j * k1 * X))
        out = dft_inverse(apply_multiplier(dft_forward(f), lambda_power_symbol(2.0)))
        assert np.max(np.abs(out.values - k1**2 * f.values)) < 1e-12 * k1**2

    def test_lambda_inverse_then_lambda(self, grid16, rng):
        f = random_field(grid16, rng, zero_mean=True)
        vals = dft_forward(f).values.copy()
        vals[0, 0, 0] = 0.0
        hat = spectral_field(grid16, vals)
        once = apply_multiplier(hat, lambda_power_symbol(-1.0))
        twice = apply_multiplier(once, lambda_power_symbol(1.0))
        assert np.max(np.abs(twice.values - hat.values)) < 1e-12 * np.max(np.abs(hat.values))

    def test_schrodinger_propagator_is_isometry(self, grid16, rng):
        f = dft_forward(random_field(grid16, rng))
        kx, ky, kz = grid16.kmesh()
        sym = schrodinger_symbol(0.37)(kx, ky, kz)
        assert np.max(np.abs(np.abs(sym) - 1.0)) < 4e-16
        out = apply_multiplier(f, schrodinger_symbol(0.37))
        assert abs(out.l2() - f.l2()) < 1e-12 * f.l2()

    def test_half_wave_round_trip(self, grid16, rng):
        f = dft_forward(random_field(grid16, rng))
        fwd = apply_multiplier(f, half_wave_symbol(0.9, 1))
        back = apply_multiplier(fwd, half_wave_symbol(0.9, -1))
        assert np.max(np.abs(back.values - f.values)) < 1e-12 * np.max(np.abs(f.values))

    def test_riesz_and_bessel(self, grid16, rng):
        f = dft_forward(random_field(grid16, rng))
        out = apply_multiplier(f, riesz_symbol(0))
        assert out.values[0, 0, 0] == 0.0
        with pytest.raises(ValueError):
            riesz_symbol(3)
        h0 = apply_multiplier(f, bessel_power_symbol(0.0))
        assert np.array_equal(h0.values, f.values)

    def test_singular_symbol_raises_without_override(self, grid16, rng):
        f = dft_forward(random_field(grid16, rng))
        with pytest.raises(SingularSymbolError):
            apply_multiplier(f, lambda kx, ky, kz: 1.0 / np.sqrt(kx**2 + ky**2 + kz**2))
        out = apply_multiplier(
            f, lambda kx, ky, kz: 1.0 / np.sqrt(kx**2 + ky**2 + kz**2), zero_mode=0.0
        )
        assert np.isfinite(out.values).all()


class TestLittlewoodPaley:
    def test_partition_telescopes_to_mean_free_identity(self, grid16, rng):
        f = random_field(grid16, rng)
        k_lo, k_hi = grid16.dyadic_range
        total = np.zeros(grid16.shape, dtype=np.complex128)
        for k in range(k_lo, k_hi + 1):
            total += lp_project(f, k).values
        target = f.values - f.values.mean()
        assert np.max(np.abs(total - target)) < 1e-12 * f.linf()

    def test_below_plus_above_is_identity_on_mean_free(self, grid16):
        k_lo, k_hi = grid16.dyadic_range
        for k in range(k_lo, k_hi + 1):
            w = lp_weight(grid16, k, "below") + lp_weight(grid16, k, "above")
            assert w[0, 0, 0] == 0.0  # the mean carries no dyadic scale
            w[0, 0, 0] = 1.0
            assert np.max(np.abs(w - 1.0)) == 0.0

    def test_single_shell_mode_recovered(self):
        g = Grid(32, 2 * np.pi)
        # mode with |xi| = 2^2, inside the dyadic range
        X = np.broadcast_to(g.xmesh()[0], g.shape)
        f = physical_field(g, np.exp(1j * 4.0 * X))
        k_lo, k_hi = g.dyadic_range
        total = np.zeros(g.shape, np.complex128)
        for k in range(k_lo, k_hi + 1):
            total += lp_project(f, k).values
        assert np.max(np.abs(total - f.values)) < 1e-12

    def test_low_pass_is_contraction(self, rng):
        g = Grid(16, 16.0)
        f = random_field(g, rng)
        hat = dft_forward(f)
        k_lo, k_hi = g.dyadic_range
        for k in range(k_lo, k_hi + 1):
            proj = lp_project(hat, k, "below")
            # brute-force check of the multiplier bound
            w = lp_weight(g, k, "below")
            assert w.max() <= 1.0 + 1e-15 and w.min() >= 0.0
            assert proj.l2() <= hat.l2() * (1 + 1e-12)

    def test_range_error(self, grid16, rng):
        f = random_field(grid16, rng)
        k_lo, k_hi = grid16.dyadic_range
        with pytest.raises(GridRangeError):
            lp_project(f, k_hi + 1)
        with pytest.raises(GridRangeError):
            lp_project(f, k_lo - 1)

    def test_commutes_with_multipliers(self, grid16, rng):
        f = dft_forward(random_field(grid16, rng))
        sym = schrodinger_symbol(0.51)
        a = lp_project(apply_multiplier(f, sym), 0)
        b = apply_multiplier(lp_project(f, 0), sym)
        assert np.max(np.abs(a.values - b.values)) < 1e-12 * np.max(np.abs(f.values))


class TestSpatialSplit:
    def test_bump_profile(self):
        r = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 3.0])
        vals = radial_bump(r)
        assert np.all(vals[r <= 1.0] == 1.0)
        assert np.all(vals[r >= 2.0] == 0.0)
        assert np.all(np.diff(vals) <= 1e-15)

    def test_exact_partition(self, rng):
        g = Grid(16, 16.0)
        f = random_field(g, rng)
        low, high = spatial_split(f, 3.0)
        assert np.max(np.abs(low.values + high.values - f.values)) < 1e-15 * f.linf()
        r = g.x_mag
        assert np.max(np.abs(high.values[r <= 3.0])) == 0.0
        assert np.max(np.abs(low.values[r >= 6.0])) == 0.0

    def test_field_inside_cutoff_has_zero_far_piece(self):
        g = Grid(32, 16.0)
        # compactly supported in |x| <= 2 via the bump itself
        f = physical_field(g, radial_bump(g.x_mag / 1.0))
        low, high = spatial_split(f, 2.0)
        assert np.max(np.abs(high.values)) == 0.0

    def test_gaussian_tail_bound_against_quadrature(self):
        g = Grid(40, 20.0)
        f = physical_field(g, np.exp(-g.x_mag**2 / 2.0))
        low, high = spatial_split(f, 4.0)
        tail_sq = np.sum(np.abs(high.values) ** 2) * g.cell_volume
        oracle = 4 * np.pi * quad(lambda r: r**2 * np.exp(-(r**2)), 4.0, 12.0)[0]
        assert tail_sq <= oracle * (1 + 1e-6)

    def test_cutoff_exceeds_box(self, grid16, rng):
        f = random_field(grid16, rng)
        with pytest.raises(CutoffExceedsBoxError):
            spatial_split(f, grid16.length / 2.0)
        with pytest.raises(CutoffExceedsBoxError):
            spatial_split(f, 0.0)

    def test_requires_physical_space(self, grid16, rng):
        f = dft_forward(random_field(grid16, rng))
        with pytest.raises(ContractViolation):
            spatial_split(f, 2.0)
