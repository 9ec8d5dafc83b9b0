"""Tests for the discrete Hankel transform."""

import numpy as np
import pytest
import scipy.special
from scipy.integrate import quad

from se2gp.hankel import (GridMismatchError, HankelTransform,
                          hankel_frequency_grid, hankel_transform_mode,
                          resample_bessel)

R_MAX = 6.0
COUNT = 48


def bandlimited_profile(ht: HankelTransform, seed: int) -> np.ndarray:
    """Random profile whose spectrum lives in the lowest third of the band."""
    rng = np.random.default_rng(seed)
    coeff = np.zeros(ht.count)
    coeff[: ht.count // 3] = rng.standard_normal(ht.count // 3)
    return ht.inverse(coeff)


class TestRoundTrips:
    def test_zero_profile_maps_to_zero(self):
        ht = HankelTransform(3, COUNT, R_MAX)
        zero = np.zeros(COUNT)
        assert not ht.forward(zero).any()
        assert not ht.inverse(zero).any()

    @pytest.mark.parametrize("order", range(-8, 9))
    def test_forward_inverse_roundtrip(self, order):
        ht = HankelTransform(order, COUNT, R_MAX)
        profile = bandlimited_profile(ht, 100 + order)
        back = ht.inverse(ht.forward(profile))
        err = np.abs(back - profile).max() / np.abs(profile).max()
        assert err < 1e-6

    def test_inverse_forward_roundtrip(self):
        ht = HankelTransform(2, COUNT, R_MAX)
        rng = np.random.default_rng(9)
        spectrum = np.zeros(COUNT)
        spectrum[: COUNT // 3] = rng.standard_normal(COUNT // 3)
        back = ht.forward(ht.inverse(spectrum))
        assert np.abs(back - spectrum).max() / np.abs(spectrum).max() < 1e-6

    def test_complex_profiles_supported(self):
        ht = HankelTransform(1, COUNT, R_MAX)
        profile = bandlimited_profile(ht, 1) + 1j * bandlimited_profile(ht, 2)
        back = ht.inverse(ht.forward(profile))
        assert np.abs(back - profile).max() / np.abs(profile).max() < 1e-6


class TestQuadratureOracle:
    def test_gaussian_bump_matches_direct_integration(self):
        ht = HankelTransform(0, 64, R_MAX)
        profile = np.exp(-ht.radii ** 2)
        transformed = ht.forward(profile)
        for i in range(0, 20, 3):
            p = ht.frequency_grid.values[i]
            reference, _ = quad(
                lambda r: np.exp(-r * r) * scipy.special.jv(0, p * r) * r,
                0.0, R_MAX, limit=200)
            assert abs(transformed[i] - reference) < 1e-4

    def test_order_two_matches_direct_integration(self):
        ht = HankelTransform(2, 64, R_MAX)
        profile = ht.radii ** 2 * np.exp(-ht.radii ** 2)
        transformed = ht.forward(profile)
        for i in range(0, 12, 4):
            p = ht.frequency_grid.values[i]
            reference, _ = quad(
                lambda r: r ** 2 * np.exp(-r * r) * scipy.special.jv(2, p * r) * r,
                0.0, R_MAX, limit=200)
            assert abs(transformed[i] - reference) < 1e-4


class TestModeApi:
    def test_identified_by_frequency_grid(self):
        grid = hankel_frequency_grid(2, COUNT, R_MAX)
        ht = HankelTransform(2, COUNT, R_MAX)
        profile = bandlimited_profile(ht, 4)
        fwd = hankel_transform_mode(profile, 2, "forward", grid)
        assert np.allclose(fwd, ht.forward(profile), rtol=0, atol=1e-12)
        back = hankel_transform_mode(fwd, 2, "inverse", grid)
        assert np.abs(back - profile).max() / np.abs(profile).max() < 1e-6

    def test_wrong_order_grid_rejected(self):
        grid = hankel_frequency_grid(2, COUNT, R_MAX)
        with pytest.raises(GridMismatchError):
            hankel_transform_mode(np.zeros(COUNT), 3, "forward", grid)

    def test_bad_direction_rejected(self):
        grid = hankel_frequency_grid(0, COUNT, R_MAX)
        with pytest.raises(ValueError):
            hankel_transform_mode(np.zeros(COUNT), 0, "sideways", grid)

    def test_negative_order_consistent_with_bessel_parity(self):
        ht_pos = HankelTransform(3, COUNT, R_MAX)
        ht_neg = HankelTransform(-3, COUNT, R_MAX)
        profile = bandlimited_profile(ht_pos, 6)
        assert np.allclose(ht_neg.forward(profile), -ht_pos.forward(profile))


class TestResample:
    def test_reproduces_samples_at_native_radii(self):
        ht = HankelTransform(0, COUNT, R_MAX)
        profile = bandlimited_profile(ht, 8)
        again = resample_bessel(profile, 0, R_MAX, ht.radii)
        assert np.abs(again - profile).max() < 1e-8 * np.abs(profile).max()

    def test_interpolates_smooth_profile(self):
        ht = HankelTransform(1, 64, R_MAX)
        profile = ht.radii * np.exp(-ht.radii ** 2)
        mid = 0.5 * (ht.radii[:-1] + ht.radii[1:])
        interp = resample_bessel(profile, 1, R_MAX, mid)
        exact = mid * np.exp(-mid ** 2)
        assert np.abs(interp - exact).max() < 1e-6
