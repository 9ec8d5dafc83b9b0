"""Tests for angular-mode fields, group actions and serialization."""

import numpy as np
import pytest
import scipy.special

from se2gp.fields import (BandlimitError, GroupElement, ModeField,
                          PolarGridField, RadialGrid, RadialProfile,
                          angular_decompose, angular_reconstruct,
                          load_mode_field, mode_field_from_record,
                          mode_field_to_record, random_mode_field,
                          rotate_mode_field, rotate_polar_field,
                          save_mode_field, synth_field, translate_mode_field,
                          translate_polar_field)

GRID = RadialGrid.linear(6, 3.0)


class TestRadialGrid:
    def test_linear_grid_is_positive_increasing(self):
        grid = RadialGrid.linear(5, 2.0)
        assert grid.count == 5
        assert grid.values[0] > 0
        assert np.all(np.diff(grid.values) > 0)
        assert grid.p_max == 2.0

    @pytest.mark.parametrize("values", [
        [],
        [0.0, 1.0],
        [1.0, 1.0],
        [2.0, 1.0],
        [1.0, np.inf],
    ])
    def test_bad_grids_rejected(self, values):
        with pytest.raises(ValueError):
            RadialGrid(np.array(values, dtype=float))

    def test_equality_is_by_values(self):
        assert RadialGrid.linear(4, 1.0) == RadialGrid.linear(4, 1.0)
        assert RadialGrid.linear(4, 1.0) != RadialGrid.linear(4, 2.0)


class TestGroupElement:
    def test_angle_normalized(self):
        g = GroupElement(theta=2.0 * np.pi + 0.5, t=(1, 2))
        assert abs(g.theta - 0.5) < 1e-12
        assert g.t == (1.0, 2.0)


class TestModeField:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            ModeField(0, GRID, 0, 1, np.zeros((1, 3, GRID.count)))
        with pytest.raises(ValueError):
            ModeField(0, GRID, 1, 0, np.zeros((1, 1, GRID.count)))

    def test_nonfinite_rejected(self):
        data = np.zeros((1, 1, GRID.count), dtype=complex)
        data[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            ModeField(0, GRID, 0, 0, data)

    def test_off_window_modes_read_as_zero(self):
        f = synth_field([(0, 1, RadialProfile.constant(2.0))], GRID)
        assert np.all(f.mode_values(5) == 0)

    def test_window_widening_and_narrowing(self):
        f = synth_field([(0, 0, RadialProfile.constant(1.0))], GRID,
                        window=(0, 1))
        wide = f.with_window(-2, 3)
        assert wide.window == (-2, 3)
        assert np.array_equal(wide.mode_values(0), f.mode_values(0))
        narrowed = wide.with_window(0, 0)
        assert narrowed.window == (0, 0)
        with pytest.raises(ValueError):
            wide.with_window(1, 3)  # would drop the populated mode


class TestAngularTransforms:
    def test_constant_field_is_pure_mode_zero(self):
        data = np.full((1, GRID.count, 12), 2.5 - 1.0j)
        f = angular_decompose(PolarGridField(GRID, data), -3, 3)
        assert np.allclose(f.mode_values(0), 2.5 - 1.0j, atol=1e-14)
        for m in (-3, -2, -1, 1, 2, 3):
            assert np.abs(f.mode_values(m)).max() < 1e-14

    def test_single_harmonic_hits_its_mode(self):
        a = 16
        psi = 2.0 * np.pi * np.arange(a) / a
        data = np.exp(-2j * psi)[None, None, :] * np.ones((1, GRID.count, 1))
        f = angular_decompose(PolarGridField(GRID, data), -4, 4)
        assert np.abs(f.mode_values(2) - 1.0).max() < 1e-12
        for m in (-4, -3, -2, -1, 0, 1, 3, 4):
            assert np.abs(f.mode_values(m)).max() < 1e-12

    def test_decompose_reconstruct_roundtrip(self):
        rng = np.random.default_rng(42)
        f = random_mode_field(GRID, (-5, 6), 2, rng)
        back = angular_decompose(angular_reconstruct(f, 16), -5, 6)
        scale = np.abs(f.data).max()
        assert np.abs(back.data - f.data).max() / scale < 1e-12

    def test_reconstruct_decompose_roundtrip_on_grid(self):
        rng = np.random.default_rng(7)
        f = random_mode_field(GRID, (-3, 3), 1, rng)
        polar = angular_reconstruct(f, 12)
        again = angular_reconstruct(angular_decompose(polar, -3, 3), 12)
        assert np.abs(again.data - polar.data).max() < 1e-12 * np.abs(polar.data).max()

    def test_reconstruct_single_mode_examples(self):
        one = synth_field([(0, 0, RadialProfile.constant(1.0))], GRID)
        assert np.allclose(angular_reconstruct(one, 8).data, 1.0)
        f = synth_field([(0, 1, RadialProfile.constant(1.0))], GRID,
                        window=(1, 1))
        polar = angular_reconstruct(f, 8)
        psi = 2.0 * np.pi * np.arange(8) / 8
        assert np.abs(polar.data[0] - np.exp(-1j * psi)[None, :]).max() < 1e-14

    def test_window_wider_than_angles_rejected(self):
        data = np.zeros((1, GRID.count, 4), dtype=complex)
        with pytest.raises(BandlimitError):
            angular_decompose(PolarGridField(GRID, data), -3, 3)

    def test_reconstruct_angle_count_too_small_rejected(self):
        f = synth_field([(0, 3, RadialProfile.constant(1.0))], GRID,
                        window=(-3, 3))
        with pytest.raises(BandlimitError):
            angular_reconstruct(f, 7)


class TestRotation:
    def test_zero_angle_is_exact_identity(self):
        rng = np.random.default_rng(3)
        f = random_mode_field(GRID, (-2, 2), 2, rng, rep_index=1)
        assert np.array_equal(rotate_mode_field(f, 0.0).data, f.data)

    def test_quarter_turn_on_mode_one(self):
        f = synth_field([(0, 1, RadialProfile.constant(1.0))], GRID,
                        window=(1, 1))
        rotated = rotate_mode_field(f, np.pi / 2)
        assert np.abs(rotated.mode_values(1) - 1j).max() < 1e-15

    def test_group_law(self):
        rng = np.random.default_rng(11)
        f = random_mode_field(GRID, (-4, 4), 2, rng, rep_index=2)
        t1, t2 = 0.7, 1.9
        once = rotate_mode_field(f, t1 + t2)
        twice = rotate_mode_field(rotate_mode_field(f, t2), t1)
        assert np.abs(once.data - twice.data).max() < 1e-14 * np.abs(f.data).max()

    def test_rotation_is_isometry(self):
        rng = np.random.default_rng(13)
        f = random_mode_field(GRID, (-4, 4), 3, rng, rep_index=1)
        rotated = rotate_mode_field(f, 1.234)
        ratio = np.abs(rotated.data) / np.abs(f.data)
        assert np.abs(ratio - 1.0).max() < 1e-14

    def test_rep_index_enters_rotation_phase(self):
        f = synth_field([(0, 0, RadialProfile.constant(1.0))], GRID,
                        rep_index=3)
        rotated = rotate_mode_field(f, np.pi / 3)
        assert np.abs(rotated.mode_values(0) - np.exp(1j * np.pi)).max() < 1e-14

    def test_matches_exact_polar_grid_rotation(self):
        rng = np.random.default_rng(17)
        k = 2
        f = random_mode_field(GRID, (-3, 3), 2, rng, rep_index=k)
        a = 16
        polar = angular_reconstruct(f, a)
        shift = 5
        rotated_polar = rotate_polar_field(polar, shift, rep_index=k)
        via_modes = rotate_mode_field(f, 2.0 * np.pi * shift / a)
        back = angular_decompose(rotated_polar, -3, 3, rep_index=k)
        assert np.abs(back.data - via_modes.data).max() < 1e-12 * np.abs(f.data).max()


class TestTranslation:
    def test_zero_translation_is_identity(self):
        rng = np.random.default_rng(5)
        f = random_mode_field(GRID, (-2, 2), 1, rng)
        result = translate_mode_field(f, (0.0, 0.0), 4)
        assert result.field is f
        assert result.truncation_residual == 0.0

    def test_inverse_roundtrip_within_margin_rule(self):
        grid = RadialGrid.linear(8, 4.0)
        f = synth_field([(0, 0, RadialProfile.constant(1.0))], grid)
        t = (0.5, -0.45)
        margin = int(np.ceil(3.0 * grid.p_max * np.hypot(*t)))
        out = translate_mode_field(f, t, margin)
        back = translate_mode_field(out.field, (-t[0], -t[1]), margin)
        recovered = back.field.mode_values(0)
        assert np.abs(recovered - 1.0).max() < 1e-8

    def test_mode_spread_matches_bessel_weights(self):
        f = synth_field([(0, 0, RadialProfile.constant(1.0))], GRID)
        t = (0.4, 0.3)
        out = translate_mode_field(f, t, 10).field
        dist = GRID.values * np.hypot(*t)
        for m in range(-10, 11):
            expected = np.abs(scipy.special.jv(m, dist))
            assert np.abs(np.abs(out.mode_values(m)[0]) - expected).max() < 1e-12

    def test_norm_preserved_within_reported_residual(self):
        rng = np.random.default_rng(23)
        f = random_mode_field(GRID, (-2, 2), 2, rng)
        out = translate_mode_field(f, (0.3, 0.6), 8)
        assert abs(out.field.norm() - f.norm()) <= out.truncation_residual + 1e-10

    def test_translation_index_advances_rep(self):
        f = synth_field([(0, 0, RadialProfile.constant(1.0))], GRID,
                        rep_index=4)
        out = translate_mode_field(f, (0.1, 0.0), 4)
        assert out.field.rep_index == 4

    def test_negative_margin_rejected(self):
        f = synth_field([(0, 0, RadialProfile.constant(1.0))], GRID)
        with pytest.raises(ValueError):
            translate_mode_field(f, (0.1, 0.1), -1)

    def test_polar_phase_is_unit_modulus(self):
        rng = np.random.default_rng(29)
        f = random_mode_field(GRID, (-2, 2), 1, rng)
        polar = angular_reconstruct(f, 12)
        shifted = translate_polar_field(polar, (0.7, -0.2))
        assert np.abs(np.abs(shifted.data) - np.abs(polar.data)).max() < 1e-14


class TestSynthField:
    def test_empty_spec_is_zero_field(self):
        f = synth_field([], GRID, window=(-1, 1), channels=2)
        assert f.window == (-1, 1)
        assert f.channels == 2
        assert not f.data.any()

    def test_single_entry_constant(self):
        f = synth_field([(1, 0, RadialProfile.constant(1.0))], GRID)
        assert f.channels == 2
        assert np.all(f.mode_values(0)[1] == 1.0)
        assert np.all(f.mode_values(0)[0] == 0.0)

    def test_overlapping_entries_sum(self):
        prof = RadialProfile.constant(1.5)
        f = synth_field([(0, 1, prof), (0, 1, prof)], GRID, window=(0, 2))
        assert np.all(f.mode_values(1) == 3.0)

    def test_out_of_window_mode_rejected(self):
        with pytest.raises(ValueError):
            synth_field([(0, 4, RadialProfile.constant(1.0))], GRID,
                        window=(0, 2))

    def test_profile_shapes(self):
        r = np.array([0.0, 1.0, 2.0])
        gauss = RadialProfile.gaussian(2.0, 1.0, 0.5).evaluate(r)
        assert abs(gauss[1] - 2.0) < 1e-14
        poly = RadialProfile.polydecay(1.0, 2.0).evaluate(r)
        assert abs(poly[0] - 1.0) < 1e-14
        assert abs(poly[2] - 0.2) < 1e-14


class TestSerialization:
    def test_bit_exact_roundtrip(self, tmp_path):
        rng = np.random.default_rng(31)
        f = random_mode_field(GRID, (-3, 5), 3, rng, rep_index=-2)
        path = tmp_path / "field.json"
        save_mode_field(f, path)
        g = load_mode_field(path)
        assert g.rep_index == f.rep_index
        assert g.window == f.window
        assert g.grid == f.grid
        assert g.data.tobytes() == f.data.tobytes()

    def test_record_order_is_row_major_pairs(self):
        f = synth_field([(0, 1, RadialProfile.constant(1.0 + 2.0j))], GRID,
                        window=(0, 1))
        record = mode_field_to_record(f)
        # channel 0, mode 0 comes first: all zeros, then mode 1 values
        assert record["data"][0] == [0.0, 0.0]
        assert record["data"][GRID.count] == [1.0, 2.0]

    def test_bad_record_rejected(self):
        with pytest.raises(ValueError):
            mode_field_from_record({"kind": "something_else"})
        record = mode_field_to_record(
            synth_field([(0, 0, RadialProfile.constant(1.0))], GRID))
        record["data"] = record["data"][:-1]
        with pytest.raises(ValueError):
            mode_field_from_record(record)
