"""Forward capture model, LED geometry, and spectrum-stitching recovery."""

import warnings

import numpy as np
import pytest

from cfpm.fpm import (
    IlluminationPlan,
    LedGeometry,
    _window_bounds,
    all_pass_pupil,
    ft2,
    ift2,
    led_wavevectors,
    make_pupil,
    overlap_ratio,
    reconstruct,
    simulate_capture,
    simulate_stack,
)
from cfpm.harness import bicubic_amplitude, rmse
from cfpm.phantom import generate_phantom

GEOM = LedGeometry(15, 15, 4.0, 70.0)


def small_stack(seed=2, size=128, lr=32, rows=9, wavelength=0.515, na=0.1):
    phantom = generate_phantom(seed, size)
    geom = LedGeometry(rows, rows, 4.0, 70.0)
    stack = simulate_stack(phantom.objects()[1], geom, na, wavelength, 0.4, lr)
    return stack, phantom


class TestTransforms:
    def test_round_trip_identity(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
        assert np.max(np.abs(ift2(ft2(x)) - x)) < 1e-12

    def test_energy_conservation(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(48, 48)) + 1j * rng.normal(size=(48, 48))
        e_space = float((np.abs(x) ** 2).sum())
        e_freq = float((np.abs(ft2(x)) ** 2).sum())
        assert abs(e_freq - e_space) / e_space < 1e-9


class TestGeometry:
    def test_center_led_on_axis(self):
        plan = led_wavevectors(GEOM, 0.515)
        assert np.allclose(plan.k[0], 0.0, atol=1e-15)
        assert tuple(plan.led_rc[0]) == (7, 7)

    def test_adjacent_led_angle(self):
        # one pitch over at 70 mm height: sin = 4 / sqrt(4^2 + 70^2)
        plan = led_wavevectors(GEOM, 0.515)
        sin_adj = 4.0 / np.sqrt(4.0 ** 2 + 70.0 ** 2)
        assert abs(sin_adj - 0.05705) < 5e-5
        k_adj = sin_adj * 2.0 * np.pi / 0.515
        mags = np.hypot(plan.k[1:5, 0], plan.k[1:5, 1])
        assert np.allclose(mags, k_adj, atol=1e-12)

    def test_corner_led_angle(self):
        plan = led_wavevectors(GEOM, 0.515)
        sin_corner = 28.0 / np.sqrt(28.0 ** 2 + 28.0 ** 2 + 70.0 ** 2)
        assert abs(sin_corner - 0.34815) < 5e-5
        expected = sin_corner * 2.0 * np.pi / 0.515
        assert np.allclose(np.abs(plan.k[-1]), expected, atol=1e-9)

    def test_plan_sorted_and_bounded(self):
        plan = led_wavevectors(GEOM, 0.6301)
        mags = np.hypot(plan.k[:, 0], plan.k[:, 1])
        assert (np.diff(mags) >= -1e-12).all()
        assert mags.max() < 2.0 * np.pi / 0.6301
        assert len(plan) == 225

    def test_offset_reproduces_adjacent_angle(self):
        geom = LedGeometry(1, 1, 4.0, 70.0, offset_mm=(4.0, 0.0))
        plan = led_wavevectors(geom, 0.515)
        sin_adj = 4.0 / np.sqrt(4.0 ** 2 + 70.0 ** 2)
        assert abs(plan.k[0, 0] - sin_adj * 2.0 * np.pi / 0.515) < 1e-12
        assert abs(plan.k[0, 1]) < 1e-15

    def test_validation(self):
        with pytest.raises(ValueError):
            LedGeometry(14, 15, 4.0, 70.0)
        with pytest.raises(ValueError):
            LedGeometry(15, 15, 0.0, 70.0)
        with pytest.raises(ValueError):
            LedGeometry(15, 15, 4.0, -1.0)
        with pytest.raises(ValueError):
            led_wavevectors(GEOM, 0.0)


class TestPupil:
    def test_cutoff_value(self):
        dk = 2.0 * np.pi / (256 * 0.4)
        pupil = make_pupil(0.1, 0.515, 64, dk)
        assert abs(pupil.cutoff_rad_um - 0.1 * 2.0 * np.pi / 0.515) < 1e-12
        assert abs(pupil.cutoff_rad_um - 1.2200) < 1e-3

    def test_cutoff_linear_in_na(self):
        dk = 0.05
        a = make_pupil(0.1, 0.515, 128, dk)
        b = make_pupil(0.2, 0.515, 128, dk)
        assert abs(b.cutoff_rad_um - 2.0 * a.cutoff_rad_um) < 1e-12

    def test_mask_is_binary_disk(self):
        pupil = make_pupil(0.1, 0.515, 64, 2.0 * np.pi / (256 * 0.4))
        assert set(np.unique(pupil.mask)) <= {0.0, 1.0}
        assert pupil.mask[32, 32] == 1.0

    def test_disk_area_fraction(self):
        dk = 0.02
        pupil = make_pupil(0.1, 0.515, 256, dk)
        frac = pupil.mask.mean()
        predicted = np.pi * pupil.cutoff_rad_um ** 2 / (256 * dk) ** 2
        assert abs(frac - predicted) / predicted < 0.02

    def test_validation(self):
        dk = 0.05
        with pytest.raises(ValueError):
            make_pupil(0.0, 0.515, 64, dk)
        with pytest.raises(ValueError):
            make_pupil(1.0, 0.515, 64, dk)
        with pytest.raises(ValueError):
            make_pupil(0.9, 0.515, 32, 0.01)  # cutoff beyond grid edge
        with pytest.raises(ValueError):
            make_pupil(0.1, 0.515, 1, dk)

    def test_all_pass(self):
        pupil = all_pass_pupil(32, 0.1)
        assert pupil.mask.min() == 1.0
        assert not np.isfinite(pupil.cutoff_rad_um)


class TestCapture:
    def test_uniform_object_images_to_squared_amplitude(self):
        amp = 0.8
        spectrum = ft2(np.full((64, 64), amp, dtype=complex))
        dk = 2.0 * np.pi / (64 * 0.4)
        for pupil in (all_pass_pupil(32, dk), make_pupil(0.1, 0.515, 32, dk)):
            intensity = simulate_capture(spectrum, pupil, np.zeros(2))
            assert np.allclose(intensity, amp ** 2, atol=1e-12)

    def test_dark_field_beyond_cutoff(self):
        amp = 0.8
        spectrum = ft2(np.full((64, 64), amp, dtype=complex))
        dk = 2.0 * np.pi / (64 * 0.4)
        pupil = make_pupil(0.1, 0.515, 32, dk)
        shift = int(np.ceil(pupil.cutoff_rad_um / dk)) + 3
        intensity = simulate_capture(spectrum, pupil, np.array([shift * dk, 0.0]))
        assert intensity.mean() < 1e-6 * amp ** 2

    def test_parseval_on_matched_grids(self):
        # with no downsampling, energy in the filtered spectrum equals
        # energy in the intensity image
        phantom = generate_phantom(3, 64)
        spectrum = ft2(phantom.objects()[0])
        pupil = make_pupil(0.1, 0.6301, 64, 2.0 * np.pi / (64 * 0.4))
        intensity = simulate_capture(spectrum, pupil, np.zeros(2))
        filtered = float((np.abs(spectrum * pupil.mask) ** 2).sum())
        assert abs(filtered - intensity.sum()) / filtered < 1e-9

    def test_off_grid_shift_raises(self):
        spectrum = ft2(np.ones((64, 64), dtype=complex))
        dk = 0.1
        pupil = make_pupil(0.1, 0.515, 32, dk)
        with pytest.raises(ValueError):
            simulate_capture(spectrum, pupil, np.array([64 * dk, 0.0]))

    def test_shape_validation(self):
        dk = 0.1
        pupil = make_pupil(0.1, 0.515, 32, dk)
        with pytest.raises(ValueError):
            simulate_capture(np.ones((64, 48), dtype=complex), pupil, np.zeros(2))
        with pytest.raises(ValueError):
            simulate_capture(np.ones((16, 16), dtype=complex), pupil, np.zeros(2))


class TestStack:
    def test_full_scan_frame_count(self):
        phantom = generate_phantom(1, 128)
        stack = simulate_stack(phantom.objects()[0], GEOM, 0.1, 0.6301, 0.4, 32)
        assert stack.frames.shape == (225, 32, 32)
        assert stack.frames.min() >= 0.0
        assert stack.frames.max() == 1.0  # peak-normalized exposure

    def test_on_axis_frame_matches_single_capture(self):
        stack, phantom = small_stack()
        pupil = stack.build_pupil()
        direct = simulate_capture(ft2(phantom.objects()[1]), pupil, np.zeros(2))
        assert np.allclose(stack.physical_frames()[0], direct, rtol=1e-12, atol=1e-15)

    def test_noiseless_determinism(self):
        a, _ = small_stack(seed=4)
        b, _ = small_stack(seed=4)
        assert np.array_equal(a.frames, b.frames)
        assert a.scale == b.scale

    def test_noise_seeded_determinism(self):
        phantom = generate_phantom(5, 64)
        geom = LedGeometry(3, 3, 4.0, 70.0)
        kwargs = dict(na=0.1, wavelength_um=0.515, dx_um=0.4, lr_size=16,
                      noise_sigma=0.01)
        a = simulate_stack(phantom.objects()[1], geom, seed=9, **kwargs)
        b = simulate_stack(phantom.objects()[1], geom, seed=9, **kwargs)
        c = simulate_stack(phantom.objects()[1], geom, seed=10, **kwargs)
        assert np.array_equal(a.frames, b.frames)
        assert not np.array_equal(a.frames, c.frames)

    def test_noise_clipped_at_zero(self):
        phantom = generate_phantom(5, 64)
        geom = LedGeometry(3, 3, 4.0, 70.0)
        stack = simulate_stack(phantom.objects()[1], geom, 0.1, 0.515, 0.4, 16,
                               noise_sigma=0.5, seed=1)
        assert stack.frames.min() >= 0.0

    def test_lr_larger_than_object_raises(self):
        phantom = generate_phantom(5, 64)
        with pytest.raises(ValueError):
            simulate_stack(phantom.objects()[0], GEOM, 0.1, 0.6301, 0.4, 128)


class TestReconstruct:
    def test_zero_iterations_returns_initialization(self):
        # with one on-axis LED and no aperture the initialization is just
        # the measured amplitude with zero phase
        phantom = generate_phantom(3, 64)
        geom = LedGeometry(1, 1, 4.0, 70.0)
        stack = simulate_stack(phantom.objects()[0], geom, None, 0.6301, 0.4, 64)
        field = reconstruct(stack, upsample=1, iters=0)
        assert np.max(np.abs(np.abs(field) - np.sqrt(stack.physical_frames()[0]))) < 1e-12
        assert np.max(np.abs(field.imag)) < 1e-12

    def test_negative_iterations_raise(self):
        stack, _ = small_stack()
        with pytest.raises(ValueError):
            reconstruct(stack, iters=-1)

    def test_mismatched_pupil_raises(self):
        stack, _ = small_stack()
        with pytest.raises(ValueError):
            reconstruct(stack, pupil=all_pass_pupil(16, stack.spectral_sampling()))

    def test_beats_interpolation_baseline(self):
        stack, phantom = small_stack(seed=6, rows=9)
        recon = np.abs(reconstruct(stack, iters=5))
        gt = phantom.amplitudes[1]
        assert rmse(recon, gt) < rmse(bicubic_amplitude(stack), gt)

    def test_residual_non_increasing_noiseless(self):
        stack, _ = small_stack(seed=7, rows=9)
        history = []
        reconstruct(stack, iters=3, history=history)
        assert len(history) == 3
        assert history[1] <= history[0] + 1e-9
        assert history[2] <= history[1] + 1e-9

    def test_determinism(self):
        stack, _ = small_stack(seed=8)
        a = reconstruct(stack, iters=2)
        b = reconstruct(stack, iters=2)
        assert np.array_equal(a, b)

    def test_spectrum_support_inside_pupil_union(self):
        stack, _ = small_stack(seed=2, rows=9)
        field = reconstruct(stack, iters=3)
        spectrum = ft2(field)
        n = stack.hr_size
        m = stack.lr_size
        pupil = stack.build_pupil()
        union = np.zeros((n, n), dtype=bool)
        for i in range(len(stack.plan)):
            top, left = _window_bounds(n, m, stack.plan.k[i], stack.spectral_sampling())
            union[top:top + m, left:left + m] |= pupil.support
        outside = float((np.abs(spectrum[~union]) ** 2).sum())
        assert outside < 1e-12

    def test_low_overlap_warns(self):
        phantom = generate_phantom(1, 64)
        geom = LedGeometry(1, 3, 11.35, 70.0)
        stack = simulate_stack(phantom.objects()[1], geom, 0.1, 0.515, 0.4, 32)
        with pytest.warns(UserWarning, match="overlap"):
            reconstruct(stack, iters=1)

    def test_healthy_overlap_does_not_warn(self):
        stack, _ = small_stack(seed=2, rows=9)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            reconstruct(stack, iters=1)
        assert not caught


class TestOverlap:
    def test_default_rig_value(self):
        plan = led_wavevectors(GEOM, 0.515)
        pupil = make_pupil(0.1, 0.515, 64, 2.0 * np.pi / (256 * 0.4))
        value = overlap_ratio(plan, pupil)
        assert abs(value - 0.64) <= 0.02
        assert abs(value - 0.6417969673258591) < 1e-9  # pinned regression value

    def test_coincident_disks(self):
        plan = IlluminationPlan(wavelength_um=0.515, k=np.zeros((2, 2)),
                                led_rc=np.array([[0, 0], [0, 1]]))
        pupil = make_pupil(0.1, 0.515, 64, 0.05)
        assert overlap_ratio(plan, pupil) == 1.0

    def test_separated_disks(self):
        plan = led_wavevectors(LedGeometry(1, 3, 20.0, 70.0), 0.515)
        pupil = make_pupil(0.1, 0.515, 64, 0.06)
        assert overlap_ratio(plan, pupil) == 0.0

    def test_single_entry_raises(self):
        plan = led_wavevectors(LedGeometry(1, 1, 4.0, 70.0), 0.515)
        pupil = make_pupil(0.1, 0.515, 64, 0.05)
        with pytest.raises(ValueError):
            overlap_ratio(plan, pupil)

    def test_all_pass_counts_as_full_overlap(self):
        plan = led_wavevectors(LedGeometry(1, 3, 20.0, 70.0), 0.515)
        assert overlap_ratio(plan, all_pass_pupil(64, 0.06)) == 1.0
