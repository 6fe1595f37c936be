"""Synthetic stained-slide phantoms."""

import numpy as np
import pytest

from cfpm.phantom import PRESETS, generate_phantom


class TestPhantom:
    def test_deterministic_per_seed(self):
        a = generate_phantom(5, 64)
        b = generate_phantom(5, 64)
        assert np.array_equal(a.rgb, b.rgb)
        assert np.array_equal(a.phase, b.phase)

    def test_seeds_differ(self):
        a = generate_phantom(1, 64)
        b = generate_phantom(2, 64)
        differs = np.any(a.rgb != b.rgb, axis=-1)
        assert differs.mean() > 0.10

    def test_amplitudes_are_color_channels(self):
        phantom = generate_phantom(3, 64)
        for c in range(3):
            assert np.array_equal(phantom.amplitudes[c], phantom.rgb[..., c])

    def test_value_ranges(self):
        phantom = generate_phantom(4, 96)
        assert phantom.rgb.shape == (96, 96, 3)
        assert phantom.amplitudes.shape == (3, 96, 96)
        assert phantom.rgb.min() >= 0.0
        assert phantom.rgb.max() <= 1.0
        assert phantom.phase.min() >= 0.0
        assert phantom.phase.max() <= np.pi / 2 + 1e-12

    def test_objects_composition(self):
        phantom = generate_phantom(5, 64)
        obj = phantom.objects()
        assert obj.shape == (3, 64, 64)
        assert np.iscomplexobj(obj)
        assert np.allclose(np.abs(obj), phantom.amplitudes, atol=1e-12)
        assert np.array_equal(obj, phantom.amplitudes * np.exp(1j * phantom.phase)[None])

    def test_seed_recorded(self):
        assert generate_phantom(9, 64).seed == 9

    def test_has_dark_and_bright_structure(self):
        # nuclei must stand apart from the background for the brightness
        # statistics downstream to carry color information
        phantom = generate_phantom(6, 128)
        gray = phantom.rgb.mean(axis=-1)
        assert gray.min() < 0.5 < gray.max()
        assert gray.std() > 0.02

    def test_presets_differ(self):
        he = generate_phantom(1, 64, "he")
        sparse = generate_phantom(1, 64, "sparse")
        assert set(PRESETS) == {"he", "sparse"}
        assert not np.array_equal(he.rgb, sparse.rgb)

    def test_validation(self):
        with pytest.raises(ValueError):
            generate_phantom(1, 32)
        with pytest.raises(ValueError):
            generate_phantom(1, 64, "wash")
