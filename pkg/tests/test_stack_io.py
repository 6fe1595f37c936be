"""Image writers and capture-stack persistence round trips."""

import json

import numpy as np
import pytest

from cfpm.fpm import LedGeometry, simulate_stack
from cfpm.phantom import generate_phantom
from cfpm.stack_io import (
    load_image,
    load_stack,
    save_png8,
    save_png16,
    save_stack,
    save_tiff32,
)


def tiny_stack(seed=1):
    phantom = generate_phantom(seed, 64)
    geom = LedGeometry(3, 3, 4.0, 70.0)
    return simulate_stack(phantom.objects()[1], geom, 0.1, 0.515, 0.4, 16)


class TestImageFiles:
    def test_png8_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        img = rng.uniform(size=(20, 24, 3))
        path = tmp_path / "img.png"
        save_png8(img, path)
        back = load_image(path)
        assert back.shape == img.shape
        assert np.max(np.abs(back - img)) <= 0.5 / 255.0 + 1e-12

    def test_png16_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        img = rng.uniform(size=(20, 24))
        path = tmp_path / "img.png"
        save_png16(img, path)
        back = load_image(path)
        assert np.max(np.abs(back - img)) <= 0.5 / 65535.0 + 1e-12

    def test_tiff32_round_trip(self, tmp_path):
        rng = np.random.default_rng(2)
        img = rng.uniform(size=(20, 24)) * 3.0  # float frames may exceed [0,1]
        path = tmp_path / "img.tiff"
        save_tiff32(img, path)
        back = load_image(path)
        assert np.max(np.abs(back - img)) < 1e-6  # float32 storage

    def test_integer_saves_clip(self, tmp_path):
        img = np.array([[-0.5, 0.5], [1.5, 1.0]])
        path = tmp_path / "img.png"
        save_png16(img, path)
        back = load_image(path)
        assert back[0, 0] == 0.0
        assert back[1, 0] == 1.0

    def test_color_rejected_by_single_channel_writers(self, tmp_path):
        img = np.zeros((4, 4, 3))
        with pytest.raises(ValueError):
            save_png16(img, tmp_path / "a.png")
        with pytest.raises(ValueError):
            save_tiff32(img, tmp_path / "a.tiff")


class TestStackPersistence:
    @pytest.mark.parametrize("fmt,tol", [("png16", 1.0 / 65535.0), ("tiff32", 1e-6)])
    def test_round_trip(self, tmp_path, fmt, tol):
        stack = tiny_stack()
        save_stack(stack, tmp_path / "stk", fmt=fmt)
        back = load_stack(tmp_path / "stk")
        assert back.frames.shape == stack.frames.shape
        assert np.max(np.abs(back.frames - stack.frames)) <= tol
        assert back.scale == stack.scale
        assert back.na == stack.na
        assert back.wavelength_um == stack.wavelength_um
        assert back.hr_size == stack.hr_size
        assert np.array_equal(back.plan.led_rc, stack.plan.led_rc)
        assert np.allclose(back.plan.k, stack.plan.k, atol=1e-12)

    def test_manifest_contents(self, tmp_path):
        stack = tiny_stack()
        save_stack(stack, tmp_path / "stk")
        manifest = json.loads((tmp_path / "stk" / "manifest.json").read_text())
        for key in ("format", "n_frames", "frame_files", "lr_size", "hr_size",
                    "dx_um", "wavelength_um", "na", "scale", "geometry", "plan"):
            assert key in manifest
        assert manifest["n_frames"] == 9
        assert len(manifest["frame_files"]) == 9
        assert manifest["geometry"]["rows"] == 3
        assert len(manifest["plan"]["order_rc"]) == 9

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            save_stack(tiny_stack(), tmp_path / "stk", fmt="jpeg")

    def test_tampered_scan_order_rejected(self, tmp_path):
        stack = tiny_stack()
        save_stack(stack, tmp_path / "stk")
        path = tmp_path / "stk" / "manifest.json"
        manifest = json.loads(path.read_text())
        order = manifest["plan"]["order_rc"]
        order[0], order[1] = order[1], order[0]
        path.write_text(json.dumps(manifest))
        with pytest.raises(ValueError):
            load_stack(tmp_path / "stk")

    def test_reconstructable_after_round_trip(self, tmp_path):
        # persistence must preserve everything reconstruction needs
        from cfpm.fpm import reconstruct

        stack = tiny_stack()
        save_stack(stack, tmp_path / "stk", fmt="tiff32")
        back = load_stack(tmp_path / "stk")
        a = np.abs(reconstruct(stack, iters=2))
        b = np.abs(reconstruct(back, iters=2))
        assert np.max(np.abs(a - b)) < 1e-5
