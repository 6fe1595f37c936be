"""Procedural stained-slide phantoms.

Each phantom is a synthetic brightfield view of stained tissue: dark
blue-purple nuclei over a bright pink fibrous background, two hue families
like a hematoxylin/eosin slide. The ground-truth color doubles as the
per-wavelength object amplitudes (channel c is the amplitude at wavelength
c), and all three channels share one smooth synthetic phase relief.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

__all__ = ["Phantom", "generate_phantom", "PRESETS"]

PRESETS = ("he", "sparse")


@dataclass(frozen=True)
class Phantom:
    """Ground truth color, per-channel amplitudes, shared phase, seed."""

    rgb: np.ndarray
    amplitudes: np.ndarray
    phase: np.ndarray
    seed: int

    def objects(self) -> np.ndarray:
        """Complex per-wavelength transmission functions, shape (3, N, N)."""
        return self.amplitudes * np.exp(1j * self.phase)[None, :, :]


def _smooth_noise(rng: np.random.Generator, n: int, sigma: float) -> np.ndarray:
    """Band-limited noise normalized to [0, 1]."""
    field = ndimage.gaussian_filter(rng.standard_normal((n, n)), sigma, mode="wrap")
    lo = field.min()
    hi = field.max()
    return (field - lo) / (hi - lo) if hi > lo else np.zeros((n, n))


def _soft_disk(shape: tuple[int, int], cy: float, cx: float, ry: float, rx: float,
               theta: float, edge: float) -> np.ndarray:
    """Soft-edged ellipse mask in [0, 1]."""
    yy, xx = np.ogrid[: shape[0], : shape[1]]
    y = yy - cy
    x = xx - cx
    ct, st = np.cos(theta), np.sin(theta)
    u = (x * ct + y * st) / rx
    v = (-x * st + y * ct) / ry
    dist = np.sqrt(u * u + v * v)
    arg = np.clip((dist - 1.0) / edge, -60.0, 60.0)
    return 1.0 / (1.0 + np.exp(arg))


def generate_phantom(seed: int, size: int = 256, preset: str = "he") -> Phantom:
    """Deterministic phantom for the given seed.

    size is the HR grid edge (minimum 64). Presets: "he" is the dense
    default; "sparse" drops the cytoplasm patches and halves the nucleus
    count.
    """
    if size < 64:
        raise ValueError("phantom size must be at least 64")
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; expected one of {PRESETS}")
    rng = np.random.default_rng(seed)
    n = size

    # bright eosin-like background with gentle shading and fine grain
    shade = 0.90 + 0.10 * _smooth_noise(rng, n, n / 18.0)
    grain = 0.95 + 0.05 * _smooth_noise(rng, n, 1.2)
    base = np.array([0.93, 0.80, 0.85])
    img = base[None, None, :] * (shade * grain)[..., None]

    # fibrous strands absorb a little more green, reading as deeper pink
    fibers = _smooth_noise(rng, n, 2.0) * _smooth_noise(rng, n, n / 24.0)
    fiber_tint = np.array([0.06, 0.10, 0.07])
    img *= 1.0 - fibers[..., None] * fiber_tint[None, None, :]

    # broad cytoplasm patches, midtone rose
    if preset == "he":
        n_patches = int(rng.integers(5, 9))
        for _ in range(n_patches):
            cy, cx = rng.uniform(0, n, 2)
            ry = rng.uniform(n / 10, n / 5)
            rx = ry * rng.uniform(0.6, 1.6)
            mask = _soft_disk((n, n), cy, cx, ry, rx, rng.uniform(0, np.pi), 0.12)
            color = np.array([0.88, 0.62, 0.70]) + rng.uniform(-0.04, 0.04, 3)
            alpha = 0.45 * mask[..., None]
            img = img * (1.0 - alpha) + color[None, None, :] * alpha

    # nuclei: dark blue-purple blobs with smooth chromatin texture; one hue
    # family, so darkness predicts blueness (what the color transfer relies on)
    lo_count, hi_count = (12, 20) if preset == "he" else (6, 12)
    n_nuclei = int(rng.integers(lo_count, hi_count + 1))
    chromatin = _smooth_noise(rng, n, 2.5)
    nucleus_color = np.array([0.30, 0.20, 0.50])
    for _ in range(n_nuclei):
        cy, cx = rng.uniform(0, n, 2)
        ry = rng.uniform(n / 22, n / 10)
        rx = ry * rng.uniform(0.75, 1.3)
        mask = _soft_disk((n, n), cy, cx, ry, rx, rng.uniform(0, np.pi), 0.06)
        texture = 1.0 - 0.12 * chromatin
        alpha = mask[..., None]
        img = img * (1.0 - alpha) + (nucleus_color[None, None, :] * texture[..., None]) * alpha

    rgb = np.clip(img, 0.02, 0.99)
    amplitudes = np.ascontiguousarray(np.moveaxis(rgb, -1, 0))

    relief = ndimage.gaussian_filter(rng.standard_normal((n, n)), n / 8.0, mode="wrap")
    lo = relief.min()
    hi = relief.max()
    phase = (relief - lo) / (hi - lo) * (np.pi / 2.0) if hi > lo else np.zeros((n, n))

    return Phantom(rgb=rgb, amplitudes=amplitudes, phase=phase, seed=seed)
