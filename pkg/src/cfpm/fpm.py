"""Fourier-ptychographic forward model and iterative reconstruction.

Conventions used throughout:
  - sample-space arrays are square (N, N) with pixel pitch dx_um (µm)
  - spectra live on a centered grid (fftshifted), sampled at
    dk = 2*pi / (N * dx_um) rad/µm per pixel
  - transforms are unitary, so energy is preserved between planes
  - an illumination wavevector k_i selects the sub-spectrum window centered
    at -k_i, the O(k - k_i) convention; simulator and reconstructor share
    the same rounding of k_i to whole grid pixels
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft

__all__ = [
    "LedGeometry",
    "IlluminationPlan",
    "Pupil",
    "CaptureStack",
    "ft2",
    "ift2",
    "led_wavevectors",
    "make_pupil",
    "all_pass_pupil",
    "simulate_capture",
    "simulate_stack",
    "reconstruct",
    "overlap_ratio",
]


def ft2(x: np.ndarray) -> np.ndarray:
    """Centered unitary 2D Fourier transform."""
    return _fft.fftshift(_fft.fft2(_fft.ifftshift(x), norm="ortho"))


def ift2(x: np.ndarray) -> np.ndarray:
    """Centered unitary 2D inverse Fourier transform."""
    return _fft.fftshift(_fft.ifft2(_fft.ifftshift(x), norm="ortho"))


@dataclass(frozen=True)
class LedGeometry:
    """Rectangular LED array a fixed height above the sample."""

    rows: int
    cols: int
    pitch_mm: float
    height_mm: float
    offset_mm: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1 or self.rows % 2 == 0 or self.cols % 2 == 0:
            raise ValueError("rows and cols must be odd so a center LED exists")
        if self.pitch_mm <= 0:
            raise ValueError("pitch must be positive")
        if self.height_mm <= 0:
            raise ValueError("height must be positive")


@dataclass(frozen=True)
class IlluminationPlan:
    """Scan order of LEDs with their illumination wavevectors.

    k has one (kx, ky) row per LED in rad/µm; led_rc holds the matching
    (row, col) array indices. Entries are sorted center-outward by |k|,
    ties broken by (row, col), so entry 0 is the on-axis LED.
    """

    wavelength_um: float
    k: np.ndarray
    led_rc: np.ndarray

    def __len__(self) -> int:
        return self.k.shape[0]


def led_wavevectors(geom: LedGeometry, wavelength_um: float) -> IlluminationPlan:
    """Illumination wavevectors for every LED, in scan order.

    An LED displaced laterally by (dx, dy) at height h contributes a plane
    wave with lateral wavevector (2*pi/lambda) * (dx, dy) / sqrt(dx^2 + dy^2 + h^2).
    """
    if wavelength_um <= 0:
        raise ValueError("wavelength must be positive")
    rr, cc = np.meshgrid(np.arange(geom.rows), np.arange(geom.cols), indexing="ij")
    rr = rr.ravel()
    cc = cc.ravel()
    dx = (cc - (geom.cols - 1) / 2.0) * geom.pitch_mm + geom.offset_mm[0]
    dy = (rr - (geom.rows - 1) / 2.0) * geom.pitch_mm + geom.offset_mm[1]
    rho = np.sqrt(dx * dx + dy * dy + geom.height_mm * geom.height_mm)
    k0 = 2.0 * np.pi / wavelength_um
    kx = k0 * dx / rho
    ky = k0 * dy / rho
    # low spatial frequencies first; deterministic tie-break on (row, col)
    order = np.lexsort((cc, rr, np.hypot(kx, ky)))
    k = np.column_stack([kx, ky])[order]
    led_rc = np.column_stack([rr, cc])[order]
    return IlluminationPlan(wavelength_um=wavelength_um, k=k, led_rc=led_rc)


@dataclass(frozen=True)
class Pupil:
    """Binary low-pass aperture on the centered frequency grid."""

    mask: np.ndarray
    cutoff_rad_um: float
    dk_rad_um: float
    na: float | None = None
    wavelength_um: float | None = None

    @property
    def support(self) -> np.ndarray:
        return self.mask > 0.5


def make_pupil(na: float, wavelength_um: float, size: int, dk_rad_um: float) -> Pupil:
    """Disk pupil of radius NA * 2*pi/lambda on a size x size grid."""
    if not 0.0 < na < 1.0:
        raise ValueError("NA must lie in (0, 1)")
    if wavelength_um <= 0 or dk_rad_um <= 0 or size < 2:
        raise ValueError("invalid pupil grid")
    cutoff = na * 2.0 * np.pi / wavelength_um
    if cutoff > dk_rad_um * (size // 2):
        raise ValueError("pupil cutoff exceeds the frequency grid Nyquist radius")
    idx = (np.arange(size) - size // 2) * dk_rad_um
    ky, kx = np.meshgrid(idx, idx, indexing="ij")
    mask = (kx * kx + ky * ky <= cutoff * cutoff).astype(np.float64)
    return Pupil(mask=mask, cutoff_rad_um=cutoff, dk_rad_um=dk_rad_um,
                 na=na, wavelength_um=wavelength_um)


def all_pass_pupil(size: int, dk_rad_um: float) -> Pupil:
    """Aperture-free pupil (every frequency passes); for sanity runs."""
    return Pupil(mask=np.ones((size, size)), cutoff_rad_um=np.inf,
                 dk_rad_um=dk_rad_um, na=None, wavelength_um=None)


def _window_bounds(n: int, m: int, k_i: np.ndarray, dk: float) -> tuple[int, int]:
    """Top-left corner of the m x m sub-spectrum window centered at -k_i."""
    sx = int(np.rint(-k_i[0] / dk))
    sy = int(np.rint(-k_i[1] / dk))
    top = n // 2 + sy - m // 2
    left = n // 2 + sx - m // 2
    if top < 0 or left < 0 or top + m > n or left + m > n:
        raise ValueError("illumination shift pushes the pupil window off the spectrum grid")
    return top, left


def simulate_capture(obj_spectrum: np.ndarray, pupil: Pupil, k_i: np.ndarray) -> np.ndarray:
    """One low-resolution intensity frame for illumination wavevector k_i.

    Crops the pupil-sized window of the object spectrum at -k_i, applies the
    pupil, and returns the squared magnitude of the inverse transform. The
    m/n scale keeps amplitude values comparable across grid sizes: a uniform
    object of amplitude A images to intensity A**2 under an all-pass pupil.
    """
    n = obj_spectrum.shape[0]
    m = pupil.mask.shape[0]
    if obj_spectrum.shape != (n, n) or m > n:
        raise ValueError("object spectrum must be square and at least pupil-sized")
    top, left = _window_bounds(n, m, np.asarray(k_i, dtype=np.float64), pupil.dk_rad_um)
    sub = obj_spectrum[top:top + m, left:left + m] * pupil.mask * (m / n)
    field = ift2(sub)
    return np.abs(field) ** 2


@dataclass
class CaptureStack:
    """Stack of intensity frames aligned with an illumination plan.

    frames are exposure-normalized to [0,1]; multiply by scale to recover
    the simulated physical intensity.
    """

    frames: np.ndarray
    scale: float
    plan: IlluminationPlan
    geometry: LedGeometry
    na: float | None
    wavelength_um: float
    dx_um: float
    hr_size: int
    noise_sigma: float = 0.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.frames.ndim != 3 or self.frames.shape[0] != len(self.plan):
            raise ValueError("frame count must match the illumination plan")
        if self.frames.min() < 0:
            raise ValueError("intensities must be nonnegative")

    @property
    def lr_size(self) -> int:
        return self.frames.shape[1]

    def physical_frames(self) -> np.ndarray:
        return self.frames * self.scale

    def spectral_sampling(self) -> float:
        return 2.0 * np.pi / (self.hr_size * self.dx_um)

    def build_pupil(self) -> Pupil:
        dk = self.spectral_sampling()
        if self.na is None:
            return all_pass_pupil(self.lr_size, dk)
        return make_pupil(self.na, self.wavelength_um, self.lr_size, dk)


def simulate_stack(obj: np.ndarray, geom: LedGeometry, na: float | None,
                   wavelength_um: float, dx_um: float, lr_size: int,
                   noise_sigma: float = 0.0, seed: int | None = None) -> CaptureStack:
    """Simulate the full LED scan of one complex object at one wavelength.

    obj is the (N, N) sample-plane complex transmission; frames come out
    lr_size x lr_size. Optional additive Gaussian intensity noise, clipped
    at zero, with all randomness drawn from the given seed.
    """
    n = obj.shape[0]
    if obj.shape != (n, n):
        raise ValueError("object must be square")
    if lr_size > n:
        raise ValueError("LR size cannot exceed the object grid")
    dk = 2.0 * np.pi / (n * dx_um)
    plan = led_wavevectors(geom, wavelength_um)
    pupil = all_pass_pupil(lr_size, dk) if na is None else make_pupil(na, wavelength_um, lr_size, dk)
    spectrum = ft2(obj)
    frames = np.empty((len(plan), lr_size, lr_size))
    for i in range(len(plan)):
        frames[i] = simulate_capture(spectrum, pupil, plan.k[i])
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        frames = np.maximum(frames + rng.normal(0.0, noise_sigma, frames.shape), 0.0)
    peak = float(frames.max())
    scale = peak if peak > 0 else 1.0
    return CaptureStack(frames=frames / scale, scale=scale, plan=plan, geometry=geom,
                        na=na, wavelength_um=wavelength_um, dx_um=dx_um, hr_size=n,
                        noise_sigma=noise_sigma, seed=seed)


def _upsample_amplitude(amp: np.ndarray, n: int) -> np.ndarray:
    """Zero-pad the spectrum of a real amplitude image up to n x n."""
    m = amp.shape[0]
    small = ft2(amp)
    padded = np.zeros((n, n), dtype=complex)
    top = n // 2 - m // 2
    padded[top:top + m, top:top + m] = small
    return ift2(padded * (n / m))


def reconstruct(stack: CaptureStack, upsample: int | None = None, iters: int = 10,
                pupil: Pupil | None = None, history: list | None = None) -> np.ndarray:
    """Alternating-projection spectrum stitching.

    Starts from the upsampled on-axis amplitude with zero phase, then for
    every LED in scan order replaces the modulus of the modeled LR field
    with the measured sqrt-intensity and writes the corrected sub-spectrum
    back inside the pupil support. Returns the (N, N) complex sample-plane
    field. If history is a list, the per-sweep data-fidelity residual
    sum_i ||sqrt(I_i) - |model_i|||^2 (evaluated before each update) is
    appended once per iteration.
    """
    if iters < 0:
        raise ValueError("iteration count must be nonnegative")
    m = stack.lr_size
    if upsample is None:
        if stack.hr_size % m:
            raise ValueError("stack HR size is not a multiple of the frame size")
        upsample = stack.hr_size // m
    if upsample < 1:
        raise ValueError("upsample ratio must be >= 1")
    n = m * upsample
    dk = stack.spectral_sampling()
    if pupil is None:
        pupil = stack.build_pupil()
    if pupil.mask.shape[0] != m:
        raise ValueError("pupil grid does not match the frame size")
    plan = stack.plan
    if len(plan) >= 2 and np.isfinite(pupil.cutoff_rad_um):
        ratio = overlap_ratio(plan, pupil)
        if ratio < 0.35:
            warnings.warn(f"pupil overlap ratio {ratio:.2f} is below 0.35; "
                          "reconstruction may not converge", stacklevel=2)

    sqrt_i = np.sqrt(stack.physical_frames())
    spectrum = ft2(_upsample_amplitude(sqrt_i[0], n))
    if iters == 0:
        return ift2(spectrum)

    support = pupil.support
    mask = pupil.mask
    bounds = [_window_bounds(n, m, plan.k[i], dk) for i in range(len(plan))]
    down = m / n
    for _ in range(iters):
        resid = 0.0
        for i in range(len(plan)):
            top, left = bounds[i]
            window = spectrum[top:top + m, left:left + m]
            field = ift2(window * mask * down)
            magnitude = np.abs(field)
            if history is not None:
                err = sqrt_i[i] - magnitude
                resid += float((err * err).sum())
            # keep the model phase, impose the measured modulus
            safe = np.where(magnitude > 0, magnitude, 1.0)
            phase = np.where(magnitude > 0, field / safe, 1.0)
            corrected = ft2(sqrt_i[i] * phase) / down
            window[support] = corrected[support]
        if history is not None:
            history.append(resid)
    return ift2(spectrum)


def overlap_ratio(plan: IlluminationPlan, pupil: Pupil) -> float:
    """Area overlap fraction of pupil disks for the innermost adjacent LED pair.

    The disk separation is the smallest nonzero |Δk| from the most axial LED
    to any other plan entry. Off-axis LED pairs sit closer together in
    k-space than this (the angle compresses toward the array edge), so the
    innermost pair is the widest-spaced adjacency and its overlap is the
    sampling bottleneck. Returns 1.0 for coincident disks, 0.0 at or beyond
    tangency.
    """
    if len(plan) < 2:
        raise ValueError("need at least two plan entries")
    if not np.isfinite(pupil.cutoff_rad_um):
        return 1.0
    center = int(np.argmin(np.hypot(plan.k[:, 0], plan.k[:, 1])))
    dist = np.hypot(plan.k[:, 0] - plan.k[center, 0], plan.k[:, 1] - plan.k[center, 1])
    dist = dist[dist > 1e-12]
    if dist.size == 0:
        return 1.0
    d = float(dist.min())
    r = pupil.cutoff_rad_um
    if d >= 2.0 * r:
        return 0.0
    area = 2.0 * r * r * np.arccos(d / (2.0 * r)) - 0.5 * d * np.sqrt(4.0 * r * r - d * d)
    return float(area / (np.pi * r * r))
