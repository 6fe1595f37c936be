"""Chroma transfer from a full-color donor to a grayscale acceptor.

The donor's pixels are summarized by R = 0.5 * brightness + 0.5 * dispersion
over a small neighborhood; each acceptor pixel receives the (a, b) chroma of
the donor pixel whose R is nearest its own. Brightness histograms are matched
first so the two R populations live on the same scale. The whole path is
deterministic: nearest-R ties resolve to the lowest flat donor index, and no
randomness is involved anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .colorspace import lab_to_srgb, srgb_to_lab

__all__ = [
    "PixelStats",
    "DonorIndex",
    "neighborhood_stats",
    "histogram_match",
    "match_nearest",
    "transfer",
    "cfpm_colorize",
    "transfer_from_tile",
]


@dataclass(frozen=True)
class PixelStats:
    """Per-pixel brightness p, neighborhood dispersion d, and r = (p + d) / 2."""

    p: np.ndarray
    d: np.ndarray
    r: np.ndarray


def neighborhood_stats(l_img: np.ndarray, size: int = 5, dd_mode: str = "std") -> PixelStats:
    """Brightness and windowed dispersion for every pixel.

    The window is size x size, centered, with replicate padding at borders.
    dd_mode selects the dispersion statistic: population standard deviation
    ("std", default) or variance ("variance").
    """
    l_img = np.asarray(l_img, dtype=np.float64)
    if l_img.ndim != 2 or l_img.size == 0:
        raise ValueError("expected a non-empty 2D brightness image")
    if size < 1 or size % 2 == 0:
        raise ValueError("window size must be a positive odd integer")
    if dd_mode not in ("std", "variance"):
        raise ValueError(f"unknown dd_mode {dd_mode!r}")
    mean = ndimage.uniform_filter(l_img, size, mode="nearest")
    mean_sq = ndimage.uniform_filter(l_img * l_img, size, mode="nearest")
    var = np.maximum(mean_sq - mean * mean, 0.0)
    d = var if dd_mode == "variance" else np.sqrt(var)
    return PixelStats(p=l_img, d=d, r=0.5 * l_img + 0.5 * d)


def histogram_match(acceptor_l: np.ndarray, donor_l: np.ndarray) -> np.ndarray:
    """Map acceptor values onto donor quantiles at equal CDF positions.

    Monotone by construction, so the acceptor's brightness ordering is
    preserved (ties allowed); the output distribution approximates the
    donor's to quantile-interpolation accuracy.
    """
    a = np.asarray(acceptor_l, dtype=np.float64)
    d = np.asarray(donor_l, dtype=np.float64)
    if a.size == 0 or d.size == 0:
        raise ValueError("histogram matching needs non-empty images")
    values, inverse, counts = np.unique(a.ravel(), return_inverse=True, return_counts=True)
    cdf = np.cumsum(counts) / a.size
    donor_sorted = np.sort(d.ravel())
    quantiles = np.arange(1, donor_sorted.size + 1) / donor_sorted.size
    mapped = np.interp(cdf, quantiles, donor_sorted)
    return mapped[inverse].reshape(a.shape)


@dataclass(frozen=True)
class DonorIndex:
    """Sorted unique donor R values with each value's lowest flat index.

    Built once per donor, then queried for many acceptor pixels. Queries
    reproduce exhaustive argmin over |R_donor - r| exactly, including the
    lowest-flat-index tie rule.
    """

    unique_r: np.ndarray
    first_flat: np.ndarray

    @classmethod
    def build(cls, donor_r: np.ndarray) -> "DonorIndex":
        flat = np.asarray(donor_r, dtype=np.float64).ravel()
        if flat.size == 0:
            raise ValueError("empty donor")
        order = np.argsort(flat, kind="stable")
        ordered = flat[order]
        starts = np.concatenate([[0], np.flatnonzero(np.diff(ordered)) + 1])
        # stable sort keeps original positions ascending inside each run,
        # so the run head is that value's lowest flat index
        return cls(unique_r=ordered[starts], first_flat=order[starts])

    def query(self, acceptor_r: np.ndarray) -> np.ndarray:
        q = np.asarray(acceptor_r, dtype=np.float64).ravel()
        vals = self.unique_r
        pos = np.searchsorted(vals, q)
        left = np.clip(pos - 1, 0, vals.size - 1)
        right = np.clip(pos, 0, vals.size - 1)
        dist_left = np.where(pos == 0, np.inf, q - vals[left])
        dist_right = np.where(pos == vals.size, np.inf, vals[right] - q)
        flat_left = self.first_flat[left]
        flat_right = self.first_flat[right]
        # an exact tie goes to whichever side appears first in flat order
        take_right = (dist_right < dist_left) | (
            (dist_right == dist_left) & (flat_right < flat_left)
        )
        return np.where(take_right, flat_right, flat_left)


def match_nearest(donor_r: np.ndarray, acceptor_r: np.ndarray) -> np.ndarray:
    """Flat donor index of the nearest-R donor pixel for each acceptor pixel."""
    return DonorIndex.build(donor_r).query(acceptor_r)


def transfer(donor_lab: np.ndarray, acceptor_l: np.ndarray, size: int = 5,
             dd_mode: str = "std", donor_stride: int = 1) -> np.ndarray:
    """Assign donor (a, b) chroma to acceptor pixels by nearest R statistic.

    donor_lab may be any size; spatial alignment is never used, only the
    per-pixel statistics. The acceptor brightness should already be
    histogram-matched to the donor's. The output L channel is the input
    acceptor brightness, untouched. donor_stride > 1 restricts candidates
    to a uniform subsample of donor pixels.
    """
    donor_lab = np.asarray(donor_lab, dtype=np.float64)
    acceptor_l = np.asarray(acceptor_l, dtype=np.float64)
    if donor_lab.ndim != 3 or donor_lab.shape[-1] != 3 or donor_lab.size == 0:
        raise ValueError("donor must be a non-empty (h, w, 3) image")
    if donor_stride < 1:
        raise ValueError("donor_stride must be >= 1")
    donor_r = neighborhood_stats(donor_lab[..., 0], size, dd_mode).r.ravel()[::donor_stride]
    acceptor_r = neighborhood_stats(acceptor_l, size, dd_mode).r
    idx = match_nearest(donor_r, acceptor_r)
    ab = donor_lab[..., 1:].reshape(-1, 2)[::donor_stride][idx]
    out = np.empty(acceptor_l.shape + (3,), dtype=np.float64)
    out[..., 0] = acceptor_l
    out[..., 1:] = ab.reshape(acceptor_l.shape + (2,))
    return out


def _amplitude_to_brightness(amp: np.ndarray, donor_l: np.ndarray,
                             percentiles: tuple[float, float]) -> np.ndarray:
    """Put a coherent amplitude image on the donor's brightness scale.

    Percentile normalization keeps isolated hot pixels from compressing the
    rest of the range; the result spans exactly the donor's L range.
    """
    amp = np.asarray(amp, dtype=np.float64)
    lo, hi = np.percentile(amp, percentiles)
    if hi > lo:
        unit = np.clip((amp - lo) / (hi - lo), 0.0, 1.0)
    else:
        unit = np.zeros_like(amp)
    l_min = float(donor_l.min())
    l_max = float(donor_l.max())
    return l_min + unit * (l_max - l_min)


def _colorize(donor_lab: np.ndarray, acceptor_amp: np.ndarray, size: int, dd_mode: str,
              donor_stride: int, percentiles: tuple[float, float], return_lab: bool):
    donor_l = donor_lab[..., 0]
    acceptor_l = _amplitude_to_brightness(acceptor_amp, donor_l, percentiles)
    matched_l = histogram_match(acceptor_l, donor_l)
    out_lab = transfer(donor_lab, matched_l, size, dd_mode, donor_stride)
    out_srgb = lab_to_srgb(out_lab)
    return (out_srgb, out_lab) if return_lab else out_srgb


def cfpm_colorize(donor_srgb: np.ndarray, acceptor_amp: np.ndarray, *, size: int = 5,
                  dd_mode: str = "std", donor_stride: int = 1,
                  percentiles: tuple[float, float] = (0.1, 99.9),
                  return_lab: bool = False):
    """Colorize a high-resolution amplitude image from a same-view color image.

    The donor is a lower-resolution color image of the same field of view;
    it is bicubically upsampled to the acceptor grid, converted to the
    opponent color space, and its chroma is transferred pixel-by-pixel.
    Returns the sRGB result, or (sRGB, Lab) when return_lab is true.
    """
    donor_srgb = np.asarray(donor_srgb, dtype=np.float64)
    acceptor_amp = np.asarray(acceptor_amp, dtype=np.float64)
    if donor_srgb.ndim != 3 or donor_srgb.shape[-1] != 3 or donor_srgb.size == 0:
        raise ValueError("donor must be a non-empty (h, w, 3) image")
    if acceptor_amp.ndim != 2 or acceptor_amp.size == 0:
        raise ValueError("acceptor must be a non-empty 2D amplitude image")
    h, w = donor_srgb.shape[:2]
    hh, ww = acceptor_amp.shape
    if h > hh or w > ww:
        raise ValueError("donor resolution exceeds the acceptor's")
    if hh * w != ww * h:
        raise ValueError("donor and acceptor cover different aspect ratios")
    if (hh, ww) != (h, w):
        channels = [
            ndimage.zoom(donor_srgb[..., c], (hh / h, ww / w), order=3,
                         mode="nearest", grid_mode=True)
            for c in range(3)
        ]
        donor_srgb = np.clip(np.stack(channels, axis=-1), 0.0, 1.0)
    donor_lab = srgb_to_lab(donor_srgb)
    return _colorize(donor_lab, acceptor_amp, size, dd_mode, donor_stride,
                     percentiles, return_lab)


def transfer_from_tile(donor_srgb_tile: np.ndarray, acceptor_amp: np.ndarray, *,
                       size: int = 5, dd_mode: str = "std", donor_stride: int = 1,
                       percentiles: tuple[float, float] = (0.1, 99.9),
                       return_lab: bool = False):
    """Colorize from a donor tile that does not cover the acceptor's view.

    Same statistics-only pipeline as cfpm_colorize but without upsampling
    or field-of-view checks: the tile is used at its native resolution.
    """
    donor_srgb_tile = np.asarray(donor_srgb_tile, dtype=np.float64)
    acceptor_amp = np.asarray(acceptor_amp, dtype=np.float64)
    if donor_srgb_tile.ndim != 3 or donor_srgb_tile.shape[-1] != 3 or donor_srgb_tile.size == 0:
        raise ValueError("donor tile must be a non-empty (h, w, 3) image")
    if acceptor_amp.ndim != 2 or acceptor_amp.size == 0:
        raise ValueError("acceptor must be a non-empty 2D amplitude image")
    donor_lab = srgb_to_lab(donor_srgb_tile)
    return _colorize(donor_lab, acceptor_amp, size, dd_mode, donor_stride,
                     percentiles, return_lab)
