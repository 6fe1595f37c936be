"""Color mathematics for the capture and colorization pipelines.

All images are channel-last float arrays; triples are length-3 arrays. Every
function broadcasts over leading dimensions, so a single (3,) triple and an
(H, W, 3) image go through the same code. All math is double precision and
linear-light: no display gamma is applied anywhere in the pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cie1931 import CIE_RGB_TO_XYZ, WAVELENGTHS_NM, XYZ_BAR

__all__ = [
    "EPS_LOG",
    "SRGB_TO_LMS",
    "LMS_TO_LAB",
    "D65_XYZ",
    "SRGB_PRIMARIES",
    "LED_PRIMARIES",
    "DEFAULT_WHITE_BALANCE",
    "LedSpectrum",
    "CmfTable",
    "default_cmf",
    "srgb_to_lab",
    "lab_to_linear_rgb",
    "lab_to_srgb",
    "spectrum_to_xyz",
    "chromaticity",
    "white_balance_coeffs",
    "srgb_to_xyz_matrix",
    "xyz_to_srgb_matrix",
    "gamut_clip",
]

# floor applied to LMS before the log so black stays finite
EPS_LOG = 1e-4

SRGB_TO_LMS = np.array([
    [0.3811, 0.5783, 0.0402],
    [0.1967, 0.7244, 0.0782],
    [0.0241, 0.1228, 0.8444],
])

# decorrelating rotation of log-LMS into one brightness + two opponent axes
LMS_TO_LAB = np.diag([1.0 / np.sqrt(3.0), 1.0 / np.sqrt(6.0), 1.0 / np.sqrt(2.0)]) @ np.array([
    [1.0, 1.0, 1.0],
    [1.0, 1.0, -2.0],
    [1.0, -1.0, 0.0],
])

_LMS_TO_SRGB = np.linalg.inv(SRGB_TO_LMS)
_LAB_TO_LOG_LMS = np.linalg.inv(LMS_TO_LAB)

# reference white (D65) in XYZ
D65_XYZ = np.array([0.95047, 1.00000, 1.08883])

# sRGB primary chromaticities, one row per primary (R, G, B)
SRGB_PRIMARIES = np.array([
    [0.64, 0.33, 0.03],
    [0.30, 0.60, 0.10],
    [0.15, 0.06, 0.79],
])

# calibrated chromaticities of the default rig's three LED primaries
LED_PRIMARIES = np.array([
    [0.6625, 0.2901, 0.0474],
    [0.2410, 0.4521, 0.3069],
    [0.1719, 0.0608, 0.7663],
])


def srgb_to_lab(img: np.ndarray) -> np.ndarray:
    """Map linear sRGB in [0,1] to the log-LMS opponent space."""
    rgb = np.asarray(img, dtype=np.float64)
    lms = rgb @ SRGB_TO_LMS.T
    log_lms = np.log10(np.maximum(lms, EPS_LOG))
    return log_lms @ LMS_TO_LAB.T


def lab_to_linear_rgb(lab: np.ndarray) -> np.ndarray:
    """Exact algebraic inverse of srgb_to_lab, without the display clip.

    Values can land outside [0,1]; callers that need a displayable image
    apply gamut_clip (or use lab_to_srgb) and may count the out-of-range
    pixels here first.
    """
    lab = np.asarray(lab, dtype=np.float64)
    lms = 10.0 ** (lab @ _LAB_TO_LOG_LMS.T)
    return lms @ _LMS_TO_SRGB.T


def lab_to_srgb(lab: np.ndarray) -> np.ndarray:
    """Inverse transform followed by the [0,1] display clip."""
    return gamut_clip(lab_to_linear_rgb(lab))


@dataclass(frozen=True)
class LedSpectrum:
    """Gaussian emission line described by center wavelength and FWHM, in nm."""

    center_nm: float
    fwhm_nm: float

    def __post_init__(self) -> None:
        if not 380.0 <= self.center_nm <= 780.0:
            raise ValueError(f"center wavelength {self.center_nm} nm outside [380, 780]")
        if self.fwhm_nm <= 0:
            raise ValueError("fwhm must be positive")

    def sample(self, wavelengths_nm: np.ndarray) -> np.ndarray:
        sigma = self.fwhm_nm / (2.0 * np.sqrt(2.0 * np.log(2.0)))
        x = (np.asarray(wavelengths_nm, dtype=np.float64) - self.center_nm) / sigma
        return np.exp(-0.5 * x * x)


@dataclass(frozen=True)
class CmfTable:
    """Color matching functions on a uniform wavelength grid.

    basis is "xyz" for xbar/ybar/zbar or "cie_rgb" for rbar/gbar/bbar; in the
    latter case integrals are mapped to XYZ through CIE_RGB_TO_XYZ.
    """

    wavelengths_nm: np.ndarray
    values: np.ndarray
    basis: str = "xyz"

    def __post_init__(self) -> None:
        wl = np.asarray(self.wavelengths_nm, dtype=np.float64)
        vals = np.asarray(self.values, dtype=np.float64)
        if wl.ndim != 1 or vals.shape != (wl.size, 3):
            raise ValueError("matching-function table must be (n,) wavelengths with (n, 3) values")
        steps = np.diff(wl)
        if wl.size < 2 or not np.allclose(steps, steps[0]):
            raise ValueError("wavelength grid must be uniform")
        if steps[0] > 5.0 + 1e-9:
            raise ValueError("wavelength grid step must be <= 5 nm")
        if wl[0] > 380.0 or wl[-1] < 780.0:
            raise ValueError("wavelength grid must cover [380, 780] nm")
        if not (np.isfinite(wl).all() and np.isfinite(vals).all()):
            raise ValueError("non-finite matching-function data")
        if self.basis not in ("xyz", "cie_rgb"):
            raise ValueError(f"unknown basis {self.basis!r}")
        object.__setattr__(self, "wavelengths_nm", wl)
        object.__setattr__(self, "values", vals)


_DEFAULT_CMF = None


def default_cmf() -> CmfTable:
    """The built-in 2-degree observer table at 5 nm steps."""
    global _DEFAULT_CMF
    if _DEFAULT_CMF is None:
        _DEFAULT_CMF = CmfTable(WAVELENGTHS_NM, XYZ_BAR, basis="xyz")
    return _DEFAULT_CMF


def spectrum_to_xyz(spectrum: LedSpectrum, cmf: CmfTable | None = None) -> np.ndarray:
    """Integrate an emission spectrum against matching functions, giving XYZ.

    Trapezoidal integration on the table grid. The result is unnormalized;
    apply chromaticity() to project onto the unit-sum plane.
    """
    if cmf is None:
        cmf = default_cmf()
    s = spectrum.sample(cmf.wavelengths_nm)
    if s.max() < 1e-12:
        raise ValueError("spectrum has no support on the matching-function grid")
    integrals = np.trapezoid(s[:, None] * cmf.values, cmf.wavelengths_nm, axis=0)
    if cmf.basis == "cie_rgb":
        return CIE_RGB_TO_XYZ @ integrals
    return integrals


def chromaticity(xyz: np.ndarray) -> np.ndarray:
    """Project XYZ onto the X+Y+Z = 1 plane."""
    xyz = np.asarray(xyz, dtype=np.float64)
    total = xyz.sum(axis=-1, keepdims=True)
    if np.any(total <= 0):
        raise ValueError("chromaticity undefined for nonpositive XYZ sum")
    return xyz / total


def white_balance_coeffs(primaries: np.ndarray, white: np.ndarray) -> np.ndarray:
    """Per-primary gains that mix the primaries into the given white.

    primaries holds one chromaticity triple per row (R, G, B); white is an
    XYZ triple. Solves the 3x3 system with the primaries as columns. Raises
    numpy.linalg.LinAlgError for a singular primary matrix.
    """
    m = np.asarray(primaries, dtype=np.float64).T
    return np.linalg.solve(m, np.asarray(white, dtype=np.float64))


DEFAULT_WHITE_BALANCE = white_balance_coeffs(LED_PRIMARIES, D65_XYZ)

# encode matrix: columns scale the sRGB primaries so that (1,1,1) maps to D65
_SRGB_TO_XYZ = SRGB_PRIMARIES.T * white_balance_coeffs(SRGB_PRIMARIES, D65_XYZ)
_XYZ_TO_SRGB = np.linalg.inv(_SRGB_TO_XYZ)


def srgb_to_xyz_matrix() -> np.ndarray:
    """Matrix taking linear sRGB to XYZ (D65 white)."""
    return _SRGB_TO_XYZ.copy()


def xyz_to_srgb_matrix() -> np.ndarray:
    """Matrix taking XYZ to linear sRGB; inverse of srgb_to_xyz_matrix()."""
    return _XYZ_TO_SRGB.copy()


def gamut_clip(img: np.ndarray) -> np.ndarray:
    """Clamp componentwise to [0,1]. Idempotent."""
    return np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
