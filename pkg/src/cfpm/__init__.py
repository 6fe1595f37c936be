"""Computational staining for Fourier-ptychographic captures.

Simulate multi-angle LED captures of a stained-slide phantom, stitch them
into a high-resolution single-wavelength amplitude image, re-color that
image by statistical color transfer from a low-resolution full-color
capture, and score the result against ground truth.
"""

from .colorspace import (
    CmfTable,
    DEFAULT_WHITE_BALANCE,
    LED_PRIMARIES,
    LedSpectrum,
    chromaticity,
    default_cmf,
    gamut_clip,
    lab_to_srgb,
    spectrum_to_xyz,
    srgb_to_lab,
    srgb_to_xyz_matrix,
    white_balance_coeffs,
    xyz_to_srgb_matrix,
)
from .config import RunConfig, load_config, save_config
from .errors import CfpmError, ConfigError, NumericalError
from .fpm import (
    CaptureStack,
    IlluminationPlan,
    LedGeometry,
    Pupil,
    led_wavevectors,
    make_pupil,
    overlap_ratio,
    reconstruct,
    simulate_capture,
    simulate_stack,
)
from .harness import (
    MetricsReport,
    rmse,
    run_comparison,
    synthesize_rgb_conventional,
    write_report,
    write_report_csv,
)
from .phantom import Phantom, generate_phantom
from .stack_io import load_image, load_stack, save_stack
from .transfer import (
    DonorIndex,
    cfpm_colorize,
    histogram_match,
    neighborhood_stats,
    transfer,
    transfer_from_tile,
)

__version__ = "0.1.0"

__all__ = [
    "CfpmError", "ConfigError", "NumericalError",
    "CmfTable", "LedSpectrum", "DEFAULT_WHITE_BALANCE", "LED_PRIMARIES",
    "srgb_to_lab", "lab_to_srgb", "spectrum_to_xyz", "chromaticity",
    "white_balance_coeffs", "xyz_to_srgb_matrix", "srgb_to_xyz_matrix",
    "gamut_clip", "default_cmf",
    "LedGeometry", "IlluminationPlan", "Pupil", "CaptureStack",
    "led_wavevectors", "make_pupil", "simulate_capture", "simulate_stack",
    "reconstruct", "overlap_ratio",
    "Phantom", "generate_phantom",
    "neighborhood_stats", "histogram_match", "DonorIndex", "transfer",
    "cfpm_colorize", "transfer_from_tile",
    "RunConfig", "load_config", "save_config",
    "MetricsReport", "rmse", "synthesize_rgb_conventional", "run_comparison",
    "write_report", "write_report_csv",
    "load_stack", "save_stack", "load_image",
    "__version__",
]
