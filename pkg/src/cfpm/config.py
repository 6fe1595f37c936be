"""Run configuration: defaults, validation, YAML round trip."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .fpm import LedGeometry, led_wavevectors
from .phantom import PRESETS
from .stack_io import STACK_FORMATS

__all__ = ["RunConfig", "load_config", "save_config"]

CHANNEL_POLICIES = ("best", "r", "g", "b")
DD_MODES = ("std", "variance")


@dataclass
class RunConfig:
    """Everything a full comparison run needs, one flat record.

    na may be None for an ideal all-pass system (no pupil cutoff); in that
    case lr_size should equal hr_size so the captures keep full resolution.
    upsample, when given, must match hr_size // lr_size.
    """

    rows: int = 15
    cols: int = 15
    pitch_mm: float = 4.0
    height_mm: float = 70.0
    na: float | None = 0.1
    wavelengths_um: tuple[float, float, float] = (0.6301, 0.5150, 0.4626)
    dx_um: float = 0.4
    hr_size: int = 256
    lr_size: int = 64
    upsample: int | None = None
    iterations: int = 10
    noise_sigma: float = 0.0
    seed: int = 7
    samples: int = 30
    channel: str = "best"
    outdir: str = "out"
    neighborhood: int = 5
    dd_mode: str = "std"
    stack_format: str = "png16"
    tile_fraction: float = 0.4
    include_tile: bool = True
    record_timing: bool = False
    jobs: int = 1
    phantom_preset: str = "he"

    def __post_init__(self) -> None:
        if self.wavelengths_um is not None:
            self.wavelengths_um = tuple(float(w) for w in self.wavelengths_um)
        if self.na is not None:
            self.na = float(self.na)

    def geometry(self) -> LedGeometry:
        return LedGeometry(rows=self.rows, cols=self.cols, pitch_mm=self.pitch_mm,
                           height_mm=self.height_mm)

    def seeds(self) -> list[int]:
        return [self.seed + i for i in range(self.samples)]

    def validate(self) -> "RunConfig":
        """Raise ConfigError on any inconsistency, return self when valid."""
        c = self
        if c.rows < 1 or c.cols < 1 or c.rows % 2 == 0 or c.cols % 2 == 0:
            raise ConfigError("rows and cols must be odd positive integers")
        if c.pitch_mm <= 0 or c.height_mm <= 0:
            raise ConfigError("pitch_mm and height_mm must be positive")
        if c.na is not None and not 0.0 < c.na < 1.0:
            raise ConfigError("na must lie in (0, 1), or be null for all-pass")
        if len(c.wavelengths_um) != 3 or any(w <= 0 for w in c.wavelengths_um):
            raise ConfigError("wavelengths_um must be three positive values")
        if c.dx_um <= 0:
            raise ConfigError("dx_um must be positive")
        if c.hr_size < 64:
            raise ConfigError("hr_size must be at least 64")
        if c.lr_size < 8 or c.lr_size > c.hr_size:
            raise ConfigError("lr_size must lie in [8, hr_size]")
        if c.hr_size % c.lr_size != 0:
            raise ConfigError("hr_size must be an integer multiple of lr_size")
        if c.upsample is not None and c.upsample != c.hr_size // c.lr_size:
            raise ConfigError("upsample must equal hr_size // lr_size when given")
        if c.iterations < 0:
            raise ConfigError("iterations must be non-negative")
        if c.noise_sigma < 0:
            raise ConfigError("noise_sigma must be non-negative")
        if c.samples < 1:
            raise ConfigError("samples must be at least 1")
        if c.channel not in CHANNEL_POLICIES:
            raise ConfigError(f"channel must be one of {CHANNEL_POLICIES}")
        if c.neighborhood < 1 or c.neighborhood % 2 == 0:
            raise ConfigError("neighborhood must be an odd positive integer")
        if c.dd_mode not in DD_MODES:
            raise ConfigError(f"dd_mode must be one of {DD_MODES}")
        if c.stack_format not in STACK_FORMATS:
            raise ConfigError(f"stack_format must be one of {STACK_FORMATS}")
        if not 0.0 < c.tile_fraction <= 1.0:
            raise ConfigError("tile_fraction must lie in (0, 1]")
        if c.jobs < 1:
            raise ConfigError("jobs must be at least 1")
        if c.phantom_preset not in PRESETS:
            raise ConfigError(f"phantom_preset must be one of {PRESETS}")
        self._check_geometry_fits()
        return self

    def _check_geometry_fits(self) -> None:
        """Every illumination window must sit on the HR grid, every pupil on the LR grid."""
        geom = self.geometry()
        dk = 2.0 * np.pi / (self.hr_size * self.dx_um)
        half_hr = self.hr_size // 2
        half_lr = self.lr_size // 2
        for lam in self.wavelengths_um:
            if self.na is not None:
                cutoff = self.na * 2.0 * np.pi / lam
                if cutoff > dk * half_lr:
                    raise ConfigError(
                        f"pupil cutoff at wavelength {lam} um exceeds the capture "
                        f"Nyquist radius; increase lr_size or dx_um")
            plan = led_wavevectors(geom, lam)
            shifts = np.rint(plan.k / dk).astype(int)
            if np.any(np.abs(shifts) + half_lr > half_hr):
                raise ConfigError(
                    f"corner illumination at wavelength {lam} um pushes the pupil "
                    f"window off the HR grid; shrink the array or enlarge hr_size")


# channel policy helper kept outside the dataclass so it stays a plain record
def channel_indices(cfg: RunConfig) -> list[int]:
    """Reconstruction channels to evaluate under the configured policy."""
    if cfg.channel == "best":
        return [0, 1, 2]
    return [["r", "g", "b"].index(cfg.channel)]


_FIELD_NAMES = {f.name for f in dataclasses.fields(RunConfig)}


def load_config(path: str | Path) -> RunConfig:
    """Read a YAML mapping into a validated RunConfig."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping at top level")
    unknown = set(data) - _FIELD_NAMES
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        cfg = RunConfig(**data)
        return cfg.validate()
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def save_config(cfg: RunConfig, path: str | Path) -> None:
    """Write the effective configuration; load_config(path) round-trips equal."""
    data = dataclasses.asdict(cfg)
    data["wavelengths_um"] = list(cfg.wavelengths_um)
    Path(path).write_text(yaml.safe_dump(data, sort_keys=True, default_flow_style=False))
