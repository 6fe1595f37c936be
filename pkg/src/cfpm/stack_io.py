"""Image files and capture-stack persistence.

A stack is a directory of frames plus a manifest.json describing geometry,
wavelength, NA, normalization, and scan order. Two frame formats: 16-bit
PNG (compact, ~1.5e-5 quantization of the normalized intensities) and
32-bit float TIFF (exact).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .fpm import CaptureStack, LedGeometry, led_wavevectors

__all__ = [
    "STACK_FORMATS",
    "save_png8",
    "save_png16",
    "save_tiff32",
    "load_image",
    "save_stack",
    "load_stack",
]

STACK_FORMATS = ("png16", "tiff32")


def save_png8(img: np.ndarray, path: str | Path) -> None:
    """Write a [0,1] gray or color image as 8-bit PNG."""
    arr = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(arr).save(Path(path))


def save_png16(img: np.ndarray, path: str | Path) -> None:
    """Write a [0,1] single-channel image as 16-bit PNG."""
    if img.ndim != 2:
        raise ValueError("16-bit PNG frames are single-channel")
    arr = np.rint(np.clip(img, 0.0, 1.0) * 65535.0).astype(np.uint16)
    Image.fromarray(arr).save(Path(path))


def save_tiff32(img: np.ndarray, path: str | Path) -> None:
    """Write a single-channel image as 32-bit float TIFF."""
    if img.ndim != 2:
        raise ValueError("float TIFF frames are single-channel")
    Image.fromarray(np.asarray(img, dtype=np.float32), mode="F").save(Path(path))


def load_image(path: str | Path) -> np.ndarray:
    """Read an image written by the savers above back to float64.

    8/16-bit integer images come back scaled to [0,1]; float TIFFs come
    back with their stored values.
    """
    with Image.open(Path(path)) as im:
        arr = np.asarray(im)
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    if arr.dtype == np.uint16:
        return arr.astype(np.float64) / 65535.0
    if arr.dtype == np.int32:
        # Pillow promotes some 16-bit grays to mode I
        return arr.astype(np.float64) / 65535.0
    return arr.astype(np.float64)


def _geometry_dict(geom: LedGeometry) -> dict:
    return {
        "rows": geom.rows,
        "cols": geom.cols,
        "pitch_mm": geom.pitch_mm,
        "height_mm": geom.height_mm,
        "offset_mm": list(geom.offset_mm),
    }


def save_stack(stack: CaptureStack, directory: str | Path, fmt: str = "png16") -> Path:
    """Write stack frames and manifest under the given directory."""
    if fmt not in STACK_FORMATS:
        raise ValueError(f"unknown stack format {fmt!r}; expected one of {STACK_FORMATS}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ext = "png" if fmt == "png16" else "tiff"
    writer = save_png16 if fmt == "png16" else save_tiff32
    names = []
    for i in range(stack.frames.shape[0]):
        name = f"frame_{i:04d}.{ext}"
        writer(stack.frames[i], directory / name)
        names.append(name)
    manifest = {
        "format": fmt,
        "n_frames": len(names),
        "frame_files": names,
        "lr_size": stack.lr_size,
        "hr_size": stack.hr_size,
        "dx_um": stack.dx_um,
        "wavelength_um": stack.wavelength_um,
        "na": stack.na,
        "normalization": "frames divided by scale; multiply back to recover intensity",
        "scale": stack.scale,
        "noise_sigma": stack.noise_sigma,
        "seed": stack.seed,
        "geometry": _geometry_dict(stack.geometry),
        "plan": {
            "order_rc": stack.plan.led_rc.tolist(),
            "k_rad_um": stack.plan.k.tolist(),
        },
    }
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return directory


def load_stack(directory: str | Path) -> CaptureStack:
    """Rebuild a CaptureStack from a directory written by save_stack."""
    directory = Path(directory)
    with open(directory / "manifest.json") as fh:
        manifest = json.load(fh)
    geom = LedGeometry(
        rows=manifest["geometry"]["rows"],
        cols=manifest["geometry"]["cols"],
        pitch_mm=manifest["geometry"]["pitch_mm"],
        height_mm=manifest["geometry"]["height_mm"],
        offset_mm=tuple(manifest["geometry"]["offset_mm"]),
    )
    plan = led_wavevectors(geom, manifest["wavelength_um"])
    stored = np.asarray(manifest["plan"]["order_rc"], dtype=int)
    if stored.shape != plan.led_rc.shape or not np.array_equal(stored, plan.led_rc):
        raise ValueError("manifest scan order does not match the geometry")
    frames = np.stack([load_image(directory / name) for name in manifest["frame_files"]])
    return CaptureStack(
        frames=frames,
        scale=manifest["scale"],
        plan=plan,
        geometry=geom,
        na=manifest["na"],
        wavelength_um=manifest["wavelength_um"],
        dx_um=manifest["dx_um"],
        hr_size=manifest["hr_size"],
        noise_sigma=manifest.get("noise_sigma", 0.0),
        seed=manifest.get("seed"),
    )
