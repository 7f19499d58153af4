"""Reconstruction-fidelity metrics: PSNR, SSIM, relative error, order fits.

Frames are held and reduced in float64 so that exact textbook values
(e.g. a 0.01 MSE giving 20 dB) come out exact; latent videos are mapped
to [0, 1] with the reference video's min-max range before scoring.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, ShapeError

__all__ = [
    "PSNR_CAP_DB",
    "PixelFrame",
    "RegionMask",
    "convergence_order",
    "psnr",
    "rel_l2",
    "ssim",
    "video_psnr_ssim",
    "video_to_frames",
]

PSNR_CAP_DB = 99.0
SSIM_WINDOW = 8
_C1 = (0.01 * 1.0) ** 2
_C2 = (0.03 * 1.0) ** 2


@dataclass(frozen=True)
class PixelFrame:
    """A 2-D grid of intensities, clamped to [0, 1] on construction."""

    grid: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=np.float64)
        if g.ndim != 2 or g.size == 0:
            raise ShapeError(f"frame must be a non-empty 2-D grid, got shape {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ShapeError("frame values must be finite")
        object.__setattr__(self, "grid", np.clip(g, 0.0, 1.0))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.grid.shape


@dataclass(frozen=True)
class RegionMask:
    """Boolean inclusion mask; True pixels enter the metric."""

    grid: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid)
        if g.ndim != 2:
            raise ShapeError(f"mask must be 2-D, got shape {g.shape}")
        object.__setattr__(self, "grid", g.astype(bool))

    @property
    def any(self) -> bool:
        return bool(self.grid.any())


def psnr(a: PixelFrame, b: PixelFrame, mask: Optional[RegionMask] = None) -> float:
    """Peak signal-to-noise ratio in dB over the masked region (MAX = 1.0).

    Capped at 99.0 dB; identical inputs hit the cap instead of +inf.
    """
    if a.shape != b.shape:
        raise ShapeError(f"frame shapes disagree: {a.shape} vs {b.shape}")
    diff = a.grid - b.grid
    if mask is not None:
        if mask.grid.shape != a.shape:
            raise ShapeError(f"mask shape {mask.grid.shape} does not match frames {a.shape}")
        if not mask.any:
            raise ShapeError("mask excludes every pixel")
        diff = diff[mask.grid]
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(1.0 / mse))


def ssim(a: PixelFrame, b: PixelFrame) -> float:
    """Mean structural similarity over 8x8 non-overlapping windows.

    Standard constants C1 = 0.01**2, C2 = 0.03**2 at unit dynamic range;
    trailing rows/columns that do not fill a window are dropped.
    """
    if a.shape != b.shape:
        raise ShapeError(f"frame shapes disagree: {a.shape} vs {b.shape}")
    h, w = a.shape
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise ShapeError(f"frame {a.shape} smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window")
    nh, nw = h // SSIM_WINDOW, w // SSIM_WINDOW
    ga = a.grid[: nh * SSIM_WINDOW, : nw * SSIM_WINDOW]
    gb = b.grid[: nh * SSIM_WINDOW, : nw * SSIM_WINDOW]
    wa = ga.reshape(nh, SSIM_WINDOW, nw, SSIM_WINDOW).transpose(0, 2, 1, 3).reshape(nh * nw, -1)
    wb = gb.reshape(nh, SSIM_WINDOW, nw, SSIM_WINDOW).transpose(0, 2, 1, 3).reshape(nh * nw, -1)
    mu_a = wa.mean(axis=1)
    mu_b = wb.mean(axis=1)
    var_a = wa.var(axis=1)
    var_b = wb.var(axis=1)
    cov = ((wa - mu_a[:, None]) * (wb - mu_b[:, None])).mean(axis=1)
    num = (2.0 * mu_a * mu_b + _C1) * (2.0 * cov + _C2)
    den = (mu_a * mu_a + mu_b * mu_b + _C1) * (var_a + var_b + _C2)
    return float(np.mean(num / den))


def rel_l2(a, b) -> float:
    """||a - b||_2 / max(||a||_2, 1e-12), computed in float64."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"shapes disagree: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), 1e-12))


def convergence_order(ns: Sequence[int], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(1/n)."""
    if len(ns) != len(errors):
        raise ShapeError(f"length mismatch: {len(ns)} step counts vs {len(errors)} errors")
    if len(ns) < 2:
        raise ConfigError("need at least two points to fit an order")
    errs = np.asarray(errors, dtype=np.float64)
    if np.any(errs <= 0):
        raise ConfigError(f"errors must be positive, got {list(errors)}")
    x = -np.log(np.asarray(ns, dtype=np.float64))
    y = np.log(errs)
    x_c = x - x.mean()
    return float((x_c @ (y - y.mean())) / (x_c @ x_c))


def video_to_frames(video, ref=None) -> List[PixelFrame]:
    """Min-max map a latent video into [0, 1] frames, one per (frame, channel).

    The mapping range comes from ``ref`` when given (so both sides of a
    comparison share the reference video's range); a constant reference
    maps everything to zero.
    """
    v = np.asarray(video, dtype=np.float64)
    if v.ndim != 4:
        raise ShapeError(f"expected a (frames, height, width, channels) video, got {v.shape}")
    r = v if ref is None else np.asarray(ref, dtype=np.float64)
    lo, hi = float(r.min()), float(r.max())
    if hi - lo < 1e-12:
        mapped = np.zeros_like(v)
    else:
        mapped = np.clip((v - lo) / (hi - lo), 0.0, 1.0)
    frames = []
    for f in range(v.shape[0]):
        for c in range(v.shape[3]):
            frames.append(PixelFrame(mapped[f, :, :, c]))
    return frames


def video_psnr_ssim(
    ref_video, test_video, mask: Optional[RegionMask] = None
) -> Tuple[float, float]:
    """Frame-averaged PSNR/SSIM with both videos mapped by the reference range."""
    ref_frames = video_to_frames(ref_video, ref=ref_video)
    test_frames = video_to_frames(test_video, ref=ref_video)
    if len(ref_frames) != len(test_frames):
        raise ShapeError("videos have different frame counts")
    psnrs = [psnr(fa, fb, mask) for fa, fb in zip(ref_frames, test_frames)]
    ssims = [ssim(fa, fb) for fa, fb in zip(ref_frames, test_frames)]
    return float(np.mean(psnrs)), float(np.mean(ssims))
