"""Synthetic latent videos and first-frame edits.

Stand-ins for real footage: a constant-intensity motif translating over
a flat background, or a static noise field. First-frame edits replace a
rectangle with a seeded pattern (insert/swap) or a background fill
(delete), leaving everything outside the rectangle untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import ConfigError
from .tensors import F32, Rng

__all__ = [
    "EditSpec",
    "SyntheticVideoSpec",
    "apply_first_frame_edit",
    "gen_synthetic_video",
]

MOTIFS = ("moving_square", "moving_disc", "static_noise")
EDIT_TASKS = ("insert", "swap", "delete")


@dataclass(frozen=True)
class SyntheticVideoSpec:
    frames: int = 4
    height: int = 8
    width: int = 8
    channels: int = 4
    motif: str = "moving_square"
    velocity: Tuple[float, float] = (0.5, 0.5)
    background: float = 0.1
    motif_level: float = 1.0
    motif_size: int = 2
    motif_start: Tuple[int, int] = (1, 1)
    seed: int = 0

    def __post_init__(self):
        if self.motif not in MOTIFS:
            raise ConfigError(f"unknown motif {self.motif!r}, expected one of {MOTIFS}")
        for name in ("frames", "height", "width", "channels"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.motif_size < 1:
            raise ConfigError("motif_size must be >= 1")


def _motif_offsets(spec: SyntheticVideoSpec) -> list[Tuple[int, int]]:
    """Integer per-frame motif positions, half-up rounding of velocity * frame."""
    vy, vx = spec.velocity
    r0, c0 = spec.motif_start
    return [
        (r0 + math.floor(vy * f + 0.5), c0 + math.floor(vx * f + 0.5))
        for f in range(spec.frames)
    ]


def gen_synthetic_video(spec: SyntheticVideoSpec) -> np.ndarray:
    """Deterministic (frames, height, width, channels) float32 video."""
    shape = (spec.frames, spec.height, spec.width, spec.channels)
    video = np.full(shape, F32(spec.background), dtype=F32)

    if spec.motif == "static_noise":
        rng = Rng(spec.seed)
        noise = rng.gaussian((spec.height, spec.width, spec.channels))
        video += noise[None, ...]
        return video

    s = spec.motif_size
    for f, (r, c) in enumerate(_motif_offsets(spec)):
        if r < 0 or c < 0 or r + s > spec.height or c + s > spec.width:
            raise ConfigError(
                f"motif leaves the {spec.height}x{spec.width} frame at frame {f} "
                f"(top-left {(r, c)}, size {s})"
            )
        if spec.motif == "moving_square":
            video[f, r : r + s, c : c + s, :] = F32(spec.motif_level)
        else:  # moving_disc
            cy, cx = r + (s - 1) / 2.0, c + (s - 1) / 2.0
            radius = s / 2.0
            yy, xx = np.mgrid[0 : spec.height, 0 : spec.width]
            inside = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius * radius
            video[f, inside, :] = F32(spec.motif_level)
    return video


@dataclass(frozen=True)
class EditSpec:
    """A rectangle edit on the first frame.

    insert/swap paint a seeded Gaussian pattern into the region; delete
    fills it with ``fill_level``. Outside the region the frame is
    untouched.
    """

    task: str = "insert"
    region: Tuple[int, int, int, int] = (2, 2, 3, 3)
    patch_seed: int = 7
    fill_level: float = 0.0

    def __post_init__(self):
        if self.task not in EDIT_TASKS:
            raise ConfigError(f"unknown edit task {self.task!r}, expected one of {EDIT_TASKS}")
        r, c, h, w = self.region
        if h < 0 or w < 0:
            raise ConfigError(f"region extents must be >= 0, got {self.region}")


def apply_first_frame_edit(video: np.ndarray, edit: EditSpec) -> np.ndarray:
    """Edited copy of the first frame; bitwise-equal to the source outside the region."""
    if video.ndim != 4:
        raise ConfigError(f"expected a 4-D video, got shape {video.shape}")
    frame = np.array(video[0], dtype=F32, copy=True)
    r, c, h, w = edit.region
    H, W = frame.shape[0], frame.shape[1]
    if r < 0 or c < 0 or r + h > H or c + w > W:
        raise ConfigError(f"edit region {edit.region} exceeds the {H}x{W} frame")
    if h == 0 or w == 0:
        return frame
    if edit.task == "delete":
        frame[r : r + h, c : c + w, :] = F32(edit.fill_level)
    else:
        rng = Rng(edit.patch_seed)
        frame[r : r + h, c : c + w, :] = rng.gaussian((h, w, frame.shape[2]))
    return frame
