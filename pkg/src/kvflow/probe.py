"""Layer responsiveness profiling and vital-layer selection.

For each probe item, a one-step reconstruction forward captures every
layer's K/V; a probe-mode editing forward then computes each layer's
self-attention output with and without that context, without letting the
enriched activations propagate. A layer's responsiveness is one minus
the mean per-token cosine between the two outputs, pooled over tokens
and items.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

from .dit import AttentionTap, Conditioning, DiTWeights, forward_velocity
from .errors import ConfigError, ShapeError

__all__ = [
    "GRProfile",
    "ProbeItem",
    "ProbeSet",
    "guidance_responsiveness",
    "min_max_normalize",
    "responsiveness_from_outputs",
    "select_vital_layers",
]


@dataclass(frozen=True)
class ProbeItem:
    video: np.ndarray
    src_cond: Conditioning
    edit_cond: Conditioning


@dataclass(frozen=True)
class ProbeSet:
    items: Tuple[ProbeItem, ...]
    probe_t: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise ConfigError("probe set must not be empty")
        if not 0.0 <= self.probe_t <= 1.0:
            raise ConfigError(f"probe_t={self.probe_t} outside [0, 1]")


@dataclass(frozen=True)
class GRProfile:
    """Per-layer responsiveness scores, raw and min-max normalized."""

    raw: Tuple[float, ...]
    normalized: Tuple[float, ...]
    task_label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "raw", tuple(float(x) for x in self.raw))
        object.__setattr__(self, "normalized", tuple(float(x) for x in self.normalized))
        if len(self.raw) != len(self.normalized):
            raise ShapeError("raw and normalized lengths disagree")
        if any(not 0.0 <= x <= 2.0 for x in self.raw):
            raise ConfigError(f"raw scores must lie in [0, 2], got {self.raw}")

    @classmethod
    def from_raw(cls, raw: Sequence[float], task_label: str = "") -> "GRProfile":
        raw = tuple(float(x) for x in raw)
        return cls(raw, tuple(min_max_normalize(raw)), task_label)

    @property
    def num_layers(self) -> int:
        return len(self.raw)


def min_max_normalize(raw: Sequence[float]) -> list[float]:
    """(x - min) / (max - min); an all-equal input maps to all zeros."""
    if len(raw) == 0:
        raise ConfigError("cannot normalize an empty sequence")
    arr = np.asarray(raw, dtype=np.float64)
    lo, hi = float(arr.min()), float(arr.max())
    if hi == lo:
        return [0.0] * len(raw)
    return [float(x) for x in (arr - lo) / (hi - lo)]


def _token_cosines(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise cosine in float64, zero when either row norm < 1e-12."""
    if a.shape != b.shape or a.ndim != 2:
        raise ShapeError(f"output pair shapes disagree: {a.shape} vs {b.shape}")
    af = a.astype(np.float64)
    bf = b.astype(np.float64)
    na = np.linalg.norm(af, axis=1)
    nb = np.linalg.norm(bf, axis=1)
    dot = np.einsum("td,td->t", af, bf)
    denom = na * nb
    cos = np.zeros(a.shape[0], dtype=np.float64)
    ok = (na >= 1e-12) & (nb >= 1e-12)
    cos[ok] = dot[ok] / denom[ok]
    return np.clip(cos, -1.0, 1.0)


def responsiveness_from_outputs(x_plain, x_enriched) -> float:
    """1 - mean per-token cosine between two attention outputs."""
    cos = _token_cosines(np.asarray(x_plain), np.asarray(x_enriched))
    return float(1.0 - cos.mean())


def guidance_responsiveness(weights: DiTWeights, probe: ProbeSet) -> GRProfile:
    """Profile every layer's response to context enrichment.

    One reconstruction forward per item captures the full K/V context at
    probe_t; one probe-mode editing forward computes all layers' plain
    and enriched attention outputs simultaneously (valid because the
    plain activations are what propagates). The result pools the
    per-token cosines over tokens and items.
    """
    L = weights.config.num_layers
    sums = np.zeros(L, dtype=np.float64)
    counts = np.zeros(L, dtype=np.int64)
    for item in probe.items:
        capture = AttentionTap.capture_kv()
        forward_velocity(weights, item.video, probe.probe_t, item.src_cond, capture)
        context = {l: capture.captured_kv[l] for l in range(L)}
        probing = AttentionTap.probe(context)
        forward_velocity(weights, item.video, probe.probe_t, item.edit_cond, probing)
        for l, (x_plain, x_enriched) in enumerate(probing.probe_pairs):
            cos = _token_cosines(x_plain, x_enriched)
            sums[l] += cos.sum()
            counts[l] += cos.size
    raw = 1.0 - sums / counts
    return GRProfile.from_raw(raw)


def select_vital_layers(profile: Union[GRProfile, Sequence[float]], k: int) -> Tuple[int, ...]:
    """Indices of the k highest-scoring layers, ties toward the lower index.

    Accepts either a profile (selection uses the raw scores) or a bare
    score sequence; the result is sorted ascending.
    """
    scores = profile.raw if isinstance(profile, GRProfile) else tuple(float(x) for x in profile)
    L = len(scores)
    if not 0 <= k <= L:
        raise ConfigError(f"k={k} outside [0, {L}]")
    ranked = sorted(range(L), key=lambda l: (-scores[l], l))
    return tuple(sorted(ranked[:k]))
