"""Seeded toy diffusion transformer serving as the velocity field v(z, t, cond).

Pre-norm blocks with self-attention over [condition tokens || latent
tokens]: the conditioning frame is flattened and projected to one token
per pixel, the prompt vector rides along as one extra token, and a
sinusoidal time embedding is added to every token after projection.
Weights are a deterministic function of (config, seed); nothing is
trained.

Attention taps expose the self-attention internals of one forward pass:
capture per-layer K/V, enrich listed layers with an external K/V
context, or probe every layer's plain-vs-enriched output pair without
letting the enriched activations propagate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, ShapeError
from .tensors import F32, Rng, as_f32, layer_norm

__all__ = [
    "AttentionTap",
    "Conditioning",
    "DiTConfig",
    "DiTWeights",
    "TapMode",
    "enriched_attention",
    "forward_velocity",
    "init_weights",
    "null_prompt_like",
    "time_embedding",
]

KVPair = Tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class DiTConfig:
    """Architecture and token-grid dimensions of the toy model."""

    num_layers: int = 8
    d_model: int = 64
    num_heads: int = 4
    frames: int = 4
    height: int = 8
    width: int = 8
    channels: int = 4
    time_dim: int = 32
    mlp_ratio: int = 4

    def __post_init__(self):
        if self.num_layers < 1 or self.num_heads < 1:
            raise ConfigError("num_layers and num_heads must be >= 1")
        if self.d_model % self.num_heads != 0:
            raise ConfigError(
                f"d_model={self.d_model} not divisible by num_heads={self.num_heads}"
            )
        for name in ("frames", "height", "width", "channels", "mlp_ratio"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.time_dim < 2 or self.time_dim % 2 != 0:
            raise ConfigError(f"time_dim must be even and >= 2, got {self.time_dim}")

    @property
    def head_dim(self) -> int:
        return self.d_model // self.num_heads

    @property
    def latent_shape(self) -> Tuple[int, int, int, int]:
        return (self.frames, self.height, self.width, self.channels)

    @property
    def latent_tokens(self) -> int:
        return self.frames * self.height * self.width

    @property
    def cond_tokens(self) -> int:
        # one token per conditioning-frame pixel plus the prompt token
        return self.height * self.width + 1

    @property
    def tokens_total(self) -> int:
        return self.cond_tokens + self.latent_tokens


@dataclass(frozen=True)
class Conditioning:
    """First-frame tokens plus a prompt vector (zero vector = null prompt)."""

    first_frame: np.ndarray
    prompt_vec: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "first_frame", as_f32(self.first_frame))
        object.__setattr__(self, "prompt_vec", as_f32(self.prompt_vec))
        if self.first_frame.ndim != 3:
            raise ShapeError(
                f"first_frame must be (height, width, channels), got {self.first_frame.shape}"
            )
        if self.prompt_vec.ndim != 1:
            raise ShapeError(f"prompt_vec must be 1-D, got {self.prompt_vec.shape}")
        if not np.all(np.isfinite(self.first_frame)) or not np.all(np.isfinite(self.prompt_vec)):
            raise ShapeError("conditioning must be finite")

    @property
    def is_null_prompt(self) -> bool:
        return not np.any(self.prompt_vec)


def null_prompt_like(cond: Conditioning) -> Conditioning:
    """Same conditioning frame with the prompt zeroed."""
    return Conditioning(cond.first_frame, np.zeros_like(cond.prompt_vec))


class TapMode(enum.Enum):
    OFF = "off"
    CAPTURE_KV = "capture_kv"
    ENRICH = "enrich"
    PROBE = "probe"


class AttentionTap:
    """Per-forward-pass hook into the self-attention blocks.

    A tap belongs to exactly one forward pass. ``captured_kv`` holds one
    (K, V) pair per layer in capture mode, ``attn_outputs`` one
    self-attention output per layer (all modes except probe), and
    ``probe_pairs`` one (plain, enriched) output pair per layer in probe
    mode.
    """

    def __init__(self, mode: TapMode, context: Optional[Dict[int, KVPair]] = None):
        if mode in (TapMode.ENRICH, TapMode.PROBE) and context is None:
            raise ConfigError(f"{mode.value} tap needs a K/V context")
        self.mode = mode
        self.context = dict(context) if context else {}
        self.captured_kv: List[KVPair] = []
        self.attn_outputs: List[np.ndarray] = []
        self.probe_pairs: List[Tuple[np.ndarray, np.ndarray]] = []
        self._used = False

    @classmethod
    def off(cls) -> "AttentionTap":
        return cls(TapMode.OFF)

    @classmethod
    def capture_kv(cls) -> "AttentionTap":
        return cls(TapMode.CAPTURE_KV)

    @classmethod
    def enrich(cls, context: Dict[int, KVPair]) -> "AttentionTap":
        return cls(TapMode.ENRICH, context)

    @classmethod
    def probe(cls, context: Dict[int, KVPair]) -> "AttentionTap":
        return cls(TapMode.PROBE, context)

    def _begin_pass(self, config: DiTConfig) -> None:
        if self._used:
            raise ConfigError("attention taps are single-use; make a fresh tap per forward pass")
        self._used = True
        if self.mode == TapMode.PROBE:
            missing = [l for l in range(config.num_layers) if l not in self.context]
            if missing:
                raise ConfigError(f"probe tap needs context for every layer, missing {missing}")
        for l, (k, v) in self.context.items():
            if not 0 <= l < config.num_layers:
                raise ConfigError(
                    f"tap context layer {l} out of range for {config.num_layers}-layer model"
                )
            k = as_f32(k)
            v = as_f32(v)
            if k.ndim != 2 or v.ndim != 2 or k.shape[1] != config.d_model or v.shape[1] != config.d_model:
                raise ShapeError(
                    f"context K/V at layer {l} must be [tokens, {config.d_model}], "
                    f"got {k.shape} and {v.shape}"
                )
            if k.shape[0] != v.shape[0]:
                raise ShapeError(
                    f"context K/V token counts disagree at layer {l}: {k.shape[0]} vs {v.shape[0]}"
                )


@dataclass(frozen=True)
class LayerWeights:
    wq: np.ndarray
    wk: np.ndarray
    wv: np.ndarray
    wo: np.ndarray
    w_mlp_in: np.ndarray
    w_mlp_out: np.ndarray


@dataclass(frozen=True)
class DiTWeights:
    """Deterministic function of (config, seed); immutable after init."""

    config: DiTConfig
    seed: int
    w_in: np.ndarray
    w_cond: np.ndarray
    w_time: np.ndarray
    w_out: np.ndarray
    layers: Tuple[LayerWeights, ...] = field(repr=False)


def init_weights(config: DiTConfig, seed: int) -> DiTWeights:
    """Draw all projection matrices as N(0, 1/fan_in) in a fixed order.

    Order: input projection, condition projection, time projection, then
    per layer (q, k, v, output, mlp-in, mlp-out), then output projection.
    """
    rng = Rng(seed)

    def draw(fan_in: int, fan_out: int) -> np.ndarray:
        return rng.gaussian((fan_in, fan_out)) * F32(1.0 / math.sqrt(fan_in))

    d, c = config.d_model, config.channels
    hidden = config.mlp_ratio * d
    w_in = draw(c, d)
    w_cond = draw(c, d)
    w_time = draw(config.time_dim, d)
    layers = tuple(
        LayerWeights(
            wq=draw(d, d),
            wk=draw(d, d),
            wv=draw(d, d),
            wo=draw(d, d),
            w_mlp_in=draw(d, hidden),
            w_mlp_out=draw(hidden, d),
        )
        for _ in range(config.num_layers)
    )
    w_out = draw(d, c)
    return DiTWeights(config, int(seed), w_in, w_cond, w_time, w_out, layers)


def time_embedding(t: float, dim: int) -> np.ndarray:
    """Interleaved sin/cos of t against frequencies 10000**(-2i/dim)."""
    if dim < 2 or dim % 2 != 0:
        raise ConfigError(f"time embedding dim must be even and >= 2, got {dim}")
    i = np.arange(dim // 2, dtype=np.float64)
    freqs = 10000.0 ** (-2.0 * i / dim)
    ang = float(t) * freqs
    out = np.empty(dim, dtype=np.float64)
    out[0::2] = np.sin(ang)
    out[1::2] = np.cos(ang)
    return out.astype(F32)


def _as_token_matrix(x, d: int, name: str) -> np.ndarray:
    x = as_f32(x)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ShapeError(f"{name} must be 1-D or 2-D, got shape {x.shape}")
    if x.shape[1] != d:
        raise ShapeError(f"{name} width {x.shape[1]} does not match head_dim {d}")
    return x


def enriched_attention(q, k_edit, v_edit, k_res, v_res, d: int) -> np.ndarray:
    """Single-head attention over the concatenated [edit, res] context.

    Computes softmax(q @ K_aug.T / sqrt(d)) @ V_aug where K_aug and
    V_aug append the residual-context rows after the edit rows. Passing
    an empty (or None) residual context reduces to plain attention. The
    score/softmax chain runs in float64 so duplicated contexts reproduce
    plain attention to float32 rounding.
    """
    if d < 1:
        raise ShapeError(f"head_dim must be >= 1, got {d}")
    squeeze = np.asarray(q).ndim == 1
    q = _as_token_matrix(q, d, "q")
    k_edit = _as_token_matrix(k_edit, d, "k_edit")
    v_edit = _as_token_matrix(v_edit, d, "v_edit")
    if k_edit.shape[0] != v_edit.shape[0]:
        raise ShapeError(
            f"edit K/V token counts disagree: {k_edit.shape[0]} vs {v_edit.shape[0]}"
        )
    if k_res is None or v_res is None or np.size(k_res) == 0:
        k_aug, v_aug = k_edit, v_edit
        if (k_res is None) != (v_res is None):
            raise ShapeError("k_res and v_res must both be given or both be empty")
    else:
        k_res = _as_token_matrix(k_res, d, "k_res")
        v_res = _as_token_matrix(v_res, d, "v_res")
        if k_res.shape[0] != v_res.shape[0]:
            raise ShapeError(
                f"res K/V token counts disagree: {k_res.shape[0]} vs {v_res.shape[0]}"
            )
        k_aug = np.concatenate([k_edit, k_res], axis=0)
        v_aug = np.concatenate([v_edit, v_res], axis=0)
    scores = (q.astype(np.float64) @ k_aug.astype(np.float64).T) / math.sqrt(d)
    scores -= scores.max(axis=1, keepdims=True)
    e = np.exp(scores)
    w = e / e.sum(axis=1, keepdims=True)
    out = (w @ v_aug.astype(np.float64)).astype(F32)
    return out[0] if squeeze else out


def _gelu(x: np.ndarray) -> np.ndarray:
    # tanh approximation, evaluated in float32
    c = F32(math.sqrt(2.0 / math.pi))
    return F32(0.5) * x * (F32(1.0) + np.tanh(c * (x + F32(0.044715) * x * x * x)))


def _split_heads(x: np.ndarray, n_heads: int, d: int) -> np.ndarray:
    return x.reshape(x.shape[0], n_heads, d).transpose(1, 0, 2).astype(np.float64)


def _multi_head(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    context: Optional[KVPair],
    config: DiTConfig,
) -> np.ndarray:
    """All heads of enriched_attention at once (same float64 score chain)."""
    nh, d = config.num_heads, config.head_dim
    if context is not None:
        k_res, v_res = context
        k = np.concatenate([k, as_f32(k_res)], axis=0)
        v = np.concatenate([v, as_f32(v_res)], axis=0)
    qh = _split_heads(q, nh, d)
    kh = _split_heads(k, nh, d)
    vh = _split_heads(v, nh, d)
    scores = qh @ kh.transpose(0, 2, 1)
    scores /= math.sqrt(d)
    scores -= scores.max(axis=2, keepdims=True)
    np.exp(scores, out=scores)
    scores /= scores.sum(axis=2, keepdims=True)
    out = (scores @ vh).transpose(1, 0, 2).reshape(q.shape[0], config.d_model)
    return out.astype(F32)


def forward_velocity(
    weights: DiTWeights,
    latent,
    t: float,
    cond: Conditioning,
    tap: Optional[AttentionTap] = None,
) -> np.ndarray:
    """Velocity prediction for one latent video at time t.

    Returns a tensor with the latent's shape. Condition tokens (frame
    pixels then the prompt token) are prepended to the latent tokens
    for attention and stripped before the output projection.
    """
    config = weights.config
    latent = as_f32(latent)
    if latent.shape != config.latent_shape:
        raise ShapeError(f"latent shape {latent.shape} does not match model grid {config.latent_shape}")
    if not 0.0 <= t <= 1.0:
        raise ConfigError(f"t={t} outside [0, 1]")
    ff = cond.first_frame
    if ff.shape != (config.height, config.width, config.channels):
        raise ShapeError(
            f"conditioning frame shape {ff.shape} does not match grid "
            f"{(config.height, config.width, config.channels)}"
        )
    if cond.prompt_vec.shape != (config.d_model,):
        raise ShapeError(
            f"prompt_vec length {cond.prompt_vec.shape[0]} does not match d_model {config.d_model}"
        )
    tap = tap or AttentionTap.off()
    tap._begin_pass(config)

    lat_tokens = latent.reshape(-1, config.channels) @ weights.w_in
    cond_tokens = ff.reshape(-1, config.channels) @ weights.w_cond
    prompt_token = cond.prompt_vec[None, :]
    x = np.concatenate([cond_tokens, prompt_token, lat_tokens], axis=0)
    x = x + (time_embedding(t, config.time_dim) @ weights.w_time)[None, :]

    for l, lw in enumerate(weights.layers):
        h = layer_norm(x)
        q = h @ lw.wq
        k = h @ lw.wk
        v = h @ lw.wv
        if tap.mode == TapMode.CAPTURE_KV:
            tap.captured_kv.append((k.copy(), v.copy()))
        if tap.mode == TapMode.PROBE:
            plain = _multi_head(q, k, v, None, config) @ lw.wo
            enriched = _multi_head(q, k, v, tap.context[l], config) @ lw.wo
            tap.probe_pairs.append((plain.copy(), enriched.copy()))
            attn = plain
        else:
            ctx = tap.context.get(l) if tap.mode == TapMode.ENRICH else None
            attn = _multi_head(q, k, v, ctx, config) @ lw.wo
            tap.attn_outputs.append(attn.copy())
        x = x + attn
        m = layer_norm(x)
        x = x + _gelu(m @ lw.w_mlp_in) @ lw.w_mlp_out

    x = layer_norm(x)
    out = x[config.cond_tokens:] @ weights.w_out
    return out.reshape(config.latent_shape)
