"""Experiment configuration: dataclass sections, JSON loading, hashing.

Shipped defaults: 50 solver steps, tau 0.5, guidance scale 3.0, k=4.
Setting ``k`` to ``"auto"`` (or JSON null) selects ceil(0.1 * layers)
instead.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional, Tuple, Union

from .dit import DiTConfig
from .errors import ConfigError
from .synth import EditSpec, SyntheticVideoSpec

__all__ = [
    "BenchSection",
    "EditSection",
    "ModelSection",
    "PolicySection",
    "ProbeSection",
    "RunConfig",
    "SolverSection",
    "VideoSection",
    "canonical_json",
    "config_hash",
    "load_config",
    "resolve_k",
]


@dataclass(frozen=True)
class ModelSection:
    layers: int = 8
    d_model: int = 64
    heads: int = 4
    time_dim: int = 32
    mlp_ratio: int = 4

    def to_dit_config(self, video: "VideoSection") -> DiTConfig:
        return DiTConfig(
            num_layers=self.layers,
            d_model=self.d_model,
            num_heads=self.heads,
            frames=video.frames,
            height=video.height,
            width=video.width,
            channels=video.channels,
            time_dim=self.time_dim,
            mlp_ratio=self.mlp_ratio,
        )


@dataclass(frozen=True)
class VideoSection:
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

    def to_spec(self, seed: int) -> SyntheticVideoSpec:
        return SyntheticVideoSpec(
            frames=self.frames,
            height=self.height,
            width=self.width,
            channels=self.channels,
            motif=self.motif,
            velocity=tuple(self.velocity),
            background=self.background,
            motif_level=self.motif_level,
            motif_size=self.motif_size,
            motif_start=tuple(self.motif_start),
            seed=seed,
        )


@dataclass(frozen=True)
class SolverSection:
    steps: int = 50
    order: str = "rf2"


@dataclass(frozen=True)
class PolicySection:
    tau: float = 0.5
    guidance_scale: float = 3.0
    k: Union[int, str] = 4
    vital_layers: Optional[Tuple[int, ...]] = None


@dataclass(frozen=True)
class EditSection:
    task: str = "insert"
    region: Tuple[int, int, int, int] = (2, 2, 3, 3)
    patch_seed: int = 7
    prompt_seed: Optional[int] = 101

    def to_spec(self, background: float) -> EditSpec:
        return EditSpec(
            task=self.task,
            region=tuple(self.region),
            patch_seed=self.patch_seed,
            fill_level=background,
        )


@dataclass(frozen=True)
class ProbeSection:
    items: int = 8
    probe_t: float = 1.0


@dataclass(frozen=True)
class BenchSection:
    ns: Tuple[int, ...] = (8, 16, 32, 64)
    field_kind: str = "linear_decay"
    z0: float = 2.0


@dataclass(frozen=True)
class RunConfig:
    seed: int = 42
    model: ModelSection = field(default_factory=ModelSection)
    video: VideoSection = field(default_factory=VideoSection)
    solver: SolverSection = field(default_factory=SolverSection)
    policy: PolicySection = field(default_factory=PolicySection)
    edit: EditSection = field(default_factory=EditSection)
    probe: ProbeSection = field(default_factory=ProbeSection)
    bench: BenchSection = field(default_factory=BenchSection)


_SECTIONS = {
    "model": ModelSection,
    "video": VideoSection,
    "solver": SolverSection,
    "policy": PolicySection,
    "edit": EditSection,
    "probe": ProbeSection,
    "bench": BenchSection,
}


def _build_section(cls, data: dict, where: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    kwargs = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        value = data[f.name]
        if isinstance(value, list):
            value = tuple(value)
        kwargs[f.name] = value
    return cls(**kwargs)


def config_from_dict(data: dict) -> RunConfig:
    unknown = set(data) - set(_SECTIONS) - {"seed"}
    if unknown:
        raise ConfigError(f"unknown top-level config keys: {sorted(unknown)}")
    sections = {
        name: _build_section(cls, data.get(name, {}) or {}, name)
        for name, cls in _SECTIONS.items()
    }
    seed = data.get("seed", RunConfig.seed)
    if not isinstance(seed, int):
        raise ConfigError(f"seed must be an integer, got {seed!r}")
    return RunConfig(seed=seed, **sections)


def load_config(path: Optional[str] = None, seed_override: Optional[int] = None) -> RunConfig:
    """Config from a JSON file (or defaults), with an optional seed override."""
    if path is None:
        cfg = RunConfig()
    else:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"config root in {path} must be a JSON object")
        cfg = config_from_dict(data)
    if seed_override is not None:
        cfg = replace(cfg, seed=seed_override)
    return cfg


def resolve_k(policy: PolicySection, num_layers: int) -> int:
    """Concrete k: explicit value, or ceil(0.1 * layers) for "auto"/null."""
    k = policy.k
    if k is None or k == "auto":
        k = math.ceil(0.1 * num_layers)
    if not isinstance(k, int):
        raise ConfigError(f"k must be an integer or 'auto', got {k!r}")
    if not 0 <= k <= num_layers:
        raise ConfigError(f"k={k} outside [0, {num_layers}]")
    return k


def canonical_json(cfg: RunConfig) -> str:
    """Stable serialized form used for hashing and reports."""
    return json.dumps(asdict(cfg), sort_keys=True, separators=(",", ":"))


def config_hash(cfg: RunConfig) -> str:
    return hashlib.sha256(canonical_json(cfg).encode("utf-8")).hexdigest()
