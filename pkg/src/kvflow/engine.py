"""Dual-path denoising with per-step K/V context enrichment.

The reconstruction path denoises the shared noise anchor under the
source conditioning and captures every layer's K/V at each solver
evaluation. The editing path runs in lockstep, one solver step behind
nothing: step i of the edit consumes exactly the K/V captured by step i
of the reconstruction, restricted to the vital layers and to the active
step window. Per-step caches are dropped once consumed, so memory stays
O(layers) rather than O(steps x layers).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set, Tuple

import numpy as np

from .dit import (
    AttentionTap,
    Conditioning,
    DiTWeights,
    KVPair,
    forward_velocity,
    null_prompt_like,
)
from .errors import ConfigError
from .solver import SAMPLE, INVERT, SolverSchedule, cfg_velocity, integrate, step_function
from .tensors import as_f32

__all__ = [
    "EditSession",
    "EnrichmentPolicy",
    "KVCache",
    "guidance_active",
    "invert_source",
    "run_dual_path",
    "single_path",
]


@dataclass(frozen=True)
class EnrichmentPolicy:
    """Which layers to enrich, for how much of the schedule, at what CFG scale."""

    vital_layers: Tuple[int, ...] = ()
    tau: float = 0.5
    guidance_scale: float = 3.0

    def __post_init__(self):
        layers = tuple(sorted(set(int(l) for l in self.vital_layers)))
        object.__setattr__(self, "vital_layers", layers)
        if layers and layers[0] < 0:
            raise ConfigError(f"negative layer index in {layers}")
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau={self.tau} outside [0, 1]")

    def check_against(self, num_layers: int) -> None:
        bad = [l for l in self.vital_layers if l >= num_layers]
        if bad:
            raise ConfigError(f"vital layers {bad} out of range for {num_layers}-layer model")


class KVCache:
    """Per-step, per-evaluation, per-layer K/V store with a consumption log.

    ``put_step`` records the K/V lists captured by each solver evaluation
    of one reconstruction step; ``fetch`` returns the context for one
    editing evaluation and logs the (step, layer) keys it handed out.
    A fetch for a missing key is an internal invariant violation and
    raises rather than silently skipping.
    """

    def __init__(self):
        self._store: Dict[int, List[List[KVPair]]] = {}
        self.consumed: Set[Tuple[int, int]] = set()

    def put_step(self, step: int, evals: List[List[KVPair]]) -> None:
        self._store[step] = evals

    def fetch(self, step: int, eval_idx: int, layers: Tuple[int, ...]) -> Dict[int, KVPair]:
        evals = self._store.get(step)
        if evals is None or eval_idx >= len(evals):
            raise RuntimeError(
                f"internal invariant violation: no reconstruction K/V for step {step}, "
                f"evaluation {eval_idx}"
            )
        per_layer = evals[eval_idx]
        context: Dict[int, KVPair] = {}
        for l in layers:
            if l >= len(per_layer):
                raise RuntimeError(
                    f"internal invariant violation: layer {l} missing from step-{step} cache"
                )
            context[l] = per_layer[l]
            self.consumed.add((step, l))
        return context

    def drop_step(self, step: int) -> None:
        self._store.pop(step, None)

    @property
    def fired_steps(self) -> List[int]:
        """Sorted step indices at which enrichment consumed any context."""
        return sorted({s for s, _ in self.consumed})

    @property
    def live_steps(self) -> List[int]:
        return sorted(self._store)


@dataclass(frozen=True)
class EditSession:
    """Everything one dual-path run needs; both paths share anchor and schedule."""

    anchor: np.ndarray
    src_cond: Conditioning
    edit_cond: Conditioning
    policy: EnrichmentPolicy
    schedule: SolverSchedule

    def __post_init__(self):
        object.__setattr__(self, "anchor", as_f32(self.anchor))
        if self.schedule.direction != SAMPLE:
            raise ConfigError("edit sessions need a sample-direction schedule")


def guidance_active(step_index: int, n_steps: int, tau: float) -> bool:
    """True for the first floor(tau * n_steps) denoising steps."""
    if not 0 <= step_index < n_steps:
        raise ConfigError(f"step index {step_index} outside [0, {n_steps})")
    return step_index < math.floor(tau * n_steps)


def invert_source(
    weights: DiTWeights,
    video,
    src_cond: Conditioning,
    schedule_invert: SolverSchedule,
) -> np.ndarray:
    """Integrate the source video from t=0 to t=1 to get the noise anchor."""
    if schedule_invert.direction != INVERT:
        raise ConfigError("inversion needs an invert-direction schedule")
    if not src_cond.is_null_prompt:
        raise ConfigError("source conditioning must carry the null prompt")

    def v_fn(z, t):
        return forward_velocity(weights, z, t, src_cond)

    return integrate(as_f32(video), v_fn, schedule_invert)


def _guided_velocity(
    weights: DiTWeights,
    z: np.ndarray,
    t: float,
    cond: Conditioning,
    scale: float,
    context: Optional[Dict[int, KVPair]],
) -> np.ndarray:
    """One editing-path velocity: enriched forward plus classifier-free guidance.

    The unconditioned branch zeroes the prompt but keeps the frame
    conditioning and the same enrichment context. When the prompt is
    already null (or scale is 1) the combination is an exact no-op, so
    the second forward pass is skipped.
    """

    def run(c: Conditioning) -> np.ndarray:
        tap = AttentionTap.enrich(context) if context else AttentionTap.off()
        return forward_velocity(weights, z, t, c, tap)

    v_cond = run(cond)
    if scale == 1.0 or cond.is_null_prompt:
        return v_cond
    v_uncond = run(null_prompt_like(cond))
    return cfg_velocity(v_cond, v_uncond, scale)


def single_path(
    anchor,
    cond: Conditioning,
    weights: DiTWeights,
    schedule: SolverSchedule,
    guidance_scale: float = 3.0,
) -> np.ndarray:
    """Plain conditioned denoising from the anchor (no enrichment)."""
    if schedule.direction != SAMPLE:
        raise ConfigError("single_path needs a sample-direction schedule")

    def v_fn(z, t):
        return _guided_velocity(weights, z, t, cond, guidance_scale, None)

    return integrate(as_f32(anchor), v_fn, schedule)


def run_dual_path(
    session: EditSession, weights: DiTWeights
) -> Tuple[np.ndarray, np.ndarray, KVCache]:
    """Lockstep reconstruction + editing denoising from the shared anchor.

    For each step i the reconstruction path advances first, capturing
    per-layer K/V at each of its solver evaluations; the editing path
    then advances using that step's cache at the vital layers while the
    step window is active. Returns (reconstruction, edited, cache); the
    cache retains the consumption log for instrumentation.
    """
    policy = session.policy
    policy.check_against(weights.config.num_layers)
    schedule = session.schedule
    n = schedule.n_steps
    step = step_function(schedule.order)
    cache = KVCache()
    expected: Set[Tuple[int, int]] = set()

    z_rec = session.anchor
    z_edit = session.anchor
    for i, (t_cur, t_next) in enumerate(schedule.pairs()):
        evals: List[List[KVPair]] = []

        def v_rec(z, t):
            tap = AttentionTap.capture_kv()
            v = forward_velocity(weights, z, t, session.src_cond, tap)
            evals.append(tap.captured_kv)
            return v

        z_rec = step(z_rec, v_rec, t_cur, t_next)
        cache.put_step(i, evals)

        active = bool(policy.vital_layers) and guidance_active(i, n, policy.tau)
        eval_idx = [0]

        def v_edit(z, t):
            j = eval_idx[0]
            eval_idx[0] += 1
            ctx = cache.fetch(i, j, policy.vital_layers) if active else None
            return _guided_velocity(
                weights, z, t, session.edit_cond, policy.guidance_scale, ctx
            )

        z_edit = step(z_edit, v_edit, t_cur, t_next)
        if active:
            expected.update((i, l) for l in policy.vital_layers)
        cache.drop_step(i)

    if cache.consumed != expected:
        raise RuntimeError(
            "internal invariant violation: cache consumption "
            f"{sorted(cache.consumed)} != expected {sorted(expected)}"
        )
    return z_rec, z_edit, cache
