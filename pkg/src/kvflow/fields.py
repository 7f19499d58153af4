"""Closed-form velocity fields used as solver oracles.

Each field ships the exact trajectory of dz/dt = v(z, t), so integration
error can be measured directly instead of against another solver.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .tensors import F32, as_f32

__all__ = ["AnalyticField"]

_KINDS = ("zero", "constant", "linear_decay", "time_poly")


class AnalyticField:
    """Analytic velocity field with a closed-form trajectory.

    Kinds:
      zero          v = 0           z(t1) = z0
      constant      v = c           z(t1) = z0 + c*(t1 - t0)
      linear_decay  v = -z          z(t1) = z0 * exp(t0 - t1)
      time_poly     v = t           z(t1) = z0 + (t1**2 - t0**2) / 2
    """

    def __init__(self, kind: str, c: float = 0.0):
        if kind not in _KINDS:
            raise ConfigError(f"unknown field kind {kind!r}, expected one of {_KINDS}")
        self.kind = kind
        self.c = float(c)

    @classmethod
    def zero(cls) -> "AnalyticField":
        return cls("zero")

    @classmethod
    def constant(cls, c: float) -> "AnalyticField":
        return cls("constant", c)

    @classmethod
    def linear_decay(cls) -> "AnalyticField":
        return cls("linear_decay")

    @classmethod
    def time_poly(cls) -> "AnalyticField":
        return cls("time_poly")

    def velocity(self, z, t: float) -> np.ndarray:
        z = as_f32(z)
        if self.kind == "zero":
            return np.zeros_like(z)
        if self.kind == "constant":
            return np.full_like(z, F32(self.c))
        if self.kind == "linear_decay":
            return -z
        return np.full_like(z, F32(t))

    def exact(self, z0, t0: float, t1: float) -> np.ndarray:
        """Reference trajectory value at t1, kept in float64."""
        z0 = np.asarray(z0, dtype=np.float64)
        if self.kind == "zero":
            return z0.copy()
        if self.kind == "constant":
            return z0 + self.c * (t1 - t0)
        if self.kind == "linear_decay":
            return z0 * np.exp(t0 - t1)
        return z0 + (t1 * t1 - t0 * t0) / 2.0

    def __repr__(self) -> str:
        extra = f", c={self.c}" if self.kind == "constant" else ""
        return f"AnalyticField({self.kind!r}{extra})"
