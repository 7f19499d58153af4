"""Dense float32 tensor kernels and deterministic randomness.

All public arrays in this package are numpy ``float32``; reductions inside
the kernels may widen to float64 where that buys exactness (softmax,
normalization statistics, cosine). The only stateful object is :class:`Rng`.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import NumericError, ShapeError

F32 = np.float32

__all__ = [
    "F32",
    "Rng",
    "as_f32",
    "cosine_similarity",
    "layer_norm",
    "matmul",
    "seeded_gaussian",
    "softmax_rows",
]


def as_f32(x) -> np.ndarray:
    """Coerce ``x`` to a float32 ndarray (no copy when already float32)."""
    return np.asarray(x, dtype=F32)


def matmul(a, b) -> np.ndarray:
    """Product of a ``[m, k]`` by a ``[k, n]`` matrix."""
    a = as_f32(a)
    b = as_f32(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions disagree: {a.shape} x {b.shape}")
    return a @ b


def softmax_rows(m) -> np.ndarray:
    """Row-wise softmax with per-row max subtraction.

    Rows sum to 1 within 1e-6. Accumulation happens in float64 so that
    duplicated rows of keys produce exactly halved weights.
    """
    m = as_f32(m)
    if m.ndim != 2:
        raise ShapeError(f"softmax_rows expects a 2-D tensor, got shape {m.shape}")
    if m.shape[1] == 0:
        raise ShapeError(f"softmax_rows over empty rows, shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError("softmax_rows requires finite entries")
    z = m.astype(np.float64)
    z -= z.max(axis=1, keepdims=True)
    e = np.exp(z)
    w = e / e.sum(axis=1, keepdims=True)
    return w.astype(F32)


def layer_norm(x, eps: float = 1e-5) -> np.ndarray:
    """Normalize the last axis to mean 0, variance 1 (no affine term).

    Statistics are computed in float64; ``eps`` >= 0 is added to the
    variance before the square root.
    """
    x = as_f32(x)
    if x.ndim < 1 or x.shape[-1] < 1:
        raise ShapeError(f"layer_norm needs a non-empty last axis, got shape {x.shape}")
    if eps < 0:
        raise ShapeError(f"layer_norm eps must be >= 0, got {eps}")
    z = x.astype(np.float64)
    mean = z.mean(axis=-1, keepdims=True)
    var = z.var(axis=-1, keepdims=True)
    return ((z - mean) / np.sqrt(var + eps)).astype(F32)


def cosine_similarity(a, b) -> float:
    """Cosine of two equal-length vectors, clipped to [-1, 1].

    Returns 0.0 when either norm is below 1e-12 (dead-activation
    convention).
    """
    a = as_f32(a)
    b = as_f32(b)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ShapeError(f"cosine_similarity expects equal-length vectors, got {a.shape} and {b.shape}")
    if a.shape[0] < 1:
        raise ShapeError("cosine_similarity needs at least one element")
    af = a.astype(np.float64)
    bf = b.astype(np.float64)
    na = math.sqrt(float(af @ af))
    nb = math.sqrt(float(bf @ bf))
    if na < 1e-12 or nb < 1e-12:
        return 0.0
    return float(np.clip(float(af @ bf) / (na * nb), -1.0, 1.0))


_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


class Rng:
    """Counter-based deterministic generator (splitmix64).

    The raw 64-bit stream for draw index ``n`` (1-based) is::

        s   = (seed + n * 0x9E3779B97F4A7C15)  mod 2**64
        s   = (s ^ (s >> 30)) * 0xBF58476D1CE4E5B9  mod 2**64
        s   = (s ^ (s >> 27)) * 0x94D049BB133111EB  mod 2**64
        out =  s ^ (s >> 31)

    Uniforms in [0, 1) take the top 53 bits: ``(out >> 11) * 2**-53``.
    Gaussians apply Box-Muller to consecutive uniform pairs (u1, u2)::

        r  = sqrt(-2 * ln(1 - u1))      # 1 - u1 in (0, 1], never 0
        g0 = r * cos(2*pi*u2)
        g1 = r * sin(2*pi*u2)

    evaluated in float64 and rounded to float32. The integer stream is
    bit-exact on every platform; sqrt is IEEE-exact and the remaining
    libm calls agree to <= 1 ulp in float64, which the float32 rounding
    absorbs. Both streams are pinned by golden files in the test suite.

    A ``gaussian`` call for ``n`` values consumes ``2 * ceil(n / 2)``
    raw draws. Instances are not safe for unsynchronized concurrent use.
    """

    def __init__(self, seed: int):
        self._seed = np.uint64(int(seed) % (1 << 64))
        self._counter = 0

    @property
    def seed(self) -> int:
        return int(self._seed)

    def raw(self, n: int) -> np.ndarray:
        """Next ``n`` outputs of the 64-bit stream as uint64."""
        if n < 0:
            raise ShapeError(f"cannot draw {n} values")
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        s = self._seed + idx * _GAMMA
        s = (s ^ (s >> np.uint64(30))) * _MIX1
        s = (s ^ (s >> np.uint64(27))) * _MIX2
        return s ^ (s >> np.uint64(31))

    def uniform(self, n: int) -> np.ndarray:
        """``n`` float64 uniforms in [0, 1)."""
        return (self.raw(n) >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)

    def gaussian(self, shape) -> np.ndarray:
        """Float32 tensor of i.i.d. N(0, 1) draws with the given shape."""
        shape = tuple(int(d) for d in np.atleast_1d(np.asarray(shape, dtype=np.int64)))
        if any(d < 0 for d in shape):
            raise ShapeError(f"negative extent in shape {shape}")
        n = int(np.prod(shape, dtype=np.int64)) if shape else 1
        if n == 0:
            return np.zeros(shape, dtype=F32)
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        theta = (2.0 * np.pi) * u[1::2]
        out = np.empty(2 * pairs, dtype=np.float64)
        out[0::2] = r * np.cos(theta)
        out[1::2] = r * np.sin(theta)
        return out[:n].astype(F32).reshape(shape)


def seeded_gaussian(shape, rng: Rng) -> np.ndarray:
    """Draw a float32 N(0, 1) tensor from ``rng`` (see :meth:`Rng.gaussian`)."""
    return rng.gaussian(shape)
