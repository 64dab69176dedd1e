"""Dense float32 kernels shared by every other module.

Tensors are plain ``numpy.ndarray`` objects of dtype ``float32``.  Reductions
accumulate in float64 and round back to float32 once, so results do not
depend on BLAS blocking of float32 partial sums.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

__all__ = [
    "DimensionError",
    "Rng",
    "as_tensor",
    "matmul",
    "softmax_lastdim",
    "layer_norm",
    "top_k_indices",
    "conv2d",
    "upsample_nn2x",
    "leaky_relu",
]

F32 = np.float32
F64 = np.float64


class DimensionError(ValueError):
    """Raised when operand shapes are incompatible."""


def as_tensor(x) -> np.ndarray:
    """Return `x` as a C-contiguous float32 array with all extents >= 1."""
    arr = np.ascontiguousarray(x, dtype=F32)
    if arr.ndim and min(arr.shape) < 1:
        raise DimensionError(f"tensor extents must be >= 1, got {arr.shape}")
    return arr


class Rng:
    """Seedable generator with pinned derivation rules.

    The bit source is PCG64 (``numpy.random.PCG64``), whose raw 64-bit
    output stream is fixed for a given seed on every platform.  Floats and
    bounded integers are derived from raw words here rather than through
    ``numpy.random.Generator`` methods, whose algorithms may change between
    numpy releases.

    * ``random()``: ``(word >> 11) * 2**-53``, uniform on [0, 1).
    * ``integers(lo, hi)``: inclusive range; rejection sampling on
      ``word < 2**64 - 2**64 % span`` then ``lo + word % span``.
    """

    def __init__(self, seed: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._bits = np.random.PCG64(self.seed)

    def spawn(self, *keys: int) -> "Rng":
        """Independent generator derived from this seed and integer keys."""
        ss = np.random.SeedSequence([self.seed, *(int(k) for k in keys)])
        child = Rng.__new__(Rng)
        child.seed = int(ss.generate_state(1, np.uint64)[0])
        child._bits = np.random.PCG64(child.seed)
        return child

    def raw(self, size: int | None = None):
        if size is None:
            return int(self._bits.random_raw())
        return np.asarray(self._bits.random_raw(size), dtype=np.uint64)

    def random(self, size: int | None = None):
        if size is None:
            return (self.raw() >> 11) * (1.0 / 9007199254740992.0)
        words = self.raw(size)
        return (words >> np.uint64(11)).astype(F64) * (1.0 / 9007199254740992.0)

    def uniform(self, low: float, high: float, size: int | None = None):
        u = self.random(size)
        return low + (high - low) * u

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in the closed range [low, high]."""
        if high < low:
            raise ValueError(f"empty range [{low}, {high}]")
        span = high - low + 1
        if span == 1 << 64:
            return low + self.raw()
        limit = (1 << 64) - ((1 << 64) % span)
        while True:
            word = self.raw()
            if word < limit:
                return low + word % span


def matmul(a, b) -> np.ndarray:
    """Batched matrix product, float64 accumulation rounded to float32."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return np.matmul(a.astype(F64), b.astype(F64)).astype(F32)


def softmax_lastdim(x) -> np.ndarray:
    x = np.asarray(x, dtype=F64)
    if x.shape[-1] < 1:
        raise DimensionError("softmax over an empty last dimension")
    z = np.exp(x - x.max(axis=-1, keepdims=True))
    return (z / z.sum(axis=-1, keepdims=True)).astype(F32)


def layer_norm(x, eps: float = 1e-5, weight=None, bias=None) -> np.ndarray:
    """Normalize over the last axis, optionally followed by an affine map."""
    x = np.asarray(x, dtype=F64)
    mu = x.mean(axis=-1, keepdims=True)
    var = ((x - mu) ** 2).mean(axis=-1, keepdims=True)
    y = (x - mu) / np.sqrt(var + eps)
    if weight is not None:
        y = y * np.asarray(weight, dtype=F64)
    if bias is not None:
        y = y + np.asarray(bias, dtype=F64)
    return y.astype(F32)


def top_k_indices(scores: Sequence[float], k: int) -> list[int]:
    """Indices of the `k` largest scores in ascending index order.

    Ties go to the lower index.
    """
    s = np.asarray(scores, dtype=F64).ravel()
    if not 1 <= k <= s.size:
        raise ValueError(f"k={k} outside [1, {s.size}]")
    order = np.argsort(-s, kind="stable")[:k]
    return sorted(int(i) for i in order)


def conv2d(x, kernel, bias, stride: int = 1) -> np.ndarray:
    """3x3 cross-correlation with zero padding 1.

    Parameters
    ----------
    x : array, shape (H, W, Cin)
    kernel : array, shape (3, 3, Cin, Cout)
    bias : array, shape (Cout,)
    stride : int
        1 keeps the spatial shape; 2 gives ``ceil(H/2) x ceil(W/2)``.
    """
    x = np.asarray(x)
    kernel = np.asarray(kernel)
    if x.ndim != 3:
        raise DimensionError(f"conv2d expects H x W x C input, got {x.shape}")
    if kernel.shape[:2] != (3, 3) or kernel.ndim != 4:
        raise DimensionError(f"conv2d expects a 3x3xCinxCout kernel, got {kernel.shape}")
    if kernel.shape[2] != x.shape[2]:
        raise DimensionError(
            f"channel mismatch: input {x.shape} vs kernel {kernel.shape}")
    H, W, _ = x.shape
    Ho = (H - 1) // stride + 1
    Wo = (W - 1) // stride + 1
    xp = np.pad(x.astype(F64), ((1, 1), (1, 1), (0, 0)))
    k64 = kernel.astype(F64)
    out = np.zeros((Ho, Wo, kernel.shape[3]), dtype=F64)
    for di in range(3):
        for dj in range(3):
            patch = xp[di:di + stride * (Ho - 1) + 1:stride,
                       dj:dj + stride * (Wo - 1) + 1:stride]
            out += patch @ k64[di, dj]
    out += np.asarray(bias, dtype=F64)
    return out.astype(F32)


def upsample_nn2x(x) -> np.ndarray:
    """Nearest-neighbour 2x upsampling of the two leading spatial axes."""
    x = np.asarray(x, dtype=F32)
    return np.repeat(np.repeat(x, 2, axis=-3), 2, axis=-2)


def leaky_relu(x, slope: float = 0.2) -> np.ndarray:
    x = np.asarray(x, dtype=F32)
    return np.where(x >= 0, x, x * F32(slope)).astype(F32)
