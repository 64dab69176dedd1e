"""Overlapping patch extraction (soft split) and its overlap-add inverse."""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from raformer.tensor_core import DimensionError

__all__ = ["patch_grid", "soft_split", "soft_composite"]


def patch_grid(height: int, width: int, kernel: int, stride: int, pad: int) -> tuple[int, int]:
    """Number of patch rows and columns for a feature map."""
    if kernel <= 0 or stride <= 0:
        raise ValueError(f"kernel and stride must be positive, got {kernel}, {stride}")
    if pad < 0:
        raise ValueError(f"pad must be >= 0, got {pad}")
    rows = (height + 2 * pad - kernel) // stride + 1
    cols = (width + 2 * pad - kernel) // stride + 1
    if rows < 1 or cols < 1:
        raise DimensionError(
            f"kernel {kernel} does not fit a {height}x{width} map with pad {pad}")
    return rows, cols


def soft_split(feature, kernel: int, stride: int, pad: int) -> np.ndarray:
    """Extract zero-padded ``kernel x kernel`` patches.

    ``feature`` has shape ``(T, H, W, C)``; the result has shape
    ``(T, N_tok, kernel*kernel*C)`` with tokens in row-major patch order and
    each token flattened as (row, col, channel).
    """
    feature = np.asarray(feature, dtype=np.float32)
    if feature.ndim != 4:
        raise DimensionError(f"soft_split expects T x H x W x C, got {feature.shape}")
    T, H, W, C = feature.shape
    rows, cols = patch_grid(H, W, kernel, stride, pad)
    xp = np.pad(feature, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
    win = sliding_window_view(xp, (kernel, kernel), axis=(1, 2))
    win = win[:, ::stride, ::stride][:, :rows, :cols]
    # (T, rows, cols, C, kh, kw) -> (T, rows, cols, kh, kw, C)
    win = win.transpose(0, 1, 2, 4, 5, 3)
    return np.ascontiguousarray(win).reshape(T, rows * cols, kernel * kernel * C)


def soft_composite(tokens, out_shape: tuple[int, int], kernel: int, stride: int,
                   pad: int) -> np.ndarray:
    """Fold tokens back onto an ``out_shape`` grid and average overlaps.

    Each pixel is divided by the number of patches covering it, so
    ``soft_composite(soft_split(F)) == F``.  Pixels no patch covers are 0.
    """
    tokens = np.asarray(tokens)
    H, W = out_shape
    rows, cols = patch_grid(H, W, kernel, stride, pad)
    if tokens.ndim != 3 or tokens.shape[1] != rows * cols or tokens.shape[2] % (kernel * kernel):
        raise DimensionError(
            f"tokens {tokens.shape} do not match a {rows}x{cols} grid of "
            f"{kernel}x{kernel} patches")
    T = tokens.shape[0]
    C = tokens.shape[2] // (kernel * kernel)
    patches = tokens.astype(np.float64).reshape(T, rows, cols, kernel, kernel, C)
    Hp, Wp = H + 2 * pad, W + 2 * pad
    acc = np.zeros((T, Hp, Wp, C))
    count = np.zeros((Hp, Wp))
    span_r = stride * (rows - 1) + 1
    span_c = stride * (cols - 1) + 1
    for i in range(kernel):
        for j in range(kernel):
            acc[:, i:i + span_r:stride, j:j + span_c:stride] += patches[:, :, :, i, j]
            count[i:i + span_r:stride, j:j + span_c:stride] += 1
    acc = acc[:, pad:pad + H, pad:pad + W]
    count = count[pad:pad + H, pad:pad + W]
    out = np.divide(acc, np.maximum(count, 1)[None, :, :, None])
    return out.astype(np.float32)
