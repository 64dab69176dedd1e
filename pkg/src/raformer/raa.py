"""Redundancy-aware attention: window scoring and top-k window selection.

Features are cut into ``h x w`` windows, each window is summarised by its
mean vector, and the means of *all* frames attend to each other.  A window's
importance is the attention it receives (column sum of the attention
matrix); each frame keeps its ``k`` most important windows.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from raformer.config import ConfigError
from raformer.tensor_core import DimensionError, layer_norm, matmul, softmax_lastdim
from raformer.weights import LayerWeights

__all__ = [
    "WindowSet",
    "window_partition",
    "window_merge",
    "window_attention",
    "window_importance",
    "select_topk_windows",
    "reverse_pack",
    "redundancy_aware_attention",
]


@dataclass(frozen=True)
class WindowSet:
    """Windowed features of a clip.

    windows : (T, n, h*w, C) array, windows in row-major grid order.
    grid : (rows, cols) of the window grid.
    window : (h, w) window extent.
    kept : (T, k) ascending kept indices per frame, or None before selection.
    selected : (T, k, h*w, C) kept windows, or None before selection.
    """

    windows: np.ndarray
    grid: tuple[int, int]
    window: tuple[int, int]
    kept: np.ndarray | None = None
    selected: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.grid[0] * self.grid[1]

    @property
    def feature_shape(self) -> tuple[int, int]:
        return self.grid[0] * self.window[0], self.grid[1] * self.window[1]


def window_partition(f_star, h: int, w: int) -> WindowSet:
    f_star = np.asarray(f_star, dtype=np.float32)
    if f_star.ndim != 4:
        raise DimensionError(f"expected T x H x W x C features, got {f_star.shape}")
    T, H, W, C = f_star.shape
    if h < 1 or w < 1 or H % h or W % w:
        raise ValueError(f"window {h}x{w} does not tile a {H}x{W} grid")
    rows, cols = H // h, W // w
    win = f_star.reshape(T, rows, h, cols, w, C).transpose(0, 1, 3, 2, 4, 5)
    return WindowSet(np.ascontiguousarray(win).reshape(T, rows * cols, h * w, C),
                     (rows, cols), (h, w))


def window_merge(ws: WindowSet) -> np.ndarray:
    """Inverse of :func:`window_partition`."""
    T, _, _, C = ws.windows.shape
    rows, cols = ws.grid
    h, w = ws.window
    f = ws.windows.reshape(T, rows, cols, h, w, C).transpose(0, 1, 3, 2, 4, 5)
    return np.ascontiguousarray(f).reshape(T, rows * h, cols * w, C)


def window_attention(ws: WindowSet, lw: LayerWeights) -> np.ndarray:
    """Attention weights between window means of all frames, (T*n, T*n)."""
    T, n, _, C = ws.windows.shape
    means = ws.windows.astype(np.float64).mean(axis=2).reshape(T * n, C)
    eps = lw.config.ln_eps
    q = layer_norm(means, eps, lw.lnq_w, lw.lnq_b)
    k = layer_norm(means, eps, lw.lnk_w, lw.lnk_b)
    return softmax_lastdim(matmul(q, k.T))


def window_importance(ws: WindowSet, lw: LayerWeights) -> np.ndarray:
    """Attention received by each window, shape (T, n); sums to T*n."""
    T, n = ws.windows.shape[:2]
    aw = window_attention(ws, lw)
    return aw.astype(np.float64).sum(axis=0).reshape(T, n).astype(np.float32)


def select_topk_windows(ws: WindowSet, scores, k: int) -> WindowSet:
    scores = np.asarray(scores)
    T, n = ws.windows.shape[:2]
    if scores.shape != (T, n):
        raise DimensionError(f"scores {scores.shape} do not match {T} x {n} windows")
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside [1, {n}]")
    # stable sort on negated scores: ties keep the lower index first
    order = np.argsort(-scores.astype(np.float64), axis=1, kind="stable")[:, :k]
    kept = np.sort(order, axis=1)
    selected = np.take_along_axis(ws.windows, kept[:, :, None, None], axis=1)
    return replace(ws, kept=kept, selected=selected)


def reverse_pack(wnr: WindowSet) -> np.ndarray:
    """Pack kept windows into ``(g, T, H/8, W/8, C)`` with ``g = 4k/n``.

    Kept windows of each frame are laid end to end (ascending index, row-major
    inside each window) and written row-major over ``g`` half-resolution
    maps.  When ``4k < n`` the sequence is repeated cyclically to fill one map.
    """
    if wnr.selected is None:
        raise ValueError("window set has no selection; run select_topk_windows first")
    T, k, hw, C = wnr.selected.shape
    n = wnr.n
    H4, W4 = wnr.feature_shape
    if H4 % 2 or W4 % 2:
        raise ConfigError(f"feature grid {H4}x{W4} cannot be halved")
    H8, W8 = H4 // 2, W4 // 2
    flat = wnr.selected.reshape(T, k * hw, C)
    if 4 * k < n:
        g = 1
        reps = np.arange(H8 * W8) % (k * hw)
        flat = flat[:, reps]
    elif (4 * k) % n == 0:
        g = 4 * k // n
    else:
        raise ConfigError(f"4k/n = {4 * k}/{n} is neither an integer nor below 1")
    packed = flat.reshape(T, g, H8, W8, C)
    return np.ascontiguousarray(packed.transpose(1, 0, 2, 3, 4))


def redundancy_aware_attention(f_star, lw: LayerWeights) -> WindowSet:
    cfg = lw.config
    ws = window_partition(f_star, cfg.h, cfg.w)
    scores = window_importance(ws, lw)
    return select_topk_windows(ws, scores, cfg.kept)
