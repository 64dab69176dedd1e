"""Soft feature alignment: packed kept windows back to a full feature map."""

from __future__ import annotations

import numpy as np

from raformer.tensor_core import DimensionError, conv2d, leaky_relu, matmul, upsample_nn2x
from raformer.patches import soft_split
from raformer.weights import LayerWeights

__all__ = ["sfa_align"]


def sfa_align(f_alpha, lw: LayerWeights) -> np.ndarray:
    """Map ``(g, T, H/8, W/8, C)`` packed windows to ``(T, H/4, W/4, C)``.

    Groups are composited into channels, upsampled 2x, passed through
    conv -> leaky ReLU -> conv, and finally every pixel's 3x3 neighbourhood
    (soft split, stride 1) is projected back to ``C`` channels.
    """
    f_alpha = np.asarray(f_alpha, dtype=np.float32)
    cfg = lw.config
    if f_alpha.ndim != 5 or f_alpha.shape[-1] != cfg.C:
        raise DimensionError(f"expected g x T x H x W x {cfg.C}, got {f_alpha.shape}")
    g, T, H8, W8, C = f_alpha.shape
    if lw.sfa_conv1_w.shape[2] != g * C:
        raise DimensionError(
            f"{g} groups do not match conv input of {lw.sfa_conv1_w.shape[2]} channels")
    stacked = f_alpha.transpose(1, 2, 3, 0, 4).reshape(T, H8, W8, g * C)
    up = upsample_nn2x(stacked)
    out = np.empty((T, 2 * H8, 2 * W8, C), dtype=np.float32)
    for t in range(T):
        a = conv2d(up[t], lw.sfa_conv1_w, lw.sfa_conv1_b)
        out[t] = conv2d(leaky_relu(a, cfg.leaky_slope), lw.sfa_conv2_w, lw.sfa_conv2_b)
    tok = soft_split(out, 3, 1, 1)
    proj = matmul(tok, lw.ss_proj_w) + lw.ss_proj_b
    return proj.reshape(T, 2 * H8, 2 * W8, C).astype(np.float32)
