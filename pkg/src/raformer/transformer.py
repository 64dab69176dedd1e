"""Pre-norm transformer sub-block applied before redundancy scoring.

Attention is dense multi-head self-attention over soft-split tokens of all
frames jointly.  Patches of ``ss_kernel x ss_kernel`` feature pixels are
linearly embedded to ``C`` dimensions, attended, projected back to patch
space and folded with overlap averaging.
"""

from __future__ import annotations

import numpy as np

from raformer.patches import soft_composite, soft_split
from raformer.tensor_core import DimensionError, layer_norm, matmul, softmax_lastdim
from raformer.weights import LayerWeights

__all__ = ["gelu", "multi_head_attention", "patch_attention", "feed_forward",
           "transformer_block"]


def gelu(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    y = 0.5 * x * (1.0 + np.tanh(0.7978845608028654 * (x + 0.044715 * x ** 3)))
    return y.astype(np.float32)


def multi_head_attention(tokens, lw: LayerWeights) -> np.ndarray:
    """Scaled dot-product attention over a (N, C) token matrix."""
    heads = lw.config.heads
    N, C = tokens.shape
    d = C // heads
    q = matmul(tokens, lw.q_w) + lw.q_b
    k = matmul(tokens, lw.k_w) + lw.k_b
    v = matmul(tokens, lw.v_w) + lw.v_b
    out = np.empty((N, C), dtype=np.float32)
    scale = np.float32(1.0 / np.sqrt(d))
    for hd in range(heads):
        sl = slice(hd * d, (hd + 1) * d)
        aw = softmax_lastdim(matmul(q[:, sl] * scale, k[:, sl].T))
        out[:, sl] = matmul(aw, v[:, sl])
    return matmul(out, lw.o_w) + lw.o_b


def patch_attention(x, lw: LayerWeights) -> np.ndarray:
    """Soft split -> embed -> attention -> unembed -> soft composite."""
    cfg = lw.config
    T, H, W, C = x.shape
    tok = soft_split(x, cfg.ss_kernel, cfg.ss_stride, cfg.ss_pad)
    N, P = tok.shape[1], tok.shape[2]
    emb = matmul(tok.reshape(T * N, P), lw.embed_w) + lw.embed_b
    att = multi_head_attention(emb, lw)
    back = matmul(att, lw.unembed_w) + lw.unembed_b
    return soft_composite(back.reshape(T, N, P), (H, W),
                          cfg.ss_kernel, cfg.ss_stride, cfg.ss_pad)


def feed_forward(x, lw: LayerWeights) -> np.ndarray:
    hidden = gelu(matmul(x, lw.ffn_w1) + lw.ffn_b1)
    return matmul(hidden, lw.ffn_w2) + lw.ffn_b2


def transformer_block(f_prev, lw: LayerWeights) -> np.ndarray:
    """``F' = MSA(LN1(F)) + F``; ``F* = FFN(LN2(F')) + F'``.

    Only the channel extent is checked against the config, so the block also
    runs on grids smaller than the configured frame size.
    """
    f_prev = np.asarray(f_prev, dtype=np.float32)
    cfg = lw.config
    if f_prev.ndim != 4 or f_prev.shape[-1] != cfg.C:
        raise DimensionError(f"expected T x H x W x {cfg.C} features, got {f_prev.shape}")
    eps = cfg.ln_eps
    f1 = patch_attention(layer_norm(f_prev, eps, lw.ln1_w, lw.ln1_b), lw) + f_prev
    f_star = feed_forward(layer_norm(f1, eps, lw.ln2_w, lw.ln2_b), lw) + f1
    return f_star.astype(np.float32)
