"""Raformer layer composition and the toy encoder/decoder around it."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from raformer.raa import redundancy_aware_attention, reverse_pack
from raformer.sfa import sfa_align
from raformer.tensor_core import DimensionError, conv2d, leaky_relu, upsample_nn2x
from raformer.transformer import transformer_block
from raformer.weights import CodecWeights, LayerWeights, ModelWeights

__all__ = ["LayerTrace", "raformer_layer", "encode_frames", "decode_features",
           "ForwardResult", "forward_clip"]


@dataclass
class LayerTrace:
    kept: list[list[int]]
    seconds: float


def raformer_layer(f_prev, lw: LayerWeights, trace: list | None = None) -> np.ndarray:
    """One layer: ``F_n = beta * SFA(RAA(F*)) + gamma * F*``.

    When `trace` is a list, a :class:`LayerTrace` with the kept window
    indices per frame is appended to it.
    """
    t0 = time.perf_counter()
    f_star = transformer_block(f_prev, lw)
    wnr = redundancy_aware_attention(f_star, lw)
    f_nr = sfa_align(reverse_pack(wnr), lw)
    beta = float(lw.beta[0])
    gamma = float(lw.gamma[0])
    out = (beta * f_nr.astype(np.float64) + gamma * f_star.astype(np.float64)).astype(np.float32)
    if trace is not None:
        trace.append(LayerTrace(wnr.kept.tolist(), time.perf_counter() - t0))
    return out


def _hole_mask(masks, frames_shape) -> np.ndarray:
    m = np.asarray(getattr(masks, "frames", masks))
    if m.shape != frames_shape[:3]:
        raise DimensionError(f"masks {m.shape} do not match clip {frames_shape}")
    return m != 0


def encode_frames(clip, masks, cw: CodecWeights) -> np.ndarray:
    """Blank hole pixels, then two stride-2 convolutions to C channels.

    `clip` holds 0..255 values, shape (T, H, W, 3); `masks` is 1 on holes.
    Pixels are mapped to [-1, 1] and holes set to 0 before the convolutions.
    """
    clip = np.asarray(clip, dtype=np.float32)
    if clip.ndim != 4 or clip.shape[-1] != 3:
        raise DimensionError(f"expected T x H x W x 3 clip, got {clip.shape}")
    hole = _hole_mask(masks, clip.shape)
    x = np.where(hole[..., None], np.float32(0), clip / np.float32(127.5) - 1)
    slope = cw.config.leaky_slope
    feats = []
    for frame in x:
        a = leaky_relu(conv2d(frame, cw.enc1_w, cw.enc1_b, stride=2), slope)
        feats.append(conv2d(a, cw.enc2_w, cw.enc2_b, stride=2))
    return np.stack(feats)


def decode_features(features, cw: CodecWeights) -> np.ndarray:
    """Two (nearest 2x upsample, conv) stages back to 0..255 RGB frames."""
    features = np.asarray(features, dtype=np.float32)
    slope = cw.config.leaky_slope
    frames = []
    for f in features:
        a = leaky_relu(conv2d(upsample_nn2x(f), cw.dec1_w, cw.dec1_b), slope)
        rgb = conv2d(upsample_nn2x(a), cw.dec2_w, cw.dec2_b)
        frames.append((np.tanh(rgb.astype(np.float64)) + 1.0) * 127.5)
    return np.stack(frames).astype(np.float32)


@dataclass
class ForwardResult:
    frames: np.ndarray
    traces: list[LayerTrace] = field(default_factory=list)


def forward_clip(clip, masks, model: ModelWeights) -> ForwardResult:
    """Encode -> stacked layers -> decode for one T-frame clip."""
    traces: list[LayerTrace] = []
    f = encode_frames(clip, masks, model.codec)
    for lw in model.layers:
        f = raformer_layer(f, lw, traces)
    return ForwardResult(decode_features(f, model.codec), traces)
