"""Parameter containers, deterministic initialization and the RAFW bundle format.

Bundle layout (little-endian)::

    b"RAFW" | u32 version | u32 config_len | config JSON (utf-8)
    then, until EOF, per tensor:
    u16 name_len | name | u8 rank | u32 extent * rank | f32 payload
"""

from __future__ import annotations

import dataclasses
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import numpy as np

from raformer.config import RaformerConfig
from raformer.tensor_core import Rng

__all__ = [
    "LayerWeights",
    "CodecWeights",
    "ModelWeights",
    "init_layer_weights",
    "init_codec_weights",
    "init_model_weights",
    "save_weights",
    "load_weights",
    "WeightFormatError",
]

MAGIC = b"RAFW"
VERSION = 1
INIT_SCALE = 0.02


class WeightFormatError(ValueError):
    pass


class _TensorBundle:
    """Mixin: iterate and rebuild the array fields of a dataclass."""

    def tensors(self) -> Iterator[tuple[str, np.ndarray]]:
        for f in dataclasses.fields(self):
            if f.name != "config":
                yield f.name, getattr(self, f.name)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class LayerWeights(_TensorBundle):
    """Every learnable tensor of one Raformer layer.

    The ``embed``/``unembed`` pair maps soft-split patches to attention
    tokens and back; ``lnq``/``lnk`` normalize window means for redundancy
    scoring; ``sfa_*`` and ``ss_proj`` belong to the alignment stage.
    """

    config: RaformerConfig
    ln1_w: np.ndarray
    ln1_b: np.ndarray
    embed_w: np.ndarray
    embed_b: np.ndarray
    q_w: np.ndarray
    q_b: np.ndarray
    k_w: np.ndarray
    k_b: np.ndarray
    v_w: np.ndarray
    v_b: np.ndarray
    o_w: np.ndarray
    o_b: np.ndarray
    unembed_w: np.ndarray
    unembed_b: np.ndarray
    ln2_w: np.ndarray
    ln2_b: np.ndarray
    ffn_w1: np.ndarray
    ffn_b1: np.ndarray
    ffn_w2: np.ndarray
    ffn_b2: np.ndarray
    lnq_w: np.ndarray
    lnq_b: np.ndarray
    lnk_w: np.ndarray
    lnk_b: np.ndarray
    sfa_conv1_w: np.ndarray
    sfa_conv1_b: np.ndarray
    sfa_conv2_w: np.ndarray
    sfa_conv2_b: np.ndarray
    ss_proj_w: np.ndarray
    ss_proj_b: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray


@dataclass(frozen=True)
class CodecWeights(_TensorBundle):
    """Toy encoder (two stride-2 convs) and decoder (two upsample+conv stages)."""

    config: RaformerConfig
    enc1_w: np.ndarray
    enc1_b: np.ndarray
    enc2_w: np.ndarray
    enc2_b: np.ndarray
    dec1_w: np.ndarray
    dec1_b: np.ndarray
    dec2_w: np.ndarray
    dec2_b: np.ndarray


@dataclass(frozen=True)
class ModelWeights:
    config: RaformerConfig
    codec: CodecWeights
    layers: tuple[LayerWeights, ...]


def _layer_shapes(cfg: RaformerConfig) -> dict[str, tuple[int, ...]]:
    C = cfg.C
    P = cfg.ss_kernel * cfg.ss_kernel * C
    Hf = cfg.ffn_ratio * C
    g = cfg.groups
    return {
        "ln1_w": (C,), "ln1_b": (C,),
        "embed_w": (P, C), "embed_b": (C,),
        "q_w": (C, C), "q_b": (C,),
        "k_w": (C, C), "k_b": (C,),
        "v_w": (C, C), "v_b": (C,),
        "o_w": (C, C), "o_b": (C,),
        "unembed_w": (C, P), "unembed_b": (P,),
        "ln2_w": (C,), "ln2_b": (C,),
        "ffn_w1": (C, Hf), "ffn_b1": (Hf,),
        "ffn_w2": (Hf, C), "ffn_b2": (C,),
        "lnq_w": (C,), "lnq_b": (C,),
        "lnk_w": (C,), "lnk_b": (C,),
        "sfa_conv1_w": (3, 3, g * C, C), "sfa_conv1_b": (C,),
        "sfa_conv2_w": (3, 3, C, C), "sfa_conv2_b": (C,),
        "ss_proj_w": (9 * C, C), "ss_proj_b": (C,),
        "beta": (1,), "gamma": (1,),
    }


def _codec_shapes(cfg: RaformerConfig) -> dict[str, tuple[int, ...]]:
    C = cfg.C
    return {
        "enc1_w": (3, 3, 3, C), "enc1_b": (C,),
        "enc2_w": (3, 3, C, C), "enc2_b": (C,),
        "dec1_w": (3, 3, C, C), "dec1_b": (C,),
        "dec2_w": (3, 3, C, 3), "dec2_b": (3,),
    }


def _draw(rng: Rng, shape) -> np.ndarray:
    size = int(np.prod(shape))
    return rng.uniform(-INIT_SCALE, INIT_SCALE, size).astype(np.float32).reshape(shape)


def init_layer_weights(cfg: RaformerConfig, index: int = 0) -> LayerWeights:
    """Layer `index` weights, drawn from a stream keyed by (seed, index).

    Layer-norm scales start at 1 and shifts at 0; everything else is uniform
    in [-0.02, 0.02].  ``beta``/``gamma`` come from the config.
    """
    rng = Rng(cfg.seed).spawn(1, index)
    arrays = {}
    for name, shape in _layer_shapes(cfg).items():
        if name.startswith("ln") and name.endswith("_w"):
            arrays[name] = np.ones(shape, np.float32)
        elif name.startswith("ln") and name.endswith("_b"):
            arrays[name] = np.zeros(shape, np.float32)
        elif name == "beta":
            arrays[name] = np.full(shape, cfg.beta, np.float32)
        elif name == "gamma":
            arrays[name] = np.full(shape, cfg.gamma, np.float32)
        else:
            arrays[name] = _draw(rng, shape)
    return LayerWeights(config=cfg, **arrays)


def init_codec_weights(cfg: RaformerConfig) -> CodecWeights:
    rng = Rng(cfg.seed).spawn(0)
    arrays = {name: _draw(rng, shape) for name, shape in _codec_shapes(cfg).items()}
    return CodecWeights(config=cfg, **arrays)


def init_model_weights(cfg: RaformerConfig) -> ModelWeights:
    return ModelWeights(
        config=cfg,
        codec=init_codec_weights(cfg),
        layers=tuple(init_layer_weights(cfg, i) for i in range(cfg.layers)),
    )


def _named_tensors(model: ModelWeights) -> Iterator[tuple[str, np.ndarray]]:
    for name, arr in model.codec.tensors():
        yield f"codec.{name}", arr
    for i, layer in enumerate(model.layers):
        for name, arr in layer.tensors():
            yield f"layer{i}.{name}", arr


def save_weights(model: ModelWeights, path) -> None:
    cfg_bytes = json.dumps(model.config.to_dict(), sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(cfg_bytes)))
        fh.write(cfg_bytes)
        for name, arr in _named_tensors(model):
            raw = name.encode()
            arr = np.ascontiguousarray(arr, dtype="<f4")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_weights(path) -> ModelWeights:
    buf = Path(path).read_bytes()
    if buf[:4] != MAGIC:
        raise WeightFormatError("bad magic at offset 0")
    version, cfg_len = struct.unpack_from("<II", buf, 4)
    if version != VERSION:
        raise WeightFormatError(f"unsupported version {version} at offset 4")
    pos = 12
    cfg = RaformerConfig.from_dict(json.loads(buf[pos:pos + cfg_len]))
    pos += cfg_len
    named: dict[str, np.ndarray] = {}
    try:
        while pos < len(buf):
            (nlen,) = struct.unpack_from("<H", buf, pos)
            pos += 2
            name = buf[pos:pos + nlen].decode()
            pos += nlen
            (rank,) = struct.unpack_from("<B", buf, pos)
            pos += 1
            shape = struct.unpack_from(f"<{rank}I", buf, pos)
            pos += 4 * rank
            count = int(np.prod(shape))
            if pos + 4 * count > len(buf):
                raise WeightFormatError(f"truncated payload for {name!r} at offset {pos}")
            named[name] = np.frombuffer(buf, "<f4", count, pos).astype(np.float32).reshape(shape)
            pos += 4 * count
    except struct.error as exc:
        raise WeightFormatError(f"truncated record at offset {pos}") from exc

    def take(prefix: str, shapes: dict) -> dict:
        out = {}
        for key, shape in shapes.items():
            full = f"{prefix}.{key}"
            if full not in named:
                raise WeightFormatError(f"missing tensor {full!r}")
            if named[full].shape != shape:
                raise WeightFormatError(
                    f"{full!r} has shape {named[full].shape}, expected {shape}")
            out[key] = named[full]
        return out

    codec = CodecWeights(config=cfg, **take("codec", _codec_shapes(cfg)))
    layers = tuple(
        LayerWeights(config=cfg, **take(f"layer{i}", _layer_shapes(cfg)))
        for i in range(cfg.layers))
    return ModelWeights(config=cfg, codec=codec, layers=layers)
