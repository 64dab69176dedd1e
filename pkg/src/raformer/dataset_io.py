"""Netpbm frame/mask codecs, clip loading and JSONL clip manifests.

On-disk layout::

    <frames_dir>/00001.ppm 00002.ppm ...
    <masks_dir>/00001.pgm  00002.pgm ...   (255 = hole, 0 = valid)
    manifest.jsonl                          one ClipManifestEntry per line
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from raformer.mask_synth import MaskSequence

__all__ = [
    "FormatError",
    "ManifestError",
    "ClipIOError",
    "decode_image",
    "encode_image",
    "decode_mask",
    "encode_mask",
    "read_image",
    "write_image",
    "write_mask_sequence",
    "resize_nearest",
    "ClipManifestEntry",
    "Clip",
    "load_clip",
    "load_mask_sequence",
    "load_manifest",
    "write_manifest",
    "numbered_files",
]

SPLITS = ("train", "test")
MASK_KINDS = ("authentic", "pws", "pp")


class FormatError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class ManifestError(ValueError):
    pass


class ClipIOError(OSError):
    pass


def _header_token(buf: bytes, pos: int) -> tuple[bytes, int, int]:
    n = len(buf)
    while pos < n:
        ch = buf[pos:pos + 1]
        if ch == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace() and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FormatError("truncated header", start)
    return buf[start:pos], start, pos


def decode_image(data: bytes) -> np.ndarray:
    """Decode binary P5 (gray, HxW) or P6 (RGB, HxWx3) with maxval 255."""
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"bad magic {magic!r}", 0)
    pos = 2
    fields = []
    for _ in range(3):
        tok, start, pos = _header_token(data, pos)
        if not tok.isdigit():
            raise FormatError(f"non-numeric header field {tok!r}", start)
        fields.append((int(tok), start))
    (width, _), (height, _), (maxval, mpos) = fields
    if maxval != 255:
        raise FormatError(f"maxval {maxval} is not 255", mpos)
    if width < 1 or height < 1:
        raise FormatError("zero image extent", fields[0][1])
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError("missing whitespace after header", pos)
    pos += 1
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    if len(data) - pos < need:
        raise FormatError(f"truncated payload: need {need} bytes, have {len(data) - pos}", len(data))
    arr = np.frombuffer(data, np.uint8, need, pos).copy()
    shape = (height, width, 3) if channels == 3 else (height, width)
    return arr.reshape(shape)


def encode_image(image) -> bytes:
    img = np.asarray(image)
    if img.dtype != np.uint8:
        img = np.clip(np.rint(np.asarray(img, dtype=np.float64)), 0, 255).astype(np.uint8)
    if img.ndim == 2:
        magic = b"P5"
    elif img.ndim == 3 and img.shape[2] == 3:
        magic = b"P6"
    else:
        raise ValueError(f"cannot encode image of shape {img.shape}")
    h, w = img.shape[:2]
    return magic + f"\n{w} {h}\n255\n".encode() + np.ascontiguousarray(img).tobytes()


def decode_mask(data: bytes) -> np.ndarray:
    """P5 with values {0, 255} to a 0/1 uint8 mask."""
    gray = decode_image(data)
    if gray.ndim != 2:
        raise FormatError("mask must be P5", 0)
    bad = np.flatnonzero((gray != 0) & (gray != 255))
    if bad.size:
        raise FormatError(f"non-binary mask value {gray.flat[bad[0]]}", 0)
    return (gray == 255).astype(np.uint8)


def encode_mask(mask) -> bytes:
    return encode_image((np.asarray(mask) != 0).astype(np.uint8) * 255)


def read_image(path) -> np.ndarray:
    return decode_image(Path(path).read_bytes())


def write_image(path, image) -> None:
    Path(path).write_bytes(encode_image(image))


def write_mask_sequence(directory, masks) -> list[Path]:
    """Write frames of a mask sequence as ``00001.pgm`` ... in `directory`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    frames = np.asarray(getattr(masks, "frames", masks))
    paths = []
    for i, m in enumerate(frames, start=1):
        p = directory / f"{i:05d}.pgm"
        p.write_bytes(encode_mask(m))
        paths.append(p)
    return paths


def resize_nearest(image: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Nearest resize: output pixel (i, j) takes source (i*H//h, j*W//w)."""
    H, W = image.shape[:2]
    h, w = size
    if (H, W) == (h, w):
        return image
    rows = np.arange(h) * H // h
    cols = np.arange(w) * W // w
    return image[rows[:, None], cols[None, :]]


_NUMBERED = re.compile(r"^(\d{5})\.(ppm|pgm)$")


def numbered_files(directory, suffix: str) -> list[Path]:
    """``%05d`` files in `directory`, checked to run 1..N without gaps."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ClipIOError(f"missing directory {directory}")
    found = {}
    for p in directory.iterdir():
        m = _NUMBERED.match(p.name)
        if m and m.group(2) == suffix:
            found[int(m.group(1))] = p
    for idx in range(1, len(found) + 1):
        if idx not in found:
            raise ClipIOError(f"missing file index {idx:05d}.{suffix} in {directory}")
    return [found[i] for i in range(1, len(found) + 1)]


@dataclass(frozen=True)
class ClipManifestEntry:
    id: str
    frames_dir: str
    masks_dir: str | None = None
    split: str = "test"
    mask_kind: str = "pws"

    def to_json(self) -> str:
        d = {"id": self.id, "frames_dir": self.frames_dir}
        if self.masks_dir is not None:
            d["masks_dir"] = self.masks_dir
        d["split"] = self.split
        d["mask_kind"] = self.mask_kind
        return json.dumps(d)


@dataclass
class Clip:
    frames: np.ndarray
    masks: MaskSequence | None = None


def load_clip(entry: ClipManifestEntry, target: tuple[int, int] | None = None,
              base: Path | None = None) -> Clip:
    """Read frames (and masks) of a clip, resized by nearest neighbour.

    Relative directories are resolved against `base`.  ``target=None`` keeps
    the native size of the first frame.
    """
    def resolve(d):
        p = Path(d)
        return p if base is None or p.is_absolute() else Path(base) / p

    frame_paths = numbered_files(resolve(entry.frames_dir), "ppm")
    if not frame_paths:
        raise ClipIOError(f"no frames in {entry.frames_dir}")
    frames = []
    for i, p in enumerate(frame_paths, start=1):
        try:
            img = read_image(p)
        except FormatError as exc:
            raise ClipIOError(f"frame {i:05d}: {exc}") from exc
        if img.ndim != 3:
            raise ClipIOError(f"frame {i:05d} is not RGB")
        if target is None:
            target = img.shape[:2]
        frames.append(resize_nearest(img, target))
    masks = None
    if entry.masks_dir is not None:
        masks = load_mask_sequence(resolve(entry.masks_dir), target)
        if len(masks) != len(frame_paths):
            idx = min(len(masks), len(frame_paths)) + 1
            raise ClipIOError(
                f"clip {entry.id}: {len(frame_paths)} frames but {len(masks)} masks "
                f"(first unmatched index {idx:05d})")
    return Clip(np.stack(frames).astype(np.float32), masks)


def load_mask_sequence(directory, target: tuple[int, int] | None = None) -> MaskSequence:
    """Read ``00001.pgm ...`` masks, nearest-resized to `target`."""
    frames = []
    for i, p in enumerate(numbered_files(directory, "pgm"), start=1):
        try:
            m = decode_mask(p.read_bytes())
        except FormatError as exc:
            raise ClipIOError(f"mask {i:05d}: {exc}") from exc
        frames.append(m if target is None else resize_nearest(m, target))
    if not frames:
        raise ClipIOError(f"no masks in {directory}")
    return MaskSequence(np.stack(frames), [(0, 0)] * len(frames))


def _parse_entry(obj, lineno: int) -> ClipManifestEntry:
    if not isinstance(obj, dict):
        raise ManifestError(f"line {lineno}: expected a JSON object")
    allowed = {"id", "frames_dir", "masks_dir", "split", "mask_kind"}
    unknown = set(obj) - allowed
    if unknown:
        raise ManifestError(f"line {lineno}: unknown fields {sorted(unknown)}")
    for key in ("id", "frames_dir", "split", "mask_kind"):
        if not isinstance(obj.get(key), str):
            raise ManifestError(f"line {lineno}: field {key!r} missing or not a string")
    if "masks_dir" in obj and not isinstance(obj["masks_dir"], str):
        raise ManifestError(f"line {lineno}: field 'masks_dir' must be a string")
    if obj["split"] not in SPLITS:
        raise ManifestError(f"line {lineno}: split must be one of {SPLITS}")
    if obj["mask_kind"] not in MASK_KINDS:
        raise ManifestError(f"line {lineno}: mask_kind must be one of {MASK_KINDS}")
    return ClipManifestEntry(obj["id"], obj["frames_dir"], obj.get("masks_dir"),
                             obj["split"], obj["mask_kind"])


def load_manifest(path) -> list[ClipManifestEntry]:
    entries = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"line {lineno}: {exc.msg}") from exc
            entry = _parse_entry(obj, lineno)
            if entry.id in seen:
                raise ManifestError(f"line {lineno}: duplicate id {entry.id!r}")
            seen.add(entry.id)
            entries.append(entry)
    return entries


def write_manifest(entries, path) -> None:
    ids = [e.id for e in entries]
    dup = {i for i in ids if ids.count(i) > 1}
    if dup:
        raise ManifestError(f"duplicate id {sorted(dup)[0]!r}")
    with open(path, "w", encoding="utf-8") as fh:
        for e in entries:
            fh.write(e.to_json() + "\n")
