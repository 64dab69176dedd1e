"""Seeded synthetic clips for smoke runs, demos and tests."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from raformer.dataset_io import ClipManifestEntry, write_image, write_manifest, write_mask_sequence
from raformer.mask_synth import WireSpec, create_video_mask, create_wire_mask
from raformer.tensor_core import Rng

__all__ = ["synthetic_frames", "write_synthetic_dataset"]


def synthetic_frames(length: int, height: int, width: int, rng: Rng) -> np.ndarray:
    """Smooth colour gradients with a drifting bright square, uint8 (T, H, W, 3)."""
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    phase = rng.uniform(0, 2 * np.pi, 3)
    side = max(2, min(height, width) // 5)
    r0, c0 = rng.integers(0, height - side), rng.integers(0, width - side)
    vr, vc = rng.integers(-2, 2), rng.integers(-2, 2)
    frames = np.empty((length, height, width, 3), dtype=np.uint8)
    for t in range(length):
        img = np.stack([
            127.5 + 100 * np.sin(2 * np.pi * (xx / width + yy / (2 * height)) + phase[c] + 0.1 * t)
            for c in range(3)], axis=-1)
        r = int(np.clip(r0 + vr * t, 0, height - side))
        c = int(np.clip(c0 + vc * t, 0, width - side))
        img[r:r + side, c:c + side] = 240.0
        frames[t] = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    return frames


def write_synthetic_dataset(root, count: int = 2, length: int = 5, size=(64, 64),
                            seed: int = 0, wire: WireSpec | None = None) -> Path:
    """Write `count` clips with pseudo wire masks under `root`.

    Returns the path of the ``manifest.jsonl`` describing them; directories
    in the manifest are relative to `root`.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    height, width = size
    if wire is None:
        wire = WireSpec(num=2, len_range=(min(height, width) // 3, min(height, width) // 2 + 1),
                        width_range=(1, 3), max_dilate_times=1, max_move=2, seed=seed)
    entries = []
    for i in range(count):
        rng = Rng(seed).spawn(i)
        vid = f"clip{i:03d}"
        frames = synthetic_frames(length, height, width, rng)
        (root / vid / "frames").mkdir(parents=True, exist_ok=True)
        for t, frame in enumerate(frames, start=1):
            write_image(root / vid / "frames" / f"{t:05d}.ppm", frame)
        base = create_wire_mask(wire, (height, width), rng)
        write_mask_sequence(root / vid / "masks", create_video_mask(base, length, wire.max_move, rng))
        entries.append(ClipManifestEntry(vid, f"{vid}/frames", f"{vid}/masks", "test", "pws"))
    manifest = root / "manifest.jsonl"
    write_manifest(entries, manifest)
    return manifest
