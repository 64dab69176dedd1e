"""Pseudo wire-shaped (PWS) and polygonal (PP) mask synthesis.

Masks are ``uint8`` arrays of shape (H, W) holding 1 on holes and 0 on
valid pixels.  Every random choice is drawn from an explicitly passed
:class:`~raformer.tensor_core.Rng`, so equal seeds give bit-identical masks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import ndimage
from skimage.draw import line as bresenham_line
from skimage.draw import polygon as fill_polygon

from raformer.tensor_core import Rng

__all__ = [
    "WireSpec",
    "MaskSequence",
    "Rect",
    "ROTATION_DEG",
    "SHEAR_RANGE",
    "SCALE_RANGE",
    "MAX_RETRIES",
    "wire_strokes",
    "create_wire_mask",
    "create_video_mask",
    "create_pp_mask",
    "dilate",
    "bounding_boxes",
    "foreground_box",
]

ROTATION_DEG = (0.0, 360.0)
SHEAR_RANGE = (-0.3, 0.3)
SCALE_RANGE = (0.7, 1.3)
MAX_RETRIES = 10
PP_VERTICES = (4, 12)
PP_COVERAGE = (0.05, 0.30)


@dataclass(frozen=True)
class WireSpec:
    num: int = 3
    len_range: tuple[int, int] = (60, 240)
    width_range: tuple[int, int] = (1, 5)
    dilate_kernel: int = 3
    max_dilate_times: int = 2
    max_move: int = 4
    seed: int = 0

    def validate(self, canvas: tuple[int, int]) -> None:
        if self.num < 0:
            raise ValueError("num must be >= 0")
        lo, hi = self.width_range
        if lo < 1 or hi < lo:
            raise ValueError(f"bad width_range {self.width_range}")
        lo, hi = self.len_range
        if lo < 1 or hi < lo:
            raise ValueError(f"bad len_range {self.len_range}")
        if hi > math.hypot(*canvas):
            raise ValueError(f"len_range max {hi} exceeds the canvas diagonal")
        if self.dilate_kernel < 1 or self.dilate_kernel % 2 == 0:
            raise ValueError("dilate_kernel must be odd and >= 1")
        if self.max_dilate_times < 0 or self.max_move < 0:
            raise ValueError("max_dilate_times and max_move must be >= 0")


@dataclass
class MaskSequence:
    """Animated mask: ``frames`` (len, H, W) uint8 and per-frame (dx, dy).

    ``motion_log[0]`` is (0, 0); entry ``t`` is the displacement from frame
    ``t-1`` to frame ``t``.  ``origin`` is the unclipped top-left corner of
    the wire pattern in frame 0.
    """

    frames: np.ndarray
    motion_log: list[tuple[int, int]] = field(default_factory=list)
    origin: tuple[int, int] = (0, 0)

    def __len__(self) -> int:
        return len(self.frames)


class Rect(NamedTuple):
    row: int
    col: int
    height: int
    width: int


def _thick_segment(p0, p1, width: int, shape) -> np.ndarray:
    """Rasterize a segment: Bresenham core plus perpendicular width fill."""
    H, W = shape
    out = np.zeros(shape, dtype=bool)
    (r0, c0), (r1, c1) = p0, p1
    rr, cc = bresenham_line(int(round(r0)), int(round(c0)), int(round(r1)), int(round(c1)))
    dr, dc = r1 - r0, c1 - c0
    norm = math.hypot(dr, dc) or 1.0
    nr, nc = -dc / norm, dr / norm
    half = (width - 1) / 2.0
    offsets = np.arange(-half, half + 1e-9, 0.5)
    fr = np.rint(rr[:, None] + offsets[None, :] * nr).astype(np.int64).ravel()
    fc = np.rint(cc[:, None] + offsets[None, :] * nc).astype(np.int64).ravel()
    keep = (fr >= 0) & (fr < H) & (fc >= 0) & (fc < W)
    out[fr[keep], fc[keep]] = True
    return out


def _affine(rng: Rng) -> np.ndarray:
    theta = math.radians(rng.uniform(*ROTATION_DEG))
    shear = rng.uniform(*SHEAR_RANGE)
    scale = rng.uniform(*SCALE_RANGE)
    rot = np.array([[math.cos(theta), -math.sin(theta)],
                    [math.sin(theta), math.cos(theta)]])
    return rot @ np.array([[1.0, shear], [0.0, 1.0]]) @ np.diag([scale, scale])


def wire_strokes(spec: WireSpec, canvas: tuple[int, int], rng: Rng) -> list[np.ndarray]:
    """Individual wire strokes (bool arrays) before merging and dilation."""
    H, W = canvas
    strokes = []
    for _ in range(spec.num):
        length = rng.integers(*spec.len_range)
        width = rng.integers(*spec.width_range)
        for _attempt in range(MAX_RETRIES):
            ends = np.array([[0.0, -length / 2.0], [0.0, length / 2.0]])  # (row, col)
            ends = ends @ _affine(rng).T
            reach = length / 2.0
            center = np.array([rng.uniform(-reach, H + reach), rng.uniform(-reach, W + reach)])
            ends = ends + center
            stroke = _thick_segment(ends[0], ends[1], width, canvas)
            if stroke.any():
                strokes.append(stroke)
                break
    return strokes


def _resize_nearest(mask: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if mask.shape == tuple(shape):
        return mask
    rows = np.arange(shape[0]) * mask.shape[0] // shape[0]
    cols = np.arange(shape[1]) * mask.shape[1] // shape[1]
    return mask[rows[:, None], cols[None, :]]


def foreground_box(mask) -> Rect | None:
    """Tight box around all foreground pixels, or None for an empty mask."""
    rows = np.flatnonzero(np.asarray(mask).any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(np.asarray(mask).any(axis=0))
    return Rect(int(rows[0]), int(cols[0]),
                int(rows[-1] - rows[0] + 1), int(cols[-1] - cols[0] + 1))


def create_wire_mask(spec: WireSpec, canvas: tuple[int, int], rng: Rng,
                     work_size: tuple[int, int] | None = None) -> np.ndarray:
    """Draw ``spec.num`` randomly transformed wires and dilate them.

    Wires are drawn on a ``work_size`` canvas (default: `canvas`), resized
    to `canvas` by nearest neighbour, then dilated a uniform-random number
    of times in ``[0, max_dilate_times]``.  Foreground is kept inside the
    canvas; its tight box is available via :func:`foreground_box`.
    """
    canvas = (int(canvas[0]), int(canvas[1]))
    if canvas[0] < 1 or canvas[1] < 1:
        raise ValueError(f"canvas extents must be positive, got {canvas}")
    work = tuple(work_size) if work_size is not None else canvas
    spec.validate(work)
    x = np.zeros(work, dtype=bool)
    for stroke in wire_strokes(spec, work, rng):
        x |= stroke
    x = _resize_nearest(x, canvas)
    times = rng.integers(0, spec.max_dilate_times)
    x = dilate(x, spec.dilate_kernel, times)
    return x.astype(np.uint8)


def create_video_mask(mask, length: int, max_move: int, rng: Rng) -> MaskSequence:
    """Animate the foreground pattern of `mask` over `length` frames.

    The pattern (tight box of the foreground) is placed at a random position,
    then shifted by a uniform ``(dx, dy)`` in ``[-max_move, max_move]`` per
    frame.  The virtual position is unbounded; pixels leaving the canvas are
    clipped, so unclipped frames are exact translates of frame 0.
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    mask = np.asarray(mask, dtype=np.uint8)
    H, W = mask.shape
    frames = np.zeros((length, H, W), dtype=np.uint8)
    box = foreground_box(mask)
    if box is None:
        return MaskSequence(frames, [(0, 0)] * length)
    patch = mask[box.row:box.row + box.height, box.col:box.col + box.width]
    r = rng.integers(0, H - box.height)
    c = rng.integers(0, W - box.width)
    origin = (r, c)
    log = []
    for t in range(length):
        if t == 0:
            dx = dy = 0
        else:
            dx = rng.integers(-max_move, max_move)
            dy = rng.integers(-max_move, max_move)
            r += dy
            c += dx
        log.append((dx, dy))
        _paste(frames[t], patch, r, c)
    return MaskSequence(frames, log, origin)


def _paste(dst: np.ndarray, patch: np.ndarray, r: int, c: int) -> None:
    H, W = dst.shape
    ph, pw = patch.shape
    r0, c0 = max(r, 0), max(c, 0)
    r1, c1 = min(r + ph, H), min(c + pw, W)
    if r0 < r1 and c0 < c1:
        dst[r0:r1, c0:c1] |= patch[r0 - r:r1 - r, c0 - c:c1 - c]


def create_pp_mask(canvas: tuple[int, int], rng: Rng) -> np.ndarray:
    """One filled star-shaped polygon with 4-12 vertices, 5-30% coverage.

    Vertices sit at increasing random angles around a random centre with
    every angular gap below pi, so the polygon is simple and star-shaped.
    Radii are rescaled until the rasterized coverage lands on a target
    drawn from the allowed range.
    """
    H, W = canvas
    nv = rng.integers(*PP_VERTICES)
    target = rng.uniform(0.08, 0.27)
    # angular gaps stay below pi so the centre is interior (star-shaped)
    gaps = rng.uniform(0.6, 1.4, nv)
    angles = rng.uniform(0.0, 2 * math.pi) + np.cumsum(gaps) * (2 * math.pi / gaps.sum())
    radii = rng.uniform(0.6, 1.0, nv)
    cr, cc = rng.uniform(0.3 * H, 0.7 * H), rng.uniform(0.3 * W, 0.7 * W)
    # start from the radius a regular polygon of the target area would need
    unit_area = 0.5 * np.sum(radii * np.roll(radii, -1) * np.sin(np.diff(angles, append=angles[0] + 2 * math.pi)))
    scale = math.sqrt(target * H * W / max(unit_area, 1e-9))
    out = np.zeros(canvas, dtype=np.uint8)
    for _ in range(30):
        out[:] = 0
        pr = cr + scale * radii * np.sin(angles)
        pc = cc + scale * radii * np.cos(angles)
        rr, cc_ = fill_polygon(pr, pc, shape=canvas)
        out[rr, cc_] = 1
        cov = out.mean()
        if PP_COVERAGE[0] <= cov <= PP_COVERAGE[1] and abs(cov - target) < 0.01:
            break
        scale *= min(2.0, math.sqrt(target / max(cov, 1e-6)))
    return out


def dilate(mask, kernel_size: int, times: int) -> np.ndarray:
    """Binary dilation with a ``kernel_size`` square, applied `times` times."""
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ValueError(f"kernel_size must be odd and >= 1, got {kernel_size}")
    if times < 0:
        raise ValueError("times must be >= 0")
    mask = np.asarray(mask)
    if times == 0 or kernel_size == 1:
        return mask.copy()
    se = np.ones((kernel_size, kernel_size), dtype=bool)
    out = ndimage.binary_dilation(mask != 0, structure=se, iterations=times)
    return out.astype(mask.dtype)


def bounding_boxes(mask) -> list[Rect]:
    """Tight box of every 8-connected foreground component, sorted by corner."""
    labels, count = ndimage.label(np.asarray(mask) != 0, structure=np.ones((3, 3)))
    boxes = []
    for sl in ndimage.find_objects(labels):
        rs, cs = sl
        boxes.append(Rect(rs.start, cs.start, rs.stop - rs.start, cs.stop - cs.start))
    return sorted(boxes)
