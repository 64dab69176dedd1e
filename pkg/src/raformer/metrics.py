"""PSNR, box-restricted PSNR*, SSIM and CSV reports of per-video scores."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from raformer.mask_synth import bounding_boxes

__all__ = [
    "PSNR_CAP",
    "MetricRow",
    "MetricReport",
    "psnr",
    "video_psnr",
    "psnr_star",
    "ssim",
    "video_ssim",
    "aggregate",
    "CSV_HEADER",
    "EmbeddingProvider",
]

PSNR_CAP = 99.0
MAX_VAL = 255.0
SSIM_WIN = 11
SSIM_SIGMA = 1.5
C1 = (0.01 * MAX_VAL) ** 2
C2 = (0.03 * MAX_VAL) ** 2
CSV_HEADER = ["video_id", "psnr", "psnr_star", "ssim"]


def _pair(y, x) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if y.shape != x.shape:
        raise ValueError(f"dimension mismatch: {y.shape} vs {x.shape}")
    return y, x


def psnr(y, x) -> float:
    """PSNR in dB on the 0..255 scale; identical inputs give 99 dB."""
    y, x = _pair(y, x)
    mse = np.mean((y - x) ** 2)
    if mse == 0:
        return PSNR_CAP
    return float(min(PSNR_CAP, 10.0 * math.log10(MAX_VAL ** 2 / mse)))


def video_psnr(y, x) -> float:
    """Mean of per-frame PSNR over a (T, H, W[, C]) sequence."""
    y, x = _pair(y, x)
    return float(np.mean([psnr(a, b) for a, b in zip(y, x)]))


def psnr_star(y, x, masks) -> float | None:
    """PSNR averaged over the tight boxes of every mask component.

    Each 8-connected component of each frame's mask contributes the PSNR of
    all pixels inside its bounding box.  Returns None when no frame has any
    foreground.
    """
    y, x = _pair(y, x)
    m = np.asarray(getattr(masks, "frames", masks))
    if m.shape[0] != y.shape[0] or m.shape[1:3] != y.shape[1:3]:
        raise ValueError(f"mask shape {m.shape} does not match frames {y.shape}")
    values = []
    for yt, xt, mt in zip(y, x, m):
        for r, c, h, w in bounding_boxes(mt):
            values.append(psnr(yt[r:r + h, c:c + w], xt[r:r + h, c:c + w]))
    if not values:
        return None
    return float(np.mean(values))


def _gaussian_window() -> np.ndarray:
    half = SSIM_WIN // 2
    g = np.exp(-(np.arange(-half, half + 1) ** 2) / (2 * SSIM_SIGMA ** 2))
    return g / g.sum()


def _filter_valid(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    half = len(g) // 2
    out = ndimage.correlate1d(img, g, axis=0, mode="constant")
    out = ndimage.correlate1d(out, g, axis=1, mode="constant")
    return out[half:-half, half:-half]


def _ssim_channel(a: np.ndarray, b: np.ndarray, g: np.ndarray) -> float:
    mu_a = _filter_valid(a, g)
    mu_b = _filter_valid(b, g)
    saa = _filter_valid(a * a, g) - mu_a * mu_a
    sbb = _filter_valid(b * b, g) - mu_b * mu_b
    sab = _filter_valid(a * b, g) - mu_a * mu_b
    num = (2 * mu_a * mu_b + C1) * (2 * sab + C2)
    den = (mu_a * mu_a + mu_b * mu_b + C1) * (saa + sbb + C2)
    return float(np.mean(num / den))


def ssim(y, x) -> float:
    """Mean SSIM (11x11 Gaussian window, sigma 1.5), averaged over channels."""
    y, x = _pair(y, x)
    if y.ndim not in (2, 3):
        raise ValueError(f"expected H x W or H x W x C image, got {y.shape}")
    if min(y.shape[:2]) < SSIM_WIN:
        raise ValueError(f"image {y.shape[:2]} smaller than the {SSIM_WIN}x{SSIM_WIN} window")
    g = _gaussian_window()
    if y.ndim == 2:
        return _ssim_channel(y, x, g)
    return float(np.mean([_ssim_channel(y[..., c], x[..., c], g) for c in range(y.shape[2])]))


def video_ssim(y, x) -> float:
    y, x = _pair(y, x)
    return float(np.mean([ssim(a, b) for a, b in zip(y, x)]))


@dataclass(frozen=True)
class MetricRow:
    video_id: str
    psnr: float
    psnr_star: float | None
    ssim: float

    def csv_fields(self) -> list[str]:
        return [
            self.video_id,
            f"{self.psnr:.4f}",
            "" if self.psnr_star is None else f"{self.psnr_star:.4f}",
            f"{self.ssim:.4f}",
        ]


@dataclass(frozen=True)
class MetricReport:
    rows: tuple[MetricRow, ...]
    aggregate: MetricRow

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in (*self.rows, self.aggregate):
            writer.writerow(row.csv_fields())
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "MetricReport":
        """Parse a report written by :meth:`to_csv` (values are rounded)."""
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        rows = [MetricRow(r[0], float(r[1]), float(r[2]) if r[2] else None, float(r[3]))
                for r in reader if r]
        if not rows or rows[-1].video_id != "AGGREGATE":
            raise ValueError("missing AGGREGATE row")
        return cls(tuple(rows[:-1]), rows[-1])


def aggregate(rows: Iterable[MetricRow]) -> MetricReport:
    """Means over rows; PSNR* averages only the rows where it is present."""
    rows = tuple(rows)
    if not rows:
        raise ValueError("cannot aggregate an empty row list")
    stars = [r.psnr_star for r in rows if r.psnr_star is not None]
    agg = MetricRow(
        "AGGREGATE",
        float(np.mean([r.psnr for r in rows])),
        float(np.mean(stars)) if stars else None,
        float(np.mean([r.ssim for r in rows])),
    )
    return MetricReport(rows, agg)


class EmbeddingProvider:
    """Hook for perceptual metrics (LPIPS, VFID) backed by a pretrained network.

    No provider ships with this package; subclasses return one feature
    vector per frame.
    """

    name = "unset"

    def embed(self, frames: Sequence[np.ndarray]) -> np.ndarray:
        raise NotImplementedError("no perceptual embedding network is bundled")
