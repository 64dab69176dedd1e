"""Training objectives evaluated on supplied tensors and discriminator scores."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LAMBDA_ADV", "DegenerateMaskError", "LossReport",
           "reconstruction_loss", "adversarial_losses"]

LAMBDA_ADV = 0.01


class DegenerateMaskError(ValueError):
    """The mask has no hole pixels or no valid pixels."""


@dataclass(frozen=True)
class LossReport:
    rec: float
    adv_g: float
    adv_d: float
    total: float
    lambda_adv: float = LAMBDA_ADV


def reconstruction_loss(y, x, mask) -> float:
    """Hole-normalized plus valid-normalized mean absolute error.

    ``mask`` is 1 on holes and 0 on valid pixels; it broadcasts against the
    trailing channel axis of ``y``/``x`` when it lacks one.
    """
    y = np.asarray(y, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if y.shape != x.shape:
        raise ValueError(f"shape mismatch {y.shape} vs {x.shape}")
    m = np.asarray(getattr(mask, "frames", mask), dtype=np.float64)
    if m.shape != y.shape:
        if m.shape != y.shape[:-1]:
            raise ValueError(f"mask {m.shape} does not match images {y.shape}")
        m = np.broadcast_to(m[..., None], y.shape)
    hole, valid = m.sum(), (1.0 - m).sum()
    if hole == 0 or valid == 0:
        raise DegenerateMaskError("mask must contain both hole and valid pixels")
    diff = np.abs(y - x)
    return float((diff * m).sum() / hole + (diff * (1.0 - m)).sum() / valid)


def adversarial_losses(d_fake, d_real, lambda_adv: float = LAMBDA_ADV,
                       rec: float = 0.0) -> LossReport:
    """Hinge discriminator loss, generator loss and weighted total.

    The discriminator term is ``mean(relu(1 - d_fake)) + mean(relu(1 + d_real))``,
    i.e. with the fake/real roles as written for this model, not the usual
    hinge-GAN orientation.
    """
    d_fake = np.asarray(d_fake, dtype=np.float64)
    d_real = np.asarray(d_real, dtype=np.float64)
    if d_fake.size == 0 or d_real.size == 0:
        raise ValueError("discriminator scores must be non-empty")
    adv_d = float(np.maximum(1.0 - d_fake, 0).mean() + np.maximum(1.0 + d_real, 0).mean())
    adv_g = float(-d_fake.mean())
    return LossReport(rec=float(rec), adv_g=adv_g, adv_d=adv_d,
                      total=float(rec) + lambda_adv * adv_g, lambda_adv=lambda_adv)
