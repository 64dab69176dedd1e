"""Architecture hyperparameters and their consistency rules."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from fractions import Fraction

__all__ = ["ConfigError", "RaformerConfig"]


class ConfigError(ValueError):
    """Raised for hyperparameter combinations the layer cannot run."""


@dataclass(frozen=True)
class RaformerConfig:
    """Hyperparameters of the encoder, the stacked layers and the decoder.

    Defaults follow the evaluation conventions: 5-frame clips at 240x432,
    eight layers and half of the windows kept.  ``k=None`` means ``n // 2``;
    equality compares the resolved window count.
    Window extents ``h, w`` are measured on the quarter-resolution grid.
    """

    T: int = 5
    H: int = 240
    W: int = 432
    C: int = 64
    h: int = 10
    w: int = 12
    k: int | None = field(default=None, compare=False)
    layers: int = 8
    heads: int = 4
    ss_kernel: int = 7
    ss_stride: int = 3
    ss_pad: int = 3
    beta: float = 1.0
    gamma: float = 1.0
    leaky_slope: float = 0.2
    ffn_ratio: int = 4
    ln_eps: float = 1e-5
    seed: int = 0
    _k: int = field(init=False, repr=False, default=0)

    def __post_init__(self):
        for name in ("T", "H", "W", "C", "h", "w", "layers", "heads",
                     "ss_kernel", "ss_stride", "ffn_ratio"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.ss_pad < 0:
            raise ConfigError("ss_pad must be >= 0")
        if self.H % 8 or self.W % 8:
            raise ConfigError(f"frame size {self.H}x{self.W} must be divisible by 8")
        if (self.H // 4) % self.h or (self.W // 4) % self.w:
            raise ConfigError(
                f"window {self.h}x{self.w} does not tile the "
                f"{self.H // 4}x{self.W // 4} feature grid")
        if self.C % self.heads:
            raise ConfigError(f"C={self.C} not divisible by heads={self.heads}")
        if not 0 < self.leaky_slope < 1:
            raise ConfigError("leaky_slope must lie in (0, 1)")
        n = self.n
        k = n // 2 if self.k is None else self.k
        if not 1 <= k <= n:
            raise ConfigError(f"k={k} outside [1, {n}]")
        if (4 * k) % n and 4 * k > n:
            raise ConfigError(
                f"4k/n = {4 * k}/{n} is neither an integer nor below 1")
        object.__setattr__(self, "_k", k)

    @property
    def grid(self) -> tuple[int, int]:
        """Window grid (rows, cols) on the quarter-resolution features."""
        return (self.H // 4) // self.h, (self.W // 4) // self.w

    @property
    def n(self) -> int:
        rows, cols = self.grid
        return rows * cols

    @property
    def kept(self) -> int:
        return self._k

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.kept, self.n)

    @property
    def groups(self) -> int:
        """Packed group count ``max(1, 4k/n)``."""
        return max(1, 4 * self.kept // self.n)

    @property
    def duplicates(self) -> bool:
        return 4 * self.kept < self.n

    @property
    def feature_shape(self) -> tuple[int, int, int, int]:
        return self.T, self.H // 4, self.W // 4, self.C

    def replace(self, **changes) -> "RaformerConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.init}
        d["k"] = self.kept
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RaformerConfig":
        names = {f.name for f in dataclasses.fields(cls) if f.init}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def with_alpha(cls, alpha: Fraction | float, **kw) -> "RaformerConfig":
        """Config whose kept-window count is ``alpha * n``."""
        base = cls(**kw)
        k = Fraction(alpha).limit_denominator(1024) * base.n
        if k.denominator != 1:
            raise ConfigError(f"alpha={alpha} gives non-integer k for n={base.n}")
        return base.replace(k=int(k))
