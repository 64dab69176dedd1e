"""JSON run configuration shared by the CLI commands."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from raformer.config import ConfigError, RaformerConfig
from raformer.mask_synth import WireSpec

__all__ = ["VideoSpec", "RunConfig", "load_run_config"]


@dataclass(frozen=True)
class VideoSpec:
    len: int = 80
    height: int = 240
    width: int = 432
    kind: str = "pws"

    def __post_init__(self):
        if self.len < 1 or self.height < 1 or self.width < 1:
            raise ConfigError("video len/height/width must be >= 1")
        if self.kind not in ("pws", "pp"):
            raise ConfigError(f"video kind must be 'pws' or 'pp', got {self.kind!r}")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    raformer: RaformerConfig = field(default_factory=RaformerConfig)
    wire: WireSpec = field(default_factory=WireSpec)
    video: VideoSpec = field(default_factory=VideoSpec)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "raformer": self.raformer.to_dict(),
            "wire": {k: list(v) if isinstance(v, tuple) else v
                     for k, v in dataclasses.asdict(self.wire).items()},
            "video": dataclasses.asdict(self.video),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _section(cls, data, name: str):
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be an object")
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    return dict(data)


def load_run_config(path=None, seed: int | None = None, **overrides) -> RunConfig:
    """Parse, validate and materialize defaults.

    The top-level seed (or `seed`) is copied into the model and wire
    sections.  `overrides` are ``section__key=value`` pairs, e.g.
    ``wire__num=0``.
    """
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - {"seed", "raformer", "wire", "video"}
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    raf = _section(RaformerConfig, data.get("raformer"), "raformer")
    wire = _section(WireSpec, data.get("wire"), "wire")
    video = _section(VideoSpec, data.get("video"), "video")
    for key, value in overrides.items():
        if value is None:
            continue
        section, _, name = key.partition("__")
        {"raformer": raf, "wire": wire, "video": video}[section][name] = value
    run_seed = seed if seed is not None else data.get("seed", 0)
    if not isinstance(run_seed, int) or run_seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    raf["seed"] = run_seed
    wire["seed"] = run_seed
    for key in ("len_range", "width_range"):
        if key in wire:
            wire[key] = tuple(wire[key])
    try:
        return RunConfig(run_seed, RaformerConfig(**raf), WireSpec(**wire), VideoSpec(**video))
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
