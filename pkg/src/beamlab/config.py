"""Run configuration shared by the comparison driver and the CLI."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path

from .codebook import SCHEMES
from .errors import ConfigurationError

SEED_ENV = "BEAMLAB_SEED"


@dataclass(frozen=True)
class RunConfig:
    n_points: int = 5809
    theta_max: float = 100.0
    layout: str | None = None
    depth_db: float = 22.0
    halfwidth: float = 60.0
    seed: int = 0
    n_codewords: int = 15
    n_seed: int = 363
    n_bits: int = 4
    schemes: tuple = SCHEMES
    activities: tuple | None = None
    grips_file: str | None = None
    activities_file: str | None = None
    percentiles: tuple = (20, 50, 80)
    design_region: bool = True
    rebuild_candidates: bool = False
    output_dir: str = "beamlab-out"
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "percentiles", tuple(self.percentiles))
        if self.activities is not None:
            object.__setattr__(self, "activities", tuple(self.activities))
        unknown = [s for s in self.schemes if s not in SCHEMES]
        if unknown:
            raise ConfigurationError(f"unknown schemes {unknown}; choose from {list(SCHEMES)}")
        if self.n_points < 2 or not (0 < self.theta_max <= 180):
            raise ConfigurationError("grid needs n_points >= 2 and 0 < theta_max <= 180")
        if not (1 <= self.n_seed <= self.n_points):
            raise ConfigurationError("n_seed must lie in [1, n_points]")
        if self.n_codewords < 1 or self.n_bits < 1 or self.threads < 1:
            raise ConfigurationError("n_codewords, n_bits and threads must be positive")
        if not (0 < self.depth_db <= 40) or not (0 < self.halfwidth <= 180):
            raise ConfigurationError("blockage depth must lie in (0, 40] dB and halfwidth in (0, 180]")
        if any(not (0 < p <= 100) for p in self.percentiles):
            raise ConfigurationError("percentiles must lie in (0, 100]")

    @classmethod
    def from_dict(cls, data: dict, base_dir=None) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = sorted(set(data) - known)
        if extra:
            raise ConfigurationError(f"unknown config keys: {extra}")
        data = dict(data)
        if base_dir is not None:
            for key in ("layout", "grips_file", "activities_file"):
                if data.get(key):
                    p = Path(data[key])
                    data[key] = str(p if p.is_absolute() else Path(base_dir) / p)
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from None

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}:1:1: config must be a JSON object")
        return cls.from_dict(data, base_dir=path.parent)

    def with_env(self, environ=None) -> "RunConfig":
        """Apply the ``BEAMLAB_SEED`` override, if set."""
        environ = os.environ if environ is None else environ
        raw = environ.get(SEED_ENV)
        if raw is None or raw == "":
            return self
        try:
            return replace(self, seed=int(raw))
        except ValueError:
            raise ConfigurationError(f"{SEED_ENV} must be an integer, got {raw!r}") from None

    def replace(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("schemes", "percentiles", "activities"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d


def default_config() -> RunConfig:
    """The packaged ``default.json``."""
    text = resources.files("beamlab").joinpath("default.json").read_text(encoding="utf-8")
    return RunConfig.from_dict(json.loads(text))
