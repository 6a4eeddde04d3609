"""Experiment configuration: a flat TOML file, overridable from the command line."""

from __future__ import annotations

import os
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from ..core import AngleSpec, CatMap, MorseSmaleMap, ProductSystem, SystemPoint

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

KINDS = ("certify", "weyl", "lyapunov", "basins", "sandwich", "transitivity", "simulate")
ORBIT_KINDS = ("weyl", "lyapunov", "sandwich", "transitivity", "simulate")
OUT_ENV = "PHLAB_OUT"


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str = "simulate"
    # system
    matrix: list = field(default_factory=lambda: [2, 1, 1, 1])
    angles: list = field(default_factory=lambda: ["golden"])
    ell: Optional[int] = None
    epsilon: float = 0.5
    phase: float = 0.0
    # initial point "x, y, w1..wr[, z]" as rational/decimal strings; drawn from seed if absent
    point: Optional[list] = None
    # orbit
    n: int = 10**6
    stride: int = 1
    # certify
    lattice_bound: int = 50
    k_bound: int = 8
    step_budget: int = 64
    margin_floor: float = 1e-9
    # weyl
    box: list = field(default_factory=lambda: [2, 2, 2, 0])
    weyl_threshold: float = 0.02
    closed_form_tol: float = 1e-12
    # lyapunov
    lyap_tol: float = 1e-3
    # basins
    samples: int = 10**4
    sampler: str = "random"
    max_iter: int = 10**5
    radius: float = 1e-9
    source_tol: float = 1e-9
    # sandwich
    obs: str = "1,0,0,0"
    sandwich_eps: float = 0.01
    ladder: Optional[list] = None
    # transitivity
    transit_eps: float = 0.1
    # run control
    seed: Optional[int] = None
    workers: int = 1
    out: Optional[str] = None

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)

    # ------------------------------------------------------------------
    @property
    def stochastic(self) -> bool:
        if self.kind == "basins":
            return self.sampler == "random"
        return self.kind in ORBIT_KINDS and self.point is None

    def system(self) -> ProductSystem:
        try:
            cat = CatMap(*[int(v) for v in self.matrix])
            rots = tuple(AngleSpec.parse(a) for a in self.angles)
            center = None if self.ell is None else MorseSmaleMap(int(self.ell), float(self.epsilon),
                                                                 float(self.phase))
            return ProductSystem(cat, rots, center)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid system: {exc}") from exc

    def initial_point(self, s: ProductSystem) -> SystemPoint:
        from ..fixedpoint import SCALE
        from ..parallel import sample_rng

        if self.point is not None:
            vals = [str(v) for v in self.point]
            need = 2 + s.r + (1 if s.has_center else 0)
            if len(vals) != need:
                raise ConfigError(f"point needs {need} coordinates, got {len(vals)}")
            z = float(vals[-1]) if s.has_center else None
            ws = vals[2:2 + s.r]
            return SystemPoint.of(vals[0], vals[1], ws, z)
        # reserved stream, disjoint from survey sample blocks
        rng = sample_rng(self.seed, (1 << 63) + 1)
        raw = rng.integers(0, SCALE, size=2 + s.r, dtype="uint64")
        z = float(rng.random()) if s.has_center else None
        return SystemPoint.from_raw([int(v) for v in raw], z)

    def output_dir(self) -> Path:
        root = Path(os.environ.get(OUT_ENV, "runs"))
        out = Path(self.out) if self.out else Path(self.kind if self.seed is None
                                                    else f"{self.kind}-seed{self.seed}")
        return out if out.is_absolute() else root / out

    def validate(self) -> ProductSystem:
        """Check every precondition before any computation; return the system."""
        try:
            return self._validate()
        except TypeError as exc:
            raise ConfigError(f"badly typed config value: {exc}") from exc

    def _validate(self) -> ProductSystem:
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if len(self.matrix) != 4:
            raise ConfigError("matrix needs four integer entries a, b, c, d")
        s = self.system()
        if self.stochastic and self.seed is None:
            raise ConfigError(f"{self.kind} run is stochastic and needs a seed")
        if self.seed is not None and not 0 <= int(self.seed) < (1 << 63):
            raise ConfigError("seed must lie in [0, 2**63)")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.n < 1 or self.stride < 1:
            raise ConfigError("n and stride must be >= 1")
        if self.kind in ("certify", "transitivity") and s.has_center:
            raise ConfigError(f"{self.kind} applies to f (leave ell unset)")
        if self.kind in ("basins", "sandwich") and not s.has_center:
            raise ConfigError(f"{self.kind} needs a center map (set ell)")
        if self.kind == "certify" and (self.lattice_bound < 1 or self.step_budget < 1 or self.k_bound < 1):
            raise ConfigError("lattice_bound, step_budget and k_bound must be >= 1")
        if self.kind == "weyl" and (len(self.box) not in (3, 4) or min(self.box) < 0):
            raise ConfigError("box needs 3 or 4 non-negative bounds")
        if self.kind == "basins":
            if self.samples < 1 or self.max_iter < 1 or self.radius <= 0:
                raise ConfigError("samples, max_iter and radius must be positive")
            if self.sampler not in ("random", "grid"):
                raise ConfigError("sampler must be 'random' or 'grid'")
        if self.kind == "sandwich":
            if self.sandwich_eps <= 0:
                raise ConfigError("sandwich_eps must be positive")
            if self.ladder is not None and (min(self.ladder) < 1 or max(self.ladder) > self.n):
                raise ConfigError("ladder points must lie in [1, n]")
        if self.kind == "transitivity" and not 0 < self.transit_eps <= 1:
            raise ConfigError("transit_eps must lie in (0, 1]")
        if self.point is not None:
            self.initial_point(s)
        return s


def _coerce(name: str, text: str):
    """Parse a ``--set key=value`` value as TOML, falling back to a bare string."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def load_config(path=None, overrides: Optional[dict] = None) -> ExperimentConfig:
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    for key, value in (overrides or {}).items():
        data[key] = _coerce(key, value) if isinstance(value, str) else value
    return ExperimentConfig.from_mapping(data)
