"""Run configuration: loading, validation and space construction."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .cover import Strategy
from .errors import ConfigError, CoarseError, IoError
from .space import (GENERATOR_KINDS, NORMS, GeneratorSpec, SubspaceRef, generate,
                    read_edge_list, read_point_cloud, select_subset)

SCHEMA_VERSION = "1.0"
SOURCE_KEYS = ("generator", "edge_list", "point_cloud")


@dataclass
class OracleOptions:
    enabled: bool = False
    budget: int = 12
    lambdas: list = field(default_factory=lambda: [1, 2, 3])
    degrees: list = field(default_factory=lambda: [0, 1, 2])


@dataclass
class SeparationOptions:
    r_values: list = field(default_factory=lambda: [1, 2, 3])
    d_rule: str = "2r+4"


@dataclass
class RunConfig:
    generator: dict | None = None
    edge_list: str | None = None
    point_cloud: str | None = None
    norm: str = "l2"  # point clouds only
    frontier: list | None = None  # file sources only
    subset: dict | None = None
    strategy: str = "ball-doubling(1)"
    degrees: list = field(default_factory=lambda: [0, 1, 2])
    horizon: int = 3
    window: int = 2
    route: str = "auto"
    coeffs: str = "Q"
    tie: str = "min"
    oracle: OracleOptions = field(default_factory=OracleOptions)
    separation: SeparationOptions = field(default_factory=SeparationOptions)
    scenario: bool = True
    allow_window_cap_override: bool = False
    out: str = "out"
    seed: int = 0
    workers: int = 1
    base_dir: str = field(default=".", repr=False, compare=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def config_hash(self) -> str:
        """Hash of the semantic configuration (output location and worker
        count do not change results)."""
        d = self.to_dict()
        for k in ("out", "workers"):
            d.pop(k)
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def _resolve(self, p: str) -> Path:
        q = Path(p)
        return q if q.is_absolute() else Path(self.base_dir) / q

    def build_space(self):
        """(space, SubspaceRef | None) from the configured source."""
        if self.generator is not None:
            spec = dict(self.generator)
            if spec.get("kind") == "random-geometric":
                spec.setdefault("seed", self.seed)
            if self.subset is not None:
                spec["subset"] = self.subset
            return generate(GeneratorSpec.from_dict(spec))
        fr = self.frontier or []
        if self.edge_list is not None:
            s = read_edge_list(self._resolve(self.edge_list), frontier=fr)
        else:
            s = read_point_cloud(self._resolve(self.point_cloud), norm=self.norm,
                                 frontier=[int(f) for f in fr])
        sub = SubspaceRef(s, select_subset(s, self.subset)) if self.subset else None
        return s, sub


def _subconfig(cls, raw, where, diags):
    if raw is None:
        return cls()
    if not isinstance(raw, dict):
        diags.append(f"{where}: expected a mapping")
        return cls()
    names = {f.name for f in fields(cls)}
    for k in sorted(set(raw) - names):
        diags.append(f"{where}: unknown key '{k}'")
    return cls(**{k: v for k, v in raw.items() if k in names})


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def validate_config(raw: dict, base_dir=".") -> tuple[RunConfig | None, list[str]]:
    """Check every field; returns (config or None, all diagnostics)."""
    diags: list[str] = []
    if not isinstance(raw, dict):
        return None, ["config must be a mapping"]
    names = {f.name for f in fields(RunConfig)} - {"base_dir", "oracle", "separation"}
    for k in sorted(set(raw) - names - {"oracle", "separation"}):
        diags.append(f"unknown key '{k}'")
    sources = [k for k in SOURCE_KEYS if raw.get(k) is not None]
    if len(sources) != 1:
        diags.append(f"exactly one source (generator | edge_list | point_cloud) required, got {len(sources)}")
    gen = raw.get("generator")
    if gen is not None:
        if not isinstance(gen, dict) or gen.get("kind") not in GENERATOR_KINDS:
            diags.append(f"generator.kind must be one of {list(GENERATOR_KINDS)}")
    for k in ("edge_list", "point_cloud"):
        if raw.get(k) is not None:
            p = Path(raw[k])
            p = p if p.is_absolute() else Path(base_dir) / p
            if not p.is_file():
                diags.append(f"{k}: file not found: {raw[k]}")
    if raw.get("norm", "l2") not in NORMS:
        diags.append(f"norm must be one of {list(NORMS)}")
    degrees = raw.get("degrees", [0, 1, 2])
    if not isinstance(degrees, list) or not degrees:
        diags.append("degrees nonempty")
    elif not all(_is_int(k) and k >= 0 for k in degrees):
        diags.append("degrees must be nonnegative integers")
    horizon, window = raw.get("horizon", 3), raw.get("window", 2)
    if not _is_int(horizon) or horizon < 1:
        diags.append("horizon must be a positive integer")
    if not _is_int(window) or window < 2:
        diags.append("window must be an integer >= 2")
    if _is_int(horizon) and _is_int(window) and horizon < window + 1:
        diags.append(f"horizon >= window + 1 required (horizon {horizon}, window {window})")
    try:
        Strategy.parse(raw.get("strategy", "ball-doubling(1)"))
    except CoarseError as exc:
        diags.append(f"strategy: {exc}")
    if raw.get("route", "auto") not in ("auto", "collapse", "explicit"):
        diags.append("route must be auto, collapse or explicit")
    if raw.get("tie", "min") not in ("min", "max", "random"):
        diags.append("tie must be min, max or random")
    coeffs = raw.get("coeffs", "Q")
    if not (coeffs in ("Q", "Z") or (isinstance(coeffs, str) and coeffs.startswith("F"))):
        diags.append("coeffs must be Q, Z or Fp")
    for k in ("seed", "workers"):
        v = raw.get(k, 0 if k == "seed" else 1)
        if not _is_int(v) or v < (0 if k == "seed" else 1):
            diags.append(f"{k} must be a {'nonnegative' if k == 'seed' else 'positive'} integer")
    for k in ("scenario", "allow_window_cap_override"):
        if k in raw and not isinstance(raw[k], bool):
            diags.append(f"{k} must be a boolean")
    if raw.get("subset") is not None and not isinstance(raw["subset"], dict):
        diags.append("subset must be a selector mapping")
    oracle = _subconfig(OracleOptions, raw.get("oracle"), "oracle", diags)
    if not _is_int(oracle.budget) or oracle.budget < 1:
        diags.append("oracle.budget must be a positive integer")
    sep = _subconfig(SeparationOptions, raw.get("separation"), "separation", diags)
    if not isinstance(sep.r_values, list) or not sep.r_values:
        diags.append("separation.r_values nonempty")
    elif sorted(sep.r_values) != sep.r_values:
        diags.append("separation.r_values must be ascending")
    if diags:
        return None, diags
    kw = {k: v for k, v in raw.items() if k in names}
    cfg = RunConfig(**kw, oracle=oracle, separation=sep, base_dir=str(base_dir))
    return cfg, []


def read_config_file(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text) if p.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return {} if data is None else data


def load_config(path, overrides: dict | None = None) -> RunConfig:
    raw = read_config_file(path)
    if overrides:
        raw = {**raw, **{k: v for k, v in overrides.items() if v is not None}}
    cfg, diags = validate_config(raw, base_dir=Path(path).parent)
    if cfg is None:
        raise ConfigError("invalid config:\n  " + "\n  ".join(diags), diags)
    return cfg
