"""TOML run configuration: parsing, validation and round-trip serialization."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional, Tuple

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from .errors import ConfigError, HalfPlaneError, ValidationError
from .model import PhysicalModel, SolitonSpectrum, build_model, validate_spectrum
from .soliton import AXIS_NAMES, EVALUATORS, Axis, GridSpec

Range = Tuple[float, float, int]


@dataclass(frozen=True)
class ModelConfig:
    alpha1: float
    alpha2: float
    alpha3: float
    k: float


@dataclass(frozen=True)
class EntryConfig:
    sigma: Tuple[float, float]
    a: Tuple[float, float]
    b: Tuple[float, float]


@dataclass(frozen=True)
class AxisConfig:
    name: str
    min: float
    max: float
    count: int


@dataclass(frozen=True)
class GridConfig:
    axes: Tuple[AxisConfig, ...]
    fixed: Tuple[Tuple[str, float], ...] = ()
    evaluator: str = "general"


@dataclass(frozen=True)
class VerifyConfig:
    h: float = 1e-3
    coarse_h: float = 2e-3
    x: Range = (-5.0, 5.0, 21)
    t: Range = (-1.0, 1.0, 21)
    y: float = 0.0
    residual_tol: float = 1e-4
    order_min: float = 1.8
    order_max: float = 2.2
    sigma_tests: Tuple[Tuple[float, float], ...] = ((1.0, 1.0),)
    zc_points: Tuple[Tuple[float, float], ...] = ((1.0, 1.0),)
    zero_curvature_tol: float = 1e-5
    mass_times: Tuple[float, float] = (0.0, 5.0)
    mass_domain: Tuple[float, float] = (-60.0, 60.0)
    mass_nodes: int = 4096
    mass_tol: float = 1e-8
    corrupt_eps: float = 0.0


@dataclass(frozen=True)
class PropagateConfig:
    domain: Tuple[float, float] = (-60.0, 60.0)
    n_modes: int = 1024
    dt: float = 1e-3
    t0: float = 0.0
    t_final: float = 5.0
    l_inf_tol: Optional[float] = None
    mass_drift_tol: Optional[float] = None


@dataclass(frozen=True)
class FeaturesConfig:
    x: Range = (-40.0, 30.0, 1401)
    t: Range = (0.0, 10.0, 101)
    y: float = 0.0
    n_peaks: int = 1
    breather: bool = False
    expected_velocity: Optional[object] = None  # float or "theory"
    velocity_rtol: float = 0.02
    elastic_rtol: float = 0.02


@dataclass(frozen=True)
class OutputConfig:
    stem: str = "run"


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig
    spectrum: Tuple[EntryConfig, ...]
    grid: Optional[GridConfig] = None
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    propagate: PropagateConfig = field(default_factory=PropagateConfig)
    features: FeaturesConfig = field(default_factory=FeaturesConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def physical_model(self) -> PhysicalModel:
        m = self.model
        return build_model(m.alpha1, m.alpha2, m.alpha3, m.k)

    def soliton_spectrum(self) -> SolitonSpectrum:
        return validate_spectrum(
            (complex(*e.sigma), complex(*e.a), complex(*e.b)) for e in self.spectrum
        )

    def grid_spec(self) -> GridSpec:
        if self.grid is None:
            raise ConfigError("no [grid] section", key="grid")
        return GridSpec(
            tuple(Axis(a.name, a.min, a.max, a.count) for a in self.grid.axes), dict(self.grid.fixed)
        )

    def to_dict(self) -> dict:
        d = {
            "model": asdict(self.model),
            "spectrum": [{k: list(v) for k, v in asdict(e).items()} for e in self.spectrum],
        }
        if self.grid is not None:
            d["grid"] = {
                "axes": [asdict(a) for a in self.grid.axes],
                "fixed": dict(self.grid.fixed),
                "evaluator": self.grid.evaluator,
            }
        for name in ("verify", "propagate", "features", "output"):
            section = {}
            for f in fields(getattr(self, name)):
                v = getattr(getattr(self, name), f.name)
                if v is None:
                    continue
                section[f.name] = _plain(v)
            d[name] = section
        return d


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


# ------------------------------------------------------------ coercion

def _real(v, key):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a real number, got {v!r}", key=key)
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(f"expected a finite number, got {v!r}", key=key)
    return v


def _int(v, key, minimum=None):
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"expected an integer, got {v!r}", key=key)
    if minimum is not None and v < minimum:
        raise ConfigError(f"must be >= {minimum}, got {v}", key=key)
    return v


def _positive(v, key):
    v = _real(v, key)
    if v <= 0:
        raise ConfigError(f"must be positive, got {v}", key=key)
    return v


def _pair(v, key):
    if not isinstance(v, list) or len(v) != 2:
        raise ConfigError(f"expected [re, im] (two reals), got {v!r}", key=key)
    return (_real(v[0], f"{key}[0]"), _real(v[1], f"{key}[1]"))


def _range(v, key):
    if not isinstance(v, list) or len(v) != 3:
        raise ConfigError(f"expected [min, max, count], got {v!r}", key=key)
    return (_real(v[0], f"{key}[0]"), _real(v[1], f"{key}[1]"), _int(v[2], f"{key}[2]", 1))


def _pairs(v, key):
    if not isinstance(v, list) or not v:
        raise ConfigError(f"expected a nonempty list of [a, b] pairs, got {v!r}", key=key)
    return tuple(_pair(p, f"{key}[{i}]") for i, p in enumerate(v))


def _table(v, key):
    if not isinstance(v, dict):
        raise ConfigError("expected a table", key=key)
    return v


def _reject_unknown(table, allowed, prefix):
    for k in table:
        if k not in allowed:
            if k == "alpha4":
                raise ConfigError(
                    "alpha4 is derived from the integrability constraint alpha4 = -2(alpha1 + alpha2*k^2 + alpha3*k) "
                    "and cannot be set",
                    key=f"{prefix}{k}",
                )
            raise ConfigError("unknown key", key=f"{prefix}{k}")


_SECTION_PARSERS = {}


def _section(name, cls, converters):
    def parse(table):
        table = _table(table, name)
        _reject_unknown(table, converters, f"{name}.")
        kwargs = {k: conv(table[k], f"{name}.{k}") for k, conv in converters.items() if k in table}
        return cls(**kwargs)

    _SECTION_PARSERS[name] = parse


def _bool(v, key):
    if not isinstance(v, bool):
        raise ConfigError(f"expected true/false, got {v!r}", key=key)
    return v


def _str(v, key):
    if not isinstance(v, str) or not v:
        raise ConfigError(f"expected a nonempty string, got {v!r}", key=key)
    return v


def _velocity(v, key):
    if v == "theory":
        return v
    if isinstance(v, str):
        raise ConfigError(f"expected a number or \"theory\", got {v!r}", key=key)
    return _real(v, key)


_section(
    "verify",
    VerifyConfig,
    {
        "h": _positive,
        "coarse_h": _positive,
        "x": _range,
        "t": _range,
        "y": _real,
        "residual_tol": _positive,
        "order_min": _real,
        "order_max": _real,
        "sigma_tests": _pairs,
        "zc_points": _pairs,
        "zero_curvature_tol": _positive,
        "mass_times": _pair,
        "mass_domain": _pair,
        "mass_nodes": lambda v, k: _int(v, k, 3),
        "mass_tol": _positive,
        "corrupt_eps": _real,
    },
)
_section(
    "propagate",
    PropagateConfig,
    {
        "domain": _pair,
        "n_modes": lambda v, k: _int(v, k, 1),
        "dt": _positive,
        "t0": _real,
        "t_final": _real,
        "l_inf_tol": _positive,
        "mass_drift_tol": _positive,
    },
)
_section(
    "features",
    FeaturesConfig,
    {
        "x": _range,
        "t": _range,
        "y": _real,
        "n_peaks": lambda v, k: _int(v, k, 1),
        "breather": _bool,
        "expected_velocity": _velocity,
        "velocity_rtol": _positive,
        "elastic_rtol": _positive,
    },
)
_section("output", OutputConfig, {"stem": _str})


def _model(table):
    table = _table(table, "model")
    _reject_unknown(table, ("alpha1", "alpha2", "alpha3", "k"), "model.")
    for k in ("alpha1", "alpha2", "alpha3", "k"):
        if k not in table:
            raise ConfigError("missing required key", key=f"model.{k}")
    return ModelConfig(*(_real(table[k], f"model.{k}") for k in ("alpha1", "alpha2", "alpha3", "k")))


def _spectrum(items):
    if not isinstance(items, list) or not items:
        raise ConfigError("at least one [[spectrum]] entry is required (N >= 1)", key="spectrum")
    out = []
    for i, item in enumerate(items):
        item = _table(item, f"spectrum[{i}]")
        _reject_unknown(item, ("sigma", "a", "b"), f"spectrum[{i}].")
        for k in ("sigma", "a", "b"):
            if k not in item:
                raise ConfigError("missing required key", key=f"spectrum[{i}].{k}")
        out.append(EntryConfig(*(_pair(item[k], f"spectrum[{i}].{k}") for k in ("sigma", "a", "b"))))
    return tuple(out)


def _grid(table):
    table = _table(table, "grid")
    _reject_unknown(table, ("axes", "fixed", "evaluator"), "grid.")
    axes_raw = table.get("axes")
    if not isinstance(axes_raw, list) or not axes_raw:
        raise ConfigError("grid needs a nonempty axes list", key="grid.axes")
    axes = []
    for i, ax in enumerate(axes_raw):
        key = f"grid.axes[{i}]"
        ax = _table(ax, key)
        _reject_unknown(ax, ("name", "min", "max", "count"), f"{key}.")
        for k in ("name", "min", "max", "count"):
            if k not in ax:
                raise ConfigError("missing required key", key=f"{key}.{k}")
        if ax["name"] not in AXIS_NAMES:
            raise ConfigError(f"axis name must be one of {AXIS_NAMES}", key=f"{key}.name")
        axes.append(
            AxisConfig(ax["name"], _real(ax["min"], f"{key}.min"), _real(ax["max"], f"{key}.max"), _int(ax["count"], f"{key}.count", 1))
        )
    fixed = _table(table.get("fixed", {}), "grid.fixed")
    for name in fixed:
        if name not in AXIS_NAMES:
            raise ConfigError(f"fixed coordinate must be one of {AXIS_NAMES}", key=f"grid.fixed.{name}")
    evaluator = table.get("evaluator", "general")
    if evaluator not in EVALUATORS:
        raise ConfigError(f"evaluator must be one of {EVALUATORS}", key="grid.evaluator")
    return GridConfig(
        tuple(axes), tuple((k, _real(v, f"grid.fixed.{k}")) for k, v in fixed.items()), evaluator
    )


def config_from_dict(doc: dict) -> RunConfig:
    _reject_unknown(doc, ("model", "spectrum", "grid", "verify", "propagate", "features", "output"), "")
    if "model" not in doc:
        raise ConfigError("missing [model] section", key="model")
    kwargs = {"model": _model(doc["model"]), "spectrum": _spectrum(doc.get("spectrum"))}
    if "grid" in doc:
        kwargs["grid"] = _grid(doc["grid"])
    for name, parse in _SECTION_PARSERS.items():
        if name in doc:
            kwargs[name] = parse(doc[name])
    cfg = RunConfig(**kwargs)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    try:
        cfg.physical_model()
    except ValidationError as exc:
        raise ConfigError(str(exc), key="model") from None
    for i, e in enumerate(cfg.spectrum):
        try:
            validate_spectrum([(complex(*e.sigma), complex(*e.a), complex(*e.b))])
        except HalfPlaneError as exc:
            raise ConfigError(str(exc).replace("entry 0", f"entry {i}"), key=f"spectrum[{i}].sigma") from None
        except ValidationError as exc:
            raise ConfigError(str(exc).replace("entry 0", f"entry {i}"), key=f"spectrum[{i}]") from None
    try:
        cfg.soliton_spectrum()
    except ValidationError as exc:
        raise ConfigError(str(exc), key="spectrum") from None
    if cfg.grid is not None:
        try:
            cfg.grid_spec()
        except ValidationError as exc:
            raise ConfigError(str(exc), key="grid") from None
    v = cfg.verify
    if v.order_min > v.order_max:
        raise ConfigError("order_min exceeds order_max", key="verify.order_min")


def parse_config(text: str) -> RunConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        raise ConfigError(f"cannot parse configuration: {exc}", line=line) from None
    return config_from_dict(doc)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def serialize_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(cfg.to_dict())
