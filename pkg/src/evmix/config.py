"""Experiment configuration: a flat ``key = value`` text format.

Grammar (UTF-8, one entry per line, ``#`` starts a comment)::

    cell = <spec> n=<int> m=<int>      # repeatable, order kept
    methods = parametric,nonparametric,ml_mix,cv_mix
    reps = 100
    master_seed = 20210901
    block_size = auto                  # or an integer
    kernel = auto                      # auto | gaussian | epanechnikov
    bandwidth = plugin                 # or a positive number
    gamma_bounds = -0.99,5
    max_iter = 500
    p_tolerance = 1e-06
    h_grid.min_factor = 0.0001
    h_grid.max_factor = 10000
    h_grid.points = 129
    cv_nodes = 513
    window_padding_factor = 1
    loo_refit_gev = false
    mise_nodes = 2049

Every key except ``cell`` may appear at most once.  Unknown keys are
rejected.  :func:`serialize_config` writes the cells followed by the keys
that differ from their defaults, in the order above.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
import math

from . import dist_zoo
from .dist_zoo import DistributionSpec
from .estimators import METHODS, EstimatorKnobs
from .exceptions import ConfigError
from .kernel_est import KernelId
from .metrics import MISE_NODES

DEFAULT_SEED = 20210901


@dataclass(frozen=True)
class Cell:
    spec: DistributionSpec
    n: int
    m: int

    def __str__(self):
        return f"{self.spec} n={self.n} m={self.m}"


@dataclass(frozen=True)
class ExperimentConfig:
    cells: tuple[Cell, ...]
    methods: tuple[str, ...] = METHODS
    reps: int = 100
    master_seed: int = DEFAULT_SEED
    knobs: EstimatorKnobs = field(default_factory=EstimatorKnobs)
    mise_nodes: int = MISE_NODES

    def __post_init__(self):
        if not self.cells:
            raise ConfigError("config needs at least one cell", key="cell")
        for c in self.cells:
            if c.m > c.n:
                raise ConfigError(f"cell {c}: m must not exceed n", key="cell")
            if c.m < 1 or c.n < 8:
                raise ConfigError(f"cell {c}: need m >= 1 and n >= 8", key="cell")
        if not self.methods:
            raise ConfigError("methods: the method set is empty", key="methods")
        if self.reps < 1:
            raise ConfigError("reps must be >= 1", key="reps")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    v = float(v)
    return str(int(v)) if v.is_integer() and abs(v) < 1e15 else repr(v)


def _int(key, s):
    try:
        return int(s)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {s!r}", key=key) from None


def _float(key, s):
    try:
        v = float(s)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {s!r}", key=key) from None
    if not math.isfinite(v):
        raise ConfigError(f"{key}: value must be finite", key=key)
    return v


def _positive(key, v):
    if not v > 0:
        raise ConfigError(f"{key}: must be positive", key=key)
    return v


def _bool(key, s):
    low = s.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {s!r}", key=key)


def _parse_cell(s: str) -> Cell:
    parts = s.split()
    if len(parts) != 3:
        raise ConfigError(f"cell: expected '<spec> n=<int> m=<int>', got {s!r}", key="cell")
    spec = dist_zoo.parse_spec(parts[0])
    vals = {}
    for tok in parts[1:]:
        name, eq, value = tok.partition("=")
        name = name.lower()
        if not eq or name not in ("n", "m") or name in vals:
            raise ConfigError(f"cell: bad token {tok!r}", key="cell")
        vals[name] = _int("cell", value)
    if set(vals) != {"n", "m"}:
        raise ConfigError(f"cell: need both n= and m= in {s!r}", key="cell")
    return Cell(spec, vals["n"], vals["m"])


def _parse_methods(s):
    names = tuple(x.strip().lower() for x in s.split(",") if x.strip())
    for name in names:
        if name not in METHODS:
            raise ConfigError(f"methods: unknown method {name!r}", key="methods")
    if len(set(names)) != len(names):
        raise ConfigError("methods: duplicate entry", key="methods")
    return names


def _parse_bounds(key, s):
    parts = s.split(",")
    if len(parts) != 2:
        raise ConfigError(f"{key}: expected 'lo,hi'", key=key)
    lo, hi = (_float(key, p.strip()) for p in parts)
    if not lo < 0 < hi:
        raise ConfigError(f"{key}: need lo < 0 < hi", key=key)
    return (lo, hi)


def _odd_nodes(key, s):
    v = _int(key, s)
    if v < 3 or v % 2 == 0:
        raise ConfigError(f"{key}: need an odd integer >= 3", key=key)
    return v


# key -> (parser, getter, setter); parsers receive the raw string
_KEYS = {
    "methods": (lambda s: _parse_methods(s), lambda c: c.methods,
                lambda kw, v: kw.__setitem__("methods", v)),
    "reps": (lambda s: _int("reps", s), lambda c: c.reps,
             lambda kw, v: kw.__setitem__("reps", v)),
    "master_seed": (lambda s: _int("master_seed", s), lambda c: c.master_seed,
                    lambda kw, v: kw.__setitem__("master_seed", v)),
    "block_size": (lambda s: None if s.lower() == "auto" else _positive("block_size", _int("block_size", s)),
                   lambda c: c.knobs.block_size, None),
    "kernel": (lambda s: None if s.lower() == "auto" else _kernel(s),
               lambda c: c.knobs.kernel, None),
    "bandwidth": (lambda s: None if s.lower() == "plugin" else _positive("bandwidth", _float("bandwidth", s)),
                  lambda c: c.knobs.bandwidth, None),
    "gamma_bounds": (lambda s: _parse_bounds("gamma_bounds", s), lambda c: c.knobs.gamma_bounds, None),
    "max_iter": (lambda s: _positive("max_iter", _int("max_iter", s)), lambda c: c.knobs.max_iter, None),
    "p_tolerance": (lambda s: _positive("p_tolerance", _float("p_tolerance", s)),
                    lambda c: c.knobs.p_tolerance, None),
    "h_grid.min_factor": (lambda s: _positive("h_grid.min_factor", _float("h_grid.min_factor", s)),
                          lambda c: c.knobs.h_grid_min_factor, None),
    "h_grid.max_factor": (lambda s: _positive("h_grid.max_factor", _float("h_grid.max_factor", s)),
                          lambda c: c.knobs.h_grid_max_factor, None),
    "h_grid.points": (lambda s: _positive("h_grid.points", _int("h_grid.points", s)),
                      lambda c: c.knobs.h_grid_points, None),
    "cv_nodes": (lambda s: _odd_nodes("cv_nodes", s), lambda c: c.knobs.cv_nodes, None),
    "window_padding_factor": (lambda s: _nonneg("window_padding_factor", s),
                              lambda c: c.knobs.window_padding_factor, None),
    "loo_refit_gev": (lambda s: _bool("loo_refit_gev", s), lambda c: c.knobs.loo_refit_gev, None),
    "mise_nodes": (lambda s: _odd_nodes("mise_nodes", s), lambda c: c.mise_nodes,
                   lambda kw, v: kw.__setitem__("mise_nodes", v)),
}

_KNOB_FIELD = {
    "block_size": "block_size", "kernel": "kernel", "bandwidth": "bandwidth",
    "gamma_bounds": "gamma_bounds", "max_iter": "max_iter", "p_tolerance": "p_tolerance",
    "h_grid.min_factor": "h_grid_min_factor", "h_grid.max_factor": "h_grid_max_factor",
    "h_grid.points": "h_grid_points", "cv_nodes": "cv_nodes",
    "window_padding_factor": "window_padding_factor", "loo_refit_gev": "loo_refit_gev",
}

KEYS = ("cell",) + tuple(_KEYS)


def _kernel(s):
    try:
        return KernelId.parse(s).value
    except ValueError:
        raise ConfigError(f"kernel: unknown kernel {s!r}", key="kernel") from None


def _nonneg(key, s):
    v = _float(key, s)
    if v < 0:
        raise ConfigError(f"{key}: must be >= 0", key=key)
    return v


def parse_config(text: str) -> ExperimentConfig:
    """Parse the documented key-value format; errors name the offending key."""
    cells = []
    kw = {}
    knob_kw = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if not eq:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}", key=key)
        if key == "cell":
            cells.append(_parse_cell(value))
            continue
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", key=key)
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", key=key)
        seen.add(key)
        parser, _, setter = _KEYS[key]
        v = parser(value)
        if setter is None:
            knob_kw[_KNOB_FIELD[key]] = v
        else:
            setter(kw, v)
    knobs = EstimatorKnobs(**knob_kw)
    if knobs.h_grid_min_factor >= knobs.h_grid_max_factor:
        raise ConfigError("h_grid.min_factor must be below h_grid.max_factor", key="h_grid.min_factor")
    return ExperimentConfig(cells=tuple(cells), knobs=knobs, **kw)


def _value_str(key, v) -> str:
    if key == "methods":
        return ",".join(v)
    if key == "gamma_bounds":
        return ",".join(_fmt(b) for b in v)
    if v is None:
        return {"block_size": "auto", "kernel": "auto", "bandwidth": "plugin"}[key]
    return v if isinstance(v, str) else _fmt(v)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text: cells, then non-default keys in grammar order."""
    default = ExperimentConfig(cells=cfg.cells)
    lines = [f"cell = {c}" for c in cfg.cells]
    for key, (_, getter, _) in _KEYS.items():
        v = getter(cfg)
        if v != getter(default):
            lines.append(f"{key} = {_value_str(key, v)}")
    return "\n".join(lines) + "\n"


def defaults_help() -> str:
    """Every key with its default value, for ``--help`` output."""
    base = ExperimentConfig(cells=(Cell(DistributionSpec("rvonmises"), 256, 4),))
    rows = ["cell = <spec> n=<int> m=<int>   (repeatable; required)"]
    for key, (_, getter, _) in _KEYS.items():
        rows.append(f"{key} = {_value_str(key, getter(base))}")
    return "\n".join(rows)


def study_design(n: int = 256, reps: int = 100, methods=METHODS, master_seed: int = DEFAULT_SEED,
                 families=None) -> ExperimentConfig:
    """The full simulation grid: every family at m = n^(1/4), n^(1/2), n^(3/4)."""
    ms = [round(n ** e) for e in (0.25, 0.5, 0.75)]
    specs = dist_zoo.study_families() if families is None else families
    cells = tuple(Cell(s, n, m) for s in specs for m in ms)
    return ExperimentConfig(cells=cells, methods=tuple(methods), reps=reps, master_seed=master_seed)


def with_cells(cfg: ExperimentConfig, cells) -> ExperimentConfig:
    return replace(cfg, cells=tuple(cells))
