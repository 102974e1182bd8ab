"""True distributions for the simulation study.

Seven families with exact CDFs, densities, quantiles and seeded samplers,
plus the distribution of the maximum of ``m`` i.i.d. draws, ``F**m``.

Parameterizations
-----------------
================  ==========================================  ===========
family            F(x)                                        support
================  ==========================================  ===========
pareto (l)        1 - x**(-l)                                 x >= 1
t (l)             Student t with l degrees of freedom         real line
burr (c, l)       1 - (1 + x**c)**(-l)                        x > 0
frechet (g)       exp(-x**(-1/g))                             x > 0
weibull (k)       1 - exp(-x**k)                              x >= 0
revburr (c, l)    1 - (1 + (-x)**c)**l,  c < 0, l < 0         x < 0
rvonmises         1 - exp(-x - sin x)                         x > 0
================  ==========================================  ===========

Random numbers come from numpy's ``PCG64`` bit generator seeded through
``SeedSequence``; see :data:`RNG_ALGORITHM`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np
from scipy import stats

from .exceptions import ConfigError, DomainError

RNG_ALGORITHM = "numpy.random.PCG64 seeded via numpy.random.SeedSequence"

FAMILIES = ("pareto", "t", "burr", "frechet", "weibull", "revburr", "rvonmises")

# parameter names per family, in canonical order
_PARAMS = {
    "pareto": ("l",),
    "t": ("l",),
    "burr": ("c", "l"),
    "frechet": ("g",),
    "weibull": ("k",),
    "revburr": ("c", "l"),
    "rvonmises": (),
}

_ALIASES = {
    "studentt": "t",
    "student": "t",
    "reversedburr": "revburr",
    "rburr": "revburr",
    "vonmises": "rvonmises",
}

_BISECT_TOL = 1e-12


def _fmt_number(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


@dataclass(frozen=True)
class DistributionSpec:
    """A family tag plus its parameters.

    Parameters not used by ``family`` must be left as ``None``.
    """

    family: str
    l: float | None = None
    c: float | None = None
    g: float | None = None
    k: float | None = None

    def __post_init__(self):
        fam = self.family.lower()
        fam = _ALIASES.get(fam, fam)
        if fam not in _PARAMS:
            raise DomainError(f"unknown family {self.family!r}")
        object.__setattr__(self, "family", fam)
        needed = _PARAMS[fam]
        for name in ("l", "c", "g", "k"):
            value = getattr(self, name)
            if name in needed:
                if value is None:
                    raise DomainError(f"{fam} requires parameter {name!r}")
                value = float(value)
                if not math.isfinite(value):
                    raise DomainError(f"parameter {name!r} must be finite")
                object.__setattr__(self, name, value)
            elif value is not None:
                raise DomainError(f"{fam} takes no parameter {name!r}")

        if fam in ("pareto", "t") and not self.l > 0:
            raise DomainError(f"{fam} needs l > 0")
        if fam == "burr" and not (self.c > 0 and self.l > 0):
            raise DomainError("burr needs c > 0 and l > 0")
        if fam == "frechet" and not self.g > 0:
            raise DomainError("frechet needs g > 0")
        if fam == "weibull" and not self.k > 0:
            raise DomainError("weibull needs k > 0")
        if fam == "revburr" and not (self.c < 0 and self.l < 0):
            raise DomainError("revburr needs c < 0 and l < 0")

    @property
    def params(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in _PARAMS[self.family]}

    @property
    def params_str(self) -> str:
        return ",".join(f"{k}={_fmt_number(v)}" for k, v in self.params.items())

    def __str__(self) -> str:
        p = self.params_str
        return f"{self.family}:{p}" if p else self.family

    @property
    def support(self) -> tuple[float, float]:
        fam = self.family
        if fam == "pareto":
            return (1.0, math.inf)
        if fam == "t":
            return (-math.inf, math.inf)
        if fam == "revburr":
            return (-math.inf, 0.0)
        return (0.0, math.inf)


def parse_spec(text: str) -> DistributionSpec:
    """Parse a spec string such as ``"burr:c=0.5,l=0.5"`` or ``"rvonmises"``.

    Values may be written as decimals or fractions (``c=-1/2``).
    """
    text = text.strip()
    if not text:
        raise ConfigError("empty distribution spec", key=text)
    head, _, rest = text.partition(":")
    fam = head.strip().lower()
    fam = _ALIASES.get(fam, fam)
    if fam not in _PARAMS:
        raise ConfigError(f"unknown distribution family {head.strip()!r}", key=head.strip())
    kwargs = {}
    if rest.strip():
        for token in rest.split(","):
            name, eq, value = token.partition("=")
            name = name.strip().lower()
            if not eq or name not in _PARAMS[fam]:
                raise ConfigError(f"bad parameter token {token.strip()!r} for {fam}", key=token.strip())
            if name in kwargs:
                raise ConfigError(f"duplicate parameter {name!r}", key=token.strip())
            try:
                kwargs[name] = float(Fraction(value.strip()))
            except (ValueError, ZeroDivisionError):
                raise ConfigError(f"bad parameter value in {token.strip()!r}", key=token.strip()) from None
    try:
        return DistributionSpec(fam, **kwargs)
    except DomainError as exc:
        raise ConfigError(f"{text!r}: {exc}", key=text) from None


@dataclass(frozen=True, eq=False)
class Sample:
    """Observed values in arrival order, with optional provenance."""

    values: np.ndarray
    spec: DistributionSpec | None = None
    seed: int | None = None
    _sorted: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(values)):
            raise DomainError("sample values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        s = np.sort(values)
        s.setflags(write=False)
        object.__setattr__(self, "_sorted", s)

    def __len__(self):
        return self.values.size

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    @property
    def sorted(self) -> np.ndarray:
        return self._sorted


@dataclass(frozen=True)
class TailProfile:
    """First-order extreme-value index; ``gamma`` is None outside every MDA."""

    gamma: float | None

    @property
    def in_mda(self) -> bool:
        return self.gamma is not None


def _as_array(x):
    return np.asarray(x, dtype=float)


def _ret(x, out):
    return float(out) if np.ndim(x) == 0 else out


def _survival(spec: DistributionSpec, x: np.ndarray) -> np.ndarray:
    """1 - F(x), computed without cancellation in the upper tail."""
    fam = spec.family
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if fam == "pareto":
            return np.where(x <= 1.0, 1.0, np.power(np.maximum(x, 1.0), -spec.l))
        if fam == "t":
            return stats.t.sf(x, spec.l)
        if fam == "burr":
            xp = np.maximum(x, 0.0)
            return np.where(x <= 0.0, 1.0, np.exp(-spec.l * np.log1p(np.power(xp, spec.c))))
        if fam == "frechet":
            xp = np.where(x > 0.0, x, 1.0)
            return np.where(x <= 0.0, 1.0, -np.expm1(-np.power(xp, -1.0 / spec.g)))
        if fam == "weibull":
            xp = np.maximum(x, 0.0)
            return np.exp(-np.power(xp, spec.k))
        if fam == "revburr":
            mx = np.where(x < 0.0, -x, 1.0)
            s = np.exp(spec.l * np.log1p(np.power(mx, spec.c)))
            return np.where(x >= 0.0, 0.0, s)
        # rvonmises
        xp = np.maximum(x, 0.0)
        return np.exp(-(xp + np.sin(xp)))


def cdf(spec: DistributionSpec, x):
    """Distribution function F(x); clamps to 0/1 outside the support."""
    xa = _as_array(x)
    fam = spec.family
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if fam == "t":
            out = stats.t.cdf(xa, spec.l)
        elif fam == "frechet":
            xp = np.where(xa > 0.0, xa, 1.0)
            out = np.where(xa <= 0.0, 0.0, np.exp(-np.power(xp, -1.0 / spec.g)))
        else:
            out = 1.0 - _survival(spec, xa)
    out = np.clip(out, 0.0, 1.0)
    return _ret(x, out)


def pdf(spec: DistributionSpec, x):
    """Density f(x); zero outside the support."""
    xa = _as_array(x)
    fam = spec.family
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if fam == "pareto":
            out = np.where(xa < 1.0, 0.0, spec.l * np.power(np.maximum(xa, 1.0), -spec.l - 1.0))
        elif fam == "t":
            out = stats.t.pdf(xa, spec.l)
        elif fam == "burr":
            c, l = spec.c, spec.l
            xp = np.where(xa > 0.0, xa, 1.0)
            dens = c * l * np.power(xp, c - 1.0) * np.exp(-(l + 1.0) * np.log1p(np.power(xp, c)))
            out = np.where(xa > 0.0, dens, 0.0)
        elif fam == "frechet":
            g = spec.g
            xp = np.where(xa > 0.0, xa, 1.0)
            t = np.power(xp, -1.0 / g)
            dens = t / (g * xp) * np.exp(-t)
            out = np.where(xa > 0.0, dens, 0.0)
        elif fam == "weibull":
            k = spec.k
            xp = np.where(xa > 0.0, xa, 1.0)
            dens = k * np.power(xp, k - 1.0) * np.exp(-np.power(xp, k))
            out = np.where(xa > 0.0, dens, 0.0)
            if k == 1.0:
                out = np.where(xa == 0.0, 1.0, out)
        elif fam == "revburr":
            c, l = spec.c, spec.l
            mx = np.where(xa < 0.0, -xa, 1.0)
            # d/dx of -(1 + (-x)^c)^l
            dens = c * l * np.power(mx, c - 1.0) * np.exp((l - 1.0) * np.log1p(np.power(mx, c)))
            out = np.where(xa < 0.0, dens, 0.0)
        else:
            xp = np.maximum(xa, 0.0)
            dens = (1.0 + np.cos(xp)) * np.exp(-(xp + np.sin(xp)))
            out = np.where(xa >= 0.0, dens, 0.0)
    out = np.nan_to_num(out, nan=0.0, posinf=np.inf)
    return _ret(x, out)


def _bisect_x_plus_sin(y: np.ndarray) -> np.ndarray:
    """Solve x + sin(x) = y for x >= 0 (left-most root)."""
    lo = np.maximum(y - 1.0, 0.0)
    hi = y + 1.0
    # width starts at <= 2; 60 halvings reach ~2e-18 absolute, far below the tolerance
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        below = mid + np.sin(mid) < y
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= _BISECT_TOL * np.maximum(1.0, hi)):
            break
    return 0.5 * (lo + hi)


def _isf(spec: DistributionSpec, s: np.ndarray) -> np.ndarray:
    """Inverse survival function: x with 1 - F(x) = s, for s in (0, 1)."""
    fam = spec.family
    if fam == "pareto":
        return np.power(s, -1.0 / spec.l)
    if fam == "t":
        return stats.t.isf(s, spec.l)
    if fam == "burr":
        return np.power(np.expm1(-np.log(s) / spec.l), 1.0 / spec.c)
    if fam == "frechet":
        return np.power(-np.log1p(-s), -spec.g)
    if fam == "weibull":
        return np.power(-np.log(s), 1.0 / spec.k)
    if fam == "revburr":
        return -np.power(np.expm1(np.log(s) / spec.l), 1.0 / spec.c)
    return _bisect_x_plus_sin(-np.log(s))


def _check_prob(q):
    qa = _as_array(q)
    if np.any(~((qa > 0.0) & (qa < 1.0))):
        raise DomainError("probabilities must lie strictly inside (0, 1)")
    return qa


def quantile(spec: DistributionSpec, q):
    """Inverse of :func:`cdf` for q in (0, 1)."""
    qa = _check_prob(q)
    fam = spec.family
    if fam == "t":
        out = stats.t.ppf(qa, spec.l)
    elif fam == "frechet":
        out = np.power(-np.log(qa), -spec.g)
    elif fam == "weibull":
        out = np.power(-np.log1p(-qa), 1.0 / spec.k)
    elif fam == "rvonmises":
        out = _bisect_x_plus_sin(-np.log1p(-qa))
    else:
        out = _isf(spec, 1.0 - qa)
    return _ret(q, out)


def _open_uniforms(rng: np.random.Generator, n: int) -> np.ndarray:
    # strictly inside (0, 1): 53-bit grid shifted by half a step
    return (rng.integers(0, 2**53, size=n, dtype=np.int64) + 0.5) / 2.0**53


def sample(spec: DistributionSpec, n: int, seed) -> Sample:
    """Draw ``n`` i.i.d. values.

    ``seed`` may be an int, a sequence of ints, or a ``SeedSequence``; each
    call builds its own generator, so identical arguments give bit-identical
    output.
    """
    if n < 1:
        raise DomainError("sample size must be >= 1")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.Generator(np.random.PCG64(ss))
    if spec.family == "t":
        nu = spec.l
        z = rng.standard_normal(n)
        v = rng.gamma(nu / 2.0, 2.0, size=n)
        values = z / np.sqrt(v / nu)
    else:
        u = _open_uniforms(rng, n)
        # use u as the survival probability: exact in the upper tail
        values = _isf(spec, u)
    int_seed = seed if isinstance(seed, (int, np.integer)) else None
    return Sample(values, spec=spec, seed=int_seed)


def _check_m(m):
    if int(m) != m or m < 1:
        raise DomainError("m must be a positive integer")
    return int(m)


def dsm_cdf(spec: DistributionSpec, m: int, x):
    """Distribution of the maximum of ``m`` draws: F(x)**m."""
    m = _check_m(m)
    return _ret(x, np.power(_as_array(cdf(spec, x)), m))


def dsm_quantile(spec: DistributionSpec, m: int, q):
    """Quantile of F**m, i.e. F^{-1}(q**(1/m))."""
    m = _check_m(m)
    qa = _check_prob(q)
    # survival level 1 - q**(1/m) without cancellation
    s = -np.expm1(np.log(qa) / m)
    out = _isf(spec, s)
    return _ret(q, out)


def tail_index(spec: DistributionSpec) -> TailProfile:
    """First-order extreme-value index of the family."""
    fam = spec.family
    if fam in ("pareto", "t"):
        return TailProfile(1.0 / spec.l)
    if fam == "burr":
        return TailProfile(1.0 / (spec.c * spec.l))
    if fam == "frechet":
        return TailProfile(spec.g)
    if fam == "weibull":
        return TailProfile(0.0)
    if fam == "revburr":
        return TailProfile(-1.0 / (spec.c * spec.l))
    return TailProfile(None)


def default_kernel_name(spec: DistributionSpec) -> str:
    """Kernel used for a family in the simulation design."""
    return "epanechnikov" if spec.family == "revburr" else "gaussian"


def study_families() -> list[DistributionSpec]:
    """All parameter settings of the simulation study, in table order."""
    specs = []
    for l in (0.5, 1, 3, 10):
        specs.append(DistributionSpec("pareto", l=l))
    for l in (0.5, 1, 3, 10):
        specs.append(DistributionSpec("t", l=l))
    for l in (0.5, 1, 3):
        for c in (0.5, 1, 3):
            specs.append(DistributionSpec("burr", c=c, l=l))
    for g in (5, 2, 1, 0.5, 0.25):
        specs.append(DistributionSpec("frechet", g=g))
    for k in (0.5, 1, 3, 10):
        specs.append(DistributionSpec("weibull", k=k))
    for l in (-1 / 3, -1, -2):
        for c in (-0.5, -1, -3):
            specs.append(DistributionSpec("revburr", c=c, l=l))
    specs.append(DistributionSpec("rvonmises"))
    return specs


__all__ = [
    "DistributionSpec", "Sample", "TailProfile", "FAMILIES", "RNG_ALGORITHM",
    "parse_spec", "cdf", "pdf", "quantile", "sample", "dsm_cdf", "dsm_quantile",
    "tail_index", "default_kernel_name", "study_families",
]
