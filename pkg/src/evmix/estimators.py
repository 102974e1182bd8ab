"""One-call fitting of the four DSM estimators, plus forecasting from a fit.

Methods: ``parametric`` (GEV extrapolated to ``m``), ``nonparametric``
(``F_hat**m`` with the plug-in bandwidth), ``ml_mix`` and ``cv_mix``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
import json
import math
from pathlib import Path

import numpy as np

from . import dist_zoo, gev_fit, kernel_est, semiparam
from .exceptions import DomainError, EstimationError, InputError
from .gev_fit import GevParams
from .kernel_est import KernelId

METHODS = ("parametric", "nonparametric", "ml_mix", "cv_mix")
METHOD_ALIASES = {"par": "parametric", "np": "nonparametric", "ml": "ml_mix", "cv": "cv_mix"}


def parse_method(name: str) -> str:
    key = name.strip().lower()
    key = METHOD_ALIASES.get(key, key)
    if key not in METHODS:
        raise DomainError(f"unknown method {name!r}; choose from {', '.join(METHODS)} or ml|cv|par|np")
    return key


@dataclass(frozen=True)
class EstimatorKnobs:
    """Tuning settings shared by the simulation harness and ``evmix fit``."""

    block_size: int | None = None          # None: min(m, n // 20), at least 2
    kernel: str | None = None              # None: family rule, else gaussian
    bandwidth: float | None = None         # None: plug-in
    gamma_bounds: tuple[float, float] = gev_fit.GAMMA_BOUNDS
    max_iter: int = gev_fit.MAX_ITER
    p_tolerance: float = semiparam.P_TOLERANCE
    h_grid_min_factor: float = semiparam.H_GRID_MIN_FACTOR
    h_grid_max_factor: float = semiparam.H_GRID_MAX_FACTOR
    h_grid_points: int = semiparam.H_GRID_POINTS
    cv_nodes: int = semiparam.CV_NODES
    window_padding_factor: float = semiparam.WINDOW_PADDING
    loo_refit_gev: bool = False


@dataclass
class FittedDsm:
    """A fitted estimator of the distribution of the next-``m`` maximum."""

    method: str
    m: int
    kernel: str
    h: float
    gev: GevParams | None
    mix: float | None
    data: np.ndarray = field(repr=False)
    diagnostics: dict = field(default_factory=dict)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.method == "parametric":
            out = gev_fit.gev_cdf(self.gev, x)
        elif self.method == "nonparametric":
            out = kernel_est.np_dsm_cdf(self.data, self.h, self.kernel, self.m, x)
        else:
            # both mixes share the form w G + (1 - w) F_hat**m
            w = self.mix
            out = (w * np.asarray(gev_fit.gev_cdf(self.gev, x))
                   + (1.0 - w) * np.asarray(kernel_est.np_dsm_cdf(self.data, self.h, self.kernel, self.m, x)))
        return float(out) if np.ndim(x) == 0 else np.asarray(out)

    def summary(self) -> dict:
        out = {
            "method": self.method,
            "m": self.m,
            "n": int(self.data.size),
            "kernel": self.kernel,
            "h": self.h,
            "p": self.mix if self.method == "ml_mix" else None,
            "q": self.mix if self.method == "cv_mix" else None,
            "gev": asdict(self.gev) if self.gev is not None else None,
            "diagnostics": self.diagnostics,
        }
        return out

    def to_json(self) -> str:
        doc = self.summary()
        doc["data"] = [float(v) for v in self.data]
        return json.dumps(doc, indent=2, allow_nan=False)

    @classmethod
    def from_json(cls, text: str) -> "FittedDsm":
        doc = json.loads(text)
        try:
            method = parse_method(doc["method"])
            gev = GevParams(**doc["gev"]) if doc.get("gev") else None
            mix = doc.get("p") if method == "ml_mix" else doc.get("q")
            return cls(method, int(doc["m"]), doc["kernel"], float(doc["h"]), gev,
                       None if mix is None else float(mix),
                       np.asarray(doc["data"], dtype=float), doc.get("diagnostics", {}))
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed fit file: {exc}") from None


def resolve_kernel(knobs: EstimatorKnobs, spec: dist_zoo.DistributionSpec | None) -> str:
    if knobs.kernel is not None:
        return KernelId.parse(knobs.kernel).value
    return dist_zoo.default_kernel_name(spec) if spec is not None else KernelId.GAUSSIAN.value


def _bandwidth(x, kernel, knobs):
    return kernel_est.plugin_bandwidth(x, kernel) if knobs.bandwidth is None else float(knobs.bandwidth)


def fit_components(x: np.ndarray, m: int, kernel: str, knobs: EstimatorKnobs, need_gev: bool = True):
    """Plug-in bandwidth and level-``m`` GEV fit shared by all methods."""
    h = _bandwidth(x, kernel, knobs)
    gfit = None
    if need_gev:
        gfit = gev_fit.fit_dsm_gev(x, m, knobs.block_size, gamma_bounds=knobs.gamma_bounds,
                                   max_iter=knobs.max_iter)
    return h, gfit


def fit_method(method: str, x: np.ndarray, m: int, kernel: str, h: float,
               gfit: gev_fit.GevFit | None, knobs: EstimatorKnobs) -> FittedDsm:
    """Fit one method given the shared bandwidth and GEV components."""
    diag = {}
    if gfit is not None:
        diag.update(loglik=gfit.loglik, converged=gfit.converged, iterations=gfit.iterations,
                    n_blocks=gfit.n_blocks, block_size=gfit.block_size)
    gev = gfit.params if gfit is not None else None
    if method == "parametric":
        return FittedDsm(method, m, kernel, h, gev, None, x, diag)
    if method == "nonparametric":
        return FittedDsm(method, m, kernel, h, None, None, x, {})
    if method == "ml_mix":
        fit = semiparam.fit_p(x, h, gev, kernel, m, tol=knobs.p_tolerance)
        diag["pseudo_loglik"] = fit.loglik_at_p
        return FittedDsm(method, m, kernel, h, gev, fit.p, x, diag)
    if method == "cv_mix":
        grid = semiparam.h_grid(x, knobs.h_grid_points, knobs.h_grid_min_factor, knobs.h_grid_max_factor)
        window = semiparam.Window.from_sample(x, knobs.window_padding_factor)
        loo = None
        if knobs.loo_refit_gev:
            loo = semiparam.loo_gev_values(x, m, knobs.block_size, gamma_bounds=knobs.gamma_bounds,
                                           max_iter=knobs.max_iter)
        fit = semiparam.fit_h_cv(x, m, gev, kernel, grid, window, knobs.cv_nodes, loo)
        diag["cv_value"] = fit.cv_value
        diag["plugin_h"] = h
        return FittedDsm(method, m, kernel, fit.h, gev, fit.q, x, diag)
    raise DomainError(f"unknown method {method!r}")


def fit_dsm(data, m: int, method: str, knobs: EstimatorKnobs | None = None,
            spec: dist_zoo.DistributionSpec | None = None) -> FittedDsm:
    """Fit a DSM estimator to raw observations."""
    knobs = knobs or EstimatorKnobs()
    if int(m) != m or m < 1:
        raise DomainError("m must be a positive integer")
    method = parse_method(method)
    x = np.asarray(data, dtype=float).ravel()
    kernel = resolve_kernel(knobs, spec)
    h, gfit = fit_components(x, int(m), kernel, knobs, need_gev=method != "nonparametric")
    return fit_method(method, x, int(m), kernel, h, gfit, knobs)


def read_data(path) -> np.ndarray:
    """Newline-separated numbers; blank lines and ``#`` comments are skipped."""
    values = []
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        try:
            v = float(s)
        except ValueError:
            raise InputError(f"{path}, line {lineno}: not a number: {s!r}", line=lineno) from None
        if not math.isfinite(v):
            raise InputError(f"{path}, line {lineno}: value is not finite", line=lineno)
        values.append(v)
    return np.asarray(values)


# ------------------------------------------------------------------- forecast

def _bracket(cdf, prob, start: float, scale: float, max_expand: int = 200):
    lo, hi = start - scale, start + scale
    for _ in range(max_expand):
        if cdf(lo) <= prob:
            break
        lo -= (hi - lo)
    else:
        raise EstimationError(f"cannot bracket quantile {prob} from below")
    for _ in range(max_expand):
        if cdf(hi) >= prob:
            break
        hi += (hi - lo)
    else:
        raise EstimationError(f"cannot bracket quantile {prob} from above")
    return lo, hi


def predictive_quantile(cdf, prob: float, start: float = 0.0, scale: float = 1.0,
                        tol: float = 1e-8) -> float:
    """``x`` with ``cdf(x) = prob`` by bisection on an expanding bracket."""
    if not 0.0 < prob < 1.0:
        raise DomainError("forecast probabilities must lie in (0, 1)")
    if not (math.isfinite(scale) and scale > 0):
        scale = 1.0
    lo, hi = _bracket(cdf, prob, start, scale)
    # bisect until the bracket cannot shrink in floating point
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        v = cdf(mid)
        if abs(v - prob) <= 0.01 * tol:
            return mid
        if v < prob:
            lo = mid
        else:
            hi = mid
    return lo if abs(cdf(lo) - prob) <= abs(cdf(hi) - prob) else hi


def forecast(fitted: FittedDsm, probs=(), thresholds=()) -> dict:
    """Predictive quantiles and exceedance probabilities ``1 - G(t)``."""
    probs = [float(p) for p in probs]
    for p in probs:
        if not 0.0 < p < 1.0:
            raise DomainError(f"forecast probability {p} outside (0, 1)")
    data = fitted.data
    start = float(np.median(data)) if data.size else 0.0
    scale = float(kernel_est.robust_scale(data)) if data.size > 1 else 1.0
    quantiles = [{"prob": p, "x": predictive_quantile(fitted.cdf, p, start, scale)} for p in probs]
    exceed = [{"threshold": float(t), "exceedance": float(1.0 - fitted.cdf(float(t)))} for t in thresholds]
    return {"method": fitted.method, "m": fitted.m, "quantiles": quantiles, "exceedances": exceed}
