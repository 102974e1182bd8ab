"""Semiparametric estimators of the distribution of the sample maximum.

Both estimators mix the GEV fit extrapolated to horizon ``m`` with the
nonparametric ``F_hat**m``:

* likelihood-mixed: ``p G(x) + (1 - p) F_hat(x; h)**m`` with ``h`` the
  plug-in bandwidth and ``p`` maximizing the pseudolikelihood
  ``sum_i log g(X_i; p, h)``;
* cross-validated: ``q G(x) + (1 - q) F_hat(x; h)**m`` with
  ``q = h / (1 + h)``, so the bandwidth alone sets the mixing weight; ``h``
  minimizes ``int G_hat^2 - (2/n) sum_i G_hat^(-i)(X_i)`` over a grid.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from . import kernel_est
from .exceptions import DomainError, EstimationError
from .gev_fit import GevParams, gev_cdf, gev_pdf
from .kernel_est import KernelId
from .metrics import simpson_weights

P_TOLERANCE = 1e-6
CV_NODES = 513
H_GRID_POINTS = 129
H_GRID_MIN_FACTOR = 1e-4
H_GRID_MAX_FACTOR = 1e4
WINDOW_PADDING = 1.0

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def _ret(x, out):
    return float(out) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class MlMixFit:
    p: float
    h: float
    gev: GevParams
    kernel: KernelId
    m: int
    loglik_at_p: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"mixing weight must lie in [0, 1], got {self.p}")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise DomainError("bandwidth must be positive")


@dataclass(frozen=True)
class CvMixFit:
    h: float
    gev: GevParams
    kernel: KernelId
    m: int
    cv_value: float

    def __post_init__(self):
        if not (self.h > 0 and math.isfinite(self.h)):
            raise DomainError("bandwidth must be positive")

    @property
    def q(self) -> float:
        return self.h / (1.0 + self.h)


@dataclass(frozen=True)
class Window:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo <= self.hi):
            raise DomainError(f"invalid window [{self.lo}, {self.hi}]")

    @classmethod
    def from_sample(cls, sample, padding_factor: float = WINDOW_PADDING) -> "Window":
        """``[min - c*s, max + c*s]`` with ``s`` the robust scale of the sample."""
        x = np.asarray(sample, dtype=float)
        pad = padding_factor * kernel_est.robust_scale(x)
        return cls(float(x.min() - pad), float(x.max() + pad))


# ---------------------------------------------------------------- likelihood mix

def ml_mix_cdf(fit: MlMixFit, sample, x):
    par = np.asarray(gev_cdf(fit.gev, x))
    npe = np.asarray(kernel_est.np_dsm_cdf(sample, fit.h, fit.kernel, fit.m, x))
    return _ret(x, fit.p * par + (1.0 - fit.p) * npe)


def ml_mix_pdf(fit: MlMixFit, sample, x):
    par = np.asarray(gev_pdf(fit.gev, x))
    npe = np.asarray(kernel_est.np_dsm_pdf(sample, fit.h, fit.kernel, fit.m, x))
    return _ret(x, fit.p * par + (1.0 - fit.p) * npe)


def _component_densities(sample, h, gev, kernel, m):
    x = np.asarray(sample, dtype=float)
    return np.asarray(gev_pdf(gev, x)), np.asarray(kernel_est.np_dsm_pdf(x, h, kernel, m, x))


def _mix_loglik(p: float, par: np.ndarray, npd: np.ndarray) -> float:
    with np.errstate(divide="ignore"):
        return float(np.sum(np.log(p * par + (1.0 - p) * npd)))


def pseudo_loglik(sample, p, h, gev, kernel, m) -> float:
    """``sum_i log(p g_gev(X_i) + (1 - p) g_np(X_i))``; ``-inf`` if any term vanishes."""
    if not 0.0 <= p <= 1.0:
        raise DomainError("p must lie in [0, 1]")
    par, npd = _component_densities(sample, h, gev, KernelId.parse(kernel), m)
    return _mix_loglik(p, par, npd)


def _golden_max(f, lo: float, hi: float, tol: float) -> float:
    a, b = lo, hi
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:  # ties move left
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def fit_p(sample, h, gev, kernel, m, tol: float = P_TOLERANCE) -> MlMixFit:
    """Maximize the pseudolikelihood over ``p`` in [0, 1].

    Golden-section search on the concave objective, then the endpoints are
    compared against the interior optimum; near-ties resolve to the smaller
    ``p``.

    Raises
    ------
    EstimationError
        If the objective is ``-inf`` for every ``p`` (some observation has
        zero density under both components).
    """
    x = np.asarray(sample, dtype=float)
    if x.size < 2:
        raise DomainError("need n >= 2")
    kern = KernelId.parse(kernel)
    par, npd = _component_densities(x, h, gev, kern, m)
    if np.any((par <= 0.0) & (npd <= 0.0)):
        raise EstimationError("pseudolikelihood is -inf on all of [0, 1]")

    def obj(p):
        return _mix_loglik(p, par, npd)

    p_in = _golden_max(obj, 0.0, 1.0, tol)
    candidates = [(0.0, obj(0.0)), (p_in, obj(p_in)), (1.0, obj(1.0))]
    best = max(v for _, v in candidates)
    slack = 1e-12 * max(1.0, abs(best))
    p_hat, val = min((c for c in candidates if c[1] >= best - slack), key=lambda c: c[0])
    return MlMixFit(float(p_hat), float(h), gev, kern, int(m), float(val))


# --------------------------------------------------------- cross-validated mix

def cv_mix_cdf(sample, h, gev, kernel, m, x):
    """``q G(x) + (1 - q) F_hat(x; h)**m`` with ``q = h / (1 + h)``."""
    q = h / (1.0 + h)
    par = np.asarray(gev_cdf(gev, x))
    npe = np.asarray(kernel_est.np_dsm_cdf(sample, h, kernel, m, x))
    return _ret(x, q * par + (1.0 - q) * npe)


class _CvEvaluator:
    """Caches the h-independent pieces of the CV criterion for one sample."""

    def __init__(self, sample, m, gev, kernel, window: Window, nodes=CV_NODES,
                 loo_gev_at_data=None):
        self.data = np.asarray(sample, dtype=float)
        self.n = self.data.size
        if self.n < 2:
            raise DomainError("cross-validation needs n >= 2")
        self.m = int(m)
        self.kernel = KernelId.parse(kernel)
        self.window = window
        if window.hi > window.lo:
            self.xs, self.ws = simpson_weights(window.lo, window.hi, nodes)
            self.par_nodes = np.asarray(gev_cdf(gev, self.xs))
        else:
            self.xs = self.ws = self.par_nodes = None
        if loo_gev_at_data is None:
            self.par_data = np.asarray(gev_cdf(gev, self.data))
        else:
            self.par_data = np.asarray(loo_gev_at_data, dtype=float)
            if self.par_data.shape != self.data.shape:
                raise DomainError("loo_gev_at_data must have one value per observation")

    def __call__(self, h: float) -> float:
        q = h / (1.0 + h)
        if self.xs is not None:
            fm = np.power(np.asarray(kernel_est.kcdf(self.data, h, self.kernel, self.xs)), self.m)
            g = q * self.par_nodes + (1.0 - q) * fm
            first = float(np.dot(self.ws, g * g))
        else:
            first = 0.0
        loo = np.clip(kernel_est.loo_kcdf_at_data(self.data, h, self.kernel), 0.0, 1.0)
        g_loo = q * self.par_data + (1.0 - q) * np.power(loo, self.m)
        return first - 2.0 / self.n * float(np.sum(g_loo))


def cv_objective(sample, m, gev, kernel, h, window: Window, nodes: int = CV_NODES,
                 loo_gev_at_data=None) -> float:
    """Leave-one-out criterion ``int_W G_hat^2 - (2/n) sum_i G_hat^(-i)(X_i)``.

    Only the kernel part is recomputed without ``X_i`` unless
    ``loo_gev_at_data`` supplies ``G^(-i)(X_i)`` from refitted GEVs.
    """
    kernel_est._check_h(h)
    return _CvEvaluator(sample, m, gev, kernel, window, nodes, loo_gev_at_data)(float(h))


def h_grid(sample, points=H_GRID_POINTS, min_factor=H_GRID_MIN_FACTOR,
           max_factor=H_GRID_MAX_FACTOR) -> np.ndarray:
    """Log-spaced candidate bandwidths scaled by the robust sample scale."""
    scale = kernel_est.robust_scale(sample)
    if not scale > 0:
        raise EstimationError("sample has zero spread; bandwidth grid undefined")
    return scale * np.logspace(math.log10(min_factor), math.log10(max_factor), int(points))


def fit_h_cv(sample, m, gev, kernel, grid=None, window: Window | None = None,
             nodes: int = CV_NODES, loo_gev_at_data=None) -> CvMixFit:
    """Grid minimizer of :func:`cv_objective`; ties resolve to the smaller h."""
    x = np.asarray(sample, dtype=float)
    if x.size < 2:
        raise DomainError("cross-validation needs n >= 2")
    grid = h_grid(x) if grid is None else np.sort(np.asarray(grid, dtype=float))
    window = Window.from_sample(x) if window is None else window
    ev = _CvEvaluator(x, m, gev, kernel, window, nodes, loo_gev_at_data)
    values = np.array([ev(float(h)) for h in grid])
    if not np.any(np.isfinite(values)):
        raise EstimationError("cross-validation criterion is not finite on the grid")
    i = int(np.nanargmin(values))  # first occurrence = smallest h
    return CvMixFit(float(grid[i]), gev, ev.kernel, int(m), float(values[i]))


def loo_gev_values(sample, m, k=None, **fit_kwargs) -> np.ndarray:
    """``G^(-i)(X_i)``: GEV refitted without each observation, evaluated at it.

    Costs one GEV fit per observation; used when the leave-one-out scope
    includes the parametric part.
    """
    from .gev_fit import fit_dsm_gev

    x = np.asarray(sample, dtype=float)
    out = np.empty(x.size)
    for i in range(x.size):
        fit = fit_dsm_gev(np.delete(x, i), m, k, **fit_kwargs)
        out[i] = gev_cdf(fit.params, x[i])
    return out
