"""Generalized extreme value distribution and block-maxima fitting.

Parameterization: ``G(x) = exp(-(1 + gamma (x - b) / a)^(-1/gamma))`` on
``1 + gamma (x - b) / a > 0``, and ``exp(-exp(-(x - b) / a))`` at ``gamma = 0``.
Positive ``gamma`` is the heavy-tailed (Frechet-type) side; note this is the
opposite sign convention to ``scipy.stats.genextreme``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
import math

import numpy as np
from scipy import optimize, special

from .exceptions import DomainError, EstimationError

# below this |gamma| the series form of log1p(gamma z)/gamma is used
_SMALL_GAMMA = 1e-6
GAMMA_BOUNDS = (-0.99, 5.0)
MAX_ITER = 500
LOGLIK_TOL = 1e-9


@dataclass(frozen=True)
class GevParams:
    gamma: float
    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.gamma) and math.isfinite(self.a) and math.isfinite(self.b)):
            raise DomainError("GEV parameters must be finite")
        if not self.a > 0:
            raise DomainError(f"GEV scale must be positive, got {self.a}")

    @property
    def lower(self) -> float:
        return self.b - self.a / self.gamma if self.gamma > 0 else -math.inf

    @property
    def upper(self) -> float:
        return self.b - self.a / self.gamma if self.gamma < 0 else math.inf


@dataclass(frozen=True)
class GevFit:
    params: GevParams
    loglik: float
    n_blocks: int
    converged: bool
    iterations: int
    block_size: int = 1
    level: int = 1


def _log1p_ratio(gamma: float, z: np.ndarray) -> np.ndarray:
    """``log1p(gamma z) / gamma`` with the gamma -> 0 limit ``z``."""
    if abs(gamma) < _SMALL_GAMMA:
        gz = gamma * z
        return z * (1.0 - gz / 2.0 + gz * gz / 3.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.log1p(gamma * z) / gamma


def _reduced(params: GevParams, x):
    """Return (z, inside) where inside marks the open support."""
    z = (np.asarray(x, dtype=float) - params.b) / params.a
    if params.gamma == 0.0:
        inside = np.isfinite(z)
    else:
        inside = 1.0 + params.gamma * z > 0.0
    return z, inside


def _ret(x, out):
    return float(out) if np.ndim(x) == 0 else out


def gev_cdf(params: GevParams, x):
    z, inside = _reduced(params, x)
    zi = np.where(inside, z, 0.0)
    t = np.exp(-_log1p_ratio(params.gamma, zi))
    with np.errstate(over="ignore"):
        val = np.exp(-t)
    below = 0.0 if params.gamma > 0 else 1.0
    out = np.where(inside, val, below)
    return _ret(x, out)


def gev_logpdf(params: GevParams, x):
    z, inside = _reduced(params, x)
    zi = np.where(inside, z, 0.0)
    lt = -_log1p_ratio(params.gamma, zi)  # log t
    with np.errstate(over="ignore"):
        val = -math.log(params.a) + (params.gamma + 1.0) * lt - np.exp(lt)
    out = np.where(inside, val, -np.inf)
    return _ret(x, out)


def gev_pdf(params: GevParams, x):
    with np.errstate(under="ignore"):
        out = np.exp(np.asarray(gev_logpdf(params, x)))
    return _ret(x, out)


def gev_quantile(params: GevParams, q):
    qa = np.asarray(q, dtype=float)
    if np.any(~((qa > 0) & (qa < 1))):
        raise DomainError("probabilities must lie strictly inside (0, 1)")
    L = -np.log(-np.log(qa))
    g = params.gamma
    if g == 0.0:
        y = L
    elif abs(g) < _SMALL_GAMMA:
        gl = g * L
        y = L * (1.0 + gl / 2.0 + gl * gl / 6.0)
    else:
        y = np.expm1(g * L) / g
    return _ret(q, params.b + params.a * y)


def gev_sample(params: GevParams, n: int, seed) -> np.ndarray:
    """Seeded GEV draws by inverse transform (for tests and recovery studies)."""
    rng = np.random.default_rng(seed)
    u = (rng.integers(0, 2**53, size=n, dtype=np.int64) + 0.5) / 2.0**53
    return np.asarray(gev_quantile(params, u))


def block_maxima(sample, k: int) -> np.ndarray:
    """Maxima of consecutive blocks of size ``k`` in arrival order.

    The trailing ``n mod k`` observations are dropped.
    """
    x = np.asarray(sample, dtype=float).ravel()
    n = x.size
    if int(k) != k or k < 1 or k > n:
        raise DomainError(f"block size must satisfy 1 <= k <= n={n}, got {k!r}")
    k = int(k)
    nb = n // k
    return x[: nb * k].reshape(nb, k).max(axis=1)


def _check_maxima(maxima) -> np.ndarray:
    x = np.asarray(maxima, dtype=float).ravel()
    if np.unique(x).size < 3:
        raise EstimationError("need at least three distinct maxima")
    return x


def pwm_init(maxima) -> GevParams:
    """Probability-weighted-moment starting values (Hosking's approximation).

    ``c = (2 b1 - b0) / (3 b2 - b0) - ln 2 / ln 3``, shape
    ``-(7.8590 c + 2.9554 c^2)``, then scale and location from ``b0, b1``.
    """
    x = np.sort(_check_maxima(maxima))
    n = x.size
    j = np.arange(n, dtype=float)
    b0 = x.mean()
    b1 = np.sum(j / (n - 1) * x) / n
    b2 = np.sum(j * (j - 1) / ((n - 1) * (n - 2)) * x) / n
    denom = 3.0 * b2 - b0
    l2 = 2.0 * b1 - b0
    if not (denom > 0 and l2 > 0):
        raise EstimationError("degenerate probability-weighted moments")
    c = l2 / denom - math.log(2.0) / math.log(3.0)
    kk = 7.8590 * c + 2.9554 * c * c  # Hosking's k = -gamma
    kk = float(np.clip(kk, -0.95 * GAMMA_BOUNDS[1], -0.95 * GAMMA_BOUNDS[0]))
    if abs(kk) < 1e-8:
        a = l2 / math.log(2.0)
        b = b0 - np.euler_gamma * a
        return GevParams(0.0, float(a), float(b))
    g1 = special.gamma(1.0 + kk)
    a = l2 * kk / (g1 * (1.0 - 2.0 ** (-kk)))
    b = b0 - a * (1.0 - g1) / kk
    return GevParams(float(-kk), float(a), float(b))


def _moment_gumbel(x: np.ndarray) -> GevParams:
    a = max(float(np.std(x)) * math.sqrt(6.0) / math.pi, 1e-12)
    return GevParams(0.0, a, float(np.mean(x) - np.euler_gamma * a))


def gev_loglik(params: GevParams, maxima) -> float:
    return float(np.sum(gev_logpdf(params, np.asarray(maxima, dtype=float))))


def _negloglik(theta, x, bounds):
    g, loga, b = theta
    if not (bounds[0] < g < bounds[1]) or not np.isfinite(loga) or abs(loga) > 700:
        return math.inf
    a = math.exp(loga)
    z = (x - b) / a
    if g != 0.0 and np.any(1.0 + g * z <= 0.0):
        return math.inf
    lt = -_log1p_ratio(g, z)
    with np.errstate(over="ignore"):
        val = len(x) * loga - np.sum((g + 1.0) * lt - np.exp(lt))
    return float(val) if np.isfinite(val) else math.inf


def mle_fit(maxima, init: GevParams | None = None, *, gamma_bounds=GAMMA_BOUNDS,
            max_iter: int = MAX_ITER) -> GevFit:
    """Maximum-likelihood GEV fit by Nelder-Mead over (gamma, log a, b).

    Points outside the support get an infinite penalty.  One restart is
    run from the best vertex of the first search.  The returned fit never
    has a lower log-likelihood than ``init``.
    """
    x = _check_maxima(maxima)
    if init is None:
        init = pwm_init(x)
    starts = [init, _moment_gumbel(x)]
    best_theta, best_val = None, math.inf
    for p in starts:
        theta = np.array([p.gamma, math.log(p.a), p.b])
        val = _negloglik(theta, x, gamma_bounds)
        if val < best_val:
            best_theta, best_val = theta, val
    if best_theta is None:
        raise EstimationError("no feasible starting point for the GEV likelihood")
    init_val = _negloglik(np.array([init.gamma, math.log(init.a), init.b]), x, gamma_bounds)

    total_iter = 0
    converged = False
    theta = best_theta
    for _ in range(2):
        scale = np.array([0.1, 0.1, 0.1 * math.exp(theta[1])])
        simplex = np.vstack([theta, theta + np.diag(scale)])
        res = optimize.minimize(
            _negloglik, theta, args=(x, gamma_bounds), method="Nelder-Mead",
            options={"maxiter": max_iter, "xatol": 1e-10, "fatol": LOGLIK_TOL,
                     "initial_simplex": simplex},
        )
        total_iter += int(res.nit)
        if res.fun <= best_val:
            best_theta, best_val = res.x, float(res.fun)
        converged = bool(res.success)
        theta = best_theta

    if best_val > init_val:
        best_theta, best_val = np.array([init.gamma, math.log(init.a), init.b]), init_val
    params = GevParams(float(best_theta[0]), float(math.exp(best_theta[1])), float(best_theta[2]))
    loglik = -best_val
    return GevFit(params, loglik, x.size, converged and math.isfinite(loglik), total_iter)


def extrapolate(params: GevParams, k: int, m: int) -> GevParams:
    """Move a fit for block size ``k`` to horizon ``m`` by max-stability.

    With ``r = m / k``: ``a_m = a r^gamma`` and
    ``b_m = b + a (r^gamma - 1) / gamma`` (``b + a ln r`` at ``gamma = 0``).
    """
    if k < 1 or m < 1:
        raise DomainError("k and m must be >= 1")
    if k == m:
        return params
    g = params.gamma
    lr = math.log(m / k)
    if abs(g) < _SMALL_GAMMA:
        gl = g * lr
        shift = lr * (1.0 + gl / 2.0 + gl * gl / 6.0)
    else:
        shift = math.expm1(g * lr) / g
    return GevParams(g, params.a * math.exp(g * lr), params.b + params.a * shift)


def default_block_size(n: int, m: int) -> int:
    """``min(m, n // 20)``, at least 2: keeps >= 20 blocks when n allows."""
    return max(2, min(int(m), n // 20))


def fit_dsm_gev(sample, m: int, k: int | None = None, *, gamma_bounds=GAMMA_BOUNDS,
                max_iter: int = MAX_ITER) -> GevFit:
    """Block maxima -> PWM start -> MLE -> extrapolation to level ``m``."""
    x = np.asarray(sample, dtype=float).ravel()
    if m < 1:
        raise DomainError("m must be >= 1")
    if k is None:
        k = default_block_size(x.size, m)
    if k < 1 or x.size // k < 3:
        raise DomainError(f"block size {k} leaves fewer than 3 blocks for n={x.size}")
    maxima = block_maxima(x, k)
    fit = mle_fit(maxima, pwm_init(maxima), gamma_bounds=gamma_bounds, max_iter=max_iter)
    return replace(fit, params=extrapolate(fit.params, k, m), block_size=int(k), level=int(m))
