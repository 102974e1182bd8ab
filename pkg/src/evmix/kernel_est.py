"""Kernel distribution and density estimators.

``F_hat(x) = mean_i K((x - X_i) / h)`` and ``f_hat(x) = mean_i k((x - X_i) / h) / h``
with a symmetric kernel density ``k`` and its integral ``K``.  The
distribution of the maximum of ``m`` future draws is estimated by
``F_hat**m`` (density ``m F_hat**(m-1) f_hat``).
"""
from __future__ import annotations

import enum
import math

import numpy as np
from scipy import special

from .exceptions import DomainError, EstimationError

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class KernelId(enum.Enum):
    GAUSSIAN = "gaussian"
    EPANECHNIKOV = "epanechnikov"

    @classmethod
    def parse(cls, value) -> "KernelId":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DomainError(f"unknown kernel {value!r}; use 'gaussian' or 'epanechnikov'") from None

    def k(self, u):
        """Kernel density."""
        u = np.asarray(u, dtype=float)
        if self is KernelId.GAUSSIAN:
            return np.exp(-0.5 * u * u) / _SQRT_2PI
        return np.where(np.abs(u) <= 1.0, 0.75 * (1.0 - u * u), 0.0)

    def K(self, u):
        """Integrated kernel, ``K(u) = int_{-inf}^u k``."""
        u = np.asarray(u, dtype=float)
        if self is KernelId.GAUSSIAN:
            return special.ndtr(u)
        uc = np.clip(u, -1.0, 1.0)
        return 0.25 * (2.0 + 3.0 * uc - uc**3)

    @property
    def second_moment(self) -> float:
        """``int u^2 k(u) du``."""
        return 1.0 if self is KernelId.GAUSSIAN else 0.2

    @property
    def psi(self) -> float:
        """``2 int u k(u) K(u) du``, the first-order variance reduction of the smooth CDF."""
        return 1.0 / math.sqrt(math.pi) if self is KernelId.GAUSSIAN else 9.0 / 35.0


def _data(sample) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("sample must be nonempty")
    return x


def _check_h(h):
    if not (np.isfinite(h) and h > 0):
        raise DomainError(f"bandwidth must be positive and finite, got {h!r}")
    return float(h)


def _ret(x, out):
    return float(out) if np.ndim(x) == 0 else out


# rows of query points per chunk, to bound the (query x data) work array
_CHUNK_CELLS = 2_000_000


def _kernel_mean(fn, data: np.ndarray, h: float, x) -> np.ndarray:
    xq = np.asarray(x, dtype=float)
    flat = xq.ravel()
    out = np.empty(flat.size)
    step = max(1, _CHUNK_CELLS // data.size)
    for start in range(0, flat.size, step):
        block = flat[start:start + step]
        out[start:start + step] = fn((block[:, None] - data[None, :]) / h).mean(axis=1)
    return out.reshape(xq.shape)


def kcdf(sample, h, kernel, x):
    """Kernel distribution estimate at ``x`` (scalar or array)."""
    data = _data(sample)
    h = _check_h(h)
    kern = KernelId.parse(kernel)
    return _ret(x, _kernel_mean(kern.K, data, h, x))


def kpdf(sample, h, kernel, x):
    """Kernel density estimate at ``x``."""
    data = _data(sample)
    h = _check_h(h)
    kern = KernelId.parse(kernel)
    return _ret(x, _kernel_mean(kern.k, data, h, x) / h)


def _check_m(m):
    if int(m) != m or m < 1:
        raise DomainError("m must be a positive integer")
    return int(m)


def np_dsm_cdf(sample, h, kernel, m, x):
    """Nonparametric estimate of the maximum's distribution, ``F_hat**m``."""
    m = _check_m(m)
    return _ret(x, np.power(np.asarray(kcdf(sample, h, kernel, x)), m))


def np_dsm_pdf(sample, h, kernel, m, x):
    """Derivative of :func:`np_dsm_cdf` in ``x``."""
    m = _check_m(m)
    f = np.asarray(kpdf(sample, h, kernel, x))
    if m == 1:
        return _ret(x, f)
    F = np.asarray(kcdf(sample, h, kernel, x))
    return _ret(x, m * np.power(F, m - 1) * f)


def loo_kcdf(sample, drop_index, h, kernel, x):
    """Kernel distribution estimate with observation ``drop_index`` removed."""
    data = _data(sample)
    n = data.size
    if n < 2:
        raise DomainError("leave-one-out needs at least two observations")
    if not (0 <= drop_index < n) or int(drop_index) != drop_index:
        raise DomainError(f"drop_index {drop_index!r} out of range for n={n}")
    return kcdf(np.delete(data, int(drop_index)), h, kernel, x)


def loo_kcdf_at_data(sample, h, kernel) -> np.ndarray:
    """All leave-one-out estimates at their own left-out points.

    Entry ``i`` equals ``loo_kcdf(sample, i, h, kernel, X_i)``; it is obtained
    from the full estimate by removing the self term ``K(0) = 1/2``.
    """
    data = _data(sample)
    n = data.size
    if n < 2:
        raise DomainError("leave-one-out needs at least two observations")
    full = np.asarray(kcdf(data, h, kernel, data))
    return (n * full - 0.5) / (n - 1)


def robust_scale(sample) -> float:
    """``min(sd, IQR / 1.349)``; falls back on the sd when the IQR is zero."""
    data = _data(sample)
    sd = float(np.std(data, ddof=1)) if data.size > 1 else 0.0
    q75, q25 = np.percentile(data, [75, 25])
    iqr = (q75 - q25) / 1.349
    scale = min(sd, iqr) if iqr > 0 else sd
    return scale


def pilot_bandwidth(sample) -> float:
    """Normal-reference pilot ``1.06 * robust_scale * n**(-1/5)``."""
    data = _data(sample)
    return 1.06 * robust_scale(data) * data.size ** (-0.2)


def density_derivative_functional(sample, lam: float) -> float:
    """``int (f_hat'(x))^2 dx`` for a Gaussian-kernel estimate with bandwidth ``lam``.

    Exact pairwise form: for the Gaussian kernel,
    ``int phi'(u) phi'(u + d) du = phi_2(d) (1/2 - d^2/4)`` with ``phi_2`` the
    N(0, 2) density, so no quadrature grid is needed even for very wide data.
    """
    data = _data(sample)
    n = data.size
    lam = _check_h(lam)
    total = 0.0
    # row blocks keep memory at O(block * n)
    step = max(1, _CHUNK_CELLS // n)
    for start in range(0, n, step):
        d = (data[start:start + step, None] - data[None, :]) / lam
        d2 = d * d
        total += float(np.sum(np.exp(-0.25 * d2) * (0.5 - 0.25 * d2)))
    return total / (2.0 * math.sqrt(math.pi) * n * n * lam**3)


def plugin_bandwidth(sample, kernel, pilot: float | None = None) -> float:
    """Plug-in bandwidth for the kernel distribution estimator.

    ``h = [psi(k) / (R2(k)^2 I)]^(1/3) n^(-1/3)``, where ``I`` estimates
    ``int (f')^2`` from a Gaussian pilot density estimate.

    Parameters
    ----------
    sample : array_like
        At least four observations, not all identical.
    kernel : KernelId or str
    pilot : float, optional
        Pilot bandwidth; defaults to :func:`pilot_bandwidth`.

    Raises
    ------
    EstimationError
        If the sample has no spread.
    """
    data = _data(sample)
    n = data.size
    if n < 4:
        raise DomainError("plug-in bandwidth needs n >= 4")
    kern = KernelId.parse(kernel)
    if np.ptp(data) == 0.0:
        raise EstimationError("sample has zero spread; bandwidth undefined")
    lam = pilot_bandwidth(data) if pilot is None else pilot
    if not lam > 0:
        raise EstimationError("pilot bandwidth is zero; sample too concentrated")
    curvature = density_derivative_functional(data, lam)
    if not (curvature > 0 and math.isfinite(curvature)):
        raise EstimationError("density-derivative functional is not positive")
    return plugin_bandwidth_from_functional(kern, n, curvature)


def plugin_bandwidth_from_functional(kernel, n: int, curvature: float) -> float:
    """The plug-in formula with a supplied ``int (f')^2``."""
    kern = KernelId.parse(kernel)
    return (kern.psi / (kern.second_moment**2 * curvature)) ** (1.0 / 3.0) * n ** (-1.0 / 3.0)
