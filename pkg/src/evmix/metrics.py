"""Quadrature and the normalized integrated squared error used in the study."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dist_zoo
from .exceptions import DomainError

MISE_NODES = 2049


def simpson_weights(lo: float, hi: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the composite Simpson rule."""
    if int(nodes) != nodes or nodes < 3 or nodes % 2 == 0:
        raise DomainError(f"Simpson rule needs an odd node count >= 3, got {nodes!r}")
    if hi < lo:
        raise DomainError("quadrature bounds must satisfy lo <= hi")
    x = np.linspace(lo, hi, int(nodes))
    w = np.ones(int(nodes))
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (hi - lo) / (3.0 * (nodes - 1))
    return x, w


def quadrature(f, lo: float, hi: float, nodes: int) -> float:
    """Composite Simpson approximation of the integral of vectorized ``f``."""
    x, w = simpson_weights(lo, hi, nodes)
    if hi == lo:
        return 0.0
    return float(np.dot(w, np.asarray(f(x), dtype=float)))


@dataclass(frozen=True)
class MiseResult:
    value: float
    lo: float
    hi: float
    nodes: int

    @property
    def window(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    @property
    def length(self) -> float:
        return self.hi - self.lo


def dsm_window(spec, m: int) -> tuple[float, float]:
    """True 10% and 90% quantiles of the maximum of ``m`` draws."""
    lo, hi = dist_zoo.dsm_quantile(spec, m, np.array([0.1, 0.9]))
    return float(lo), float(hi)


def mise(estimator_cdf, spec, m: int, nodes: int = MISE_NODES) -> MiseResult:
    """Squared error between ``estimator_cdf`` and ``F**m`` over the central window.

    Integrates ``(G(x) - F(x)**m)**2`` between the true 10% and 90%
    quantiles of ``F**m`` and divides by the window length.
    """
    lo, hi = dsm_window(spec, m)
    x, w = simpson_weights(lo, hi, nodes)
    diff = np.asarray(estimator_cdf(x), dtype=float) - np.asarray(dist_zoo.dsm_cdf(spec, m, x))
    value = float(np.dot(w, diff * diff) / (hi - lo))
    return MiseResult(value, lo, hi, int(nodes))
