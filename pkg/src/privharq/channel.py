"""Block-fading channel model: gain sampling, noisy main-channel estimates, achievable rates.

All power gains are noise-normalized and exponentially distributed (Rayleigh
amplitude).  Rates are in bits per channel use, so every logarithm is base 2.

Cross-channel quantities are stored as ``(n, n)`` arrays indexed ``[j, i]`` for
transmitter ``j`` and overhearing node ``i``; the diagonal is unused and kept at 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from privharq import _kernels

EULER_GAMMA = 0.57721566490153286061
LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class ChannelParams:
    main_gain_means: np.ndarray
    cross_gain_means: np.ndarray
    estimation_sigma: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "main_gain_means", np.asarray(self.main_gain_means, dtype=float))
        cross = np.array(self.cross_gain_means, dtype=float)
        if cross.ndim == 2 and cross.shape[0] == cross.shape[1]:
            np.fill_diagonal(cross, 0.0)
        object.__setattr__(self, "cross_gain_means", cross)

    @property
    def n_nodes(self) -> int:
        return int(self.main_gain_means.shape[0])

    def errors(self) -> list[str]:
        errs = []
        n = self.n_nodes
        if self.main_gain_means.ndim != 1 or n < 1:
            errs.append("main_gain_means must be a nonempty 1-d array")
        elif np.any(~(self.main_gain_means > 0)):
            errs.append("main_gain_means must all be > 0")
        if self.cross_gain_means.shape != (n, n):
            errs.append(f"cross_gain_means must have shape ({n}, {n}) covering {n * (n - 1)} ordered pairs")
        else:
            off = self.cross_gain_means[~np.eye(n, dtype=bool)]
            if np.any(~(off > 0)):
                errs.append("cross_gain_means must be > 0 for every ordered pair j != i")
        if not self.estimation_sigma >= 0:
            errs.append("estimation_sigma must be >= 0")
        return errs

    def __eq__(self, other):
        if not isinstance(other, ChannelParams):
            return NotImplemented
        return (
            np.array_equal(self.main_gain_means, other.main_gain_means)
            and np.array_equal(self.cross_gain_means, other.cross_gain_means)
            and self.estimation_sigma == other.estimation_sigma
            and self.rng_seed == other.rng_seed
        )


@dataclass
class ChannelBlockState:
    h_main: np.ndarray
    h_main_est: np.ndarray
    h_cross: np.ndarray
    k: int = 0


def sample_block(params: ChannelParams, rng: np.random.Generator, k: int = 0) -> ChannelBlockState:
    """Draw one block of i.i.d. exponential gains plus Gaussian-perturbed main estimates.

    Draw order is fixed (main gains, estimation errors, cross gains) so a given
    generator state always yields the same block.
    """
    n = params.n_nodes
    h_main = rng.exponential(params.main_gain_means)
    noise = rng.standard_normal(n)
    h_cross = rng.exponential(1.0, size=(n, n)) * params.cross_gain_means
    return ChannelBlockState(
        h_main=h_main,
        h_main_est=h_main + params.estimation_sigma * noise,
        h_cross=h_cross,
        k=k,
    )


def rate(power, gain):
    """Instantaneous achievable rate log2(1 + P h)."""
    return np.log2(1.0 + np.multiply(power, gain))


# Truncated branch: panel edges measured back from the truncation point (standardized units),
# followed by a fixed grid over the Gaussian bulk.
PANEL_EDGES = np.array([0.01, 0.05, 0.2, 0.8])
PANEL_GRID = np.array([6.0, 4.0, 3.0, 2.0, 1.0, 0.0, -1.0, -2.0, -3.0, -4.0, -6.0, -11.0])


@lru_cache(maxsize=16)
def hermite_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite nodes/weights rescaled to expectations under N(0, 1)."""
    x, w = np.polynomial.hermite.hermgauss(order)
    return math.sqrt(2.0) * x, w / math.sqrt(math.pi)


@lru_cache(maxsize=16)
def quadrature_rules(order: int):
    """Hermite rule plus the per-panel Legendre rule used when the truncation cuts into the Hermite span."""
    z, w = hermite_nodes(order)
    x, v = np.polynomial.legendre.leggauss(max(4, order // 4))
    size = max(order, (len(PANEL_EDGES) + len(PANEL_GRID)) * len(x))
    return z, w, x, v, size


def main_rate_rule(gain_estimate: float, sigma: float, quadrature_order: int = 32):
    """Effective-gain nodes and probability weights for the estimation-error expectation.

    When every Hermite node leaves a positive gain the plain Hermite rule is
    used.  Otherwise the integrand has a kink where the gain hits zero, which
    Hermite quadrature resolves poorly, so the Gaussian is integrated only up
    to that point with Legendre panels that shrink toward it.
    """
    z, w, x, v, size = quadrature_rules(quadrature_order)
    g = np.empty(size)
    p = np.empty(size)
    k = _kernels.main_rate_rule(float(gain_estimate), float(sigma), z, w, x, v, PANEL_EDGES, PANEL_GRID, g, p)
    return g[:k], p[:k]


def expected_main_rate(power, gain_estimate, sigma: float, quadrature_order: int = 32):
    """E[log2(1 + P max(h_est - e, 0))] for e ~ N(0, sigma^2).

    ``power`` and ``gain_estimate`` broadcast against each other.
    """
    power = np.asarray(power, dtype=float)
    gain_estimate = np.asarray(gain_estimate, dtype=float)
    if sigma == 0:
        return rate(power, np.maximum(gain_estimate, 0.0))
    P, H = np.broadcast_arrays(power, gain_estimate)
    flat_p = P.ravel()
    uniq, inv = np.unique(H.ravel(), return_inverse=True)
    out = np.zeros(flat_p.shape)
    for i, h in enumerate(uniq):
        g, p = main_rate_rule(h, sigma, quadrature_order)
        if g.size:
            m = inv.ravel() == i
            out[m] = np.log2(1.0 + flat_p[m, None] * g) @ p
    return out.reshape(P.shape)[()]


def _e1_series(x: float) -> float:
    total = 0.0
    term = 1.0
    k = 1
    while True:
        term *= -x / k
        contrib = term / k
        total += contrib
        if abs(contrib) < 1e-17 * max(abs(total), 1e-300):
            break
        k += 1
    return -EULER_GAMMA - math.log(x) - total


def _e1_scaled_cf(x: float) -> float:
    """e^x E1(x) by modified Lentz evaluation of the continued fraction (x > 1)."""
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 1000):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return h


def exp_integral_e1(x: float) -> float:
    """Exponential integral E1(x) for x > 0."""
    if not x > 0:
        raise ValueError(f"exp_integral_e1 requires x > 0, got {x!r}")
    if x <= 1.0:
        return _e1_series(x)
    return math.exp(-x) * _e1_scaled_cf(x)


def expected_cross_rate(power: float, cross_mean: float) -> float:
    """E[log2(1 + P h)] for h ~ Exponential(mean=cross_mean), via exp(a) E1(a), a = 1/(P m)."""
    if power <= 0:
        return 0.0
    if not cross_mean > 0:
        raise ValueError("cross_mean must be > 0")
    a = 1.0 / (power * cross_mean)
    if a <= 1.0:
        scaled = math.exp(a) * _e1_series(a)
    else:
        scaled = _e1_scaled_cf(a)
    return scaled / LN2


def leakage_table(params: ChannelParams, powers: np.ndarray) -> np.ndarray:
    """Sum over eavesdroppers of expected cross rates, shape (n_nodes, len(powers))."""
    n = params.n_nodes
    out = np.zeros((n, len(powers)))
    for j in range(n):
        for g, p in enumerate(powers):
            out[j, g] = sum(
                expected_cross_rate(float(p), float(params.cross_gain_means[j, i])) for i in range(n) if i != j
            )
    return out
