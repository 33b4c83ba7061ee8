"""Independent reference implementations used as test oracles.

Nothing here imports the numerical kernels under test: special functions come
from mpmath/scipy, expectations from quadrature or sampling, and controller
decisions from brute-force enumeration.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy import integrate, special


def e1_quad(x: float) -> float:
    """E1(x) by 30-digit adaptive quadrature of exp(-t)/t over [x, inf)."""
    with mpmath.workdps(30):
        return float(mpmath.quad(lambda t: mpmath.exp(-t) / t, [x, 2 * x + 1, mpmath.inf]))


def cross_rate_quad(power: float, mean: float) -> float:
    """E[log2(1 + P h)], h ~ Exp(mean), by adaptive quadrature in the scaled variable u = h / mean."""
    f = lambda u: math.log1p(power * mean * u) * math.exp(-u)
    val, _ = integrate.quad(f, 0.0, np.inf, epsabs=0.0, epsrel=1e-13, limit=400)
    return val / math.log(2.0)


def mc_mean(samples_fn, n: int, rng: np.random.Generator, chunk: int = 1_000_000):
    """Sample mean and standard error of samples_fn(rng, size) over n draws."""
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n:
        m = min(chunk, n - done)
        x = samples_fn(rng, m)
        total += float(x.sum())
        total_sq += float(np.square(x).sum())
        done += m
    mean = total / n
    var = total_sq / n - mean * mean
    return mean, math.sqrt(max(var, 0.0) / n)


def main_rate_mc(power, h_est, sigma, n, rng):
    return mc_mean(lambda r, m: np.log2(1.0 + power * np.maximum(h_est - sigma * r.standard_normal(m), 0.0)), n, rng)


# ------------------------------------------------------------- flow control


def flow_value(a_p, a_pe, a_o, Q_p, Q_o, Q_pe, Z, V, kappa, gamma, literal=False):
    """Per-node flow objective written out term by term."""
    u = lambda x: np.log2(1.0 + x)
    gain = V * (kappa * u(a_pe) + u(a_p - a_pe + a_o))
    q_pe = 0.0 if literal else Q_pe
    return gain - Q_p * a_p - Q_o * a_o - q_pe * a_pe - Z * (a_p * (1.0 - gamma) - a_pe)


def flow_brute(Q_p, Q_o, Q_pe, Z, V, kappa, gamma, a_max, points, literal=False):
    """Exhaustive search over a uniform 3-d grid with ``points`` values per axis, A_pe <= A_p."""
    g = np.linspace(0.0, a_max, points)
    a_p, a_pe, a_o = np.meshgrid(g, g, g, indexing="ij")
    val = flow_value(a_p, a_pe, a_o, Q_p, Q_o, Q_pe, Z, V, kappa, gamma, literal)
    val = np.where(a_pe <= a_p + 1e-12, val, -np.inf)
    i = int(np.argmax(val))
    return np.array([a_p.flat[i], a_pe.flat[i], a_o.flat[i]]), float(val.flat[i])


# --------------------------------------------------------------- scheduling


def expected_main_quad(powers, h_est, sigma):
    """E[log2(1 + P max(h_est - e, 0))], e ~ N(0, sigma^2), for a vector of powers by adaptive quadrature.

    Integrates over the error variable only where the gain is positive.
    """
    powers = np.atleast_1d(np.asarray(powers, dtype=float))
    if sigma == 0:
        return np.log2(1.0 + powers * max(h_est, 0.0))
    c = h_est / sigma
    if c <= -40:
        return np.zeros_like(powers)
    f = lambda z: np.log2(1.0 + powers * (h_est - sigma * z)) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    lo = -40.0
    pts = sorted({p for p in (c - 1.0, c - 0.1, c - 0.01, -5.0, 0.0, 5.0) if lo < p < c})
    edges = [lo, *pts, c]
    total = np.zeros_like(powers)
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad_vec(f, a, b, epsabs=1e-14, epsrel=1e-12)
        total += val
    return total


def _expected_cross(power, mean):
    if power <= 0:
        return 0.0
    a = 1.0 / (power * mean)
    return float(special.exp1(a) * math.exp(a) / math.log(2.0)) if a < 700 else 0.0


def schedule_brute(Q_p, Q_o, Q_pe, Y, h_est, sigma, powers, R_hat, R_hat_p, cross_means):
    """Loop over every (node, mode, power); ties resolved by first strict improvement.

    Returns ``(node, mode, power)`` with mode 0 = private, 1 = open, or
    ``(None, None, 0.0)`` if no weight is positive.
    """
    n = len(h_est)
    main = [expected_main_quad(powers, h, sigma) for h in h_est]
    best = 0.0
    choice = (None, None, 0.0)
    for j in range(n):
        frac = R_hat_p[j] / R_hat[j]
        factor = R_hat_p[j] / (R_hat[j] - R_hat_p[j])
        for mode in (0, 1):
            for P, r in zip(powers, main[j]):
                if mode == 0:
                    leak = sum(_expected_cross(P, cross_means[j][i]) for i in range(n) if i != j)
                    r_pe = max(frac * r - factor * leak, 0.0)
                    w = Q_pe[j] * r_pe + Q_p[j] * frac * r - Y[j] * P
                else:
                    w = Q_o[j] * r - Y[j] * P
                if w > best:
                    best = w
                    choice = (j, mode, float(P))
    return choice
