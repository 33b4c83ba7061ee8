"""Compiled inner loops for the per-block controller searches."""

import math

import numba
import numpy as np


@numba.njit(cache=True)
def _split(t, s, c_p, c_o, top):
    d_cap = top - t
    if c_p <= c_o:
        d = min(s, d_cap)
    else:
        d = max(s - top, 0)
    o = s - d
    return d, o, d <= d_cap and o <= top


@numba.njit(cache=True)
def _value(t, s, c_p, c_pe, c_o, top, unit, u_table, V, kappa):
    d, o, ok = _split(t, s, c_p, c_o, top)
    if not ok:
        return -np.inf, d, o
    price = (c_p + c_pe) * t + c_p * d + c_o * o
    return V * (kappa * u_table[t] + u_table[s]) - unit * price, d, o


@numba.njit(cache=True)
def flow_search(costs, V, kappa, unit, top, m, u_table):
    """Coarse (t, s) grid at stride m, then a stride-1 pass within +-m of the best point.

    First maximum wins in (t, s) lexicographic order.  Returns lattice indices
    (t + d, t, o) per node.
    """
    n = costs.shape[0]
    out = np.zeros((n, 3), dtype=np.int64)
    for j in range(n):
        c_p, c_pe, c_o = costs[j, 0], costs[j, 1], costs[j, 2]
        best = -np.inf
        bt = 0
        bs = 0
        for t in range(0, top + 1, m):
            for s in range(0, 2 * top + 1, m):
                v, d, o = _value(t, s, c_p, c_pe, c_o, top, unit, u_table, V, kappa)
                if v > best:
                    best = v
                    bt = t
                    bs = s
        best = -np.inf
        rt = bt
        rd = 0
        ro = 0
        for dt in range(-m, m + 1):
            t = min(max(bt + dt, 0), top)
            for ds in range(-m, m + 1):
                s = min(max(bs + ds, 0), 2 * top)
                v, d, o = _value(t, s, c_p, c_pe, c_o, top, unit, u_table, V, kappa)
                if v > best:
                    best = v
                    rt = t
                    rd = d
                    ro = o
        out[j, 0] = rt + rd
        out[j, 1] = rt
        out[j, 2] = ro
    return out


@numba.njit(cache=True)
def main_rate_rule(h, sigma, gh_z, gh_w, gl_x, gl_w, edges, grid, out_g, out_w):
    """Fill (gain, weight) pairs for E over e ~ N(0, sigma^2) of f(max(h - e, 0)); returns the count.

    Nodes with zero gain contribute f(0) = 0 and are left out.
    """
    zmax = gh_z[gh_z.shape[0] - 1]
    c = h / sigma
    if c > zmax:
        for q in range(gh_z.shape[0]):
            out_g[q] = h - sigma * gh_z[q]
            out_w[q] = gh_w[q]
        return gh_z.shape[0]
    lo = -zmax
    if c <= lo:
        return 0
    norm = 1.0 / math.sqrt(2.0 * math.pi)
    count = 0
    right = c
    # graded panels next to the kink, then the fixed grid down to the lower cut
    n_edges = edges.shape[0]
    for i in range(n_edges + grid.shape[0]):
        if i < n_edges:
            left = c - edges[i]
        else:
            left = grid[i - n_edges]
            if left >= right:
                continue
        left = max(left, lo)
        half = 0.5 * (right - left)
        mid = 0.5 * (right + left)
        for q in range(gl_x.shape[0]):
            z = mid + half * gl_x[q]
            out_g[count] = h - sigma * z
            out_w[count] = half * gl_w[q] * norm * math.exp(-0.5 * z * z)
            count += 1
        if left <= lo:
            break
        right = left
    return count


@numba.njit(cache=True, fastmath=True)
def schedule_weights(h_est, sigma, gh_z, gh_w, gl_x, gl_w, edges, grid, size, powers, frac, factor, leakage,
                     Q_p, Q_o, Q_pe, Y):
    """(n, 2, G) weights; index 0 on the mode axis is private, 1 is open."""
    n = h_est.shape[0]
    G = powers.shape[0]
    r = np.zeros((n, G))
    gains = np.empty(size)
    probs = np.empty(size)
    for j in range(n):
        if sigma == 0.0:
            gain = max(h_est[j], 0.0)
            for g in range(G):
                r[j, g] = np.log(1.0 + powers[g] * gain)
            continue
        k = main_rate_rule(h_est[j], sigma, gh_z, gh_w, gl_x, gl_w, edges, grid, gains, probs)
        for q in range(k):
            gain = gains[q]
            wq = probs[q]
            for g in range(G):
                r[j, g] += wq * np.log(1.0 + powers[g] * gain)
    inv_ln2 = 1.0 / math.log(2.0)
    out = np.empty((n, 2, G))
    for j in range(n):
        for g in range(G):
            rj = r[j, g] * inv_ln2
            cost = Y[j] * powers[g]
            r_p = frac[j] * rj
            r_pe = max(r_p - factor[j] * leakage[j, g], 0.0)
            out[j, 0, g] = Q_pe[j] * r_pe + Q_p[j] * r_p - cost
            out[j, 1, g] = Q_o[j] * rj - cost
    return out
