"""Per-block drift-plus-penalty controller: flow control at each node, then a central scheduler.

Flow control picks admissions ``(A_p, A_pe, A_o)`` per node by grid search over
``[0, A_max]^3`` (feasible region ``A_pe <= A_p``) followed by one local
refinement pass.  The scheduler evaluates every (node, mode, power) triple on
the power grid and keeps the best one, idling when no weight is positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from privharq import _kernels
from privharq.channel import PANEL_EDGES, PANEL_GRID, ChannelParams, expected_main_rate, leakage_table, quadrature_rules
from privharq.harq import CodeRates, PacketKind, effective_rate_markov
from privharq.queues import NodeQueues

PRIVATE, OPEN = 0, 1
MODES = (PacketKind.PRIVATE, PacketKind.OPEN)


def default_power_grid(p_max: float = 10.0, size: int = 64) -> np.ndarray:
    return np.linspace(0.0, p_max, size)


@dataclass(frozen=True, eq=False)
class ControlParams:
    V: float = 100.0
    kappa: float = 5.0
    A_max: float = 0.75
    power_grid: np.ndarray = field(default_factory=default_power_grid)
    admission_grid_resolution: int = 11
    gamma: float | np.ndarray = 0.1
    alpha: float | np.ndarray = 1.0
    quadrature_order: int = 32
    flow_control_literal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "power_grid", np.asarray(self.power_grid, dtype=float))

    def errors(self) -> list[str]:
        errs = []
        if not self.V > 0:
            errs.append("V must be > 0")
        if not self.kappa > 0:
            errs.append("kappa must be > 0")
        if not self.A_max > 0:
            errs.append("A_max must be > 0")
        grid = self.power_grid
        if grid.ndim != 1 or grid.size == 0:
            errs.append("power_grid must be a nonempty 1-d array")
        else:
            if not np.any(grid == 0):
                errs.append("power_grid must include 0")
            if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
                errs.append("power_grid must be strictly increasing and nonnegative")
        if self.admission_grid_resolution < 2:
            errs.append("admission_grid_resolution must be >= 2")
        g = np.asarray(self.gamma)
        if np.any(~((g >= 0) & (g <= 1))):
            errs.append("gamma must lie in [0, 1]")
        if np.any(~(np.asarray(self.alpha) > 0)):
            errs.append("alpha must be > 0")
        if self.quadrature_order < 2:
            errs.append("quadrature_order must be >= 2")
        return errs

    def __eq__(self, other):
        if not isinstance(other, ControlParams):
            return NotImplemented
        return (
            self.V == other.V
            and self.kappa == other.kappa
            and self.A_max == other.A_max
            and np.array_equal(self.power_grid, other.power_grid)
            and self.admission_grid_resolution == other.admission_grid_resolution
            and np.array_equal(self.gamma, other.gamma)
            and np.array_equal(self.alpha, other.alpha)
            and self.quadrature_order == other.quadrature_order
            and self.flow_control_literal == other.flow_control_literal
        )


@dataclass
class ControlDecision:
    admissions: np.ndarray  # (n, 3): A_p, A_pe, A_o
    scheduled_node: int | None = None
    mode: PacketKind | None = None
    power: float = 0.0


def utility(x):
    return np.log2(1.0 + x)


# ---------------------------------------------------------------- flow control


@lru_cache(maxsize=8)
def _lattice(a_max: float, res: int):
    """Fine admission lattice: step ``unit = cell / m`` with ``top`` steps up to A_max."""
    m = max(1, (res - 1) // 2)
    top = (res - 1) * m
    unit = a_max / top
    u_table = utility(unit * np.arange(2 * top + 1))
    return m, top, unit, u_table


def admission_costs(q: NodeQueues, gamma, literal: bool = False) -> np.ndarray:
    """Linear price per admitted bit for (A_p, A_pe, A_o), shape (..., 3)."""
    Q_p, Q_o, Q_pe, Z = (np.asarray(v, dtype=float) for v in (q.Q_p, q.Q_o, q.Q_pe, q.Z))
    out = np.empty(np.broadcast_shapes(Q_p.shape, Q_o.shape, Q_pe.shape, Z.shape, np.shape(gamma)) + (3,))
    out[..., 0] = Q_p + Z * (1.0 - np.asarray(gamma, dtype=float))
    out[..., 1] = -Z if literal else Q_pe - Z
    out[..., 2] = Q_o
    return out


def flow_objective(adm, costs, V: float, kappa: float):
    """V [kappa u(A_pe) + u(A_p - A_pe + A_o)] - costs . (A_p, A_pe, A_o)."""
    adm = np.asarray(adm, dtype=float)
    gain = kappa * utility(adm[..., 1]) + utility(adm[..., 0] - adm[..., 1] + adm[..., 2])
    return V * gain - np.sum(adm * costs, axis=-1)


def flow_control(q: NodeQueues, params: ControlParams) -> np.ndarray:
    """Admissions maximizing the per-node flow-control objective.

    Accepts scalar queues (returns shape (3,)) or per-node arrays (returns (n, 3)).
    Columns are ``A_p, A_pe, A_o``.

    The objective sees the admissions only through A_pe, the open-utility
    volume A_p - A_pe + A_o, and a linear price.  For each grid value of those
    two, the cheapest split of the volume between A_p and A_o is taken exactly,
    so the search is a 2-d coarse grid followed by one finer pass spanning a
    coarse cell either side of the coarse optimum.
    """
    scalar = np.ndim(q.Q_p) == 0
    costs = np.atleast_2d(admission_costs(q, params.gamma, params.flow_control_literal))
    m, top, unit, u_table = _lattice(float(params.A_max), int(params.admission_grid_resolution))
    idx = _kernels.flow_search(np.ascontiguousarray(costs), float(params.V), float(params.kappa),
                               unit, top, m, u_table)
    out = unit * idx
    return out[0] if scalar else out


# ------------------------------------------------------------------ scheduling


def scheduling_weights(
    queues: NodeQueues,
    h_est: np.ndarray,
    params: ControlParams,
    sigma: float,
    rates: CodeRates,
    leakage: np.ndarray,
) -> np.ndarray:
    """Weights for every (node, mode, power), shape (n, 2, len(power_grid)).

    ``leakage[j, g]`` is the summed expected eavesdropper rate of node j at
    ``power_grid[g]`` (see :func:`privharq.channel.leakage_table`).
    """
    z, w, x, v, size = quadrature_rules(params.quadrature_order)
    n = len(h_est)
    return _kernels.schedule_weights(
        _vec(h_est, n), float(sigma), z, w, x, v, PANEL_EDGES, PANEL_GRID, size, params.power_grid, rates.private_fraction, rates.markov_factor,
        np.ascontiguousarray(leakage, dtype=float),
        _vec(queues.Q_p, n), _vec(queues.Q_o, n), _vec(queues.Q_pe, n), _vec(queues.Y, n),
    )


def _vec(v, n: int) -> np.ndarray:
    if isinstance(v, np.ndarray) and v.shape == (n,) and v.dtype == np.float64 and v.flags.c_contiguous:
        return v
    return np.ascontiguousarray(np.broadcast_to(np.asarray(v, dtype=float), (n,)))


def pick_best(weights: np.ndarray, power_grid: np.ndarray):
    """Argmax with ties to lowest node, then private, then lowest power; idle unless best > 0."""
    flat = int(np.argmax(weights))
    if not weights.flat[flat] > 0:
        return None, None, 0.0
    j, m, g = np.unravel_index(flat, weights.shape)
    return int(j), MODES[m], float(power_grid[g])


def schedule(
    all_queues: NodeQueues,
    block,
    params: ControlParams,
    channel_params: ChannelParams,
    rates: CodeRates,
    leakage: np.ndarray | None = None,
):
    """Choose ``(node, mode, power)`` for this block, or ``(None, None, 0.0)`` to idle."""
    if leakage is None:
        leakage = leakage_table(channel_params, params.power_grid)
    w = scheduling_weights(all_queues, block.h_main_est, params, channel_params.estimation_sigma, rates, leakage)
    return pick_best(w, params.power_grid)


def evaluate_weight(
    j: int,
    mode: PacketKind,
    P: float,
    queues: NodeQueues,
    h_est: np.ndarray,
    params: ControlParams,
    channel_params: ChannelParams,
    rates: CodeRates,
) -> float:
    """Scalar weight of scheduling node ``j`` in ``mode`` at power ``P``."""
    q = queues.node(j)
    r_main = float(expected_main_rate(P, h_est[j], channel_params.estimation_sigma, params.quadrature_order))
    if mode is PacketKind.OPEN:
        return q.Q_o * r_main - q.Y * P
    r_p = float(rates.private_fraction[j]) * r_main
    means = np.delete(channel_params.cross_gain_means[j], j)
    r_pe = max(effective_rate_markov(r_main, P, means, rates, node=j), 0.0)
    return q.Q_pe * r_pe + q.Q_p * r_p - q.Y * P
