"""Real and virtual queue recursions.

Every field may be a scalar (one node) or an array over nodes; the updates are
elementwise.  ``[x]^+`` truncation keeps all five queues nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class NodeQueues:
    Q_p: np.ndarray | float = 0.0
    Q_o: np.ndarray | float = 0.0
    Q_pe: np.ndarray | float = 0.0
    Z: np.ndarray | float = 0.0
    Y: np.ndarray | float = 0.0

    @classmethod
    def zeros(cls, n_nodes: int) -> NodeQueues:
        return cls(*(np.zeros(n_nodes) for _ in range(5)))

    def node(self, j: int) -> NodeQueues:
        return NodeQueues(*(float(np.asarray(v)[j]) for v in self.as_tuple()))

    def as_tuple(self):
        return (self.Q_p, self.Q_o, self.Q_pe, self.Z, self.Y)

    def scaled(self, c: float) -> NodeQueues:
        return NodeQueues(*(c * np.asarray(v, dtype=float) for v in self.as_tuple()))


@dataclass
class BlockService:
    """Offered service this block: the scheduled rates times their indicators."""

    r_p: np.ndarray | float = 0.0
    r_o: np.ndarray | float = 0.0
    r_pe: np.ndarray | float = 0.0
    power_used: np.ndarray | float = 0.0


def pos(x):
    return np.maximum(x, 0.0)


def update_data_queues(q: NodeQueues, service: BlockService, arrivals) -> NodeQueues:
    """Q_p <- [Q_p - r_p]^+ + A_p and Q_o <- [Q_o - r_o]^+ + A_o."""
    A_p, A_o = arrivals
    return NodeQueues(
        Q_p=pos(q.Q_p - service.r_p) + A_p,
        Q_o=pos(q.Q_o - service.r_o) + A_o,
        Q_pe=q.Q_pe,
        Z=q.Z,
        Y=q.Y,
    )


def update_virtual_queues(q: NodeQueues, service: BlockService, A_p, A_pe, gamma, alpha) -> NodeQueues:
    """Advance the effective-private, outage-ratio and power virtual queues.

    Power charged to Y is whatever the node actually radiated this block,
    private or open.
    """
    return NodeQueues(
        Q_p=q.Q_p,
        Q_o=q.Q_o,
        Q_pe=pos(q.Q_pe - service.r_pe) + A_pe,
        Z=pos(q.Z - A_pe + A_p * (1.0 - gamma)),
        Y=pos(q.Y + service.power_used - alpha),
    )
