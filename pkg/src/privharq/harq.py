"""Incremental-redundancy HARQ bookkeeping at the mutual-information level.

A packet is a counter of information accumulated at the base station and, for
private packets, at every other node.  Codewords themselves are never built:
decoding succeeds once the base-station total strictly exceeds the codeword
rate, and privacy is lost once any eavesdropper total strictly exceeds the
randomization budget ``R_hat - R_hat_p``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from privharq.channel import ChannelBlockState, expected_cross_rate, rate


class PacketKind(enum.Enum):
    PRIVATE = "private"
    OPEN = "open"


@dataclass(frozen=True, eq=False)
class CodeRates:
    """Per-node codeword rate, private payload and open packet size, all in bits."""

    R_hat: np.ndarray
    R_hat_p: np.ndarray
    R_hat_o: np.ndarray

    def __post_init__(self):
        for name in ("R_hat", "R_hat_p", "R_hat_o"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))

    @property
    def markov_factor(self) -> np.ndarray:
        """R_hat_p / (R_hat - R_hat_p): leakage-to-payload conversion per node."""
        return self.R_hat_p / (self.R_hat - self.R_hat_p)

    @property
    def private_fraction(self) -> np.ndarray:
        return self.R_hat_p / self.R_hat

    def errors(self) -> list[str]:
        errs = []
        shapes = {self.R_hat.shape, self.R_hat_p.shape, self.R_hat_o.shape}
        if len(shapes) != 1:
            errs.append("R_hat, R_hat_p and R_hat_o must have one entry per node")
            return errs
        if np.any(~(self.R_hat_p > 0)) or np.any(~(self.R_hat_p < self.R_hat)):
            errs.append("code rates must satisfy 0 < R_hat_p < R_hat")
        if np.any(~(self.R_hat_o > 0)):
            errs.append("R_hat_o must be > 0")
        return errs

    def __eq__(self, other):
        if not isinstance(other, CodeRates):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in ("R_hat", "R_hat_p", "R_hat_o")
        )


@dataclass(frozen=True)
class HarqConfig:
    rates: CodeRates
    M_max: int = 50

    def errors(self) -> list[str]:
        errs = list(self.rates.errors())
        if not (isinstance(self.M_max, (int, np.integer)) and self.M_max >= 1):
            errs.append("M_max must be an integer >= 1")
        return errs


@dataclass
class HarqPacket:
    owner: int
    kind: PacketKind
    packet_id: int
    acc_eaves: np.ndarray
    start_block: int = 0
    acc_main: float = 0.0
    retransmission_count: int = 0
    real_bits: float = 0.0
    # running sum of expected eavesdropper rates (summed over eavesdroppers) across transmissions
    expected_leakage: float = 0.0
    outage: bool = False
    failed: bool = False

    @classmethod
    def new(cls, owner: int, kind: PacketKind, packet_id: int, n_nodes: int, start_block: int = 0,
            real_bits: float = 0.0) -> HarqPacket:
        return cls(owner=owner, kind=kind, packet_id=packet_id, acc_eaves=np.zeros(n_nodes),
                   start_block=start_block, real_bits=real_bits)


def accumulate(packet: HarqPacket, power: float, block: ChannelBlockState, M_max: int | None = None) -> HarqPacket:
    """Add one transmission's mutual information to ``packet`` (in place; also returned).

    Open packets ignore eavesdroppers.  A packet that has already used its
    ``M_max`` transmissions is marked failed and left unchanged otherwise.
    """
    if M_max is not None and packet.retransmission_count >= M_max:
        packet.failed = True
        return packet
    j = packet.owner
    packet.acc_main += float(rate(power, block.h_main[j]))
    if packet.kind is PacketKind.PRIVATE and power > 0:
        leak = rate(power, block.h_cross[j])
        leak[j] = 0.0
        packet.acc_eaves += leak
    packet.retransmission_count += 1
    return packet


def check_decode(packet: HarqPacket, rates: CodeRates) -> bool:
    """Strict test acc_main > R_hat (private) or acc_main > R_hat_o (open)."""
    size = rates.R_hat if packet.kind is PacketKind.PRIVATE else rates.R_hat_o
    return packet.acc_main > float(size[packet.owner])


def check_privacy_outage(packet: HarqPacket, rates: CodeRates) -> bool:
    """Strict test max_i acc_eaves[i] > R_hat - R_hat_p for the packet owner."""
    j = packet.owner
    budget = float(rates.R_hat[j] - rates.R_hat_p[j])
    return bool(packet.acc_eaves.max(initial=0.0) > budget)


def effective_rate_markov(r_main: float, power: float, cross_means, rates: CodeRates, node: int = 0) -> float:
    """Private bits delivered net of the Markov-bounded leakage for one block.

    ``cross_means`` holds the cross-channel means toward every other node
    (entries for the transmitter itself, if present, must be excluded by the
    caller or set to 0).  The result may be negative.
    """
    rp = float(rates.R_hat_p[node])
    r = float(rates.R_hat[node])
    leak = sum(expected_cross_rate(power, float(m)) for m in np.ravel(cross_means) if m > 0)
    return (rp / r) * r_main - rp / (r - rp) * leak


def markov_premise_violations(rates: CodeRates, leakage: np.ndarray, main_rate: np.ndarray) -> list[str]:
    """Flag nodes whose expected per-eavesdropper accumulation over a packet reaches R_hat - R_hat_p.

    ``leakage`` is the per-eavesdropper expected cross rate at a reference power
    and ``main_rate`` the expected main rate at the same power; the packet
    lifetime is taken as R_hat / main_rate blocks.
    """
    out = []
    budget = rates.R_hat - rates.R_hat_p
    blocks = rates.R_hat / np.maximum(main_rate, 1e-12)
    expected_acc = blocks * leakage
    for j in np.flatnonzero(expected_acc >= budget):
        out.append(
            f"node {j}: expected eavesdropper accumulation {expected_acc[j]:.3g} >= R_hat - R_hat_p = {budget[j]:.3g}"
        )
    return out
