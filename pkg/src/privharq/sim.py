"""Slotted simulation loop tying channel, HARQ, queues and controller together.

Two accountings run side by side.  The control plane drains the queues
fluidly by the realized per-block rates.  The data plane cuts admitted
private/open bits into fixed-size HARQ packets and counts discrete decode and
privacy-outage events.  Both are reported in :class:`RunSummary`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from privharq.channel import ChannelParams, expected_cross_rate, leakage_table, sample_block
from privharq.control import OPEN, PRIVATE, ControlParams, flow_control, scheduling_weights
from privharq.harq import (
    HarqConfig,
    HarqPacket,
    PacketKind,
    accumulate,
    check_decode,
    check_privacy_outage,
    markov_premise_violations,
)
from privharq.queues import BlockService, NodeQueues, update_data_queues, update_virtual_queues

log = logging.getLogger(__name__)

GRANULARITIES = ("summary", "per_block")


class ConfigError(ValueError):
    """Raised with every violated invariant listed, one per line."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.errors))


@dataclass(frozen=True)
class SimConfig:
    channel_params: ChannelParams
    harq_config: HarqConfig
    control_params: ControlParams
    n_blocks: int = 100_000
    warmup_blocks: int | None = None
    seed: int = 0
    metrics_granularity: str = "summary"

    @property
    def n_nodes(self) -> int:
        return self.channel_params.n_nodes

    @property
    def warmup(self) -> int:
        return self.n_blocks // 10 if self.warmup_blocks is None else self.warmup_blocks

    def errors(self) -> list[str]:
        errs = []
        errs += self.channel_params.errors()
        errs += self.harq_config.errors()
        errs += self.control_params.errors()
        n = self.n_nodes
        if self.harq_config.rates.R_hat.shape != (n,):
            errs.append(f"code rates must have {n} entries, one per node")
        for name in ("gamma", "alpha"):
            v = np.asarray(getattr(self.control_params, name))
            if v.ndim > 0 and v.shape != (n,):
                errs.append(f"{name} must be a scalar or have {n} entries")
        if self.n_blocks < 0:
            errs.append("n_blocks must be >= 0")
        w = self.warmup
        if w < 0:
            errs.append("warmup_blocks must be >= 0")
        elif self.n_blocks > 0 and not w < self.n_blocks:
            errs.append("warmup_blocks must be < n_blocks")
        elif self.n_blocks == 0 and w != 0:
            errs.append("warmup_blocks must be 0 when n_blocks is 0")
        if self.metrics_granularity not in GRANULARITIES:
            errs.append(f"metrics_granularity must be one of {GRANULARITIES}")
        return errs

    def premise_warnings(self) -> list[str]:
        """Nodes whose (R_hat, R_hat_p) choice breaks E[D_ji] < R_hat - R_hat_p at the budget power."""
        ch, rates = self.channel_params, self.harq_config.rates
        alpha = np.broadcast_to(np.asarray(self.control_params.alpha, dtype=float), (self.n_nodes,))
        n = self.n_nodes
        leak = np.array([
            max((expected_cross_rate(alpha[j], ch.cross_gain_means[j, i]) for i in range(n) if i != j), default=0.0)
            for j in range(n)
        ])
        main = np.array([expected_cross_rate(alpha[j], ch.main_gain_means[j]) for j in range(n)])
        return markov_premise_violations(rates, leak, main)

    def validate(self) -> SimConfig:
        errs = self.errors()
        if errs:
            raise ConfigError(errs)
        return self


_PER_NODE = (
    "x_p", "x_o", "x_pe", "mu_p", "mu_o", "mu_pe_fluid", "mu_pe_empirical", "avg_power",
    "avg_Q_p", "avg_Q_o", "avg_Q_pe", "avg_Z", "avg_Y", "utility_per_block",
)
_COUNTS = (
    "decoded_private", "decoded_open", "outage_packets", "failed_private", "failed_open", "decode_failures",
)


@dataclass
class RunSummary:
    """Time averages over the post-warmup window, per node, plus whole-horizon totals.

    Rates are bits per channel use per block.  ``horizon`` holds exact sums over
    all ``n_blocks`` (warmup included) and final queue values, which is what the
    telescoping identities are checked against.
    """

    n_nodes: int
    n_blocks: int
    averaged_blocks: int
    x_p: np.ndarray
    x_o: np.ndarray
    x_pe: np.ndarray
    mu_p: np.ndarray
    mu_o: np.ndarray
    mu_pe_fluid: np.ndarray
    mu_pe_empirical: np.ndarray
    avg_power: np.ndarray
    avg_Q_p: np.ndarray
    avg_Q_o: np.ndarray
    avg_Q_pe: np.ndarray
    avg_Z: np.ndarray
    avg_Y: np.ndarray
    utility_per_block: np.ndarray
    decoded_private: np.ndarray
    decoded_open: np.ndarray
    outage_packets: np.ndarray
    failed_private: np.ndarray
    failed_open: np.ndarray
    decode_failures: np.ndarray
    markov_bound_sum: np.ndarray
    dummy_bits: np.ndarray  # (n, 2), columns private/open
    packet_bits: np.ndarray
    kappa: float = 5.0
    horizon: dict = field(default_factory=dict)
    trace: dict | None = None

    @property
    def completed_private(self) -> np.ndarray:
        return self.decoded_private + self.failed_private

    @property
    def empirical_outage_fraction(self) -> float:
        """Pooled over nodes: outaged private packets / completed private packets."""
        done = int(self.completed_private.sum())
        return float(self.outage_packets.sum()) / done if done else 0.0

    @property
    def markov_bound_avg(self) -> float:
        """Per-packet Markov bound averaged over completed private packets."""
        done = int(self.completed_private.sum())
        return float(self.markov_bound_sum.sum()) / done if done else 0.0

    @property
    def outage_fraction_per_node(self) -> np.ndarray:
        done = self.completed_private
        return np.divide(self.outage_packets, done, out=np.zeros(self.n_nodes), where=done > 0)

    @property
    def utility_avg(self) -> float:
        """Network utility of the time-averaged admission rates."""
        gain = self.kappa * np.log2(1.0 + self.x_pe) + np.log2(1.0 + np.maximum(self.x_p - self.x_pe, 0.0) + self.x_o)
        return float(gain.sum())

    def dummy_fraction(self, mode: int = PRIVATE) -> float:
        """Share of packet payload that was padding, for private (default) or open packets."""
        total = float(self.packet_bits[:, mode].sum())
        return float(self.dummy_bits[:, mode].sum()) / total if total else 0.0

    def mean(self, name: str) -> float:
        """Per-node average of a per-node field."""
        return float(np.mean(getattr(self, name))) if self.n_nodes else 0.0

    def total_backlog(self) -> float:
        return float(np.sum(self.avg_Q_p + self.avg_Q_o))


class Simulation:
    """Mutable per-run state; :meth:`step_block` advances one block."""

    def __init__(self, config: SimConfig):
        self.config = config.validate()
        for w in config.premise_warnings():
            log.warning("Markov premise: %s", w)
        ch, ctrl, rates = config.channel_params, config.control_params, config.harq_config.rates
        n = ch.n_nodes
        self.n = n
        self.rng = np.random.default_rng(np.random.SeedSequence([ch.rng_seed, config.seed]))
        self.leakage = leakage_table(ch, ctrl.power_grid)
        self.gamma = np.broadcast_to(np.asarray(ctrl.gamma, dtype=float), (n,)).copy()
        self.alpha = np.broadcast_to(np.asarray(ctrl.alpha, dtype=float), (n,)).copy()
        self.frac = rates.private_fraction
        self.factor = rates.markov_factor
        self.budget = rates.R_hat - rates.R_hat_p
        self.queues = NodeQueues.zeros(n)
        self.active: dict[tuple[int, int], HarqPacket] = {}
        self.backlog_bits = np.zeros((n, 2))  # admitted bits not yet cut into packets
        self.next_packet_id = 0
        self.k = 0
        self._init_accumulators()

    def _init_accumulators(self):
        n = self.n
        self.sums = {name: np.zeros(n) for name in _PER_NODE}
        self.sums["pe_bits"] = np.zeros(n)
        self.counts = {name: np.zeros(n, dtype=np.int64) for name in _COUNTS}
        self.markov_bound_sum = np.zeros(n)
        self.dummy_bits = np.zeros((n, 2))
        self.packet_bits = np.zeros((n, 2))
        self.horizon = {k: np.zeros(self.n) for k in ("A_p", "A_pe", "A_o", "served_p", "served_o", "served_pe", "power")}
        self.trace_rows: list[tuple] = []

    # -- data plane ---------------------------------------------------------

    def _packet_for(self, j: int, mode: int) -> HarqPacket:
        key = (j, mode)
        pkt = self.active.get(key)
        if pkt is None:
            rates = self.config.harq_config.rates
            size = float((rates.R_hat_p if mode == PRIVATE else rates.R_hat_o)[j])
            real = min(self.backlog_bits[j, mode], size)
            self.backlog_bits[j, mode] -= real
            if self.k >= self.config.warmup:
                self.dummy_bits[j, mode] += size - real
                self.packet_bits[j, mode] += size
            kind = PacketKind.PRIVATE if mode == PRIVATE else PacketKind.OPEN
            pkt = HarqPacket.new(j, kind, self.next_packet_id, self.n, start_block=self.k, real_bits=real)
            self.next_packet_id += 1
            self.active[key] = pkt
        return pkt

    def _transmit_packet(self, block, j: int, mode: int, g: int, power: float):
        cfg = self.config.harq_config
        pkt = self._packet_for(j, mode)
        accumulate(pkt, power, block)
        counting = self.k >= self.config.warmup
        if mode == PRIVATE:
            pkt.expected_leakage += self.leakage[j, g]
            if not pkt.outage and check_privacy_outage(pkt, cfg.rates):
                pkt.outage = True
        decoded = check_decode(pkt, cfg.rates)
        if not decoded and pkt.retransmission_count >= cfg.M_max:
            pkt.failed = True
        if not (decoded or pkt.failed):
            return
        del self.active[(j, mode)]
        if not counting:
            return
        if mode == PRIVATE:
            self.markov_bound_sum[j] += pkt.expected_leakage / self.budget[j]
            self.counts["outage_packets"][j] += pkt.outage
            if decoded:
                self.counts["decoded_private"][j] += 1
                if not pkt.outage:
                    self.sums["pe_bits"][j] += pkt.real_bits
            else:
                self.counts["failed_private"][j] += 1
        else:
            if decoded:
                self.counts["decoded_open"][j] += 1
            else:
                self.counts["failed_open"][j] += 1
        if pkt.failed:
            self.counts["decode_failures"][j] += 1

    # -- one block ------------------------------------------------------------

    def step_block(self) -> None:
        cfg = self.config
        ctrl = cfg.control_params
        k = self.k
        n = self.n
        q = self.queues

        block = sample_block(cfg.channel_params, self.rng, k)
        adm = flow_control(q, ctrl)
        A_p, A_pe, A_o = adm[:, 0], adm[:, 1], adm[:, 2]

        w = scheduling_weights(q, block.h_main_est, ctrl, cfg.channel_params.estimation_sigma,
                               cfg.harq_config.rates, self.leakage)
        flat = int(np.argmax(w))
        r_p = np.zeros(n)
        r_o = np.zeros(n)
        r_pe = np.zeros(n)
        power = np.zeros(n)
        node, mode, p = -1, -1, 0.0
        if w.flat[flat] > 0:
            node, mode, g = np.unravel_index(flat, w.shape)
            node, mode, g = int(node), int(mode), int(g)
            p = float(ctrl.power_grid[g])
            r_true = float(np.log2(1.0 + p * block.h_main[node]))
            if mode == PRIVATE:
                r_p[node] = self.frac[node] * r_true
                r_pe[node] = max(r_p[node] - self.factor[node] * self.leakage[node, g], 0.0)
            else:
                r_o[node] = r_true
            power[node] = p
            self._transmit_packet(block, node, mode, g, p)

        service = BlockService(r_p=r_p, r_o=r_o, r_pe=r_pe, power_used=power)
        served_p = np.minimum(q.Q_p, r_p)
        served_o = np.minimum(q.Q_o, r_o)
        served_pe = np.minimum(q.Q_pe, r_pe)

        if k >= cfg.warmup:
            s = self.sums
            s["x_p"] += A_p
            s["x_o"] += A_o
            s["x_pe"] += A_pe
            s["mu_p"] += served_p
            s["mu_o"] += served_o
            s["mu_pe_fluid"] += served_pe
            s["avg_power"] += power
            s["avg_Q_p"] += q.Q_p
            s["avg_Q_o"] += q.Q_o
            s["avg_Q_pe"] += q.Q_pe
            s["avg_Z"] += q.Z
            s["avg_Y"] += q.Y
            s["utility_per_block"] += ctrl.kappa * np.log2(1.0 + A_pe) + np.log2(1.0 + A_p - A_pe + A_o)
        h = self.horizon
        h["A_p"] += A_p
        h["A_pe"] += A_pe
        h["A_o"] += A_o
        h["served_p"] += served_p
        h["served_o"] += served_o
        h["served_pe"] += served_pe
        h["power"] += power
        if cfg.metrics_granularity == "per_block":
            self.trace_rows.append((k, node, mode, p, *q.as_tuple(), A_p, A_pe, A_o))

        q = update_data_queues(q, service, (A_p, A_o))
        self.queues = update_virtual_queues(q, service, A_p, A_pe, self.gamma, self.alpha)
        self.backlog_bits[:, PRIVATE] += A_p
        self.backlog_bits[:, OPEN] += A_o
        self.k += 1

    def summary(self) -> RunSummary:
        cfg = self.config
        m = max(self.k - cfg.warmup, 0)
        scale = 1.0 / m if m else 0.0
        avgs = {name: self.sums[name] * scale for name in _PER_NODE}
        avgs["mu_pe_empirical"] = self.sums["pe_bits"] * scale
        horizon = {k: v.copy() for k, v in self.horizon.items()}
        horizon.update(
            n_blocks=self.k,
            Q_p=np.asarray(self.queues.Q_p).copy(),
            Q_o=np.asarray(self.queues.Q_o).copy(),
            Q_pe=np.asarray(self.queues.Q_pe).copy(),
            Z=np.asarray(self.queues.Z).copy(),
            Y=np.asarray(self.queues.Y).copy(),
        )
        return RunSummary(
            n_nodes=self.n,
            n_blocks=self.k,
            averaged_blocks=m,
            **avgs,
            **{name: self.counts[name].copy() for name in _COUNTS},
            markov_bound_sum=self.markov_bound_sum.copy(),
            dummy_bits=self.dummy_bits.copy(),
            packet_bits=self.packet_bits.copy(),
            kappa=cfg.control_params.kappa,
            horizon=horizon,
            trace=self._trace() if cfg.metrics_granularity == "per_block" else None,
        )

    def _trace(self) -> dict:
        cols = ("k", "node", "mode", "power", "Q_p", "Q_o", "Q_pe", "Z", "Y", "A_p", "A_pe", "A_o")
        out = {c: [] for c in cols}
        for row in self.trace_rows:
            for c, v in zip(cols, row):
                out[c].append(v)
        return {c: np.array(v) for c, v in out.items()}


def run(config: SimConfig) -> RunSummary:
    """Simulate ``config.n_blocks`` blocks and summarize."""
    sim = Simulation(config)
    for _ in range(config.n_blocks):
        sim.step_block()
    return sim.summary()
