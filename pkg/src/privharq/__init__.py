"""Uplink network control with private traffic over HARQ-INR block-fading channels."""

from privharq.channel import (
    ChannelBlockState,
    ChannelParams,
    exp_integral_e1,
    expected_cross_rate,
    expected_main_rate,
    rate,
    sample_block,
)
from privharq.control import ControlDecision, ControlParams, flow_control, schedule
from privharq.harq import CodeRates, HarqConfig, HarqPacket
from privharq.queues import BlockService, NodeQueues
from privharq.sim import RunSummary, SimConfig, run

__all__ = [
    "BlockService",
    "ChannelBlockState",
    "ChannelParams",
    "CodeRates",
    "ControlDecision",
    "ControlParams",
    "HarqConfig",
    "HarqPacket",
    "NodeQueues",
    "RunSummary",
    "SimConfig",
    "exp_integral_e1",
    "expected_cross_rate",
    "expected_main_rate",
    "flow_control",
    "rate",
    "run",
    "sample_block",
    "schedule",
]
