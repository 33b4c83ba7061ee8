import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from privharq.channel import ChannelBlockState, expected_cross_rate
from privharq.harq import (
    CodeRates,
    HarqConfig,
    HarqPacket,
    PacketKind,
    accumulate,
    check_decode,
    check_privacy_outage,
    effective_rate_markov,
    markov_premise_violations,
)

RATES = CodeRates(R_hat=[20.0, 20.0, 20.0], R_hat_p=[10.0, 10.0, 10.0], R_hat_o=[18.0, 18.0, 18.0])


def block(h_main, h_cross, k=0):
    h_main = np.asarray(h_main, dtype=float)
    return ChannelBlockState(h_main=h_main, h_main_est=h_main.copy(), h_cross=np.asarray(h_cross, dtype=float), k=k)


CROSS = [[0.0, 1.0, 3.0], [2.0, 0.0, 1.0], [1.0, 1.0, 0.0]]


def test_zero_power_only_counts():
    p = HarqPacket.new(0, PacketKind.PRIVATE, 1, 3)
    p.acc_main = 1.5
    accumulate(p, 0.0, block([30, 30, 30], CROSS))
    assert p.acc_main == 1.5 and np.all(p.acc_eaves == 0) and p.retransmission_count == 1


def test_additivity_example():
    p = HarqPacket.new(1, PacketKind.OPEN, 1, 3)
    p.acc_main = 3.0
    # log2(1 + 1 * (2^2.5 - 1)) = 2.5
    accumulate(p, 1.0, block([0, 2**2.5 - 1, 0], CROSS))
    assert p.acc_main == pytest.approx(5.5, abs=1e-12)


def test_two_block_brute_force_sum():
    p = HarqPacket.new(0, PacketKind.PRIVATE, 1, 3)
    b1 = block([12.0, 1, 1], CROSS)
    b2 = block([40.0, 1, 1], [[0, 0.2, 0.7], [1, 0, 1], [1, 1, 0]])
    accumulate(p, 2.0, b1)
    accumulate(p, 0.5, b2)
    assert p.acc_main == pytest.approx(math.log2(1 + 24.0) + math.log2(1 + 20.0), rel=1e-14)
    want = [0.0, math.log2(1 + 2.0) + math.log2(1 + 0.1), math.log2(1 + 6.0) + math.log2(1 + 0.35)]
    np.testing.assert_allclose(p.acc_eaves, want, rtol=1e-14)


def test_open_packet_ignores_eavesdroppers():
    p = HarqPacket.new(2, PacketKind.OPEN, 1, 3)
    accumulate(p, 5.0, block([1, 1, 9], CROSS))
    assert np.all(p.acc_eaves == 0)


def test_linearity_identical_blocks():
    b = block([17.0, 3.0, 5.0], CROSS)
    p = HarqPacket.new(0, PacketKind.PRIVATE, 1, 3)
    accumulate(p, 1.3, b)
    accumulate(p, 1.3, b)
    once = HarqPacket.new(0, PacketKind.PRIVATE, 2, 3)
    accumulate(once, 1.3, b)
    assert p.acc_main == pytest.approx(2 * once.acc_main, rel=1e-15)
    np.testing.assert_allclose(p.acc_eaves, 2 * once.acc_eaves, rtol=1e-15)


def test_m_max_marks_failure_without_accumulating():
    p = HarqPacket.new(0, PacketKind.PRIVATE, 1, 3)
    b = block([1.0, 1, 1], CROSS)
    for _ in range(3):
        accumulate(p, 1.0, b, M_max=3)
    assert not p.failed
    before = p.acc_main
    accumulate(p, 1.0, b, M_max=3)
    assert p.failed and p.acc_main == before and p.retransmission_count == 3


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 60), st.floats(0, 5), st.floats(0, 5)), min_size=1, max_size=8))
def test_accumulators_nondecreasing(steps):
    p = HarqPacket.new(0, PacketKind.PRIVATE, 1, 3)
    prev_main, prev_e = 0.0, np.zeros(3)
    for P, h, c1, c2 in steps:
        accumulate(p, P, block([h, 1, 1], [[0, c1, c2], [1, 0, 1], [1, 1, 0]]))
        assert p.acc_main >= prev_main and np.all(p.acc_eaves >= prev_e)
        prev_main, prev_e = p.acc_main, p.acc_eaves.copy()


# ------------------------------------------------------------- decisions


def test_decode_is_strict():
    p = HarqPacket.new(0, PacketKind.PRIVATE, 1, 3)
    p.acc_main = 20.0
    assert not check_decode(p, RATES)
    p.acc_main = 20.0 + 1e-9
    assert check_decode(p, RATES)


def test_decode_open_uses_open_size():
    p = HarqPacket.new(0, PacketKind.OPEN, 1, 3)
    p.acc_main = 19.0
    assert check_decode(p, RATES)
    p.acc_main = 18.0
    assert not check_decode(p, RATES)


def test_decode_after_rates_sum_to_26():
    p = HarqPacket.new(0, PacketKind.PRIVATE, 1, 3)
    for r in (8.0, 9.0, 9.0):
        accumulate(p, 1.0, block([2**r - 1, 1, 1], CROSS))
    assert p.acc_main == pytest.approx(26.0)
    assert check_decode(p, RATES)


def test_outage_examples():
    p = HarqPacket.new(0, PacketKind.PRIVATE, 1, 3)
    assert not check_privacy_outage(p, RATES)
    p.acc_eaves[:] = [0.0, 10.5, 2.0]
    assert check_privacy_outage(p, RATES)
    p.acc_eaves[:] = [0.0, 10.0, 10.0]
    assert not check_privacy_outage(p, RATES)


# ---------------------------------------------------------- Markov rate


def test_effective_rate_zero_power():
    assert effective_rate_markov(0.0, 0.0, [1.0, 2.0], RATES) == 0.0


def test_effective_rate_arithmetic():
    # pick a cross mean whose expected rate at P=1 is 1: E[log2(1+h)] = 1 for this mean
    m = _mean_with_rate_one()
    assert expected_cross_rate(1.0, m) == pytest.approx(1.0, abs=1e-12)
    assert effective_rate_markov(4.0, 1.0, [m], RATES) == pytest.approx(1.0, abs=1e-12)


def _mean_with_rate_one():
    from scipy.optimize import brentq

    return brentq(lambda m: expected_cross_rate(1.0, m) - 1.0, 0.1, 10, xtol=1e-15)


def test_effective_rate_vanishing_leakage():
    assert effective_rate_markov(4.0, 1.0, [1e-12], RATES) == pytest.approx(2.0, abs=1e-9)
    assert effective_rate_markov(4.0, 1.0, [0.0], RATES) == 2.0


def test_effective_rate_can_be_negative():
    assert effective_rate_markov(0.1, 10.0, [1.5, 1.5], RATES) < 0


def test_markov_premise_flags_bad_nodes():
    rates = CodeRates(R_hat=[20.0, 20.0], R_hat_p=[5.0, 19.5], R_hat_o=[15.0, 15.0])
    warnings = markov_premise_violations(rates, np.array([0.5, 0.5]), np.array([5.0, 5.0]))
    assert len(warnings) == 1 and warnings[0].startswith("node 1")


def test_code_rate_validation():
    assert RATES.errors() == []
    assert CodeRates(R_hat=[5.0], R_hat_p=[6.0], R_hat_o=[1.0]).errors()
    assert CodeRates(R_hat=[5.0], R_hat_p=[1.0], R_hat_o=[0.0]).errors()
    assert HarqConfig(RATES, M_max=0).errors()
    assert HarqConfig(RATES).M_max == 50
