import json

import numpy as np
import pytest

from privharq.config import (
    DEFAULTS,
    SweepSpec,
    build,
    default_config,
    dump_config,
    parse_config,
    to_dict,
    with_realization,
)
from privharq.sim import ConfigError, SimConfig


def write(tmp_path, text, name="c.json"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_empty_object_gives_reference_setup(tmp_path):
    cfg = parse_config(write(tmp_path, "{}"))
    assert isinstance(cfg, SimConfig)
    ch, ctrl, rates = cfg.channel_params, cfg.control_params, cfg.harq_config.rates
    assert ch.n_nodes == 4 and ch.estimation_sigma == 1.0
    assert np.all((ch.main_gain_means >= 25) & (ch.main_gain_means <= 50))
    off = ~np.eye(4, dtype=bool)
    assert np.all((ch.cross_gain_means[off] >= 0.5) & (ch.cross_gain_means[off] <= 1.5))
    assert np.all((rates.R_hat >= 15) & (rates.R_hat <= 25)) and np.all((rates.R_hat_o >= 15) & (rates.R_hat_o <= 25))
    assert np.all((rates.R_hat_p >= 5) & (rates.R_hat_p <= 10))
    assert ctrl.kappa == 5.0
    assert cfg == parse_config(write(tmp_path, "", "empty.json"))


def test_gamma_out_of_range(tmp_path):
    with pytest.raises(ConfigError) as exc:
        parse_config(write(tmp_path, '{"gamma": 1.5}'))
    assert any("gamma ∉ [0,1]" in e for e in exc.value.errors)


def test_errors_are_aggregated():
    with pytest.raises(ConfigError) as exc:
        build({"gamma": -1, "alpha": 0, "P_max": -2, "bogus": 1})
    assert len(exc.value.errors) == 4


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown key 'colour'"):
        build({"colour": "red"})
    with pytest.raises(ConfigError, match="sweep.step"):
        build({"sweep": {"axis": "gamma", "values": [0.1], "step": 2}})


def test_json_syntax_error_reports_position(tmp_path):
    with pytest.raises(ConfigError, match="line 2, column"):
        parse_config(write(tmp_path, '{\n  "V": ,\n}'))


def test_round_trip_defaults(tmp_path):
    cfg = default_config()
    p = tmp_path / "out.json"
    dump_config(cfg, p)
    assert parse_config(p) == cfg
    again = tmp_path / "again.json"
    dump_config(parse_config(p), again)
    assert again.read_text() == p.read_text()


def test_round_trip_sweep(tmp_path):
    spec = build({"n_blocks": 100, "sweep": {"axis": "alpha", "values": [0.2, 1.0], "seeds_per_point": 2,
                                             "realizations_per_point": 3}})
    p = tmp_path / "s.json"
    dump_config(spec, p)
    assert parse_config(p) == spec


def test_explicit_values_override_draws():
    cfg = build({"n_nodes": 2, "main_gain_means": [30, 40], "cross_gain_means": [[0, 1], [2, 0]],
                 "R_hat": [20, 21], "R_hat_p": [6, 7], "R_hat_o": [18, 19], "gamma": [0.1, 0.2]})
    np.testing.assert_array_equal(cfg.channel_params.main_gain_means, [30, 40])
    np.testing.assert_array_equal(cfg.harq_config.rates.R_hat_p, [6, 7])
    np.testing.assert_array_equal(cfg.control_params.gamma, [0.1, 0.2])


def test_sweep_spec_validation():
    with pytest.raises(ConfigError):
        build({"sweep": {"axis": "gamma", "values": [0.3, 0.1]}})
    with pytest.raises(ConfigError):
        build({"sweep": {"axis": "kappa", "values": [1]}})
    with pytest.raises(ConfigError):
        build({"sweep": {"axis": "V", "values": [10], "seeds_per_point": 0}})
    spec = build({"sweep": {"axis": "V", "values": [10, 50]}})
    assert isinstance(spec, SweepSpec) and spec.values == (10.0, 50.0)


def test_realizations_redraw_code_rates_only():
    spec = build({"sweep": {"axis": "gamma", "values": [0.1], "realizations_per_point": 3}})
    r0, r1 = with_realization(spec, 0), with_realization(spec, 1)
    assert r0.channel_params == r1.channel_params
    assert not np.array_equal(r0.harq_config.rates.R_hat, r1.harq_config.rates.R_hat)
    assert with_realization(spec, 1) == r1


def test_defaults_documented_keys_cover_to_dict():
    keys = set(to_dict(default_config()))
    assert keys <= set(DEFAULTS) | {"main_gain_means", "cross_gain_means", "R_hat", "R_hat_o", "R_hat_p"}
    json.dumps(to_dict(default_config()))
