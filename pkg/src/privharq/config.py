"""JSON configuration: defaults for the four-node reference setup, parsing, validation, dumping.

A config file is one JSON object.  Every key is optional.  Channel means and
code rates may be given explicitly (per-node lists, an ``n x n`` list of
lists for cross means) or drawn uniformly from ``*_range`` intervals using
``scenario_seed``; explicit values win.  If a ``"sweep"`` object is present
the file describes a :class:`SweepSpec` instead of a single run.

Keys::

    n_nodes, main_gain_range, main_gain_means, cross_gain_range, cross_gain_means,
    estimation_sigma, R_hat_range, R_hat_o_range, R_hat_p_range, R_hat, R_hat_o, R_hat_p,
    M_max, V, kappa, A_max, P_max, power_grid_size, admission_grid_resolution,
    gamma, alpha, quadrature_order, flow_control_literal,
    n_blocks, warmup_blocks, seed, scenario_seed, metrics_granularity,
    sweep: {axis, values, seeds_per_point, realizations_per_point}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from privharq.channel import ChannelParams
from privharq.control import ControlParams
from privharq.harq import CodeRates, HarqConfig
from privharq.sim import ConfigError, SimConfig

DEFAULTS = {
    "n_nodes": 4,
    "main_gain_range": [25.0, 50.0],
    "cross_gain_range": [0.5, 1.5],
    "estimation_sigma": 1.0,
    "R_hat_range": [15.0, 25.0],
    "R_hat_o_range": [15.0, 25.0],
    "R_hat_p_range": [5.0, 10.0],
    "M_max": 50,
    "V": 100.0,
    "kappa": 5.0,
    "A_max": 0.75,
    "P_max": 10.0,
    "power_grid_size": 64,
    "admission_grid_resolution": 11,
    "gamma": 0.1,
    "alpha": 1.0,
    "quadrature_order": 32,
    "flow_control_literal": False,
    "n_blocks": 100_000,
    "warmup_blocks": None,
    "seed": 0,
    "scenario_seed": 0,
    "metrics_granularity": "summary",
}
EXPLICIT = ("main_gain_means", "cross_gain_means", "R_hat", "R_hat_o", "R_hat_p")
SWEEP_KEYS = {"axis", "values", "seeds_per_point", "realizations_per_point"}
AXES = ("gamma", "alpha", "V")


@dataclass(frozen=True)
class SweepSpec:
    base: SimConfig
    axis: str
    values: tuple[float, ...]
    seeds_per_point: int = 1
    realizations_per_point: int = 1
    scenario_seed: int = 0
    rate_ranges: tuple = ((15.0, 25.0), (15.0, 25.0), (5.0, 10.0))

    def errors(self) -> list[str]:
        errs = []
        if self.axis not in AXES:
            errs.append(f"sweep.axis must be one of {AXES}")
        if not self.values:
            errs.append("sweep.values must be nonempty")
        elif any(b <= a for a, b in zip(self.values, self.values[1:])):
            errs.append("sweep.values must be strictly increasing")
        if self.seeds_per_point < 1:
            errs.append("sweep.seeds_per_point must be >= 1")
        if self.realizations_per_point < 1:
            errs.append("sweep.realizations_per_point must be >= 1")
        return errs


def _draw(seed_words, low_high, size):
    rng = np.random.default_rng(np.random.SeedSequence(list(seed_words)))
    lo, hi = low_high
    return rng.uniform(lo, hi, size=size)


def draw_channel_means(n: int, main_range, cross_range, scenario_seed: int):
    main = _draw((scenario_seed, 0), main_range, n)
    cross = _draw((scenario_seed, 1), cross_range, (n, n))
    np.fill_diagonal(cross, 0.0)
    return main, cross


def draw_code_rates(n: int, ranges, scenario_seed: int, realization: int) -> CodeRates:
    """Code rates for one realization; R_hat and R_hat_o from their ranges, R_hat_p from its own."""
    r, ro, rp = (_draw((scenario_seed, 2, realization, i), rg, n) for i, rg in enumerate(ranges))
    return CodeRates(R_hat=r, R_hat_p=rp, R_hat_o=ro)


def _check_range(name, value, errs):
    try:
        lo, hi = (float(v) for v in value)
    except (TypeError, ValueError):
        errs.append(f"{name} must be a [low, high] pair")
        return None
    if not 0 < lo <= hi:
        errs.append(f"{name} must satisfy 0 < low <= high")
    return lo, hi


def build(raw: dict) -> SimConfig | SweepSpec:
    """Turn a parsed JSON object into a validated config; raises ConfigError listing every problem."""
    if not isinstance(raw, dict):
        raise ConfigError(["top-level JSON value must be an object"])
    errs = []
    unknown = set(raw) - set(DEFAULTS) - set(EXPLICIT) - {"sweep"}
    for k in sorted(unknown):
        errs.append(f"unknown key {k!r}")
    c = {**DEFAULTS, **{k: v for k, v in raw.items() if k in DEFAULTS or k in EXPLICIT}}

    n = c["n_nodes"]
    if not (isinstance(n, int) and n >= 1):
        raise ConfigError(errs + ["n_nodes must be an integer >= 1"])
    ranges = {k: _check_range(k, c[k], errs) for k in DEFAULTS if k.endswith("_range")}
    for k in ("gamma", "alpha"):
        v = np.asarray(c[k], dtype=float)
        if k == "gamma" and np.any(~((v >= 0) & (v <= 1))):
            errs.append(f"gamma ∉ [0,1]: got {c[k]}")
        if k == "alpha" and np.any(~(v > 0)):
            errs.append(f"alpha must be > 0: got {c[k]}")
    if not c["P_max"] > 0:
        errs.append("P_max must be > 0")
    if not (isinstance(c["power_grid_size"], int) and c["power_grid_size"] >= 2):
        errs.append("power_grid_size must be an integer >= 2")
    if c["metrics_granularity"] not in ("summary", "per_block"):
        errs.append("metrics_granularity must be 'summary' or 'per_block'")
    sweep = raw.get("sweep")
    if sweep is not None:
        if not isinstance(sweep, dict):
            errs.append("sweep must be an object")
        else:
            for k in sorted(set(sweep) - SWEEP_KEYS):
                errs.append(f"unknown key 'sweep.{k}'")
    if errs:
        raise ConfigError(errs)

    main, cross = draw_channel_means(n, ranges["main_gain_range"], ranges["cross_gain_range"], c["scenario_seed"])
    if c.get("main_gain_means") is not None:
        main = np.asarray(c["main_gain_means"], dtype=float)
    if c.get("cross_gain_means") is not None:
        cross = np.asarray(c["cross_gain_means"], dtype=float)
    rate_ranges = (ranges["R_hat_range"], ranges["R_hat_o_range"], ranges["R_hat_p_range"])
    drawn = draw_code_rates(n, rate_ranges, c["scenario_seed"], 0)
    rates = CodeRates(
        R_hat=c.get("R_hat") if c.get("R_hat") is not None else drawn.R_hat,
        R_hat_p=c.get("R_hat_p") if c.get("R_hat_p") is not None else drawn.R_hat_p,
        R_hat_o=c.get("R_hat_o") if c.get("R_hat_o") is not None else drawn.R_hat_o,
    )
    try:
        cfg = SimConfig(
            channel_params=ChannelParams(main, cross, float(c["estimation_sigma"]), int(c["scenario_seed"])),
            harq_config=HarqConfig(rates=rates, M_max=c["M_max"]),
            control_params=ControlParams(
                V=float(c["V"]),
                kappa=float(c["kappa"]),
                A_max=float(c["A_max"]),
                power_grid=np.linspace(0.0, float(c["P_max"]), int(c["power_grid_size"])),
                admission_grid_resolution=int(c["admission_grid_resolution"]),
                gamma=_scalar_or_array(c["gamma"]),
                alpha=_scalar_or_array(c["alpha"]),
                quadrature_order=int(c["quadrature_order"]),
                flow_control_literal=bool(c["flow_control_literal"]),
            ),
            n_blocks=int(c["n_blocks"]),
            warmup_blocks=None if c["warmup_blocks"] is None else int(c["warmup_blocks"]),
            seed=int(c["seed"]),
            metrics_granularity=c["metrics_granularity"],
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError([str(exc)]) from exc
    cfg.validate()
    if sweep is None:
        return cfg
    spec = SweepSpec(
        base=cfg,
        axis=sweep.get("axis", "gamma"),
        values=tuple(float(v) for v in sweep.get("values", [])),
        seeds_per_point=int(sweep.get("seeds_per_point", 1)),
        realizations_per_point=int(sweep.get("realizations_per_point", 1)),
        scenario_seed=int(c["scenario_seed"]),
        rate_ranges=rate_ranges,
    )
    errs = spec.errors()
    if spec.axis == "gamma" and any(not 0 <= v <= 1 for v in spec.values):
        errs.append("gamma sweep values must lie in [0, 1]")
    if spec.axis in ("alpha", "V") and any(not v > 0 for v in spec.values):
        errs.append(f"{spec.axis} sweep values must be > 0")
    if errs:
        raise ConfigError(errs)
    return spec


def _scalar_or_array(v):
    return float(v) if np.ndim(v) == 0 else np.asarray(v, dtype=float)


def parse_config(path) -> SimConfig | SweepSpec:
    """Read a JSON config file; JSON syntax errors are reported with line and column."""
    path = Path(path)
    text = path.read_text()
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from exc
    return build(raw)


def _listify(v):
    return v.tolist() if isinstance(v, np.ndarray) else v


def to_dict(config: SimConfig | SweepSpec) -> dict:
    """Explicit JSON-ready form; ``build(to_dict(c)) == c``."""
    if isinstance(config, SweepSpec):
        out = to_dict(config.base)
        out["sweep"] = {
            "axis": config.axis,
            "values": list(config.values),
            "seeds_per_point": config.seeds_per_point,
            "realizations_per_point": config.realizations_per_point,
        }
        out["scenario_seed"] = config.scenario_seed
        out["R_hat_range"], out["R_hat_o_range"], out["R_hat_p_range"] = (list(r) for r in config.rate_ranges)
        return out
    ch, ctrl, harq = config.channel_params, config.control_params, config.harq_config
    grid = ctrl.power_grid
    return {
        "n_nodes": ch.n_nodes,
        "main_gain_means": ch.main_gain_means.tolist(),
        "cross_gain_means": ch.cross_gain_means.tolist(),
        "estimation_sigma": ch.estimation_sigma,
        "R_hat": harq.rates.R_hat.tolist(),
        "R_hat_o": harq.rates.R_hat_o.tolist(),
        "R_hat_p": harq.rates.R_hat_p.tolist(),
        "M_max": harq.M_max,
        "V": ctrl.V,
        "kappa": ctrl.kappa,
        "A_max": ctrl.A_max,
        "P_max": float(grid[-1]),
        "power_grid_size": int(grid.size),
        "admission_grid_resolution": ctrl.admission_grid_resolution,
        "gamma": _listify(ctrl.gamma),
        "alpha": _listify(ctrl.alpha),
        "quadrature_order": ctrl.quadrature_order,
        "flow_control_literal": ctrl.flow_control_literal,
        "n_blocks": config.n_blocks,
        "warmup_blocks": config.warmup_blocks,
        "seed": config.seed,
        "scenario_seed": ch.rng_seed,
        "metrics_granularity": config.metrics_granularity,
    }


def dump_config(config, path) -> None:
    Path(path).write_text(json.dumps(to_dict(config), indent=2) + "\n")


def default_config(**overrides) -> SimConfig:
    """Reference four-node setup; keyword overrides use the JSON key names."""
    return build(overrides)


def with_axis(config: SimConfig, axis: str, value: float) -> SimConfig:
    ctrl = config.control_params
    return replace(config, control_params=replace(ctrl, **{axis: float(value)}))


def with_realization(spec: SweepSpec, realization: int) -> SimConfig:
    if spec.realizations_per_point == 1:
        return spec.base
    n = spec.base.n_nodes
    rates = draw_code_rates(n, spec.rate_ranges, spec.scenario_seed, realization)
    return replace(spec.base, harq_config=replace(spec.base.harq_config, rates=rates))
