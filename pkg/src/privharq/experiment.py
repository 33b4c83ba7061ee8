"""Parameter sweeps, CSV tables and SVG rate plots."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields, replace
from pathlib import Path

import numpy as np

from privharq.config import SweepSpec, with_axis, with_realization
from privharq.sim import RunSummary, SimConfig, run

WORKERS_ENV = "PRIVHARQ_WORKERS"
AGGREGATE = "all"


class SweepError(RuntimeError):
    """A sweep point failed; the message names the point."""


@dataclass(frozen=True)
class SweepRow:
    """One CSV line.  Rates, power and queue columns are per-node averages.

    ``realization`` and ``seed`` are ints for single runs and ``"all"`` for the
    aggregated row of an axis value, whose numeric columns are plain means
    over that value's runs.
    """

    axis_value: float
    realization: int | str
    seed: int | str
    private_rate: float
    open_rate: float
    effective_private_rate: float
    empirical_outage: float
    markov_bound: float
    avg_power: float
    avg_Qp: float
    avg_Qo: float
    utility: float
    decode_failures: float

    @property
    def is_aggregate(self) -> bool:
        return self.seed == AGGREGATE

    @property
    def total_rate(self) -> float:
        return self.private_rate + self.open_rate

    @classmethod
    def from_summary(cls, s: RunSummary, axis_value: float, realization: int, seed: int) -> SweepRow:
        return cls(
            axis_value=float(axis_value),
            realization=realization,
            seed=seed,
            private_rate=s.mean("mu_p"),
            open_rate=s.mean("mu_o"),
            effective_private_rate=s.mean("mu_pe_fluid"),
            empirical_outage=s.empirical_outage_fraction,
            markov_bound=s.markov_bound_avg,
            avg_power=s.mean("avg_power"),
            avg_Qp=s.mean("avg_Q_p"),
            avg_Qo=s.mean("avg_Q_o"),
            utility=s.utility_avg,
            decode_failures=int(s.decode_failures.sum()),
        )


CSV_HEADER = tuple(f.name for f in fields(SweepRow))
_NUMERIC = CSV_HEADER[3:]


def aggregate(rows: list[SweepRow]) -> SweepRow:
    vals = {k: float(np.mean([getattr(r, k) for r in rows])) for k in _NUMERIC}
    return SweepRow(axis_value=rows[0].axis_value, realization=AGGREGATE, seed=AGGREGATE, **vals)


def sweep_points(spec: SweepSpec) -> list[tuple[float, int, int, SimConfig]]:
    """Every (axis value, realization, seed offset, config) in output order."""
    pts = []
    for v in spec.values:
        for r in range(spec.realizations_per_point):
            base = with_axis(with_realization(spec, r), spec.axis, v)
            for s in range(spec.seeds_per_point):
                seed = base.seed + s
                pts.append((v, r, seed, replace(base, seed=seed)))
    return pts


def _run_point(point) -> SweepRow:
    v, r, seed, cfg = point
    try:
        return SweepRow.from_summary(run(cfg), v, r, seed)
    except Exception as exc:
        raise SweepError(f"sweep point axis_value={v}, realization={r}, seed={seed} failed: {exc!r}") from exc


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise SweepError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[SweepRow]:
    """Run every point and return per-run rows followed, per axis value, by its aggregate.

    Each point seeds its own generator, so the result does not depend on
    ``workers`` (default from the ``PRIVHARQ_WORKERS`` environment variable).
    """
    workers = default_workers() if workers is None else max(1, int(workers))
    pts = sweep_points(spec)
    if workers == 1 or len(pts) == 1:
        results = [_run_point(p) for p in pts]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(pts))) as pool:
            results = list(pool.map(_run_point, pts))
    out = []
    per_value = spec.realizations_per_point * spec.seeds_per_point
    for i in range(0, len(results), per_value):
        chunk = results[i:i + per_value]
        out.extend(chunk)
        out.append(aggregate(chunk))
    return out


# --------------------------------------------------------------------- files


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def csv_text(rows: list[SweepRow]) -> str:
    lines = [",".join(CSV_HEADER)]
    lines += [",".join(_fmt(v) for v in astuple(r)) for r in rows]
    return "\n".join(lines) + "\n"


def emit_csv(rows: list[SweepRow], path) -> None:
    """Write rows under :data:`CSV_HEADER`.  Floats use ``repr`` so re-reading is exact."""
    if not rows:
        raise ValueError(f"refusing to write {path}: no rows")
    path = Path(path)
    text = csv_text(rows)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _key(v: str):
    return v if v == AGGREGATE else int(v)


def read_csv(path) -> list[SweepRow]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.reader(fh)
            header = tuple(next(reader, ()))
            if header != CSV_HEADER:
                raise ValueError(f"{path}: unexpected header {header}")
            rows = []
            for line in reader:
                if not line:
                    continue
                rows.append(SweepRow(float(line[0]), _key(line[1]), _key(line[2]), *map(float, line[3:])))
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return rows


def _series(rows: list[SweepRow]):
    agg = [r for r in rows if r.is_aggregate]
    if not agg:
        by_value: dict[float, list[SweepRow]] = {}
        for r in rows:
            by_value.setdefault(r.axis_value, []).append(r)
        agg = [aggregate(v) for v in by_value.values()]
    agg.sort(key=lambda r: r.axis_value)
    return agg


PLOT_SERIES = (
    ("private", "private_rate", "Private"),
    ("open", "open_rate", "Open"),
    ("effective_private", "effective_private_rate", "Effective private"),
)


def emit_plot(rows: list[SweepRow], path, axis_label: str = "axis value") -> None:
    """Static SVG of the three rates against the swept value, one line each."""
    if not rows:
        raise ValueError(f"refusing to write {path}: no rows")
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pts = _series(rows)
    x = [r.axis_value for r in pts]
    with matplotlib.rc_context({"svg.hashsalt": "privharq", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for gid, attr, label in PLOT_SERIES:
            (line,) = ax.plot(x, [getattr(r, attr) for r in pts], marker="o", label=label)
            line.set_gid(f"series-{gid}")
        ax.set_xlabel(axis_label)
        ax.set_ylabel("rate (bits/channel use)")
        ax.grid(True, alpha=0.3)
        ax.legend()
        fig.tight_layout()
        try:
            fig.savefig(Path(path), format="svg", metadata={"Date": None})
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
        finally:
            plt.close(fig)


def ci95(values) -> tuple[float, float]:
    """Mean and half-width of a normal-approximation 95% interval (t quantile for small n)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return float(v.mean()) if v.size else math.nan, math.inf
    from scipy import stats

    half = stats.t.ppf(0.975, v.size - 1) * v.std(ddof=1) / math.sqrt(v.size)
    return float(v.mean()), float(half)
