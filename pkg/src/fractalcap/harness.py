"""Experiment configuration, seeded sweeps, CSV emission and plotting."""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, FractalCapError
from .regression import loglog_fit
from .socialgraph import default_kmax, generate_graph
from .wireless import Rule, capacity_estimate, deploy, estimate_mean_hops, occupancy_report

__all__ = [
    "ExperimentConfig",
    "SweepRow",
    "SWEEP_COLUMNS",
    "SWEEP_FORMAT_TAG",
    "load_config",
    "run_sweep",
    "sweep_cell",
    "cell_seeds",
    "write_sweep_csv",
    "read_sweep_csv",
    "sweep_csv_text",
    "loglog_fit",
    "emit_plot",
]

logger = logging.getLogger(__name__)

SWEEP_FORMAT_TAG = "# fractalcap-sweep v1"


@dataclass(frozen=True)
class ExperimentConfig:
    n_values: tuple = (2048, 4096, 8192)
    gamma: float = 2.5
    epsilon: float = 2.5
    kmax_rule: str = "sqrt"
    rule: str = "uniform"
    beta: float | None = None
    C0: float = 1.0
    C1: float = 1.0
    delta: float = 1.0
    trials: int = 10_000
    seeds: tuple = (0,)
    output_dir: str = "out"

    def __post_init__(self):
        object.__setattr__(self, "n_values", tuple(int(v) for v in self.n_values))
        object.__setattr__(self, "seeds", tuple(int(v) for v in self.seeds))
        if not self.n_values:
            raise ConfigError("n_values must be non-empty")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ConfigError("n_values must be strictly increasing")
        if min(self.n_values) < 2:
            raise ConfigError("every n must be at least 2")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        if self.trials < 1:
            raise ConfigError("trials must be at least 1")
        if not self.gamma > 2:
            raise ConfigError("gamma must exceed 2")
        if not self.epsilon > 2:
            raise ConfigError("epsilon must exceed 2")
        if self.kmax_rule not in ("sqrt", "full"):
            raise ConfigError("kmax_rule must be 'sqrt' or 'full'")
        if self.rule not in ("uniform", "powerlaw", "hierarchical"):
            raise ConfigError("rule must be uniform, powerlaw or hierarchical")
        if self.rule == "powerlaw" and (self.beta is None or not self.beta >= 0):
            raise ConfigError("powerlaw rule needs beta >= 0")
        if not (self.C0 > 0 and self.C1 > 0 and self.delta >= 0):
            raise ConfigError("need C0 > 0, C1 > 0, delta >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(unknown)}")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["n_values"] = list(self.n_values)
        d["seeds"] = list(self.seeds)
        return d

    @property
    def rule_spec(self) -> Rule:
        return Rule("powerlaw", beta=float(self.beta)) if self.rule == "powerlaw" else Rule(self.rule)

    @property
    def experiment_id(self) -> str:
        """Short digest of the scientific fields (``output_dir`` excluded)."""
        d = self.to_dict()
        d.pop("output_dir")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:12]


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    return ExperimentConfig.from_dict(data)


SWEEP_COLUMNS = (
    "experiment_id", "n", "seed", "gamma", "epsilon", "rule", "beta", "trials",
    "mean_hops", "stderr_hops", "cells", "T", "lambda_est", "empty_cell_fraction", "runtime_ms",
)


@dataclass(frozen=True)
class SweepRow:
    experiment_id: str
    n: int
    seed: int
    gamma: float
    epsilon: float
    rule: str
    beta: float | None
    trials: int
    mean_hops: float
    stderr_hops: float
    cells: int
    T: int
    lambda_est: float
    empty_cell_fraction: float
    runtime_ms: float = field(default=0.0, compare=False)


def cell_seeds(seed: int, n: int) -> tuple[int, int, int]:
    """Independent graph, deployment and trial seeds for one ``(seed, n)`` cell."""
    ss = np.random.SeedSequence([int(seed), int(n)])
    return tuple(int(c.generate_state(1)[0]) for c in ss.spawn(3))


def sweep_cell(cfg: ExperimentConfig, n: int, seed: int, rules=None) -> list[SweepRow]:
    """Rows for one ``(n, seed)``; several rules share the same graph and deployment."""
    t0 = time.perf_counter()
    rules = [cfg.rule_spec] if rules is None else [r if isinstance(r, Rule) else Rule.parse(r) for r in rules]
    gseed, dseed, tseed = cell_seeds(seed, n)
    graph = generate_graph(n, cfg.gamma, cfg.epsilon, seed=gseed, kmax=default_kmax(n, cfg.kmax_rule))
    dep = deploy(n, cfg.C0, cfg.C1, cfg.delta, seed=dseed)
    empty = occupancy_report(dep)
    setup = time.perf_counter() - t0
    rows = []
    for rule in rules:
        t1 = time.perf_counter()
        est = estimate_mean_hops(graph, dep, rule, cfg.trials, seed=tseed)
        lam = capacity_estimate(est.mean, dep)
        rows.append(SweepRow(
            experiment_id=cfg.experiment_id, n=n, seed=seed, gamma=cfg.gamma, epsilon=cfg.epsilon,
            rule=rule.kind, beta=rule.beta, trials=est.trials, mean_hops=est.mean,
            stderr_hops=est.stderr, cells=dep.total_cells, T=dep.T, lambda_est=lam,
            empty_cell_fraction=empty,
            runtime_ms=round((setup / len(rules) + time.perf_counter() - t1) * 1000, 3),
        ))
    return rows


def _cell_job(args):
    cfg, n, seed = args
    try:
        return sweep_cell(cfg, n, seed)
    except FractalCapError as exc:
        logger.warning("row n=%d seed=%d aborted: %s", n, seed, exc)
        return []


def run_sweep(cfg: ExperimentConfig, workers: int = 1) -> list[SweepRow]:
    """All ``(n, seed)`` cells in config order; ``workers > 1`` runs cells in processes."""
    jobs = [(cfg, n, s) for n in cfg.n_values for s in cfg.seeds]
    if workers <= 1:
        results = map(_cell_job, jobs)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell_job, jobs))
    return [row for rows in results for row in rows]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def sweep_csv_text(rows, include_runtime: bool = True) -> str:
    cols = SWEEP_COLUMNS if include_runtime else SWEEP_COLUMNS[:-1]
    buf = io.StringIO()
    buf.write(SWEEP_FORMAT_TAG + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in cols])
    return buf.getvalue()


def write_sweep_csv(rows, path, include_runtime: bool = True) -> None:
    Path(path).write_text(sweep_csv_text(rows, include_runtime))


def read_sweep_csv(path) -> list[SweepRow]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != SWEEP_FORMAT_TAG:
        raise ConfigError(f"{path} is not a {SWEEP_FORMAT_TAG!r} file")
    reader = csv.DictReader(lines[1:])
    types = {f.name: f.type for f in dataclasses.fields(SweepRow)}
    out = []
    for rec in reader:
        vals = {}
        for k, v in rec.items():
            t = types[k]
            if v == "":
                vals[k] = None
            elif t in ("int",):
                vals[k] = int(v)
            elif t in ("str",):
                vals[k] = v
            else:
                vals[k] = float(v)
        vals.setdefault("runtime_ms", 0.0)
        out.append(SweepRow(**vals))
    return out


def _column(rows, name):
    try:
        return [r[name] if isinstance(r, dict) else getattr(r, name) for r in rows]
    except (KeyError, AttributeError):
        raise ConfigError(f"no column named {name!r}") from None


def emit_plot(rows, x: str, y: str, path, group: str | None = None, title: str | None = None) -> dict:
    """Log-log scatter of ``y`` against ``x`` with a fitted line per series.

    Returns ``{series label: slope}``.  The SVG carries no timestamp and a
    fixed hash salt, so identical input gives identical bytes.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    rows = list(rows)
    if not rows:
        raise ConfigError("nothing to plot")
    xs = np.asarray(_column(rows, x), dtype=float)
    ys = np.asarray(_column(rows, y), dtype=float)
    labels = _column(rows, group) if group else [None] * len(rows)
    slopes = {}
    with matplotlib.rc_context({"svg.hashsalt": "fractalcap", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(6, 4.5))
        for lab in sorted(set(labels), key=lambda v: (v is None, v)):
            m = np.array([l == lab for l in labels])
            # average repeated x values (seeds) before fitting
            ux = np.unique(xs[m])
            uy = np.array([ys[m][xs[m] == v].mean() for v in ux])
            name = f"{group}={lab}" if group else y
            ax.scatter(xs[m], ys[m], s=12, alpha=0.6)
            if ux.size >= 2:
                slope, icpt, _ = loglog_fit(ux, uy, min_points=2)
                grid = np.geomspace(ux.min(), ux.max(), 50)
                ax.plot(grid, np.exp(icpt) * grid ** slope, label=f"{name}: slope {slope:.3f}")
                slopes[str(lab) if group else y] = slope
            else:
                ax.plot([], [], label=f"{name}: single point")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(x)
        ax.set_ylabel(y)
        if title:
            ax.set_title(title)
        ax.legend(fontsize=8)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return slopes
