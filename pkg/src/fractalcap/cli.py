"""Command-line entry point: ``fractalcap <command> --config cfg.json --out dir``.

Exit codes: 0 success, 1 acceptance failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .errors import FractalCapError
from .harness import (ExperimentConfig, cell_seeds, emit_plot, load_config, read_sweep_csv,
                      run_sweep, write_sweep_csv)

logger = logging.getLogger("fractalcap")


def _cells(cfg):
    for n in cfg.n_values:
        for s in cfg.seeds:
            yield n, s, cell_seeds(s, n)


def _graph(cfg, n, gseed):
    from .socialgraph import default_kmax, generate_graph
    return generate_graph(n, cfg.gamma, cfg.epsilon, seed=gseed, kmax=default_kmax(n, cfg.kmax_rule))


def _deployment(cfg, n, dseed):
    from .wireless import deploy
    return deploy(n, cfg.C0, cfg.C1, cfg.delta, seed=dseed)


def cmd_generate(cfg, out: Path, args) -> int:
    from .socialgraph import write_edgelist
    for n, s, (gseed, _, _) in _cells(cfg):
        path = out / f"graph_n{n}_s{s}.txt"
        write_edgelist(_graph(cfg, n, gseed), path)
        print(path)
    return 0


def cmd_deploy(cfg, out: Path, args) -> int:
    from .wireless import occupancy_report
    for n, s, (_, dseed, _) in _cells(cfg):
        dep = _deployment(cfg, n, dseed)
        path = out / f"deployment_n{n}_s{s}.csv"
        dep.to_csv(path)
        print(f"{path} grid={dep.grid} T={dep.T} empty={occupancy_report(dep):.4f}")
    return 0


def cmd_hops(cfg, out: Path, args) -> int:
    from .wireless import capacity_estimate, estimate_mean_hops
    records = []
    for n, s, (gseed, dseed, tseed) in _cells(cfg):
        g, dep = _graph(cfg, n, gseed), _deployment(cfg, n, dseed)
        est = estimate_mean_hops(g, dep, cfg.rule_spec, cfg.trials, seed=tseed)
        rec = dataclasses.asdict(est)
        rec.pop("samples")
        rec.update(n=n, seed=s, lambda_est=capacity_estimate(est.mean, dep))
        if rec["per_level"] is not None:
            rec["per_level"] = {str(k): v for k, v in rec["per_level"].items()}
        records.append(rec)
        print(f"n={n} seed={s} E[X]={est.mean:.4f} +- {est.stderr:.4f}")
    (out / "hops.json").write_text(json.dumps(records, indent=2) + "\n")
    return 0


def cmd_sweep(cfg, out: Path, args) -> int:
    rows = run_sweep(cfg, workers=args.workers)
    write_sweep_csv(rows, out / "sweep.csv")
    print(out / "sweep.csv")
    return 0


def cmd_boxcover(cfg, out: Path, args) -> int:
    from .boxcover import cover_grid, fit_fractal_exponents
    grid = [int(v) for v in args.grid.split(",")]
    for n, s, (gseed, _, _) in _cells(cfg):
        g = _graph(cfg, n, gseed)
        fit = fit_fractal_exponents(g, grid, seed=s)
        fit.write_json(out / f"fractal_n{n}_s{s}.json")
        for cov in cover_grid(g, grid, seed=s):
            cov.to_csv(out / f"covering_n{n}_s{s}_lB{cov.l_B}.csv")
        print(f"n={n} seed={s} N_B={list(fit.NB)} gamma_hat={fit.gamma_hat} epsilon_hat={fit.epsilon_hat}")
    return 0


def cmd_hierarchy(cfg, out: Path, args) -> int:
    from .errors import UnsupportedRegimeError
    from .hierarchy import hierarchy_analytics, level_degree_profile
    from .socialgraph import default_kmax
    for n, s, (gseed, _, _) in _cells(cfg):
        prof = level_degree_profile(_graph(cfg, n, gseed), args.levels)
        prof.to_csv(out / f"levels_n{n}_s{s}.csv")
    for n in cfg.n_values:
        try:
            an = hierarchy_analytics(cfg.gamma, cfg.epsilon, n, mode=args.mode,
                                     kmax=default_kmax(n, cfg.kmax_rule))
        except UnsupportedRegimeError as exc:
            logger.warning("n=%d: %s", n, exc)
            continue
        rec = dataclasses.asdict(an)
        rec["extendibility"] = an.extendibility.value
        (out / f"hierarchy_n{n}.json").write_text(json.dumps(rec, indent=2) + "\n")
        print(f"n={n} L_max={an.L_max} hop_factor={an.hop_factor}")
    return 0


def cmd_verify(cfg, out: Path, args) -> int:
    from .verify import CRITERIA, run_criterion, write_report
    ids = args.only.split(",") if args.only else list(CRITERIA)
    unknown = [c for c in ids if c not in CRITERIA]
    if unknown:
        raise FractalCapError(f"unknown criteria: {', '.join(unknown)}")
    results = []
    for cid in ids:
        res = run_criterion(cid)
        results.append(res)
        print(f"{cid}: {'PASS' if res.passed else 'FAIL'}  {res.target}", flush=True)
    write_report(results, out / "verify_report.json")
    return 0 if all(r.passed for r in results) else 1


def cmd_plot(cfg, out: Path, args) -> int:
    src = Path(args.csv) if args.csv else out / "sweep.csv"
    rows = read_sweep_csv(src)
    path = out / f"{args.y}_vs_{args.x}.svg"
    slopes = emit_plot(rows, args.x, args.y, path, group=args.group)
    print(f"{path} slopes={slopes}")
    return 0


COMMANDS = {
    "generate": (cmd_generate, "write generated social graphs"),
    "deploy": (cmd_deploy, "write node deployments"),
    "hops": (cmd_hops, "estimate mean grid hops"),
    "sweep": (cmd_sweep, "run the configured sweep to sweep.csv"),
    "boxcover": (cmd_boxcover, "box covering and fractal exponents"),
    "hierarchy": (cmd_hierarchy, "level-L degree profiles and closed forms"),
    "verify": (cmd_verify, "run the acceptance suite"),
    "plot": (cmd_plot, "log-log plot from a sweep CSV"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fractalcap", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", help="experiment config JSON (defaults when omitted)")
        sp.add_argument("--out", help="output directory (config output_dir when omitted)")
        if name == "sweep":
            sp.add_argument("--workers", type=int, default=1)
        elif name == "boxcover":
            sp.add_argument("--grid", default="1,2,3,4,6,8", help="comma-separated box sizes")
        elif name == "hierarchy":
            sp.add_argument("--levels", type=int, default=4)
            sp.add_argument("--mode", choices=("continuous", "discrete"), default="continuous")
        elif name == "verify":
            sp.add_argument("--only", help="comma-separated criterion ids, e.g. A1,A4")
        elif name == "plot":
            sp.add_argument("--csv", help="sweep CSV (default <out>/sweep.csv)")
            sp.add_argument("--x", default="n")
            sp.add_argument("--y", default="mean_hops")
            sp.add_argument("--group", default=None)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else ExperimentConfig()
        out = Path(args.out or cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command][0](cfg, out, args)
    except (FractalCapError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
