"""Command-line interface for the experiment harness.

Subcommands mirror the experiment functions; every run writes one CSV with a
schema header comment and prints the summary lines. Plotting is left to
external tools.
"""

import argparse
import os
import sys
from dataclasses import replace

from .exceptions import CogrelayError
from .experiments import (ExperimentConfig, SOLVER_NAMES, load_config_file,
                          run_cdf, run_convergence, run_eta, run_gen,
                          run_outage, run_robustness, run_solve,
                          run_sweep_pbs, write_csv)
from .model import load_channels

_GRID_FLAGS = {
    "sweep-pbs": ("pbs_snr_grid", "--pbs-snr-grid", "comma list of PBS SNR points (dB)"),
    "cdf": ("rate_grid", "--rates", "comma list of CU target rates (bps/Hz)"),
    "outage": ("budget_grid_db", "--budget-grid", "comma list of CBS power budgets (dB)"),
    "robustness": ("xi2_grid", "--xi2-grid", "comma list of CSI error variances"),
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cogrelay",
        description="Cooperative cognitive relay beamforming: solvers and "
                    "Monte Carlo experiments.")
    parser.add_argument("--config", help="flat key-value config file")
    parser.add_argument("--seed", type=int, help="base seed of the realization streams")
    parser.add_argument("--realizations", type=int, help="number of channel realizations")
    parser.add_argument("--out", help="output directory for CSV files")
    parser.add_argument("--solvers",
                        help=f"comma list from {', '.join(SOLVER_NAMES)}")
    parser.add_argument("--fading", choices=("phase-only", "rayleigh"))
    parser.add_argument("--jobs", type=int, help="worker processes (default 1)")

    sub = parser.add_subparsers(dest="command", required=True)
    gen = sub.add_parser("gen", help="write channel realizations to text files")
    gen.add_argument("--count", type=int, default=1)
    gen.add_argument("--start-index", type=int, default=0)

    solve = sub.add_parser("solve", help="solve one realization with each solver")
    solve.add_argument("--index", type=int, default=0)
    solve.add_argument("--channel-file", help="solve a saved channel file instead")

    conv = sub.add_parser("convergence",
                          help="per-iteration solver progress on one feasible instance")
    conv.add_argument("--cu-rate", type=float, help="CU target rate override")

    for cmd, (field, flag, help_text) in _GRID_FLAGS.items():
        p = sub.add_parser(cmd, help=f"{cmd} experiment")
        p.add_argument(flag, dest=field, help=help_text)
        if cmd == "robustness":
            p.add_argument("--cbs-count", type=int,
                           help="CBS/CU pair count for this experiment")
    sub.add_parser("eta", help="distributed-solver signaling measurements")
    return parser


def _experiment_config(args):
    values = {}
    if args.config:
        values.update(load_config_file(args.config))
    if args.seed is not None:
        values["seed"] = args.seed
    if args.realizations is not None:
        values["realizations"] = args.realizations
    if args.out is not None:
        values["outdir"] = args.out
    if args.solvers is not None:
        values["solvers"] = tuple(s.strip() for s in args.solvers.split(",") if s.strip())
    if args.fading is not None:
        values["fading"] = args.fading
    if args.jobs is not None:
        values["jobs"] = args.jobs
    for field in ("pbs_snr_grid", "rate_grid", "budget_grid_db", "xi2_grid"):
        raw = getattr(args, field, None)
        if raw is not None:
            values[field] = tuple(float(p) for p in raw.split(",") if p.strip())
    if getattr(args, "cu_rate", None) is not None:
        values["r_cu"] = args.cu_rate
    if getattr(args, "cbs_count", None) is not None:
        values["M"] = args.cbs_count
    unknown = [s for s in values.get("solvers", ()) if s not in SOLVER_NAMES]
    if unknown:
        raise SystemExit(f"unknown solver(s): {', '.join(unknown)}")
    return ExperimentConfig(**values)


def main(argv=None):
    args = build_parser().parse_args(argv)
    cfg = _experiment_config(args)
    try:
        if args.command == "gen":
            paths = run_gen(cfg, count=args.count, start_index=args.start_index)
            for p in paths:
                print(p)
            return 0
        if args.command == "solve":
            ch = load_channels(args.channel_file) if args.channel_file else None
            if ch is not None:
                cfg = replace(cfg, K=len(ch.h0p), M=ch.M, N=ch.N)
            header, rows, summary = run_solve(cfg, index=args.index, ch=ch)
            name = "solve"
        elif args.command == "convergence":
            header, rows, summary = run_convergence(cfg)
            name = "convergence"
        elif args.command == "sweep-pbs":
            header, rows, summary = run_sweep_pbs(cfg)
            name = "sweep_pbs"
        elif args.command == "cdf":
            header, rows, summary = run_cdf(cfg)
            name = "cdf"
        elif args.command == "outage":
            header, rows, summary = run_outage(cfg)
            name = "outage"
        elif args.command == "robustness":
            header, rows, summary = run_robustness(cfg)
            name = "robustness"
        elif args.command == "eta":
            header, rows, summary = run_eta(cfg)
            name = "eta"
        else:  # pragma: no cover - argparse enforces the choices
            raise SystemExit(f"unhandled command {args.command}")
    except CogrelayError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    path = write_csv(os.path.join(cfg.outdir, f"{name}.csv"),
                     name, header, rows, summary)
    print(f"wrote {path}")
    for line in summary:
        print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
