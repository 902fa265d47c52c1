"""Monte Carlo experiment harness.

Every experiment is reproducible bit for bit from (config, seed): each
realization owns an independent random stream keyed by its index, so serial
and worker-pool runs produce identical ensembles. Results are written as CSV
with a version header comment and a summary comment carrying the exclusion
accounting (cooperation + self-sufficient + infeasible = total).
"""

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import zeroforcing
from .exceptions import CogrelayError, ModeII, NoFeasibleInstance
from .model import (SystemConfig, build_stacked, evaluate_solution,
                    generate_instance, realization_rng, save_channels,
                    sinr_targets, total_power)
from .solvers import (recover_downlink, signaling_ratio, solve_fixed_point,
                      solve_fixed_point_distributed, solve_matrix_iteration,
                      uplink_beams)

CSV_SCHEMA = "cogrelay-csv v1"
SOLVER_NAMES = ("alg1", "alg2", "alg1-distributed", "czf", "pzf")


@dataclass
class ExperimentConfig:
    """Harness settings; network fields mirror SystemConfig.

    Powers are noise-normalized, so "transmit SNR" grids are just
    10*log10(power). P0 is derived from pbs_snr_db.
    """

    # network
    K: int = 2
    M: int = 3
    N: int = 4
    pbs_snr_db: float = 10.0
    N1p: float = 1.0
    N2p: float = 1.0
    Nsm: float = 1.0
    Nm: float = 1.0
    r0: float = 2.0
    r_cu: float = 2.0
    alpha: float = 3.5
    d_pbs_pu: float = 2.0
    d_pbs_cbs: float = 1.0
    d_cbs_pu: float = 1.0
    d_cbs_cu: float = 1.0
    fading: str = "phase-only"
    seed: int = 1
    # harness
    realizations: int = 10_000
    solvers: tuple = ("alg2", "czf", "pzf")
    pbs_snr_grid: tuple = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0, 16.0, 18.0, 20.0)
    budget_grid_db: tuple = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0)
    rate_grid: tuple = (0.1, 0.5, 1.0)
    xi2_grid: tuple = (0.0, 0.01, 0.05, 0.1, 0.2)
    outdir: str = "out"
    jobs: int = 1
    nc_full_bandwidth: bool = True
    attempt_cap: int = 1000

    def system(self, **overrides):
        """SystemConfig for one run; overrides replace derived fields."""
        p0 = 10.0 ** (self.pbs_snr_db / 10.0)
        kw = dict(K=self.K, M=self.M, N=self.N, P0=p0, N1p=self.N1p,
                  N2p=self.N2p, Nsm=self.Nsm, Nm=self.Nm, r0=self.r0,
                  r_cu=self.r_cu, alpha=self.alpha, d_pbs_pu=self.d_pbs_pu,
                  d_pbs_cbs=self.d_pbs_cbs, d_cbs_pu=self.d_cbs_pu,
                  d_cbs_cu=self.d_cbs_cu, fading=self.fading, seed=self.seed)
        if "pbs_snr_db" in overrides:
            kw["P0"] = 10.0 ** (overrides.pop("pbs_snr_db") / 10.0)
        kw.update(overrides)
        return SystemConfig(**kw)


def load_config_file(path):
    """Flat key-value text config; keys mirror ExperimentConfig field names.

    Accepts "key = value" or "key value" lines, # comments, and
    comma-separated lists for grid/tuple fields.
    """
    spec = {f.name: f for f in fields(ExperimentConfig)}
    defaults = ExperimentConfig()
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" in line:
                key, _, val = line.partition("=")
            else:
                key, _, val = line.partition(" ")
            key, val = key.strip(), val.strip()
            if key not in spec:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = _coerce(key, val, getattr(defaults, key))
    return values


def _coerce(key, val, default):
    if isinstance(default, bool):
        return val.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(val)
    if isinstance(default, float):
        return float(val)
    if isinstance(default, tuple):
        parts = [p.strip() for p in val.split(",") if p.strip()]
        if key == "solvers":
            return tuple(parts)
        return tuple(float(p) for p in parts)
    return val


def design_solution(name, sp):
    """Run one named solver on a stacked instance and return its design."""
    if name == "alg1":
        lam, _ = solve_fixed_point(sp)
        return recover_downlink(lam, uplink_beams(lam, sp), sp)
    if name == "alg1-distributed":
        lam, _, _ = solve_fixed_point_distributed(sp)
        return recover_downlink(lam, uplink_beams(lam, sp), sp)
    if name == "alg2":
        lam, beams, _ = solve_matrix_iteration(sp)
        return recover_downlink(lam, beams, sp)
    if name == "czf":
        return zeroforcing.czf_solve(sp.ch, sp.targets, sp)
    if name == "pzf":
        return zeroforcing.pzf_solve(sp.ch, sp.targets, sp)
    raise ValueError(f"unknown solver {name!r}; choose from {SOLVER_NAMES}")


def no_cooperation_rate(syscfg, ch, full_bandwidth=True):
    """PU rate with the CBSs silent. Full-bandwidth by default (the PU keeps
    the whole band); the half-rate convention is available for comparison."""
    snr = syscfg.P0 * abs(np.vdot(ch.h0p, ch.f)) ** 2 / syscfg.N1p
    rate = math.log2(1.0 + snr)
    return rate if full_bandwidth else 0.5 * rate


def _classify_and_solve(syscfg, index, solver_names, full_bw):
    """One realization: targets, no-cooperation rate, per-solver outcome."""
    ch = generate_instance(syscfg, index)
    t = sinr_targets(syscfg, ch)
    nc_rate = no_cooperation_rate(syscfg, ch, full_bw)
    results = {}
    if t.gamma0p <= 0:
        for name in solver_names:
            results[name] = ("self-sufficient", math.nan)
        return index, t.gamma0p, nc_rate, results
    sp = build_stacked(ch, t, syscfg)
    for name in solver_names:
        try:
            sol = design_solution(name, sp)
            results[name] = ("ok", total_power(sol, sp))
        except CogrelayError:
            results[name] = ("infeasible", math.nan)
    return index, t.gamma0p, nc_rate, results


def _power_worker(args):
    return _classify_and_solve(*args)


def _map_jobs(worker, argslist, jobs):
    if jobs <= 1 or len(argslist) < 2:
        return [worker(a) for a in argslist]
    chunk = max(1, len(argslist) // (jobs * 8))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, argslist, chunksize=chunk))


def _ensemble(cfg, syscfg, solver_names):
    args = [(syscfg, idx, tuple(solver_names), cfg.nc_full_bandwidth)
            for idx in range(cfg.realizations)]
    rows = _map_jobs(_power_worker, args, cfg.jobs)
    rows.sort(key=lambda r: r[0])
    return rows


def _accounting(rows, name):
    total = len(rows)
    selfs = sum(1 for r in rows if r[3][name][0] == "self-sufficient")
    infeas = sum(1 for r in rows if r[3][name][0] == "infeasible")
    used = total - selfs - infeas
    return {"total": total, "cooperation": used, "self_sufficient": selfs,
            "infeasible": infeas}


def _db(power):
    return 10.0 * math.log10(power) if power > 0 else -math.inf


def write_csv(path, name, header, rows, summary_lines=()):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {CSV_SCHEMA} {name}\n")
        for line in summary_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


# --- experiments ---

def run_convergence(cfg):
    """Per-iteration relative total-power change of both optimal solvers on
    the first feasible realization (skipped indices are reported).

    Returns (header, rows, summary_lines).

    Raises:
        NoFeasibleInstance: nothing feasible within cfg.attempt_cap draws.
    """
    syscfg = cfg.system()
    skipped = []
    for idx in range(cfg.attempt_cap):
        ch = generate_instance(syscfg, idx)
        t = sinr_targets(syscfg, ch)
        if t.gamma0p <= 0:
            skipped.append((idx, "self-sufficient"))
            continue
        sp = build_stacked(ch, t, syscfg)
        try:
            lam2, beams2, trace2 = solve_matrix_iteration(sp)
            lam1, trace1 = solve_fixed_point(sp)
        except CogrelayError as err:
            skipped.append((idx, type(err).__name__))
            continue
        rows = []
        for name, trace in (("alg1", trace1), ("alg2", trace2)):
            rels = trace.rel_changes()
            if len(trace) == 1:
                rows.append([name, 0, 0.0, trace.objectives[0]])
                continue
            for i in range(1, len(trace)):
                rows.append([name, i, rels[i], trace.objectives[i]])
        summary = [f"instance_index={idx}",
                   f"skipped={len(skipped)}: " + "; ".join(f"{i}:{why}" for i, why in skipped)]
        return ["algorithm", "iter", "rel_change", "dual_objective"], rows, summary
    raise NoFeasibleInstance(f"no feasible realization in {cfg.attempt_cap} attempts")


def run_sweep_pbs(cfg):
    """Average required CBS power (dB over noise) versus PBS transmit SNR,
    one series per solver; averages cover cooperation-mode realizations
    where the solver succeeded."""
    header = ["pbs_snr_db", "solver", "mean_power_db", "n_used",
              "n_self_sufficient", "n_infeasible", "n_total"]
    rows, summary = [], []
    for snr in cfg.pbs_snr_grid:
        syscfg = cfg.system(pbs_snr_db=snr)
        ensemble = _ensemble(cfg, syscfg, cfg.solvers)
        for name in cfg.solvers:
            acct = _accounting(ensemble, name)
            powers = [r[3][name][1] for r in ensemble if r[3][name][0] == "ok"]
            mean_db = _db(float(np.mean(powers))) if powers else math.nan
            rows.append([snr, name, mean_db, len(powers),
                         acct["self_sufficient"], acct["infeasible"], acct["total"]])
            summary.append(
                f"pbs_snr={snr} solver={name} cooperation={acct['cooperation']} "
                f"self_sufficient={acct['self_sufficient']} infeasible={acct['infeasible']} "
                f"total={acct['total']}")
    return header, rows, summary


def run_cdf(cfg):
    """Empirical CDF samples of the total CBS power per solver, one batch per
    CU target rate in the grid."""
    header = ["r_cu", "solver", "power_db", "cdf"]
    rows, summary = [], []
    for rate in cfg.rate_grid:
        syscfg = cfg.system(r_cu=rate)
        ensemble = _ensemble(cfg, syscfg, cfg.solvers)
        for name in cfg.solvers:
            acct = _accounting(ensemble, name)
            powers = sorted(r[3][name][1] for r in ensemble if r[3][name][0] == "ok")
            count = len(powers)
            for i, p in enumerate(powers):
                rows.append([rate, name, _db(p), (i + 1) / count])
            summary.append(
                f"r_cu={rate} solver={name} cooperation={acct['cooperation']} "
                f"self_sufficient={acct['self_sufficient']} infeasible={acct['infeasible']} "
                f"total={acct['total']}")
    return header, rows, summary


def run_outage(cfg):
    """PU outage probability versus CBS power budget.

    Outage at a budget: the direct link alone misses the PU target AND the
    cooperative design is infeasible or needs more than the budget. The
    no-cooperation baseline (full-bandwidth direct transmission) is emitted
    as its own constant series.
    """
    syscfg = cfg.system()
    ensemble = _ensemble(cfg, syscfg, cfg.solvers)
    total = len(ensemble)
    nc_out = [r[2] < cfg.r0 for r in ensemble]
    header = ["solver", "budget_db", "outage_prob"]
    rows = []
    for name in cfg.solvers:
        for budget in cfg.budget_grid_db:
            bad = 0
            for r, nco in zip(ensemble, nc_out):
                if not nco:
                    continue
                status, power = r[3][name]
                if status != "ok" or _db(power) > budget:
                    bad += 1
            rows.append([name, budget, bad / total])
    for budget in cfg.budget_grid_db:
        rows.append(["no-cooperation", budget, sum(nc_out) / total])
    acct = _accounting(ensemble, cfg.solvers[0])
    summary = [f"solver={cfg.solvers[0]} cooperation={acct['cooperation']} "
               f"self_sufficient={acct['self_sufficient']} "
               f"infeasible={acct['infeasible']} total={acct['total']}",
               f"no_cooperation_outage={sum(nc_out) / total}"]
    return header, rows, summary


def _robust_worker(args):
    syscfg, index, xi2_grid, solver_names, full_bw = args
    ch_hat = generate_instance(syscfg, index)
    t = sinr_targets(syscfg, ch_hat)
    nc_rate = no_cooperation_rate(syscfg, ch_hat, full_bw)
    if t.gamma0p <= 0:
        return index, "self-sufficient", nc_rate, {}
    sp = build_stacked(ch_hat, t, syscfg)
    designs = {}
    for name in solver_names:
        try:
            designs[name] = design_solution(name, sp)
        except CogrelayError:
            designs[name] = None
    # common error draw, scaled per grid point: true PU-side channels are
    # estimate + sqrt(xi2) * CN(0, I)
    err_rng = realization_rng(syscfg.seed, index, stream=1)
    delta = (err_rng.standard_normal(ch_hat.h[:, 0, :].shape)
             + 1j * err_rng.standard_normal(ch_hat.h[:, 0, :].shape)) / np.sqrt(2.0)
    achieved = {name: {} for name in solver_names}
    for xi2 in xi2_grid:
        h_true = ch_hat.h.copy()
        h_true[:, 0, :] = ch_hat.h[:, 0, :] + np.sqrt(xi2) * delta
        ch_true = replace(ch_hat, h=h_true)
        for name in solver_names:
            sol = designs[name]
            if sol is None:
                achieved[name][xi2] = math.nan
            else:
                achieved[name][xi2] = evaluate_solution(ch_true, sol, syscfg).rate_pu
    return index, "ok", nc_rate, achieved


def run_robustness(cfg):
    """Average achieved PU rate under imperfect CBS->PU channel knowledge:
    designs use the estimated channels, rates are evaluated on the true ones.
    """
    syscfg = cfg.system()
    args = [(syscfg, idx, tuple(cfg.xi2_grid), tuple(cfg.solvers), cfg.nc_full_bandwidth)
            for idx in range(cfg.realizations)]
    results = _map_jobs(_robust_worker, args, cfg.jobs)
    results.sort(key=lambda r: r[0])
    header = ["xi2", "solver", "mean_pu_rate", "n_used"]
    rows = []
    for name in cfg.solvers:
        for xi2 in cfg.xi2_grid:
            vals = [r[3][name][xi2] for r in results
                    if r[1] == "ok" and not math.isnan(r[3][name][xi2])]
            rows.append([xi2, name, float(np.mean(vals)) if vals else math.nan, len(vals)])
    nc_vals = [r[2] for r in results if r[1] == "ok"]
    nc_mean = float(np.mean(nc_vals)) if nc_vals else math.nan
    for xi2 in cfg.xi2_grid:
        rows.append([xi2, "no-cooperation", nc_mean, len(nc_vals)])
    selfs = sum(1 for r in results if r[1] == "self-sufficient")
    summary = [f"total={len(results)} cooperation={len(results) - selfs} "
               f"self_sufficient={selfs}"]
    return header, rows, summary


def _eta_worker(args):
    syscfg, index = args
    ch = generate_instance(syscfg, index)
    t = sinr_targets(syscfg, ch)
    if t.gamma0p <= 0:
        return index, "self-sufficient", 0, 0
    sp = build_stacked(ch, t, syscfg)
    try:
        _, _, log = solve_fixed_point_distributed(sp)
    except CogrelayError:
        return index, "infeasible", 0, 0
    return index, "ok", log.n_rounds, log.total


def run_eta(cfg):
    """Distributed-solver signaling: measured rounds, measured message
    counts, and the exchange ratio against full CSI sharing (2 N M^2)."""
    syscfg = cfg.system()
    args = [(syscfg, idx) for idx in range(cfg.realizations)]
    results = _map_jobs(_eta_worker, args, cfg.jobs)
    results.sort(key=lambda r: r[0])
    header = ["realization", "status", "n_rounds", "messages", "eta", "full_csi_scalars"]
    denom = 2 * cfg.N * cfg.M ** 2
    rows = []
    for idx, status, rounds, messages in results:
        eta = signaling_ratio(rounds, cfg.M, cfg.N) if status == "ok" else math.nan
        rows.append([idx, status, rounds, messages, eta, denom])
    ok = sum(1 for r in results if r[1] == "ok")
    selfs = sum(1 for r in results if r[1] == "self-sufficient")
    summary = [f"total={len(results)} cooperation={ok + sum(1 for r in results if r[1] == 'infeasible')} "
               f"self_sufficient={selfs} "
               f"infeasible={sum(1 for r in results if r[1] == 'infeasible')}"]
    return header, rows, summary


def run_gen(cfg, count=None, start_index=0):
    """Write channel realizations as text files; returns the paths."""
    syscfg = cfg.system()
    count = cfg.realizations if count is None else count
    paths = []
    os.makedirs(cfg.outdir, exist_ok=True)
    for idx in range(start_index, start_index + count):
        ch = generate_instance(syscfg, idx)
        path = os.path.join(cfg.outdir, f"channels_seed{cfg.seed}_{idx}.txt")
        save_channels(ch, path)
        paths.append(path)
    return paths


def run_solve(cfg, index=0, ch=None):
    """Solve one realization with every selected solver; rows carry the
    achieved SINRs/rates from the physical-model evaluator."""
    syscfg = cfg.system()
    if ch is None:
        ch = generate_instance(syscfg, index)
    t = sinr_targets(syscfg, ch)
    m = ch.M
    header = (["solver", "status", "total_power", "total_power_db",
               "pu_sinr_total", "pu_rate"]
              + [f"cu_sinr_{i + 1}" for i in range(m)])
    rows = []
    if t.gamma0p <= 0:
        for name in cfg.solvers:
            rows.append([name, "self-sufficient", math.nan, math.nan,
                         math.nan, math.nan] + [math.nan] * m)
        return header, rows, [f"gamma0p={t.gamma0p} (direct link sufficient)"]
    sp = build_stacked(ch, t, syscfg)
    for name in cfg.solvers:
        try:
            sol = design_solution(name, sp)
        except CogrelayError as err:
            rows.append([name, f"infeasible:{type(err).__name__}", math.nan,
                         math.nan, math.nan, math.nan] + [math.nan] * m)
            continue
        rep = evaluate_solution(ch, sol, syscfg)
        power = total_power(sol, sp)
        rows.append([name, "ok", power, _db(power), rep.pu_total, rep.rate_pu]
                    + list(rep.cu))
    return header, rows, [f"gamma0p={t.gamma0p}"]
