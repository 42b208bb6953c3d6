"""Command-line front end.

Subcommands: run (single scenario + plots), sweep (scenario matrix),
gains (tuning/robustness report), aep (stationary power curves and
annual yield). Every file-emitting command writes a manifest.json and
exits 0 only when all listed files landed.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import annual_energy_production, optimal_energy
from .config import ConfigError, RunConfig, load_config
from .control import (default_gains, optimal_torque_gain,
                      stability_certificate, theorem1_kp_bound)
from .machine import FrameVector2
from .observer import bemf_ceiling, robust_l1_bound
from .sim import ScenarioConfig, simulate, summarize
from .wind import WindSeries
from . import plots

__all__ = ["main", "RunManifest", "cmd_run", "cmd_sweep", "cmd_gains",
           "cmd_aep"]


class DivergenceError(RuntimeError):
    pass


@dataclass
class RunManifest:
    config_path: str
    out_dir: str
    files: list
    tool_version: str
    config_hash: str

    def write(self, path):
        payload = dataclasses.asdict(self)
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    def check(self, out_dir) -> bool:
        return all((Path(out_dir) / name).exists() for name in self.files)


def _config_hash(config_path, seed_override=None) -> str:
    h = hashlib.sha256()
    h.update(Path(config_path).read_bytes())
    if seed_override is not None:
        h.update(f"seed={seed_override}".encode())
    return h.hexdigest()


def _label(mode: str, delta_L: float, delta_R: float, machine) -> str:
    if mode == "encoder":
        return "encoder"
    parts = ["sensorless"]
    parts.append("dL%+g" % (delta_L / machine.L) if delta_L else "dL0")
    parts.append("dR%+g" % (delta_R / machine.R) if delta_R else "dR0")
    return "_".join(parts).replace("+", "p").replace("-", "m").replace(
        ".", "_")


def _write_summary_csv(path, rows: list):
    cols = list(rows[0].keys())
    with open(path, "w") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            cells = []
            for c in cols:
                v = row[c]
                cells.append("%.10g" % v if isinstance(v, float) else str(v))
            fh.write(",".join(cells) + "\n")


def _jobs_value(args) -> int | None:
    if args.jobs is not None:
        return args.jobs
    env = os.environ.get("WECS_SIM_JOBS")
    return int(env) if env else None


def cmd_run(config_path, out_dir, seed=None) -> RunManifest:
    cfg = load_config(config_path, seed_override=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scen = cfg.scenario()
    trace = simulate(scen)
    trace.to_csv(out / "trace.csv")
    row = summarize(scen, trace)
    _write_summary_csv(out / "summary.csv", [row])
    w_opt = row["W_J"] / row["eta_E"] if row["eta_E"] > 0 else None
    plots.plot_tsr(trace, cfg.aero.lambda_opt, out / "tsr.svg")
    plots.plot_current_errors(trace, out / "current_errors.svg")
    plots.plot_speed_error(trace, out / "speed_error.svg")
    plots.plot_dc_power(trace, out / "p_dc.svg")
    plots.plot_energy(trace, out / "energy.svg", w_opt=w_opt)
    manifest = RunManifest(
        config_path=str(config_path), out_dir=str(out),
        files=["trace.csv", "summary.csv", "tsr.svg", "current_errors.svg",
               "speed_error.svg", "p_dc.svg", "energy.svg"],
        tool_version=__version__,
        config_hash=_config_hash(config_path, seed),
    )
    manifest.write(out / "manifest.json")
    if trace.diverged:
        raise DivergenceError(
            f"{trace.reason} at t = {trace.t_stop:.4f} s; outputs truncated")
    return manifest


def _sweep_worker(args):
    scen, stride = args
    trace = simulate(scen)
    row = summarize(scen, trace)
    p = trace["p_dc"]
    w = np.concatenate(([0.0], np.cumsum(
        0.5 * (p[1:] + p[:-1]) * np.diff(trace.t))))
    return row, trace.t[::stride], w[::stride]


def cmd_sweep(config_path, out_dir, jobs=None, seed=None) -> RunManifest:
    cfg = load_config(config_path, seed_override=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scens = cfg.matrix_scenarios()
    labels = [_label(m, dl, dr, cfg.machine) for (m, dl, dr) in cfg.matrix]
    stride = max(1, round(1.0 / cfg.dt_log))
    work = [(s, stride) for s in scens]
    n = jobs if jobs else min(len(work), os.cpu_count() or 1)
    if n <= 1:
        results = [_sweep_worker(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(_sweep_worker, work))
    rows = []
    curves = []
    truncated = []
    for label, (row, t_dec, w_dec) in zip(labels, results):
        row = {"scenario": label, **row}
        rows.append(row)
        curves.append((label, t_dec, w_dec))
        if row["diverged"]:
            truncated.append((label, row["t_stop"]))
    _write_summary_csv(out / "summary.csv", rows)
    plots.plot_energy_comparison(curves, out / "energy_compare.svg")
    manifest = RunManifest(
        config_path=str(config_path), out_dir=str(out),
        files=["summary.csv", "energy_compare.svg"],
        tool_version=__version__,
        config_hash=_config_hash(config_path, seed),
    )
    manifest.write(out / "manifest.json")
    if truncated:
        detail = ", ".join(f"{lb} at t = {ts:.4f} s" for lb, ts in truncated)
        raise DivergenceError(f"diverged scenarios: {detail}")
    return manifest


def cmd_gains(config_path) -> None:
    cfg = load_config(config_path)
    machine, aero, bounds = cfg.machine, cfg.aero, cfg.bounds
    k_opt = optimal_torque_gain(aero)
    worst = dataclasses.replace(machine, R=bounds.R_min, L=bounds.L_max)
    i_ref = FrameVector2(0.0, -machine.I_max)
    a_val, kp_min = theorem1_kp_bound(worst, aero.b, i_ref)
    gains = cfg.gains
    if gains.k_p < kp_min:
        print(f"warning: k_p = {gains.k_p:.4g} is below kp_min = "
              f"{kp_min:.4g}; certificate attempted anyway")
    report = stability_certificate(worst, aero.b, aero.J, gains, i_ref)
    e_max = bemf_ceiling(machine, aero, cfg.v_w_max)
    v_max = machine.v_limit
    l_o = machine.L + cfg.delta_L
    l1_min = robust_l1_bound(bounds, l_o, e_max, v_max, machine.I_max)
    verdict = "PASS" if report.certified else "FAIL"
    print(f"K_opt        = {k_opt:.6g} N m s^2")
    print(f"kp_min       = {kp_min:.6g}  (a = {a_val:.6g}, i_q_ref = "
          f"{-machine.I_max:g} A, R_min = {bounds.R_min:g} ohm, "
          f"L_max = {bounds.L_max:g} H)")
    print(f"k_p          = {gains.k_p:.6g}, k_i = {gains.k_i:.6g}")
    print(f"certificate  = {verdict}  (worst eigenvalue = "
          f"{report.worst_eigenvalue:.4g})")
    print(f"robust l1    = {l1_min:.6g} V  (E_max = {e_max:.4g} V, "
          f"V_max = {v_max:.4g} V, I_max = {machine.I_max:g} A, "
          f"L_o = {l_o:g} H)")


def _aep_worker(args):
    scen, avg_window = args
    trace = simulate(scen)
    if trace.diverged:
        return float("nan")
    t = trace.t
    mask = t >= t[-1] - avg_window
    return float(np.mean(trace["p_dc"][mask]))


def _constant_wind(v: float, duration: float) -> WindSeries:
    n = int(round(duration / 0.1)) + 1
    return WindSeries(dt=0.1, samples=np.full(n, v), mean=v)


def cmd_aep(config_path, out_dir, jobs=None, seed=None) -> RunManifest:
    cfg = load_config(config_path, seed_override=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = [_label(m, dl, dr, cfg.machine) for (m, dl, dr) in cfg.matrix]
    edges = np.arange(1.0, cfg.aep_v_cut + 1e-9, 0.5)
    mids = 0.5 * (edges[:-1] + edges[1:])
    run_t = cfg.aep_bin_run
    work = []
    for (mode, d_l, d_r) in cfg.matrix:
        for v in mids:
            omega0 = cfg.aero.lambda_opt * v / cfg.aero.R_r
            scen = cfg.scenario(mode=mode, delta_L=d_l, delta_R=d_r,
                                wind=_constant_wind(v, run_t), t_end=run_t,
                                omega0=omega0)
            work.append((scen, cfg.aep_avg_window))
    n = jobs if jobs else min(len(work), os.cpu_count() or 1)
    if n <= 1:
        powers = [_aep_worker(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            powers = list(pool.map(_aep_worker, work))
    powers = np.asarray(powers).reshape(len(labels), mids.size)
    if not np.all(np.isfinite(powers)):
        bad = labels[int(np.argwhere(~np.isfinite(powers))[0][0])]
        raise DivergenceError(f"power-curve bin diverged in scenario {bad}")
    files = []
    aep = {}
    for label, p_row in zip(labels, powers):
        name = f"power_curve_{label}.csv"
        with open(out / name, "w") as fh:
            fh.write("wind_mps,p_dc_w\n")
            for v, p in zip(mids, p_row):
                fh.write("%.10g,%.10g\n" % (v, p))
        files.append(name)
        aep[label] = annual_energy_production(
            np.column_stack([mids, p_row]), cfg.aep_v_mean, cfg.aep_v_cut)
    ref = aep.get("encoder", aep[labels[0]])
    with open(out / "aep_table.csv", "w") as fh:
        fh.write("scenario,aep_kwh,ratio_to_encoder\n")
        for label in labels:
            fh.write("%s,%.10g,%.10g\n" % (label, aep[label],
                                           aep[label] / ref))
    files.append("aep_table.csv")
    manifest = RunManifest(
        config_path=str(config_path), out_dir=str(out), files=files,
        tool_version=__version__,
        config_hash=_config_hash(config_path, seed),
    )
    manifest.write(out / "manifest.json")
    return manifest


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wecs-sim",
        description="deterministic wind-turbine rectifier simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
            ("run", "simulate one scenario and emit trace + plots"),
            ("sweep", "run the scenario matrix and compare energy yield"),
            ("gains", "print tuning and robustness report"),
            ("aep", "stationary power curves and annual energy")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="config file path")
        if name != "gains":
            p.add_argument("--out", required=True, help="output directory")
            p.add_argument("--seed", type=int, default=None,
                           help="override sim.seed")
        if name in ("sweep", "aep"):
            p.add_argument("--jobs", type=int, default=None,
                           help="worker processes (env WECS_SIM_JOBS)")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            manifest = cmd_run(args.config, args.out, seed=args.seed)
        elif args.command == "sweep":
            manifest = cmd_sweep(args.config, args.out,
                                 jobs=_jobs_value(args), seed=args.seed)
        elif args.command == "gains":
            cmd_gains(args.config)
            return 0
        else:
            manifest = cmd_aep(args.config, args.out,
                               jobs=_jobs_value(args), seed=args.seed)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: divergence: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 4
    if not manifest.check(manifest.out_dir):
        print("error: io: manifest lists missing files", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
