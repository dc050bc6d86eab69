"""Command line: generate schedules, build scenarios, run and compare experiments.

Exit codes: 0 success, 1 usage error, 2 configuration/input error,
3 runtime failure (invariant violation or bridge failure).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import bridge
from .config import ConfigError, load_config
from .controllers import make_policy
from .dataset import GeneratorParams, ScheduleError, errors_only, generate, schedule_filename, \
    schedule_summary, validate_schedule, write_schedule
from .env import EvChargingEnv, InvariantViolation, run_episode, write_table
from .flexoffer import flexoffer_records, write_flexoffers
from .kpi import KPI_ORDER, KpiError, format_table, kpis_from_series, normalize, read_kpi_csv, write_kpi_csv
from .scenarios import PRESETS, smoke_scenario, write_scenario

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
OUTPUT_ENV = "EVGRID_OUTPUT_DIR"
MODES = {"v2g": "V2G", "g2v": "G2V", "nocontrol": "NoControl"}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out: Path, files: List[str], **info) -> Path:
    manifest = dict(info)
    manifest["files"] = {name: sha256(out / name) for name in sorted(files)}
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def output_dir(explicit: Optional[str], default_name: str) -> Path:
    if explicit:
        return Path(explicit)
    return Path(os.environ.get(OUTPUT_ENV) or "runs") / default_name


def resolve_scenario(arg: str) -> Path:
    return smoke_scenario() if arg == "smoke" else Path(arg)


# ---------------------------------------------------------------- generate

def cmd_generate(ns) -> int:
    try:
        raw = json.loads(Path(ns.params).read_text(encoding="utf-8"))
    except OSError as err:
        raise UsageError(f"cannot read {ns.params}: {err.strerror}")
    except json.JSONDecodeError as err:
        raise UsageError(f"{ns.params}: invalid JSON: {err}")
    horizon = int(raw.get("horizon_steps", 8760))
    common = raw.get("defaults", {})
    out = output_dir(ns.out, "schedules")
    out.mkdir(parents=True, exist_ok=True)
    files, summary = [], []
    for ev_id, spec in (raw.get("evs") or {}).items():
        try:
            params = GeneratorParams.from_dict({**common, **spec})
            rows = generate(params, horizon)
        except (TypeError, ValueError) as err:
            raise UsageError(f"{ev_id}: {err}")
        problems = errors_only(validate_schedule(rows, params.timestep_hours))
        if problems:
            raise ScheduleError(f"{ev_id}: generated schedule is invalid: {problems[0].message}")
        name = schedule_filename(ev_id[3:] if ev_id.startswith("EV_") else ev_id)
        write_schedule(rows, out / name)
        files.append(name)
        summary.append({"ev": ev_id, "file": name, "mode": params.mode.value,
                        **schedule_summary(rows, params.timestep_hours)})
    if summary:
        with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.DictWriter(fh, fieldnames=list(summary[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(summary)
        files.append("summary.csv")
    write_manifest(out, files, command="generate", params=str(ns.params), horizon_steps=horizon)
    print(f"wrote {len(summary)} schedule(s) to {out}", file=sys.stderr)
    return EXIT_OK


# ----------------------------------------------------------- make-scenario

def cmd_make_scenario(ns) -> int:
    spec = PRESETS[ns.preset]()
    if ns.days is not None:
        spec.days = ns.days
    if ns.seed is not None:
        spec.seed = ns.seed
    out = output_dir(ns.out, f"scenario-{ns.preset}")
    path = write_scenario(out, spec)
    print(path)
    return EXIT_OK


# --------------------------------------------------------------------- run

PANEL_COLUMNS_HEAD = ("t", "price", "net_baseline", "net_controlled", "ev_energy", "ev_energy_baseline")


def write_panels(path: Path, env: EvChargingEnv, base: EvChargingEnv) -> None:
    """The four plot panels: district net before/after control, EV energy, SoC vs required, price."""
    tr, bt = env.trace_array(), base.trace_array()
    cols = env.trace_columns
    idx = {c: i for i, c in enumerate(cols)}
    energy = [idx[f"{c}_energy"] for c in env.charger_ids]
    header = list(PANEL_COLUMNS_HEAD)
    data = [tr[:, 0], tr[:, 3], bt[:, 5], tr[:, 5], tr[:, energy].sum(axis=1), bt[:, energy].sum(axis=1)]
    for c in env.charger_ids:
        header += [f"{c}_soc", f"{c}_req_soc"]
        data += [tr[:, idx[f"{c}_soc"]], tr[:, idx[f"{c}_req_soc"]]]
    write_table(path, header, np.column_stack(data), int_columns={"t"})


def write_events(path: Path, env: EvChargingEnv) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("t", "kind", "ev_id", "charger_id", "soc", "required_soc", "shortfall", "feasible"))
        for e in env.events:
            w.writerow((e.t, e.kind, e.ev, e.charger, repr(float(e.soc)), repr(float(e.required_soc)),
                        repr(float(e.shortfall)), int(e.feasible)))


def _run_bridge(env, ns):
    if ns.bridge_listen:
        def announce(addr):
            print(f"bridge listening on {addr[0]}:{addr[1]}", file=sys.stderr, flush=True)
        bridge.serve_tcp(env, ns.bridge_listen, seed=ns.seed, timeout=ns.bridge_timeout, on_listen=announce)
    else:
        bridge.serve_stdio(env, seed=ns.seed)
    if not env.done:
        raise bridge.BridgeError(f"agent left after {env.t} of {env.horizon} steps")


def cmd_run(ns) -> int:
    if ns.bridge_listen and ns.policy != "bridge":
        raise UsageError("--bridge-listen needs --policy bridge")
    scenario = resolve_scenario(ns.scenario)
    cfg = load_config(scenario, mode=MODES[ns.mode] if ns.mode else None, horizon_steps=ns.steps)
    seed = cfg.seed if ns.seed is None else ns.seed
    ns.seed = seed
    mode = cfg.mode.value
    out = output_dir(ns.out, f"{scenario.stem}-{mode}-{ns.policy}-{seed}")
    out.mkdir(parents=True, exist_ok=True)

    env = EvChargingEnv(cfg, strict=ns.strict)
    if ns.policy == "bridge":
        _run_bridge(env, ns)
    else:
        run_episode(env, make_policy(ns.policy, env), seed=seed)
    base = EvChargingEnv(cfg.with_mode("NoControl"), strict=ns.strict)
    run_episode(base, make_policy("nocontrol"), seed=seed)

    violations = env.violations + base.violations
    report = normalize(kpis_from_series(env.kpi_series()), kpis_from_series(base.kpi_series()))

    env.write_trace(out / "trace.csv")
    base.write_trace(out / "baseline_trace.csv")
    write_panels(out / "panels.csv", env, base)
    write_kpi_csv(report, out / "kpis.csv")
    (out / "kpis.txt").write_text(format_table([report], [f"{mode}/{ns.policy}"]), encoding="utf-8")
    records = [r for ev, ch, fo in env.flexoffers() for r in flexoffer_records(ev, ch, fo)]
    write_flexoffers(out / "flexoffers.csv", records)
    write_events(out / "events.csv", env)
    files = ["trace.csv", "baseline_trace.csv", "panels.csv", "kpis.csv", "kpis.txt",
             "flexoffers.csv", "events.csv"]
    write_manifest(out, files, command="run", scenario=str(scenario), mode=mode, policy=ns.policy,
                   seed=seed, steps=env.t, out_dir=str(out))
    sys.stderr.write(format_table([report], [f"{mode}/{ns.policy}"]))
    feasible = env.shortfalls()
    print(f"{env.t} steps, {len(env.departures())} departures, {len(feasible)} feasible shortfall(s); "
          f"outputs in {out}", file=sys.stderr)
    if violations:
        for v in violations[:10]:
            print(f"invariant violation: {v}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


# ----------------------------------------------------------------- compare

def cmd_compare(ns) -> int:
    if len(ns.runs) < 2:
        raise UsageError("compare needs at least two run directories")
    reports, labels, horizons = [], [], set()
    for d in ns.runs:
        d = Path(d)
        try:
            manifest = json.loads((d / "manifest.json").read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as err:
            raise KpiError(f"{d}: unreadable manifest.json: {err}")
        horizons.add(manifest.get("steps"))
        reports.append(read_kpi_csv(d / "kpis.csv"))
        labels.append(f"{d.name}")
    if len(horizons) != 1:
        raise KpiError(f"runs cover different horizons: {sorted(map(str, horizons))}")
    if ns.labels:
        labels = ns.labels.split(",")
        if len(labels) != len(reports):
            raise UsageError(f"--labels names {len(labels)} column(s) for {len(reports)} run(s)")
    table = format_table(reports, labels)
    if ns.out:
        out = Path(ns.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["kpi"] + [f"{label}_delta_pct" for label in labels])
            for k in KPI_ORDER:
                w.writerow([k] + [repr(r.delta_pct(k)) for r in reports])
    sys.stdout.write(table)
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    ap = Parser(prog="evgrid", description="EV charging and V2G community simulator")
    sub = ap.add_subparsers(dest="command", parser_class=Parser)

    g = sub.add_parser("generate", help="generate EV schedules from a parameter file")
    g.add_argument("params", help="JSON with horizon_steps, optional defaults and an evs map")
    g.add_argument("--out", help=f"output directory (default: ${OUTPUT_ENV} or runs/)")
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("make-scenario", help="write a synthetic scenario directory")
    m.add_argument("--preset", choices=sorted(PRESETS), default="smoke")
    m.add_argument("--days", type=int)
    m.add_argument("--seed", type=int)
    m.add_argument("--out")
    m.set_defaults(func=cmd_make_scenario)

    r = sub.add_parser("run", help="simulate one scenario and its no-control baseline")
    r.add_argument("--scenario", default="smoke", help="scenario JSON, or 'smoke' for the shipped one")
    r.add_argument("--mode", choices=sorted(MODES), help="override the scenario's mode")
    r.add_argument("--policy", choices=("nocontrol", "rbc", "bridge"), default="nocontrol")
    r.add_argument("--seed", type=int)
    r.add_argument("--steps", type=int, help="simulate only the first N steps")
    r.add_argument("--strict", action="store_true", help="raise on bad actions and invariant violations")
    r.add_argument("--bridge-listen", metavar="HOST:PORT",
                   help="serve the bridge over TCP instead of stdin/stdout")
    r.add_argument("--bridge-timeout", type=float, default=60.0,
                   help="seconds to wait for the agent to connect (default 60)")
    r.add_argument("--out")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="side-by-side KPI deltas of finished runs")
    c.add_argument("runs", nargs="+")
    c.add_argument("--labels", help="comma-separated column labels")
    c.add_argument("--out", help="also write the deltas as CSV")
    c.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    if not getattr(ns, "func", None):
        ap.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return ns.func(ns)
    except UsageError as err:
        print(f"evgrid: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, ScheduleError, KpiError) as err:
        print(f"evgrid: error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as err:
        print(f"evgrid: invariant violation: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    except bridge.BridgeError as err:
        print(f"evgrid: bridge failure: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
