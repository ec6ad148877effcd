"""Command-line front end.

Subcommands:
    simulate    run a scenario file, write the four CSV tables
    localize    offline position estimates from an exported retimed.csv
    sync-demo   print a drift-cancellation table for the retiming scheme
    supervise   run the live supervisor endpoint (UDP)
    agent       run one live sensor agent endpoint (UDP)
    montecarlo  randomized accuracy study, prints error percentiles
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
from pathlib import Path

import yaml

from . import montecarlo as mc
from .clock import ClockState
from .live import LiveSupervisor, SensorAgent, load_live_config
from .localization import localize_cluster
from .retiming import DEFAULT_COINCIDENCE_WINDOW_US, RetimedEvent, cluster_events, retime
from .scenario import ScenarioError, load_scenario
from .simulate import export_csv, run
from .wave import CableGeometry

log = logging.getLogger(__name__)


def _fmt_flags(flags) -> str:
    return "|".join(sorted(flags)) if flags else "-"


def cmd_simulate(args) -> int:
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario = dataclasses.replace(scenario, seed=args.seed)
    report = run(scenario)
    paths = export_csv(report, args.out)
    for k, v in report.summary.items():
        print(f"{k}: {v}")
    for p in paths:
        print(f"wrote {p}")
    return 0


def _load_geometry(path: Path) -> CableGeometry:
    raw = yaml.safe_load(path.read_text())
    if not isinstance(raw, dict):
        raise ScenarioError(["geometry file must be a mapping"])
    block = raw.get("geometry", raw)
    if not isinstance(block, dict) or "sensor_ids" not in block or "positions_m" not in block:
        raise ScenarioError(["geometry file needs sensor_ids and positions_m"])
    return CableGeometry(
        tuple(int(i) for i in block["sensor_ids"]),
        tuple(float(p) for p in block["positions_m"]),
    )


def cmd_localize(args) -> int:
    geometry = _load_geometry(Path(args.geometry))
    events: list[RetimedEvent] = []
    with open(args.retimed, newline="") as f:
        for row in csv.DictReader(f):
            flag = row.get("flag") or None
            events.append(
                RetimedEvent(
                    sensor_id=int(row["sensor_id"]),
                    period_index=int(row["period_index"]),
                    retimed_us=float(row["retimed_us"]),
                    raw_ticks=int(row["raw_ticks"]),
                    amplitude_g=float(row["amplitude_g"]),
                    flag=flag,
                )
            )
    if not events:
        print("no retimed events")
        return 0
    print(f"{'period':>6} {'cluster':>7} {'sensors':>7} {'x_est_m':>12} {'v_est_m_s':>12} flags")
    for period in sorted({e.period_index for e in events}):
        period_events = [e for e in events if e.period_index == period]
        for ci, cluster in enumerate(cluster_events(period_events, args.window_us)):
            est = localize_cluster(cluster, geometry)
            n = len({e.sensor_id for e in cluster})
            print(
                f"{period:>6} {ci:>7} {n:>7} {est.x_est_m:>12.4f} {est.v_est_m_s:>12.2f} "
                f"{_fmt_flags(est.flags)}"
            )
    return 0


def cmd_sync_demo(args) -> int:
    drifts = [float(d) for d in args.drifts.split(",") if d.strip()]
    t_us = args.t_us
    offset = args.event_offset_us
    if not 0 < offset < t_us:
        print(f"event offset must be inside (0, {t_us})", file=sys.stderr)
        return 1
    print(
        f"ratiometric retiming: event at +{offset:g} us into each {t_us:g} us period,"
        f" drifts {drifts} ppm"
    )
    print(f"{'period':>6}" + "".join(f" {'raw_' + str(i):>14}" for i in range(len(drifts)))
          + "".join(f" {'retimed_' + str(i):>14}" for i in range(len(drifts)))
          + f" {'raw_spread_us':>14} {'retimed_spread_us':>18}")
    clocks = [ClockState(drift_ppm=d) for d in drifts]
    for k in range(args.periods):
        start = k * t_us
        raws, retimeds = [], []
        for c in clocks:
            c.advance_to(start + offset)
            t_evi = c.read_counter()
            c.advance_to(start + t_us)
            t_i = c.save_and_reset()
            raws.append(t_evi)
            retimeds.append(retime(t_evi, t_i, t_us))
        raw_spread = max(raws) - min(raws)
        re_spread = max(retimeds) - min(retimeds)
        print(f"{k:>6}" + "".join(f" {r:>14.4f}" for r in raws)
              + "".join(f" {r:>14.6f}" for r in retimeds)
              + f" {raw_spread:>14.4f} {re_spread:>18.9f}")
    print("raw timestamps diverge with drift; retimed values agree to sub-0.01 us")
    return 0


def cmd_supervise(args) -> int:
    config = load_live_config(args.config)
    result = LiveSupervisor(config).run()
    print(f"reports received: {result.reports_received} (decode errors: {result.decode_errors})")
    for p in result.completed_periods:
        state = "complete" if p.complete else f"timeout, missing {list(p.missing)}"
        print(f"period {p.period_index}: {len(p.reports)} reports, {state}")
    for row in result.estimates:
        est = row.estimate
        print(
            f"period {row.period_index} cluster {row.cluster_index}: "
            f"x_est = {est.x_est_m:.4f} m, v_est = {est.v_est_m_s:.2f} m/s, "
            f"flags = {_fmt_flags(est.flags)}"
        )
    if not result.estimates:
        print("no event clusters")
    return 0


def cmd_agent(args) -> int:
    config = load_live_config(args.config)
    agent = SensorAgent(config, args.sensor_id)
    # launch scripts sequence on this line, so it must not sit in a buffer
    print(
        f"sensor {args.sensor_id}: listening on {config.host}:{agent.port}",
        flush=True,
    )
    agent.run()
    print(
        f"sensor {args.sensor_id}: {agent.frames_seen} sync frames, "
        f"{agent.reports_sent} reports sent"
    )
    return 0


def cmd_montecarlo(args) -> int:
    base = load_scenario(args.scenario) if args.scenario else mc.accuracy_study_scenario()
    result = mc.run_study(
        base=base,
        trials=args.trials,
        master_seed=args.seed,
        jitter_us=args.jitter_us,
    )
    for line in result.summary_lines():
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cablewatch",
        description="Rupture localization over drift-synchronized sensor networks.",
    )
    parser.add_argument(
        "--log-level", default="WARNING",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario file, write CSV tables")
    p.add_argument("scenario", help="scenario YAML file")
    p.add_argument("--out", required=True, help="output directory for the CSVs")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("localize", help="estimate positions from a retimed.csv")
    p.add_argument("retimed", help="retimed.csv as written by simulate")
    p.add_argument("--geometry", required=True, help="YAML with sensor_ids/positions_m")
    p.add_argument(
        "--window-us", type=float, default=DEFAULT_COINCIDENCE_WINDOW_US,
        help="coincidence window for clustering (default %(default)s)",
    )
    p.set_defaults(func=cmd_localize)

    p = sub.add_parser("sync-demo", help="print a drift-cancellation table")
    p.add_argument("--periods", type=int, default=5)
    p.add_argument("--t-us", type=float, default=1_000_000.0, help="sync period length")
    p.add_argument("--event-offset-us", type=float, default=250_000.0)
    p.add_argument("--drifts", default="50,-50,12.5,-30", help="comma-separated ppm values")
    p.set_defaults(func=cmd_sync_demo)

    p = sub.add_parser("supervise", help="run the live supervisor endpoint")
    p.add_argument("config", help="live config YAML")
    p.set_defaults(func=cmd_supervise)

    p = sub.add_parser("agent", help="run one live sensor agent endpoint")
    p.add_argument("config", help="live config YAML")
    p.add_argument("--sensor-id", type=int, required=True)
    p.set_defaults(func=cmd_agent)

    p = sub.add_parser("montecarlo", help="randomized accuracy study")
    p.add_argument(
        "scenario", nargs="?", default=None,
        help="base scenario YAML (default: built-in 4-sensor study setup)",
    )
    p.add_argument("--trials", type=int, default=mc.DEFAULT_TRIALS)
    p.add_argument("--jitter-us", type=float, default=mc.DEFAULT_JITTER_US)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_montecarlo)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level))
    try:
        return args.func(args)
    except (ScenarioError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
