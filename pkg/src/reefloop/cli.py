"""The reefloop command line.

    reefloop dataset validate ROOT
    reefloop dataset attrs ROOT
    reefloop eval --dataset ROOT --tracker ncc [--tracker mosse ...] --runs 5 --out DIR
    reefloop report --in DIR [--attr SV,CR] [--format csv|json] [--no-figures]
    reefloop simulate --scenario S [--export ROOT]
    reefloop episode --scenario S --tracker T [--operator scripted|console] [--out DIR]
    reefloop serve --bind HOST:PORT --scenario S [--tracker T]

Scenario arguments accept a path to a scenario.toml or one of the built-in
names: midwater-easy, teleport.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from reefloop.dataset import ATTRIBUTE_CODES, AUTO_CODES, DatasetError, load_dataset
from reefloop.session.benchmark import RunStore, run_benchmark
from reefloop.session.episode import ScriptedOperator, run_episode, save_episode
from reefloop.session.export import export_episode, export_report
from reefloop.session.simulate import export_synthetic_sequence
from reefloop.sim.scenario import load_scenario, save_scenario
from reefloop.sim.scripts import midwater_easy_scenario, teleport_scenario

log = logging.getLogger("reefloop")

BUILTIN_SCENARIOS = {
    "midwater-easy": midwater_easy_scenario,
    "teleport": teleport_scenario,
}


def resolve_scenario(spec: str):
    if spec in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[spec]()
    path = Path(spec)
    if not path.is_file():
        raise SystemExit(f"scenario {spec!r} is neither a file nor one of {sorted(BUILTIN_SCENARIOS)}")
    return load_scenario(path)


def cmd_dataset(args) -> int:
    try:
        records = load_dataset(args.root)
    except DatasetError as exc:
        print(f"INVALID: {exc}", file=sys.stderr)
        return 1
    if args.action == "validate":
        for r in records:
            print(f"ok {r.id}: {r.frame_count} frames @ {r.fps:g} fps, "
                  f"{r.resolution[0]}x{r.resolution[1]}, attrs {','.join(r.attributes.codes()) or '-'}")
        print(f"{len(records)} sequence(s) valid")
        return 0
    # attrs: table of the auto flags plus declared environment flags
    header = ["sequence"] + list(ATTRIBUTE_CODES)
    print(",".join(header))
    for r in records:
        flags = ["1" if r.attributes[c] else "0" for c in ATTRIBUTE_CODES]
        print(",".join([r.id] + flags))
    print(f"# auto-computed: {','.join(AUTO_CODES)}", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    records = load_dataset(args.dataset)
    out = Path(args.out)
    store = RunStore(out)
    report = run_benchmark(
        records,
        tracker_specs=args.tracker,
        n_runs=args.runs,
        store=store,
        dataset_name=Path(args.dataset).name,
    )
    written = export_report(report, out, figures=not args.no_figures)
    for name in sorted(written):
        print(f"wrote {written[name]}")
    return 0


def cmd_report(args) -> int:
    report_path = Path(args.in_dir) / "report.json"
    if not report_path.is_file():
        raise SystemExit(f"no report.json under {args.in_dir}; run `reefloop eval` first")
    data = json.loads(report_path.read_text())
    attrs = args.attr.split(",") if args.attr else None
    if args.format == "json":
        if attrs:
            filtered = {
                t: {c: tr["per_attribute"].get(c) for c in attrs}
                for t, tr in data["trackers"].items()
            }
            print(json.dumps(filtered, indent=2))
        else:
            print(json.dumps(data, indent=2))
        return 0
    # csv to stdout
    rows = []
    for tracker_id, tr in sorted(data["trackers"].items()):
        if attrs:
            for code in attrs:
                agg = tr["per_attribute"].get(code)
                if agg is None:
                    log.warning("%s: no sequences carry attribute %s", tracker_id, code)
                    continue
                rows.append((tracker_id, code, agg["success_auc"], agg["precision_at_20px"], agg["norm_precision_auc"]))
        else:
            o = tr["overall"]
            rows.append((tracker_id, "ALL", o["success_auc"], o["precision_at_20px"], o["norm_precision_auc"]))
    print("tracker,attribute,success_auc,precision_at_20px,norm_precision_auc")
    for row in rows:
        print(",".join(str(v) for v in row))
    return 0


def cmd_simulate(args) -> int:
    scenario = resolve_scenario(args.scenario)
    if args.save_scenario:
        save_scenario(scenario, args.save_scenario)
        print(f"wrote {args.save_scenario}")
    if args.export:
        seq_dir = export_synthetic_sequence(scenario, Path(args.export))
        print(f"exported synthetic sequence to {seq_dir}")
    elif not args.save_scenario:
        print("nothing to do: pass --export DATASET_ROOT and/or --save-scenario FILE")
    return 0


def cmd_episode(args) -> int:
    scenario = resolve_scenario(args.scenario)
    server = None
    operator = ScriptedOperator()
    if args.operator == "console":
        from reefloop.session.episode import ConsoleOperator
        from reefloop.session.server import OperatorServer

        server = OperatorServer(args.bind)
        operator = ConsoleOperator(server)
        print(f"operator console channel on {server.address[0]}:{server.port}")
    try:
        episode = run_episode(
            scenario,
            tracker_spec=args.tracker,
            operator=operator,
            server=server,
            wall_clock=args.operator == "console",
        )
    finally:
        if server is not None:
            server.close()
    summary = episode.summary()
    print(json.dumps(summary, indent=2))
    if args.out:
        out = Path(args.out)
        save_episode(episode, out)
        written = export_episode(
            episode, out, figures=not args.no_figures,
            altitude_floor=scenario.servo.altitude_floor_m,
        )
        for name in sorted(written):
            print(f"wrote {written[name]}")
    return 0


def cmd_serve(args) -> int:
    args.operator = "console"
    args.no_figures = True
    args.out = None
    return cmd_episode(args)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reefloop", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dataset", help="validate a dataset or print its attribute table")
    p.add_argument("action", choices=("validate", "attrs"))
    p.add_argument("root")
    p.set_defaults(fn=cmd_dataset)

    p = sub.add_parser("eval", help="run trackers over a dataset and write the report")
    p.add_argument("--dataset", required=True)
    p.add_argument("--tracker", action="append", required=True,
                   help="ncc | mosse | oracle | static | empty | bridge:<endpoint>; repeatable")
    p.add_argument("--runs", type=int, default=5)
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("report", help="print a stored report, optionally per attribute")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--attr", default=None, help="comma-separated attribute codes, e.g. SV,CR")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("simulate", help="export a synthetic sequence from a scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--export", default=None, help="dataset root to write the sequence into")
    p.add_argument("--save-scenario", default=None, help="write the resolved scenario.toml here")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("episode", help="run a closed-loop episode")
    p.add_argument("--scenario", required=True)
    p.add_argument("--tracker", default="ncc")
    p.add_argument("--operator", choices=("scripted", "console"), default="scripted")
    p.add_argument("--bind", default="127.0.0.1:7071")
    p.add_argument("--out", default=None, help="write log.jsonl, series, and figures here")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(fn=cmd_episode)

    p = sub.add_parser("serve", help="serve the operator channel for a live episode")
    p.add_argument("--bind", default="127.0.0.1:7071")
    p.add_argument("--scenario", required=True)
    p.add_argument("--tracker", default="ncc")
    p.set_defaults(fn=cmd_serve)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
