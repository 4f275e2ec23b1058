"""Command-line front end.

    wabsim validate <file>
    wabsim run <file> --out <dir> [--format csv|json] [--seed N]
    wabsim calibrate-check <dir>

Exit status: 0 success, 1 validation or target failure, 2 I/O or parse error.
Set ``WAB_SIM_LOG`` (DEBUG, INFO, WARNING, ...) for log output on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from .engine import records as rec_io
from .engine.o2i import is_o2i, run_campaign
from .engine.scenario import Scenario, load_json
from .engine.sim import simulate
from .errors import InvalidScenario, MissingOutput, ParseError, WabError
from .summary import RunSummary, calibrate_check, summarize
from .topology import Node, NetworkState, NodeRole, integrate_wab_node, validate_topology

EXIT_OK, EXIT_FAIL, EXIT_IO = 0, 1, 2

log = logging.getLogger("wabsim")


def _setup_logging() -> None:
    level = os.environ.get("WAB_SIM_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def load(path) -> Scenario:
    """Parse a scenario file; schema defects surface as ``ParseError`` with the field."""
    data = load_json(path)
    try:
        return Scenario.from_dict(data)
    except InvalidScenario as e:
        raise ParseError(str(e).split(": ", 1)[-1], field=e.location) from None


def declared_network(scenario: Scenario) -> tuple[NetworkState, list[str]]:
    """Network built from the declared donors, without running any radio."""
    net = NetworkState()
    for n in scenario.nodes:
        net.add_node(Node(n.id, n.role, n.chassis, n.position))
    for a, b in scenario.links:
        net.link(a, b)
    errors = []
    for n in scenario.nodes:
        if n.role is not NodeRole.WAB_MT or n.donor is None:
            continue
        try:
            integrate_wab_node(net, n.chassis, n.donor)
        except WabError as e:
            # keep the declared parentage so the star check can name it
            net.donors[n.id] = [n.donor]
            errors.append(f"{n.id}: {e}")
    return net, errors


def cmd_validate(path) -> int:
    scenario = load(path)
    net, errors = declared_network(scenario)
    report = validate_topology(net)
    print(json.dumps({"scenario": scenario.name, "ok": report.ok and not errors,
                      "violations": report.to_dict()["violations"], "errors": errors}, indent=1))
    return EXIT_OK if report.ok and not errors else EXIT_FAIL


def _write_records(records, out: Path, fmt: str, stem: str = "records", **meta) -> None:
    if fmt == "csv":
        rec_io.write_csv(records, out / f"{stem}.csv")
    else:
        rec_io.write_json(records, out / f"{stem}.json", **meta)


def cmd_run(path, out_dir, fmt: str = "csv", seed: int | None = None) -> RunSummary:
    scenario = load(path)
    if seed is not None:
        scenario = replace(scenario, seed=seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    world = simulate(scenario)
    _write_records(world.records, out, fmt, scenario=scenario.name, seed=scenario.seed)
    rec_io.write_events(world.events, out / "events.jsonl")
    se_table = []
    kind = "vehicular"
    if is_o2i(scenario):
        kind = "o2i"
        cases_dir = out / "cases"
        cases_dir.mkdir(exist_ok=True)
        for row, records in run_campaign(scenario):
            se_table.append(row.to_dict())
            _write_records(records, cases_dir, fmt, stem=row.case.label, scenario=scenario.name)
        with open(out / "se_table.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(se_table[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(se_table)
    rows = rec_io.read_csv(out / "records.csv") if fmt == "csv" else rec_io.read_json(out / "records.json")
    summary = summarize(rows, scenario.name, kind, scenario.outage_floor_dbm, se_table)
    (out / "summary.json").write_text(json.dumps(summary.to_dict(), indent=1) + "\n")
    print(summary.table())
    return summary


def cmd_calibrate_check(out_dir) -> int:
    results = calibrate_check(out_dir)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wabsim", description="WAB relay node simulator")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("validate", help="check a scenario file and its topology")
    v.add_argument("file")
    r = sub.add_parser("run", help="simulate a scenario and export records")
    r.add_argument("file")
    r.add_argument("--out", required=True)
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.add_argument("--seed", type=_u64)
    c = sub.add_parser("calibrate-check", help="compare a run's outputs with the reference targets")
    c.add_argument("dir")
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args.file)
        if args.command == "run":
            cmd_run(args.file, args.out, args.format, args.seed)
            return EXIT_OK
        return cmd_calibrate_check(args.dir)
    except (ParseError, MissingOutput, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except InvalidScenario as e:
        print(f"invalid scenario: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
