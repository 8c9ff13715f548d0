"""presence-hub command line: serve, sim, fuzz, metrics.

Exit codes: 0 success, 1 user error (bad arguments, unreadable inputs,
unreachable server), 2 internal error (including an engine/oracle mismatch).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import datetime, timezone

import requests

from presence_hub.aggregators.replay import ScenarioScript, replay_scenario
from presence_hub.config import ConfigError, DeploymentConfig
from presence_hub.eventlog import read_log
from presence_hub.fuzz import run_fuzz
from presence_hub.httpd import HubServer
from presence_hub.metrics import compute_metrics
from presence_hub.model import parse_ts, to_utc_ms

logger = logging.getLogger(__name__)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="presence-hub",
        description="Workplace presence awareness hub: server, simulators, fuzzing, metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the central server until interrupted")
    serve.add_argument("config", help="deployment config JSON")

    sim = sub.add_parser("sim", help="replay a scenario script against a running server")
    sim.add_argument("config", help="deployment config JSON (provides the server address)")
    sim.add_argument("scenario", help="scenario script JSON")
    sim.add_argument("--speed", type=float, default=1.0, help="replay speed multiplier (default 1)")
    sim.add_argument("--server", help="override server base URL")
    sim.add_argument("--timeline", help="write the virtual-time state timeline NDJSON here")

    fuzz = sub.add_parser("fuzz", help="check the fusion engine against the independent oracle")
    fuzz.add_argument("--cases", type=int, default=10000, help="random cases (0 = exhaustive table only)")
    fuzz.add_argument("--seed", type=int, default=42, help="random seed")

    metrics = sub.add_parser("metrics", help="compute status/dashboard metrics from an event log")
    metrics.add_argument("log", help="event log NDJSON path")
    metrics.add_argument("--until", help="report horizon (RFC 3339); default: now")

    return parser


def _cmd_serve(args: argparse.Namespace) -> int:
    config = DeploymentConfig.load(args.config)
    server = HubServer(config)
    print(f"presence-hub serving on {server.url} (log: {config.log_file})")
    server.run_until_interrupt()
    return 0


def _cmd_sim(args: argparse.Namespace) -> int:
    config = DeploymentConfig.load(args.config)
    script = ScenarioScript.load(args.scenario)
    if args.speed <= 0:
        print("error: --speed must be > 0", file=sys.stderr)
        return 1
    url = args.server or f"http://{config.host}:{config.port}"
    report = replay_scenario(script, url, args.speed)
    if args.timeline:
        with open(args.timeline, "w", encoding="utf-8") as fh:
            fh.write(report.timeline_ndjson())
    print(json.dumps({"sent": report.sent, "rejected": report.rejected}))
    if report.aborted:
        print(f"error: server unreachable after retries; partial report", file=sys.stderr)
        return 1
    return 0


def _cmd_fuzz(args: argparse.Namespace) -> int:
    if args.cases < 0:
        print("error: --cases must be >= 0", file=sys.stderr)
        return 1
    report = run_fuzz(args.cases, args.seed)
    sys.stdout.write(report.render())
    return 0 if report.passed else 2


def _cmd_metrics(args: argparse.Namespace) -> int:
    events = read_log(args.log)
    until = parse_ts(args.until) if args.until else to_utc_ms(datetime.now(timezone.utc))
    report = compute_metrics(events, until)
    print(json.dumps(report.to_json(), indent=2))
    print()
    sys.stdout.write(report.render_table())
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    commands = {
        "serve": _cmd_serve,
        "sim": _cmd_sim,
        "fuzz": _cmd_fuzz,
        "metrics": _cmd_metrics,
    }
    try:
        return commands[args.command](args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, requests.RequestException) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 0
    except Exception as exc:  # anything else is a bug in this program
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
