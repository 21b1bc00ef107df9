"""Command-line entry point: run, sweeps, config validation.

Exit codes: 0 success, 2 configuration error, 3 runtime error. Every
invocation echoes the fully resolved configuration and seed before any
simulation work; validation failures happen before side effects.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import harness
from .config import (
    ConfigError,
    ScenarioConfig,
    apply_overrides,
    default_config,
    load_config_file,
)
from .orbital import SpacingError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _parse_list(text: str, kind=int) -> tuple:
    try:
        return tuple(kind(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"expected a comma-separated list, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satqnet",
        description="LEO entanglement-distribution simulator and adaptive router",
    )
    parser.add_argument("--config", help="path to a JSON scenario config")
    parser.add_argument("--seed", type=int, help="override base_seed")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one config key (repeatable; wins over the file)",
    )
    parser.add_argument("--parallel", type=int, default=1, help="episode workers")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate-config", help="resolve and print the config, no simulation")
    sub.add_parser("run", help="Monte Carlo episodes for one scenario")
    p_nodes = sub.add_parser("sweep-nodes", help="scalability sweep across node counts")
    p_nodes.add_argument("--sizes", default="25,50,100")
    p_fade = sub.add_parser("sweep-fading", help="fading-deviation sweep")
    p_fade.add_argument("--sigmas", default="0.02,0.04,0.06,0.08,0.10,0.12")
    p_dens = sub.add_parser("sweep-density", help="volumetric-density sweep")
    p_dens.add_argument(
        "--counts", default="12,18,27,40", help="node counts realizing the density axis"
    )
    p_dens.add_argument(
        "--densities", default=None, help="densities per km^3 (overrides --counts)"
    )
    return parser


def _resolve_config(args) -> ScenarioConfig:
    cfg = load_config_file(args.config) if args.config else default_config()
    cfg = apply_overrides(cfg, args.overrides)
    if args.seed is not None:
        cfg = cfg.replace(base_seed=args.seed)
    return cfg


def _banner(cfg: ScenarioConfig, command: str) -> None:
    print(f"satqnet {command}: resolved configuration")
    print(json.dumps(cfg.resolved_dict(), indent=2, sort_keys=True))
    print(f"base_seed: {cfg.base_seed}")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    _banner(cfg, args.command)
    if args.command == "validate-config":
        return EXIT_OK

    try:
        os.makedirs(args.out, exist_ok=True)
        if args.command == "run":
            records = harness.run_monte_carlo(cfg, parallel=args.parallel)
            rows = [row for rec in records for row in rec.route_rows]
            rid = harness.run_id(cfg)
            csv_path = os.path.join(args.out, f"run_{cfg.regime}_{rid}.csv")
            harness.write_csv(csv_path, rows, harness.ROUTE_COLUMNS)
            if cfg.record_link_snapshots:
                link_rows = [row for rec in records for row in rec.link_rows]
                link_path = os.path.join(args.out, f"links_{cfg.regime}_{rid}.csv")
                harness.write_csv(link_path, link_rows, harness.LINK_COLUMNS)
            summary = harness.summarize(records, cfg)
            json_path = os.path.join(args.out, f"run_{cfg.regime}_{rid}.json")
            harness.write_summary_json(json_path, cfg, [summary])
            print(f"wrote {csv_path}")
            print(f"wrote {json_path}")
        elif args.command == "sweep-nodes":
            sizes = _parse_list(args.sizes, int)
            rows = harness.sweep_nodes(cfg, sizes, parallel=args.parallel)
            _write_sweep(cfg, rows, args.out, "sweep-nodes")
        elif args.command == "sweep-fading":
            sigmas = _parse_list(args.sigmas, float)
            rows = harness.sweep_fading(cfg, sigmas, parallel=args.parallel)
            _write_sweep(cfg, rows, args.out, "sweep-fading")
        elif args.command == "sweep-density":
            if args.densities:
                densities = _parse_list(args.densities, float)
                counts = tuple(harness.nodes_for_density(cfg, rho) for rho in densities)
            else:
                counts = _parse_list(args.counts, int)
            rows = harness.sweep_density(cfg, counts, parallel=args.parallel)
            _write_sweep(cfg, rows, args.out, "sweep-density")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SpacingError, ValueError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _write_sweep(cfg: ScenarioConfig, rows: list[dict], out: str, name: str) -> None:
    rid = harness.run_id(cfg, extra=name)
    csv_path = os.path.join(out, f"{name}_{cfg.regime}_{rid}.csv")
    harness.write_csv(csv_path, rows, harness.SWEEP_COLUMNS)
    json_path = os.path.join(out, f"{name}_{cfg.regime}_{rid}.json")
    harness.write_summary_json(json_path, cfg, rows)
    print(f"wrote {csv_path}")
    print(f"wrote {json_path}")


if __name__ == "__main__":
    sys.exit(main())
