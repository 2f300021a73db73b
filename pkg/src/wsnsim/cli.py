"""Command-line entry point: ``wsnsim run`` and ``wsnsim compare``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .cluster import clusters_csv
from .engine import InvariantViolation, run_simulation
from .metrics import DEFAULT_VARIANTS, ProtocolVariant, RunError, compare_runs
from .model import ConfigError, NetworkConfig, Protocol, ensure_valid, load_config
from .report import write_comparison, write_reports
from .rng import derive_seeds
from .route import RoutingLoopDetected, routes_csv

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3


def _base_config(args) -> NetworkConfig:
    cfg = load_config(args.config, validate=False) if args.config else NetworkConfig()
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    if getattr(args, "protocol", None):
        cfg = cfg.with_overrides(protocol=Protocol.parse(args.protocol))
    for w in ensure_valid(cfg).warnings:
        print(f"warning: {w[0]}: {w[1]}", file=sys.stderr)
    return cfg


def cmd_run(args) -> int:
    cfg = _base_config(args)
    result = run_simulation(cfg, trace=args.trace)
    out = Path(args.out)
    label = ProtocolVariant(cfg.protocol).label(cfg)
    write_reports(out, result.summary, result.reports, label=label)
    if args.trace:
        state = result.state
        layers = [n.layer for n in state.deployment.nodes]
        (out / "ledger.csv").write_text(result.ledger.to_csv(), encoding="utf-8")
        (out / "deployment.csv").write_text(state.deployment.to_csv(), encoding="utf-8")
        (out / "clusters.csv").write_text(clusters_csv(state.assignments, layers), encoding="utf-8")
        (out / "routes.csv").write_text(routes_csv(state.routes), encoding="utf-8")
    s = result.summary
    print(f"{label}: rounds={s.rounds_simulated} fnd={s.fnd_round} hnd={s.hnd_round} "
          f"lnd={s.lnd_round} delivery_ratio={s.delivery_ratio}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _base_config(args)
    if args.seeds < 1:
        raise ConfigError("--seeds must be >= 1")
    try:
        variants = ([ProtocolVariant.parse(p) for p in args.protocols.split(",")]
                    if args.protocols else list(DEFAULT_VARIANTS))
    except ValueError as exc:
        raise ConfigError(f"--protocols: {exc}") from exc
    seeds = derive_seeds(cfg.seed, args.seeds)
    workers = args.workers or os.cpu_count() or 1
    table = compare_runs(cfg, variants, seeds, workers=min(workers, len(variants) * len(seeds)))
    write_comparison(args.out, table)
    for label in table.labels:
        print(f"{label}: median fnd={table.median(label, 'fnd_round')} "
              f"lnd={table.median(label, 'lnd_round')} "
              f"ch_load_cv={table.median(label, 'ch_load_cv')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wsnsim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON scenario file (defaults used when omitted)")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--out", default="out", help="output directory (default ./out)")

    run = sub.add_parser("run", help="simulate one scenario")
    common(run)
    run.add_argument("--protocol", choices=["leach", "layered"], type=str.lower)
    run.add_argument("--trace", action="store_true",
                     help="also write ledger.csv, clusters.csv, routes.csv, deployment.csv")
    run.set_defaults(func=cmd_run)

    cmp_ = sub.add_parser("compare", help="compare protocols over derived seeds")
    common(cmp_)
    cmp_.add_argument("--seeds", type=int, required=True, help="number of derived seeds")
    cmp_.add_argument("--protocols",
                      help="comma list of leach | layered | layered:<c_unequal> "
                           "(default leach,layered:0,layered:0.5)")
    cmp_.add_argument("--workers", type=int, help="parallel processes (default: CPU count)")
    cmp_.set_defaults(func=cmd_compare)
    return p


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, RunError):
        return _exit_code(exc.cause)
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, (InvariantViolation, RoutingLoopDetected, AssertionError)):
        return EXIT_INTERNAL
    if isinstance(exc, OSError):
        return EXIT_IO
    raise exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvariantViolation, RoutingLoopDetected, AssertionError, OSError,
            RunError) as exc:
        code = _exit_code(exc)
        kind = {EXIT_CONFIG: "config error", EXIT_INTERNAL: "internal error",
                EXIT_IO: "I/O error"}[code]
        print(f"{kind}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
