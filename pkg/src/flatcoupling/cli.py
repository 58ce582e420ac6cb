"""Command-line entry point: ``flatcoupling {run,sweep,verify,oracle}``.

Exit codes: 0 success, 1 a verify property failed, 2 bad configuration,
3 the simulation left the model's valid domain.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import checks, records
from .config import SWEEP_PRESETS, apply_overrides, load_config, preset
from .errors import ConfigError, FlatCouplingError
from .sim import ScenarioConfig, run, sweep_threshold

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DOMAIN = 0, 1, 2, 3


def _scenario_args(p):
    p.add_argument("--preset", help="named scenario, e.g. paper-n4-exact")
    p.add_argument("--config", type=Path, help="key = value scenario file")
    p.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )


def _resolve(args):
    cfg = preset(args.preset) if args.preset else ScenarioConfig()
    if args.config is not None:
        cfg = load_config(args.config, cfg)
    return apply_overrides(cfg, args.overrides)


def _parse_thresholds(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad threshold list {text!r}") from None


def cmd_run(args):
    cfg = _resolve(args)
    log = run(cfg)
    out = Path(args.out)
    records.atomic_write(out / "run.csv", records.run_csv(log))
    records.atomic_write(out / "summary.txt", records.summary_text(log.summary))
    print(f"e_pos = {log.summary['e_pos']:.6g} m  ({cfg.variant}, N={cfg.N})")
    print(f"wrote {out / 'run.csv'} and {out / 'summary.txt'}")
    return EXIT_OK


def cmd_sweep(args):
    cfg = _resolve(args)
    if args.thresholds:
        thresholds = _parse_thresholds(args.thresholds)
    elif args.preset in SWEEP_PRESETS:
        thresholds = list(SWEEP_PRESETS[args.preset])
    else:
        raise ConfigError("no thresholds given; pass --thresholds or a sweep preset")
    rows = sweep_threshold(cfg, thresholds, jobs=args.jobs)
    out = Path(args.out)
    records.atomic_write(out / "sweep.csv", records.sweep_csv(rows))
    for row in rows:
        print(
            f"threshold {row['threshold']:5.2f}  e_pos {row['e_pos']:.5f}  "
            f"|S| {row['mean_set_size']:.2f}"
        )
    print(f"wrote {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_verify(args):
    cfg = _resolve(args)
    results = checks.run_all(cfg)
    for res in results:
        print(res.line())
    failed = [r.name for r in results if not r.ok]
    if failed:
        print(f"failed: {', '.join(failed)}")
        return EXIT_FAIL
    print(f"all {len(results)} properties passed")
    return EXIT_OK


def cmd_oracle(args):
    from .oracles import write_fixtures

    path = Path(args.out) / "oracles.json"
    write_fixtures(path, seed=args.seed)
    print(f"wrote {path}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="flatcoupling",
        description="Coupled flatness control and downwash formation experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario")
    _scenario_args(p)
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="approximate-controller threshold sweep")
    _scenario_args(p)
    p.add_argument("--thresholds", help="comma-separated square thresholds")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the embedded property checks")
    _scenario_args(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="regenerate reference fixtures")
    p.add_argument("--out", default="tests/fixtures", help="fixture directory")
    p.add_argument("--seed", type=int, default=2024)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FlatCouplingError as exc:
        print(f"simulation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
