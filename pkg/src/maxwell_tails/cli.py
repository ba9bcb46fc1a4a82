"""Command line entry point.

Exit codes: 0 success, 1 run or check failure, 2 configuration or input error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__

EXIT_OK, EXIT_RUN, EXIT_CONFIG = 0, 1, 2


def _cmd_evolve(args) -> int:
    from .config import load_config
    from .runner import execute_run

    cfg = load_config(args.config)
    res = execute_run(cfg)
    print(f"{res.name}: {res.status} -> {res.directory}")
    if res.message:
        print(res.message)
    for key, fit in sorted(res.fits.items()):
        if fit.exponent is not None:
            print(f"  {key}: exponent {fit.exponent:.3f} on [{fit.window[0]:.4g}, {fit.window[1]:.4g}]")
    return EXIT_OK if res.status == "ok" else EXIT_RUN


def _cmd_suite(args) -> int:
    from .config import load_config
    from .presets import PRESETS, run_preset
    from .runner import run_suite

    target = args.target
    if target in PRESETS:
        select = None
        if args.select:
            select = {int(x) for x in args.select.split(",")}
        results = run_preset(target, root=Path(args.out) if args.out else None, select=select,
                             with_dissipation_check=not args.no_dissipation_check)
        return EXIT_OK if all(r.passed for r in results) else EXIT_RUN
    path = Path(target)
    if not path.is_dir():
        raise FileNotFoundError(f"{target}: neither a preset ({', '.join(PRESETS)}) nor a directory")
    configs = [load_config(p) for p in sorted(path.glob("*.ini"))]
    return run_suite(configs, parallelism=args.parallel)


def _cmd_check(args) -> int:
    from .selfcheck import self_check

    rep = self_check()
    print("\n".join(rep.lines()))
    return EXIT_OK if not rep.failures else EXIT_RUN


def _cmd_tails(args) -> int:
    from .observe import local_power_index
    from .outputs import read_series_csv

    tau, f = read_series_csv(args.csv)
    window = tuple(args.window) if args.window else None
    fit = local_power_index(tau, f, window, observer="", field=Path(args.csv).stem)
    print(f"window: [{fit.window[0]:.6g}, {fit.window[1]:.6g}]")
    print(f"flagged: {fit.flagged}  advanced: {fit.advanced}")
    if fit.exponent is None:
        print(f"no exponent: {fit.reason}")
        return EXIT_RUN
    print(f"exponent: {fit.exponent:.6f}  (max LPI deviation {fit.residual:.3g})")
    return EXIT_OK


def _cmd_plot(args) -> int:
    from .outputs import read_series_csv, svg_loglog

    curves = []
    for p in args.csv:
        tau, f = read_series_csv(p)
        curves.append((Path(p).stem, tau, f))
    out = Path(args.output) if args.output else Path(args.csv[0]).with_suffix(".svg")
    svg_loglog(out, curves, title=args.title or "")
    print(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxwell-tails", description="Maxwell field tails on Schwarzschild.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("evolve", help="run one configuration")
    e.add_argument("config", help="INI run configuration")
    e.set_defaults(func=_cmd_evolve)

    s = sub.add_parser("suite", help="run every *.ini in a directory, or a named preset")
    s.add_argument("target", help="directory of configs or preset name (thm-schw-l1)")
    s.add_argument("--parallel", type=int, default=1, help="worker processes for directory suites")
    s.add_argument("--select", help="comma-separated criterion numbers (presets only)")
    s.add_argument("--out", help="preset output directory (default: <output root>/<preset>)")
    s.add_argument("--no-dissipation-check", action="store_true",
                   help="skip the halved-dissipation reruns (presets only)")
    s.set_defaults(func=_cmd_suite)

    c = sub.add_parser("check", help="run the exact identity checks")
    c.set_defaults(func=_cmd_check)

    t = sub.add_parser("tails", help="fit the tail exponent of a series CSV")
    t.add_argument("csv")
    t.add_argument("--window", nargs=2, type=float, metavar=("START", "END"))
    t.set_defaults(func=_cmd_tails)

    pl = sub.add_parser("plot", help="log-log SVG of one or more series CSVs")
    pl.add_argument("csv", nargs="+")
    pl.add_argument("-o", "--output")
    pl.add_argument("--title")
    pl.set_defaults(func=_cmd_plot)
    return p


def main(argv=None) -> int:
    from .config import ConfigError

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, IsADirectoryError, UnicodeDecodeError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
