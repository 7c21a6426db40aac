"""Command line entry point: ``heteroclinic <subcommand> --config FILE``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .runner import EXIT_CONFIG, run

SUBCOMMANDS = ("validate", "minimize", "compare-levels", "sweep-eps", "beta", "run")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="heteroclinic",
                                description="Heteroclinic solutions on a cylinder by energy minimization.")
    sub = p.add_subparsers(dest="command", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")
    for name in SUBCOMMANDS:
        help_ = "run the experiment kind named in the config" if name == "run" else f"run a {name} experiment"
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", help="YAML experiment config (defaults are used when omitted)")
        s.add_argument("--out", help="output directory (overrides output.dir)")
        s.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                       help="dotted-path config override, repeatable")
        s.add_argument("--quiet", action="store_true", help="print nothing on success")
    return p


def _report(summary: dict) -> str:
    lines = [f"{summary['kind']}: {'PASS' if summary['passed'] else 'FAIL'} (exit {summary['exit_code']})"]
    res = summary.get("results", {})
    for key in ("theta", "theta_A", "theta_Ap", "gap", "theta_0", "theta_inf", "epsilon_0", "beta", "error"):
        if key in res:
            lines.append(f"  {key} = {res[key]}")
    for name, ok in summary.get("checks", {}).items():
        if not ok:
            lines.append(f"  failed check: {name}")
    if not summary.get("converged", True) and "error" not in res:
        lines.append("  solver did not converge")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    overrides = list(args.override)
    if args.command != "run":
        overrides.insert(0, f"kind={args.command}")
    if args.out:
        overrides.append(f"output.dir={args.out}")
    try:
        cfg = load_config(args.config, overrides)
    except ConfigError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    result = run(cfg)
    if not args.quiet or result.exit_code != 0:
        print(_report(result.summary), file=sys.stdout if result.exit_code == 0 else sys.stderr)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
