"""Command line interface: ``graphdp {sweep,audit,bound,check}``."""
from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, GraphDPError


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from exc


def _edge(text: str) -> tuple[int, int]:
    try:
        i, j = (int(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'i,j', got {text!r}") from exc
    return i, j


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="graphdp", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="epsilon/MSE sweep over the noise scale grid")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=None, help="output directory (default: config 'output')")

    a = sub.add_parser("audit", help="Monte Carlo audit of the Chernoff delta bound")
    a.add_argument("--config", required=True)
    a.add_argument("--eps", type=_floats, required=True, help="comma-separated epsilon grid")
    a.add_argument("--out", default=None)

    b = sub.add_parser("bound", help="certificate for a single adjacent pair, JSON on stdout")
    b.add_argument("--config", required=True)
    b.add_argument("--edge", type=_edge, required=True)
    b.add_argument("--sigma", type=float, default=None, help="noise scale (default: audit.sigma)")

    c = sub.add_parser("check", help="run the built-in property suite")
    c.add_argument("--inject-fault", type=float, default=0.0, help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    # deferred so `graphdp --help` stays fast
    from . import experiment
    from .checks import run_check

    try:
        if args.command == "check":
            ok, lines = run_check(fault=args.inject_fault)
            print("\n".join(lines))
            print("all checks passed" if ok else "CHECK FAILURES")
            return 0 if ok else 1
        cfg = experiment.load_config(args.config)
        if args.command == "sweep":
            path = experiment.run_sweep(cfg, args.out)
            print(path)
        elif args.command == "audit":
            out = args.out or cfg.output
            rep = experiment.run_audit(cfg, args.eps, out)
            n_bad = len(rep["violations"]) + rep["closed_form"]["unflagged_violations"]
            print(f"{out}/audit.json: {len(rep['violations'])} Chernoff violations, "
                  f"{len(rep['closed_form']['invalid'])} closed-form values flagged invalid")
            return 0 if n_bad == 0 else 1
        elif args.command == "bound":
            rec = experiment.bound_for_edge(cfg, args.edge, args.sigma)
            sys.stdout.write(experiment.to_json(rec))
    except (ConfigError, GraphDPError, FileNotFoundError, ValueError) as exc:
        print(f"graphdp: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
