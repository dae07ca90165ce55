"""Command-line driver for convergence studies."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .harness import RunConfig, run_convergence
from .problems import PROBLEMS


def _beta1(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError("beta1 must be a number or 'auto'") from None


def _n_list(text: str):
    try:
        return tuple(int(n) for n in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("n-list must be comma separated integers, e.g. 4,8,16") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ddg2d", description="DDG convergence study on [0, 2pi]^2.")
    p.add_argument("--problem", default="burgers2d", choices=sorted(PROBLEMS))
    p.add_argument("--k", type=int, default=2, help="polynomial degree")
    p.add_argument("--n-list", type=_n_list, default=(4, 8, 16, 32), help="mesh sizes, each double the last")
    p.add_argument("--beta0", type=float, default=12.0)
    p.add_argument("--beta1", type=_beta1, default="auto", help="number or 'auto' = 1/(2k(k+1))")
    p.add_argument("--cfl", type=float, default=None, help="tau = cfl * h^2 (default depends on k)")
    p.add_argument("--t-final", type=float, default=1.0)
    p.add_argument("--init", default="corrected", help="l2 | pih | corrected[:p]")
    p.add_argument("--out", type=Path, default=None, help="CSV path; a .full.csv twin keeps all digits")
    p.add_argument("--threads", type=int, default=1, help="worker processes over mesh levels")
    p.add_argument("--verify", action=argparse.BooleanOptionalAction, default=True,
                   help="re-check projection defining conditions after construction")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig(k=args.k, n_list=args.n_list, beta0=args.beta0, beta1=args.beta1, cfl=args.cfl,
                        t_final=args.t_final, init=args.init, problem=args.problem, verify=args.verify)
        report = run_convergence(cfg, workers=args.threads)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(report.to_text(), end="")
    if args.out is not None:
        args.out.write_text(report.to_csv())
        args.out.with_suffix(".full.csv").write_text(report.to_csv(precise=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
