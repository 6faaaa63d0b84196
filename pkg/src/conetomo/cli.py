"""Command-line driver: ``conetomo {project,check,reconstruct,demo}``.

Exit codes: 0 pass, 1 consistency failure, 2 usage or config error.
"""

import argparse
import os
import sys
from pathlib import Path

from .config import ConfigError, RunConfig
from .container import ContainerError
from .pipeline import SWEEP_EPS, check, project, reconstruct, run_demo

DEMOS = ("convex-crt", "planar-compton", "corruption-sweep")


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--tol-scale", type=float, default=1.0,
                        help="multiply every threshold (default 1)")
    common.add_argument("--threads", type=int,
                        help="worker threads (fallback: CONETOMO_THREADS)")
    common.add_argument("--seed", type=int, help="override the config seed")
    p = argparse.ArgumentParser(prog="conetomo", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("project", parents=[common], help="write forward data containers")
    for name, text in (("check", "run range checks on containers"),
                       ("reconstruct", "reconstruct the field from containers")):
        sp = sub.add_parser(name, parents=[common], help=text)
        sp.add_argument("input", help="directory written by 'project'")
    sp = sub.add_parser("demo", parents=[common], help="run a scripted scenario")
    sp.add_argument("name", help=", ".join(DEMOS))
    return p


def _config(args):
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    threads = args.threads
    if threads is None and os.environ.get("CONETOMO_THREADS"):
        try:
            threads = int(os.environ["CONETOMO_THREADS"])
        except ValueError:
            raise ConfigError("CONETOMO_THREADS", "must be an integer") from None
    if threads is not None:
        if threads < 1:
            raise ConfigError("threads", "must be a positive integer")
        cfg.threads = threads
    if args.out:
        cfg.out = args.out
    return cfg


def main(argv=None):
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    if args.tol_scale <= 0:
        print("error: --tol-scale must be positive", file=sys.stderr)
        return 2
    try:
        if args.command == "demo":
            if args.name not in DEMOS:
                parser.print_usage(sys.stderr)
                print(f"error: unknown demo {args.name!r}; choose from {', '.join(DEMOS)}",
                      file=sys.stderr)
                return 2
            out = Path(args.out or f"demo-{args.name}")
            seed = 0 if args.seed is None else args.seed
            passed, info = run_demo(args.name, out, seed, args.threads, args.tol_scale)
            if args.name == "corruption-sweep":
                for eps, row in zip(SWEEP_EPS, info["rows"]):
                    print(f"eps={eps:<5g} pass={row['pass']} "
                          f"worst_ratio={row['worst_ratio']:.3e}")
                print(f"wrote {out / 'sweep.csv'}")
            else:
                print(info["report"].table())
                print(f"rel_l2={info['metrics']['rel_l2']:.3e} "
                      f"sup={info['metrics']['sup']:.3e}")
            return 0 if passed else 1
        cfg = _config(args)
        out = Path(cfg.out)
        if args.command == "project":
            project(cfg, out)
            print(f"wrote containers to {out}")
            return 0
        if args.command == "check":
            rep = check(cfg, args.input, out, args.tol_scale)
            print(rep.table())
            for e in rep.failures():
                print(f"failed: {e.name}", file=sys.stderr)
            return 0 if rep.passed else 1
        metrics = reconstruct(cfg, args.input, out)
        print(f"rel_l2={metrics['rel_l2']:.3e} sup={metrics['sup']:.3e}")
        return 0
    except (ConfigError, ContainerError, NotImplementedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
