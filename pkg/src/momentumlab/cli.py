"""Command-line front-end.

Four subcommands: ``run`` executes a config file, ``certify`` drives one of
the named convergence certificates, ``diagnose`` samples the geometric
constants of an objective, ``reproduce`` regenerates the benchmark
figures-as-data.  Exit status 0 means every requested check passed, 1 means
a certification or reproduction failed (or a run diverged), 2 means the
request itself was invalid.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import List, Optional

import numpy as np

from . import harness, plots, reproduce
from .config import load_config
from .geometry import RegionSpec, diagnose
from .objectives import get_objective
from .optimizers import DivergenceError

__all__ = ["main", "parse_region"]


def parse_region(spec: str) -> RegionSpec:
    """Parse ``log:lo:hi`` or ``box:lo1,lo2,..:hi1,hi2,..`` region syntax."""
    parts = spec.split(":")
    if len(parts) != 3 or parts[0] not in ("log", "box"):
        raise ValueError(
            f"region must look like log:lo:hi or box:lo1,..:hi1,.., got {spec!r}"
        )
    kind, low_raw, high_raw = parts
    try:
        low = [float(v) for v in low_raw.split(",")]
        high = [float(v) for v in high_raw.split(",")]
    except ValueError:
        raise ValueError(f"region bounds must be numbers, got {spec!r}") from None
    if kind == "log":
        if len(low) != 1 or len(high) != 1:
            raise ValueError("log regions are one-dimensional")
        return RegionSpec("log_grid", low[0], high[0])
    return RegionSpec("box", np.array(low), np.array(high))


def _cmd_run(args) -> int:
    config = load_config(args.config)
    result = harness.run(config)
    for path in result.artifacts:
        print(f"wrote {path}")
    final = result.summary.get("final_f")
    if final is not None:
        print(f"final objective value: mean {final['mean']:.6g}")
    if result.certification is not None:
        print(result.certification.verdict)
    elif config.target in harness.REPRODUCTIONS:
        print(f"reproduction {config.target}: {'pass' if result.passed else 'FAIL'}")
    return result.exit_status


def _cmd_certify(args) -> int:
    result = harness.certify_theorem(
        args.theorem, objective_id=args.objective, out_dir=args.out
    )
    for path in result.artifacts:
        print(f"wrote {path}")
    print(result.verdict)
    return 0 if result.passed else 1


def _cmd_diagnose(args) -> int:
    try:
        objective = get_objective(args.objective)
    except (ValueError, KeyError) as exc:
        raise harness.ConfigError(f"objective.id: {exc}") from None
    if args.region is not None:
        try:
            region = parse_region(args.region)
        except ValueError as exc:
            raise harness.ConfigError(f"region: {exc}") from None
        if region.dim != objective.dim and region.kind == "box":
            raise harness.ConfigError(
                f"region: dimension {region.dim} does not match objective "
                f"{args.objective!r} (dim {objective.dim})"
            )
    else:
        region = harness.default_region(objective)

    report = diagnose(objective, region, n_samples=args.samples, seed=args.seed)
    for field, value in report.to_rows():
        print(f"{field:>20}: {value}")

    if args.out is not None:
        csv_path = os.path.join(args.out, "geometry.csv")
        report.to_csv(csv_path)
        print(f"wrote {csv_path}")
        if objective.dim == 1:
            # render the sampled landscape next to the numbers
            xs = region.sample(2048, seed=args.seed)[:, 0]
            fig_path = os.path.join(args.out, "landscape.png")
            plots.save_decay(
                fig_path,
                {args.objective: (xs, objective.value(xs[:, None]))},
                title=f"objective values over {region.describe()}",
                xlabel="x",
                ylabel="f(x)",
                logy=False,
            )
            print(f"wrote {fig_path}")
    return 0


def _cmd_reproduce(args) -> int:
    drivers = {
        "fig2": reproduce.reproduce_fig2,
        "fig4": reproduce.reproduce_fig4,
        "example1-table": reproduce.example1_table,
    }
    kwargs = {}
    if args.out is not None:
        kwargs["out_dir"] = args.out
    report = drivers[args.what](**kwargs)
    for line in report.get("lines", ()):
        print(line)
    for path in report["artifacts"]:
        print(f"wrote {path}")
    passed = bool(report["passed"])
    print(f"reproduction {args.what}: {'pass' if passed else 'FAIL'}")
    return 0 if passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momentumlab",
        description="momentum-method experiments with convergence certificates",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute an experiment config file")
    p_run.add_argument("config", help="path to a key = value config file")
    p_run.set_defaults(func=_cmd_run)

    p_cert = sub.add_parser("certify", help="run a named convergence certificate")
    p_cert.add_argument("theorem", choices=harness.THEOREMS)
    p_cert.add_argument(
        "--objective",
        default=None,
        help="objective id overriding the canonical benchmark",
    )
    p_cert.add_argument("--out", default=None, help="directory for artifacts")
    p_cert.set_defaults(func=_cmd_certify)

    p_diag = sub.add_parser("diagnose", help="sample geometric constants")
    p_diag.add_argument("--objective", required=True, help="objective id")
    p_diag.add_argument(
        "--region",
        default=None,
        help="log:lo:hi or box:lo1,..:hi1,.. (default depends on the objective)",
    )
    p_diag.add_argument("--samples", type=int, default=4096)
    p_diag.add_argument("--seed", type=int, default=0)
    p_diag.add_argument("--out", default=None, help="directory for artifacts")
    p_diag.set_defaults(func=_cmd_diagnose)

    p_rep = sub.add_parser("reproduce", help="regenerate benchmark data")
    p_rep.add_argument("what", choices=harness.REPRODUCTIONS)
    p_rep.add_argument("--out", default=None, help="directory for artifacts")
    p_rep.set_defaults(func=_cmd_reproduce)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except harness.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        # config parse errors and unreadable files are usage errors too
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
