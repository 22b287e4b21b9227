"""Command-line surface: gen, synth, verify, bounds, report.

Exit codes: 0 success (and certificate passed where applicable),
1 verification failure, 2 usage error, 3 I/O or data-format error.
Progress and diagnostics go to standard error as key=value lines; file
outputs and tables are the only stdout payloads.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds as bounds_mod
from .dataset import (
    DatasetError,
    UnknownSystemError,
    gen_dyadic_grid,
    gen_uniform,
    get_system,
    load_dataset,
    save_dataset,
    tabulated_oracle,
)
from .geometry import BoxList, rect_to_cubes
from .render import load_overlay, render_tree_svg
from .results import (
    ResultFormatError,
    RunManifest,
    file_sha256,
    load_result,
    save_result,
)
from .synthesis import ConfigError, SynthConfig, UpdateMode, synthesize
from .tree import new_tree
from .verify import check_fixpoint, monte_carlo_invariance

logger = logging.getLogger("pinvset")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3


class UsageError(ValueError):
    pass


def _parse_domain(spec: str) -> BoxList:
    """Parse 'lo1,lo2:hi1,hi2' into an equal-cube tiling of the rectangle."""
    try:
        lo_s, hi_s = spec.split(":")
        lo = [float(v) for v in lo_s.split(",")]
        hi = [float(v) for v in hi_s.split(",")]
    except ValueError:
        raise UsageError(f"bad domain spec {spec!r}; expected 'lo1,lo2:hi1,hi2'") from None
    try:
        return rect_to_cubes(lo, hi)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _resolve_domain(args, dataset_meta: dict | None = None) -> BoxList:
    if getattr(args, "domain", None):
        return _parse_domain(args.domain)
    system = getattr(args, "system", None) or (dataset_meta or {}).get("system")
    if system:
        return get_system(system).domain
    raise UsageError("no domain: pass --domain or --system (or use a dataset with metadata)")


def cmd_gen(args) -> int:
    if args.system:
        oracle = get_system(args.system)
        domain = _parse_domain(args.domain) if args.domain else oracle.domain
    elif args.map_table:
        if not args.domain:
            raise UsageError("--map-table needs an explicit --domain")
        if args.lipschitz is None:
            raise UsageError("--map-table needs --lipschitz")
        domain = _parse_domain(args.domain)
        table = load_dataset(args.map_table)
        oracle = tabulated_oracle(table.pairs, args.lipschitz, domain)
    else:
        raise UsageError("pass --system or --map-table")
    if args.mode == "uniform":
        if args.m is None:
            raise UsageError("--m is required in uniform mode")
        dataset = gen_uniform(oracle, args.m, args.seed, domain)
    else:
        if args.tau is None:
            raise UsageError("--tau is required in grid mode")
        dataset = gen_dyadic_grid(oracle, args.tau, domain)
    save_dataset(dataset, args.out)
    logger.info(
        "event=gen system=%s mode=%s m=%d out=%s",
        oracle.name, args.mode, len(dataset), args.out,
    )
    return EXIT_OK


def cmd_synth(args) -> int:
    t0 = time.perf_counter()
    dataset = load_dataset(args.data)
    domain = _resolve_domain(args, dataset.metadata)
    config = SynthConfig(
        lipschitz=args.lipschitz,
        tau=args.tau,
        max_sweeps=args.max_sweeps,
        mode=UpdateMode(args.mode),
    )
    tree = new_tree(domain, dataset)
    result = synthesize(tree, dataset, config)
    certificate = check_fixpoint(result)
    manifest = RunManifest(
        command=" ".join(args.argv_echo),
        dataset_sha256=file_sha256(args.data),
        dataset_meta=dataset.metadata,
        seed=dataset.metadata.get("seed"),
        duration_s=time.perf_counter() - t0,
    )
    save_result(args.out, result, manifest, certificate)
    logger.info(
        "event=synth volume=%.12g sweeps=%d terminated_by=%s certified=%s out=%s",
        result.volume,
        result.sweeps,
        result.terminated_by.value,
        certificate.passed,
        args.out,
    )
    if args.svg:
        if tree.dim != 2:
            logger.warning("event=svg-skipped reason=dim dim=%d", tree.dim)
        else:
            overlay = load_overlay(args.overlay) if args.overlay else None
            Path(args.svg).write_text(render_tree_svg(tree, overlay=overlay), encoding="utf-8")
            logger.info("event=svg out=%s", args.svg)
    print(json.dumps({
        "volume": result.volume,
        "sweeps": result.sweeps,
        "terminated_by": result.terminated_by.value,
        "leaf_counts": result.leaf_counts,
        "certified": certificate.passed,
        "out": str(args.out),
    }))
    return EXIT_OK if certificate.passed else EXIT_VERIFY_FAILED


def cmd_verify(args) -> int:
    manifest, result, _ = load_result(args.result)
    certificate = check_fixpoint(result)
    logger.info(
        "event=verify method=%s passed=%s checked=%d",
        certificate.method,
        certificate.passed,
        certificate.checked_leaves,
    )
    mc_passed = True
    if args.monte_carlo:
        system = args.system or manifest.dataset_meta.get("system")
        if not system:
            raise UsageError("--monte-carlo needs --system (or dataset metadata in the result)")
        if result.pi_set.is_empty:
            logger.info("event=monte-carlo skipped=empty-set")
        else:
            oracle = get_system(system)
            mc = monte_carlo_invariance(
                result.pi_set, oracle, args.monte_carlo, args.horizon, args.seed
            )
            mc_passed = mc.passed
            logger.info(
                "event=monte-carlo passed=%s samples=%d horizon=%d first_failure=%s",
                mc.passed,
                args.monte_carlo,
                args.horizon,
                mc.first_failure,
            )
    report = {
        "passed": certificate.passed,
        "checked_leaves": certificate.checked_leaves,
        "first_failure": certificate.first_failure,
        "volume": result.volume,
    }
    print(json.dumps(report))
    return EXIT_OK if (certificate.passed and mc_passed) else EXIT_VERIFY_FAILED


def cmd_bounds(args) -> int:
    if args.vol is not None:
        vol = args.vol
    elif args.domain:
        vol = _parse_domain(args.domain).volume()
    else:
        raise UsageError("pass --vol or --domain")
    epsilon = args.epsilon if args.epsilon is not None else args.tau
    if epsilon is None:
        raise UsageError("pass --tau (or --epsilon)")
    query = bounds_mod.BoundQuery(
        delta=args.delta, vol_domain=vol, dim=args.n, resolution=epsilon
    )
    rows = [
        ("covering-cells", bounds_mod.covering_lower_bound(vol, args.n, epsilon, "cells")),
        ("covering-balls", bounds_mod.covering_lower_bound(vol, args.n, epsilon, "balls")),
    ]
    anomalies = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", bounds_mod.FormulaSignWarning)
        for form in (
            bounds_mod.BoundForm.NET_RAW,
            bounds_mod.BoundForm.SYNTH_RAW,
            bounds_mod.BoundForm.CANONICAL,
        ):
            rows.append((form.value, bounds_mod.uniform_sample_bound(query, form)))
        anomalies = [str(w.message) for w in caught]
    print(f"# vol={vol!r} n={args.n} resolution={epsilon!r} delta={args.delta!r}")
    for name, value in rows:
        print(f"{name},{value!r}")
    for msg in anomalies:
        logger.warning("event=bound-sign-anomaly detail=%s", msg)
        print(f"# warning: {msg}")
    return EXIT_OK


def cmd_report(args) -> int:
    paths = sorted(Path(args.dir).glob("*.json"))
    groups: dict[tuple, list[float]] = {}
    for path in paths:
        try:
            manifest, result, _ = load_result(path)
        except (ResultFormatError, OSError) as exc:
            logger.warning("event=report-skip file=%s error=%s", path, exc)
            continue
        meta = manifest.dataset_meta
        key = (
            str(meta.get("system", "unknown")),
            meta.get("m"),
            result.config.tau,
        )
        groups.setdefault(key, []).append(result.volume)
    if not groups:
        raise UsageError(f"no readable result files under {args.dir}")
    header = "system,m,tau,runs,empty,vol_min,vol_q1,vol_median,vol_q3,vol_max"
    lines = [header]
    for key in sorted(groups, key=lambda k: (k[0], k[1] if k[1] is not None else -1, k[2])):
        vols = groups[key]
        qs = np.percentile(vols, [0, 25, 50, 75, 100])
        empty = sum(1 for v in vols if v == 0.0)
        lines.append(
            f"{key[0]},{key[1] if key[1] is not None else ''},{key[2]!r},"
            f"{len(vols)},{empty}," + ",".join(repr(float(q)) for q in qs)
        )
    table = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
        logger.info("event=report out=%s groups=%d", args.out, len(groups))
    print(table, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pinvset",
        description="Synthesize and certify positively invariant sets from sampled data.",
    )
    parser.add_argument("--version", action="version", version=f"pinvset {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="suppress progress logs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a dataset from a builtin system or map table")
    p.add_argument("--system", help="builtin system name")
    p.add_argument("--map-table", help="CSV of tabulated state/successor pairs")
    p.add_argument("--lipschitz", type=float, help="Lipschitz bound for --map-table")
    p.add_argument("--mode", choices=("uniform", "grid"), default="uniform")
    p.add_argument("--m", type=int, help="sample count (uniform mode)")
    p.add_argument("--tau", type=float, help="resolution floor (grid mode)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--domain", help="'lo1,lo2:hi1,hi2'; defaults to the system domain")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("synth", help="synthesize an invariant set from a dataset")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--domain", help="'lo1,lo2:hi1,hi2'")
    p.add_argument("--system", help="builtin system name (for its domain)")
    p.add_argument("--lipschitz", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--max-sweeps", type=int, default=10000)
    p.add_argument("--mode", choices=("sequential", "batch"), default="sequential")
    p.add_argument("--out", required=True, help="result JSON path")
    p.add_argument("--svg", help="optional SVG rendering path (2-D only)")
    p.add_argument("--overlay", help="CSV polyline drawn over the SVG")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("verify", help="re-certify a result file")
    p.add_argument("result")
    p.add_argument("--monte-carlo", type=int, default=0, metavar="SAMPLES")
    p.add_argument("--horizon", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--system", help="oracle for the Monte Carlo check")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bounds", help="evaluate sample-count bounds")
    p.add_argument("--vol", type=float, help="domain volume")
    p.add_argument("--domain", help="'lo1,lo2:hi1,hi2' (alternative to --vol)")
    p.add_argument("--n", type=int, required=True, help="state dimension")
    p.add_argument("--tau", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float, default=0.05)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("report", help="aggregate a directory of result files")
    p.add_argument("--dir", required=True)
    p.add_argument("--out", help="write the aggregate CSV here as well")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(message)s",
    )
    args.argv_echo = ["pinvset"] + argv
    try:
        return args.func(args)
    except (UsageError, UnknownSystemError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, ResultFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
