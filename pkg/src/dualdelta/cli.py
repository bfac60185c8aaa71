"""Command-line entry point.

Exit codes: 0 success, 1 error (bad config, protocol failure, invalid run),
2 when ``--fail-on-regression`` is set and the verdict says the reference
implementation (impl_2) is more accurate — made for use as a CI gate.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__
from .config import PRESETS, ConfigError, load_preset, parse_config
from .harness import run_dual_delta
from .kernels import REDUCTIONS
from .metrics import METRIC_NAMES
from .minifloat import BINARY16, REGISTRY, format_properties, quantize
from .protocol import ProtocolError, decode_matrix, encode_matrix
from .report import RENDER_FORMATS, build_report, render_report
from .stats import DeltaDistribution, sign_test, wilcoxon_signed_rank
from .verdict import decide_verdict

DEFAULT_OUT_ENV = "DUALDELTA_OUT"


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help=f"output directory (default: ${DEFAULT_OUT_ENV} or ./dualdelta-out)")
    p.add_argument("--seed", type=int, help="override experiment.seed")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for trials (default 1)")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="SECTION.KEY=VALUE", help="config override, applied after parsing")
    p.add_argument("--fail-on-regression", action="store_true",
                   help="exit 2 when impl_2 is judged more accurate than impl_1")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit timing fields for byte-reproducible reports")
    p.add_argument("--formats", default="json,csv,svg",
                   help="comma-separated subset of json,csv,svg (empty writes nothing)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualdelta",
        description="Evaluate two numerical-kernel implementations against a binary64 "
                    "oracle and compare their error distributions statistically.")
    parser.add_argument("--version", action="version", version=f"dualdelta {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("--config", required=True, help="path to config file")
    _add_run_flags(p_run)

    p_preset = sub.add_parser("preset", help="run a bundled experiment preset")
    p_preset.add_argument("name", help=f"one of: {', '.join(PRESETS)}")
    _add_run_flags(p_preset)

    p_val = sub.add_parser("validate", help="parse and validate a config file")
    p_val.add_argument("--config", required=True, help="path to config file")

    sub.add_parser("list-kernels", help="list builtin formats, reductions and metrics")
    sub.add_parser("selftest", help="run built-in self checks against exact oracles")
    return parser


def _parse_formats(text: str) -> set[str]:
    parts = {p.strip() for p in text.split(",") if p.strip()}
    unknown = parts - set(RENDER_FORMATS)
    if unknown:
        raise ConfigError(f"unknown --formats entries: {', '.join(sorted(unknown))}")
    return parts


def _run_experiment(config_text: str, args: argparse.Namespace) -> int:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"experiment.seed={args.seed}")
    cfg = parse_config(config_text, overrides=overrides)
    formats = _parse_formats(args.formats)
    out_dir = args.out or os.environ.get(DEFAULT_OUT_ENV) or "dualdelta-out"

    d1, d2, meta = run_dual_delta(cfg, jobs=max(1, args.jobs))
    verdict = decide_verdict(d1, d2, alpha=cfg.alpha)
    report = build_report(cfg, d1, d2, meta, verdict)
    written = render_report(report, out_dir, formats=formats,
                            include_timing=not args.no_timestamp)

    s1, s2 = report.summary_1, report.summary_2
    print(f"{d1.label}: mean error = {s1.mean:.6e}, std = {s1.std:.6e}  (n = {s1.n})")
    print(f"{d2.label}: mean error = {s2.mean:.6e}, std = {s2.std:.6e}  (n = {s2.n})")
    for role, res in verdict.evidence:
        print(f"{role}: {res.method} statistic = {res.statistic:.6g}, "
              f"p = {res.p_value:.3e} [{res.mode}, {res.alternative}]")
    print(f"verdict: accuracy = {verdict.accuracy}, stability = {verdict.stability} "
          f"(alpha = {cfg.alpha:g})")
    for path in written.values():
        print(f"wrote {path}")

    if not meta.valid:
        print(f"error: run invalid: {meta.invalid_reason}", file=sys.stderr)
        return 1
    if args.fail_on_regression and verdict.accuracy == "impl2_more_accurate":
        print("regression gate: impl_2 is more accurate than impl_1 -> exit 2",
              file=sys.stderr)
        return 2
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    with open(args.config, encoding="utf-8") as fh:
        parse_config(fh.read())
    print("OK")
    return 0


def _cmd_list_kernels() -> int:
    print("float formats:")
    for name, fmt in REGISTRY.items():
        props = format_properties(fmt)
        print(f"  {name:<10} e={fmt.exponent_bits:<2} m={fmt.mantissa_bits:<2} "
              f"max_finite={props['max_finite']:.6g} eps={props['machine_epsilon']:.3g}")
    print("  custom     (e=E,m=M) with 2<=E<=11, 1<=M<=52, E+M<=63")
    print(f"reductions: {', '.join(REDUCTIONS)} (blocked takes a block size, e.g. blocked(32))")
    print(f"metrics: {', '.join(METRIC_NAMES)}")
    return 0


def _selftest_wilcoxon_sign() -> bool:
    """Exact p-values must match a full enumeration of sign assignments."""
    rng = np.random.default_rng(1234)
    for _ in range(25):
        n = int(rng.integers(4, 11))
        base = np.abs(rng.standard_normal(n)) + 0.5
        diff = np.where(rng.random(n) < 0.5, base, -base)
        d1 = DeltaDistribution(tuple(np.abs(diff) + diff + 1.0))
        d2 = DeltaDistribution(tuple(np.abs(diff) + 1.0))
        # (d1 - d2) == diff by construction
        ranks = np.argsort(np.argsort(np.abs(diff))) + 1
        w_obs = float(ranks[diff > 0].sum())
        hits = 0
        pos_hits = 0
        k_obs = int((diff > 0).sum())
        for mask in range(2 ** n):
            signs = np.array([(mask >> i) & 1 for i in range(n)])
            w = float(ranks[signs == 1].sum())
            if w >= w_obs:
                hits += 1
            if signs.sum() >= k_obs:
                pos_hits += 1
        p_enum = hits / 2 ** n
        p_sign_enum = pos_hits / 2 ** n
        if wilcoxon_signed_rank(d1, d2, "greater").p_value != p_enum:
            return False
        if sign_test(d1, d2, "greater").p_value != p_sign_enum:
            return False
    return True


def _selftest_quantize() -> bool:
    checks = [
        (1.0, 1.0),
        (2049.0, 2048.0),
        (65520.0, float("inf")),
        (65519.999, 65504.0),
        (-2049.0, -2048.0),
    ]
    return all(quantize(x, BINARY16) == want for x, want in checks)


def _selftest_codec() -> bool:
    rng = np.random.default_rng(99)
    vals = rng.standard_normal((5, 7))
    vals[0, 0] = -0.0
    vals[1, 1] = float("inf")
    vals[2, 2] = 5e-324
    payload = encode_matrix(vals)
    back = decode_matrix(payload, 5, 7)
    return bool(np.array_equal(back.data.view(np.uint64), vals.view(np.uint64)))


def _cmd_selftest() -> int:
    checks = [
        ("quantize binary16 spot checks", _selftest_quantize),
        ("exact wilcoxon/sign vs sign-pattern enumeration", _selftest_wilcoxon_sign),
        ("protocol codec round-trip", _selftest_codec),
    ]
    ok = True
    for name, fn in checks:
        passed = fn()
        print(f"{'PASS' if passed else 'FAIL'}  {name}")
        ok = ok and passed
    return 0 if ok else 1


def execute(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            with open(args.config, encoding="utf-8") as fh:
                return _run_experiment(fh.read(), args)
        if args.command == "preset":
            return _run_experiment(load_preset(args.name), args)
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "list-kernels":
            return _cmd_list_kernels()
        return _cmd_selftest()
    except (ConfigError, ProtocolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(execute())


if __name__ == "__main__":
    main()
