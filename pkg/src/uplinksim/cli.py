"""Command line interface.

Configuration comes from an optional flat JSON file plus flag overrides;
flags win.  Powers are given in dB on the command line and converted to
linear internally.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import analytics, reports, runner
from .config import (SystemConfig, ConfigError, config_from_mapping,
                     config_hash, config_to_dict, load_config)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("model configuration")
    group.add_argument("--config", metavar="FILE",
                       help="flat JSON config file; flags override it")
    group.add_argument("--r", type=float, dest="R", metavar="M",
                       help="cell radius in meters")
    group.add_argument("--d0", type=float, metavar="M",
                       help="close-in reference distance in meters")
    group.add_argument("--a0-db", type=float, metavar="DB",
                       help="close-in path gain in dB (e.g. -30)")
    group.add_argument("--gamma", type=float, help="path loss exponent")
    group.add_argument("--sigma-db", type=float, metavar="DB",
                       help="shadowing standard deviation in dB")
    group.add_argument("--m", type=int, dest="M", help="BS antennas")
    group.add_argument("--k", type=int, dest="K",
                       help="orthogonal pilots / UEs per cell")
    group.add_argument("--rho-p-db", type=float, metavar="DB",
                       help="training power in dB")
    group.add_argument("--rho-r-db", type=float, metavar="DB",
                       help="data power in dB")
    group.add_argument("--with-noise", action="store_true",
                       help="keep the 1/rho_p and 1/rho_r noise terms "
                            "(default: interference-limited)")
    group.add_argument("--trunc-factor", type=float, metavar="X",
                       help="simulation window radius in units of R")
    group.add_argument("--trials", type=int, metavar="N",
                       help="spatial Monte Carlo trials")
    group.add_argument("--fading-draws", type=int, metavar="N",
                       help="small-scale fading draws")
    group.add_argument("--seed", type=int, help="RNG seed")
    group.add_argument("--workers", type=int, default=1,
                       help="worker processes (results are independent "
                            "of this)")


def _build_config(args: argparse.Namespace) -> SystemConfig:
    values = {}
    if args.config:
        values = config_to_dict(load_config(args.config))
    direct = {"R": args.R, "d0": args.d0, "gamma": args.gamma,
              "sigma_dB": args.sigma_db, "M": args.M, "K": args.K,
              "trunc_factor": args.trunc_factor,
              "n_spatial_trials": args.trials,
              "n_fading_trials": args.fading_draws, "seed": args.seed}
    for name, value in direct.items():
        if value is not None:
            values[name] = value
    if args.a0_db is not None:
        values["A0"] = 10.0 ** (args.a0_db / 10.0)
    if args.rho_p_db is not None:
        values["rho_p"] = 10.0 ** (args.rho_p_db / 10.0)
    if args.rho_r_db is not None:
        values["rho_r"] = 10.0 ** (args.rho_r_db / 10.0)
    if args.with_noise:
        values["interference_limited"] = False
    return config_from_mapping(values)


def _cmd_simulate_cdf(args) -> int:
    config = _build_config(args)
    result = runner.run_cdf_campaign(config, workers=args.workers)
    paths = reports.write_cdf_bundle(args.out, result)
    if args.dump_samples:
        trials = runner.run_component_trials(config, workers=args.workers)
        sample_path = os.path.join(args.out, "component_samples.csv")
        reports.write_component_samples_csv(sample_path, trials, config)
        paths.append(sample_path)
    ordering = result.ordering
    print(f"simulate-cdf: {result.config_hash} trials={ordering.trials} "
          f"ordering_holds={ordering.holds}/{ordering.trials} "
          f"wallclock={result.wallclock_s:.1f}s")
    for path in paths:
        print(f"  wrote {path}")
    return 0


def _cmd_validate_moments(args) -> int:
    config = _build_config(args)
    report = runner.run_moment_validation(config, workers=args.workers)
    payload = report.to_dict()
    if args.out:
        reports.write_json(args.out, payload)
        print(f"wrote {args.out}")
    for check in report.mean_checks + report.variance_checks:
        print(f"  {check.quantity}: rel_error={check.rel_error:+.4%} "
              f"tol={check.tolerance:.3e} "
              f"{'ok' if check.passed else 'FAIL'}")
    print(f"validate-moments: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


def _cmd_validate_fading(args) -> int:
    config = _build_config(args)
    report = runner.run_fading_validation(
        config, mean_group_size=args.mean_group_size)
    if args.out:
        reports.write_json(args.out, report.to_dict())
        print(f"wrote {args.out}")
    for check in report.component_checks:
        print(f"  {check.quantity}: rel_error={check.rel_error:+.4%} "
              f"tol={check.tolerance:.1%} "
              f"{'ok' if check.passed else 'FAIL'}")
    print(f"  sinr identity max rel: {report.sinr_identity_max_rel:.2e}")
    print(f"  gram identity rel err: {report.gram_identity_rel_error:.2e}")
    print(f"  discard rate: {report.discard_rate:.2e}")
    print(f"validate-fading: {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


def _cmd_kappa_scan(args) -> int:
    config = _build_config(args)
    m_list = [int(m) for m in args.m_list.split(",") if m]
    scan = runner.run_kappa_scan(config, args.kappa, m_list,
                                 trials=args.trials, workers=args.workers)
    if args.out:
        reports.write_kappa_scan_csv(args.out, scan)
        print(f"wrote {args.out}")
    if args.json:
        reports.write_json(args.json, scan.to_dict())
        print(f"wrote {args.json}")
    for column, value in scan.spread.items():
        print(f"  spread {column}: {value:.2%}")
    print(f"kappa-scan: {'PASS' if scan.passed else 'FAIL'}")
    return 0 if scan.passed else 1


def _cmd_analytic_report(args) -> int:
    config = _build_config(args)
    payload = reports.analytic_report(
        config, include_load_factor=not args.skip_load_factor)
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out:
        reports.write_json(args.out, payload)
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _cmd_figures(args) -> int:
    config = _build_config(args)
    which = ("1", "2", "3", "4") if args.which == "all" else (args.which,)
    os.makedirs(args.out, exist_ok=True)
    for fig in which:
        fig_dir = os.path.join(args.out, f"fig{fig}")
        os.makedirs(fig_dir, exist_ok=True)
        if fig in ("1", "2"):
            sigma = 0.0 if fig == "1" else 8.0
            cfg = dataclasses.replace(config, sigma_dB=sigma)
            result = runner.run_cdf_campaign(cfg, workers=args.workers)
            reports.write_cdf_bundle(fig_dir, result)
        elif fig == "3":
            reports.write_mean_sweep_csv(
                os.path.join(fig_dir, "mean_vs_sigma_analytic.csv"), config)
            reports.write_empirical_sweep_csv(
                os.path.join(fig_dir, "mean_vs_sigma_empirical.csv"),
                config, trials=args.sweep_trials, workers=args.workers)
        else:
            reports.write_normalized_variance_csv(
                os.path.join(fig_dir, "normalized_variance_vs_sigma.csv"),
                config)
        print(f"figures: wrote bundle fig{fig} under {fig_dir}")
    return 0


def _cmd_dump_layout(args) -> int:
    config = _build_config(args)
    reports.write_layout_csv(args.out, config, trials=args.layout_trials)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uplinksim",
        description="Uplink interference statistics of a multi-cell "
                    "massive MIMO system under MRC and ZF reception, with "
                    "a stochastic-geometry UE layout.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-cdf",
                       help="Monte Carlo CDFs of the six interference "
                            "components")
    _add_config_flags(p)
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--dump-samples", action="store_true",
                   help="also write the raw per-trial component stream")
    p.set_defaults(func=_cmd_simulate_cdf)

    p = sub.add_parser("validate-moments",
                       help="check empirical MRC moments against the "
                            "closed forms")
    _add_config_flags(p)
    p.add_argument("--out", metavar="FILE", help="write the JSON report")
    p.set_defaults(func=_cmd_validate_moments)

    p = sub.add_parser("validate-fading",
                       help="check the fading-averaged component formulas "
                            "against explicit channel draws")
    _add_config_flags(p)
    p.add_argument("--out", metavar="FILE", help="write the JSON report")
    p.add_argument("--mean-group-size", type=float, default=5.0,
                   help="mean reuse-group size of the validation instance")
    p.set_defaults(func=_cmd_validate_fading)

    p = sub.add_parser("kappa-scan",
                       help="fixed load factor scan over antenna counts")
    _add_config_flags(p)
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--m-list", required=True, metavar="M1,M2,...")
    p.add_argument("--out", metavar="FILE", help="write the scan CSV")
    p.add_argument("--json", metavar="FILE", help="write the scan JSON")
    p.set_defaults(func=_cmd_kappa_scan)

    p = sub.add_parser("analytic-report",
                       help="all closed-form moments, bounds and "
                            "thresholds as JSON")
    _add_config_flags(p)
    p.add_argument("--out", metavar="FILE")
    p.add_argument("--skip-load-factor", action="store_true",
                   help="skip the Monte Carlo load-factor constants")
    p.set_defaults(func=_cmd_analytic_report)

    p = sub.add_parser("figures",
                       help="emit the CSV bundle behind each figure")
    _add_config_flags(p)
    p.add_argument("--which", choices=["1", "2", "3", "4", "all"],
                   required=True)
    p.add_argument("--out", required=True, metavar="DIR")
    p.add_argument("--sweep-trials", type=int, default=2000,
                   help="trials per sigma point of the empirical sweep")
    p.set_defaults(func=_cmd_figures)

    p = sub.add_parser("dump-layout", help="dump sampled UE layouts as CSV")
    _add_config_flags(p)
    p.add_argument("--out", required=True, metavar="FILE")
    p.add_argument("--layout-trials", type=int, default=1,
                   help="number of layouts to dump")
    p.set_defaults(func=_cmd_dump_layout)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
