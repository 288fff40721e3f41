"""Command-line front end: convergence traces, rate sweeps, self-validation.

Subcommands write CSV files plus SVG line plots into the output directory.
Numbers in CSVs are written with full repr so repeated runs with the same
seed produce byte-identical files.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .config import ConfigError, SystemConfig, load_config
from .harness import (
    ALL_SCHEMES,
    FULL_DIGITAL,
    HYBRID_FIXED_RF,
    HYBRID_REDESIGN,
    ExperimentPlan,
    run_convergence,
    run_sweep,
)
from .validate import run_checks

_SCHEME_LABELS = {
    FULL_DIGITAL: "full-digital (ideal DAC)",
    HYBRID_FIXED_RF: "fixed RF",
    HYBRID_REDESIGN: "redesigned RF",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onebit-hbf",
        description="Hybrid precoding experiments for one-bit DAC transmitters")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI config file")
    common.add_argument("--seed", type=int, help="base seed override")
    common.add_argument("--out", metavar="DIR", default=".", help="output directory")

    p_conv = sub.add_parser("converge", parents=[common],
                            help="fixed-point covariance convergence traces")
    p_conv.add_argument("--nrf", default="2,4,8",
                        help="comma-separated RF chain counts (default 2,4,8)")

    p_rates = sub.add_parser("rates", parents=[common],
                             help="achievable-rate curves against SNR")
    p_rates.add_argument("--nrf", default="4,8",
                         help="comma-separated RF chain counts (default 4,8)")
    p_rates.add_argument("--snr-min", type=float, dest="snr_min")
    p_rates.add_argument("--snr-max", type=float, dest="snr_max")
    p_rates.add_argument("--snr-step", type=float, dest="snr_step")
    p_rates.add_argument("--trials", type=int)
    p_rates.add_argument("--iters", type=int, metavar="K",
                         help="number of outer iterations")
    p_rates.add_argument("--fixed-rf", action="store_true",
                         help="skip the RF redesign scheme")
    p_rates.add_argument("--workers", type=int, default=None,
                         help="worker processes (default: one per CPU)")

    p_val = sub.add_parser("validate", parents=[common],
                           help="run the built-in property checks")
    p_val.add_argument("--filter", dest="name_filter", metavar="NAME",
                       help="run only checks whose group or name contains NAME")
    return parser


def _assemble_config(args) -> SystemConfig:
    config = load_config(args.config) if args.config else SystemConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "snr_min", None) is not None:
        overrides["snr_min_db"] = args.snr_min
    if getattr(args, "snr_max", None) is not None:
        overrides["snr_max_db"] = args.snr_max
    if getattr(args, "snr_step", None) is not None:
        overrides["snr_step_db"] = args.snr_step
    if getattr(args, "trials", None) is not None:
        overrides["n_trials"] = args.trials
    if getattr(args, "iters", None) is not None:
        overrides["iterations"] = args.iters
    return replace(config, **overrides).validate()


def _parse_nrf(raw: str) -> list[int]:
    try:
        values = [int(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --nrf list: {raw!r}") from exc
    if not values:
        raise ConfigError("--nrf list is empty")
    return values


def _fmt(x) -> str:
    return repr(float(x))


def cmd_converge(config: SystemConfig, out_dir: str, nrf_list: list[int]) -> list[str]:
    """Write convergence.csv and convergence.svg; returns the file paths."""
    records = run_convergence(config, nrf_list)
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "convergence.csv")
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("n_rf,k,normalized_distance\n")
        for rec in records:
            fh.write(f"{rec.n_rf},{rec.iteration},{_fmt(rec.normalized_distance)}\n")

    fig, ax = plt.subplots(figsize=(6, 4))
    for n_rf in nrf_list:
        series = [(r.iteration, r.normalized_distance)
                  for r in records if r.n_rf == n_rf]
        ax.semilogy([k for k, _ in series], [d for _, d in series],
                    marker="o", markersize=3, label=f"N_RF = {n_rf}")
    ax.set_xlabel("fixed-point iteration k")
    ax.set_ylabel("normalized covariance distance")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    svg_path = os.path.join(out_dir, "convergence.svg")
    fig.savefig(svg_path)
    plt.close(fig)
    return [csv_path, svg_path]


def rate_series(config: SystemConfig, schemes) -> list[tuple[str, int]]:
    """(scheme, K) series for the rate plot: one full-digital curve,
    fixed-RF for every K, redesigned RF for K >= 2."""
    series = []
    if FULL_DIGITAL in schemes:
        series.append((FULL_DIGITAL, 1))
    if HYBRID_FIXED_RF in schemes:
        series.extend((HYBRID_FIXED_RF, k) for k in range(1, config.iterations + 1))
    if HYBRID_REDESIGN in schemes:
        series.extend((HYBRID_REDESIGN, k) for k in range(2, config.iterations + 1))
    return series


def cmd_rates(config: SystemConfig, out_dir: str, nrf_list: list[int],
              schemes=ALL_SCHEMES, workers: int | None = None) -> list[str]:
    """Run the sweep per RF chain count; write rates_nrfX.csv and .svg."""
    if not schemes:
        raise ValueError("no schemes selected")
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for n_rf in nrf_list:
        cfg = replace(config, n_rf=n_rf, n_s=n_rf).validate()
        plan = ExperimentPlan.from_config(cfg, tuple(schemes))
        result = run_sweep(plan, cfg, workers=workers)
        csv_path = os.path.join(out_dir, f"rates_nrf{n_rf}.csv")
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write("scheme,K,snr_db,mean_rate,std_rate\n")
            for rec in result.records:
                fh.write(f"{rec.scheme},{rec.iterations},{_fmt(rec.snr_db)},"
                         f"{_fmt(rec.mean_rate)},{_fmt(rec.std_rate)}\n")
        paths.append(csv_path)

        fig, ax = plt.subplots(figsize=(6, 4))
        for scheme, k in rate_series(cfg, schemes):
            pts = [(rec.snr_db, rec.mean_rate) for rec in result.records
                   if rec.scheme == scheme and rec.iterations == k]
            label = _SCHEME_LABELS[scheme]
            if scheme != FULL_DIGITAL:
                label += f", K = {k}"
            ax.plot([s for s, _ in pts], [r for _, r in pts],
                    marker="o", markersize=3, label=label)
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("achievable rate (bits/s/Hz)")
        ax.set_title(f"N_RF = {n_rf}")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        svg_path = os.path.join(out_dir, f"rates_nrf{n_rf}.svg")
        fig.savefig(svg_path)
        plt.close(fig)
        paths.append(svg_path)
        if result.trial_errors:
            print(f"warning: {len(result.trial_errors)} failed trials for "
                  f"N_RF={n_rf}", file=sys.stderr)
    return paths


def cmd_validate(name_filter: str | None = None, stream=None) -> int:
    """Run the property checks, print a table, return a process exit code."""
    stream = stream or sys.stdout
    results = run_checks(name_filter)
    if not results:
        print(f"no checks match filter {name_filter!r}", file=stream)
        return 1
    width = max(len(f"{r.group}/{r.name}") for r in results)
    failures = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        failures += not r.passed
        print(f"{r.group + '/' + r.name:<{width}}  {status}  {r.detail}", file=stream)
    print(f"{len(results) - failures}/{len(results)} checks passed", file=stream)
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return cmd_validate(args.name_filter)
        config = _assemble_config(args)
        nrf_list = _parse_nrf(args.nrf)
        if args.command == "converge":
            paths = cmd_converge(config, args.out, nrf_list)
        else:
            schemes = [FULL_DIGITAL, HYBRID_FIXED_RF]
            if not args.fixed_rf:
                schemes.append(HYBRID_REDESIGN)
            paths = cmd_rates(config, args.out, nrf_list, tuple(schemes),
                              workers=args.workers)
        for path in paths:
            print(path)
        return 0
    except ConfigError as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
