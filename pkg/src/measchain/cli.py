"""Command-line front end.

Subcommands: fit-gmm, simulate-scada, simulate-pmu, simulate-cn,
make-filter.  Summaries go to stdout as machine-parseable key=value lines.

Exit codes: 0 success, 2 invalid arguments or configuration, 3 fit search
budget exhausted, 4 ingestion failure, 5 simulation failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__, comm_network, pipeline_io, pmu_chain
from .distributions import (
    FitBudgetExhausted,
    FitTarget,
    fit_gmm_random_search,
    gmm_total_moments,
    kld_gmm_vs_gaussian,
)
from .pipeline_io import ConfigError, IngestError, SimulationError
from .pmu_chain import UnsupportedFilterError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FIT = 3
EXIT_INGEST = 4
EXIT_SIMULATION = 5


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="measchain",
        description="Synthesize SCADA/PMU measurement streams with realistic error chains.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit-gmm", help="design a Gaussian mixture matching target moments")
    p_fit.add_argument("--k", type=int, required=True, help="number of mixture components")
    p_fit.add_argument("--std", type=float, required=True, help="target total std")
    p_fit.add_argument("--mean", type=float, default=0.0, help="target total mean")
    p_fit.add_argument("--eta", type=float, required=True, help="KLD similarity threshold (nats)")
    p_fit.add_argument("--n-samples", type=int, default=100_000, help="Monte Carlo sample count")
    p_fit.add_argument("--max-iters", type=int, default=200_000, help="candidate budget")
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--out", type=Path, default=None, help="YAML file for the fitted params")

    for name, help_text in (
        ("simulate-scada", "run the four-stage SCADA chain"),
        ("simulate-pmu", "run the PMU chain"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, required=True, help="run configuration YAML")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", type=Path, default=None, help="override the output directory")
        p.add_argument("-v", "--verbose", action="store_true")

    p_cn = sub.add_parser("simulate-cn", help="run the communication-network stage alone")
    p_cn.add_argument("--config", type=Path, required=True)
    p_cn.add_argument("--samples", type=int, default=None, help="number of samples (scans)")
    p_cn.add_argument("--period", type=float, default=None, help="sampling period override (s)")
    p_cn.add_argument("--seed", type=int, default=None)
    p_cn.add_argument("--out", type=Path, default=None)

    p_mk = sub.add_parser("make-filter", help="print or save estimator filter coefficients")
    p_mk.add_argument("--rate", type=float, required=True, help="reporting rate (fps)")
    p_mk.add_argument("--nominal-freq", type=float, default=60.0)
    p_mk.add_argument("--order", type=int, default=None)
    p_mk.add_argument("--ref-freq", type=float, default=None)
    p_mk.add_argument("--sampling-freq", type=float, default=None)
    p_mk.add_argument("--out", type=Path, default=None, help="CSV file for the k,W(k) table")
    return parser


def _load_config(args) -> pipeline_io.RunConfig:
    config = pipeline_io.load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "out", None) is not None:
        config.output_dir = str(args.out)
    return config


def cmd_fit_gmm(args) -> int:
    target = FitTarget(
        k_components=args.k,
        total_std=args.std,
        total_mean=args.mean,
        similarity_threshold=args.eta,
        sample_count=args.n_samples,
        max_iterations=args.max_iters,
    )
    rng = np.random.default_rng(args.seed)
    try:
        params = fit_gmm_random_search(target, rng)
    except FitBudgetExhausted as exc:
        print(f"fit_failed={exc}", file=sys.stderr)
        print(f"best_std_rel_error={exc.std_rel_error!r}")
        print(f"best_kld={exc.kld!r}")
        return EXIT_FIT
    total_mean, total_std = gmm_total_moments(params)
    achieved_kld = kld_gmm_vs_gaussian(
        params, args.mean, args.std, args.n_samples, np.random.default_rng(args.seed + 1)
    )
    print(f"achieved_total_std={total_std!r}")
    print(f"achieved_total_mean={total_mean!r}")
    print(f"achieved_kld={achieved_kld!r}")
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        with open(args.out, "w") as fh:
            yaml.safe_dump(params.to_dict(), fh, sort_keys=False)
        print(f"written={args.out}")
    return EXIT_OK


def cmd_simulate_scada(args) -> int:
    config = _load_config(args)
    record, schedule = pipeline_io.run_scada(config)
    truth = pipeline_io.truth_at_scans(pipeline_io.load_truth(config.truth_path), record.t)
    written = pipeline_io.write_scada_outputs(
        record, schedule, config.output_dir, config.formats, config.debug_columns
    )
    for line in pipeline_io.summarize_scada(record, schedule, truth):
        print(line)
    for path in written:
        print(f"written={path}")
    return EXIT_OK


def cmd_simulate_pmu(args) -> int:
    config = _load_config(args)
    frames = pipeline_io.run_pmu(config)
    written = pipeline_io.write_pmu_outputs(frames, config.output_dir, config.formats)
    for line in pipeline_io.summarize_pmu(frames):
        print(line)
    for path in written:
        print(f"written={path}")
    return EXIT_OK


def cmd_simulate_cn(args) -> int:
    config = pipeline_io.load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.output_dir = str(args.out)
    if config.cn.latency_lmm is None:
        raise ConfigError("simulate-cn requires cn.latency_lmm in the configuration")
    period = args.period if args.period is not None else config.scada.scan_period
    n = args.samples if args.samples is not None else (config.scada.n_scans or 1000)

    schedule = comm_network.build_delay_schedule(
        config.cn.latency_lmm, period, n, pipeline_io.rng_for_stage(config.seed, "cn-delay")
    )
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = pipeline_io.write_delay_schedule(schedule, out_dir / "delay_schedule.csv")

    if config.cn.scheme == "scheme2" and config.cn.v_gmm is not None:
        cn_cfg = comm_network.CnErrorConfig(
            scheme="scheme2",
            v_gmm=config.cn.v_gmm,
            p_gmm=config.cn.p_gmm,
            q_gmm=config.cn.q_gmm,
        )
        e_v, e_p, e_q = comm_network.scheme2_errors(
            cn_cfg, n, pipeline_io.rng_for_stage(config.seed, "cn-error")
        )
        errors_path = out_dir / "cn_errors.csv"
        pipeline_io._write_csv(
            errors_path, ["k", "e_v", "e_p", "e_q"], [np.arange(n), e_v, e_p, e_q]
        )
        written.append(str(errors_path))

    print(f"n_samples={n}")
    print(f"discard_count={schedule.n_discarded}")
    print(f"latency_mean={float(np.mean(schedule.latency))!r}")
    print(f"total_delay_mean={float(np.mean(schedule.total_delay[schedule.retained]))!r}")
    for path in written:
        print(f"written={path}")
    return EXIT_OK


def cmd_make_filter(args) -> int:
    spec = pmu_chain.make_filter(
        args.rate,
        args.nominal_freq,
        order=args.order,
        filter_ref_freq=args.ref_freq,
        sampling_freq=args.sampling_freq,
    )
    print(f"reporting_rate={spec.reporting_rate!r}")
    print(f"nominal_freq={spec.nominal_freq!r}")
    print(f"filter_ref_freq={spec.filter_ref_freq!r}")
    print(f"order={spec.order}")
    print(f"sampling_freq={spec.sampling_freq!r}")
    print(f"gain={spec.gain!r}")
    if args.out is not None:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(spec.coefficient_table() + "\n")
        print(f"written={args.out}")
    else:
        print(spec.coefficient_table())
    return EXIT_OK


_COMMANDS = {
    "fit-gmm": cmd_fit_gmm,
    "simulate-scada": cmd_simulate_scada,
    "simulate-pmu": cmd_simulate_pmu,
    "simulate-cn": cmd_simulate_cn,
    "make-filter": cmd_make_filter,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, UnsupportedFilterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IngestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except (SimulationError, comm_network.HistoryCoverageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
