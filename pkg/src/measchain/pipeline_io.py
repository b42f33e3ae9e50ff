"""Ingestion, run configuration, orchestration, and output writing.

Truth trajectories and historical series come in as CSV; the run
configuration is a YAML document (see ``run_config.example.yaml`` at the
repository root for the commented schema).  Float columns are written with
``repr`` so a write/load round trip is bit-exact.

Every stochastic stage pulls from its own generator derived from the
master seed and a fixed stage key, so changing one stage's configuration
cannot perturb another stage's draws.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import comm_network, pmu_chain, scada_chain
from .comm_network import CnErrorConfig, DelaySchedule, HistorySeries
from .distributions import GmmParams, LmmParams
from .pmu_chain import FilterSpec, PmuFrame, TimingErrorModel
from .scada_chain import (
    AccuracyRegion,
    GaussianSpec,
    StageNoiseConfig,
    SystematicError,
    TruthRecord,
    ZERO_SYSTEMATIC,
)

DEGREES = 180.0 / math.pi

# Fixed per-stage RNG derivation keys (documented scheme: master seed +
# stage key + channel index feed one SeedSequence per stage).
STAGE_KEYS = {
    "systematic": 0,
    "transformer": 1,
    "cable": 2,
    "ied": 3,
    "cn-delay": 4,
    "cn-error": 5,
    "time-skew": 6,
    "gps-events": 7,
}


class ConfigError(ValueError):
    """Run configuration is structurally or semantically invalid."""


class IngestError(ValueError):
    """Input series file failed validation."""


class SimulationError(RuntimeError):
    """Failure during a pipeline stage, with stage attribution."""


def rng_for_stage(seed: int, stage: str, channel: int = 0) -> np.random.Generator:
    """Independent generator for one (stage, channel) pair of a run."""
    if stage not in STAGE_KEYS:
        raise KeyError(f"unknown stage {stage!r}; known: {sorted(STAGE_KEYS)}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(STAGE_KEYS[stage], channel))
    return np.random.default_rng(ss)


@dataclass
class SeriesFile:
    """Validated time series: strictly increasing t plus named channels."""

    t: np.ndarray
    channels: dict[str, np.ndarray]
    path: str = ""

    @property
    def n_rows(self) -> int:
        return self.t.size

    @property
    def span(self) -> float:
        return float(self.t[-1] - self.t[0])


def load_series(path, expected_channels) -> SeriesFile:
    """Read and validate a CSV series with columns ``t`` + expected channels."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"series file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise IngestError(f"{path}: no rows") from None
        header = [h.strip() for h in header]
        missing = [c for c in ("t", *expected_channels) if c not in header]
        if missing:
            raise IngestError(f"{path}: missing channel(s) {', '.join(missing)}")
        cols = {name: header.index(name) for name in ("t", *expected_channels)}
        rows = []
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append([float(row[cols[name]]) for name in cols])
            except (ValueError, IndexError):
                raise IngestError(f"{path}: row {len(rows) + 1}: unparseable values") from None
    if not rows:
        raise IngestError(f"{path}: no rows")
    data = np.asarray(rows, dtype=np.float64)
    names = list(cols)
    # row numbers below are 1-based data rows (header excluded)
    for j, name in enumerate(names):
        bad = np.flatnonzero(~np.isfinite(data[:, j]))
        if bad.size:
            raise IngestError(f"{path}: row {bad[0] + 1}: non-finite value in column {name!r}")
    t = data[:, 0]
    non_monotone = np.flatnonzero(np.diff(t) <= 0.0)
    if non_monotone.size:
        raise IngestError(
            f"{path}: row {non_monotone[0] + 2}: timestamps must be strictly increasing"
        )
    channels = {name: data[:, j] for j, name in enumerate(names) if name != "t"}
    return SeriesFile(t=t, channels=channels, path=str(path))


def load_truth(path) -> TruthRecord:
    """Truth CSV (angles in degrees on disk) -> TruthRecord in radians."""
    series = load_series(path, ("v_mag", "v_angle", "i_mag", "i_angle"))
    return TruthRecord(
        t=series.t,
        v_true=series.channels["v_mag"],
        delta_v_true=np.radians(series.channels["v_angle"]),
        i_true=series.channels["i_mag"],
        delta_i_true=np.radians(series.channels["i_angle"]),
    )


def load_history(path) -> HistorySeries:
    series = load_series(path, ("v", "p", "q"))
    return HistorySeries(
        t=series.t,
        v=series.channels["v"],
        p=series.channels["p"],
        q=series.channels["q"],
    )


# --------------------------------------------------------------------------
# Run configuration


@dataclass
class ScadaSection:
    scan_period: float = 2.0
    n_scans: int | None = None


@dataclass
class PmuSection:
    reporting_rate: float = 60.0
    nominal_freq: float = 60.0
    filter_order: int | None = None
    filter_ref_freq: float | None = None
    sampling_freq: float | None = None
    signal_freq: float | None = None
    duration: float | None = None


@dataclass
class CnSection:
    latency_lmm: LmmParams | None = None
    scheme: str = "scheme2"
    v_gmm: GmmParams | None = None
    p_gmm: GmmParams | None = None
    q_gmm: GmmParams | None = None
    interp: str = "linear"
    time_skew: bool = False


@dataclass
class RunConfig:
    """Everything one simulation run needs; see the example YAML for docs."""

    seed: int = 0
    chain: str = "scada"
    truth_path: str = ""
    history_path: str | None = None
    output_dir: str = "out"
    formats: tuple[str, ...] = ("csv",)
    debug_columns: bool = False
    vt_region: AccuracyRegion | None = None
    ct_region: AccuracyRegion | None = None
    noise: StageNoiseConfig = field(default_factory=StageNoiseConfig)
    scada: ScadaSection = field(default_factory=ScadaSection)
    cn: CnSection = field(default_factory=CnSection)
    pmu: PmuSection = field(default_factory=PmuSection)
    timing: TimingErrorModel = field(default_factory=TimingErrorModel)
    gps_loss_rate_per_day: float = 0.0
    gps_recovery_rate: float = 0.13

    def validate(self):
        if self.chain not in ("scada", "pmu", "both"):
            raise ConfigError("chain must be 'scada', 'pmu', or 'both'")
        if not self.truth_path:
            raise ConfigError("truth path is required")
        if not Path(self.truth_path).exists():
            raise ConfigError(f"truth path does not exist: {self.truth_path}")
        if self.chain in ("scada", "both"):
            if self.cn.scheme == "scheme1":
                if not self.history_path:
                    raise ConfigError("cn.scheme = scheme1 requires a history path")
                if not Path(self.history_path).exists():
                    raise ConfigError(f"history path does not exist: {self.history_path}")
                if self.cn.latency_lmm is None:
                    raise ConfigError("cn.scheme = scheme1 requires cn.latency_lmm")
            if self.cn.scheme == "scheme2":
                missing = [
                    f"cn.{n}" for n, g in (
                        ("v_gmm", self.cn.v_gmm),
                        ("p_gmm", self.cn.p_gmm),
                        ("q_gmm", self.cn.q_gmm),
                    ) if g is None
                ]
                if missing and any(
                    g is not None for g in (self.cn.v_gmm, self.cn.p_gmm, self.cn.q_gmm)
                ):
                    raise ConfigError(f"scheme2 mixtures incomplete: missing {', '.join(missing)}")
            if not self.scada.scan_period > 0.0:
                raise ConfigError("scada.scan_period must be positive")
        return self


def _gmm_or_none(data) -> GmmParams | None:
    return None if data is None else GmmParams.from_dict(data)


def _gauss_or_none(data) -> GaussianSpec | None:
    if data is None:
        return None
    return GaussianSpec(mean=float(data.get("mean", 0.0)), std=float(data.get("std", 0.0)))


def _region_from(section, kind) -> AccuracyRegion | None:
    if section is None:
        return None
    if "vertices" in section and section["vertices"] is not None:
        return AccuracyRegion(
            kind=kind,
            class_value=float(section.get("class", 0.0)),
            vertices=np.asarray(section["vertices"], dtype=np.float64),
        )
    if "class" in section and section["class"] is not None:
        return scada_chain.default_accuracy_region(kind, float(section["class"]))
    return None


def config_from_dict(data: dict, base_dir: Path | None = None) -> RunConfig:
    """Build and validate a RunConfig from a parsed YAML mapping."""
    base = Path(base_dir) if base_dir else Path(".")

    def _resolve(p):
        if p is None:
            return None
        p = Path(p)
        return str(p if p.is_absolute() else base / p)

    try:
        noise_d = data.get("noise", {}) or {}
        noise = StageNoiseConfig(
            vt_random=_gmm_or_none(noise_d.get("vt_ratio_gmm")),
            vt_angle_random=_gmm_or_none(noise_d.get("vt_angle_gmm")),
            ct_random=_gmm_or_none(noise_d.get("ct_ratio_gmm")),
            ct_angle_random=_gmm_or_none(noise_d.get("ct_angle_gmm")),
            cable_v=_gauss_or_none(noise_d.get("cable_v")),
            cable_angle_v=_gauss_or_none(noise_d.get("cable_angle_v")),
            cable_i=_gauss_or_none(noise_d.get("cable_i")),
            cable_angle_i=_gauss_or_none(noise_d.get("cable_angle_i")),
            ied_v=float(noise_d.get("ied_v_std", 0.0)),
            ied_p=float(noise_d.get("ied_p_std", 0.0)),
            ied_q=float(noise_d.get("ied_q_std", 0.0)),
        )

        transformers = data.get("transformers", {}) or {}
        scada_d = data.get("scada", {}) or {}
        cn_d = data.get("cn", {}) or {}
        pmu_d = data.get("pmu", {}) or {}
        timing_d = pmu_d.get("timing", {}) or {}

        latency = cn_d.get("latency_lmm")
        cn = CnSection(
            latency_lmm=None if latency is None else LmmParams.from_dict(latency),
            scheme=str(cn_d.get("scheme", "scheme2")),
            v_gmm=_gmm_or_none(cn_d.get("v_gmm")),
            p_gmm=_gmm_or_none(cn_d.get("p_gmm")),
            q_gmm=_gmm_or_none(cn_d.get("q_gmm")),
            interp=str(cn_d.get("history_interp", "linear")),
            time_skew=bool(cn_d.get("time_skew", False)),
        )

        loss_events = [(float(s), float(d)) for s, d in (timing_d.get("loss_events") or [])]
        timing = TimingErrorModel(
            sampling_time_error=float(timing_d.get("sampling_time_error_per_sample", 0.0)),
            pps_locked=bool(timing_d.get("pps_locked", True)),
            gps_drift_rate=float(timing_d.get("gps_drift_rate_us_per_s", 0.0)),
            loss_events=loss_events,
            couple_gps_to_sampling=bool(timing_d.get("couple_gps_to_sampling", False)),
        )

        cfg = RunConfig(
            seed=int(data.get("seed", 0)),
            chain=str(data.get("chain", "scada")),
            truth_path=_resolve(data.get("truth")) or "",
            history_path=_resolve(data.get("history")),
            output_dir=_resolve(data.get("output_dir", "out")),
            formats=tuple(data.get("formats", ["csv"])),
            debug_columns=bool(data.get("debug_columns", False)),
            vt_region=_region_from(transformers.get("vt"), "vt"),
            ct_region=_region_from(transformers.get("ct"), "ct"),
            noise=noise,
            scada=ScadaSection(
                scan_period=float(scada_d.get("scan_period_s", 2.0)),
                n_scans=None if scada_d.get("n_scans") is None else int(scada_d["n_scans"]),
            ),
            cn=cn,
            pmu=PmuSection(
                reporting_rate=float(pmu_d.get("reporting_rate", 60.0)),
                nominal_freq=float(pmu_d.get("nominal_freq", 60.0)),
                filter_order=None if pmu_d.get("filter_order") is None
                else int(pmu_d["filter_order"]),
                filter_ref_freq=None if pmu_d.get("filter_ref_freq") is None
                else float(pmu_d["filter_ref_freq"]),
                sampling_freq=None if pmu_d.get("sampling_freq") is None
                else float(pmu_d["sampling_freq"]),
                signal_freq=None if pmu_d.get("signal_freq") is None
                else float(pmu_d["signal_freq"]),
                duration=None if pmu_d.get("duration_s") is None
                else float(pmu_d["duration_s"]),
            ),
            timing=timing,
            gps_loss_rate_per_day=float(timing_d.get("loss_rate_per_day", 0.0)),
            gps_recovery_rate=float(timing_d.get("recovery_rate", 0.13)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return cfg.validate()


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data, base_dir=path.parent)


# --------------------------------------------------------------------------
# Orchestration


@dataclass
class ScadaRecord:
    """Stage-tagged SCADA values for a whole run (columnar arrays)."""

    t: np.ndarray
    v1: np.ndarray
    delta_v1: np.ndarray
    i1: np.ndarray
    delta_i1: np.ndarray
    v2: np.ndarray
    delta_v2: np.ndarray
    i2: np.ndarray
    delta_i2: np.ndarray
    v3: np.ndarray
    p2: np.ndarray
    q2: np.ndarray
    p3: np.ndarray
    q3: np.ndarray
    v4: np.ndarray
    p4: np.ndarray
    q4: np.ndarray
    retained: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.t.size


def truth_at_scans(truth: TruthRecord, scan_times: np.ndarray) -> TruthRecord:
    """Nearest-preceding truth sample for each scan instant."""
    t = np.asarray(truth.t)
    idx = np.searchsorted(t, scan_times, side="right") - 1
    if np.any(idx < 0):
        first_bad = int(np.argmax(idx < 0))
        raise SimulationError(
            f"stage=truth-lookup sample={first_bad}: scan time "
            f"{scan_times[first_bad]} precedes the truth series start {t[0]}"
        )
    return TruthRecord(
        t=scan_times,
        v_true=np.asarray(truth.v_true)[idx],
        delta_v_true=np.asarray(truth.delta_v_true)[idx],
        i_true=np.asarray(truth.i_true)[idx],
        delta_i_true=np.asarray(truth.delta_i_true)[idx],
    )


def _truth_interpolated(truth: TruthRecord, t_grid: np.ndarray) -> TruthRecord:
    """Linear interpolation of the truth phasor onto a dense sampling grid."""
    t = np.asarray(truth.t)
    if t_grid[0] < t[0] - 1e-12 or t_grid[-1] > t[-1] + 1e-12:
        raise SimulationError(
            f"stage=truth-lookup: sampling grid [{t_grid[0]}, {t_grid[-1]}] "
            f"exceeds the truth series span [{t[0]}, {t[-1]}]"
        )
    return TruthRecord(
        t=t_grid,
        v_true=np.interp(t_grid, t, np.asarray(truth.v_true)),
        delta_v_true=np.interp(t_grid, t, np.asarray(truth.delta_v_true)),
        i_true=np.interp(t_grid, t, np.asarray(truth.i_true)),
        delta_i_true=np.interp(t_grid, t, np.asarray(truth.delta_i_true)),
    )


def _draw_systematics(config: RunConfig) -> tuple[SystematicError, SystematicError]:
    rng = rng_for_stage(config.seed, "systematic")
    vt = (
        scada_chain.sample_systematic_error(config.vt_region, rng)
        if config.vt_region is not None
        else ZERO_SYSTEMATIC
    )
    ct = (
        scada_chain.sample_systematic_error(config.ct_region, rng)
        if config.ct_region is not None
        else ZERO_SYSTEMATIC
    )
    return vt, ct


def _stage(description):
    """Decorator-free stage wrapper: re-raise with stage attribution."""

    class _Ctx:
        def __init__(self, name):
            self.name = name

        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc is not None and not isinstance(
                exc, (SimulationError, ConfigError, IngestError)
            ):
                raise SimulationError(f"stage={self.name}: {exc}") from exc
            return False

    return _Ctx(description)


def run_scada(config: RunConfig) -> tuple[ScadaRecord, DelaySchedule | None]:
    """Full SCADA pipeline: stages 1-4 over the configured scan grid."""
    truth_series = load_truth(config.truth_path)
    period = config.scada.scan_period
    if config.scada.n_scans is not None:
        n = config.scada.n_scans
    else:
        n = int(np.floor(truth_series.span / period)) + 1
    scan_times = np.arange(n, dtype=np.float64) * period + float(np.asarray(truth_series.t)[0])

    with _stage("transformer"):
        truth = truth_at_scans(truth_series, scan_times)
        vt_sys, ct_sys = _draw_systematics(config)
        s1 = scada_chain.apply_transformer(
            truth, vt_sys, ct_sys, config.noise, rng_for_stage(config.seed, "transformer")
        )
    with _stage("cable"):
        s2 = scada_chain.apply_cable_burden(s1, config.noise, rng_for_stage(config.seed, "cable"))
    with _stage("ied"):
        s3 = scada_chain.ied_compute(s2, config.noise, rng_for_stage(config.seed, "ied"))

    with _stage("cn"):
        schedule = None
        if config.cn.latency_lmm is not None:
            schedule = comm_network.build_delay_schedule(
                config.cn.latency_lmm, period, n, rng_for_stage(config.seed, "cn-delay")
            )
        if config.cn.scheme == "scheme1":
            history = load_history(config.history_path)
            if schedule is None:
                raise ConfigError("scheme1 requires cn.latency_lmm for the delay schedule")
            skew = (0.0, 0.0, 0.0)
            if config.cn.time_skew:
                skew = tuple(rng_for_stage(config.seed, "time-skew").uniform(0.0, period, 3))
            e_v, e_p, e_q = comm_network.scheme1_errors(
                history, schedule, config.cn.interp, skew, t_offset=float(scan_times[0])
            )
        elif config.cn.v_gmm is not None:
            cn_cfg = CnErrorConfig(
                scheme="scheme2",
                v_gmm=config.cn.v_gmm,
                p_gmm=config.cn.p_gmm,
                q_gmm=config.cn.q_gmm,
            )
            e_v, e_p, e_q = comm_network.scheme2_errors(
                cn_cfg, n, rng_for_stage(config.seed, "cn-error")
            )
        else:
            e_v = e_p = e_q = np.zeros(n)
        v4, p4, q4 = comm_network.apply_cn(s3.v3, s3.p3, s3.q3, e_v, e_p, e_q)

    retained = schedule.retained if schedule is not None else np.ones(n, dtype=bool)
    record = ScadaRecord(
        t=scan_times,
        v1=s1.v1, delta_v1=s1.delta_v1, i1=s1.i1, delta_i1=s1.delta_i1,
        v2=s2.v2, delta_v2=s2.delta_v2, i2=s2.i2, delta_i2=s2.delta_i2,
        v3=s3.v3, p2=s3.p2, q2=s3.q2, p3=s3.p3, q3=s3.q3,
        v4=v4, p4=p4, q4=q4,
        retained=retained,
    )
    return record, schedule


def build_filter_spec(config: RunConfig) -> FilterSpec:
    return pmu_chain.make_filter(
        config.pmu.reporting_rate,
        config.pmu.nominal_freq,
        order=config.pmu.filter_order,
        filter_ref_freq=config.pmu.filter_ref_freq,
        sampling_freq=config.pmu.sampling_freq,
    )


def run_pmu(config: RunConfig) -> PmuFrame:
    """Full PMU pipeline: transformer and cable stages, then the PMU stage."""
    truth_series = load_truth(config.truth_path)
    spec = build_filter_spec(config)

    duration = config.pmu.duration if config.pmu.duration is not None else truth_series.span
    n = int(round(duration * spec.sampling_freq)) + 1
    t0 = float(np.asarray(truth_series.t)[0])
    t_grid = t0 + np.arange(n, dtype=np.float64) / spec.sampling_freq

    with _stage("transformer"):
        truth = _truth_interpolated(truth_series, t_grid)
        vt_sys, ct_sys = _draw_systematics(config)
        s1 = scada_chain.apply_transformer(
            truth, vt_sys, ct_sys, config.noise, rng_for_stage(config.seed, "transformer")
        )
    with _stage("cable"):
        s2 = scada_chain.apply_cable_burden(s1, config.noise, rng_for_stage(config.seed, "cable"))

    timing = config.timing
    if config.gps_loss_rate_per_day > 0.0:
        events = pmu_chain.generate_gps_events(
            config.gps_loss_rate_per_day,
            config.gps_recovery_rate,
            duration,
            rng_for_stage(config.seed, "gps-events"),
        )
        timing = TimingErrorModel(
            sampling_time_error=timing.sampling_time_error,
            pps_locked=timing.pps_locked,
            gps_drift_rate=timing.gps_drift_rate,
            loss_events=list(timing.loss_events) + events,
            couple_gps_to_sampling=timing.couple_gps_to_sampling,
        )

    with _stage("pmu"):
        frames = pmu_chain.run_pmu_chain(
            s2.v2, s2.delta_v2, s2.i2, s2.delta_i2,
            spec,
            timing=timing,
            signal_freq=config.pmu.signal_freq,
        )
    frames.report_time = frames.report_time + t0
    return frames


# --------------------------------------------------------------------------
# Output writing


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _write_csv(path, header, columns):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in zip(*columns):
            writer.writerow([cell if isinstance(cell, str) else _fmt(cell) for cell in row])


def _write_jsonl(path, header, columns):
    with open(path, "w") as fh:
        for row in zip(*columns):
            obj = {}
            for name, cell in zip(header, row):
                if isinstance(cell, str):
                    obj[name] = cell
                elif isinstance(cell, (bool, np.bool_)):
                    obj[name] = bool(cell)
                elif isinstance(cell, (int, np.integer)):
                    obj[name] = int(cell)
                else:
                    obj[name] = float(cell)
            fh.write(json.dumps(obj) + "\n")


def _emit(path_base: Path, formats, header, columns):
    written = []
    for fmt in formats:
        if fmt == "csv":
            path = path_base.with_suffix(".csv")
            _write_csv(path, header, columns)
        elif fmt == "jsonl":
            path = path_base.with_suffix(".jsonl")
            _write_jsonl(path, header, columns)
        else:
            raise ConfigError(f"unknown output format {fmt!r}")
        written.append(str(path))
    return written


def write_scada_outputs(
    record: ScadaRecord,
    schedule: DelaySchedule | None,
    out_dir,
    formats=("csv",),
    debug_columns: bool = False,
) -> list[str]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = record.n_samples
    k = np.arange(n)
    status = ["retained" if r else "discarded" for r in record.retained]
    if schedule is not None:
        latency, buffer_draw, total = schedule.latency, schedule.buffer_draw, schedule.total_delay
    else:
        latency = buffer_draw = total = np.zeros(n)
    header = ["k", "t", "status", "v4", "p4", "q4", "latency", "buffer", "total_delay"]
    columns = [k, record.t, status, record.v4, record.p4, record.q4, latency, buffer_draw, total]
    if debug_columns:
        extra = [
            "v1", "delta_v1", "i1", "delta_i1",
            "v2", "delta_v2", "i2", "delta_i2",
            "v3", "p2", "q2", "p3", "q3",
        ]
        header += extra
        columns += [getattr(record, name) for name in extra]
    written = _emit(out_dir / "scada", formats, header, columns)
    if schedule is not None:
        written += write_delay_schedule(schedule, out_dir / "delay_schedule.csv")
    return written


def write_delay_schedule(schedule: DelaySchedule, path) -> list[str]:
    header = ["k", "send_time", "latency", "b_k", "buffer", "total_delay", "status"]
    columns = [
        np.arange(schedule.n_samples),
        schedule.send_time,
        schedule.latency,
        schedule.buffer_limit,
        schedule.buffer_draw,
        schedule.total_delay,
        schedule.status_labels(),
    ]
    _write_csv(path, header, columns)
    return [str(path)]


def write_pmu_outputs(frames: PmuFrame, out_dir, formats=("csv",)) -> list[str]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = [
        "report_time", "v_mag", "v_angle_deg", "i_mag", "i_angle_deg",
        "gps_locked", "injected_angle_error_deg",
    ]
    columns = [
        frames.report_time,
        np.abs(frames.v_phasor),
        np.angle(frames.v_phasor) * DEGREES,
        np.abs(frames.i_phasor),
        np.angle(frames.i_phasor) * DEGREES,
        frames.gps_locked,
        frames.injected_angle_error * DEGREES,
    ]
    return _emit(out_dir / "pmu", formats, header, columns)


# --------------------------------------------------------------------------
# Summaries (key=value lines for the CLI)


def _moment_lines(prefix, values) -> list[str]:
    values = np.asarray(values, dtype=np.float64)
    values = values[np.isfinite(values)]
    if values.size == 0:
        return [f"{prefix}_mean=nan", f"{prefix}_std=nan"]
    return [
        f"{prefix}_mean={float(np.mean(values))!r}",
        f"{prefix}_std={float(np.std(values))!r}",
    ]


def summarize_scada(record: ScadaRecord, schedule: DelaySchedule | None, truth: TruthRecord):
    lines = [f"n_samples={record.n_samples}"]
    v_truth = np.asarray(truth.v_true)
    lines += _moment_lines("stage1_v_error", record.v1 - v_truth)
    lines += _moment_lines("stage2_v_error", record.v2 - record.v1)
    lines += _moment_lines("stage3_v_error", record.v3 - record.v2)
    lines += _moment_lines("stage4_v_error", record.v4 - record.v3)
    lines += _moment_lines("stage4_p_error", record.p4 - record.p3)
    lines += _moment_lines("stage4_q_error", record.q4 - record.q3)
    if schedule is not None:
        lines += _moment_lines("latency", schedule.latency)
        lines += _moment_lines("total_delay", schedule.total_delay[schedule.retained])
        lines.append(f"discard_count={schedule.n_discarded}")
    else:
        lines.append("discard_count=0")
    return lines


def summarize_pmu(frames: PmuFrame):
    injected_deg = frames.injected_angle_error * DEGREES
    lines = [
        f"n_frames={frames.n_frames}",
        f"gps_unlocked_frames={int(np.count_nonzero(~frames.gps_locked))}",
        f"final_injected_angle_error_deg={float(injected_deg[-1])!r}",
        f"max_injected_angle_error_deg={float(np.max(np.abs(injected_deg)))!r}",
    ]
    lines += _moment_lines("v_mag", np.abs(frames.v_phasor))
    lines += _moment_lines("i_mag", np.abs(frames.i_phasor))
    return lines
