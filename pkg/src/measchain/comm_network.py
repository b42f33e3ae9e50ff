"""SCADA stage 4: communication-network latency, buffering, and errors.

Latency is drawn from a lognormal mixture; each sample's buffer limit is
``b_k = S + latency_{k+1} - latency_k``.  A negative limit means the next
sample arrives first, so the current one is discarded.  Retained samples
wait a uniform buffer time in [0, b_k]; total delay is latency + buffer.

Value errors are produced either from a user-supplied historical series
(difference between the series at the delayed and the nominal instant) or
from per-channel Gaussian mixtures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distributions import GmmParams, LmmParams, sample_gmm, sample_lmm


class HistoryCoverageError(ValueError):
    """Historical series does not span an instant the extraction needs."""


@dataclass
class HistorySeries:
    """Historical V/P/Q measurement series used by the real-data scheme."""

    t: np.ndarray
    v: np.ndarray
    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        self.p = np.asarray(self.p, dtype=np.float64)
        self.q = np.asarray(self.q, dtype=np.float64)
        if not (self.t.size == self.v.size == self.p.size == self.q.size):
            raise ValueError("history channels must share one time base")
        if self.t.size < 2:
            raise ValueError("history needs at least two rows")
        if np.any(np.diff(self.t) <= 0.0):
            raise ValueError("history timestamps must be strictly increasing")


@dataclass
class DelaySchedule:
    """Per-sample latency, buffer limit/draw, total delay, and retained flag.

    ``buffer_limit`` is NaN for the final sample (no successor exists to
    define it); that sample is retained with a zero buffer draw.
    """

    send_time: np.ndarray
    latency: np.ndarray
    buffer_limit: np.ndarray
    buffer_draw: np.ndarray
    total_delay: np.ndarray
    retained: np.ndarray

    @property
    def n_samples(self) -> int:
        return self.send_time.size

    @property
    def arrival_time(self) -> np.ndarray:
        return self.send_time + self.latency

    @property
    def n_discarded(self) -> int:
        return int(np.count_nonzero(~self.retained))

    def status_labels(self) -> list[str]:
        return ["retained" if r else "discarded" for r in self.retained]


@dataclass
class CnErrorConfig:
    """Which error scheme the network stage applies, and its inputs."""

    scheme: str  # "scheme1" (historical data) or "scheme2" (mixtures)
    history: HistorySeries | None = None
    v_gmm: GmmParams | None = None
    p_gmm: GmmParams | None = None
    q_gmm: GmmParams | None = None
    interp: str = "linear"  # or "nearest"

    def __post_init__(self):
        if self.scheme not in ("scheme1", "scheme2"):
            raise ValueError("scheme must be 'scheme1' or 'scheme2'")
        if self.interp not in ("linear", "nearest"):
            raise ValueError("interp must be 'linear' or 'nearest'")
        if self.scheme == "scheme1" and self.history is None:
            raise ValueError("scheme1 requires a historical series")
        if self.scheme == "scheme2":
            missing = [
                name
                for name, g in (("v_gmm", self.v_gmm), ("p_gmm", self.p_gmm), ("q_gmm", self.q_gmm))
                if g is None
            ]
            if missing:
                raise ValueError(f"scheme2 requires mixture params: missing {', '.join(missing)}")


def build_delay_schedule(
    latency_params: LmmParams,
    sampling_period: float,
    n_samples: int,
    rng: np.random.Generator,
) -> DelaySchedule:
    """Draw latencies and derive buffer limits, draws, delays, and discards."""
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    latency = sample_lmm(latency_params, n_samples, rng)
    return schedule_from_latencies(latency, sampling_period, rng)


def schedule_from_latencies(
    latency, sampling_period: float, rng: np.random.Generator
) -> DelaySchedule:
    """Derive a schedule from given per-sample latencies (buffer draws random).

    Useful for replaying recorded latency traces; ``build_delay_schedule``
    composes this with the lognormal-mixture sampler.
    """
    latency = np.asarray(latency, dtype=np.float64)
    if not sampling_period > 0.0:
        raise ValueError("sampling_period must be positive")
    n_samples = latency.size
    if n_samples < 2:
        raise ValueError("need at least two samples")
    if np.any(latency < 0.0) or not np.all(np.isfinite(latency)):
        raise ValueError("latencies must be finite and non-negative")

    uniforms = rng.random(n_samples)  # one per sample, keeps draw count fixed

    send_time = np.arange(n_samples, dtype=np.float64) * sampling_period
    buffer_limit = np.full(n_samples, np.nan)
    buffer_limit[:-1] = sampling_period + latency[1:] - latency[:-1]

    retained = np.ones(n_samples, dtype=bool)
    retained[:-1] = buffer_limit[:-1] >= 0.0

    buffer_draw = np.zeros(n_samples)
    mask = retained.copy()
    mask[-1] = False  # final sample keeps a zero draw by convention
    buffer_draw[mask] = uniforms[mask] * buffer_limit[mask]

    total_delay = latency + buffer_draw
    return DelaySchedule(
        send_time=send_time,
        latency=latency,
        buffer_limit=buffer_limit,
        buffer_draw=buffer_draw,
        total_delay=total_delay,
        retained=retained,
    )


def _eval_history(t_hist, values, query_t, interp):
    if interp == "nearest":
        idx = np.clip(np.searchsorted(t_hist, query_t), 1, t_hist.size - 1)
        left_closer = (query_t - t_hist[idx - 1]) <= (t_hist[idx] - query_t)
        return values[np.where(left_closer, idx - 1, idx)]
    return np.interp(query_t, t_hist, values)


def scheme1_errors(
    history: HistorySeries,
    schedule: DelaySchedule,
    interp: str = "linear",
    channel_skew: tuple[float, float, float] = (0.0, 0.0, 0.0),
    t_offset: float = 0.0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Errors extracted from historical data: z(t_k + delay_k) - z(t_k).

    ``t_offset`` maps the schedule's zero-based send times onto the
    history's clock.  Raises :class:`HistoryCoverageError` if the history
    does not span a retained sample's nominal or delayed instant.
    Discarded samples whose instants fall outside the history get NaN
    instead of an error.
    """
    t0, t1 = history.t[0], history.t[-1]
    errors = []
    for skew, values in zip(channel_skew, (history.v, history.p, history.q)):
        base_t = schedule.send_time + t_offset + skew
        delayed_t = base_t + schedule.total_delay
        # delay >= 0, so coverage of [t_k, t_k + delay] reduces to two bounds
        covered = (base_t >= t0) & (delayed_t <= t1)
        uncovered_retained = schedule.retained & ~covered
        if np.any(uncovered_retained):
            k = int(np.argmax(uncovered_retained))
            bad_t = base_t[k] if base_t[k] < t0 else delayed_t[k]
            raise HistoryCoverageError(
                f"history [{t0}, {t1}] does not cover instant {bad_t} "
                f"needed by sample {k}"
            )
        err = _eval_history(history.t, values, delayed_t, interp) - _eval_history(
            history.t, values, base_t, interp
        )
        err = np.where(covered, err, np.nan)
        errors.append(err)
    return errors[0], errors[1], errors[2]


def scheme2_errors(
    config: CnErrorConfig, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Three independent per-sample mixture draws (V, P, Q channels)."""
    if config.scheme != "scheme2":
        raise ValueError("config is not configured for scheme2")
    e_v = sample_gmm(config.v_gmm, n, rng)
    e_p = sample_gmm(config.p_gmm, n, rng)
    e_q = sample_gmm(config.q_gmm, n, rng)
    return e_v, e_p, e_q


def apply_cn(v3, p3, q3, e_v, e_p, e_q):
    """Stage 4 receipt: plain addition per channel."""
    return v3 + e_v, p3 + e_p, q3 + e_q
