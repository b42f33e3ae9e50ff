"""First three SCADA stages: instrument transformers, cables/burdens, IEDs.

Stage functions are vectorized: the fields of :class:`TruthRecord` and the
stage value containers may be scalars or equal-length 1-D arrays, and one
call processes the whole series.  Random draws are per sample; systematic
transformer errors are drawn once per run and held constant.

Units are per-unit magnitudes and radians throughout; degrees and arc
minutes appear only at I/O boundaries (accuracy-region vertices use
minutes because that is how the regions are specified).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import GmmParams, sample_gmm

RADIANS_PER_MINUTE = math.pi / (180.0 * 60.0)


def _cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])

# Accuracy classes shipped by default, as percent bounds on the ratio
# correction factor.
STANDARD_ACCURACY_CLASSES = (0.3, 0.6, 1.2)


@dataclass(frozen=True)
class TruthRecord:
    """Ground-truth phasor sample(s): magnitudes per-unit, angles radians.

    Fields may be scalars (one instant) or equal-length 1-D arrays (a
    series); every stage function broadcasts accordingly.
    """

    t: np.ndarray | float
    v_true: np.ndarray | float
    delta_v_true: np.ndarray | float
    i_true: np.ndarray | float
    delta_i_true: np.ndarray | float

    def __post_init__(self):
        for name in ("t", "v_true", "delta_v_true", "i_true", "delta_i_true"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if not np.all(np.isfinite(self.delta_v_true)) or not np.all(np.isfinite(self.delta_i_true)):
            raise ValueError("phase angles must be finite")
        if np.any(self.v_true < 0.0) or np.any(self.i_true < 0.0):
            raise ValueError("magnitudes must be non-negative")


@dataclass(frozen=True)
class AccuracyRegion:
    """Accuracy-class parallelogram in (RCF, phase-angle-minutes) coordinates."""

    kind: str  # "vt" or "ct"
    class_value: float
    vertices: np.ndarray  # (4, 2) ordered polygon

    def __post_init__(self):
        if self.kind not in ("vt", "ct"):
            raise ValueError("kind must be 'vt' or 'ct'")
        verts = np.asarray(self.vertices, dtype=np.float64)
        if verts.shape != (4, 2) or not np.all(np.isfinite(verts)):
            raise ValueError("vertices must be a finite (4, 2) array")
        object.__setattr__(self, "vertices", verts)
        edges = np.diff(np.vstack([verts, verts[:1]]), axis=0)
        if np.max(np.abs(edges[0] + edges[2])) > 1e-9 or np.max(np.abs(edges[1] + edges[3])) > 1e-9:
            raise ValueError("vertices must form a parallelogram (opposite edges must cancel)")
        if abs(_cross2(edges[0], edges[1])) < 1e-15:
            raise ValueError("parallelogram is degenerate")
        if not bool(np.all(self.contains(1.0, 0.0, strict=True))):
            raise ValueError("region must contain the ideal point (RCF=1, angle=0)")

    def contains(self, rcf, angle_minutes, strict: bool = False):
        """Half-plane containment test; vectorized over the query points."""
        p = np.stack(
            [np.asarray(rcf, dtype=np.float64), np.asarray(angle_minutes, dtype=np.float64)],
            axis=-1,
        )
        verts = self.vertices
        edges = np.diff(np.vstack([verts, verts[:1]]), axis=0)
        # orientation sign from the first two edges
        orient = np.sign(_cross2(edges[0], edges[1]))
        inside = np.ones(p.shape[:-1], dtype=bool)
        for j in range(4):
            rel = p - verts[j]
            cross = edges[j, 0] * rel[..., 1] - edges[j, 1] * rel[..., 0]
            inside &= (orient * cross > 0.0) if strict else (orient * cross >= -1e-15)
        return inside


@dataclass(frozen=True)
class SystematicError:
    """Persistent transformer miscalibration: ratio deviation and angle (radians)."""

    ratio_dev: float
    angle_dev: float


ZERO_SYSTEMATIC = SystematicError(0.0, 0.0)


@dataclass
class GaussianSpec:
    """Mean/std pair for one additive non-zero-mean Gaussian error channel."""

    mean: float = 0.0
    std: float = 0.0

    def __post_init__(self):
        if self.std < 0.0:
            raise ValueError("std must be >= 0")


@dataclass
class StageNoiseConfig:
    """Random-error configuration for stages 1-3.

    ``None`` disables a source entirely (it contributes exactly zero),
    which is what the end-to-end null tests rely on.  Transformer random
    errors are mixtures; cable/burden errors are non-zero-mean Gaussians;
    IED errors are zero-mean Gaussians given by their stds.
    """

    vt_random: GmmParams | None = None
    vt_angle_random: GmmParams | None = None
    ct_random: GmmParams | None = None
    ct_angle_random: GmmParams | None = None
    cable_v: GaussianSpec | None = None
    cable_angle_v: GaussianSpec | None = None
    cable_i: GaussianSpec | None = None
    cable_angle_i: GaussianSpec | None = None
    ied_v: float = 0.0
    ied_p: float = 0.0
    ied_q: float = 0.0

    def __post_init__(self):
        if min(self.ied_v, self.ied_p, self.ied_q) < 0.0:
            raise ValueError("IED stds must be >= 0")


@dataclass(frozen=True)
class Stage1Values:
    v1: np.ndarray | float
    delta_v1: np.ndarray | float
    i1: np.ndarray | float
    delta_i1: np.ndarray | float


@dataclass(frozen=True)
class Stage2Values:
    v2: np.ndarray | float
    delta_v2: np.ndarray | float
    i2: np.ndarray | float
    delta_i2: np.ndarray | float


@dataclass(frozen=True)
class Stage3Values:
    v3: np.ndarray | float
    p2: np.ndarray | float
    q2: np.ndarray | float
    p3: np.ndarray | float
    q3: np.ndarray | float


def default_accuracy_region(kind: str, class_value: float) -> AccuracyRegion:
    """Shipped parallelogram for a standard accuracy class.

    RCF is bounded in [1 - c/100, 1 + c/100] and the transformer
    correction factor (RCF + minutes/2600 for VTs, RCF - minutes/2600 for
    CTs) is bounded in the same interval, which yields the slanted
    parallelogram geometry.  Vertices are overridable via configuration.
    """
    if kind not in ("vt", "ct"):
        raise ValueError("kind must be 'vt' or 'ct'")
    if class_value not in STANDARD_ACCURACY_CLASSES:
        raise ValueError(
            f"no shipped region for class {class_value}; "
            f"known classes: {STANDARD_ACCURACY_CLASSES} (or supply vertices)"
        )
    bound = class_value / 100.0
    lo, hi = 1.0 - bound, 1.0 + bound
    gamma = 2600.0 * 2.0 * bound  # minutes reachable at the RCF extremes
    if kind == "vt":
        verts = [(lo, 0.0), (hi, -gamma), (hi, 0.0), (lo, gamma)]
    else:
        verts = [(lo, -gamma), (hi, 0.0), (hi, gamma), (lo, 0.0)]
    return AccuracyRegion(kind=kind, class_value=class_value, vertices=np.array(verts))


def sample_systematic_points(
    region: AccuracyRegion, n: int, rng: np.random.Generator
) -> np.ndarray:
    """``n`` uniform (RCF, minutes) points inside the parallelogram."""
    if n < 1:
        raise ValueError("n must be >= 1")
    v0, v1, _, v3 = region.vertices
    u = rng.random((n, 1))
    w = rng.random((n, 1))
    return v0 + u * (v1 - v0) + w * (v3 - v0)


def sample_systematic_error(region: AccuracyRegion, rng: np.random.Generator) -> SystematicError:
    """Uniform draw inside the region's parallelogram."""
    point = sample_systematic_points(region, 1, rng)[0]
    return SystematicError(
        ratio_dev=float(point[0]) - 1.0,
        angle_dev=float(point[1]) * RADIANS_PER_MINUTE,
    )


def _mixture_draw(params: GmmParams | None, shape, rng) -> np.ndarray | float:
    if params is None:
        return 0.0
    n = int(np.prod(shape)) if shape else 1
    return sample_gmm(params, n, rng).reshape(shape)


def _gauss_draw(spec: GaussianSpec | None, shape, rng) -> np.ndarray | float:
    if spec is None:
        return 0.0
    return rng.normal(spec.mean, spec.std, shape or None)


def apply_transformer(
    truth: TruthRecord,
    vt_sys: SystematicError,
    ct_sys: SystematicError,
    noise: StageNoiseConfig,
    rng: np.random.Generator,
) -> Stage1Values:
    """Stage 1: multiplicative ratio error on magnitudes, additive on angles.

    The per-sample random error composes additively with the persistent
    systematic term inside the (1 + e) ratio factor.
    """
    shape = np.shape(truth.v_true)
    e_v = vt_sys.ratio_dev + _mixture_draw(noise.vt_random, shape, rng)
    e_dv = vt_sys.angle_dev + _mixture_draw(noise.vt_angle_random, shape, rng)
    e_i = ct_sys.ratio_dev + _mixture_draw(noise.ct_random, shape, rng)
    e_di = ct_sys.angle_dev + _mixture_draw(noise.ct_angle_random, shape, rng)
    return Stage1Values(
        v1=truth.v_true * (1.0 + e_v),
        delta_v1=truth.delta_v_true + e_dv,
        i1=truth.i_true * (1.0 + e_i),
        delta_i1=truth.delta_i_true + e_di,
    )


def apply_cable_burden(
    stage1: Stage1Values, noise: StageNoiseConfig, rng: np.random.Generator
) -> Stage2Values:
    """Stage 2: additive non-zero-mean Gaussian errors from cables and burdens.

    Voltage and current angle channels draw independently even though they
    share one symbol in the source model; the physical channels are
    distinct.
    """
    shape = np.shape(stage1.v1)
    return Stage2Values(
        v2=stage1.v1 + _gauss_draw(noise.cable_v, shape, rng),
        delta_v2=stage1.delta_v1 + _gauss_draw(noise.cable_angle_v, shape, rng),
        i2=stage1.i1 + _gauss_draw(noise.cable_i, shape, rng),
        delta_i2=stage1.delta_i1 + _gauss_draw(noise.cable_angle_i, shape, rng),
    )


def ied_compute(
    stage2: Stage2Values, noise: StageNoiseConfig, rng: np.random.Generator
) -> Stage3Values:
    """Stage 3: P/Q computation inside the IED plus zero-mean A/D noise."""
    angle = np.asarray(stage2.delta_v2) - np.asarray(stage2.delta_i2)
    p2 = stage2.v2 * stage2.i2 * np.cos(angle)
    q2 = stage2.v2 * stage2.i2 * np.sin(angle)
    size = np.shape(p2) or None
    return Stage3Values(
        v3=stage2.v2 + rng.normal(0.0, noise.ied_v, size),
        p2=p2,
        q2=q2,
        p3=p2 + rng.normal(0.0, noise.ied_p, size),
        q3=q2 + rng.normal(0.0, noise.ied_q, size),
    )
