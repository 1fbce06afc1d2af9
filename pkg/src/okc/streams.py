"""Synthetic stream generation, CSV ingestion and one-class relabeling.

Generators cover four drift families: a stationary ring, a unimodal Gaussian
pair whose means translate (optionally with a sinusoidal transverse wobble),
a multimodal Gaussian pair with alternating mode dominance, and a pair of
classes rotating on opposite sides of a circle. All randomness flows from the
spec's seed, so equal specs produce bitwise-identical streams.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyTargetError, FormatError, SchemaError, SpecError

FAMILIES = ("ring", "unimodal_drift", "multimodal_drift", "rotating")


@dataclass
class LabeledSample:
    features: np.ndarray
    label: int  # +1 target, -1 outlier (raw class ids before to_one_class)
    timestamp: int


def features_of(samples) -> np.ndarray:
    return np.array([s.features for s in samples], dtype=float)


def labels_of(samples) -> np.ndarray:
    return np.array([s.label for s in samples])


@dataclass
class DriftStreamSpec:
    """Parametric description of a labeled synthetic stream.

    ``velocity`` is the displacement of the target-class mean per drift step;
    ``class_offset`` positions the outlier class relative to the target class.
    Mode and rotation parameters apply only to their families and are ignored
    elsewhere.
    """

    family: str = "unimodal_drift"
    n_dims: int = 2
    total: int = 10000
    drift_period: int = 200
    class_balance: float = 0.5
    seed: int = 0
    spread: float = 1.0
    velocity: list[float] | None = None
    wave_amplitude: float = 0.0
    wave_period: float = 25.0
    class_offset: list[float] | None = None
    mode_count: int = 2
    mode_spacing: float = 6.0
    dominance_period: int = 10
    dominant_weight: float = 0.7
    rotation_period: float = 40.0
    orbit_radius: float = 8.0
    r_inner: float = 1.0
    r_outer: float = 2.0

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise SpecError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.total <= 0:
            raise SpecError(f"total must be positive, got {self.total}")
        if not 0.0 < self.class_balance < 1.0:
            raise SpecError(f"class_balance must lie in (0, 1), got {self.class_balance}")
        if self.drift_period < 1:
            raise SpecError(f"drift_period must be >= 1, got {self.drift_period}")
        if self.n_dims < 1 or (self.family in ("ring", "rotating") and self.n_dims < 2):
            raise SpecError(f"n_dims={self.n_dims} is too small for family {self.family!r}")
        if self.spread <= 0:
            raise SpecError(f"spread must be positive, got {self.spread}")
        for name in ("velocity", "class_offset"):
            vec = getattr(self, name)
            if vec is not None:
                if len(vec) != self.n_dims or not np.isfinite(vec).all():
                    raise SpecError(f"{name} must be a finite vector of length {self.n_dims}")
        if self.family == "multimodal_drift":
            if self.mode_count < 2:
                raise SpecError(f"mode_count must be >= 2, got {self.mode_count}")
            if not 0.0 < self.dominant_weight < 1.0:
                raise SpecError(f"dominant_weight must lie in (0, 1), got {self.dominant_weight}")
            if self.dominance_period < 1:
                raise SpecError(f"dominance_period must be >= 1, got {self.dominance_period}")
        if self.family == "rotating" and self.rotation_period <= 0:
            raise SpecError(f"rotation_period must be positive, got {self.rotation_period}")
        if self.family == "ring" and not 0.0 < self.r_inner < self.r_outer:
            raise SpecError(f"need 0 < r_inner < r_outer, got {self.r_inner}, {self.r_outer}")

    def _velocity(self) -> np.ndarray:
        return np.zeros(self.n_dims) if self.velocity is None else np.asarray(self.velocity, float)

    def _class_offset(self) -> np.ndarray:
        if self.class_offset is not None:
            return np.asarray(self.class_offset, float)
        off = np.zeros(self.n_dims)
        off[0] = 6.0 * self.spread  # default: outliers sit 6 spreads away along axis 0
        return off


def gen_ring(n: int, r_inner: float, r_outer: float, seed: int = 0) -> list[LabeledSample]:
    """``n`` target samples drawn uniformly from the 2-D annulus."""
    if not 0.0 < r_inner < r_outer:
        raise SpecError(f"need 0 < r_inner < r_outer, got {r_inner}, {r_outer}")
    rng = np.random.default_rng(seed)
    radius = np.sqrt(rng.random(n) * (r_outer**2 - r_inner**2) + r_inner**2)
    angle = rng.random(n) * 2.0 * math.pi
    xy = np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])
    return [LabeledSample(xy[i], 1, i) for i in range(n)]


def gen_stream(spec: DriftStreamSpec) -> list[LabeledSample]:
    """Generate the labeled stream described by ``spec``, ordered by timestamp."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    total, dims = spec.total, spec.n_dims
    labels = np.where(rng.random(total) < spec.class_balance, 1, -1)
    steps = np.arange(total) // spec.drift_period

    if spec.family == "ring":
        X = _ring_positions(spec, rng, labels)
    else:
        means = _class_means(spec, rng, steps, labels)
        X = means + spec.spread * rng.standard_normal((total, dims))

    return [LabeledSample(X[i], int(labels[i]), i) for i in range(total)]


def _ring_positions(spec, rng, labels) -> np.ndarray:
    total = labels.shape[0]
    u = rng.random(total)
    angle = rng.random(total) * 2.0 * math.pi
    inner_side = rng.random(total) < 0.5
    r_in, r_out = spec.r_inner, spec.r_outer
    radius = np.sqrt(u * (r_out**2 - r_in**2) + r_in**2)  # targets: uniform annulus
    # outliers: half inside the hole, half beyond the rim
    r_hole = 0.5 * r_in * np.sqrt(u)
    r_rim = np.sqrt(u * ((2 * r_out) ** 2 - (1.5 * r_out) ** 2) + (1.5 * r_out) ** 2)
    out_radius = np.where(inner_side, r_hole, r_rim)
    radius = np.where(labels == 1, radius, out_radius)
    return np.column_stack([radius * np.cos(angle), radius * np.sin(angle)])


def _class_means(spec, rng, steps, labels) -> np.ndarray:
    total, dims = labels.shape[0], spec.n_dims
    if spec.family == "rotating":
        # classes orbit the origin half a revolution apart
        theta = 2.0 * math.pi * steps / spec.rotation_period
        target_mean = np.zeros((total, dims))
        target_mean[:, 0] = spec.orbit_radius * np.cos(theta)
        target_mean[:, 1] = spec.orbit_radius * np.sin(theta)
        return np.where(labels[:, None] == 1, target_mean, -target_mean)

    target_mean = steps[:, None] * spec._velocity()[None, :]
    if spec.wave_amplitude != 0.0:
        axis = 1 if dims >= 2 else 0
        target_mean[:, axis] += spec.wave_amplitude * np.sin(
            2.0 * math.pi * steps / spec.wave_period
        )
    means = np.where(labels[:, None] == 1, target_mean, target_mean + spec._class_offset()[None, :])
    if spec.family == "multimodal_drift":
        means = means + _mode_offsets(spec, rng, steps)
    return means


def _mode_offsets(spec, rng, steps) -> np.ndarray:
    total, dims, m = steps.shape[0], spec.n_dims, spec.mode_count
    dominant = (steps // spec.dominance_period) % m
    u = rng.random(total)
    others = rng.integers(0, m - 1, total)
    minor = np.where(others >= dominant, others + 1, others)
    mode = np.where(u < spec.dominant_weight, dominant, minor)
    axis = dims - 1  # modes spread along the last axis
    offsets = np.zeros((total, dims))
    offsets[:, axis] = (mode - (m - 1) / 2.0) * spec.mode_spacing
    return offsets


@dataclass
class DatasetSchema:
    """How to read a labeled CSV: where the label lives and what counts as target.

    ``target_label=None`` keeps the raw labels (parsed as int/float/str) so
    they can be mapped later with :func:`to_one_class`.
    """

    path: str | Path = ""
    delimiter: str = ","
    label_column: int | str = -1
    target_label: object | None = None
    header: bool = False
    normalize: bool = False


def _parse_raw_label(cell: str):
    for cast in (int, float):
        try:
            return cast(cell)
        except ValueError:
            continue
    return cell


def load_csv(schema: DatasetSchema) -> list[LabeledSample]:
    """Read ``schema.path`` into labeled samples, preserving row order.

    Raises FormatError (with the offending line number) on non-numeric
    features and SchemaError when the label column cannot be resolved.
    """
    path = Path(schema.path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        rows = list(reader)
    start = 0
    label_idx = schema.label_column
    if schema.header:
        if not rows:
            raise FormatError(f"{path}: empty file, expected a header row")
        header = rows[0]
        start = 1
        if isinstance(label_idx, str):
            if label_idx not in header:
                raise SchemaError(f"label column {label_idx!r} not in header {header}")
            label_idx = header.index(label_idx)
    elif isinstance(label_idx, str):
        raise SchemaError("label column given by name but the file has no header")

    samples: list[LabeledSample] = []
    width: int | None = None
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if not row:
            continue
        if not -len(row) <= label_idx < len(row):
            raise SchemaError(f"line {lineno}: no column {schema.label_column!r} in {len(row)}-cell row")
        resolved = label_idx % len(row)
        cells = [c for i, c in enumerate(row) if i != resolved]
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise FormatError(f"line {lineno}: expected {width} features, got {len(cells)}")
        feats = np.empty(len(cells))
        for i, cell in enumerate(cells):
            try:
                feats[i] = float(cell)
            except ValueError:
                raise FormatError(f"line {lineno}: non-numeric feature {cell!r}") from None
        raw = row[resolved].strip()
        if schema.target_label is not None:
            label = 1 if raw == str(schema.target_label) else -1
        else:
            label = _parse_raw_label(raw)
        samples.append(LabeledSample(feats, label, len(samples)))
    if schema.normalize:
        samples = minmax_normalize(samples)
    return samples


def save_csv(samples, path) -> None:
    """Write samples as ``f1..fn,label`` with a header, full float precision."""
    path = Path(path)
    n = samples[0].features.shape[0] if samples else 0
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{i + 1}" for i in range(n)] + ["label"])
        for s in samples:
            writer.writerow([repr(float(v)) for v in s.features] + [s.label])


def minmax_normalize(samples) -> list[LabeledSample]:
    """Rescale every feature to [0, 1] over the whole list (constant columns map to 0)."""
    X = features_of(samples)
    lo, hi = X.min(axis=0), X.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    X = (X - lo) / span
    return [LabeledSample(X[i], s.label, s.timestamp) for i, s in enumerate(samples)]


def to_one_class(samples, target_labels) -> tuple[list[LabeledSample], dict[str, int]]:
    """Map raw labels to +1 (in ``target_labels``) / -1, preserving everything else.

    Returns the relabeled list and the class counts.
    """
    target_labels = set(target_labels)
    if not target_labels:
        raise EmptyTargetError("target label set is empty")
    relabeled = [
        LabeledSample(s.features, 1 if s.label in target_labels else -1, s.timestamp)
        for s in samples
    ]
    n_target = sum(1 for s in relabeled if s.label == 1)
    if n_target == 0:
        raise EmptyTargetError(f"no sample carries a label in {sorted(map(str, target_labels))}")
    return relabeled, {"target": n_target, "outlier": len(relabeled) - n_target}
