"""Evaluation statistics and CSV/JSON exports for error densities and scatters."""

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

MATRIX_LABELS = ("race", "height", "gender", "age", "weight", "smm", "pbf")


class MetricsError(ValueError):
    pass


def pearson(x, y):
    """Sample Pearson correlation; raises on length mismatch or zero variance."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise MetricsError(f"pearson needs two equal-length vectors, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise MetricsError("pearson needs at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise MetricsError("pearson undefined: zero variance")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def mae(errors):
    e = np.asarray(errors, dtype=np.float64)
    if e.size == 0:
        raise MetricsError("mae of an empty error vector")
    return float(np.mean(np.abs(e)))


def error_sd(errors):
    """Sample standard deviation (n - 1 denominator)."""
    e = np.asarray(errors, dtype=np.float64)
    if e.size < 2:
        raise MetricsError("error_sd needs at least 2 errors")
    return float(np.std(e, ddof=1))


def errors(actual, predicted):
    """Errors as actual - predicted."""
    return np.asarray(actual, dtype=np.float64) - np.asarray(predicted, dtype=np.float64)


@dataclass
class CorrelationMatrix:
    labels: tuple
    values: np.ndarray  # NaN where a column is constant
    flagged: tuple  # labels whose column is constant or nearly so

    def get(self, a, b):
        return float(self.values[self.labels.index(a), self.labels.index(b)])

    def to_csv(self):
        lines = ["," + ",".join(self.labels)]
        for lab, row in zip(self.labels, self.values):
            lines.append(lab + "," + ",".join("" if math.isnan(v) else f"{v:.6f}" for v in row))
        return "\n".join(lines) + "\n"


def encode_columns(records, majority_race=None):
    """Numeric columns in MATRIX_LABELS order: race as is-majority, gender as male=1."""
    races = [r.race for r in records]
    if majority_race is None:
        majority_race = max(sorted(set(races)), key=races.count)
    return np.array(
        [
            [1.0 if r.race == majority_race else 0.0 for r in records],
            [r.height for r in records],
            [r.is_male for r in records],
            [float(r.age) for r in records],
            [r.weight for r in records],
            [r.smm for r in records],
            [r.pbf for r in records],
        ]
    )


def correlation_matrix(records, near_constant=0.03):
    """Pairwise Pearson matrix over the seven encoded columns.

    Constant columns give NaN entries (diagonal stays 1).  A column whose
    minority share is below ``near_constant`` (binary) or that is constant is
    listed in ``flagged``.
    """
    if len(records) < 2:
        raise MetricsError("correlation_matrix needs at least 2 records")
    cols = encode_columns(records)
    k = len(MATRIX_LABELS)
    vals = np.full((k, k), np.nan)
    flagged = []
    for i in range(k):
        col = cols[i]
        uniq = np.unique(col)
        if len(uniq) == 1:
            flagged.append(MATRIX_LABELS[i])
        elif len(uniq) == 2 and min(np.mean(col == uniq[0]), np.mean(col == uniq[1])) < near_constant:
            flagged.append(MATRIX_LABELS[i])
    for i in range(k):
        vals[i, i] = 1.0
        for j in range(i + 1, k):
            try:
                r = pearson(cols[i], cols[j])
            except MetricsError:
                r = math.nan
            vals[i, j] = vals[j, i] = r
    return CorrelationMatrix(MATRIX_LABELS, vals, tuple(flagged))


@dataclass
class TaskReport:
    mae: float
    sd: float
    pearson_pred_actual: float


@dataclass
class EvalReport:
    n: int
    pbf: TaskReport
    smm: TaskReport
    pearson_pred_pbf_vs_pred_smm: float
    pearson_actual_pbf_vs_actual_smm: float

    def to_flat(self):
        out = {"n": self.n}
        for task in ("pbf", "smm"):
            for k, v in asdict(getattr(self, task)).items():
                out[f"{task}_{k}"] = v
        out["pearson_pred_pbf_vs_pred_smm"] = self.pearson_pred_pbf_vs_pred_smm
        out["pearson_actual_pbf_vs_actual_smm"] = self.pearson_actual_pbf_vs_actual_smm
        return out

    def to_json(self):
        return json.dumps(self.to_flat(), indent=2, sort_keys=True)


def _safe_pearson(x, y):
    try:
        return pearson(x, y)
    except MetricsError:
        return math.nan


def evaluate_predictions(actual, predicted):
    """EvalReport from (n, 2) arrays of (pbf, smm)."""
    actual = np.asarray(actual, dtype=np.float64).reshape(-1, 2)
    predicted = np.asarray(predicted, dtype=np.float64).reshape(-1, 2)
    tasks = []
    for j in range(2):
        e = errors(actual[:, j], predicted[:, j])
        sd = error_sd(e) if len(e) >= 2 else 0.0
        tasks.append(TaskReport(mae(e), sd, _safe_pearson(predicted[:, j], actual[:, j])))
    return EvalReport(
        len(actual),
        tasks[0],
        tasks[1],
        _safe_pearson(predicted[:, 0], predicted[:, 1]),
        _safe_pearson(actual[:, 0], actual[:, 1]),
    )


def density_table(errs, n_bins):
    """Histogram rows (bin_center, count, density); density integrates to 1."""
    e = np.asarray(errs, dtype=np.float64)
    if e.size == 0:
        raise MetricsError("density of an empty error vector")
    if n_bins < 1:
        raise MetricsError("n_bins must be >= 1")
    lo, hi = float(e.min()), float(e.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    counts, edges = np.histogram(e, bins=n_bins, range=(lo, hi))
    width = edges[1] - edges[0]
    centers = (edges[:-1] + edges[1:]) / 2.0
    density = counts / (e.size * width)
    return centers, counts, density, width


def export_density(errs, n_bins, path):
    centers, counts, density, _ = density_table(errs, n_bins)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bin_center", "count", "density"])
        for c, n, d in zip(centers, counts, density):
            w.writerow([repr(float(c)), int(n), repr(float(d))])


def age_group(age):
    """Decade floor: 34 -> 30."""
    return int(age) // 10 * 10


def export_scatter(actual, predicted, ages, path):
    actual = np.asarray(actual, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if not len(actual) == len(predicted) == len(ages):
        raise MetricsError("scatter inputs must have equal lengths")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["actual", "predicted", "age_group"])
        for a, p, g in zip(actual, predicted, ages):
            w.writerow([repr(float(a)), repr(float(p)), age_group(g)])
