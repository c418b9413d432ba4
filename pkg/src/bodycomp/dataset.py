"""Subject records, dataset CSV I/O and the train/validation split."""

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .rng import make_rng

CSV_FIELDS = (
    "id",
    "race",
    "gender",
    "age",
    "height_cm",
    "weight_kg",
    "smm_kg",
    "pbf_pct",
    "image_path",
    "bbox_x",
    "bbox_y",
    "bbox_w",
    "bbox_h",
    "chin_points_path",
)

_GENDER_CODES = {"M": "male", "F": "female"}
_GENDER_NAMES = {v: k for k, v in _GENDER_CODES.items()}


class DatasetError(ValueError):
    pass


@dataclass(frozen=True)
class SubjectRecord:
    id: str
    race: str
    gender: str  # "male" | "female"
    age: int
    height: float  # cm
    weight: float  # kg
    smm: float  # kg
    pbf: float  # percent
    image_path: str
    face_bbox: tuple  # (x, y, w, h) pixels
    chin_points_path: str

    @property
    def is_male(self):
        return 1.0 if self.gender == "male" else 0.0


def _fail(row, column, msg):
    raise DatasetError(f"row {row}, column {column}: {msg}")


def validate_record(rec, row="?"):
    """Check the per-record invariants; ``row`` is only used in messages."""
    if rec.gender not in _GENDER_NAMES:
        _fail(row, "gender", f"expected male/female, got {rec.gender!r}")
    if not isinstance(rec.age, int) or rec.age < 0:
        _fail(row, "age", f"must be an integer >= 0, got {rec.age!r}")
    for col, val in (("height_cm", rec.height), ("weight_kg", rec.weight), ("smm_kg", rec.smm)):
        if not (math.isfinite(val) and val > 0):
            _fail(row, col, f"must be finite and > 0, got {val!r}")
    if not (math.isfinite(rec.pbf) and 0 < rec.pbf < 100):
        _fail(row, "pbf_pct", f"must lie in (0, 100), got {rec.pbf!r}")
    if not rec.smm < rec.weight:
        _fail(row, "smm_kg", f"smm {rec.smm} must be below weight {rec.weight}")
    x, y, w, h = rec.face_bbox
    if x < 0 or y < 0:
        _fail(row, "bbox_x" if x < 0 else "bbox_y", "bbox origin must be non-negative")
    if w < 1 or h < 1:
        _fail(row, "bbox_w" if w < 1 else "bbox_h", "bbox size must be >= 1")


def _parse_row(row_no, row):
    def get(col, conv, what):
        raw = row[col]
        try:
            return conv(raw)
        except (TypeError, ValueError):
            _fail(row_no, col, f"cannot parse {raw!r} as {what}")

    gender_code = row["gender"]
    if gender_code not in _GENDER_CODES:
        _fail(row_no, "gender", f"expected M or F, got {gender_code!r}")
    rec = SubjectRecord(
        id=row["id"],
        race=row["race"],
        gender=_GENDER_CODES[gender_code],
        age=get("age", int, "integer"),
        height=get("height_cm", float, "float"),
        weight=get("weight_kg", float, "float"),
        smm=get("smm_kg", float, "float"),
        pbf=get("pbf_pct", float, "float"),
        image_path=row["image_path"],
        face_bbox=tuple(get(c, int, "integer") for c in ("bbox_x", "bbox_y", "bbox_w", "bbox_h")),
        chin_points_path=row["chin_points_path"],
    )
    if not rec.id:
        _fail(row_no, "id", "empty id")
    validate_record(rec, row_no)
    return rec


def load_dataset(csv_path):
    """Read a dataset CSV. Rows are numbered from 1 (header excluded) in errors.

    Paths are returned exactly as written; resolve them against the CSV's
    directory with :func:`resolve_path`.
    """
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in CSV_FIELDS if c not in header]
        if missing:
            raise DatasetError(f"{csv_path}: missing column(s) {', '.join(missing)}")
        records = []
        for row_no, row in enumerate(reader, start=1):
            if None in row or any(v is None for v in row.values()):
                raise DatasetError(f"row {row_no}: wrong number of fields")
            records.append(_parse_row(row_no, row))
    return records


def _fmt(x):
    return repr(float(x))


def write_dataset(records, csv_path):
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        for r in records:
            writer.writerow(
                [
                    r.id,
                    r.race,
                    _GENDER_NAMES[r.gender],
                    int(r.age),
                    _fmt(r.height),
                    _fmt(r.weight),
                    _fmt(r.smm),
                    _fmt(r.pbf),
                    r.image_path,
                    *(int(v) for v in r.face_bbox),
                    r.chin_points_path,
                ]
            )


def resolve_path(path, base_dir):
    return path if os.path.isabs(path) else os.path.join(base_dir, path)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def split_indices(n, spec):
    if n < 2:
        raise DatasetError(f"need at least 2 records to split, got {n}")
    n_train = int(math.floor(spec.train_fraction * n + 0.5))
    n_train = min(max(n_train, 1), n - 1)
    perm = make_rng(spec.seed).permutation(n)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def split_dataset(records, spec=SplitSpec()):
    """Random train/validation partition; both parts keep the input order."""
    train_idx, val_idx = split_indices(len(records), spec)
    return [records[i] for i in train_idx], [records[i] for i in val_idx]


def load_chin_points(path):
    points = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            try:
                if len(parts) != 2:
                    raise ValueError
                points.append((float(parts[0]), float(parts[1])))
            except ValueError:
                raise DatasetError(f"{path}, line {line_no}: expected 'x y', got {line.rstrip()!r}")
    if len(points) < 3:
        raise DatasetError(f"{path}: need at least 3 chin points, got {len(points)}")
    return points


def write_chin_points(points, path):
    with open(path, "w") as fh:
        for x, y in points:
            fh.write(f"{x!r} {y!r}\n")
