"""End-to-end steps shared by the command line and the acceptance suite.

Every step takes a RunConfig, writes its outputs plus the effective config
into its output directory, and returns the in-memory results.
"""

import csv
import dataclasses
import json
import os

import numpy as np

from .baselines import KINDS, BaselineError, feature_matrix, fit_baseline
from .dataset import load_dataset, split_dataset
from .imageio import write_image
from .metrics import evaluate_predictions, export_density, export_scatter
from .nnet import init_model, predict_batch, save_model, train
from .preprocess import QUARTER_NAMES, STRUCTURED_NAMES, NormStats, PreprocessConfig, build_sample, build_samples
from .synthetic import generate_synthetic

CONFIG_NAME = "config.json"
SUMMARY_FIELDS = ("age", "height", "weight", "smm", "pbf")


def write_json(obj, path):
    with open(path, "w") as fh:
        fh.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def echo_config(cfg, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    write_json(cfg.to_dict(), os.path.join(out_dir, CONFIG_NAME))


def summary_stats(records):
    """Pooled mean/SD (sample SD) per field plus the male fraction."""
    out = {"n": len(records)}
    for name in SUMMARY_FIELDS:
        v = np.array([float(getattr(r, name)) for r in records])
        out[f"{name}_mean"] = float(v.mean())
        out[f"{name}_sd"] = float(v.std(ddof=1)) if len(v) > 1 else 0.0
    out["male_fraction"] = float(np.mean([r.is_male for r in records]))
    return out


def run_synth(cfg, out_dir, csv_name="dataset.csv"):
    records = generate_synthetic(cfg.generator, out_dir, csv_name)
    echo_config(cfg, out_dir)
    summary = summary_stats(records)
    write_json(summary, os.path.join(out_dir, "summary.json"))
    return records, summary


def load_split(cfg, csv_path):
    """(train records, validation records, NormStats from train, image root)."""
    records = load_dataset(csv_path)
    if len(records) < 2:
        raise ValueError(f"{csv_path}: need at least 2 records to split, got {len(records)}")
    train_recs, val_recs = split_dataset(records, cfg.split)
    return train_recs, val_recs, NormStats.from_records(train_recs), os.path.dirname(os.path.abspath(csv_path))


def write_history(history, path):
    names = [f.name for f in dataclasses.fields(history[0])] if history else ["epoch"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for rec in history:
            w.writerow([repr(getattr(rec, n)) for n in names])


def run_train(cfg, csv_path, out_dir, progress=None):
    """Split, preprocess, train; writes the model file and history.csv."""
    if cfg.model.image_side != cfg.preprocess.image_side:
        raise ValueError(
            f"model.image_side ({cfg.model.image_side}) must equal preprocess.image_side ({cfg.preprocess.image_side})"
        )
    train_recs, val_recs, stats, root = load_split(cfg, csv_path)
    train_set = build_samples(train_recs, stats, cfg.preprocess, root)
    val_set = build_samples(val_recs, stats, cfg.preprocess, root)
    model = init_model(cfg.model, cfg.train.seed, stats)
    model.preprocess = dataclasses.asdict(cfg.preprocess)
    model, history = train(model, train_set, val_set, cfg.train, cfg.preprocess, progress=progress)
    echo_config(cfg, out_dir)
    save_model(model, os.path.join(out_dir, cfg.paths.model_file))
    write_history(history, os.path.join(out_dir, "history.csv"))
    return model, history


def model_preprocess_config(model):
    if model.preprocess:
        return PreprocessConfig(**model.preprocess)
    return PreprocessConfig(image_side=model.arch.image_side)


def run_evaluate(model, cfg, csv_path, out_dir, subset="val", n_bins=20, workers=1):
    """Predict on the validation split (or ``subset="all"`` records) and write
    report.json plus density_/scatter_ CSVs for both tasks."""
    if subset == "val":
        _, records, _, root = load_split(cfg, csv_path)
    elif subset == "all":
        records = load_dataset(csv_path)
        root = os.path.dirname(os.path.abspath(csv_path))
    else:
        raise ValueError(f"subset must be 'val' or 'all', got {subset!r}")
    pp = model_preprocess_config(model)
    if pp.image_side != model.arch.image_side:
        raise ValueError(f"model expects {model.arch.image_side}px inputs, preprocess gives {pp.image_side}px")
    samples = build_samples(records, model.norm_stats, pp, root)
    predicted = np.array(predict_batch(model, samples, workers), dtype=np.float64).reshape(-1, 2)
    actual = np.array([s.targets for s in samples], dtype=np.float64).reshape(-1, 2)
    report = evaluate_predictions(actual, predicted)
    os.makedirs(out_dir, exist_ok=True)
    echo_config(cfg, out_dir)
    write_json(report.to_flat(), os.path.join(out_dir, "report.json"))
    ages = [r.age for r in records]
    for j, task in enumerate(("pbf", "smm")):
        export_density(actual[:, j] - predicted[:, j], n_bins, os.path.join(out_dir, f"density_{task}.csv"))
        export_scatter(actual[:, j], predicted[:, j], ages, os.path.join(out_dir, f"scatter_{task}.csv"))
    return report, actual, predicted


def run_baselines(kinds, cfg, csv_path):
    """{kind: {task: {"mae", "sd"}}} for each kind, fit on the configured split."""
    for kind in kinds:
        if kind not in KINDS:
            raise BaselineError(f"unknown baseline kind {kind!r}; valid kinds: {', '.join(KINDS)}")
    train_recs, val_recs, stats, _ = load_split(cfg, csv_path)
    out = {}
    for kind in kinds:
        out[kind] = {}
        for task in ("pbf", "smm"):
            model = fit_baseline(kind, feature_matrix(train_recs, stats, task), **cfg.baselines[kind])
            val = feature_matrix(val_recs, stats, task)
            err = val.y - model.predict(val.X)
            out[kind][task] = {
                "mae": float(np.mean(np.abs(err))),
                "sd": float(np.std(err, ddof=1)) if len(err) > 1 else 0.0,
            }
    return out


def run_preprocess(cfg, csv_path, out_dir):
    """Write each record's five network images (PGM) and structured.csv.

    Standardization statistics come from the training split, as in training.
    """
    train_recs, val_recs, stats, root = load_split(cfg, csv_path)
    in_train = {r.id for r in train_recs}
    records = load_dataset(csv_path)
    img_dir = os.path.join(out_dir, "images")
    os.makedirs(img_dir, exist_ok=True)
    echo_config(cfg, out_dir)
    rows = []
    for rec in records:
        s = build_sample(rec, stats, cfg.preprocess, root)
        for name, img in zip(("full", *QUARTER_NAMES), s.images):
            write_image(img, os.path.join(img_dir, f"{s.id}_{name.lower()}.pgm"))
        rows.append([s.id, "train" if s.id in in_train else "val", *map(repr, map(float, s.structured)),
                     repr(s.targets[0]), repr(s.targets[1])])
    with open(os.path.join(out_dir, "structured.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "split", *STRUCTURED_NAMES, "pbf", "smm"])
        w.writerows(rows)
    return len(rows)
