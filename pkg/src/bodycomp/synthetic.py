"""Synthetic subjects with rendered faces, calibrated to a Japanese adult cohort.

Each subject draws its structured data, targets and face from its own
substream keyed by (seed, index).  PBF contains a latent residual ``u`` that is
independent of height, gender, age and weight; the rendered face encodes
``bmi_z + u / sigma_u`` through its width-to-height ratio and jaw curvature,
so only a model that looks at the face can recover it.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import SubjectRecord, write_chin_points, write_dataset
from .imageio import Image, write_image
from .rng import substream

N_CHIN_POINTS = 15
CHIN_BOTTOM = 0.95  # jaw apex in face-local units (face half-height = 1)
DETECTOR_SIDE = 1.9  # square detector box side in face half-heights
DEFAULT_MARGIN = 0.30


@dataclass
class Calibration:
    male_fraction: float = 0.51
    age_mean: float = 40.4
    age_sd: float = 12.9
    age_min: float = 7.0
    age_max: float = 84.0
    height_mean_male: float = 171.5
    height_mean_female: float = 159.0
    height_sd: float = 7.0
    bmi_median_male: float = 23.3
    bmi_median_female: float = 22.0
    bmi_sigma_log: float = 0.21
    bmi_z_limit: float = 3.5
    # smm = w*weight + h*(height-160) + male*is_male + intercept + N(0, sd0 + sd_w*weight)
    smm_weight: float = 0.28
    smm_height: float = 0.25
    smm_male: float = 5.0
    smm_intercept: float = 4.0
    smm_noise_sd0: float = 0.8
    smm_noise_sd_weight: float = 0.02
    # pbf = b*(bmi-22) + f*is_female + a*(age-40) + intercept + u + N(0, noise)
    pbf_bmi: float = 1.0
    pbf_female: float = 9.0
    pbf_age: float = 0.08
    pbf_intercept: float = 19.4
    pbf_noise_sd: float = 1.0
    pbf_latent_sd: float = 3.0
    pbf_min: float = 3.0
    pbf_max: float = 55.0


@dataclass
class GeneratorConfig:
    n_subjects: int = 1000
    seed: int = 20220101
    image_side: int = 256
    adiposity_face_gain: float = 1.0
    race: str = "JP"
    workers: int = 1
    calibration: Calibration = field(default_factory=Calibration)

    def __post_init__(self):
        if isinstance(self.calibration, dict):
            self.calibration = Calibration(**self.calibration)
        if self.n_subjects < 1:
            raise ValueError(f"n_subjects must be >= 1, got {self.n_subjects}")
        if self.image_side < 64:
            raise ValueError(f"image_side must be >= 64, got {self.image_side}")


@dataclass
class Subject:
    """Everything drawn for one subject, including generator-internal latents."""

    index: int
    is_male: bool
    age: int
    height: float
    weight: float
    bmi: float
    bmi_z: float
    smm: float
    pbf: float
    latent: float  # u, the PBF residual visible only in the face


@dataclass
class FaceGeometry:
    """Analytic face description in pixel units; y grows downwards."""

    cx: float
    cy: float
    half_height: float
    width_ratio: float
    jaw_c0: float
    jaw_c2: float  # jaw: y_local = jaw_c0 + jaw_c2 * x_local**2, local units = half_height
    jaw_extent: float  # |x_local| range where the jaw is the visible face edge

    def jaw_y(self, x):
        xl = (np.asarray(x, dtype=np.float64) - self.cx) / self.half_height
        return self.cy + (self.jaw_c0 + self.jaw_c2 * xl * xl) * self.half_height


def _truncated_normal(rng, mean, sd, lo, hi):
    while True:
        v = rng.normal(mean, sd)
        if lo <= v <= hi:
            return v


def draw_subject(rng, index, cal):
    is_male = bool(rng.random() < cal.male_fraction)
    age = int(round(_truncated_normal(rng, cal.age_mean, cal.age_sd, cal.age_min, cal.age_max)))
    height = rng.normal(cal.height_mean_male if is_male else cal.height_mean_female, cal.height_sd)
    bmi_z = float(np.clip(rng.normal(), -cal.bmi_z_limit, cal.bmi_z_limit))
    bmi = (cal.bmi_median_male if is_male else cal.bmi_median_female) * math.exp(cal.bmi_sigma_log * bmi_z)
    height = round(height, 1)
    weight = round(bmi * (height / 100.0) ** 2, 1)
    male = 1.0 if is_male else 0.0
    smm_sd = cal.smm_noise_sd0 + cal.smm_noise_sd_weight * weight
    smm = (
        cal.smm_weight * weight
        + cal.smm_height * (height - 160.0)
        + cal.smm_male * male
        + cal.smm_intercept
        + rng.normal(0.0, smm_sd)
    )
    smm = round(min(max(smm, 0.1 * weight), 0.6 * weight), 1)
    latent = rng.normal(0.0, cal.pbf_latent_sd)
    pbf = (
        cal.pbf_bmi * (bmi - 22.0)
        + cal.pbf_female * (1.0 - male)
        + cal.pbf_age * (age - 40.0)
        + cal.pbf_intercept
        + latent
        + rng.normal(0.0, cal.pbf_noise_sd)
    )
    pbf = round(min(max(pbf, cal.pbf_min), cal.pbf_max), 1)
    return Subject(index, is_male, age, height, weight, bmi, bmi_z, smm, pbf, latent)


def adiposity_score(subject, cal):
    return subject.bmi_z + subject.latent / cal.pbf_latent_sd


def _jaw_extent(width_ratio, c0, c2):
    """Largest |x| such that the jaw curve stays inside the head ellipse."""

    def inside(x):
        y = c0 + c2 * x * x
        return (x / width_ratio) ** 2 + y * y <= 1.0

    lo, hi = 0.0, width_ratio
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if inside(mid):
            lo = mid
        else:
            hi = mid
    return lo


def face_geometry(rng, side, adiposity, gain):
    cx = side / 2.0 + rng.normal(0.0, 0.015 * side)
    cy = 0.44 * side + rng.normal(0.0, 0.015 * side)
    half_height = 0.26 * side * (1.0 + rng.normal(0.0, 0.03))
    width_ratio = 0.72 + 0.035 * adiposity * gain
    width_ratio = min(max(width_ratio, 0.55), 0.9)
    curvature = 1.4 - 0.3 * adiposity * gain
    curvature = min(max(curvature, 0.4), 2.4)
    c2 = -curvature
    extent = _jaw_extent(width_ratio, CHIN_BOTTOM, c2)
    return FaceGeometry(cx, cy, half_height, width_ratio, CHIN_BOTTOM, c2, extent)


def detector_bbox(rng, geom, side, margin=DEFAULT_MARGIN):
    """Square face box as a detector would report it, kept inside the frame
    even after the chin-biased margin expansion."""
    box = DETECTOR_SIDE * geom.half_height * (1.0 + rng.normal(0.0, 0.02))
    bx = geom.cx - box / 2.0 + rng.normal(0.0, 0.01 * box)
    by = geom.cy + 0.05 * geom.half_height - box / 2.0 + rng.normal(0.0, 0.01 * box)
    w = h = max(int(round(box)), 1)
    x, y = int(round(bx)), int(round(by))
    grow_x = margin * w / 2.0
    top, bottom = margin * h / 3.0, 2.0 * margin * h / 3.0
    x = min(max(x, math.ceil(grow_x)), side - w - math.ceil(grow_x))
    y = min(max(y, math.ceil(top)), side - h - math.ceil(bottom))
    return (x, y, w, h)


def render_face(rng, geom, side):
    """RGB face: background, neck, head with jaw, eyes and mouth, speckle."""
    bg = rng.uniform(60, 200, size=3)
    skin = np.array([205.0, 160.0, 135.0]) + rng.normal(0.0, 12.0, size=3)
    ys, xs = np.mgrid[0:side, 0:side].astype(np.float64)
    xl = (xs - geom.cx) / geom.half_height
    yl = (ys - geom.cy) / geom.half_height
    img = np.empty((side, side, 3), dtype=np.float64)
    img[:] = bg
    neck = (np.abs(xl) <= 0.42 * geom.width_ratio) & (yl >= 0.5)
    img[neck] = skin * 0.8
    head = ((xl / geom.width_ratio) ** 2 + yl * yl <= 1.0) & (yl <= geom.jaw_c0 + geom.jaw_c2 * xl * xl)
    img[head] = skin
    for ex in (-0.35, 0.35):
        eye = ((xl - ex * geom.width_ratio) / 0.12) ** 2 + ((yl + 0.15) / 0.06) ** 2 <= 1.0
        img[eye] = (40.0, 30.0, 30.0)
    mouth = (np.abs(xl) <= 0.25 * geom.width_ratio) & (np.abs(yl - 0.45) <= 0.035)
    img[mouth] = skin * 0.6
    img += rng.normal(0.0, 4.0, size=img.shape)
    return Image.from_array(np.clip(np.floor(img + 0.5), 0, 255).astype(np.uint8))


def chin_points(geom, n=N_CHIN_POINTS):
    xl = np.linspace(-0.9 * geom.jaw_extent, 0.9 * geom.jaw_extent, n)
    x = geom.cx + xl * geom.half_height
    y = geom.cy + (geom.jaw_c0 + geom.jaw_c2 * xl * xl) * geom.half_height
    return [(round(float(a), 4), round(float(b), 4)) for a, b in zip(x, y)]


def make_subject(config, index):
    """Draw subject ``index``; returns (Subject, FaceGeometry, Image, bbox, chin points)."""
    rng = substream(config.seed, index)
    cal = config.calibration
    subj = draw_subject(rng, index, cal)
    geom = face_geometry(rng, config.image_side, adiposity_score(subj, cal), config.adiposity_face_gain)
    bbox = detector_bbox(rng, geom, config.image_side)
    img = render_face(rng, geom, config.image_side)
    return subj, geom, img, bbox, chin_points(geom)


def subject_id(index):
    return f"s{index:06d}"


def generate_synthetic(config, out_dir, csv_name="dataset.csv"):
    """Write images, chin-point files and the dataset CSV under ``out_dir``.

    Returns the list of SubjectRecords; paths in them are relative to out_dir.
    """
    os.makedirs(os.path.join(out_dir, "images"), exist_ok=True)
    os.makedirs(os.path.join(out_dir, "chin"), exist_ok=True)

    def one(index):
        subj, _, img, bbox, pts = make_subject(config, index)
        sid = subject_id(index)
        image_rel = f"images/{sid}.ppm"
        chin_rel = f"chin/{sid}.txt"
        write_image(img, os.path.join(out_dir, image_rel))
        write_chin_points(pts, os.path.join(out_dir, chin_rel))
        return SubjectRecord(
            id=sid,
            race=config.race,
            gender="male" if subj.is_male else "female",
            age=subj.age,
            height=subj.height,
            weight=subj.weight,
            smm=subj.smm,
            pbf=subj.pbf,
            image_path=image_rel,
            face_bbox=bbox,
            chin_points_path=chin_rel,
        )

    indices = range(config.n_subjects)
    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            records = list(pool.map(one, indices))
    else:
        records = [one(i) for i in indices]
    write_dataset(records, os.path.join(out_dir, csv_name))
    return records


def draw_population(config):
    """Structured draws only (no rendering or I/O); same values as generate_synthetic."""
    return [draw_subject(substream(config.seed, i), i, config.calibration) for i in range(config.n_subjects)]
