"""Face preprocessing: margin expansion, crop, grayscale, resize, quarter split,
training-time augmentation and the structured feature vector."""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .chinfit import DEFAULT_DEGREE, fit_polynomial, normalize_points
from .dataset import load_chin_points, resolve_path
from .imageio import Image, read_image

QUARTER_NAMES = ("UL", "UR", "LL", "LR")
STRUCTURED_NAMES = ("height_z", "gender", "age_z", "weight_z", "chin_c0", "chin_c1", "chin_c2")


class PreprocessError(ValueError):
    pass


def _round_half_up(v):
    return int(math.floor(v + 0.5))


@dataclass(frozen=True)
class BBox:
    x: int
    y: int
    w: int
    h: int

    def clamp_to(self, img_w, img_h):
        x0, y0 = max(self.x, 0), max(self.y, 0)
        x1, y1 = min(self.x + self.w, img_w), min(self.y + self.h, img_h)
        if x1 <= x0 or y1 <= y0:
            raise PreprocessError(f"bbox {self} does not overlap a {img_w}x{img_h} image")
        return BBox(x0, y0, x1 - x0, y1 - y0)

    def contains(self, other):
        return (
            self.x <= other.x
            and self.y <= other.y
            and other.x + other.w <= self.x + self.w
            and other.y + other.h <= self.y + self.h
        )

    def as_tuple(self):
        return (self.x, self.y, self.w, self.h)


def expand_bbox(b, margin, img_w, img_h, clamp=True):
    """Grow ``b`` by ``margin`` of its size: half per side horizontally,
    one third above and two thirds below (room for the neck)."""
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    grow_w, grow_h = margin * b.w, margin * b.h
    x0 = _round_half_up(b.x - grow_w / 2.0)
    x1 = _round_half_up(b.x + b.w + grow_w / 2.0)
    y0 = _round_half_up(b.y - grow_h / 3.0)
    y1 = _round_half_up(b.y + b.h + 2.0 * grow_h / 3.0)
    out = BBox(x0, y0, x1 - x0, y1 - y0)
    return out.clamp_to(img_w, img_h) if clamp else out


def to_grayscale(img):
    if img.channels != 3:
        raise PreprocessError(f"to_grayscale expects an RGB image, got {img.channels} channel(s)")
    px = img.pixels.astype(np.float64)
    luma = 0.299 * px[:, :, 0] + 0.587 * px[:, :, 1] + 0.114 * px[:, :, 2]
    return Image.from_array(np.clip(np.floor(luma + 0.5), 0, 255).astype(np.uint8))


def crop(img, b):
    if b.w < 1 or b.h < 1 or b.x < 0 or b.y < 0 or b.x + b.w > img.width or b.y + b.h > img.height:
        raise PreprocessError(f"crop box {b.as_tuple()} outside {img.width}x{img.height} image")
    return Image.from_array(img.pixels[b.y:b.y + b.h, b.x:b.x + b.w].copy())


def resize(img, out_w, out_h):
    """Bilinear resize with half-pixel centres and border clamping."""
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output size must be >= 1, got {out_w}x{out_h}")
    if (out_w, out_h) == (img.width, img.height):
        return Image.from_array(img.pixels.copy())
    return Image.from_array(kernels.resize_bilinear(img.pixels, out_h, out_w))


def quarter_split(face, out_side):
    """Cut UL, UR, LL, LR quadrants and resize each to out_side x out_side."""
    if face.width != face.height:
        raise PreprocessError(f"face must be square, got {face.width}x{face.height}")
    side = face.width
    if side % 2:
        raise PreprocessError(f"face side must be even, got {side}")
    half = side // 2
    boxes = [BBox(0, 0, half, half), BBox(half, 0, half, half), BBox(0, half, half, half), BBox(half, half, half, half)]
    return [resize(crop(face, b), out_side, out_side) for b in boxes]


def rotate_image(img, angle_deg):
    """Rotate a gray image about its centre (bilinear, border replication); float output."""
    return kernels.rotate_bilinear(np.ascontiguousarray(img.array, dtype=np.float64), math.radians(angle_deg))


def augment_image(img, rng, max_deg=8.0, noise_sd=5.0, angle=None):
    """Random slight rotation then additive gaussian pixel noise.

    ``angle`` (degrees) overrides the random draw; the uniform draw is still
    consumed so the noise stream does not shift.
    """
    if img.channels != 1:
        raise PreprocessError("augment_image expects a grayscale image")
    draw = rng.uniform(-max_deg, max_deg) if max_deg > 0 else 0.0
    deg = draw if angle is None else angle
    out = rotate_image(img, deg) if deg != 0.0 else img.array.astype(np.float64)
    if noise_sd > 0:
        out = out + rng.normal(0.0, noise_sd, size=out.shape)
    return Image.from_array(np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8))


def augment_structured(height, weight, rng, rel_sd=0.01):
    if rel_sd <= 0:
        return height, weight
    h = max(height * (1.0 + rng.normal(0.0, rel_sd)), 1.0)
    w = max(weight * (1.0 + rng.normal(0.0, rel_sd)), 1.0)
    return h, w


@dataclass(frozen=True)
class NormStats:
    height_mean: float
    height_sd: float
    age_mean: float
    age_sd: float
    weight_mean: float
    weight_sd: float

    def __post_init__(self):
        for name in ("height_sd", "age_sd", "weight_sd"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    @classmethod
    def from_records(cls, records):
        """Mean and population SD (ddof=0) of height, age and weight."""
        h = np.array([r.height for r in records], dtype=np.float64)
        a = np.array([r.age for r in records], dtype=np.float64)
        w = np.array([r.weight for r in records], dtype=np.float64)
        return cls(h.mean(), h.std(), a.mean(), a.std(), w.mean(), w.std())

    def to_dict(self):
        return dict(self.__dict__)


@dataclass
class PreprocessConfig:
    margin: float = 0.30
    image_side: int = 128
    max_rotation_deg: float = 8.0
    pixel_noise_sd: float = 5.0
    structured_rel_sd: float = 0.01
    chin_degree: int = DEFAULT_DEGREE

    def __post_init__(self):
        if self.image_side < 2 or self.image_side % 2:
            raise ValueError(f"image_side must be an even number >= 2, got {self.image_side}")


@dataclass
class PreprocessedSample:
    id: str
    full_face: Image
    quarters: list  # [UL, UR, LL, LR]
    structured: np.ndarray  # STRUCTURED_NAMES order
    targets: tuple  # (pbf, smm)
    # raw values kept for structured augmentation
    height: float
    weight: float
    age: float

    @property
    def images(self):
        return [self.full_face, *self.quarters]


def structured_vector(height, is_male, age, weight, chin_coefs, stats):
    return np.array(
        [
            (height - stats.height_mean) / stats.height_sd,
            is_male,
            (age - stats.age_mean) / stats.age_sd,
            (weight - stats.weight_mean) / stats.weight_sd,
            *chin_coefs,
        ],
        dtype=np.float64,
    )


def face_crop(rec, img, margin):
    """Expanded face box for ``rec`` on ``img`` (validated against the image)."""
    b = BBox(*rec.face_bbox)
    if b.x + b.w > img.width or b.y + b.h > img.height:
        raise PreprocessError(f"{rec.id}: face bbox {b.as_tuple()} outside {img.width}x{img.height} image")
    return expand_bbox(b, margin, img.width, img.height)


def chin_coefficients(points, box, degree):
    fit = fit_polynomial(normalize_points(points, box), degree)
    coefs = list(fit.coefficients)
    # the structured vector always carries c0, c1, c2
    return (coefs + [0.0, 0.0, 0.0])[:3]


def build_sample(rec, stats, cfg=PreprocessConfig(), root="."):
    """Run the full pipeline for one record; no augmentation."""
    image_path = resolve_path(rec.image_path, root)
    try:
        img = read_image(image_path)
    except FileNotFoundError:
        raise PreprocessError(f"{rec.id}: image not found: {image_path}") from None
    box = face_crop(rec, img, cfg.margin)
    face = crop(img, box)
    if face.channels == 3:
        face = to_grayscale(face)
    face = resize(face, cfg.image_side, cfg.image_side)
    quarters = quarter_split(face, cfg.image_side)
    chin_path = resolve_path(rec.chin_points_path, root)
    try:
        points = load_chin_points(chin_path)
    except FileNotFoundError:
        raise PreprocessError(f"{rec.id}: chin points not found: {chin_path}") from None
    coefs = chin_coefficients(points, box, cfg.chin_degree)
    vec = structured_vector(rec.height, rec.is_male, rec.age, rec.weight, coefs, stats)
    return PreprocessedSample(rec.id, face, quarters, vec, (rec.pbf, rec.smm), rec.height, rec.weight, rec.age)


def build_samples(records, stats, cfg=PreprocessConfig(), root="."):
    return [build_sample(r, stats, cfg, root) for r in records]


def augment_sample(sample, stats, cfg, rng):
    """Augmented copy: the face is rotated/noised and the quarters re-cut from it;
    height and weight are jittered and re-standardized."""
    face = augment_image(sample.full_face, rng, cfg.max_rotation_deg, cfg.pixel_noise_sd)
    quarters = quarter_split(face, cfg.image_side)
    h, w = augment_structured(sample.height, sample.weight, rng, cfg.structured_rel_sd)
    vec = sample.structured.copy()
    vec[0] = (h - stats.height_mean) / stats.height_sd
    vec[3] = (w - stats.weight_mean) / stats.weight_sd
    return PreprocessedSample(sample.id, face, quarters, vec, sample.targets, h, w, sample.age)
