"""Glyph datasets: class catalog, CSV ingestion, resizing and synthetic glyphs.

On-disk format (the public AHCD layout): a headerless CSV with one image per
row, row-major grayscale values 0..255, plus a one-column CSV of labels
1..28.  Images of any square size are resized to 64x64 on load.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SIZE = 64

# (id, name, glyph) in AHCD label order
CLASS_CATALOG = (
    (1, "alef", "ا"), (2, "baa", "ب"), (3, "taa", "ت"), (4, "thaa", "ث"),
    (5, "gem", "ج"), (6, "haa", "ح"), (7, "khaa", "خ"), (8, "dal", "د"),
    (9, "zal", "ذ"), (10, "raa", "ر"), (11, "zeen", "ز"), (12, "seen", "س"),
    (13, "sheen", "ش"), (14, "saad", "ص"), (15, "daad", "ض"), (16, "taaa", "ط"),
    (17, "zaaa", "ظ"), (18, "aeen", "ع"), (19, "gheen", "غ"), (20, "faa", "ف"),
    (21, "qaf", "ق"), (22, "kaf", "ك"), (23, "lam", "ل"), (24, "mem", "م"),
    (25, "noon", "ن"), (26, "heh", "ه"), (27, "waw", "و"), (28, "yaa", "ي"),
)
N_CLASSES = len(CLASS_CATALOG)
CLASS_NAMES = tuple(name for _, name, _ in CLASS_CATALOG)
CLASS_GLYPHS = tuple(glyph for _, _, glyph in CLASS_CATALOG)
CLASS_IDS = {name: cid for cid, name, _ in CLASS_CATALOG}


class DataFormatError(ValueError):
    """Raised for malformed image or label files."""


def class_name(class_id: int) -> str:
    if not 1 <= class_id <= N_CLASSES:
        raise ValueError(f"class id {class_id} outside 1..{N_CLASSES}")
    return CLASS_NAMES[class_id - 1]


@dataclass(frozen=True)
class GlyphSample:
    image: np.ndarray  # [64, 64] in [0, 1]
    label: int


@dataclass
class Glyphs:
    """A stack of glyph images ``[N,64,64]`` with integer labels ``[N]``."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 3 or self.images.shape[1:] != (SIZE, SIZE):
            raise DataFormatError(f"images must be [N,{SIZE},{SIZE}], got {self.images.shape}")
        if self.labels.shape != (len(self.images),):
            raise DataFormatError(f"{len(self.labels)} labels for {len(self.images)} images")

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, i: int) -> GlyphSample:
        return GlyphSample(self.images[i], int(self.labels[i]))

    def subset(self, index) -> "Glyphs":
        return Glyphs(self.images[index], self.labels[index])

    def counts(self, n_classes: int = N_CLASSES) -> np.ndarray:
        return np.bincount(self.labels, minlength=n_classes + 1)[1:]


@dataclass
class DatasetSplit:
    train: Glyphs
    test: Glyphs


# ---------------------------------------------------------------- resizing

def resize_to_64(image: np.ndarray) -> np.ndarray:
    """Bilinear resize of a square image to 64x64 with corner-aligned sampling."""
    image = np.asarray(image)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise ValueError(f"expected a square 2-d image, got shape {image.shape}")
    s = image.shape[0]
    if s < 2:
        raise ValueError(f"image side must be >= 2, got {s}")
    if s == SIZE:
        return image.copy()
    coords = np.arange(SIZE) * ((s - 1) / (SIZE - 1))
    lo = np.minimum(np.floor(coords).astype(np.int64), s - 2)
    t = (coords - lo).astype(image.dtype)
    rows = image[lo] + t[:, None] * (image[lo + 1] - image[lo])
    out = rows[:, lo] + t[None, :] * (rows[:, lo + 1] - rows[:, lo])
    # a + t*(b - a) can round a hair past b
    return np.clip(out, image.min(), image.max())


# ------------------------------------------------------------------ CSV I/O

def _read_matrix(path, what: str) -> np.ndarray:
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise DataFormatError(f"{path}: unparseable {what}: {exc}") from None
    if not np.all(np.isfinite(data)):
        raise DataFormatError(f"{path}: non-finite {what}")
    return data


def load_images(images_path, invert: bool = False) -> np.ndarray:
    """Read an image CSV into ``[N,64,64]`` float32 pixels in [0,1]."""
    raw = _read_matrix(images_path, "pixel values")
    side = math.isqrt(raw.shape[1])
    if side * side != raw.shape[1]:
        raise DataFormatError(f"{images_path}: {raw.shape[1]} columns is not a perfect square")
    if raw.min() < 0 or raw.max() > 255:
        raise DataFormatError(f"{images_path}: pixel values outside 0..255")
    pixels = raw.reshape(-1, side, side) / 255.0
    if invert:
        pixels = 1.0 - pixels
    if side == SIZE:
        return pixels.astype(np.float32)
    return np.stack([resize_to_64(p) for p in pixels]).astype(np.float32)


def load_csv(images_path, labels_path, invert: bool = False,
             n_classes: int = N_CLASSES) -> Glyphs:
    """Load an image/label CSV pair, scaling pixels to [0,1] and resizing to 64x64."""
    labels = _read_matrix(labels_path, "labels")
    if labels.shape[1] != 1:
        raise DataFormatError(f"{labels_path}: expected one label column, got {labels.shape[1]}")
    labels = labels[:, 0]
    if np.any(labels != np.round(labels)) or labels.min() < 1 or labels.max() > n_classes:
        raise DataFormatError(f"{labels_path}: labels must be integers in 1..{n_classes}")
    images = load_images(images_path, invert)
    if len(labels) != len(images):
        raise DataFormatError(f"{len(images)} image rows but {len(labels)} labels")
    return Glyphs(images, labels.astype(np.int64))


def save_csv(glyphs: Glyphs, images_path, labels_path) -> None:
    """Write glyphs as 0..255 integer pixels (inverse of :func:`load_csv` for 64x64)."""
    pixels = np.rint(glyphs.images.reshape(len(glyphs), -1) * 255).astype(np.int64)
    np.savetxt(images_path, pixels, fmt="%d", delimiter=",")
    np.savetxt(labels_path, glyphs.labels.reshape(-1, 1), fmt="%d")


# file names of the public AHCD CSV release, tried when the plain names are absent
AHCD_FILE_NAMES = {
    "train": ("csvTrainImages 13440x1024.csv", "csvTrainLabel 13440x1.csv"),
    "test": ("csvTestImages 3360x1024.csv", "csvTestLabel 3360x1.csv"),
}


def split_paths(directory, part: str) -> tuple[Path, Path]:
    """Image and label CSV paths of ``part`` ("train" or "test") inside ``directory``."""
    d = Path(directory)
    plain = d / f"{part}_images.csv", d / f"{part}_labels.csv"
    if plain[0].exists() or plain[1].exists():
        return plain
    ahcd = tuple(d / name for name in AHCD_FILE_NAMES[part])
    return ahcd if ahcd[0].exists() and ahcd[1].exists() else plain


def load_split(directory, invert: bool = False) -> DatasetSplit:
    """Load ``{train,test}_{images,labels}.csv`` (or the AHCD release names) from a directory."""
    return DatasetSplit(load_csv(*split_paths(directory, "train"), invert),
                        load_csv(*split_paths(directory, "test"), invert))


def save_split(split: DatasetSplit, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    save_csv(split.train, d / "train_images.csv", d / "train_labels.csv")
    save_csv(split.test, d / "test_images.csv", d / "test_labels.csv")


# ------------------------------------------------------------- synthetic data

def _segment_distance(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / np.maximum(denom, 1e-12), 0.0, 1.0)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _class_skeleton(rng: np.random.Generator):
    """Random stroke polylines and dots in unit coordinates for one class."""
    strokes = []
    for _ in range(rng.integers(1, 3)):
        n_pts = int(rng.integers(3, 6))
        start = rng.uniform(0.2, 0.8, size=2)
        steps = rng.normal(0, 0.22, size=(n_pts - 1, 2))
        pts = np.clip(np.vstack([start, start + np.cumsum(steps, axis=0)]), 0.1, 0.9)
        strokes.append(pts)
    dots = rng.uniform(0.15, 0.85, size=(int(rng.integers(0, 4)), 2))
    return strokes, dots


def render_glyph(strokes, dots, rng: np.random.Generator, jitter: float = 0.02,
                 size: int = SIZE) -> np.ndarray:
    """Rasterize a skeleton with per-sample point jitter, affine wobble and pen width."""
    angle = rng.normal(0, 0.08)
    scale = rng.normal(1.0, 0.05)
    shift = rng.normal(0, 0.025, size=2)
    rot = scale * np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])

    def place(pts):
        pts = pts + rng.normal(0, jitter, size=pts.shape)
        return (pts - 0.5) @ rot.T + 0.5 + shift

    width = rng.uniform(0.025, 0.045)
    ys, xs = np.mgrid[0:size, 0:size]
    px, py = (xs + 0.5) / size, (ys + 0.5) / size
    dist = np.full((size, size), np.inf)
    for pts in strokes:
        p = place(pts)
        for (ax, ay), (bx, by) in zip(p[:-1], p[1:]):
            dist = np.minimum(dist, _segment_distance(px, py, ax, ay, bx, by))
    for cx, cy in place(dots) if len(dots) else []:
        dist = np.minimum(dist, np.hypot(px - cx, py - cy) - 0.6 * width)
    return np.clip(1.5 - dist / width, 0.0, 1.0)


def synth_dataset(seed: int, n_per_class: int, n_classes: int = N_CLASSES) -> DatasetSplit:
    """Deterministic glyph-like images, 80/20 train/test split per class."""
    if n_per_class < 2:
        raise ValueError("n_per_class must be >= 2")
    root = np.random.default_rng(seed)
    skeletons = [_class_skeleton(root) for _ in range(n_classes)]
    n_train = max(1, min(n_per_class - 1, int(0.8 * n_per_class)))
    sample_rng = np.random.default_rng([seed, 1])
    train_x, train_y, test_x, test_y = [], [], [], []
    for cid, (strokes, dots) in enumerate(skeletons, start=1):
        for i in range(n_per_class):
            # quantized to the 8-bit grid so CSV round trips are exact
            img = np.rint(render_glyph(strokes, dots, sample_rng) * 255) / 255
            if i < n_train:
                train_x.append(img)
                train_y.append(cid)
            else:
                test_x.append(img)
                test_y.append(cid)
    return DatasetSplit(
        Glyphs(np.stack(train_x).astype(np.float32), np.array(train_y)),
        Glyphs(np.stack(test_x).astype(np.float32), np.array(test_y)),
    )
