"""Knowledge acquisition over a sample corpus and the knowledge package file.

Package file layout (all integers little-endian)::

    b"MGIC"            magic
    u8   version       (1)
    u16  bdim
    u32  pattern dictionary size
    u64  pattern seed
    u8   cb
    u16  grid divisor
    u8   entropy radius
    u8[3 * 2**cb]      color dictionary, RGB triples
    model              u8 layer count L, u32[L+1] sizes, then per layer
                       f32 weights (out x in, row-major) and f32 biases
    u32  CRC-32 of everything above
"""
from __future__ import annotations

import logging
import math
import os
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import features, geometry, imageio
from .dictionaries import (ColorDictionary, PatternDictionary, avg_colors,
                           gen_pattern_dict, kmeans_palette)
from .predictor import (DEFAULT_HIDDEN, PredictorModel, TrainingDivergedError,
                        init_model, train)

log = logging.getLogger(__name__)

MAGIC = b"MGIC"
VERSION = 1
_HEAD = struct.Struct("<4sBHIQBHB")


class PackageFormatError(ValueError):
    """Corrupt, truncated or incompatible knowledge package file."""


class AcquisitionError(ValueError):
    pass


@dataclass
class AcquisitionParams:
    bdim: int = 64
    iter_limit: int = 10
    pw: int = 8
    th: float = 5.0
    cb: int = 8
    grid_divisor: int = 20
    dict_size: int = 4096
    entropy_radius: int = features.ENTROPY_RADIUS
    hidden: tuple = DEFAULT_HIDDEN
    epochs: int = 100
    lr: float = 0.01
    kmeans_iters: int = 100
    pattern_seed: int = 0x4D41474943
    kmeans_seed: int = 1
    train_seed: int = 2

    def __post_init__(self):
        for name in ("bdim", "iter_limit", "pw", "cb", "grid_divisor", "dict_size",
                     "entropy_radius", "epochs", "kmeans_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.th <= 0 or self.lr <= 0:
            raise ValueError("th and lr must be positive")
        if self.cb > 24:
            raise ValueError("cb must be <= 24")
        if self.dict_size & (self.dict_size - 1):
            raise ValueError("dict_size must be a power of two")


@dataclass(eq=False)
class KnowledgePackage:
    """Everything both endpoints need; the model is only used by the encoder."""

    pattern_dict: PatternDictionary
    color_dict: ColorDictionary
    model: PredictorModel
    grid_divisor: int = 20
    entropy_radius: int = features.ENTROPY_RADIUS
    version: int = VERSION

    def __post_init__(self):
        if self.model.sizes[0] != self.pattern_dict.bdim ** 2 or self.model.sizes[-1] != 1:
            raise ValueError("model input must be bdim^2 wide with one output")

    @property
    def bdim(self) -> int:
        return self.pattern_dict.bdim

    @property
    def cb(self) -> int:
        return self.color_dict.cb

    @property
    def dict_size(self) -> int:
        return self.pattern_dict.size

    def default_grid(self, rows: int, cols: int) -> int:
        return max(1, math.ceil((rows + cols) / self.grid_divisor))

    def to_bytes(self) -> bytes:
        pd = self.pattern_dict
        body = (_HEAD.pack(MAGIC, self.version, pd.bdim, pd.size, pd.seed, self.cb,
                           self.grid_divisor, self.entropy_radius)
                + self.color_dict.entries.tobytes()
                + self.model.to_bytes())
        return body + struct.pack("<I", zlib.crc32(body))

    @classmethod
    def from_bytes(cls, data: bytes) -> "KnowledgePackage":
        if len(data) < 4 or data[:4] != MAGIC:
            raise PackageFormatError("not a knowledge package (bad magic bytes)")
        if len(data) < _HEAD.size + 4:
            raise PackageFormatError("truncated knowledge package")
        _, version, bdim, size, seed, cb, grid_div, radius = _HEAD.unpack_from(data, 0)
        if version != VERSION:
            raise PackageFormatError(f"unsupported package version {version}")
        (crc,) = struct.unpack_from("<I", data, len(data) - 4)
        if zlib.crc32(data[:-4]) != crc:
            raise PackageFormatError("knowledge package is corrupt or truncated (CRC mismatch)")
        off = _HEAD.size
        ncol = 3 << cb
        colors = np.frombuffer(data, np.uint8, ncol, off)
        off += ncol
        try:
            model, off = PredictorModel.from_bytes(data, off)
        except (ValueError, struct.error) as exc:
            raise PackageFormatError(f"bad model section: {exc}") from exc
        if off != len(data) - 4:
            raise PackageFormatError("unexpected trailing bytes in package")
        return cls(pattern_dict=gen_pattern_dict(bdim, size, seed),
                   color_dict=ColorDictionary(cb=cb, entries=colors),
                   model=model, grid_divisor=grid_div, entropy_radius=radius,
                   version=version)


def save_package(kp: KnowledgePackage, path) -> None:
    with open(path, "wb") as fh:
        fh.write(kp.to_bytes())


def load_package(path) -> KnowledgePackage:
    with open(path, "rb") as fh:
        return KnowledgePackage.from_bytes(fh.read())


# ---------------------------------------------------------------------------
# Acquisition
# ---------------------------------------------------------------------------

@dataclass
class ImageKnowledge:
    """What one sample image contributes: triangle colors and block samples."""

    colors: np.ndarray      # (T, 3) average triangle colors
    features: np.ndarray    # (B, bdim^2)
    labels: np.ndarray      # (B,)
    points: np.ndarray = field(repr=False, default=None)


def sample_grid(rows: int, cols: int, p: AcquisitionParams) -> np.ndarray:
    return geometry.grid_spray(rows, cols, max(1, math.ceil((rows + cols) / p.grid_divisor)))


def segment_points(gray: np.ndarray, p: AcquisitionParams) -> np.ndarray:
    """Heuristic point set: grid + edges, refined by splitting, then pruned."""
    rows, cols = gray.shape
    pts = geometry.as_point_set(np.concatenate([sample_grid(rows, cols, p),
                                                features.edge_points(gray)]))
    for _ in range(p.iter_limit):
        tess = geometry.delaunay(pts)
        new = geometry.split_all(tess, gray, p.th)
        merged = geometry.as_point_set(np.concatenate([pts, new]))
        if len(merged) == len(pts):
            break
        pts = merged
    return geometry.prune_points(pts, p.pw, rows, cols)


def block_labels(points: np.ndarray, rows: int, cols: int, bdim: int, dict_size: int) -> np.ndarray:
    """Point count per block in row-major block order, clamped to the dictionary."""
    nbr, nbc = -(-rows // bdim), -(-cols // bdim)
    points = np.asarray(points, dtype=np.int64).reshape(-1, 2)
    block = (points[:, 0] // bdim) * nbc + points[:, 1] // bdim
    counts = np.bincount(block, minlength=nbr * nbc)
    return np.minimum(counts, dict_size - 1)


def _without(points: np.ndarray, drop: np.ndarray) -> np.ndarray:
    key = lambda a: a[:, 0] * (1 << 20) + a[:, 1]
    return points[~np.isin(key(points), key(drop))]


def analyse_image(img: np.ndarray, p: AcquisitionParams) -> ImageKnowledge:
    img = np.asarray(img, dtype=np.uint8)
    rows, cols = img.shape[:2]
    if rows < 2 or cols < 2:
        raise AcquisitionError("sample images must be at least 2x2")
    gray = imageio.to_gray(img)
    grid = sample_grid(rows, cols, p)
    # the encoder always adds the grid, so a label counts only the points beyond it
    pts = _without(segment_points(gray, p), grid)
    # colors come from the same mesh the encoder would build
    tess = geometry.delaunay(np.concatenate([pts, grid]))
    pix, owner = geometry.pixel_owners(*geometry.rasterize(tess.vertices(), rows, cols))
    colors, counts = avg_colors(img, owner, pix, len(tess))
    em = features.local_entropy(gray, p.entropy_radius)
    return ImageKnowledge(colors=colors[counts > 0],
                          features=features.all_block_features(em, p.bdim),
                          labels=block_labels(pts, rows, cols, p.bdim, p.dict_size),
                          points=pts)


def _color_freq(color_lists) -> tuple[np.ndarray, np.ndarray]:
    allc = np.concatenate(color_lists).astype(np.int64)
    packed = (allc[:, 0] << 16) | (allc[:, 1] << 8) | allc[:, 2]
    uniq, counts = np.unique(packed, return_counts=True)
    rgb = np.stack([(uniq >> 16) & 255, (uniq >> 8) & 255, uniq & 255], axis=1)
    return rgb, counts


@dataclass
class TrainingSamples:
    """Pooled per-image knowledge: triangle colors plus block features and labels."""

    colors: list            # per-image (T, 3) arrays
    x: np.ndarray           # (N, bdim^2)
    y: np.ndarray           # (N,)


def collect_samples(images, params: AcquisitionParams | None = None) -> TrainingSamples:
    """Analyse every sample image (paths or RGB arrays) and pool the results."""
    p = params or AcquisitionParams()
    images = list(images)
    if not images:
        raise AcquisitionError("no sample images given")
    colors, xs, ys = [], [], []
    for item in images:
        is_path = isinstance(item, (str, os.PathLike))
        info = analyse_image(imageio.load_image(item) if is_path else item, p)
        log.info("sample %s: %d points, %d blocks", item if is_path else "<array>",
                 len(info.points), len(info.labels))
        colors.append(info.colors)
        xs.append(info.features)
        ys.append(info.labels)
    return TrainingSamples(colors=colors, x=np.concatenate(xs), y=np.concatenate(ys))


def build_package(samples: TrainingSamples, params: AcquisitionParams | None = None) -> KnowledgePackage:
    """Fit the color dictionary and the predictor to pooled samples."""
    p = params or AcquisitionParams()
    if len(samples.x) == 0:
        raise AcquisitionError("no valid blocks in the sample images")
    rgb, counts = _color_freq(samples.colors)
    cd = kmeans_palette(rgb, p.cb, max_iters=p.kmeans_iters, seed=p.kmeans_seed, weights=counts)

    sizes = (p.bdim * p.bdim,) + tuple(p.hidden) + (1,)
    lr = p.lr
    for _ in range(6):
        try:
            model = train(init_model(sizes, p.train_seed), samples.x, samples.y,
                          epochs=p.epochs, lr=lr, seed=p.train_seed, dict_size=p.dict_size)
            break
        except TrainingDivergedError:
            log.warning("training diverged at lr=%g, retrying at lr=%g", lr, lr / 4)
            lr /= 4
    else:
        raise AcquisitionError("predictor training diverged at every learning rate tried")

    return KnowledgePackage(pattern_dict=gen_pattern_dict(p.bdim, p.dict_size, p.pattern_seed),
                            color_dict=cd, model=model, grid_divisor=p.grid_divisor,
                            entropy_radius=p.entropy_radius)


def acquire(images, params: AcquisitionParams | None = None) -> KnowledgePackage:
    """Build a knowledge package from sample images (paths or RGB arrays)."""
    return build_package(collect_samples(images, params), params)
