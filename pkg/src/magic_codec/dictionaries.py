"""Common pattern dictionary and color quantization dictionary."""
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

MASK64 = (1 << 64) - 1


class DegenerateTriangleError(ValueError):
    """A triangle covers no pixel centre, so it has no average color."""


def splitmix64(seed: int):
    """Infinite SplitMix64 stream; fixed so patterns regenerate anywhere."""
    state = seed & MASK64
    while True:
        state = (state + 0x9E3779B97F4A7C15) & MASK64
        z = state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        yield z ^ (z >> 31)


def seeded_permutation(n: int, seed: int, k: int | None = None) -> np.ndarray:
    """First ``k`` (default all) items of a seeded shuffle of ``range(n)``.

    Forward Fisher-Yates driven by SplitMix64, with swaps kept in a dict so
    the cost is O(k) whatever ``n`` is.  Bounded draws use the
    multiply-shift map ``(x * m) >> 64``.
    """
    k = n if k is None else min(k, n)
    moved: dict[int, int] = {}
    rng = splitmix64(seed)
    out = []
    for i in range(k):
        j = i + ((next(rng) * (n - i)) >> 64)
        vi, vj = moved.get(i, i), moved.get(j, j)
        moved[j] = vi
        out.append(vj)
    return np.asarray(out, dtype=np.int64)


@dataclass(frozen=True)
class PatternDictionary:
    """Point-spray patterns for a ``bdim x bdim`` block.

    Entry ``i`` is the first ``min(i, bdim**2)`` cells of one seeded
    permutation, so entries are nested and entry 0 is empty.  Only
    ``(bdim, size, seed)`` need to be stored.
    """

    bdim: int
    size: int
    seed: int

    def __post_init__(self):
        if self.bdim < 1 or self.size < 1:
            raise ValueError("bdim and size must be >= 1")

    @cached_property
    def permutation(self) -> np.ndarray:
        """Block cells in pattern order; only as many as the largest entry uses."""
        return seeded_permutation(self.bdim * self.bdim, self.seed, self.size - 1)

    @cached_property
    def _offsets(self) -> np.ndarray:
        perm = self.permutation
        return np.stack([perm // self.bdim, perm % self.bdim], axis=1)

    @property
    def label_bits(self) -> int:
        return max(1, (self.size - 1).bit_length())

    def entry(self, i: int) -> np.ndarray:
        """Block-relative (row, col) offsets of entry ``i``."""
        if not 0 <= i < self.size:
            raise IndexError(f"pattern label {i} out of range [0, {self.size})")
        return self._offsets[:min(i, self.bdim * self.bdim)]


def gen_pattern_dict(bdim: int, size: int, seed: int) -> PatternDictionary:
    return PatternDictionary(bdim=bdim, size=size, seed=seed)


def pattern_for_block(pd: PatternDictionary, label: int, block_row: int, block_col: int,
                      rows: int, cols: int) -> np.ndarray:
    """Absolute image points of pattern ``label`` placed in a block, clipped to the image."""
    pts = pd.entry(label) + np.array([block_row * pd.bdim, block_col * pd.bdim])
    inside = (pts[:, 0] < rows) & (pts[:, 1] < cols)
    return pts[inside]


def patterns_for_labels(pd: PatternDictionary, labels, rows: int, cols: int) -> np.ndarray:
    """All pattern points for a row-major list of block labels."""
    nbc = -(-cols // pd.bdim)
    chunks = [pattern_for_block(pd, int(lab), b // nbc, b % nbc, rows, cols)
              for b, lab in enumerate(labels) if lab]
    if not chunks:
        return np.zeros((0, 2), dtype=np.int64)
    return np.concatenate(chunks)


# ---------------------------------------------------------------------------
# Color dictionary
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ColorDictionary:
    """``2**cb`` RGB entries; a color is sent as its ``cb``-bit index."""

    cb: int
    entries: np.ndarray
    sse_history: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=np.uint8).reshape(-1, 3)
        if len(entries) != 1 << self.cb:
            raise ValueError(f"color dictionary needs {1 << self.cb} entries, got {len(entries)}")
        object.__setattr__(self, "entries", entries)

    def __eq__(self, other):
        if not isinstance(other, ColorDictionary):
            return NotImplemented
        return self.cb == other.cb and np.array_equal(self.entries, other.entries)

    def __len__(self):
        return len(self.entries)


def _unpack_colors(colors, weights=None):
    if isinstance(colors, Mapping):
        items = sorted((tuple(int(v) for v in k), int(w)) for k, w in colors.items())
        pts = np.array([k for k, _ in items], dtype=np.float64).reshape(-1, 3)
        w = np.array([w for _, w in items], dtype=np.float64)
    else:
        pts = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
        w = np.ones(len(pts)) if weights is None else np.asarray(weights, dtype=np.float64)
    if len(pts) == 0:
        raise ValueError("no colors to cluster")
    if len(w) != len(pts) or (w <= 0).any():
        raise ValueError("weights must be positive and match the colors")
    return pts, w


def _nearest(pts: np.ndarray, centers: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of and squared distance to the nearest center, in bounded chunks."""
    assign = np.empty(len(pts), dtype=np.int64)
    best = np.empty(len(pts))
    step = max(1, (1 << 21) // len(centers))
    for s in range(0, len(pts), step):
        d = ((pts[s:s + step, None, :] - centers[None]) ** 2).sum(axis=2)
        assign[s:s + step] = d.argmin(axis=1)
        best[s:s + step] = d[np.arange(len(d)), assign[s:s + step]]
    return assign, best


def weighted_sse(pts, w, centers) -> float:
    return float((w * _nearest(np.asarray(pts, float), np.asarray(centers, float))[1]).sum())


def kmeans_palette(colors, cb: int, max_iters: int = 100, seed: int = 0,
                   weights=None, tol: float = 0.5) -> ColorDictionary:
    """Weighted k-means (Lloyd) palette of ``2**cb`` colors.

    ``colors`` is a mapping ``{(r, g, b): count}`` or an ``(n, 3)`` array
    with ``weights``.  Seeding is greedy weighted k-means++; iteration stops when
    no centroid moves more than ``tol`` or after ``max_iters`` rounds.
    Empty clusters are moved onto the point with the largest weighted
    squared distance to its centroid.
    """
    if cb < 1:
        raise ValueError("cb must be >= 1")
    pts, w = _unpack_colors(colors, weights)
    k = 1 << cb
    rng = np.random.default_rng(seed)

    # greedy k-means++: of a few D^2-sampled candidates keep the best one
    trials = 2 + int(np.log(k))
    centers = np.empty((k, 3))
    first = rng.choice(len(pts), p=w / w.sum())
    centers[0] = pts[first]
    d2 = ((pts - centers[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        score = w * d2
        total = score.sum()
        if total <= 0:
            centers[j] = pts[0]
            continue
        cand = rng.choice(len(pts), size=trials, p=score / total)
        cd2 = np.minimum(d2[None], ((pts[None] - pts[cand][:, None]) ** 2).sum(axis=2))
        best = int((cd2 * w).sum(axis=1).argmin())
        centers[j] = pts[cand[best]]
        d2 = cd2[best]

    history = []
    for _ in range(max_iters):
        assign, best = _nearest(pts, centers)
        history.append(float((w * best).sum()))
        mass = np.bincount(assign, weights=w, minlength=k)
        sums = np.stack([np.bincount(assign, weights=w * pts[:, c], minlength=k)
                         for c in range(3)], axis=1)
        new = centers.copy()
        filled = mass > 0
        new[filled] = sums[filled] / mass[filled, None]
        if not filled.all():
            far = w * ((pts - new[assign]) ** 2).sum(axis=1)
            for j in np.flatnonzero(~filled):
                i = int(far.argmax())
                new[j] = pts[i]
                far[i] = 0.0
        shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
        centers = new
        if shift <= tol:
            break
    history.append(weighted_sse(pts, w, centers))

    entries = np.clip(np.floor(centers + 0.5), 0, 255).astype(np.uint8)
    return ColorDictionary(cb=cb, entries=entries, sse_history=history)


def quantize_colors(cd: ColorDictionary, rgb) -> np.ndarray:
    """Nearest-entry indices for an ``(n, 3)`` array; ties go to the lower index."""
    rgb = np.asarray(rgb, dtype=np.int64).reshape(-1, 3)
    ent = cd.entries.astype(np.int64)
    out = np.empty(len(rgb), dtype=np.int64)
    step = max(1, (1 << 22) // len(ent))
    for s in range(0, len(rgb), step):
        d = ((rgb[s:s + step, None, :] - ent[None]) ** 2).sum(axis=2)
        out[s:s + step] = d.argmin(axis=1)
    return out


def quantize_color(cd: ColorDictionary, rgb) -> int:
    return int(quantize_colors(cd, rgb)[0])


def avg_triangle_color(img: np.ndarray, pixels) -> tuple[int, int, int]:
    """Per-channel mean of the given flat pixel indices, rounded half-up."""
    pixels = np.asarray(pixels, dtype=np.int64)
    if len(pixels) == 0:
        raise DegenerateTriangleError("triangle covers no pixels")
    vals = np.asarray(img).reshape(-1, 3)[pixels].astype(np.int64)
    n = len(pixels)
    mean = (2 * vals.sum(axis=0) + n) // (2 * n)
    return tuple(int(v) for v in mean)


def avg_colors(img: np.ndarray, tri_ids: np.ndarray, pixels: np.ndarray,
               ntri: int) -> tuple[np.ndarray, np.ndarray]:
    """Rounded mean color of every triangle from rasterized ``(tri_ids, pixels)``.

    Returns ``(colors, counts)``; triangles with zero pixels get color 0.
    """
    flat = np.asarray(img).reshape(-1, 3).astype(np.int64)
    counts = np.bincount(tri_ids, minlength=ntri)
    out = np.zeros((ntri, 3), dtype=np.int64)
    ok = counts > 0
    for c in range(3):
        s = np.bincount(tri_ids, weights=flat[pixels, c], minlength=ntri)
        # weighted bincount returns float64; sums stay far below 2**53
        s = np.rint(s).astype(np.int64)
        out[ok, c] = (2 * s[ok] + counts[ok]) // (2 * counts[ok])
    return out, counts
