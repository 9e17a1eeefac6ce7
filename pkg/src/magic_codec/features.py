"""Local entropy maps, block feature vectors and Canny edge points."""
from __future__ import annotations

import numpy as np
from numba import njit
from scipy import ndimage

ENTROPY_RADIUS = 5
CANNY_LOW = 50.0
CANNY_HIGH = 100.0
CANNY_SIGMA = 1.4


@njit(cache=True)
def _entropy_kernel(gray, radius, out):
    rows, cols = gray.shape
    side = 2 * radius + 1
    tbl = np.zeros(side * side + 1)
    for c in range(2, side * side + 1):
        tbl[c] = c * np.log2(c)
    hist = np.zeros(256, dtype=np.int64)
    for i in range(rows):
        r0 = max(0, i - radius)
        r1 = min(rows, i + radius + 1)
        hist[:] = 0
        s = 0.0
        n = 0
        distinct = 0
        for cc in range(min(cols, radius + 1)):
            for rr in range(r0, r1):
                v = gray[rr, cc]
                h = hist[v]
                s += tbl[h + 1] - tbl[h]
                distinct += h == 0
                hist[v] = h + 1
                n += 1
        for j in range(cols):
            if j > 0:
                add = j + radius
                if add < cols:
                    for rr in range(r0, r1):
                        v = gray[rr, add]
                        h = hist[v]
                        s += tbl[h + 1] - tbl[h]
                        distinct += h == 0
                        hist[v] = h + 1
                        n += 1
                drop = j - radius - 1
                if drop >= 0:
                    for rr in range(r0, r1):
                        v = gray[rr, drop]
                        h = hist[v]
                        s += tbl[h - 1] - tbl[h]
                        distinct -= h == 1
                        hist[v] = h - 1
                        n -= 1
            if distinct <= 1:
                out[i, j] = 0.0
            else:
                out[i, j] = min(max(np.log2(n) - s / n, 0.0), 8.0)


def local_entropy(gray: np.ndarray, radius: int = ENTROPY_RADIUS) -> np.ndarray:
    """Per-pixel Shannon entropy (bits) of the 256-bin histogram of a square window.

    The window is ``(2*radius+1)`` pixels on a side and is clipped at the
    image border.  A sliding histogram keeps ``sum(c log2 c)`` up to date,
    and ``H = log2(n) - sum(c log2 c) / n``.
    """
    if radius < 1:
        raise ValueError("radius must be >= 1")
    gray = np.ascontiguousarray(gray, dtype=np.uint8)
    out = np.empty(gray.shape, dtype=np.float64)
    _entropy_kernel(gray, radius, out)
    return out


def block_features(em: np.ndarray, block_row: int, block_col: int, bdim: int) -> np.ndarray:
    """Flattened entropy block scaled to [0, 1]; outside-image cells are 0."""
    rows, cols = em.shape
    r0, c0 = block_row * bdim, block_col * bdim
    if block_row < 0 or block_col < 0 or r0 >= rows or c0 >= cols:
        raise ValueError(f"block ({block_row}, {block_col}) lies outside the image")
    out = np.zeros((bdim, bdim), dtype=np.float64)
    part = em[r0:r0 + bdim, c0:c0 + bdim]
    out[:part.shape[0], :part.shape[1]] = part
    return out.ravel() / 8.0


def all_block_features(em: np.ndarray, bdim: int) -> np.ndarray:
    """Feature vectors of every block in row-major block order, shape (B, bdim^2)."""
    rows, cols = em.shape
    nbr, nbc = -(-rows // bdim), -(-cols // bdim)
    pad = np.zeros((nbr * bdim, nbc * bdim), dtype=np.float64)
    pad[:rows, :cols] = em
    blocks = pad.reshape(nbr, bdim, nbc, bdim).transpose(0, 2, 1, 3)
    return blocks.reshape(nbr * nbc, bdim * bdim) / 8.0


def _gaussian_kernel(size: int = 5, sigma: float = CANNY_SIGMA) -> np.ndarray:
    ax = np.arange(size) - size // 2
    g = np.exp(-(ax[:, None] ** 2 + ax[None, :] ** 2) / (2 * sigma * sigma))
    return g / g.sum()


def edge_points(gray: np.ndarray) -> np.ndarray:
    """Canny edge pixels as a sorted ``(n, 2)`` array of (row, col).

    5x5 Gaussian blur, Sobel gradients, non-maximum suppression along four
    quantized directions, then hysteresis between the fixed low/high
    magnitude thresholds with 8-connectivity.
    """
    img = np.asarray(gray, dtype=np.float64)
    blur = ndimage.convolve(img, _gaussian_kernel(), mode="nearest")
    gr = ndimage.sobel(blur, axis=0, mode="nearest")
    gc = ndimage.sobel(blur, axis=1, mode="nearest")
    mag = np.hypot(gr, gc)

    # direction of the gradient in [0, 180)
    ang = np.rad2deg(np.arctan2(gr, gc)) % 180.0
    sector = (np.floor((ang + 22.5) / 45.0).astype(np.int64)) % 4
    # neighbour offsets (drow, dcol) along the gradient for each sector
    steps = [(0, 1), (1, 1), (1, 0), (1, -1)]
    padded = np.pad(mag, 1, mode="constant")
    rows, cols = mag.shape
    keep = np.zeros(mag.shape, dtype=bool)
    for s, (dr, dc) in enumerate(steps):
        fwd = padded[1 + dr:1 + dr + rows, 1 + dc:1 + dc + cols]
        bwd = padded[1 - dr:1 - dr + rows, 1 - dc:1 - dc + cols]
        keep |= (sector == s) & (mag > bwd) & (mag >= fwd)
    thin = np.where(keep, mag, 0.0)

    weak = thin >= CANNY_LOW
    strong = thin >= CANNY_HIGH
    if not strong.any():
        return np.zeros((0, 2), dtype=np.int64)
    labels, nlab = ndimage.label(weak, structure=np.ones((3, 3), dtype=bool))
    good = np.zeros(nlab + 1, dtype=bool)
    good[np.unique(labels[strong])] = True
    good[0] = False
    edges = good[labels]
    return np.argwhere(edges).astype(np.int64)
