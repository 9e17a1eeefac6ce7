"""Textured synthetic test images: smooth sinusoidal shading, flat disks and noise."""
from __future__ import annotations

import numpy as np


def synthetic_image(rows: int, cols: int, seed: int = 0, n_disks: int = 6,
                    noise: float = 4.0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:rows, 0:cols]
    img = np.empty((rows, cols, 3))
    for c in range(3):
        img[..., c] = 128 + 60 * (np.sin(xx / rng.uniform(10, 40) + rng.uniform(0, 6))
                                  * np.cos(yy / rng.uniform(10, 40)))
    scale = max(rows, cols) / 640
    for _ in range(n_disks):
        cy, cx = rng.integers(0, rows), rng.integers(0, cols)
        rad = max(2.0, rng.uniform(10, 80) * scale)
        img[(yy - cy) ** 2 + (xx - cx) ** 2 < rad ** 2] = rng.integers(0, 256, 3)
    img += rng.normal(0, noise, img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


def synthetic_corpus(n: int, rows: int, cols: int, seed: int = 0) -> list[np.ndarray]:
    return [synthetic_image(rows, cols, seed + i) for i in range(n)]
