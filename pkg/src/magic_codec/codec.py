"""Encoder, decoder and the ``.magic`` bitstream.

Bitstream layout::

    u16 rows | u16 cols | u16 grid | u16 bdim        (big-endian, 8 bytes)
    B labels,  label_bits each   (B = ceil(rows/bdim) * ceil(cols/bdim))
    T colors,  cb bits each      (T = triangles of the rebuilt mesh)
    zero padding to a byte boundary

Labels and colors form one MSB-first bit string.  ``label_bits`` and ``cb``
are not transmitted; both come from the shared knowledge package.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import features, geometry, imageio
from .acquisition import KnowledgePackage
from .dictionaries import (avg_colors, gen_pattern_dict, patterns_for_labels,
                           quantize_colors)
from .predictor import predict_labels

HEADER_BYTES = 8


class BitstreamError(ValueError):
    """Malformed, truncated or incompatible encoded image."""


class Roi(NamedTuple):
    """Rectangle ``[r0, r1) x [c0, c1)``; blocks touching it use divisor ``d``.

    An ROI can only raise quality: a block takes the smallest divisor among
    the global ``d`` and every ROI it intersects.
    """

    r0: int
    c0: int
    r1: int
    c1: int
    d: int


@dataclass
class EncodeParams:
    d: int = 1
    grid: int | None = None
    roi: Sequence[Roi] = ()

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.grid is not None and not 1 <= self.grid <= 0xFFFF:
            raise ValueError("grid must be in [1, 65535]")
        self.roi = tuple(Roi(*r) for r in self.roi)
        for r in self.roi:
            if r.d < 1:
                raise ValueError("ROI divisor must be >= 1")
            if not (0 <= r.r0 < r.r1 and 0 <= r.c0 < r.c1):
                raise ValueError(f"ROI {tuple(r[:4])} is empty or inverted")


@dataclass(eq=False)
class EncodedImage:
    rows: int
    cols: int
    grid: int
    bdim: int
    labels: np.ndarray
    colors: np.ndarray
    label_bits: int
    cb: int
    mesh: geometry.Triangulation | None = field(default=None, repr=False)

    def __eq__(self, other):
        if not isinstance(other, EncodedImage):
            return NotImplemented
        return self.to_bytes() == other.to_bytes()

    @property
    def n_blocks(self) -> int:
        return len(self.labels)

    @property
    def n_triangles(self) -> int:
        return len(self.colors)

    @property
    def bit_length(self) -> int:
        """Payload bits before padding: header + labels + colors."""
        return 8 * HEADER_BYTES + self.n_blocks * self.label_bits + self.n_triangles * self.cb

    @property
    def byte_length(self) -> int:
        return -(-self.bit_length // 8)

    @property
    def bpp(self) -> float:
        return self.bit_length / (self.rows * self.cols)

    def to_bytes(self) -> bytes:
        head = np.array([self.rows, self.cols, self.grid, self.bdim], dtype=">u2").tobytes()
        bits = np.concatenate([_to_bits(self.labels, self.label_bits),
                               _to_bits(self.colors, self.cb)])
        out = head + np.packbits(bits).tobytes()
        assert len(out) == self.byte_length
        return out


def _to_bits(values, width: int) -> np.ndarray:
    v = np.asarray(values, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1)
    return ((v[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def _from_bits(bits: np.ndarray, width: int) -> np.ndarray:
    if len(bits) == 0:
        return np.zeros(0, dtype=np.int64)
    weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    return bits.reshape(-1, width).astype(np.int64) @ weights


def block_grid(rows: int, cols: int, bdim: int) -> tuple[int, int]:
    return -(-rows // bdim), -(-cols // bdim)


def build_mesh(rows: int, cols: int, grid: int, labels, pattern_dict) -> geometry.Triangulation:
    """Mesh shared by both endpoints: pattern points of every block plus the grid."""
    pts = np.concatenate([patterns_for_labels(pattern_dict, labels, rows, cols),
                          geometry.grid_spray(rows, cols, grid)])
    return geometry.delaunay(pts)


def block_divisors(rows: int, cols: int, bdim: int, ep: EncodeParams) -> np.ndarray:
    """Per-block divisor: ``ep.d``, lowered to the smallest ROI divisor touching the block."""
    nbr, nbc = block_grid(rows, cols, bdim)
    div = np.full((nbr, nbc), ep.d, dtype=np.int64)
    br0 = np.arange(nbr) * bdim
    bc0 = np.arange(nbc) * bdim
    for r in ep.roi:
        rhit = (br0 < r.r1) & (br0 + bdim > r.r0)
        chit = (bc0 < r.c1) & (bc0 + bdim > r.c0)
        hit = rhit[:, None] & chit[None, :]
        div[hit] = np.minimum(div[hit], r.d)
    return div.ravel()


def encode(img: np.ndarray, kp: KnowledgePackage, ep: EncodeParams | None = None) -> EncodedImage:
    """Compress an RGB image with a knowledge package."""
    ep = ep or EncodeParams()
    img = np.asarray(img, dtype=np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("expected an (rows, cols, 3) RGB image")
    rows, cols = img.shape[:2]
    imageio.check_dims(rows, cols)
    if rows < 2 or cols < 2:
        raise ValueError("image must be at least 2x2")
    grid = ep.grid or kp.default_grid(rows, cols)
    grid = min(grid, 0xFFFF)
    bdim = kp.bdim

    gray = imageio.to_gray(img)
    em = features.local_entropy(gray, kp.entropy_radius)
    feats = features.all_block_features(em, bdim)
    labels = predict_labels(kp.model, feats, block_divisors(rows, cols, bdim, ep), kp.dict_size)
    return encode_with_labels(img, kp, labels, grid)


def encode_with_labels(img: np.ndarray, kp: KnowledgePackage, labels, grid: int) -> EncodedImage:
    """Mesh from given block labels, then one palette index per triangle."""
    img = np.asarray(img, dtype=np.uint8)
    rows, cols = img.shape[:2]
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) != np.prod(block_grid(rows, cols, kp.bdim)):
        raise ValueError("one label per block required")
    mesh = build_mesh(rows, cols, grid, labels, kp.pattern_dict)
    # average over the pixels each triangle will actually paint, so that
    # re-encoding a decoded image with the same labels reproduces it exactly
    pix, owner = geometry.pixel_owners(*geometry.rasterize(mesh.vertices(), rows, cols))
    avg, counts = avg_colors(img, owner, pix, len(mesh))
    idx = quantize_colors(kp.color_dict, avg)
    idx[counts == 0] = 0
    return EncodedImage(rows=rows, cols=cols, grid=grid, bdim=kp.bdim, labels=labels,
                        colors=idx, label_bits=kp.pattern_dict.label_bits, cb=kp.cb, mesh=mesh)


def parse(data: bytes, kp: KnowledgePackage) -> EncodedImage:
    """Unpack a bitstream; rebuilds the mesh to know how many colors follow."""
    data = bytes(data)
    if len(data) < HEADER_BYTES:
        raise BitstreamError("truncated stream: incomplete header")
    rows, cols, grid, bdim = (int(v) for v in np.frombuffer(data[:HEADER_BYTES], ">u2"))
    if rows < 2 or cols < 2 or grid < 1 or bdim < 1:
        raise BitstreamError(f"invalid header {rows}x{cols} grid={grid} bdim={bdim}")
    pd = kp.pattern_dict
    if bdim != pd.bdim and bdim > max(rows, cols):
        raise BitstreamError(f"implausible block size {bdim} for a {rows}x{cols} image")
    if bdim != pd.bdim:
        warnings.warn(f"stream block size {bdim} differs from package ({pd.bdim}); "
                      "using the stream value", stacklevel=2)
        pd = gen_pattern_dict(bdim, pd.size, pd.seed)
    if grid != kp.default_grid(rows, cols):
        warnings.warn(f"stream grid {grid} differs from the package default "
                      f"{kp.default_grid(rows, cols)}", stacklevel=2)
    lbits, cb = pd.label_bits, kp.cb
    nbr, nbc = block_grid(rows, cols, bdim)
    nb = nbr * nbc
    bits = np.unpackbits(np.frombuffer(data, np.uint8, offset=HEADER_BYTES))
    if len(bits) < nb * lbits:
        raise BitstreamError("truncated stream: incomplete label section")
    labels = _from_bits(bits[:nb * lbits], lbits)
    if (labels >= pd.size).any():
        raise BitstreamError("label exceeds the pattern dictionary size")
    mesh = build_mesh(rows, cols, grid, labels, pd)
    enc = EncodedImage(rows=rows, cols=cols, grid=grid, bdim=bdim, labels=labels,
                       colors=np.zeros(len(mesh), dtype=np.int64), label_bits=lbits, cb=cb,
                       mesh=mesh)
    if len(data) < enc.byte_length:
        raise BitstreamError(f"truncated stream: {len(data)} bytes, expected {enc.byte_length}")
    if len(data) > enc.byte_length:
        raise BitstreamError(f"stream has {len(data) - enc.byte_length} unexpected trailing "
                             "bytes (color count does not match the mesh)")
    start = nb * lbits
    enc.colors = _from_bits(bits[start:start + len(mesh) * cb], cb)
    return enc


def paint(mesh: geometry.Triangulation, colors: np.ndarray, rows: int, cols: int,
          coverage: bool = False):
    """Fill triangles in canonical order; later triangles win on shared pixels."""
    tid, pix = geometry.rasterize(mesh.vertices(), rows, cols)
    return _paint_pixels(tid, pix, colors, rows, cols, coverage)


def _paint_pixels(tid, pix, colors, rows, cols, coverage=False):
    out = np.zeros((rows * cols, 3), dtype=np.uint8)
    uniq, owner = geometry.pixel_owners(tid, pix)
    out[uniq] = np.asarray(colors)[owner]
    img = out.reshape(rows, cols, 3)
    if coverage:
        mask = np.zeros(rows * cols, dtype=bool)
        mask[uniq] = True
        return img, mask.reshape(rows, cols)
    return img


def decode(enc, kp: KnowledgePackage, smooth_depth: int = 0) -> np.ndarray:
    """Reconstruct an RGB image from an :class:`EncodedImage` or raw bytes."""
    if not isinstance(enc, EncodedImage):
        enc = parse(enc, kp)
    mesh = enc.mesh
    if mesh is None:
        mesh = build_mesh(enc.rows, enc.cols, enc.grid, enc.labels, kp.pattern_dict)
    if len(enc.colors) != len(mesh):
        raise BitstreamError("color count does not match the triangle count")
    rgb = kp.color_dict.entries[np.asarray(enc.colors, dtype=np.int64)]
    img = paint(mesh, rgb, enc.rows, enc.cols)
    if smooth_depth:
        img = smooth(img, mesh, rgb, smooth_depth)
    return img


# ---------------------------------------------------------------------------
# Smoothing post-process
# ---------------------------------------------------------------------------

def _subdivide(corners: np.ndarray) -> np.ndarray:
    """Split each triangle (coordinates already doubled) into 4 midpoint children."""
    a, b, c = corners[:, 0], corners[:, 1], corners[:, 2]
    ab, bc, ca = (a + b) // 2, (b + c) // 2, (c + a) // 2
    kids = np.stack([np.stack([a, ab, ca], 1), np.stack([ab, b, bc], 1),
                     np.stack([ca, bc, c], 1), np.stack([ab, bc, ca], 1)], axis=1)
    return kids.reshape(-1, 3, 2)


def _edge_keys(corners: np.ndarray) -> list[list[tuple]]:
    keys = []
    for tri in corners.tolist():
        p = [tuple(v) for v in tri]
        keys.append([tuple(sorted((p[i], p[(i + 1) % 3]))) for i in range(3)])
    return keys


def smooth(img: np.ndarray, mesh: geometry.Triangulation, colors, depth: int) -> np.ndarray:
    """Soften triangulation artifacts by recursive midpoint subdivision.

    At every level each triangle is split into four equal-area children.
    A child touching one of its parent's edges takes half the parent color
    and half the mean color of the triangles across those edges; the
    centre child keeps the parent color.  Centre children are painted
    first, then the others in order.
    """
    if depth <= 0:
        return img
    rows, cols = img.shape[:2]
    corners = mesh.vertices().astype(np.int64)
    cols_f = np.asarray(colors, dtype=np.float64).reshape(-1, 3)
    for _ in range(depth):
        keys = _edge_keys(corners)
        owner: dict[tuple, list[int]] = {}
        for t, ks in enumerate(keys):
            for k in ks:
                owner.setdefault(k, []).append(t)
        # parent edge i runs from vertex i to i+1; children 0,1,2 sit at vertices 0,1,2
        across = [[[o for o in owner[k] if o != t] for k in ks] for t, ks in enumerate(keys)]
        corners = _subdivide(corners * 2)
        new = np.repeat(cols_f, 4, axis=0)
        for t in range(len(keys)):
            for child, edges in ((0, (0, 2)), (1, (0, 1)), (2, (1, 2))):
                nbrs = [o for e in edges for o in across[t][e]]
                if nbrs:
                    new[4 * t + child] = 0.5 * cols_f[t] + 0.5 * cols_f[nbrs].mean(axis=0)
        cols_f = new
    # centre children first, so blended children along every edge stay on top
    order = np.argsort(np.arange(len(corners)) % 4 != 3, kind="stable")
    corners, cols_f = corners[order], cols_f[order]
    scale = 1 << depth
    tid, pix = geometry.rasterize(corners, rows, cols, scale=scale)
    rgb = np.clip(np.floor(cols_f + 0.5), 0, 255).astype(np.uint8)
    out = img.reshape(-1, 3).copy()
    painted, mask = _paint_pixels(tid, pix, rgb, rows, cols, coverage=True)
    out[mask.ravel()] = painted.reshape(-1, 3)[mask.ravel()]
    return out.reshape(img.shape)
