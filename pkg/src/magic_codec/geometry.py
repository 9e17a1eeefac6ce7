"""Point sets, exact Delaunay triangulation and triangle rasterization.

Everything here works on integer pixel coordinates ``(row, col)`` and uses
exact integer predicates, so the encoder and decoder build identical meshes
from identical point sets on any platform.

Cocircular ties are resolved by a symbolic perturbation of the lifted
heights: point ``i`` is lifted to ``|p_i|^2 + eps_i`` with
``eps_0 << eps_1 << ... << eps_{n-1}``.  On a set of cocircular points this
peels the highest-index vertex off as an ear first, so the resulting
triangulation always contains the lexicographically smallest available
index triple (for a square: ``(0, 1, 2)`` and ``(1, 2, 3)``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np


class GeometryError(ValueError):
    """Raised for invalid or degenerate geometric input."""


def as_point_set(points: Iterable[Sequence[int]]) -> np.ndarray:
    """Return ``points`` as a sorted, duplicate-free ``(n, 2)`` int64 array."""
    arr = np.asarray(list(points) if not isinstance(points, np.ndarray) else points, dtype=np.int64)
    if arr.size == 0:
        return np.zeros((0, 2), dtype=np.int64)
    arr = arr.reshape(-1, 2)
    # np.unique on rows sorts lexicographically by (row, col)
    return np.unique(arr, axis=0)


def grid_spray(rows: int, cols: int, grid: int) -> np.ndarray:
    """Uniform grid points every ``grid`` pixels plus the last row/column."""
    if grid < 1:
        raise GeometryError("grid must be >= 1")
    if rows < 2 or cols < 2:
        raise GeometryError("image must be at least 2x2")
    rs = np.union1d(np.arange(0, rows, grid), [rows - 1])
    cs = np.union1d(np.arange(0, cols, grid), [cols - 1])
    rr, cc = np.meshgrid(rs, cs, indexing="ij")
    return np.stack([rr.ravel(), cc.ravel()], axis=1).astype(np.int64)


def prune_points(points: np.ndarray, pw: int, rows: int, cols: int) -> np.ndarray:
    """Keep the lexicographically smallest point of every pw x pw window."""
    if pw < 1:
        raise GeometryError("prune window must be >= 1")
    pts = as_point_set(points)
    if pw == 1 or len(pts) == 0:
        return pts
    nwc = -(-cols // pw)
    window = (pts[:, 0] // pw) * nwc + pts[:, 1] // pw
    # pts is sorted, so the first hit per window is its smallest point
    _, first = np.unique(window, return_index=True)
    return pts[np.sort(first)]


# ---------------------------------------------------------------------------
# Exact predicates
# ---------------------------------------------------------------------------

def orient(ax, ay, bx, by, cx, cy) -> int:
    """Twice the signed area of (a, b, c); positive when counter-clockwise."""
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _incircle_det(ax, ay, bx, by, cx, cy, dx, dy) -> int:
    adx, ady = ax - dx, ay - dy
    bdx, bdy = bx - dx, by - dy
    cdx, cdy = cx - dx, cy - dy
    return ((adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
            + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
            + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady))


def in_circle(xs: Sequence[int], ys: Sequence[int], a: int, b: int, c: int, d: int) -> bool:
    """True when point ``d`` lies inside the perturbed circumcircle of ccw (a, b, c)."""
    ax, ay, bx, by = xs[a], ys[a], xs[b], ys[b]
    cx, cy, dx, dy = xs[c], ys[c], xs[d], ys[d]
    det = _incircle_det(ax, ay, bx, by, cx, cy, dx, dy)
    if det:
        return det > 0
    top = max(a, b, c, d)
    if top == d:
        return False
    # raising a triangle vertex lifts the plane under d by its barycentric weight
    if top == a:
        return orient(dx, dy, bx, by, cx, cy) > 0
    if top == b:
        return orient(ax, ay, dx, dy, cx, cy) > 0
    return orient(ax, ay, bx, by, dx, dy) > 0


# ---------------------------------------------------------------------------
# Delaunay triangulation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Triangulation:
    """A point set and its triangles as sorted index triples in canonical order."""

    points: np.ndarray
    triangles: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, Triangulation):
            return NotImplemented
        return (np.array_equal(self.points, other.points)
                and np.array_equal(self.triangles, other.triangles))

    def __len__(self):
        return len(self.triangles)

    def to_bytes(self) -> bytes:
        """Canonical little-endian serialization, used to compare meshes."""
        head = np.array([len(self.points), len(self.triangles)], dtype="<u4").tobytes()
        return (head + self.points.astype("<i4").tobytes()
                + self.triangles.astype("<u4").tobytes())

    def vertices(self) -> np.ndarray:
        """Return a ``(T, 3, 2)`` array of triangle corner coordinates."""
        return self.points[self.triangles]

    def neighbors(self) -> list[list[int]]:
        """Edge-adjacent triangle ids for each triangle."""
        owner: dict[tuple[int, int], int] = {}
        adj: list[list[int]] = [[] for _ in range(len(self.triangles))]
        for t, (a, b, c) in enumerate(self.triangles.tolist()):
            for e in ((a, b), (a, c), (b, c)):
                other = owner.pop(e, None)
                if other is None:
                    owner[e] = t
                else:
                    adj[t].append(other)
                    adj[other].append(t)
        return adj


def delaunay(points) -> Triangulation:
    """Delaunay triangulation of a point set with exact integer predicates.

    Points are inserted in lexicographic order, so each new point lies
    outside the current convex hull; it is fanned to the visible hull edges
    and the Delaunay property is restored by Lawson flips.  The output is
    independent of floating point and of platform.
    """
    pts = as_point_set(points)
    n = len(pts)
    if n < 3:
        raise GeometryError("delaunay needs at least 3 points")
    xs = [int(v) for v in pts[:, 0]]
    ys = [int(v) for v in pts[:, 1]]

    # leading collinear run
    k = 2
    while k < n and orient(xs[0], ys[0], xs[1], ys[1], xs[k], ys[k]) == 0:
        k += 1
    if k == n:
        raise GeometryError("all points are collinear")

    tv: list[list[int]] = []   # ccw vertex triples
    tn: list[list[int]] = []   # neighbour opposite each vertex, -1 on the hull
    hnext = [-1] * n
    hprev = [-1] * n
    htri = [-1] * n            # triangle owning hull edge (u, hnext[u])

    p = k
    ccw = orient(xs[0], ys[0], xs[1], ys[1], xs[p], ys[p]) > 0
    chain = list(range(k)) if ccw else list(range(k - 1, -1, -1))
    for i in range(k - 1):
        u, v = chain[i], chain[i + 1]
        tv.append([u, v, p])
        tn.append([i + 1 if i + 1 < k - 1 else -1, i - 1 if i > 0 else -1, -1])
        hnext[u], hprev[v], htri[u] = v, u, i
    last = chain[-1]
    hnext[last], hprev[p] = p, last
    hnext[p], hprev[chain[0]] = chain[0], p
    htri[last] = k - 2
    htri[p] = 0

    stack: list[int] = []
    for p in range(k + 1, n):
        px, py = xs[p], ys[p]
        start = p - 1
        # extend the visible hull chain forward and backward from the last point
        e = start
        while True:
            v = hnext[e]
            if orient(xs[e], ys[e], xs[v], ys[v], px, py) < 0:
                e = v
            else:
                break
        s = start
        while True:
            u = hprev[s]
            if orient(xs[u], ys[u], xs[s], ys[s], px, py) < 0:
                s = u
            else:
                break
        if s == e:
            raise GeometryError("internal error: no visible hull edge")

        prev_new = -1
        u = s
        first_new = len(tv)
        while u != e:
            v = hnext[u]
            t = len(tv)
            old = htri[u]
            tv.append([p, v, u])
            # opposite p: old hull triangle; opposite v: edge (u, p) -> previous new
            tn.append([old, prev_new, -1])
            if prev_new >= 0:
                tn[prev_new][2] = t
            ov = tv[old]
            # hull edge (u, v) in `old` is the edge opposite the vertex not in {u, v}
            for j in range(3):
                if ov[j] != u and ov[j] != v:
                    tn[old][j] = t
                    break
            stack.append(t)
            prev_new = t
            u = v
        last_new = len(tv) - 1
        hnext[s], hprev[p] = p, s
        hnext[p], hprev[e] = e, p
        htri[s] = first_new   # (s, p) lies in triangle (p, s1, s) as s -> p
        htri[p] = last_new    # (p, e) lies in triangle (p, e, e_prev)

        while stack:
            t = stack.pop()
            a_t = tv[t]
            # rotate so that p is first
            i = a_t.index(p)
            a = a_t[(i + 1) % 3]
            b = a_t[(i + 2) % 3]
            nb = tn[t][i]
            if nb < 0:
                continue
            vn = tv[nb]
            j = tn[nb].index(t)
            o = vn[j]
            if not in_circle(xs, ys, p, a, b, o):
                continue
            # neighbours before the flip
            n_a = tn[t][(i + 1) % 3]   # across (b, p)
            n_b = tn[t][(i + 2) % 3]   # across (p, a)
            # nb is (o, b, a) in some rotation
            m_b = m_a = -1
            for jj in range(3):
                if vn[jj] == b:
                    m_b = tn[nb][jj]   # across (a, o)
                elif vn[jj] == a:
                    m_a = tn[nb][jj]   # across (o, b)
            tv[t] = [p, a, o]
            tn[t] = [m_b, nb, n_b]
            tv[nb] = [p, o, b]
            tn[nb] = [m_a, n_a, t]
            if m_b >= 0:
                mv = tn[m_b]
                mv[mv.index(nb)] = t
            elif hnext[a] == o:
                htri[a] = t
            if n_a >= 0:
                mv = tn[n_a]
                mv[mv.index(t)] = nb
            elif hnext[b] == p:
                htri[b] = nb
            if m_a < 0 and hnext[o] == b:
                htri[o] = nb
            stack.append(t)
            stack.append(nb)

    tris = np.sort(np.asarray(tv, dtype=np.int64), axis=1)
    order = np.lexsort((tris[:, 2], tris[:, 1], tris[:, 0]))
    return Triangulation(points=pts, triangles=tris[order])


# ---------------------------------------------------------------------------
# Rasterization
# ---------------------------------------------------------------------------

def rasterize(corners: np.ndarray, rows: int, cols: int, scale: int = 1,
              chunk: int = 1 << 22) -> tuple[np.ndarray, np.ndarray]:
    """Pixels covered by each triangle, boundary inclusive.

    ``corners`` is a ``(T, 3, 2)`` integer array of vertex coordinates given
    in units of ``1/scale`` pixel.  A pixel ``(r, c)`` belongs to a triangle
    when its centre ``(r, c)`` is inside or on the boundary; candidates are
    taken from each triangle's bounding rectangle.

    Returns ``(tri_ids, pixel_ids)`` sorted by triangle id, where
    ``pixel_ids`` are row-major flat indices.
    """
    corners = np.asarray(corners, dtype=np.int64).reshape(-1, 3, 2)
    if len(corners) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    lo = -(-corners.min(axis=1) // scale)          # ceil
    hi = corners.max(axis=1) // scale              # floor
    lo = np.maximum(lo, 0)
    hi = np.minimum(hi, [rows - 1, cols - 1])
    h = np.maximum(hi[:, 0] - lo[:, 0] + 1, 0)
    w = np.maximum(hi[:, 1] - lo[:, 1] + 1, 0)
    area = h * w

    # orient every triangle counter-clockwise
    a, b, c = corners[:, 0], corners[:, 1], corners[:, 2]
    sign = np.sign((b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
                   - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0]))

    out_t, out_p = [], []
    bounds = np.cumsum(area)
    start = 0
    total = len(corners)
    while start < total:
        base = bounds[start - 1] if start else 0
        stop = int(np.searchsorted(bounds, base + chunk, side="right"))
        stop = max(stop, start + 1)
        sl = slice(start, stop)
        cnt = area[sl]
        n = int(cnt.sum())
        if n:
            tid = np.repeat(np.arange(start, stop), cnt)
            offs = np.arange(n) - np.repeat(np.cumsum(cnt) - cnt, cnt)
            ww = w[tid]
            r = lo[tid, 0] + offs // ww
            col = lo[tid, 1] + offs % ww
            R = r * scale
            C = col * scale
            s = sign[tid]
            inside = s != 0
            for (p, q) in ((a, b), (b, c), (c, a)):
                px, py = p[tid, 0], p[tid, 1]
                qx, qy = q[tid, 0], q[tid, 1]
                e = (qx - px) * (C - py) - (qy - py) * (R - px)
                inside &= e * s >= 0
            out_t.append(tid[inside])
            out_p.append(r[inside] * cols + col[inside])
        start = stop
    if not out_t:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    return np.concatenate(out_t), np.concatenate(out_p)


def pixel_owners(tid: np.ndarray, pix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Covered pixels and, for each, the highest triangle id claiming it.

    This is the triangle a decoder painting in canonical order leaves visible.
    """
    uniq, first = np.unique(pix[::-1], return_index=True)
    return uniq, tid[::-1][first]


def triangle_pixels(tri: Sequence[int], points: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Flat indices of the pixels whose centres lie in (or on) one triangle."""
    corners = np.asarray(points)[np.asarray(tri)][None]
    return rasterize(corners, rows, cols)[1]


def split_triangle(tri: Sequence[int], points: np.ndarray, gray: np.ndarray,
                   th: float) -> Optional[tuple[int, int]]:
    """Centroid of ``tri`` if its pixel intensities vary more than ``th``."""
    rows, cols = gray.shape
    pix = triangle_pixels(tri, points, rows, cols)
    if len(pix) == 0:
        return None
    vals = gray.ravel()[pix].astype(np.float64)
    if vals.std() <= th:
        return None
    corners = np.asarray(points)[np.asarray(tri)]
    return _round_centroid(corners[None], rows, cols)[0]


def _round_centroid(corners: np.ndarray, rows: int, cols: int) -> np.ndarray:
    # round-half-up of sum/3 in exact integer arithmetic
    s = corners.sum(axis=1)
    cen = (2 * s + 3) // 6
    cen[:, 0] = np.clip(cen[:, 0], 0, rows - 1)
    cen[:, 1] = np.clip(cen[:, 1], 0, cols - 1)
    return cen


def split_all(tess: Triangulation, gray: np.ndarray, th: float) -> np.ndarray:
    """Centroids of every triangle of ``tess`` whose intensity std exceeds ``th``.

    Vectorized equivalent of calling :func:`split_triangle` on each triangle.
    """
    rows, cols = gray.shape
    T = len(tess)
    tid, pix = rasterize(tess.vertices(), rows, cols)
    vals = gray.ravel()[pix].astype(np.float64)
    cnt = np.bincount(tid, minlength=T)
    s1 = np.bincount(tid, weights=vals, minlength=T)
    ok = cnt > 0
    mean = np.zeros(T)
    mean[ok] = s1[ok] / cnt[ok]
    dev = (vals - mean[tid]) ** 2
    var = np.zeros(T)
    var[ok] = np.bincount(tid, weights=dev, minlength=T)[ok] / cnt[ok]
    hit = ok & (np.sqrt(var) > th)
    if not hit.any():
        return np.zeros((0, 2), dtype=np.int64)
    return _round_centroid(tess.vertices()[hit], rows, cols)
