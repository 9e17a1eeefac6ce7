import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import area2, check_valid, hull_area2, random_points

from magic_codec.geometry import (GeometryError, as_point_set, delaunay,
                                  grid_spray, prune_points, rasterize, split_all,
                                  split_triangle, triangle_pixels)


# --- grid_spray ----------------------------------------------------------------

def test_grid_spray_corners_only():
    assert sorted(map(tuple, grid_spray(2, 2, 1).tolist())) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_grid_spray_default_640x480():
    grid = -(-(480 + 640) // 20)
    assert grid == 56
    pts = grid_spray(480, 640, grid)
    rs = list(range(0, 480, 56)) + [479]
    cs = list(range(0, 640, 56)) + [639]
    assert rs[-2:] == [448, 479] and cs[-2:] == [616, 639]
    assert set(map(tuple, pts.tolist())) == set(itertools.product(rs, cs))
    assert len(pts) == len(rs) * len(cs) == 130


def test_grid_spray_65():
    assert set(map(tuple, grid_spray(65, 65, 64).tolist())) == {(0, 0), (0, 64), (64, 0), (64, 64)}


@given(st.integers(2, 300), st.integers(2, 300), st.integers(1, 400))
def test_grid_spray_has_corners(rows, cols, grid):
    pts = set(map(tuple, grid_spray(rows, cols, grid).tolist()))
    assert {(0, 0), (0, cols - 1), (rows - 1, 0), (rows - 1, cols - 1)} <= pts
    assert all(0 <= r < rows and 0 <= c < cols for r, c in pts)


def test_grid_spray_errors():
    with pytest.raises(GeometryError):
        grid_spray(10, 10, 0)
    with pytest.raises(GeometryError):
        grid_spray(1, 10, 3)


# --- delaunay ----------------------------------------------------------------

def test_single_triangle():
    t = delaunay([(0, 0), (5, 1), (2, 7)])
    assert t.triangles.tolist() == [[0, 1, 2]]


def all_triangulations(pts):
    """Every triangulation of a small point set, by brute force over triangle subsets."""
    n = len(pts)
    tris = [t for t in itertools.combinations(range(n), 3) if area2(*(pts[i] for i in t))]
    target = hull_area2(pts)
    out = []
    for k in range(1, len(tris) + 1):
        for combo in itertools.combinations(tris, k):
            if sum(abs(area2(*(pts[i] for i in t))) for t in combo) != target:
                continue
            if _interiors_disjoint(pts, combo):
                out.append(sorted(combo))
    return out


def _interiors_disjoint(pts, combo):
    # with equal total area, disjointness holds iff no vertex lies strictly
    # inside another triangle and no two edges properly cross
    def strictly_inside(t, p):
        a, b, c = (pts[i] for i in t)
        s = [area2(a, b, p), area2(b, c, p), area2(c, a, p)]
        return all(v > 0 for v in s) or all(v < 0 for v in s)
    def cross(e, f):
        p1, p2, q1, q2 = pts[e[0]], pts[e[1]], pts[f[0]], pts[f[1]]
        if set(e) & set(f):
            return False
        d1, d2 = area2(p1, p2, q1), area2(p1, p2, q2)
        d3, d4 = area2(q1, q2, p1), area2(q1, q2, p2)
        return d1 * d2 < 0 and d3 * d4 < 0
    edges = {tuple(sorted(e)) for t in combo for e in itertools.combinations(t, 2)}
    for t in combo:
        if any(strictly_inside(t, pts[i]) for i in range(len(pts)) if i not in t):
            return False
    return not any(cross(e, f) for e, f in itertools.combinations(edges, 2))


def perturbed_delaunay_oracle(pts):
    """Triangles of the lower hull of the perturbed lift, by exhaustive search.

    Point i is lifted to ``|p|^2 + delta**(n - i)`` with a concrete tiny
    rational delta, so later points sit higher and no four lifted points are
    coplanar.  A triangle belongs to the triangulation iff every other
    lifted point lies strictly above its plane.
    """
    n = len(pts)
    delta = Fraction(1, 10**6)
    lift = [p[0] * p[0] + p[1] * p[1] + delta ** (n - i) for i, p in enumerate(pts)]
    out = []
    for t in itertools.combinations(range(n), 3):
        a, b, c = t
        o = area2(pts[a], pts[b], pts[c])
        if o == 0:
            continue
        if o < 0:
            b, c = c, b
        ok = True
        for d in range(n):
            if d in t:
                continue
            rows = [(pts[v][0] - pts[d][0], pts[v][1] - pts[d][1], lift[v] - lift[d])
                    for v in (a, b, c)]
            (p, q, r), (s_, u, v_), (w, x, y) = rows
            det = p * (u * y - v_ * x) - q * (s_ * y - v_ * w) + r * (s_ * x - u * w)
            assert det != 0
            if det > 0:
                ok = False
                break
        if ok:
            out.append(list(t))
    return sorted(out)


def test_square_tie_is_deterministic():
    sq = [(0, 0), (0, 9), (9, 0), (9, 9)]
    t = delaunay(sq)
    assert len(t) == 2
    tris = t.triangles.tolist()
    pts = [tuple(p) for p in t.points.tolist()]
    assert pts == sorted(sq)
    cands = all_triangulations(pts)
    assert len(cands) == 2                      # both diagonals are Delaunay
    assert tris == perturbed_delaunay_oracle(pts) == [[0, 1, 2], [1, 2, 3]]
    assert delaunay(sq[::-1]) == t


@pytest.mark.parametrize("pts", [
    [(0, 0), (0, 4), (4, 0), (4, 4), (2, 2)],                    # square + center
    [(0, 2), (2, 0), (2, 4), (4, 2), (1, 1), (3, 3)],            # two cocircular quads
    [(0, 1), (0, 3), (1, 0), (1, 4), (3, 0), (3, 4), (4, 1), (4, 3)],  # octagon on one circle
])
def test_cocircular_tie_matches_oracle(pts):
    t = delaunay(pts)
    check_valid(t)
    assert t.triangles.tolist() == perturbed_delaunay_oracle([tuple(p) for p in t.points.tolist()])


def test_random_ties_match_oracle():
    # points on a tiny lattice produce many cocircular quadruples
    rng = np.random.default_rng(3)
    for _ in range(150):
        pts = random_points(rng, int(rng.integers(4, 10)), span=4)
        t = delaunay(pts)
        assert t.triangles.tolist() == perturbed_delaunay_oracle([tuple(p) for p in t.points.tolist()])


def test_rejects_degenerate():
    with pytest.raises(GeometryError):
        delaunay([(0, 0), (1, 1)])
    with pytest.raises(GeometryError):
        delaunay([(0, 0), (1, 1), (2, 2), (5, 5)])
    with pytest.raises(GeometryError):
        delaunay([(3, 3)] * 5)


def test_twelve_random_points_in_block(rng):
    pts = random_points(rng, 12)
    check_valid(delaunay(pts))


def test_collinear_prefix_and_duplicates():
    pts = [(0, 0), (0, 1), (0, 2), (0, 3), (0, 4), (3, 2), (0, 2), (3, 2)]
    t = delaunay(pts)
    assert len(t.points) == 6
    check_valid(t)


def test_empty_circle_many_seeds():
    rng = np.random.default_rng(7)
    for _ in range(300):
        check_valid(delaunay(random_points(rng, int(rng.integers(3, 13)), span=16)))


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=3, max_size=25))
def test_delaunay_property(raw):
    pts = as_point_set(raw)
    if len(pts) < 3 or not any(area2(pts[0], pts[1], q) for q in pts[2:]):
        with pytest.raises(GeometryError):
            delaunay(raw)
        return
    t = delaunay(raw)
    check_valid(t)
    # input order never matters
    assert delaunay(raw[::-1]).to_bytes() == t.to_bytes()


def test_larger_set_against_scipy(rng):
    # scipy's Qhull gives a Delaunay triangulation; without cocircular
    # quadruples it is unique, so the two must agree exactly
    from scipy.spatial import Delaunay
    pts = as_point_set(rng.integers(0, 100_000, size=(400, 2)))
    ours = delaunay(pts)
    ref = np.sort(Delaunay(pts.astype(float)).simplices, axis=1)
    assert {tuple(t) for t in ref.tolist()} == {tuple(t) for t in ours.triangles.tolist()}


def test_neighbors_symmetric(rng):
    t = delaunay(random_points(rng, 40, 200))
    nb = t.neighbors()
    for i, ns in enumerate(nb):
        assert len(ns) <= 3
        for j in ns:
            assert i in nb[j]
            assert len(set(t.triangles[i]) & set(t.triangles[j])) == 2


# --- rasterization --------------------------------------------------------------

def brute_pixels(corners, rows, cols):
    a, b, c = [tuple(map(int, v)) for v in corners]
    out = []
    for r in range(rows):
        for col in range(cols):
            s = [area2(a, b, (r, col)), area2(b, c, (r, col)), area2(c, a, (r, col))]
            if area2(a, b, c) and (all(v >= 0 for v in s) or all(v <= 0 for v in s)):
                out.append(r * cols + col)
    return out


def test_small_right_triangle_six_pixels():
    pts = np.array([(0, 0), (0, 2), (2, 0)])
    pix = triangle_pixels([0, 1, 2], pts, 5, 5)
    assert sorted(pix.tolist()) == brute_pixels(pts, 5, 5)
    assert len(pix) == 6


def test_single_pixel_triangle():
    # half-pixel units: corners (2.5, 2.5), (4, 2.5), (2.5, 4); only centre (3, 3) is inside
    corners = np.array([[(5, 5), (8, 5), (5, 8)]])
    assert rasterize(corners, 20, 20, scale=2)[1].tolist() == [3 * 20 + 3]


def test_two_triangle_cover():
    rows, cols = 7, 11
    pts = np.array([(0, 0), (0, cols - 1), (rows - 1, 0), (rows - 1, cols - 1)])
    u = set(triangle_pixels([0, 1, 2], pts, rows, cols)) | set(triangle_pixels([1, 2, 3], pts, rows, cols))
    assert u == set(range(rows * cols))


def test_rasterize_matches_brute_force(rng):
    rows, cols = 23, 17
    for _ in range(60):
        corners = rng.integers(-5, 28, size=(1, 3, 2))
        got = sorted(rasterize(corners, rows, cols)[1].tolist())
        assert got == brute_pixels(corners[0], rows, cols)


def test_rasterize_sorted_and_chunked(rng):
    pts = random_points(rng, 60, 50)
    t = delaunay(pts)
    a = rasterize(t.vertices(), 50, 50)
    b = rasterize(t.vertices(), 50, 50, chunk=7)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert (np.diff(a[0]) >= 0).all()


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 60), st.integers(2, 60), st.integers(1, 30), st.integers(0, 40),
       st.integers(0, 10**6))
def test_hull_coverage(rows, cols, grid, extra, seed):
    r = np.random.default_rng(seed)
    pts = np.concatenate([grid_spray(rows, cols, grid),
                          np.stack([r.integers(0, rows, extra), r.integers(0, cols, extra)], 1)])
    t = delaunay(pts)
    _, pix = rasterize(t.vertices(), rows, cols)
    assert np.unique(pix).size == rows * cols


# --- splitting and pruning ----------------------------------------------------------

def test_split_uniform_none():
    pts = np.array([(0, 0), (0, 9), (9, 0)])
    assert split_triangle([0, 1, 2], pts, np.full((10, 10), 77, np.uint8), 5) is None


def test_split_half_black_white():
    gray = np.zeros((10, 10), np.uint8)
    gray[:, 5:] = 255
    pts = np.array([(0, 0), (0, 9), (9, 0)])
    pix = triangle_pixels([0, 1, 2], pts, 10, 10)
    sigma = gray.ravel()[pix].std()
    assert sigma > 5
    assert tuple(split_triangle([0, 1, 2], pts, gray, 5)) == (3, 3)   # round((0+0+9)/3)


def test_split_threshold_is_strict():
    gray = np.zeros((4, 4), np.uint8)
    gray[0, :] = 10                      # row 0 mixes 0 and 10
    pts = np.array([(0, 0), (0, 3), (3, 0)])
    pix = triangle_pixels([0, 1, 2], pts, 4, 4)
    sigma = float(gray.ravel()[pix].astype(float).std())
    assert split_triangle([0, 1, 2], pts, gray, sigma) is None
    assert split_triangle([0, 1, 2], pts, gray, np.nextafter(sigma, 0)) is not None


def test_split_all_matches_single(rng):
    gray = rng.integers(0, 256, size=(40, 50)).astype(np.uint8)
    gray[:20] = 100
    t = delaunay(np.concatenate([grid_spray(40, 50, 9), rng.integers(0, 40, size=(30, 2))]))
    expect = [split_triangle(tri, t.points, gray, 30.0) for tri in t.triangles]
    expect = [tuple(p) for p in expect if p is not None]
    got = [tuple(p) for p in split_all(t, gray, 30.0).tolist()]
    assert got == expect and got


def test_prune_examples():
    pts = [(0, 0), (1, 1), (2, 2)]
    assert prune_points(pts, 1, 8, 8).tolist() == as_point_set(pts).tolist()
    assert prune_points(pts, 4, 8, 8).tolist() == [[0, 0]]
    assert prune_points([(0, 0), (0, 7)], 4, 8, 8).tolist() == [[0, 0], [0, 7]]


@given(st.lists(st.tuples(st.integers(0, 49), st.integers(0, 69)), max_size=300),
       st.integers(1, 12))
def test_prune_bound(raw, pw):
    out = prune_points(raw, pw, 50, 70)
    assert len(out) <= (-(-50 // pw)) * (-(-70 // pw))
    windows = {(r // pw, c // pw) for r, c in out.tolist()}
    assert len(windows) == len(out)
    assert windows == {(r // pw, c // pw) for r, c in raw}
    assert set(map(tuple, out.tolist())) <= set(raw)
