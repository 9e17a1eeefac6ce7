import io
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from magic_codec.analysis import (CtInputs, NoCutoffError, bpp, ct_cutoff, dataset_stats,
                                  read_sizes_csv, write_sizes_csv)


def quantile_oracle(values, q):
    """Linear interpolation between order statistics at position q*(n-1)."""
    v = sorted(values)
    pos = q * (len(v) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(v) - 1)
    return v[lo] + (v[hi] - v[lo]) * (pos - lo)


def test_stats_examples():
    s = dataset_stats([1, 1, 1])
    assert (s.mean, s.std) == (1.0, 0.0)
    s = dataset_stats([1, 2, 3, 4])
    assert (s.q1, s.median, s.q3) == (1.75, 2.5, 3.25)
    s = dataset_stats([0.3])
    assert s.min == s.q1 == s.median == s.q3 == s.max == 0.3
    with pytest.raises(ValueError):
        dataset_stats([])


@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=1, max_size=50))
def test_stats_match_sort_oracle(values):
    s = dataset_stats(values)
    for q, got in ((0, s.min), (0.25, s.q1), (0.5, s.median), (0.75, s.q3), (1, s.max)):
        assert got == pytest.approx(quantile_oracle(values, q), rel=1e-12, abs=1e-12)
    m = sum(values) / len(values)
    assert s.mean == pytest.approx(m, rel=1e-12, abs=1e-12)
    assert s.std == pytest.approx((sum((v - m) ** 2 for v in values) / len(values)) ** 0.5,
                                  rel=1e-9, abs=1e-9)
    assert json.loads(s.to_json())["count"] == len(values)


def test_ct_examples():
    assert ct_cutoff(2, 1, 1000, 5000, 3.7e9) == pytest.approx(0.925, abs=1e-9)
    assert ct_cutoff(CtInputs(2, 1, 1000, 5000)) == pytest.approx(0.925, abs=1e-9)
    assert ct_cutoff(1.5, 1.5, 10, 20) == 0.0
    assert ct_cutoff(1, 2, 10, 20) < 0
    with pytest.raises(NoCutoffError):
        ct_cutoff(2, 1, 5000, 5000)
    with pytest.raises(NoCutoffError):
        ct_cutoff(2, 1, 6000, 5000)
    with pytest.raises(ValueError):
        ct_cutoff(0, 1, 10, 20)


@given(st.floats(0.01, 10), st.floats(0.01, 10), st.integers(1, 10**6), st.integers(1, 10**6),
       st.floats(1e6, 1e10))
def test_ct_linear(e1, e2, i1, i2, f):
    if i2 <= i1:
        i1, i2 = i2, i1 + i2
    c = ct_cutoff(e1, e2, i1, i2, f)
    assert ct_cutoff(e1, e2, i1, i2, 2 * f) == pytest.approx(2 * c, rel=1e-12, abs=1e-15)
    # doubling the time difference doubles the cutoff
    if e2 + 2 * (e1 - e2) > 0:
        assert ct_cutoff(e2 + 2 * (e1 - e2), e2, i1, i2, f) == pytest.approx(2 * c, rel=1e-9,
                                                                             abs=1e-12)


def test_bpp():
    assert bpp(8 * 1000, 100, 80) == 1.0


def test_csv_roundtrip():
    rec = [("a.png", 120, 0.25), ("b c.png", 7, 1 / 3)]
    buf = io.StringIO()
    write_sizes_csv(rec, buf)
    assert buf.getvalue().splitlines()[0] == "file,bytes,bpp"
    buf.seek(0)
    assert read_sizes_csv(buf) == rec
    with pytest.raises(ValueError):
        read_sizes_csv(io.StringIO("x,y\n1,2\n"))
