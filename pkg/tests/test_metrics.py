import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsketch.config import capacity_improvement_geometry, space_saving_geometry
from tsketch.metrics import accuracy_skipping_zeros, compute_accuracy, compute_resources, metric_report
from tsketch.sketch import SketchGeometry, TSketch, Variant


def test_accuracy_examples():
    assert compute_accuracy([5, 7], [4, 7]) == (0.5, 0.125)
    assert compute_accuracy([10], [8]) == (2.0, 0.25)


def test_accuracy_errors():
    with pytest.raises(ValueError):
        compute_accuracy([1, 2], [1])
    with pytest.raises(ValueError):
        compute_accuracy([], [])
    with pytest.raises(ValueError):
        compute_accuracy([1], [0])


def test_skipping_zeros():
    aae, are, skipped = accuracy_skipping_zeros([3, 5], [0, 4])
    assert (aae, are, skipped) == (2.0, 0.25, 1)


@settings(max_examples=100, deadline=None)
@given(
    pairs=st.lists(
        st.tuples(st.integers(0, 10**6), st.integers(1, 10**6)), min_size=1, max_size=50
    )
)
def test_matches_brute_force(pairs):
    est = [p[0] for p in pairs]
    tru = [p[1] for p in pairs]
    aae, are = compute_accuracy(est, tru)
    assert abs(aae - sum(abs(e - t) for e, t in pairs) / len(pairs)) <= 1e-12 * max(1.0, aae)
    assert abs(are - sum(abs(e - t) / t for e, t in pairs) / len(pairs)) <= 1e-12 * max(1.0, are)


def test_resources():
    s = TSketch(SketchGeometry(Variant.SPACE_SAVING, 8, (1, 2, 3, 4), 2))
    bits, occ, cap = compute_resources(s)
    assert (bits, occ, cap) == (80, 0.0, 16)
    s.update([b"a"] * 3)
    ones = sum(int(np.bitwise_count(v).sum()) for v in s.counter_matrix())
    assert compute_resources(s)[1] == ones / 80


def test_capacity_by_variant():
    ca, _, _ = capacity_improvement_geometry(2**16, 10)
    assert compute_resources(TSketch(ca))[2] == 2**22
    sp, _ = space_saving_geometry(2**16, 4, 10, 2)
    assert compute_resources(TSketch(sp))[2] == 2**16


def test_metric_report():
    s = TSketch(space_saving_geometry(2**8, 2, 4, 2)[0])
    r = metric_report(s, [5, 7], [4, 7])
    assert (r.aae, r.are, r.query_count) == (0.5, 0.125, 2)
    assert r.max_recordable == r.capacity - 1 == 255
