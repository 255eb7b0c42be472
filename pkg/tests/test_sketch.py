from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tsketch.baselines import RSketch
from tsketch.config import rectangular_geometry, space_saving_geometry
from tsketch.sketch import (
    FormatError,
    GeometryError,
    SketchGeometry,
    TSketch,
    Variant,
    correct_estimate,
    deserialize,
    serialize,
)

SP = Variant.SPACE_SAVING


def sp_sketch(bits, w, seed=0, d=2):
    return TSketch(SketchGeometry(SP, w, tuple(bits), d), seed)


def set_mapped(sketch, item, values):
    for layer, idx, v in zip(sketch.layers, sketch.indices(item), values):
        layer._write(idx, v)


def test_new_sketch_is_zero():
    s = sp_sketch([3, 4, 5], 50)
    assert s.total == 0
    assert all(v.sum() == 0 for v in s.counter_matrix())
    assert s.query(b"anything").raw_estimate == 0


def test_non_increasing_widths_rejected():
    with pytest.raises(GeometryError):
        SketchGeometry(SP, 8, (4, 4), 2)
    with pytest.raises(GeometryError):
        SketchGeometry(SP, 8, (5, 4), 2)


def test_infeasible_ratio_rejected():
    # 3**3 = 27 >= 16
    with pytest.raises(GeometryError, match="d\\^\\(k-1\\)"):
        space_saving_geometry(16, 4, 8, 3)


def test_geometry_errors():
    with pytest.raises(GeometryError):
        SketchGeometry(SP, 0, (1, 2), 2)
    with pytest.raises(GeometryError):
        SketchGeometry(SP, 4, (1, 3), 2)  # step must be log2(d)
    with pytest.raises(GeometryError):
        SketchGeometry(Variant.R_STRUCTURE, 4, (8, 9))
    with pytest.raises(GeometryError):
        SketchGeometry(SP, 4, (64, 65), 2)
    with pytest.raises(GeometryError):
        SketchGeometry(Variant.CAPACITY_IMPROVEMENT, 8, (1, 2, 3, 4), 2)  # room for one more layer


def test_insert_then_query():
    s = sp_sketch([8, 9, 10], 1000)
    s.insert(b"a")
    assert s.query(b"a").raw_estimate == 1
    assert s.total == 1


def test_forced_total_collision():
    s = TSketch(SketchGeometry(SP, 1, (60,), 2))
    for item in [b"a"] * 3 + [b"b"] * 2:
        s.insert(item)
    assert s.query(b"a").raw_estimate == s.query(b"b").raw_estimate == 5


def test_single_bit_saturates():
    s = TSketch(SketchGeometry(SP, 1, (1,), 2))
    for _ in range(3):
        s.insert(b"a")
    res = s.query(b"a")
    assert res.all_saturated and res.raw_estimate == 1 and res.saturated_layers == 1


def test_saturated_layer_excluded():
    s = sp_sketch([3, 4, 5], 1 << 20)
    set_mapped(s, b"x", [7, 7, 9])
    mapped = [layer.read(i) for layer, i in zip(s.layers, s.indices(b"x"))]
    live = [v for v, layer in zip(mapped, s.layers) if v != layer.sat]
    res = s.query(b"x")
    assert (res.raw_estimate, res.saturated_layers) == (min(live), 1) == (7, 1)
    assert not res.all_saturated


def test_all_saturated_fallback():
    s = sp_sketch([1, 2, 3], 1 << 20)
    set_mapped(s, b"x", [1, 3, 7])
    res = s.query(b"x")
    assert res.all_saturated and res.raw_estimate == 7 and res.saturated_layers == 3


def test_saturation_need_not_be_a_prefix():
    # collisions can fill a wide counter while the narrow one stays live
    s = sp_sketch([3, 4, 5], 1 << 20)
    set_mapped(s, b"x", [2, 15, 9])
    res = s.query(b"x")
    assert (res.raw_estimate, res.saturated_layers) == (2, 1)


def test_never_inserted_is_zero():
    s = sp_sketch([8, 9], 1 << 16)
    s.update(str(i).encode() for i in range(20))
    assert s.query(b"absent").raw_estimate == 0


def test_correction_formula():
    assert correct_estimate(100, 0.2, 10100, 100) == pytest.approx(80.0)
    assert correct_estimate(1, 0.9, 10**6, 100) == 0.0


def test_query_corrected():
    s = sp_sketch([8, 9, 10], 64, seed=3)
    s.update(str(i % 40).encode() for i in range(2000))
    res = s.query_corrected(b"7", n=40)
    from tsketch.analytics import rho

    p = rho(64, 40, 3, res.saturated_layers)
    expected = max(0.0, res.raw_estimate - p * (2000 - res.raw_estimate) / 64)
    assert res.corrected_estimate == pytest.approx(expected)
    assert res.corrected_estimate <= res.raw_estimate


def test_corrected_single_item_stream_is_raw():
    s = sp_sketch([8, 9], 16)
    for _ in range(5):
        s.insert(b"only")
    res = s.query_corrected(b"only", n=1)
    assert res.corrected_estimate == res.raw_estimate == 5


def test_corrected_rejects_bad_n():
    with pytest.raises(ValueError):
        sp_sketch([8], 4).query_corrected(b"a", 0)


def test_batch_matches_scalar():
    s = sp_sketch([2, 3, 4, 5], 40, seed=9)
    stream = [str(i % 37).encode() for i in range(3000)]
    s.update(stream[:1000])
    for item in stream[1000:1500]:
        s.insert(item)
    items = [str(i).encode() for i in range(45)]
    batch = s.query_many(items, n=37)
    for j, item in enumerate(items):
        res = s.query_corrected(item, 37)
        assert res.raw_estimate == batch.raw[j]
        assert res.saturated_layers == batch.saturated[j]
        assert res.all_saturated == batch.all_saturated[j]
        assert res.corrected_estimate == pytest.approx(batch.corrected[j])


def test_update_equals_repeated_insert():
    stream = [str(i % 13).encode() for i in range(700)]
    a = sp_sketch([2, 3, 4], 11, seed=5)
    b = sp_sketch([2, 3, 4], 11, seed=5)
    a.update(stream)
    for item in stream:
        b.insert(item)
    assert serialize(a) == serialize(b)


@settings(max_examples=60, deadline=None)
@given(
    stream=st.lists(st.integers(0, 60), min_size=1, max_size=400),
    w=st.integers(1, 30),
    low=st.integers(1, 6),
    K=st.integers(1, 4),
    seed=st.integers(0, 2**32),
)
def test_no_underestimation(stream, w, low, K, seed):
    items = [str(x).encode() for x in stream]
    s = sp_sketch(range(low, low + K), w, seed)
    s.update(items)
    truth = Counter(items)
    for item, f in truth.items():
        res = s.query(item)
        if not res.all_saturated:
            assert res.raw_estimate >= f


@settings(max_examples=40, deadline=None)
@given(stream=st.lists(st.integers(0, 500), max_size=300), seed=st.integers(0, 2**32))
def test_cold_items_match_cm(stream, seed):
    items = [str(x).encode() for x in stream]
    t = sp_sketch([10, 11, 12], 64, seed)
    cm = RSketch(rectangular_geometry(2**12, 3, 64), seed)
    t.update(items)
    cm.update(items)
    assert max(int(v.max()) for v in t.counter_matrix()) < 2**10 - 1
    probe = sorted(set(items)) + [b"never"]
    assert t.query_many(probe).raw.tolist() == cm.query_many(probe).raw.tolist()


def test_deterministic_bytes():
    stream = [str(i * 7 % 101).encode() for i in range(5000)]
    g = space_saving_geometry(256, 4, 77, 2)[0]
    a, b = TSketch(g, 11), TSketch(g, 11)
    a.update(stream)
    b.update(stream)
    assert serialize(a) == serialize(b)
    c = TSketch(g, 12)
    c.update(stream)
    assert serialize(c) != serialize(a)


def test_merge_identity_and_linearity():
    g = space_saving_geometry(2**20, 3, 50, 2)[0]
    fresh, s = TSketch(g, 4), TSketch(g, 4)
    s.update([b"p", b"q", b"p"])
    assert serialize(fresh.merge(s)) == serialize(s)

    a, b = TSketch(g, 4), TSketch(g, 4)
    a.update([b"x"] * 3)
    b.update([b"x"] * 4)
    assert a.merge(b).query(b"x").raw_estimate == 7
    assert a.merge(b).total == 7


@settings(max_examples=30, deadline=None)
@given(
    left=st.lists(st.integers(0, 80), max_size=200),
    right=st.lists(st.integers(0, 80), max_size=200),
)
def test_merge_equals_concatenated_stream(left, right):
    g = space_saving_geometry(2**24, 3, 20, 4)[0]
    enc = lambda xs: [str(x).encode() for x in xs]
    a, b, whole = TSketch(g, 1), TSketch(g, 1), TSketch(g, 1)
    a.update(enc(left))
    b.update(enc(right))
    whole.update(enc(left + right))
    assert serialize(a.merge(b)) == serialize(whole)


def test_merge_saturates():
    g = SketchGeometry(SP, 1, (2,), 2)
    a, b = TSketch(g), TSketch(g)
    a.update([b"x"] * 2)
    b.update([b"x"] * 2)
    assert a.merge(b).query(b"x").all_saturated


def test_merge_mismatch():
    a = TSketch(space_saving_geometry(256, 3, 10, 2)[0], 1)
    with pytest.raises(GeometryError):
        a.merge(TSketch(space_saving_geometry(256, 3, 11, 2)[0], 1))
    with pytest.raises(GeometryError):
        a.merge(TSketch(space_saving_geometry(256, 3, 10, 2)[0], 2))


def test_roundtrip():
    s = sp_sketch([3, 5, 7], 101, seed=2**63 + 5, d=4)
    s.update(str(i % 50).encode() for i in range(4000))
    blob = serialize(s)
    t = deserialize(blob)
    assert serialize(t) == blob
    assert t.geometry == s.geometry and t.total == s.total
    items = [str(i).encode() for i in range(60)]
    assert t.query_many(items, 50).raw.tolist() == s.query_many(items, 50).raw.tolist()


def test_header_layout():
    s = sp_sketch([3, 4], 10, seed=9)
    s.insert(b"a")
    blob = serialize(s)
    assert blob[:4] == b"TSKT"
    assert int.from_bytes(blob[4:6], "little") == 1
    assert blob[6] == 1  # variant
    assert int.from_bytes(blob[8:10], "little") == 2  # K
    assert int.from_bytes(blob[10:18], "little") == 10  # w
    assert int.from_bytes(blob[18:20], "little") == 2  # d
    assert int.from_bytes(blob[20:28], "little") == 9  # seed
    assert int.from_bytes(blob[28:36], "little") == 1  # N
    assert list(blob[36:38]) == [3, 4]
    assert len(blob) == 38 + 8 * (1 + 1)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda b: b"XSKT" + b[4:],
        lambda b: b[:4] + (2).to_bytes(2, "little") + b[6:],
        lambda b: b[:6] + b"\x07" + b[7:],
        lambda b: b[:7] + b"\x09" + b[8:],
        lambda b: b[:-1],
        lambda b: b + b"\x00",
        lambda b: b"",
        lambda b: b[:36] + bytes([4, 3]) + b[38:],
    ],
)
def test_corrupted_rejected(mutate):
    blob = serialize(sp_sketch([3, 4], 10))
    with pytest.raises(FormatError):
        deserialize(mutate(blob))
