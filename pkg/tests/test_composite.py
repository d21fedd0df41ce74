import pytest
from hypothesis import given, settings, strategies as st

from dynstripe.composite import (DIRECTORY_TYPES, CompositeLayout, SegmentSpec, build_layout,
                                 dir_label, full_decompose, resolve, segment_ost_ids, single,
                                 split_range)
from dynstripe.layout import LayoutError, OstPool, StripingConfig, decompose_extent
from dynstripe.sizes import GiB, MiB

from oracles import UnitWalker, composite_owner

TWO_MARKS = build_layout([1 * GiB, 10 * GiB],
                      [StripingConfig(4, MiB), StripingConfig(8, 2 * MiB), StripingConfig(16, 4 * MiB)])
POOL = OstPool.of_size(64)


def test_directory_types_table():
    expected = {
        "A": (4, 1), "B": (8, 1), "C": (16, 1), "D": (64, 1), "E": (4, 2),
        "F": (16, 2), "G": (64, 2), "H": (4, 4), "I": (16, 4), "J": (64, 4),
    }
    got = {k: (v.stripe_count, v.stripe_width // MiB) for k, v in DIRECTORY_TYPES.items()}
    assert got == expected


def test_two_watermark_layout_segments():
    segs = TWO_MARKS.segments
    assert [(s.start, s.end, s.dir_label) for s in segs] == [
        (0, 1 * GiB, "4ost-1mb"),
        (1 * GiB, 10 * GiB, "8ost-2mb"),
        (10 * GiB, None, "16ost-4mb"),
    ]


def test_no_watermarks_is_single_segment():
    layout = build_layout([], [StripingConfig(4, MiB)])
    assert len(layout) == 1
    assert layout.segments[0].end is None
    assert layout == single(StripingConfig(4, MiB))


def test_netflow6_pattern():
    layout = build_layout([10 * GiB, 20 * GiB], [DIRECTORY_TYPES[c] for c in "ABC"])
    assert [(s.start, s.end, s.config) for s in layout.segments] == [
        (0, 10 * GiB, DIRECTORY_TYPES["A"]),
        (10 * GiB, 20 * GiB, DIRECTORY_TYPES["B"]),
        (20 * GiB, None, DIRECTORY_TYPES["C"]),
    ]


@pytest.mark.parametrize("marks,n", [([5, 5], 3), ([5, 3], 3), ([0], 2), ([5], 1), ([], 2)])
def test_build_layout_rejects(marks, n):
    with pytest.raises(LayoutError):
        build_layout(marks, [StripingConfig(1, 1)] * n)


def test_layout_invariants_enforced():
    cfg = StripingConfig(1, 1)
    with pytest.raises(LayoutError):
        CompositeLayout((SegmentSpec(1, None, cfg, "x"),))
    with pytest.raises(LayoutError):
        CompositeLayout((SegmentSpec(0, 5, cfg, "x"),))
    with pytest.raises(LayoutError):
        CompositeLayout((SegmentSpec(0, 5, cfg, "x"), SegmentSpec(6, None, cfg, "x")))
    with pytest.raises(LayoutError):
        CompositeLayout((SegmentSpec(0, None, cfg, "x"), SegmentSpec(6, None, cfg, "x")))


def test_dir_label_fractional_width():
    assert dir_label(StripingConfig(2, MiB // 2)) == "2ost-0.5mb"


def test_resolve_examples():
    assert resolve(TWO_MARKS, 0) == (0, 0)
    assert resolve(TWO_MARKS, 10 * GiB) == (2, 0)
    assert resolve(TWO_MARKS, 1 * GiB - 1) == (0, 1 * GiB - 1)
    assert resolve(TWO_MARKS, 1 * GiB) == (1, 0)


def test_split_range_itemises_three_sections():
    assert [sub for _, _, sub in split_range(TWO_MARKS, 0, 14 * GiB)] == [1 * GiB, 9 * GiB, 4 * GiB]


def test_split_range_inside_one_segment():
    assert split_range(TWO_MARKS, 2 * GiB, 12345) == [(1, 1 * GiB, 12345)]
    assert split_range(TWO_MARKS, 0, 0) == []


def test_split_range_across_watermark_per_byte():
    parts = split_range(TWO_MARKS, 1 * GiB - 512, 1024)
    assert parts == [(0, 1 * GiB - 512, 512), (1, 0, 512)]
    # cross-check with resolve applied to every byte
    owners = [resolve(TWO_MARKS, 1 * GiB - 512 + i)[0] for i in range(1024)]
    assert owners.count(0) == 512 and owners.count(1) == 512


@settings(max_examples=200, deadline=None)
@given(marks=st.lists(st.integers(1, 5000), min_size=0, max_size=5, unique=True),
       offset=st.integers(0, 6000), length=st.integers(0, 6000))
def test_split_range_coverage(marks, offset, length):
    marks = sorted(marks)
    layout = build_layout(marks, [StripingConfig(1, 7)] * (len(marks) + 1))
    parts = split_range(layout, offset, length)
    assert sum(p[2] for p in parts) == length
    pos = offset
    for idx, within, sub in parts:
        seg = layout.segments[idx]
        assert seg.start + within == pos
        assert seg.contains(pos) and seg.contains(pos + sub - 1)
        assert idx == composite_owner(marks, pos)
        pos += sub


@settings(max_examples=100, deadline=None)
@given(marks=st.lists(st.integers(1, 10**6), min_size=1, max_size=6, unique=True),
       offsets=st.lists(st.integers(0, 2 * 10**6), min_size=2, max_size=30))
def test_resolve_monotone(marks, offsets):
    layout = build_layout(sorted(marks), [StripingConfig(1, 1)] * (len(marks) + 1))
    idxs = [resolve(layout, o)[0] for o in sorted(offsets)]
    assert idxs == sorted(idxs)


def test_full_decompose_single_segment_identity():
    cfg = DIRECTORY_TYPES["F"]
    layout = single(cfg)
    got = full_decompose(layout, POOL, 3 * MiB + 17, 40 * MiB)
    assert got == [(0, c) for _, c in decompose_extent(cfg, 3 * MiB + 17, 40 * MiB)]


def test_full_decompose_across_first_watermark():
    start = 1 * GiB - MiB
    frags = full_decompose(TWO_MARKS, POOL, start, 2 * MiB)
    # per-byte oracle over the composite mapping, one walker per segment
    walkers = {0: UnitWalker(4, MiB, 1 * GiB), 1: UnitWalker(8, 2 * MiB, 4 * MiB)}
    expected = []
    pos = start
    while pos < start + 2 * MiB:
        seg = composite_owner([1 * GiB, 10 * GiB], pos)
        within = pos - (0 if seg == 0 else 1 * GiB)
        w = walkers[seg]
        stop = min(w.unit_end(within), within + (start + 2 * MiB - pos))
        if seg == 0:
            stop = min(stop, 1 * GiB)
        ost, obj = w.lookup(within)
        expected.append((seg, ost, obj, stop - within))
        pos += stop - within
    got = [(s, c.ost_ordinal, c.object_offset, c.length) for s, c in frags]
    assert got == expected
    assert [s for s, _ in frags] == [0, 1]


def test_full_decompose_netflow4_conservation():
    layout = build_layout([10 * GiB], [DIRECTORY_TYPES["A"], DIRECTORY_TYPES["B"]])
    frags = full_decompose(layout, POOL, 0, 55 * GiB)
    assert sum(c.length for _, c in frags) == 55 * GiB


def test_full_decompose_rejects_small_pool():
    with pytest.raises(LayoutError):
        full_decompose(single(DIRECTORY_TYPES["D"]), OstPool.of_size(16), 0, 10)


def test_segment_ost_ids_rotate_and_zero():
    layout = build_layout([1 * GiB, 2 * GiB], [DIRECTORY_TYPES[c] for c in "ABC"])
    rot = segment_ost_ids(layout, POOL)
    assert rot[0] == (0, 1, 2, 3)
    assert rot[1] == tuple(range(4, 12))
    assert rot[2] == tuple(range(12, 28))
    zero = segment_ost_ids(layout, POOL, "zero")
    assert zero[2] == tuple(range(16))
    wrap = segment_ost_ids(build_layout([1], [DIRECTORY_TYPES["D"], DIRECTORY_TYPES["A"]]), POOL)
    assert wrap[1] == (0, 1, 2, 3)
    assert segment_ost_ids(single(DIRECTORY_TYPES["B"]), POOL) == [tuple(range(8))]
