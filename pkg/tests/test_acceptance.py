"""Acceptance gate: one test (or small group) per criterion, each tagged with
``@pytest.mark.criterion`` so the run ends with a PASS/FAIL line per
criterion."""

import hashlib
import random
import re
import statistics
import time
from functools import lru_cache

import pytest

from dynstripe.composite import DIRECTORY_TYPES, build_layout, split_range
from dynstripe.layout import OstPool, StripingConfig, decompose_extent, map_offset
from dynstripe.runner import ExperimentConfig, run
from dynstripe.results import rows_to_csv
from dynstripe.segstore import LogicalFile, export_merge, import_split
from dynstripe.sim import ClusterModel, default_cluster, simulate
from dynstripe.sizes import GiB, KiB, MiB, TiB
from dynstripe.trace import IoTrace, OpKind, Phase, sequential_ops
from dynstripe.workloads import ASYNC, SYNC, experiment_presets

from oracles import UnitWalker, per_byte_placement

criterion = pytest.mark.criterion

# Striping patterns as printed in the experiment tables, copied by hand.
FIXTURE = """
IOR.1     Entire file in A
IOR.2     Entire file in B
IOR.3     Entire file in C
IOR.4     0-1 TB in A, remainder in B
IOR.5     0-1 TB in A, remainder in C
IOR.6     0-1 TB in A, 1-2 TB in B, remainder in C
netflow.1 Entire file in A
netflow.2 Entire file in B
netflow.3 Entire file in C
netflow.4 0-10 GB in A, remainder in B
netflow.5 0-10 GB in A, remainder in C
netflow.6 0-10 GB in A, 10-20 GB in B, remainder in C
blast.1   Entire file in A
blast.2   Entire file in C
blast.3   Entire file in D
blast.4   Entire file in E
blast.5   Entire file in F
blast.6   Entire file in G
blast.7   Entire file in H
blast.8   Entire file in I
blast.9   Entire file in J
blast.10  0-26 GB in A, 26-52 GB in E, remainder in H
blast.11  0-26 GB in C, 26-52 GB in F, remainder in I
blast.12  0-26 GB in D, 26-52 GB in G, remainder in J
blast.13  0-26 GB in A, 26-52 GB in C, remainder in D
blast.14  0-26 GB in E, 26-52 GB in F, remainder in G
blast.15  0-26 GB in H, 26-52 GB in I, remainder in J
blast.16  0-26 GB in A, 26-52 GB in F, remainder in J
blast.17  0-20 GB in A, 20-40 GB in F, remainder in J
blast.18  0-8 GB in A, 8-28 GB in F, remainder in J
"""

DIR_TYPES = {"A": (4, 1), "B": (8, 1), "C": (16, 1), "D": (64, 1), "E": (4, 2),
          "F": (16, 2), "G": (64, 2), "H": (4, 4), "I": (16, 4), "J": (64, 4)}


def parse_fixture():
    unit = {"GB": GiB, "TB": TiB}
    out = {}
    for line in FIXTURE.strip().splitlines():
        name, pattern = line.split(None, 1)
        letters, marks = [], []
        for part in pattern.split(", "):
            m = re.fullmatch(r"(?:Entire file|remainder|(\d+)-(\d+) (GB|TB)) in ([A-J])", part)
            letters.append(m.group(4))
            if m.group(2):
                marks.append(int(m.group(2)) * unit[m.group(3)])
        out[name] = ("".join(letters), marks)
    return out


# 1. mapping oracle

def _check_type(count, width):
    cfg = StripingConfig(count, width * MiB)
    W = cfg.stripe_width
    limit = 64 * MiB
    walker = UnitWalker(count, W, limit + 2 * W)
    samples = set(range(0, limit, 4093))
    for b in range(0, limit + 1, W):
        samples.update((b - 1, b, b + 1))
    samples = sorted(x for x in samples if 0 <= x < limit)
    for x in samples:
        assert map_offset(cfg, x) == walker.lookup(x), (count, width, x)
    # extents between consecutive samples tile the range; every fragment is
    # checked against the walker and must stop at the end of its unit
    for a, b in zip(samples, samples[1:] + [limit]):
        pos = a
        for logical, chunk in decompose_extent(cfg, a, b - a):
            assert logical == pos
            assert (chunk.ost_ordinal, chunk.object_offset) == walker.lookup(pos)
            assert pos + chunk.length == min(walker.unit_end(pos), b)
            pos += chunk.length
        assert pos == b
    return len(samples)


@criterion(1, "mapping oracle equivalence")
def test_c1_mapping_matches_oracle():
    t0 = time.perf_counter()
    for letter, (count, width) in DIR_TYPES.items():
        assert DIRECTORY_TYPES[letter] == StripingConfig(count, width * MiB)
        _check_type(count, width)
    elapsed = time.perf_counter() - t0
    print(f"criterion 1: all directory types checked in {elapsed:.2f}s")
    assert elapsed < 10


@pytest.mark.parametrize("letter", sorted(DIR_TYPES))
def test_unit_walker_matches_byte_walk(letter):
    # the oracle itself against a literal byte-at-a-time walk across the
    # first unit boundary (kept out of the timed check above)
    count, width = DIR_TYPES[letter]
    W = width * MiB
    walker = UnitWalker(count, W, 3 * W)
    brute = per_byte_placement(count, W, W + 2)
    for x in (0, 1, W - 2, W - 1, W, W + 1):
        assert brute[x] == walker.lookup(x)


# 2. composite resolution

@criterion(2, "composite resolution")
def test_c2_watermark_example_split():
    layout = build_layout([1 * MiB, 10 * MiB], [StripingConfig(4, MiB), StripingConfig(8, 2 * MiB),
                                                StripingConfig(16, 4 * MiB)])
    parts = split_range(layout, 0, 14 * MiB)
    assert [(i, sub) for i, _, sub in parts] == [(0, 1 * MiB), (1, 9 * MiB), (2, 4 * MiB)]
    assert [within for _, within, _ in parts] == [0, 0, 0]


# 3. segment store round trip

C3_LAYOUT = build_layout([1 * MiB, 10 * MiB], [StripingConfig(4, MiB), StripingConfig(8, 2 * MiB),
                                               StripingConfig(16, 4 * MiB)])


@criterion(3, "segment-store round trip")
def test_c3_random_writes_match_shadow(tmp_path):
    t0 = time.perf_counter()
    rng = random.Random(2024)
    span = 14 * MiB
    shadow = bytearray()
    lf = LogicalFile.create(tmp_path, "rt", C3_LAYOUT)
    for _ in range(1000):
        n = rng.randint(1, 192 * KiB)
        # bias some writes onto the watermarks
        if rng.random() < 0.2:
            off = max(0, rng.choice(C3_LAYOUT.watermarks) - rng.randint(0, n))
        else:
            off = rng.randrange(span)
        data = rng.randbytes(n)
        lf.write_at(off, data)
        if off + n > len(shadow):
            shadow.extend(bytes(off + n - len(shadow)))
        shadow[off:off + n] = data
    lf.close()
    back = LogicalFile.open(tmp_path, "rt")
    assert back.logical_size == len(shadow)
    assert back.read_at(0, len(shadow)) == bytes(shadow)
    back.close()
    assert time.perf_counter() - t0 < 60


@criterion(3, "segment-store round trip")
@pytest.mark.parametrize("size_name", ["0", "1", "W-1", "W", "W+1", "10W"])
def test_c3_split_merge_checksums(tmp_path, size_name):
    W = C3_LAYOUT.watermarks[0]
    size = {"0": 0, "1": 1, "W-1": W - 1, "W": W, "W+1": W + 1, "10W": 10 * W}[size_name]
    src = tmp_path / "src"
    src.write_bytes(random.Random(size).randbytes(size))
    lf = import_split(src, tmp_path / "store", "f", C3_LAYOUT)
    dest = tmp_path / "dest"
    export_merge(lf, dest)
    assert hashlib.sha256(dest.read_bytes()).digest() == hashlib.sha256(src.read_bytes()).digest()


# 4. simulator closed forms

def _tiny_cluster(clients):
    return ClusterModel(num_clients=clients, client_link_bw=3e9, num_oss=1, oss_bw_cap=2e9,
                        osts_per_oss=1, ost_bw=4e8, per_op_latency=0.0, seek_penalty=0.0,
                        aggregate_fabric_bw=1e10)


def _reads(streams):
    ops = []
    for t, (start, n) in enumerate(streams):
        ops.extend(sequential_ops(t, 0, OpKind.READ, start, n, MiB, 1, len(ops)))
    return IoTrace((Phase("read", tuple(ops)),))


@criterion(4, "simulator closed forms")
def test_c4_closed_forms():
    layout = build_layout([], [StripingConfig(1, MiB)])
    pool = OstPool.of_size(1)
    B = 24 * MiB + 999
    one = simulate(_tiny_cluster(1), pool, layout, _reads([(0, B)])).phases[0].wall_time
    expect1 = B / min(3e9, 4e8, 2e9)
    assert abs(one - expect1) <= 1e-9 * expect1
    two = simulate(_tiny_cluster(2), pool, layout, _reads([(0, B), (B, B)])).phases[0].wall_time
    assert abs(two - 2 * expect1) <= 1e-9 * 2 * expect1


# shared preset runs for criteria 5-8

@lru_cache(maxsize=None)
def preset_result(name, variant=None):
    cl = default_cluster()
    exp = experiment_presets()[name]
    trace = exp.trace("desk", seed=0, variant=variant)
    res = simulate(exp.cluster_for(cl), OstPool.of_size(cl.num_osts), exp.layout("desk"), trace)
    return trace, res


def all_runs():
    for name, exp in experiment_presets().items():
        for v in ((SYNC, ASYNC) if exp.family == "netflow" else (None,)):
            yield name, v


@criterion(5, "conservation and bounds")
@pytest.mark.parametrize("name,variant", list(all_runs()))
def test_c5_conservation_and_bound(name, variant):
    trace, res = preset_result(name, variant)
    assert sum(res.ost_bytes.values()) == trace.nbytes
    for p in res.phases:
        assert p.throughput <= p.bound


# 6-7. IOR trends

def ior(name, phase):
    return preset_result(name)[1].phase(phase).throughput


@criterion(6, "IOR sequential reads favour dynamic layouts")
def test_c6_reads():
    t0 = time.perf_counter()
    base = ior("IOR.1", "read")
    for n in ("IOR.4", "IOR.5", "IOR.6"):
        print(f"{n} read {ior(n, 'read') / 1e6:.1f} MB/s vs IOR.1 {base / 1e6:.1f} MB/s")
        assert ior(n, "read") > base
    assert time.perf_counter() - t0 < 60


@criterion(7, "IOR writes no worse with matching minimum stripe count")
def test_c7_writes():
    for dyn, static in (("IOR.4", "IOR.1"), ("IOR.5", "IOR.2"), ("IOR.6", "IOR.3")):
        assert ior(dyn, "write") >= 0.99 * ior(static, "write"), (dyn, static)


def test_ior6_vs_ior5_soft_check():
    # not an acceptance criterion; the cache-free model is expected to
    # order these this way, so report rather than fail if it does not
    if ior("IOR.6", "read") < ior("IOR.5", "read"):
        pytest.skip("IOR.6 read below IOR.5 in this model")


# 8. netflow random reads

@criterion(8, "netflow phase 2 insensitive to layout")
@pytest.mark.parametrize("variant", [SYNC, ASYNC])
def test_c8_netflow_phase2(variant):
    tput = [preset_result(f"netflow.{i}", variant)[1].phase("model").throughput
            for i in range(1, 7)]
    mid = statistics.median(tput)
    print(variant, [f"{t / 1e6:.2f}" for t in tput], f"median {mid / 1e6:.2f} MB/s")
    assert all(abs(t - mid) <= 0.25 * mid for t in tput)


# 9. determinism

@criterion(9, "determinism")
@pytest.mark.parametrize("name,variant", [("IOR.6", None), ("netflow.5", SYNC),
                                          ("netflow.6", ASYNC), ("blast.16", None)])
def test_c9_identical_result_files(tmp_path, name, variant):
    blobs = []
    for k in range(2):
        out = run(ExperimentConfig(preset=name, variant=variant, repetitions=2, seed=17))
        path = tmp_path / f"{k}.csv"
        path.write_text(rows_to_csv(out.rows))
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1]


# 10. preset fidelity

@criterion(10, "preset fidelity")
def test_c10_presets_match_tables():
    fixture = parse_fixture()
    presets = experiment_presets()
    assert len(fixture) == 30
    assert set(presets) == set(fixture)
    for name, (letters, marks) in fixture.items():
        exp = presets[name]
        assert exp.letters == letters, name
        assert exp.watermarks("paper") == marks, name
        assert exp.watermarks("desk") == [m // 1024 for m in marks], name
        layout = exp.layout("paper")
        assert layout.watermarks == marks
        assert [(c.stripe_count, c.stripe_width // MiB) for c in layout.configs] == \
            [DIR_TYPES[c] for c in letters]
