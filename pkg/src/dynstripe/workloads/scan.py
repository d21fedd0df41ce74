"""Scan-then-random-read workload shaped like a sequence-search run: a
sequential pass over a database followed by scattered reads around hits."""

import random
from dataclasses import dataclass

from ..sizes import KiB, MiB
from ..trace import IoTrace, OpKind, Phase, chained, sequential_ops

LOCALITIES = ("uniform", "clustered")


@dataclass(frozen=True)
class ScanRandomSpec:
    db_size: int
    num_tasks: int
    scan_chunk: int = 1 * MiB
    num_random_reads: int = 0
    read_size_min: int = 4 * KiB
    read_size_max: int = 64 * KiB
    hit_locality: str = "uniform"
    num_hotspots: int = 32           # clustered locality only
    seed: int = 0
    queue_depth: int = 4

    def __post_init__(self):
        if self.db_size < 1 or self.num_tasks < 1 or self.scan_chunk < 1:
            raise ValueError("db_size, num_tasks and scan_chunk must be positive")
        if self.num_random_reads < 0:
            raise ValueError("num_random_reads must be >= 0")
        if not 1 <= self.read_size_min <= self.read_size_max:
            raise ValueError("need 1 <= read_size_min <= read_size_max")
        if self.hit_locality not in LOCALITIES:
            raise ValueError(f"hit_locality must be one of {LOCALITIES}")
        if self.num_hotspots < 1 or self.queue_depth < 1:
            raise ValueError("num_hotspots and queue_depth must be positive")


def _hit_offsets(spec: ScanRandomSpec, rng: random.Random):
    if spec.hit_locality == "uniform":
        for _ in range(spec.num_random_reads):
            yield rng.randrange(spec.db_size)
        return
    spots = [rng.randrange(spec.db_size) for _ in range(spec.num_hotspots)]
    sigma = max(1.0, spec.db_size / 200)
    for _ in range(spec.num_random_reads):
        x = int(rng.gauss(rng.choice(spots), sigma))
        yield min(max(x, 0), spec.db_size - 1)


def gen_scan_random(spec: ScanRandomSpec) -> IoTrace:
    rng = random.Random(spec.seed)
    ops = []
    n = spec.num_tasks
    for t in range(n):
        lo, hi = t * spec.db_size // n, (t + 1) * spec.db_size // n
        if hi > lo:
            ops.extend(sequential_ops(t, 0, OpKind.READ, lo, hi - lo, spec.scan_chunk,
                                      spec.queue_depth, len(ops)))
    phases = [Phase("scan", tuple(ops))]

    if spec.num_random_reads:
        per_task = [[] for _ in range(n)]
        for k, off in enumerate(_hit_offsets(spec, rng)):
            size = rng.randint(spec.read_size_min, spec.read_size_max)
            per_task[k % n].append((off, min(size, spec.db_size - off)))
        ops = []
        for t, extents in enumerate(per_task):
            ops.extend(chained(t, 1, OpKind.READ, extents, base_index=len(ops)))
        phases.append(Phase("extend", tuple(ops)))
    return IoTrace(tuple(phases), workload="blast")
