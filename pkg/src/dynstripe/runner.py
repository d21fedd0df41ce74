"""Experiment runner: repeat a preset (or an inline layout + workload) in the
simulator or against real segment files, and collect result rows."""

import logging
import random
import shlex
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

from .composite import CompositeLayout, full_decompose
from .layout import OstPool
from .results import ResultRow, median_rows
from .segstore import LogicalFile, remove_logical
from .sim import ClusterModel, default_cluster, load_cluster, simulate
from .trace import IoTrace, OpKind, Phase
from .workloads.ior import IorSpec, gen_ior
from .workloads.netflow import NetflowSpec, gen_netflow_data, gen_netflow_trace
from .workloads.presets import Experiment, experiment_presets
from .workloads.scan import ScanRandomSpec, gen_scan_random

log = logging.getLogger(__name__)

SIM = "sim"
FILE = "file"
INDICATIVE = "indicative"
HOOK_FAILED = "hook-failed"

WorkloadSpec = Union[IorSpec, NetflowSpec, ScanRandomSpec]


class UnknownPresetError(KeyError):
    pass


@dataclass
class ExperimentConfig:
    preset: Optional[str] = None
    # inline alternative to a preset
    name: Optional[str] = None
    layout: Optional[CompositeLayout] = None
    workload: Optional[WorkloadSpec] = None

    mode: str = SIM
    repetitions: int = 1
    seed: int = 0
    out: Optional[str] = None
    cluster: Optional[str] = None      # JSON path; packaged default when None
    root: Optional[str] = None         # FILE mode
    hook: Optional[str] = None         # cache-drop command run between repetitions
    scale: str = "desk"
    variant: Optional[str] = None
    workers: int = 8                   # FILE mode thread cap

    def __post_init__(self):
        if self.mode not in (SIM, FILE):
            raise ValueError(f"mode must be {SIM!r} or {FILE!r}")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.mode == FILE and not self.root:
            raise ValueError("FILE mode needs a root path")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if (self.preset is None) == (self.layout is None or self.workload is None):
            raise ValueError("give either a preset or both an inline layout and workload")

    @property
    def label(self):
        return self.preset or self.name or "custom"


@dataclass
class RunOutcome:
    rows: List[ResultRow]
    completed: int
    requested: int
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self):
        return self.completed == self.requested


def _inline_trace(spec: WorkloadSpec, variant):
    if isinstance(spec, IorSpec):
        return gen_ior(spec)
    if isinstance(spec, NetflowSpec):
        return gen_netflow_trace(spec, gen_netflow_data(spec, None)[1])
    if isinstance(spec, ScanRandomSpec):
        return gen_scan_random(spec)
    raise TypeError(f"unsupported workload spec {type(spec).__name__}")


def resolve(config: ExperimentConfig):
    """``(layout, trace, cluster)`` for a config."""
    cluster = load_cluster(config.cluster) if config.cluster else default_cluster()
    if config.preset is not None:
        try:
            exp: Experiment = experiment_presets()[config.preset]
        except KeyError:
            raise UnknownPresetError(config.preset) from None
        return (exp.layout(config.scale),
                exp.trace(config.scale, seed=config.seed, variant=config.variant),
                exp.cluster_for(cluster))
    return config.layout, _inline_trace(config.workload, config.variant), cluster


def run_hook(command) -> bool:
    try:
        proc = subprocess.run(shlex.split(command), capture_output=True, text=True)
    except OSError as e:
        log.warning("cache-drop hook could not start: %s", e)
        return False
    if proc.returncode != 0:
        log.warning("cache-drop hook exited %d: %s", proc.returncode, proc.stderr.strip())
        return False
    return True


def run(config: ExperimentConfig) -> RunOutcome:
    """Run all repetitions; detail rows first, then one median row per phase."""
    layout, trace, cluster = resolve(config)
    trace.validate()
    if config.mode == SIM:
        return _run_sim(config, layout, trace, cluster)
    return _run_file(config, layout, trace, cluster)


def _run_sim(config, layout, trace, cluster) -> RunOutcome:
    pool = OstPool.of_size(cluster.num_osts)
    variant = trace.variant
    rows = []
    for rep in range(1, config.repetitions + 1):
        res = simulate(cluster, pool, layout, trace, seed=config.seed)
        for p in res.phases:
            rows.append(ResultRow.measured(config.label, variant, rep, p.name, p.wall_time,
                                           p.nbytes, p.fragments))
    return RunOutcome(rows + median_rows(rows), config.repetitions, config.repetitions)


# file-backed execution

def count_fragments(layout, pool, phase: Phase) -> int:
    return sum(len(full_decompose(layout, pool, op.offset, op.length)) for op in phase.ops)


def _populate(lf: LogicalFile, trace: IoTrace, config: ExperimentConfig):
    """Lay down input data for workloads that only read."""
    if any(op.kind == OpKind.WRITE for p in trace.phases for op in p.ops):
        return
    spec = config.workload
    if config.preset is not None:
        exp = experiment_presets()[config.preset]
        spec = exp.workload_spec(config.scale, config.seed, config.variant)
    if isinstance(spec, NetflowSpec):
        class _Appender:
            pos = 0

            def write(self, data):
                lf.write_at(self.pos, data)
                self.pos += len(data)

        gen_netflow_data(spec, _Appender())
    else:
        end = max(op.offset + op.length for p in trace.phases for op in p.ops)
        rng = random.Random(config.seed)
        chunk = 4 << 20
        for off in range(0, end, chunk):
            lf.write_at(off, rng.randbytes(min(chunk, end - off)))
    lf.sync()


def execute_phase(lf: LogicalFile, phase: Phase, max_workers: int) -> float:
    """Run one phase's streams on a thread pool; returns the wall time.

    Each stream's ops run in order, which honours every ``after`` edge.
    """
    streams = {}
    for op in phase.ops:
        streams.setdefault(op.task_id, []).append(op)
    longest = max((op.length for op in phase.ops if op.kind == OpKind.WRITE), default=0)
    payload = memoryview(bytes(range(256)) * (longest // 256 + 1))

    def drain(ops):
        for op in ops:
            if op.kind == OpKind.WRITE:
                lf.write_at(op.offset, payload[:op.length])
            else:
                lf.read_at(op.offset, op.length)

    n = min(max_workers, phase.workers or len(streams))
    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=max(1, n)) as ex:
        for fut in [ex.submit(drain, streams[t]) for t in sorted(streams)]:
            fut.result()
    # guard the throughput division against a zero clock delta
    return max(time.perf_counter() - t0, 1e-9)


def _run_file(config, layout, trace, cluster) -> RunOutcome:
    pool = OstPool.of_size(cluster.num_osts)
    root = Path(config.root)
    root.mkdir(parents=True, exist_ok=True)
    name = f"bench-{config.label}"
    remove_logical(root, name)
    lf = LogicalFile.create(root, name, layout)
    frags = {p.name: count_fragments(layout, pool, p) for p in trace.phases if p.ops}
    rows, warnings = [], []
    completed = 0
    try:
        _populate(lf, trace, config)
        for rep in range(1, config.repetitions + 1):
            flags = [INDICATIVE]
            if config.hook and rep > 1 and not run_hook(config.hook):
                flags.append(HOOK_FAILED)
                warnings.append(f"repetition {rep}: cache-drop hook failed")
            rep_rows = []
            try:
                for p in trace.phases:
                    if not p.ops:
                        continue
                    wall = execute_phase(lf, p, config.workers)
                    rep_rows.append(ResultRow.measured(config.label, trace.variant, rep, p.name,
                                                       wall, p.nbytes, frags[p.name],
                                                       ";".join(flags)))
                lf.sync()
            except OSError as e:
                warnings.append(f"repetition {rep} failed: {e}")
                log.error("repetition %d failed: %s", rep, e)
                continue
            rows.extend(rep_rows)
            completed += 1
    finally:
        lf.close()
    return RunOutcome(rows + median_rows(rows), completed, config.repetitions, warnings)
