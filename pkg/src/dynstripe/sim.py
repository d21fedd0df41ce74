"""Fluid-flow simulator of a striped storage cluster.

Every op of a trace is cut into stripe-unit fragments (see
:func:`dynstripe.composite.full_decompose`).  A fragment first waits out a
fixed per-op latency, plus a seek penalty when it does not continue the
previous access on its OST, and then becomes a transfer that needs
bandwidth from four resources: its client link, the shared fabric, the
owning OSS and the owning OST.  Active transfers share bandwidth max-min
fairly; time jumps from one transfer completion (or latency expiry) to the
next.  No cache is modelled.

OST at pool position ``p`` is served by OSS ``p % num_oss``, the way a
balanced allocator interleaves targets across servers.
"""

import heapq
import json
import math
from collections import defaultdict, deque
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .composite import CompositeLayout, full_decompose, segment_ost_ids
from .layout import LayoutError, OstPool
from .trace import IoTrace, Phase

_REL = 1e-12


@dataclass(frozen=True)
class ClusterModel:
    num_clients: int
    client_link_bw: float
    num_oss: int
    oss_bw_cap: float
    osts_per_oss: int
    ost_bw: float
    per_op_latency: float
    seek_penalty: float
    aggregate_fabric_bw: float

    def __post_init__(self):
        for name in ("num_clients", "num_oss", "osts_per_oss"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        for name in ("client_link_bw", "oss_bw_cap", "ost_bw", "aggregate_fabric_bw"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("per_op_latency", "seek_penalty"):
            if not getattr(self, name) >= 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def num_osts(self):
        return self.num_oss * self.osts_per_oss

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known - {"comment"}
        if unknown:
            raise ValueError(f"unknown cluster fields: {sorted(unknown)}")
        missing = known - set(d)
        if missing:
            raise ValueError(f"missing cluster fields: {sorted(missing)}")
        return cls(**{k: d[k] for k in known})

    def to_dict(self):
        return asdict(self)


def load_cluster(path) -> ClusterModel:
    """Read a cluster description from a JSON file (keys = ClusterModel fields)."""
    with open(path) as f:
        return ClusterModel.from_dict(json.load(f))


DEFAULT_CLUSTER_FILE = Path(__file__).with_name("configs") / "reference-cluster.json"


def default_cluster() -> ClusterModel:
    return load_cluster(DEFAULT_CLUSTER_FILE)


@dataclass
class PhaseResult:
    name: str
    wall_time: float
    nbytes: int
    throughput: float
    fragments: int
    bound: float        # min of client, OST, OSS and fabric aggregate capacity in use


@dataclass
class SimResult:
    phases: List[PhaseResult]
    ost_bytes: Dict[int, int]
    ost_busy: Dict[int, float]
    total_fragments: int
    seed: int = 0
    meta: Dict[str, str] = field(default_factory=dict)

    @property
    def total_bytes(self):
        return sum(p.nbytes for p in self.phases)

    def phase(self, name) -> PhaseResult:
        for p in self.phases:
            if p.name == name:
                return p
        raise KeyError(name)


def max_min_rates(demands: Sequence[Tuple[Tuple[int, ...], int]], caps: Sequence[float]
                  ) -> List[float]:
    """Max-min fair per-flow rates by progressive filling.

    ``demands[i] = (resources, n)`` describes ``n`` identical flows that each
    cross every resource id in ``resources``.  Returns the per-flow rate of
    each entry.
    """
    count = defaultdict(int)
    members = defaultdict(list)
    for i, (res, n) in enumerate(demands):
        for r in res:
            count[r] += n
            members[r].append(i)
    remaining = {r: float(caps[r]) for r in count}
    rates = [None] * len(demands)
    left = len(demands)
    while left:
        best_r = None
        best = math.inf
        for r, c in count.items():
            if c > 0:
                share = remaining[r] / c
                if share < best:
                    best, best_r = share, r
        for i in members[best_r]:
            if rates[i] is None:
                rates[i] = best
                left -= 1
                res, n = demands[i]
                for r in res:
                    remaining[r] = max(0.0, remaining[r] - best * n)
                    count[r] -= n
    return rates


class _Group:
    """Transfers with the same (client, OST) signature.

    Max-min fairness gives such flows equal rates, so the group is a
    processor-sharing queue: ``vtime`` counts bytes delivered to each member
    and a member finishes once ``vtime`` reaches its tag.
    """
    __slots__ = ("client", "ost", "oss", "res", "vtime", "rate", "heap")

    def __init__(self, client, ost, oss, res):
        self.client = client
        self.ost = ost
        self.oss = oss
        self.res = res
        self.vtime = 0.0
        self.rate = 0.0
        self.heap = []


class _Engine:
    def __init__(self, cluster: ClusterModel, pool: OstPool, layout: CompositeLayout):
        if cluster.num_osts != pool.num_osts:
            raise LayoutError(
                f"cluster has {cluster.num_osts} OSTs but the pool has {pool.num_osts}")
        self.cluster = cluster
        self.pool = pool
        self.layout = layout
        pos = {oid: i for i, oid in enumerate(pool.ost_ids)}
        self.seg_pos = [[pos[o] for o in ids] for ids in segment_ost_ids(layout, pool)]
        c = cluster.num_clients
        self.fabric = c
        self.oss_base = c + 1
        self.ost_base = c + 1 + cluster.num_oss
        self.caps = ([cluster.client_link_bw] * c + [cluster.aggregate_fabric_bw]
                     + [cluster.oss_bw_cap] * cluster.num_oss + [cluster.ost_bw] * pool.num_osts)
        self.last_access = {}
        self.ost_bytes = [0] * pool.num_osts
        self.ost_busy = [0.0] * pool.num_osts
        self.seq = 0

    def fragments(self, op):
        out = []
        for seg, chunk in full_decompose(self.layout, self.pool, op.offset, op.length):
            out.append((self.seg_pos[seg][chunk.ost_ordinal], seg, chunk.object_offset,
                        chunk.length))
        return out

    def allocate(self, groups):
        cl = self.cluster
        per_ost = defaultdict(int)
        for g in groups.values():
            per_ost[g.ost] += len(g.heap)
        # Try the OST-bound allocation first; it is the max-min solution
        # whenever no other resource ends up over capacity.
        client_load = defaultdict(float)
        oss_load = defaultdict(float)
        total = 0.0
        for g in groups.values():
            g.rate = cl.ost_bw / per_ost[g.ost]
            load = g.rate * len(g.heap)
            client_load[g.client] += load
            oss_load[g.oss] += load
            total += load
        slack = 1 + _REL
        if (total <= cl.aggregate_fabric_bw * slack
                and all(v <= cl.client_link_bw * slack for v in client_load.values())
                and all(v <= cl.oss_bw_cap * slack for v in oss_load.values())):
            return
        glist = list(groups.values())
        rates = max_min_rates([(g.res, len(g.heap)) for g in glist], self.caps)
        for g, r in zip(glist, rates):
            g.rate = r

    def run_phase(self, phase: Phase, t0: float):
        cl = self.cluster
        ops = phase.ops
        frags = [self.fragments(op) for op in ops]
        op_left = [len(f) for f in frags]
        children = [[] for _ in ops]
        roots = defaultdict(list)
        stream_left = defaultdict(int)
        for i, op in enumerate(ops):
            stream_left[op.task_id] += 1
            if op.after is None:
                roots[op.task_id].append(i)
            else:
                children[op.after].append(i)
        stream_client = {}
        queue = deque()
        if phase.workers is None:
            for tid in stream_left:
                stream_client[tid] = tid % cl.num_clients
            starters = list(stream_left)
        else:
            queue.extend(sorted(stream_left))
            starters = []
            for w in range(min(phase.workers, len(queue))):
                tid = queue.popleft()
                stream_client[tid] = w % cl.num_clients
                starters.append(tid)

        now = t0
        groups = {}
        pending = []
        ost_load = defaultdict(int)
        used_clients, used_osts = set(), set()
        seq = self.seq

        def join(i, client, frag):
            nonlocal seq
            ost, _, _, length = frag
            key = (client, ost)
            g = groups.get(key)
            if g is None:
                oss = ost % cl.num_oss
                g = groups[key] = _Group(client, ost, oss, (
                    client, self.fabric, self.oss_base + oss, self.ost_base + ost))
            seq += 1
            heapq.heappush(g.heap, (g.vtime + length, seq, i, ost, length))

        def issue(i):
            nonlocal seq
            client = stream_client[ops[i].task_id]
            used_clients.add(client)
            for frag in frags[i]:
                ost, seg, obj, length = frag
                used_osts.add(ost)
                delay = cl.per_op_latency
                if self.last_access.get(ost) != (seg, obj):
                    delay += cl.seek_penalty
                self.last_access[ost] = (seg, obj + length)
                ost_load[ost] += 1
                if delay > 0:
                    seq += 1
                    heapq.heappush(pending, (now + delay, seq, i, client, frag))
                else:
                    join(i, client, frag)

        def op_done(i):
            for c in children[i]:
                issue(c)
            tid = ops[i].task_id
            stream_left[tid] -= 1
            if stream_left[tid] == 0 and queue:
                nxt = queue.popleft()
                stream_client[nxt] = stream_client[tid]
                for r in roots[nxt]:
                    issue(r)

        for tid in starters:
            for r in roots[tid]:
                issue(r)

        while groups or pending:
            if groups:
                self.allocate(groups)
            t_next = math.inf
            first = None
            for g in groups.values():
                t = now + (g.heap[0][0] - g.vtime) / g.rate
                if t < t_next:
                    t_next, first = t, g
            if pending and pending[0][0] <= t_next:
                t_next, first = pending[0][0], None
            dt = t_next - now
            if dt > 0:
                for g in groups.values():
                    g.vtime += g.rate * dt
                for o, n in ost_load.items():
                    if n:
                        self.ost_busy[o] += dt
                now = t_next
            finished = []
            if first is not None:
                finished.append(heapq.heappop(first.heap))
            for key in list(groups):
                g = groups[key]
                heap = g.heap
                while heap and heap[0][0] - g.vtime <= _REL * heap[0][0] + 1e-9:
                    finished.append(heapq.heappop(heap))
                if not heap:
                    del groups[key]
            finished.sort(key=lambda f: f[1])
            for _, _, i, ost, length in finished:
                self.ost_bytes[ost] += length
                ost_load[ost] -= 1
                op_left[i] -= 1
                if op_left[i] == 0:
                    op_done(i)
            while pending and pending[0][0] <= now:
                _, _, i, client, frag = heapq.heappop(pending)
                join(i, client, frag)

        self.seq = seq
        if any(op_left):
            raise RuntimeError(f"phase {phase.name!r} stalled with unfinished ops")
        nbytes = phase.nbytes
        wall = now - t0
        used_oss = {o % cl.num_oss for o in used_osts}
        bound = min(len(used_clients) * cl.client_link_bw, len(used_osts) * cl.ost_bw,
                    len(used_oss) * cl.oss_bw_cap, cl.aggregate_fabric_bw)
        result = PhaseResult(phase.name, wall, nbytes, nbytes / wall if wall > 0 else math.inf,
                             sum(len(f) for f in frags), bound)
        return result, now


def simulate(cluster: ClusterModel, pool: OstPool, layout: CompositeLayout, trace: IoTrace,
             seed: int = 0) -> SimResult:
    """Run ``trace`` against ``layout`` on ``cluster``.

    The model itself has no random elements; ``seed`` is carried into the
    result so reruns can be matched with the workload that produced them.
    """
    trace.validate()
    eng = _Engine(cluster, pool, layout)
    now = 0.0
    phases = []
    for phase in trace.phases:
        if not phase.ops:
            continue
        res, now = eng.run_phase(phase, now)
        phases.append(res)
    ids = pool.ost_ids
    return SimResult(
        phases=phases,
        ost_bytes={ids[i]: b for i, b in enumerate(eng.ost_bytes) if b},
        ost_busy={ids[i]: t for i, t in enumerate(eng.ost_busy) if t},
        total_fragments=sum(p.fragments for p in phases),
        seed=seed,
        meta={"workload": trace.workload, "variant": trace.variant},
    )


class UnknownExperimentError(KeyError):
    pass


def sweep(cluster: ClusterModel, pool: OstPool, experiments, seed: int = 0,
          scale: str = "desk", variant: Optional[str] = None) -> List[Tuple[str, SimResult]]:
    """Simulate a list of named presets (or :class:`Experiment` objects) in order."""
    from .workloads.presets import Experiment, experiment_presets

    presets = experiment_presets()
    out = []
    for item in experiments:
        if isinstance(item, Experiment):
            exp = item
        else:
            try:
                exp = presets[item]
            except KeyError:
                raise UnknownExperimentError(item) from None
        layout = exp.layout(scale)
        trace = exp.trace(scale, seed=seed, variant=variant)
        out.append((exp.name, simulate(exp.cluster_for(cluster), pool, layout, trace, seed)))
    return out
