"""Synthetic netflow data, its record index, and the two-phase analysis trace.

Record layout (network byte order)::

    offset  size  field
    0       2     total_length   (whole record, this field included)
    2       4     src_ip         (internal host; the record's model key)
    6       4     dst_ip
    10      2     src_port
    12      2     dst_port
    14      8     start_time     (microseconds)
    22      8     end_time
    30      8     byte_count
    38      8     packet_count
    46      1     protocol
    47      1     tcp_flags
    48      ...   payload descriptor, total_length - 48 bytes

Index file: a ``dynstripe-netflow-index v1`` header line, a column line
``offset<TAB>length<TAB>key`` and one line per record with the key written
as a dotted quad.
"""

import ipaddress
import random
import struct
from collections import defaultdict
from dataclasses import dataclass
from typing import BinaryIO, Iterator, List, NamedTuple, Optional, Tuple

from ..sizes import MiB
from ..trace import IoTrace, OpKind, Phase, chained, sequential_ops

HEADER = struct.Struct("!HIIHHQQQQBB")
HEADER_SIZE = HEADER.size  # 48
MAX_RECORD = 0xFFFF
INTERNAL_NET = 0x0A000000   # 10.0.0.0/8
INDEX_HEADER = "dynstripe-netflow-index v1"

SYNC = "sync"
ASYNC = "async"


class IndexEntry(NamedTuple):
    offset: int
    length: int
    key: int


class FlowRecord(NamedTuple):
    src_ip: int
    dst_ip: int
    src_port: int
    dst_port: int
    start_time: int
    end_time: int
    byte_count: int
    packet_count: int
    protocol: int
    tcp_flags: int
    payload: bytes


@dataclass(frozen=True)
class NetflowSpec:
    total_bytes: int
    num_tasks: int
    record_min: int = 256
    record_max: int = 2048
    record_shape: str = "uniform"     # or "fixed" (always record_min)
    seed: int = 0
    variant: str = SYNC
    async_chunk_size: int = 256 * MiB
    num_models: int = 1024
    model_skew: str = "uniform"       # or "zipf": a few hosts own most flows
    read_size: int = 1 * MiB
    queue_depth: int = 16

    def __post_init__(self):
        if self.total_bytes < 0 or self.num_tasks < 1 or self.num_models < 1:
            raise ValueError("total_bytes >= 0, num_tasks >= 1 and num_models >= 1 required")
        if not HEADER_SIZE <= self.record_min <= self.record_max <= MAX_RECORD:
            raise ValueError(f"record lengths must satisfy {HEADER_SIZE} <= min <= max <= {MAX_RECORD}")
        if self.record_shape not in ("uniform", "fixed"):
            raise ValueError(f"unknown record_shape {self.record_shape!r}")
        if self.model_skew not in ("uniform", "zipf"):
            raise ValueError(f"unknown model_skew {self.model_skew!r}")
        if self.variant not in (SYNC, ASYNC):
            raise ValueError(f"variant must be {SYNC!r} or {ASYNC!r}")
        if self.variant == ASYNC and self.async_chunk_size <= 0:
            raise ValueError("async variant needs async_chunk_size > 0")
        if self.read_size < 1 or self.queue_depth < 1:
            raise ValueError("read_size and queue_depth must be positive")


def encode_record(rec: FlowRecord) -> bytes:
    total = HEADER_SIZE + len(rec.payload)
    if total > MAX_RECORD:
        raise ValueError("record too long")
    return HEADER.pack(total, rec.src_ip, rec.dst_ip, rec.src_port, rec.dst_port,
                       rec.start_time, rec.end_time, rec.byte_count, rec.packet_count,
                       rec.protocol, rec.tcp_flags) + rec.payload


def decode_record(buf: bytes) -> FlowRecord:
    fields = HEADER.unpack_from(buf)
    total = fields[0]
    if total < HEADER_SIZE or len(buf) < total:
        raise ValueError(f"bad record length {total}")
    return FlowRecord(*fields[1:], payload=bytes(buf[HEADER_SIZE:total]))


def _model_weights(spec: NetflowSpec):
    if spec.model_skew == "uniform":
        return None
    return [1.0 / (k + 1) for k in range(spec.num_models)]


def synth_records(spec: NetflowSpec) -> Iterator[Tuple[int, FlowRecord]]:
    """Yield ``(total_length, record)`` pairs until the next one would not fit."""
    rng = random.Random(spec.seed)
    weights = _model_weights(spec)
    models = range(spec.num_models)
    written = 0
    t = 1_500_000_000_000_000
    while True:
        if spec.record_shape == "fixed":
            length = spec.record_min
        else:
            length = rng.randint(spec.record_min, spec.record_max)
        if written + length > spec.total_bytes:
            return
        if weights is None:
            m = rng.randrange(spec.num_models)
        else:
            m = rng.choices(models, weights)[0]
        t += rng.randrange(1, 5000)
        pkts = rng.randint(1, 5000)
        rec = FlowRecord(
            src_ip=INTERNAL_NET + m + 1,
            dst_ip=rng.getrandbits(32),
            src_port=rng.randrange(1024, 65536),
            dst_port=rng.choice((22, 53, 80, 123, 443, 8080)),
            start_time=t,
            end_time=t + rng.randrange(0, 60_000_000),
            byte_count=pkts * rng.randint(40, 1500),
            packet_count=pkts,
            protocol=rng.choice((6, 17)),
            tcp_flags=rng.getrandbits(8),
            payload=rng.randbytes(length - HEADER_SIZE),
        )
        written += length
        yield length, rec


def gen_netflow_data(spec: NetflowSpec, sink: Optional[BinaryIO]) -> Tuple[int, List[IndexEntry]]:
    """Write records to ``sink`` (skip writing if ``None``); return count and index."""
    index = []
    offset = 0
    for length, rec in synth_records(spec):
        if sink is not None:
            sink.write(encode_record(rec))
        index.append(IndexEntry(offset, length, rec.src_ip))
        offset += length
    return len(index), index


def parse_netflow(stream: BinaryIO) -> Iterator[Tuple[int, int, FlowRecord]]:
    """Sequentially parse a data file, yielding ``(offset, length, record)``."""
    offset = 0
    while True:
        head = stream.read(2)
        if not head:
            return
        if len(head) < 2:
            raise ValueError(f"truncated length field at offset {offset}")
        (length,) = struct.unpack("!H", head)
        if length < HEADER_SIZE:
            raise ValueError(f"record at {offset} claims length {length}")
        rest = stream.read(length - 2)
        if len(rest) != length - 2:
            raise ValueError(f"truncated record at offset {offset}")
        yield offset, length, decode_record(head + rest)
        offset += length


def write_index(index, path):
    with open(path, "w") as f:
        f.write(INDEX_HEADER + "\noffset\tlength\tkey\n")
        for e in index:
            f.write(f"{e.offset}\t{e.length}\t{ipaddress.IPv4Address(e.key)}\n")


def read_index(path) -> List[IndexEntry]:
    with open(path) as f:
        if f.readline().rstrip("\n") != INDEX_HEADER:
            raise ValueError(f"{path}: not a netflow index")
        f.readline()
        out = []
        for line in f:
            off, length, key = line.rstrip("\n").split("\t")
            out.append(IndexEntry(int(off), int(length), int(ipaddress.IPv4Address(key))))
    return out


def group_models(index) -> List[List[IndexEntry]]:
    """Records grouped per internal host, hosts in ascending address order."""
    by_key = defaultdict(list)
    for e in index:
        by_key[e.key].append(e)
    return [by_key[k] for k in sorted(by_key)]


def gen_netflow_trace(spec: NetflowSpec, index) -> IoTrace:
    """Phase 1 reads the whole data file sequentially to build the index;
    phase 2 reads individual records back, model by model."""
    if not index:
        raise ValueError("empty netflow index")
    size = index[-1].offset + index[-1].length

    ops = []
    if spec.variant == SYNC:
        n = spec.num_tasks
        for t in range(n):
            lo, hi = t * size // n, (t + 1) * size // n
            if hi > lo:
                ops.extend(sequential_ops(t, 0, OpKind.READ, lo, hi - lo, spec.read_size,
                                          spec.queue_depth, len(ops)))
        phase1 = Phase("index", tuple(ops))
    else:
        chunk = spec.async_chunk_size
        for u, lo in enumerate(range(0, size, chunk)):
            ops.extend(sequential_ops(u, 0, OpKind.READ, lo, min(chunk, size - lo),
                                      spec.read_size, spec.queue_depth, len(ops)))
        phase1 = Phase("index", tuple(ops), workers=spec.num_tasks)

    models = group_models(index)
    ops = []
    if spec.variant == SYNC:
        flat = [e for m in models for e in m]
        n = spec.num_tasks
        for t in range(n):
            part = flat[t * len(flat) // n:(t + 1) * len(flat) // n]
            ops.extend(chained(t, 1, OpKind.READ, ((e.offset, e.length) for e in part),
                               base_index=len(ops)))
        phase2 = Phase("model", tuple(ops))
    else:
        for u, m in enumerate(models):
            ops.extend(chained(u, 1, OpKind.READ, ((e.offset, e.length) for e in m),
                               base_index=len(ops)))
        phase2 = Phase("model", tuple(ops), workers=spec.num_tasks)
    return IoTrace((phase1, phase2), workload="netflow", variant=spec.variant)
