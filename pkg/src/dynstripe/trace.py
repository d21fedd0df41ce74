"""I/O traces: per-task read/write operations grouped into barrier phases."""

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, List, Optional, Tuple


class OpKind(str, Enum):
    READ = "read"
    WRITE = "write"


@dataclass(frozen=True)
class IoOp:
    task_id: int
    phase_id: int
    kind: OpKind
    offset: int
    length: int
    # index (within the phase) of an op of the same task that must finish first
    after: Optional[int] = None


@dataclass(frozen=True)
class Phase:
    """One barrier-delimited phase.

    Ops sharing a ``task_id`` form a stream.  With ``workers=None`` every
    stream is its own task and all start together.  With ``workers=k`` the
    streams are work units drained in ``task_id`` order by ``k`` tasks, each
    pulling the next unit when it finishes the previous one.
    """
    name: str
    ops: Tuple[IoOp, ...]
    workers: Optional[int] = None

    @property
    def nbytes(self):
        return sum(op.length for op in self.ops)


@dataclass(frozen=True)
class IoTrace:
    phases: Tuple[Phase, ...]
    workload: str = ""
    variant: str = ""

    @property
    def nbytes(self):
        return sum(p.nbytes for p in self.phases)

    def validate(self):
        if not self.phases or not any(p.ops for p in self.phases):
            raise ValueError("trace has no operations")
        for pid, phase in enumerate(self.phases):
            if phase.workers is not None and phase.workers < 1:
                raise ValueError(f"phase {phase.name!r}: workers must be >= 1")
            for i, op in enumerate(phase.ops):
                if op.phase_id != pid:
                    raise ValueError(f"op {i} of phase {pid} carries phase_id {op.phase_id}")
                if op.length < 1 or op.offset < 0:
                    raise ValueError(f"op {i} of phase {pid} has a bad extent")
                if op.after is not None:
                    if not 0 <= op.after < i:
                        raise ValueError(f"op {i} depends on a later or missing op {op.after}")
                    if phase.ops[op.after].task_id != op.task_id:
                        raise ValueError(f"op {i} depends on another task's op")
        return self


def sequential_ops(task_id, phase_id, kind, start, length, io_size, depth=1, base_index=0
                   ) -> List[IoOp]:
    """Ops covering ``[start, start+length)`` in ``io_size`` pieces.

    Up to ``depth`` ops are in flight: op ``k`` waits for op ``k - depth``.
    ``base_index`` is where the first op will sit in the phase's op list.
    """
    ops = []
    pos = start
    end = start + length
    k = 0
    while pos < end:
        n = min(io_size, end - pos)
        after = base_index + k - depth if k >= depth else None
        ops.append(IoOp(task_id, phase_id, kind, pos, n, after))
        pos += n
        k += 1
    return ops


def chained(task_id, phase_id, kind, extents: Iterable[Tuple[int, int]], depth=1, base_index=0
            ) -> List[IoOp]:
    """One op per ``(offset, length)`` extent, at most ``depth`` outstanding."""
    ops = []
    for k, (off, n) in enumerate(extents):
        after = base_index + k - depth if k >= depth else None
        ops.append(IoOp(task_id, phase_id, kind, off, n, after))
    return ops
