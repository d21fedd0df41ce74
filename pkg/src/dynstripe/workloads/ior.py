"""IOR-style segmented shared-file benchmark: every task writes, then reads,
its own contiguous block of one shared file."""

from dataclasses import dataclass

from ..sizes import MiB
from ..trace import IoTrace, OpKind, Phase, sequential_ops


@dataclass(frozen=True)
class IorSpec:
    num_tasks: int
    block_size: int
    transfer_size: int = 1 * MiB
    do_write: bool = True
    do_read: bool = True
    # transfers a task keeps in flight (client readahead / write-back)
    queue_depth: int = 16

    def __post_init__(self):
        if self.num_tasks < 1 or self.block_size < 1 or self.transfer_size < 1:
            raise ValueError("num_tasks, block_size and transfer_size must be positive")
        if self.block_size % self.transfer_size:
            raise ValueError("block_size must be a multiple of transfer_size")
        if self.queue_depth < 1:
            raise ValueError("queue_depth must be >= 1")
        if not (self.do_write or self.do_read):
            raise ValueError("nothing to do: enable write and/or read")

    @property
    def total_size(self):
        return self.num_tasks * self.block_size

    @property
    def ops_per_phase(self):
        return self.num_tasks * (self.block_size // self.transfer_size)


def gen_ior(spec: IorSpec) -> IoTrace:
    phases = []
    kinds = [(k, n) for k, n, on in ((OpKind.WRITE, "write", spec.do_write),
                                     (OpKind.READ, "read", spec.do_read)) if on]
    for pid, (kind, name) in enumerate(kinds):
        ops = []
        for t in range(spec.num_tasks):
            ops.extend(sequential_ops(t, pid, kind, t * spec.block_size, spec.block_size,
                                      spec.transfer_size, spec.queue_depth, len(ops)))
        phases.append(Phase(name, tuple(ops)))
    return IoTrace(tuple(phases), workload="ior")
