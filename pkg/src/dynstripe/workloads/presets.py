"""Named experiment presets: a composite layout bound to a workload.

Every preset exists at paper scale and at desk scale, which shrinks file
sizes and watermarks by 1024 (GiB -> MiB, TiB -> GiB).  Stripe widths are
not scaled.
"""

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Dict, Optional, Tuple

from ..composite import DIRECTORY_TYPES, CompositeLayout, build_layout
from ..sizes import GiB, KiB, MiB, TiB
from ..trace import IoTrace
from .ior import IorSpec, gen_ior
from .netflow import ASYNC, SYNC, NetflowSpec, gen_netflow_data, gen_netflow_trace
from .scan import ScanRandomSpec, gen_scan_random

SCALES = ("paper", "desk")
DESK_FACTOR = 1024

# (name, directory letters, watermarks at paper scale)
IOR_TABLE = [
    ("IOR.1", "A", ()),
    ("IOR.2", "B", ()),
    ("IOR.3", "C", ()),
    ("IOR.4", "AB", (1 * TiB,)),
    ("IOR.5", "AC", (1 * TiB,)),
    ("IOR.6", "ABC", (1 * TiB, 2 * TiB)),
]

NETFLOW_TABLE = [
    ("netflow.1", "A", ()),
    ("netflow.2", "B", ()),
    ("netflow.3", "C", ()),
    ("netflow.4", "AB", (10 * GiB,)),
    ("netflow.5", "AC", (10 * GiB,)),
    ("netflow.6", "ABC", (10 * GiB, 20 * GiB)),
]

_B26 = (26 * GiB, 52 * GiB)
BLAST_TABLE = [
    ("blast.1", "A", ()),
    ("blast.2", "C", ()),
    ("blast.3", "D", ()),
    ("blast.4", "E", ()),
    ("blast.5", "F", ()),
    ("blast.6", "G", ()),
    ("blast.7", "H", ()),
    ("blast.8", "I", ()),
    ("blast.9", "J", ()),
    ("blast.10", "AEH", _B26),
    ("blast.11", "CFI", _B26),
    ("blast.12", "DGJ", _B26),
    ("blast.13", "ACD", _B26),
    ("blast.14", "EFG", _B26),
    ("blast.15", "HIJ", _B26),
    ("blast.16", "AFJ", _B26),
    ("blast.17", "AFJ", (20 * GiB, 40 * GiB)),
    ("blast.18", "AFJ", (8 * GiB, 28 * GiB)),
]

# client nodes per family: tasks are spread evenly over these
NODES = {"ior": 16, "netflow": 16, "blast": 8}


def _scaled(nbytes, scale):
    if scale not in SCALES:
        raise ValueError(f"scale must be one of {SCALES}, got {scale!r}")
    return nbytes if scale == "paper" else nbytes // DESK_FACTOR


def ior_spec(scale) -> IorSpec:
    return IorSpec(num_tasks=64, block_size=_scaled(64 * GiB, scale), transfer_size=1 * MiB)


def netflow_spec(scale, seed=0, variant=SYNC) -> NetflowSpec:
    # 256..1392 B records average 824 B: about 70 million records in 55 GiB,
    # about 70 thousand at desk scale.
    return NetflowSpec(
        total_bytes=_scaled(55 * GiB, scale), num_tasks=128,
        record_min=256, record_max=1392, seed=seed, variant=variant,
        async_chunk_size=_scaled(256 * MiB, scale),
        num_models=_scaled(512 * 1024, scale),
    )


def scan_spec(scale, seed=0) -> ScanRandomSpec:
    return ScanRandomSpec(
        db_size=_scaled(79 * GiB, scale), num_tasks=64, scan_chunk=1 * MiB,
        num_random_reads=_scaled(8 * 1024 * 1024, scale),
        read_size_min=4 * KiB, read_size_max=64 * KiB, seed=seed,
    )


@lru_cache(maxsize=8)
def _netflow_index(spec: NetflowSpec):
    return tuple(gen_netflow_data(spec, None)[1])


@dataclass(frozen=True)
class Experiment:
    name: str
    family: str                       # "ior", "netflow" or "blast"
    letters: str
    paper_watermarks: Tuple[int, ...]

    @property
    def nodes(self):
        return NODES[self.family]

    def watermarks(self, scale="desk"):
        _scaled(0, scale)
        return [_scaled(w, scale) for w in self.paper_watermarks]

    def layout(self, scale="desk") -> CompositeLayout:
        return build_layout(self.watermarks(scale), [DIRECTORY_TYPES[c] for c in self.letters])

    def workload_spec(self, scale="desk", seed=0, variant: Optional[str] = None):
        if self.family == "ior":
            return ior_spec(scale)
        if self.family == "netflow":
            return netflow_spec(scale, seed, variant or SYNC)
        return scan_spec(scale, seed)

    def trace(self, scale="desk", seed=0, variant: Optional[str] = None) -> IoTrace:
        spec = self.workload_spec(scale, seed, variant)
        if self.family == "ior":
            return gen_ior(spec)
        if self.family == "netflow":
            return gen_netflow_trace(spec, _netflow_index(spec))
        return gen_scan_random(spec)

    def cluster_for(self, cluster):
        """``cluster`` with one client per node this experiment ran on."""
        return replace(cluster, num_clients=self.nodes)

    def describe(self, scale="paper"):
        from ..sizes import format_size
        bounds = ["0"] + [format_size(w) for w in self.watermarks(scale)]
        parts = []
        for i, c in enumerate(self.letters):
            if len(self.letters) == 1:
                parts.append(f"entire file in {c}")
            elif i + 1 < len(self.letters):
                parts.append(f"{bounds[i]}-{bounds[i + 1]} in {c}")
            else:
                parts.append(f"remainder in {c}")
        return ", ".join(parts)


@lru_cache(maxsize=1)
def _all_presets():
    out = {}
    for family, table in (("ior", IOR_TABLE), ("netflow", NETFLOW_TABLE), ("blast", BLAST_TABLE)):
        for name, letters, marks in table:
            out[name] = Experiment(name, family, letters, marks)
    return out


def experiment_presets() -> Dict[str, Experiment]:
    """All 30 presets (6 IOR, 6 netflow, 18 blast), keyed by name."""
    return dict(_all_presets())


VARIANTS = {"ior": ("",), "netflow": (SYNC, ASYNC), "blast": ("",)}
