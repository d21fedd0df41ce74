"""Watermark-based composite layouts.

A composite layout cuts a file into contiguous half-open segments at
ascending watermarks; each segment carries its own striping.  A plain
statically striped file is the one-segment case.
"""

import bisect
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .layout import ChunkAddress, LayoutError, OstPool, StripingConfig, decompose_extent
from .sizes import MiB

# Table of directory types (stripe count, stripe width) used by the
# experiment presets.
DIRECTORY_TYPES: Dict[str, StripingConfig] = {
    "A": StripingConfig(4, 1 * MiB),
    "B": StripingConfig(8, 1 * MiB),
    "C": StripingConfig(16, 1 * MiB),
    "D": StripingConfig(64, 1 * MiB),
    "E": StripingConfig(4, 2 * MiB),
    "F": StripingConfig(16, 2 * MiB),
    "G": StripingConfig(64, 2 * MiB),
    "H": StripingConfig(4, 4 * MiB),
    "I": StripingConfig(16, 4 * MiB),
    "J": StripingConfig(64, 4 * MiB),
}


def dir_label(config: StripingConfig) -> str:
    """Directory name for a striping, e.g. ``4ost-1mb``."""
    width = config.stripe_width / MiB
    return f"{config.stripe_count}ost-{width:g}mb"


@dataclass(frozen=True)
class SegmentSpec:
    start: int
    end: Optional[int]      # None = unbounded (last segment only)
    config: StripingConfig
    dir_label: str

    def __post_init__(self):
        if self.start < 0:
            raise LayoutError(f"segment start {self.start} is negative")
        if self.end is not None and self.end <= self.start:
            raise LayoutError(f"empty segment [{self.start}, {self.end})")

    @property
    def span(self):
        return None if self.end is None else self.end - self.start

    def contains(self, offset):
        return offset >= self.start and (self.end is None or offset < self.end)


@dataclass(frozen=True)
class CompositeLayout:
    segments: Tuple[SegmentSpec, ...]

    def __post_init__(self):
        segs = tuple(self.segments)
        object.__setattr__(self, "segments", segs)
        if not segs:
            raise LayoutError("a layout needs at least one segment")
        if segs[0].start != 0:
            raise LayoutError("first segment must start at offset 0")
        for prev, cur in zip(segs, segs[1:]):
            if prev.end is None:
                raise LayoutError("only the last segment may be unbounded")
            if cur.start != prev.end:
                raise LayoutError(f"gap or overlap at offset {prev.end}")
        if segs[-1].end is not None:
            raise LayoutError("last segment must be unbounded")

    @property
    def watermarks(self) -> List[int]:
        return [s.end for s in self.segments[:-1]]

    @property
    def configs(self) -> List[StripingConfig]:
        return [s.config for s in self.segments]

    def __len__(self):
        return len(self.segments)


def build_layout(watermarks: Sequence[int], configs: Sequence[StripingConfig]) -> CompositeLayout:
    """Build a layout whose segment ``i`` spans ``[w[i-1], w[i])``."""
    watermarks = list(watermarks)
    configs = list(configs)
    if not configs:
        raise LayoutError("at least one striping config is required")
    if len(configs) != len(watermarks) + 1:
        raise LayoutError(
            f"{len(watermarks)} watermarks need {len(watermarks) + 1} configs, got {len(configs)}")
    prev = 0
    for w in watermarks:
        if w <= prev:
            raise LayoutError(f"watermarks must be positive and strictly ascending: {watermarks}")
        prev = w
    bounds = [0] + watermarks + [None]
    return CompositeLayout(tuple(
        SegmentSpec(bounds[i], bounds[i + 1], cfg, dir_label(cfg))
        for i, cfg in enumerate(configs)
    ))


def single(config: StripingConfig) -> CompositeLayout:
    return build_layout([], [config])


def resolve(layout: CompositeLayout, offset: int) -> Tuple[int, int]:
    """Return ``(segment_index, offset_within_segment)`` for a logical offset."""
    if offset < 0:
        raise ValueError(f"negative offset {offset}")
    idx = bisect.bisect_right(layout.watermarks, offset)
    return idx, offset - layout.segments[idx].start


def split_range(layout: CompositeLayout, offset: int, length: int) -> List[Tuple[int, int, int]]:
    """Cut an extent at segment boundaries.

    Returns ``(segment_index, offset_within_segment, sub_length)`` triples in
    logical order.
    """
    if offset < 0 or length < 0:
        raise ValueError(f"bad extent offset={offset} length={length}")
    out = []
    if length == 0:
        return out
    idx, within = resolve(layout, offset)
    remaining = length
    segs = layout.segments
    while remaining:
        seg = segs[idx]
        take = remaining if seg.end is None else min(remaining, seg.span - within)
        out.append((idx, within, take))
        remaining -= take
        idx += 1
        within = 0
    return out


def full_decompose(layout: CompositeLayout, pool: OstPool, offset: int, length: int
                   ) -> List[Tuple[int, ChunkAddress]]:
    """Resolve an extent down to per-segment stripe-unit fragments.

    Object offsets are relative to each segment's own objects, since every
    segment lives in its own file.
    """
    for seg in layout.segments:
        pool.check(seg.config)
    out = []
    for idx, within, sub in split_range(layout, offset, length):
        cfg = layout.segments[idx].config
        out.extend((idx, chunk) for _, chunk in decompose_extent(cfg, within, sub))
    return out


def segment_ost_ids(layout: CompositeLayout, pool: OstPool, placement: str = "rotate"
                    ) -> List[Tuple[int, ...]]:
    """OST ids backing each segment's stripe ordinals.

    ``"zero"`` starts every segment at the first pool OST.  ``"rotate"``
    starts segment ``i`` where segment ``i-1`` left off, the way a round-robin
    object allocator hands out targets to successively created files; a
    one-segment layout is identical under both.
    """
    if placement not in ("rotate", "zero"):
        raise ValueError(f"unknown placement {placement!r}")
    ids = pool.ost_ids
    n = len(ids)
    out = []
    base = 0
    for seg in layout.segments:
        pool.check(seg.config)
        out.append(tuple(ids[(base + k) % n] for k in range(seg.config.stripe_count)))
        if placement == "rotate":
            base = (base + seg.config.stripe_count) % n
    return out
