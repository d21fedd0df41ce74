"""Round-robin (RAID-0 style) striping arithmetic for a single file.

A file striped over ``stripe_count`` objects with unit ``stripe_width``
places logical stripe ``k`` on object ``k % stripe_count`` at object
offset ``(k // stripe_count) * stripe_width``.
"""

from dataclasses import dataclass
from typing import List, Tuple


class LayoutError(ValueError):
    """Invalid striping parameters or a layout that does not fit a pool."""


@dataclass(frozen=True)
class StripingConfig:
    stripe_count: int
    stripe_width: int

    def __post_init__(self):
        if not isinstance(self.stripe_count, int) or self.stripe_count < 1:
            raise LayoutError(f"stripe_count must be >= 1, got {self.stripe_count!r}")
        if not isinstance(self.stripe_width, int) or self.stripe_width < 1:
            raise LayoutError(f"stripe_width must be >= 1 byte, got {self.stripe_width!r}")

    @property
    def full_stripe(self):
        """Bytes covered by one pass over every object."""
        return self.stripe_count * self.stripe_width


@dataclass(frozen=True)
class OstPool:
    ost_ids: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "ost_ids", tuple(self.ost_ids))
        if not self.ost_ids:
            raise LayoutError("an OST pool needs at least one target")
        if len(set(self.ost_ids)) != len(self.ost_ids):
            raise LayoutError("duplicate OST ids in pool")

    @classmethod
    def of_size(cls, num_osts):
        return cls(tuple(range(num_osts)))

    @property
    def num_osts(self):
        return len(self.ost_ids)

    def check(self, config: StripingConfig):
        if config.stripe_count > self.num_osts:
            raise LayoutError(
                f"stripe count {config.stripe_count} exceeds pool of {self.num_osts} OSTs")


@dataclass(frozen=True)
class ChunkAddress:
    ost_ordinal: int
    object_offset: int
    length: int


def map_offset(config: StripingConfig, offset: int) -> Tuple[int, int]:
    """Return ``(ost_ordinal, object_offset)`` holding logical byte ``offset``."""
    if offset < 0:
        raise ValueError(f"negative offset {offset}")
    stripe_idx, within = divmod(offset, config.stripe_width)
    row, ordinal = divmod(stripe_idx, config.stripe_count)
    return ordinal, row * config.stripe_width + within


def decompose_extent(config: StripingConfig, offset: int, length: int
                     ) -> List[Tuple[int, ChunkAddress]]:
    """Split ``[offset, offset + length)`` into per-stripe-unit fragments.

    Fragments are maximal within one stripe unit and are never coalesced,
    so each one is a single contiguous access on one object.
    """
    if offset < 0 or length < 0:
        raise ValueError(f"bad extent offset={offset} length={length}")
    width = config.stripe_width
    count = config.stripe_count
    out = []
    pos = offset
    end = offset + length
    stripe_idx, within = divmod(pos, width)
    while pos < end:
        take = min(width - within, end - pos)
        row, ordinal = divmod(stripe_idx, count)
        out.append((pos, ChunkAddress(ordinal, row * width + within, take)))
        pos += take
        stripe_idx += 1
        within = 0
    return out
