"""Segment-file store: one real file per layout segment, read and written
through a single logical byte space.

On disk, for a logical file ``name`` under ``root``::

    root/name.manifest
    root/4ost-1mb/name.part-00
    root/8ost-2mb/name.part-01
    root/16ost-4mb/name.part-02

Segment files are created lazily on first write.  Regions below the logical
size that were never written read back as zeros.

Manifest format (UTF-8 text, tab separated, written atomically)::

    dynstripe-manifest v1
    name        <name>
    logical_size        <bytes>
    path        start   end     stripe_count    stripe_width
    <path>      <start> <end>   <count> <width>
    ...

``path`` is relative to ``root``; ``end`` is ``inf`` for the last,
unbounded segment.
"""

import logging
import os
import shlex
import subprocess
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from .composite import CompositeLayout, SegmentSpec, dir_label, split_range
from .layout import StripingConfig

log = logging.getLogger(__name__)

MANIFEST_HEADER = "dynstripe-manifest v1"
ENTRY_FIELDS = ("path", "start", "end", "stripe_count", "stripe_width")
COPY_CHUNK = 8 << 20


class SegmentStoreError(Exception):
    pass


class ManifestExistsError(SegmentStoreError, FileExistsError):
    pass


class SegmentMissingError(SegmentStoreError):
    def __init__(self, path):
        super().__init__(f"segment file missing: {path}")
        self.path = path


class ManifestError(SegmentStoreError):
    pass


class HookError(SegmentStoreError):
    pass


@dataclass
class ManifestEntry:
    path: str
    start: int
    end: Optional[int]
    stripe_count: int
    stripe_width: int


@dataclass
class Manifest:
    name: str
    logical_size: int
    entries: List[ManifestEntry] = field(default_factory=list)

    @classmethod
    def for_layout(cls, name, layout: CompositeLayout, logical_size=0):
        entries = [
            ManifestEntry(segment_relpath(name, i, seg), seg.start, seg.end,
                          seg.config.stripe_count, seg.config.stripe_width)
            for i, seg in enumerate(layout.segments)
        ]
        return cls(name, logical_size, entries)

    def to_layout(self) -> CompositeLayout:
        segs = []
        for e in self.entries:
            cfg = StripingConfig(e.stripe_count, e.stripe_width)
            segs.append(SegmentSpec(e.start, e.end, cfg, dir_label(cfg)))
        return CompositeLayout(tuple(segs))

    def dumps(self) -> str:
        lines = [MANIFEST_HEADER, f"name\t{self.name}", f"logical_size\t{self.logical_size}",
                 "\t".join(ENTRY_FIELDS)]
        for e in self.entries:
            end = "inf" if e.end is None else str(e.end)
            lines.append(f"{e.path}\t{e.start}\t{end}\t{e.stripe_count}\t{e.stripe_width}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "Manifest":
        lines = text.splitlines()
        if len(lines) < 4 or lines[0] != MANIFEST_HEADER:
            raise ManifestError("not a dynstripe manifest (bad header)")
        try:
            key, name = lines[1].split("\t")
            key2, size = lines[2].split("\t")
            if key != "name" or key2 != "logical_size":
                raise ValueError
            if tuple(lines[3].split("\t")) != ENTRY_FIELDS:
                raise ValueError
            entries = []
            for line in lines[4:]:
                path, start, end, count, width = line.split("\t")
                entries.append(ManifestEntry(path, int(start), None if end == "inf" else int(end),
                                             int(count), int(width)))
        except ValueError:
            raise ManifestError("malformed manifest") from None
        return cls(name, int(size), entries)


def segment_relpath(name, index, seg: SegmentSpec) -> str:
    return f"{seg.dir_label}/{name}.part-{index:02d}"


def manifest_path(root, name) -> Path:
    return Path(root) / f"{name}.manifest"


def _check_name(name):
    if not name or "/" in name or "\t" in name or "\n" in name or name.startswith("."):
        raise ValueError(f"invalid logical file name {name!r}")


def _atomic_write(path: Path, text: str):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_stripe_hook(template, directory, config: StripingConfig):
    """Run an external striping command for a freshly created directory.

    ``template`` may use ``{dir}``, ``{count}`` and ``{width}``, e.g.
    ``"lfs setstripe -c {count} -S {width} {dir}"``.
    """
    cmd = shlex.split(template.format(dir=shlex.quote(str(directory)),
                                      count=config.stripe_count, width=config.stripe_width))
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise HookError(f"stripe hook {cmd!r} failed ({proc.returncode}): {proc.stderr.strip()}")


class LogicalFile:
    """A set of segment files presented as one addressable byte space.

    Concurrent writers to disjoint ranges are safe; the logical size is
    updated under a lock.  Call :meth:`sync` (or close) to persist the size
    in the manifest.
    """

    def __init__(self, root, name, layout: CompositeLayout, logical_size=0):
        _check_name(name)
        self.root = Path(root)
        self.name = name
        self.layout = layout
        self._size = logical_size
        self._lock = threading.Lock()
        self._fds = {}

    @property
    def logical_size(self):
        return self._size

    @property
    def segment_paths(self) -> List[Path]:
        return [self.root / segment_relpath(self.name, i, seg)
                for i, seg in enumerate(self.layout.segments)]

    @property
    def manifest_path(self) -> Path:
        return manifest_path(self.root, self.name)

    def manifest(self) -> Manifest:
        return Manifest.for_layout(self.name, self.layout, self._size)

    # lifecycle

    @classmethod
    def create(cls, root, name, layout, stripe_hook=None):
        root = Path(root)
        lf = cls(root, name, layout)
        if lf.manifest_path.exists():
            raise ManifestExistsError(f"{lf.manifest_path} already exists")
        for seg in layout.segments:
            d = root / seg.dir_label
            fresh = not d.exists()
            d.mkdir(parents=True, exist_ok=True)
            if stripe_hook and fresh:
                run_stripe_hook(stripe_hook, d, seg.config)
        _atomic_write(lf.manifest_path, lf.manifest().dumps())
        return lf

    @classmethod
    def open(cls, root, name):
        path = manifest_path(root, name)
        man = Manifest.loads(path.read_text())
        if man.name != name:
            raise ManifestError(f"manifest {path} names {man.name!r}")
        lf = cls(root, name, man.to_layout(), man.logical_size)
        # a crash between writes and sync leaves data past the recorded size
        lf._size = max(lf._size, lf._size_from_segments())
        return lf

    def _size_from_segments(self):
        size = 0
        for seg, path in zip(self.layout.segments, self.segment_paths):
            if path.exists():
                n = path.stat().st_size
                if n:
                    size = max(size, seg.start + n)
        return size

    def sync(self):
        with self._lock:
            text = self.manifest().dumps()
        _atomic_write(self.manifest_path, text)

    def close(self):
        self.sync()
        with self._lock:
            fds, self._fds = self._fds, {}
        for fd in fds.values():
            os.close(fd)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # data path

    def _fd(self, index, create):
        fd = self._fds.get(index)
        if fd is not None:
            return fd
        path = self.segment_paths[index]
        flags = os.O_RDWR | (os.O_CREAT if create else 0)
        try:
            new = os.open(path, flags, 0o644)
        except FileNotFoundError:
            if create:
                raise
            return None
        with self._lock:
            fd = self._fds.setdefault(index, new)
        if fd != new:
            os.close(new)
        return fd

    def write_at(self, offset: int, data) -> int:
        if offset < 0:
            raise ValueError(f"negative offset {offset}")
        view = memoryview(data).cast("B")
        if not len(view):
            return 0
        pos = 0
        for idx, within, sub in split_range(self.layout, offset, len(view)):
            fd = self._fd(idx, create=True)
            chunk = view[pos:pos + sub]
            done = 0
            while done < sub:
                done += os.pwrite(fd, chunk[done:], within + done)
            pos += sub
        end = offset + len(view)
        with self._lock:
            if end > self._size:
                self._size = end
        return len(view)

    def read_at(self, offset: int, length: int) -> bytes:
        """Read up to ``length`` bytes; returns ``b""`` at or past EOF."""
        if offset < 0 or length < 0:
            raise ValueError(f"bad read offset={offset} length={length}")
        n = min(length, self._size - offset)
        if n <= 0:
            return b""
        out = bytearray(n)
        pos = 0
        for idx, within, sub in split_range(self.layout, offset, n):
            fd = self._fd(idx, create=False)
            if fd is not None:
                got = os.pread(fd, sub, within)
                out[pos:pos + len(got)] = got
            pos += sub
        return bytes(out)


def create(root, name, layout, stripe_hook=None) -> LogicalFile:
    return LogicalFile.create(root, name, layout, stripe_hook=stripe_hook)


def open_logical(root, name) -> LogicalFile:
    return LogicalFile.open(root, name)


def write_at(lf: LogicalFile, offset, data) -> int:
    return lf.write_at(offset, data)


def read_at(lf: LogicalFile, offset, length) -> bytes:
    return lf.read_at(offset, length)


def import_split(source, root, name, layout, stripe_hook=None) -> LogicalFile:
    """Cut an existing file into segment files according to ``layout``."""
    source = Path(source)
    lf = LogicalFile.create(root, name, layout, stripe_hook=stripe_hook)
    with open(source, "rb") as src:
        offset = 0
        while True:
            buf = src.read(COPY_CHUNK)
            if not buf:
                break
            lf.write_at(offset, buf)
            offset += len(buf)
    lf.close()
    log.info("split %s (%d bytes) into %d segment(s)", source, offset,
             len(split_range(layout, 0, offset)))
    return lf


def export_merge(lf: LogicalFile, dest) -> None:
    """Concatenate the segment files of ``lf`` into ``dest``."""
    for idx, _, _ in split_range(lf.layout, 0, lf.logical_size):
        path = lf.segment_paths[idx]
        if not path.exists():
            raise SegmentMissingError(path)
    with open(dest, "wb") as out:
        offset = 0
        while offset < lf.logical_size:
            buf = lf.read_at(offset, COPY_CHUNK)
            out.write(buf)
            offset += len(buf)


def remove_logical(root, name) -> bool:
    """Delete a logical file's segment files and manifest; False if absent."""
    path = manifest_path(root, name)
    if not path.exists():
        return False
    man = Manifest.loads(path.read_text())
    for e in man.entries:
        (Path(root) / e.path).unlink(missing_ok=True)
    path.unlink()
    return True
