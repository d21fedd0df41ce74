"""Result rows, their CSV form, and median summaries.

Detail CSV (``run`` output), UTF-8, ``\\n`` line endings, this header::

    experiment,variant,repetition,phase,wall_time_s,throughput_bytes_per_s,total_bytes,fragments,flags

One row per (repetition, phase), then one row per phase with
``repetition=median``.  Floats are written with Python's shortest
round-tripping ``repr``.  ``flags`` is a ``;``-separated list such as
``indicative`` (file-mode timing) or ``hook-failed``.

Summary CSV (``report`` output)::

    experiment,variant,phase,reps,median_wall_time_s,median_throughput_bytes_per_s,total_bytes,speedup

``phase=total`` rows sum the phases of each repetition before taking the
median.  ``speedup`` is the baseline's median wall time over this row's,
for the same variant and phase, or empty without a baseline.
"""

import csv
import io
import statistics
from collections import OrderedDict, defaultdict
from dataclasses import astuple, dataclass, fields
from typing import Dict, Iterable, List, Optional, Tuple

COLUMNS = ("experiment", "variant", "repetition", "phase", "wall_time_s",
           "throughput_bytes_per_s", "total_bytes", "fragments", "flags")
SUMMARY_COLUMNS = ("experiment", "variant", "phase", "reps", "median_wall_time_s",
                   "median_throughput_bytes_per_s", "total_bytes", "speedup")
MEDIAN = "median"
TOTAL = "total"


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    variant: str
    repetition: str          # "1".."n" or "median"
    phase: str
    wall_time_s: float
    throughput_bytes_per_s: float
    total_bytes: int
    fragments: int
    flags: str = ""

    @classmethod
    def measured(cls, experiment, variant, repetition, phase, wall, nbytes, fragments, flags=""):
        return cls(experiment, variant, str(repetition), phase, wall, nbytes / wall, nbytes,
                   fragments, flags)


def median(values):
    return statistics.median(values)


def write_rows(rows: Iterable[ResultRow], f):
    w = csv.writer(f, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in astuple(r)])


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    write_rows(rows, buf)
    return buf.getvalue()


def read_rows(f) -> List[ResultRow]:
    reader = csv.reader(f)
    header = next(reader, None)
    if tuple(header or ()) != COLUMNS:
        raise ValueError(f"unexpected result columns: {header}")
    out = []
    for rec in reader:
        exp, var, rep, phase, wall, tput, nbytes, frags, flags = rec
        out.append(ResultRow(exp, var, rep, phase, float(wall), float(tput), int(nbytes),
                             int(frags), flags))
    return out


def _merge_flags(rows):
    seen = OrderedDict()
    for r in rows:
        for flag in filter(None, r.flags.split(";")):
            seen[flag] = None
    return ";".join(seen)


def median_rows(rows: List[ResultRow]) -> List[ResultRow]:
    """One ``repetition=median`` row per (experiment, variant, phase)."""
    groups = OrderedDict()
    for r in rows:
        if r.repetition != MEDIAN:
            groups.setdefault((r.experiment, r.variant, r.phase), []).append(r)
    out = []
    for (exp, var, phase), rs in groups.items():
        wall = median([r.wall_time_s for r in rs])
        nbytes = int(median([r.total_bytes for r in rs]))
        frags = int(median([r.fragments for r in rs]))
        out.append(ResultRow(exp, var, MEDIAN, phase, wall, nbytes / wall, nbytes, frags,
                             _merge_flags(rs)))
    return out


@dataclass(frozen=True)
class SummaryRow:
    experiment: str
    variant: str
    phase: str
    reps: int
    median_wall_time_s: float
    median_throughput_bytes_per_s: float
    total_bytes: int
    speedup: Optional[float] = None


def summarize(rows: List[ResultRow], baseline: Optional[str] = None) -> List[SummaryRow]:
    """Per-experiment medians, with an optional speedup against ``baseline``."""
    detail = [r for r in rows if r.repetition != MEDIAN]
    if not detail:
        raise ValueError("no result rows to summarize")
    per_phase = OrderedDict()
    totals = defaultdict(lambda: [0.0, 0])
    for r in detail:
        per_phase.setdefault((r.experiment, r.variant, r.phase), []).append(r)
        t = totals[(r.experiment, r.variant, r.repetition)]
        t[0] += r.wall_time_s
        t[1] += r.total_bytes
    for (exp, var, rep), (wall, nbytes) in totals.items():
        per_phase.setdefault((exp, var, TOTAL), []).append(
            ResultRow(exp, var, rep, TOTAL, wall, nbytes / wall, nbytes, 0))
    # keep each experiment's phases together, its total last
    order = list(OrderedDict.fromkeys((e, v) for e, v, _ in per_phase))
    keys = [k for ev in order for k in per_phase if k[:2] == ev]

    stats = {}
    for key in keys:
        rs = per_phase[key]
        wall = median([r.wall_time_s for r in rs])
        nbytes = int(median([r.total_bytes for r in rs]))
        stats[key] = (len(rs), wall, nbytes)

    if baseline is not None and not any(k[0] == baseline for k in stats):
        raise KeyError(f"baseline experiment {baseline!r} not in results")
    out = []
    for key in keys:
        n, wall, nbytes = stats[key]
        speedup = None
        if baseline is not None:
            base = stats.get((baseline, key[1], key[2]))
            if base is not None:
                speedup = base[1] / wall
        out.append(SummaryRow(key[0], key[1], key[2], n, wall, nbytes / wall, nbytes, speedup))
    return out


def summary_to_csv(summary: List[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for s in summary:
        w.writerow([s.experiment, s.variant, s.phase, s.reps, repr(s.median_wall_time_s),
                    repr(s.median_throughput_bytes_per_s), s.total_bytes,
                    "" if s.speedup is None else repr(s.speedup)])
    return buf.getvalue()


def render_summary(summary: List[SummaryRow]) -> str:
    """Fixed-width text table: wall time in seconds, throughput in MB/s (10^6)."""
    lines = [f"{'experiment':<12} {'variant':<7} {'phase':<8} {'reps':>4} "
             f"{'wall_s':>12} {'MB/s':>12} {'speedup':>8}"]
    for s in summary:
        sp = "-" if s.speedup is None else f"{s.speedup:.3f}"
        lines.append(f"{s.experiment:<12} {s.variant or '-':<7} {s.phase:<8} {s.reps:>4} "
                     f"{s.median_wall_time_s:>12.6f} "
                     f"{s.median_throughput_bytes_per_s / 1e6:>12.2f} {sp:>8}")
    return "\n".join(lines) + "\n"
