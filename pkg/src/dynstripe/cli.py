"""``dynstripe`` command line: list presets, run experiments, summarize
results and move files in and out of segment stores."""

import argparse
import hashlib
import logging
import sys
import tempfile
from pathlib import Path

from . import results
from .composite import DIRECTORY_TYPES, build_layout
from .layout import LayoutError, StripingConfig
from .runner import FILE, SIM, ExperimentConfig, UnknownPresetError, run
from .segstore import SegmentStoreError, export_merge, import_split, open_logical
from .sizes import format_size, parse_size
from .workloads.netflow import ASYNC, SYNC
from .workloads.presets import (SCALES, experiment_presets, ior_spec, netflow_spec,
                                scan_spec)

log = logging.getLogger("dynstripe")


def parse_dirs(text):
    """``"ABC"``, ``"A,B,C"`` or ``"4x1MiB,16x2MiB"`` to striping configs."""
    items = text.split(",") if "," in text or "x" in text else list(text)
    out = []
    for item in items:
        item = item.strip()
        if item.upper() in DIRECTORY_TYPES:
            out.append(DIRECTORY_TYPES[item.upper()])
            continue
        count, sep, width = item.partition("x")
        if not sep:
            raise argparse.ArgumentTypeError(f"bad directory spec {item!r}")
        out.append(StripingConfig(int(count), parse_size(width)))
    return out


def parse_watermarks(text):
    return [parse_size(w) for w in text.split(",") if w.strip()]


def _layout_from_args(args):
    if args.preset:
        return _preset(args.preset).layout(args.scale)
    if not args.dirs:
        raise SystemExit("error: give --preset or --dirs (with --watermarks)")
    return build_layout(parse_watermarks(args.watermarks or ""), parse_dirs(args.dirs))


def _preset(name):
    try:
        return experiment_presets()[name]
    except KeyError:
        raise UnknownPresetError(name) from None


def _add_layout_args(p):
    p.add_argument("--preset", help="take the layout from a named preset")
    p.add_argument("--scale", choices=SCALES, default="desk")
    p.add_argument("--dirs", help="directory types per segment, e.g. ABC or 4x1MiB,16x2MiB")
    p.add_argument("--watermarks", help="segment boundaries, e.g. 1MiB,10MiB")


# verbs

def cmd_list_presets(args):
    for exp in experiment_presets().values():
        marks = ",".join(format_size(w) for w in exp.watermarks(args.scale)) or "-"
        print(f"{exp.name:<10} {exp.family:<8} {exp.letters:<4} {marks:<18} "
              f"{exp.describe(args.scale)}")
    return 0


_INLINE_SPECS = {"ior": lambda a: ior_spec(a.scale),
                 "netflow": lambda a: netflow_spec(a.scale, a.seed, a.variant or SYNC),
                 "blast": lambda a: scan_spec(a.scale, a.seed)}


def cmd_run(args):
    kw = dict(mode=args.mode, repetitions=args.reps, seed=args.seed, out=args.out,
              cluster=args.cluster, root=args.root, hook=args.hook, scale=args.scale,
              variant=args.variant, workers=args.workers)
    if args.preset:
        cfg = ExperimentConfig(preset=args.preset, **kw)
    else:
        if not (args.workload and args.dirs):
            raise SystemExit("error: give --preset, or --workload with --dirs")
        cfg = ExperimentConfig(name=args.name or f"custom-{args.workload}",
                               layout=_layout_from_args(args),
                               workload=_INLINE_SPECS[args.workload](args), **kw)
    outcome = run(cfg)
    text = results.rows_to_csv(outcome.rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    for w in outcome.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if cfg.mode == FILE:
        print("note: file-mode timings reflect the local filesystem and are indicative only",
              file=sys.stderr)
    if args.out:
        print(results.render_summary(results.summarize(outcome.rows)), end="")
    return 0 if outcome.ok else 1


def cmd_report(args):
    rows = []
    for path in args.results:
        with open(path, newline="") as f:
            rows.extend(results.read_rows(f))
    summary = results.summarize(rows, args.baseline)
    print(results.render_summary(summary), end="")
    if args.out:
        Path(args.out).write_text(results.summary_to_csv(summary))
    return 0


def cmd_import_split(args):
    lf = import_split(args.source, args.root, args.name, _layout_from_args(args),
                      stripe_hook=args.stripe_hook)
    print(f"{args.name}: {lf.logical_size} bytes in {len(lf.layout)} segment(s) "
          f"under {args.root}")
    return 0


def cmd_export_merge(args):
    lf = open_logical(args.root, args.name)
    try:
        export_merge(lf, args.dest)
    finally:
        lf.close()
    print(f"{args.dest}: {lf.logical_size} bytes")
    return 0


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for buf in iter(lambda: f.read(1 << 20), b""):
            h.update(buf)
    return h.hexdigest()


def cmd_verify(args):
    """Split ``--source`` by the layout, merge it back and compare checksums."""
    layout = _layout_from_args(args)
    with tempfile.TemporaryDirectory() as tmp:
        root = args.root or str(Path(tmp) / "store")
        lf = import_split(args.source, root, args.name, layout)
        merged = Path(tmp) / "merged"
        export_merge(lf, merged)
        want, got = _sha256(args.source), _sha256(merged)
    ok = want == got
    print(f"source {want}\nmerged {got}\n{'OK' if ok else 'MISMATCH'}")
    return 0 if ok else 1


def build_parser():
    ap = argparse.ArgumentParser(prog="dynstripe", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("list-presets", help="show the named experiments")
    p.add_argument("--scale", choices=SCALES, default="paper")
    p.set_defaults(func=cmd_list_presets)

    p = sub.add_parser("run", help="run one experiment, repeated")
    _add_layout_args(p)
    p.add_argument("--workload", choices=sorted(_INLINE_SPECS),
                   help="inline experiment: workload to drive the --dirs layout")
    p.add_argument("--name", help="label for an inline experiment")
    p.add_argument("--mode", choices=(SIM, FILE), default=SIM)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cluster", help="cluster model JSON (sim mode)")
    p.add_argument("--root", help="segment store directory (file mode)")
    p.add_argument("--hook", help="cache-drop command run between repetitions (file mode)")
    p.add_argument("--variant", choices=(SYNC, ASYNC), help="netflow task assignment")
    p.add_argument("--workers", type=int, default=8, help="file mode thread cap")
    p.add_argument("--out", help="detail CSV path (default: stdout)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="median summary of result CSVs")
    p.add_argument("results", nargs="+")
    p.add_argument("--baseline", help="experiment to compute speedups against")
    p.add_argument("--out", help="also write the summary as CSV")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("import-split", help="cut a file into segment files")
    _add_layout_args(p)
    p.add_argument("--source", required=True)
    p.add_argument("--root", required=True)
    p.add_argument("--name", required=True)
    p.add_argument("--stripe-hook",
                   help="command run per new directory; {dir}, {count}, {width} substituted")
    p.set_defaults(func=cmd_import_split)

    p = sub.add_parser("export-merge", help="reassemble a logical file")
    p.add_argument("--root", required=True)
    p.add_argument("--name", required=True)
    p.add_argument("--dest", required=True)
    p.set_defaults(func=cmd_export_merge)

    p = sub.add_parser("verify", help="split/merge round trip with checksum comparison")
    _add_layout_args(p)
    p.add_argument("--source", required=True)
    p.add_argument("--root", help="store directory (default: a temporary one)")
    p.add_argument("--name", default="verify")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UnknownPresetError as e:
        print(f"error: unknown preset {e.args[0]!r}", file=sys.stderr)
    except (LayoutError, SegmentStoreError, ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
