"""Command line interface.

Exit codes: 0 success, 1 usage error (bad flags, missing dataset argument),
2 data error (unreadable export, corrupt dataset, invalid operation).

Every subcommand that reads a dataset takes ``--dataset``; when omitted the
``REFSPECT_DATASET`` environment variable is used.  The ``report`` subcommand
is the batch path: it writes the delimited outputs and renders the matching
figures next to them.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__
from .disambiguation import EXPORT_HEADER
from .diversity import MODES, NORMALIZE_OVER, JournalMap
from .errors import RefspectError
from .ingest import FORMATS, IngestReport, parse_export
from .spectroscopy import DENOMINATORS, Spectrogram
from .store import Dataset, load_dataset


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad usage by default; this tool reserves 2 for data
    # errors, so route usage problems through exit code 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(value: float) -> str:
    text = f"{value:.6f}".rstrip("0").rstrip(".")
    return text if text and text != "-0" else "0"


def _dataset_path(args) -> str:
    path = getattr(args, "dataset", None) or os.environ.get("REFSPECT_DATASET")
    if not path:
        raise UsageError("no dataset given (use --dataset or set REFSPECT_DATASET)")
    return path


def _load(args) -> Dataset:
    return load_dataset(_dataset_path(args))


def _out_stream(path: str | None):
    if path:
        return open(path, "w", encoding="utf-8", newline="")
    return sys.stdout


def _spectrum_csv(spec: Spectrogram, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["year", "count", "median5", "dev_abs", "dev_pct", "is_peak"])
    for row in spec.rows:
        writer.writerow(
            [
                row.year,
                row.count,
                _fmt(row.median5),
                _fmt(row.dev_abs),
                _fmt(row.dev_pct),
                "true" if row.is_peak else "false",
            ]
        )


def _history_csv(series: dict[int, int], fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["year", "citing_records"])
    for year in sorted(series):
        writer.writerow([year, series[year]])


def _cluster_export_csv(dataset: Dataset, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(EXPORT_HEADER)
    writer.writerows(dataset.require_clusters().export_rows())


# -- subcommands -----------------------------------------------------------

def _cmd_ingest(args) -> int:
    records = []
    report = IngestReport()
    seen: set[str] = set()
    next_id = 1
    for path in args.files:
        file_records, file_report = parse_export(path, args.format, id_start=next_id)
        report.add(file_report)
        for record in file_records:
            if record.record_id in seen:
                report.kept -= 1
                report.rejected += 1
                report.reject_reasons["DUPLICATE_RECORD_ID"] += 1
                continue
            seen.add(record.record_id)
            records.append(record)
        next_id += len(file_records)
    dataset = Dataset.create(
        records,
        report,
        name=args.name or Path(args.out).name,
        source_format=args.format,
        source_files=[str(p) for p in args.files],
    )
    dataset.save(args.out)
    print(json.dumps(report.to_dict()))
    return 0


def _cmd_spectrum(args) -> int:
    dataset = _load(args)
    spec = dataset.spectrum(args.year_from, args.year_to, args.pct_denominator)
    fh = _out_stream(args.csv)
    try:
        _spectrum_csv(spec, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def _cmd_peaks(args) -> int:
    if args.min_count < 1:
        raise UsageError("--min-count must be >= 1")
    dataset = _load(args)
    peaks = dataset.peaks(
        min_count=args.min_count, min_dev_pct=args.min_dev_pct, top=args.top
    )
    print("year\tcount\tdev_abs\tdev_pct\ttop_clusters")
    for p in peaks:
        tops = ";".join(
            f"{cid}:{occ}:{share:.4f}" for cid, occ, share in p.top_clusters
        )
        print(f"{p.year}\t{p.count}\t{_fmt(p.dev_abs)}\t{_fmt(p.dev_pct)}\t{tops}")
    return 0


def _cmd_refs(args) -> int:
    dataset = _load(args)
    rows = dataset.refs_for_years(args.year)
    print("occurrences\tdocuments\tpct_documents\treference")
    for row in rows:
        print(
            f"{row['occurrences']}\t{row['documents']}"
            f"\t{row['pct_documents']:.2f}\t{row['reference']}"
        )
    return 0


def _cmd_cluster(args) -> int:
    if not 0.0 < args.threshold <= 1.0:
        raise UsageError("--threshold must be in (0, 1]")
    path = _dataset_path(args)
    dataset = load_dataset(path)
    state = dataset.cluster(threshold=args.threshold, force=args.force)
    dataset.save(path)
    if args.csv:
        with open(args.csv, "w", encoding="utf-8", newline="") as fh:
            _cluster_export_csv(dataset, fh)
    print(
        json.dumps(
            {
                "clusters": len(state.clusters),
                "variants": len(state.variants),
                "threshold": state.threshold,
                "revision": state.revision,
            }
        )
    )
    return 0


def _cmd_history(args) -> int:
    dataset = _load(args)
    series = dataset.history(args.cluster)
    fh = _out_stream(args.csv)
    try:
        _history_csv(series, fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    return 0


def _cmd_diversity(args) -> int:
    dataset = _load(args)
    jmap = JournalMap.from_csv(args.map)
    result = dataset.diversity(jmap, args.mode, args.normalize_over)
    print(json.dumps(result))
    return 0


def _cmd_report(args) -> int:
    # figures are rendered here and nowhere else, so the matplotlib import
    # cost stays off the query subcommands
    from .plotting import history_figure, save_figure, spectrogram_figure

    if args.min_count < 1:
        raise UsageError("--min-count must be >= 1")
    dataset = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    spec = dataset.spectrum(args.year_from, args.year_to, args.pct_denominator)
    peaks = dataset.peaks(
        min_count=args.min_count,
        min_dev_pct=args.min_dev_pct,
        top=args.top,
        denominator=args.pct_denominator,
    )

    path = out / "spectrum.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        _spectrum_csv(spec, fh)
    written.append(path)

    path = out / "peaks.tsv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("year\tcount\tdev_abs\tdev_pct\ttop_clusters\n")
        for p in peaks:
            tops = ";".join(
                f"{cid}:{occ}:{share:.4f}" for cid, occ, share in p.top_clusters
            )
            fh.write(f"{p.year}\t{p.count}\t{_fmt(p.dev_abs)}\t{_fmt(p.dev_pct)}\t{tops}\n")
    written.append(path)

    path = out / "spectrogram.png"
    save_figure(spectrogram_figure(spec, peaks, title=dataset.name), path)
    written.append(path)

    if dataset.cluster_state is not None:
        path = out / "clusters.csv"
        with open(path, "w", encoding="utf-8", newline="") as fh:
            _cluster_export_csv(dataset, fh)
        written.append(path)

        shown: list[str] = []
        for p in peaks:
            for cid, _, _ in p.top_clusters:
                if cid not in shown:
                    shown.append(cid)
        for cid in shown[: args.histories]:
            series = dataset.history(cid)
            path = out / f"history_{cid}.csv"
            with open(path, "w", encoding="utf-8", newline="") as fh:
                _history_csv(series, fh)
            written.append(path)
            cluster = dataset.cluster_state.clusters[cid]
            label = ", ".join(
                str(v)
                for v in (
                    cluster.canonical.get("author"),
                    cluster.canonical.get("rpy"),
                    cluster.canonical.get("source"),
                )
                if v is not None
            )
            path = out / f"history_{cid}.png"
            save_figure(history_figure(series, label=label), path)
            written.append(path)

    for path in written:
        print(path)
    return 0


def _cmd_serve(args) -> int:
    from .service import create_server

    dataset_path = _dataset_path(args)
    dataset = load_dataset(dataset_path)
    jmap = JournalMap.from_csv(args.map) if args.map else None
    server = create_server(
        dataset,
        dataset_path=dataset_path,
        host=args.host,
        port=args.port,
        static_dir=args.static,
        jmap=jmap,
        verbose=args.verbose,
    )
    host, port = server.server_address[:2]
    print(f"listening on http://{host}:{port}/ (dataset: {dataset.name})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


# -- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="refspect",
        description="cited-reference spectroscopy workbench",
    )
    parser.add_argument(
        "--version", action="version", version=f"refspect {__version__}"
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def dataset_arg(p):
        p.add_argument(
            "--dataset",
            help="dataset directory (default: REFSPECT_DATASET)",
        )

    p = sub.add_parser("ingest", help="parse exports into a dataset directory")
    p.add_argument("--format", required=True, choices=FORMATS)
    p.add_argument("--out", required=True, help="dataset directory to create")
    p.add_argument("--name", help="dataset name (default: directory name)")
    p.add_argument("files", nargs="+", metavar="FILE")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("spectrum", help="write the year spectrum as CSV")
    dataset_arg(p)
    p.add_argument("--from", dest="year_from", type=int)
    p.add_argument("--to", dest="year_to", type=int)
    p.add_argument(
        "--pct-denominator", choices=DENOMINATORS, default="window-sum"
    )
    p.add_argument("--csv", help="output path (default: stdout)")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("peaks", help="list detected peak years")
    dataset_arg(p)
    p.add_argument("--min-count", type=int, default=10)
    p.add_argument("--min-dev-pct", type=float, default=0.0)
    p.add_argument("--top", type=int, default=3, help="clusters listed per peak")
    p.set_defaults(func=_cmd_peaks)

    p = sub.add_parser("refs", help="list reference variants for given years")
    dataset_arg(p)
    p.add_argument(
        "--year", type=int, action="append", required=True, metavar="YEAR"
    )
    p.set_defaults(func=_cmd_refs)

    p = sub.add_parser("cluster", help="auto-cluster variants into works")
    dataset_arg(p)
    p.add_argument("--threshold", type=float, default=0.75)
    p.add_argument("--csv", help="also write the cluster export CSV here")
    p.add_argument(
        "--force",
        action="store_true",
        help="re-cluster even if analyst journal entries exist (discards them)",
    )
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("history", help="citation history of one cluster")
    dataset_arg(p)
    p.add_argument("--cluster", required=True, metavar="ID")
    p.add_argument("--csv", help="output path (default: stdout)")
    p.set_defaults(func=_cmd_history)

    p = sub.add_parser("diversity", help="Rao-Stirling diversity against a journal map")
    dataset_arg(p)
    p.add_argument("--map", required=True, help="journal map CSV")
    p.add_argument("--mode", choices=MODES, default="map-distance")
    p.add_argument("--normalize-over", choices=NORMALIZE_OVER, default="full-map")
    p.set_defaults(func=_cmd_diversity)

    p = sub.add_parser(
        "report", help="write spectrum, peaks, clusters, and figures to a directory"
    )
    dataset_arg(p)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--from", dest="year_from", type=int)
    p.add_argument("--to", dest="year_to", type=int)
    p.add_argument("--pct-denominator", choices=DENOMINATORS, default="window-sum")
    p.add_argument("--min-count", type=int, default=10)
    p.add_argument("--min-dev-pct", type=float, default=0.0)
    p.add_argument("--top", type=int, default=3)
    p.add_argument(
        "--histories", type=int, default=4, help="max clusters to plot histories for"
    )
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", help="serve the JSON API (and optional static UI)")
    dataset_arg(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8377)
    p.add_argument("--static", help="directory of static files to serve at /")
    p.add_argument("--map", help="journal map CSV for /api/diversity")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"refspect: {exc}", file=sys.stderr)
        return 1
    except RefspectError as exc:
        print(f"refspect: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"refspect: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
