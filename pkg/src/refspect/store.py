"""Single-directory corpus datasets.

Layout::

    <dataset>/
        meta.json        name, format version, counts, checksums, ingest report
        records.csv      record_id,pub_year,title,journal,n_refs
        refs.csv         record_id,idx,raw + parsed columns (informative)
        clusters.csv     cluster_id,member_key  (auto snapshot, revision 0)
        journal.ndjson   one analyst operation per line

Cited references are stored raw and re-parsed on load with the ingest-time
year pinned in the metadata, so a dataset loads identically years later.
Cluster state is likewise derived: the snapshot holds the auto clustering and
``journal.ndjson`` replays over it.

Saves write every file to a temp name in the same directory, then rename into
place with the metadata last.  A crash before the renames leaves the previous
version untouched; a crash inside the rename train is caught on load by the
per-file checksums and row counts recorded in ``meta.json``.
"""

from __future__ import annotations

import csv
import io
import json
import os
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from hashlib import sha256
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import (
    ClusterError,
    DatasetCorruptError,
    DatasetError,
    UnsupportedVersionError,
)
from .disambiguation import ClusterState, JournalEntry, Variant, build_variants, now_iso
from .diversity import JournalMap, journal_frequencies, rao_stirling
from .ingest import (
    CitedReference,
    CitingRecord,
    IngestReport,
    YearTally,
    current_year,
    parse_cited_ref,
    round_half_up,
    year_tally,
)
from .spectroscopy import (
    Peak,
    Spectrogram,
    build_spectrogram,
    citation_history,
    detect_peaks,
    with_attributions,
)

FORMAT_VERSION = "1.0"

META = "meta.json"
RECORDS = "records.csv"
REFS = "refs.csv"
CLUSTERS = "clusters.csv"
JOURNAL = "journal.ndjson"
DATA_FILES = (RECORDS, REFS, CLUSTERS, JOURNAL)

_RECORDS_HEADER = ["record_id", "pub_year", "title", "journal", "n_refs"]
_REFS_HEADER = [
    "record_id", "idx", "raw",
    "author", "rpy", "volume", "page", "source", "flags", "residue",
]
_CLUSTERS_HEADER = ["cluster_id", "member_key"]


def _sha256(data: bytes) -> str:
    return sha256(data).hexdigest()


def _csv_bytes(header: Sequence[str], rows: Iterable[Sequence]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


LOCK = ".lock"


@contextmanager
def writer_lock(root: Path):
    """Advisory single-writer lock on a dataset directory.

    Concurrent readers are unaffected; a second writer fails fast instead of
    interleaving renames.  The lock file records the holder's pid so a stale
    lock left by a killed process can be identified and removed by hand.
    """
    lock_path = root / LOCK
    try:
        fd = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        holder = ""
        try:
            holder = lock_path.read_text(encoding="utf-8").strip()
        except OSError:
            pass
        raise DatasetError(
            f"{root} is locked by another writer"
            + (f" (pid {holder})" if holder else "")
            + f"; remove {lock_path} if that process is gone"
        )
    try:
        os.write(fd, str(os.getpid()).encode("ascii"))
        os.close(fd)
        yield
    finally:
        try:
            os.unlink(lock_path)
        except OSError:
            pass


@dataclass
class Dataset:
    """A corpus with its ingest report and (optionally) cluster state."""

    name: str
    created: str
    source_format: str
    source_files: list[str]
    ingest_year: int                    # wall-clock year pinned at ingest
    report: IngestReport
    records: list[CitingRecord]
    refs: list[CitedReference]
    cluster_state: ClusterState | None = None
    _tally: YearTally | None = field(default=None, repr=False)
    _variants: dict[str, Variant] | None = field(default=None, repr=False)

    @classmethod
    def create(
        cls,
        records: Sequence[CitingRecord],
        report: IngestReport,
        name: str,
        source_format: str,
        source_files: Sequence[str] = (),
        created: str | None = None,
        ingest_year: int | None = None,
    ) -> "Dataset":
        if report.kept != len(records):
            raise DatasetError(
                f"report says {report.kept} kept records but {len(records)} given"
            )
        ids = [r.record_id for r in records]
        if len(set(ids)) != len(ids):
            raise DatasetError("duplicate record_id in corpus")
        if ingest_year is None:
            ingest_year = current_year()
        refs = []
        for record in records:
            for raw in record.raw_refs:
                refs.append(parse_cited_ref(raw, owner=record.record_id, now_year=ingest_year))
        return cls(
            name=name,
            created=created or now_iso(),
            source_format=source_format,
            source_files=list(source_files),
            ingest_year=ingest_year,
            report=report,
            records=list(records),
            refs=refs,
        )

    # -- derived views -----------------------------------------------------

    @property
    def revision(self) -> int:
        return self.cluster_state.revision if self.cluster_state else 0

    @property
    def tally(self) -> YearTally:
        if self._tally is None:
            self._tally = year_tally(self.refs, total_records=len(self.records))
        return self._tally

    @property
    def variants(self) -> dict[str, Variant]:
        if self.cluster_state is not None:
            return self.cluster_state.variants
        if self._variants is None:
            self._variants = build_variants(self.refs)
        return self._variants

    def spectrum(
        self,
        year_from: int | None = None,
        year_to: int | None = None,
        denominator: str = "window-sum",
    ) -> Spectrogram:
        return build_spectrogram(self.tally, year_from, year_to, denominator)

    def peaks(
        self,
        min_count: int = 10,
        min_dev_pct: float = 0.0,
        top: int = 3,
        denominator: str = "window-sum",
    ) -> list[Peak]:
        spec = self.spectrum(denominator=denominator)
        found = detect_peaks(spec, min_count=min_count, min_dev_pct=min_dev_pct)
        if self.cluster_state is not None:
            found = with_attributions(
                found, self.cluster_state.clusters.values(), self.tally, top
            )
        return found

    def refs_for_years(self, years: Sequence[int]) -> list[dict]:
        """Variant listing for a set of reference years, heaviest first.

        Percent-of-documents is relative to the distinct citing records that
        cite *any* of the selected years, the way a per-year drill-down table
        reads.
        """
        wanted = set(years)
        rows = [v for v in self.variants.values() if v.rpy in wanted]
        denominator = len(set().union(*(v.owners for v in rows))) if rows else 0
        rows.sort(key=lambda v: (-v.occurrences, v.key))
        out = []
        for v in rows:
            pct = round_half_up(100.0 * v.documents / denominator) if denominator else 0.0
            out.append(
                {
                    "reference": v.key,
                    "occurrences": v.occurrences,
                    "documents": v.documents,
                    "pct_documents": pct,
                    "rpy": v.rpy,
                }
            )
        return out

    def cluster(
        self,
        threshold: float = 0.75,
        force: bool = False,
        created: str | None = None,
    ) -> ClusterState:
        """(Re)run auto clustering.  Refuses to discard journal entries unless forced."""
        if (
            self.cluster_state is not None
            and self.cluster_state.entries
            and not force
        ):
            raise ClusterError(
                "dataset already has analyst journal entries; re-clustering "
                "discards them (pass force to proceed)"
            )
        self.cluster_state = ClusterState.auto(self.refs, threshold, created)
        return self.cluster_state

    def require_clusters(self) -> ClusterState:
        if self.cluster_state is None:
            raise ClusterError("dataset has no cluster state yet (run clustering first)")
        return self.cluster_state

    def history(self, cluster_id: str) -> dict[int, int]:
        state = self.require_clusters()
        cluster = state.clusters.get(cluster_id)
        if cluster is None:
            raise ClusterError(f"no such cluster {cluster_id!r}")
        return citation_history(self.records, cluster)

    def diversity(
        self,
        jmap: JournalMap,
        mode: str = "map-distance",
        normalize_over: str = "full-map",
    ) -> dict:
        freqs, match_report = journal_frequencies(self.records, jmap)
        delta = rao_stirling(freqs, jmap, mode, normalize_over)
        return {
            "delta": delta,
            "mode": mode,
            "matched_journals": match_report["matched_journals"],
            "inclusion_pct": match_report["inclusion_pct"],
        }

    def records_per_year(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for r in self.records:
            out[r.pub_year] = out.get(r.pub_year, 0) + 1
        return dict(sorted(out.items()))

    def meta_view(self) -> dict:
        span = self.tally.span()
        state = self.cluster_state
        return {
            "name": self.name,
            "created": self.created,
            "source_format": self.source_format,
            "records": len(self.records),
            "references": len(self.refs),
            "reference_year_span": list(span) if span else None,
            "records_per_year": {str(y): n for y, n in self.records_per_year().items()},
            "revision": self.revision,
            "clustered": state is not None,
            "clusters": len(state.clusters) if state else 0,
            "threshold": state.threshold if state else None,
            "ingest_report": self.report.to_dict(),
        }

    # -- persistence -------------------------------------------------------

    def _file_bytes(self) -> dict[str, bytes]:
        records_rows = [
            [r.record_id, r.pub_year, r.title, r.journal, len(r.raw_refs)]
            for r in self.records
        ]
        refs_rows = []
        counts: dict[str, int] = {}
        for r in self.records:
            counts[r.record_id] = 0
        for ref in self.refs:
            idx = counts[ref.owner]
            counts[ref.owner] += 1
            refs_rows.append(
                [
                    ref.owner,
                    idx,
                    ref.raw,
                    ref.author or "",
                    ref.rpy if ref.rpy is not None else "",
                    ref.volume or "",
                    ref.page or "",
                    ref.source or "",
                    "|".join(sorted(ref.flags)),
                    "|".join(ref.residue),
                ]
            )
        cluster_rows = []
        journal_lines = []
        if self.cluster_state is not None:
            for cid in sorted(self.cluster_state.snapshot):
                for key in self.cluster_state.snapshot[cid]:
                    cluster_rows.append([cid, key])
            journal_lines = [e.to_json() for e in self.cluster_state.entries]
        journal_bytes = "".join(line + "\n" for line in journal_lines).encode("utf-8")
        return {
            RECORDS: _csv_bytes(_RECORDS_HEADER, records_rows),
            REFS: _csv_bytes(_REFS_HEADER, refs_rows),
            CLUSTERS: _csv_bytes(_CLUSTERS_HEADER, cluster_rows),
            JOURNAL: journal_bytes,
        }

    def _meta_dict(self, files: Mapping[str, bytes]) -> dict:
        state = self.cluster_state
        return {
            "format_version": FORMAT_VERSION,
            "name": self.name,
            "created": self.created,
            "source_format": self.source_format,
            "source_files": self.source_files,
            "ingest_year": self.ingest_year,
            "ingest_report": self.report.to_dict(),
            "cluster": (
                {
                    "threshold": state.threshold,
                    "created": state.created,
                    "clusters": len(state.snapshot),
                }
                if state
                else None
            ),
            "counts": {
                "records": len(self.records),
                "refs": len(self.refs),
                "cluster_members": sum(len(m) for m in state.snapshot.values()) if state else 0,
                "journal_entries": len(state.entries) if state else 0,
            },
            "checksums": {name: _sha256(files[name]) for name in DATA_FILES},
        }

    def save(self, path: str | Path) -> Path:
        """Write the dataset directory; previous contents replaced atomically per file."""
        root = Path(path)
        root.mkdir(parents=True, exist_ok=True)
        files = self._file_bytes()
        meta_bytes = (
            json.dumps(self._meta_dict(files), indent=2, sort_keys=True) + "\n"
        ).encode("utf-8")
        ordered = list(files.items()) + [(META, meta_bytes)]
        with writer_lock(root):
            temps = []
            for name, data in ordered:
                tmp = root / (name + ".tmp")
                with open(tmp, "wb") as fh:
                    fh.write(data)
                    fh.flush()
                    os.fsync(fh.fileno())
                temps.append((tmp, root / name))
            # all content durable under temp names; now swap in, metadata last
            for tmp, final in temps:
                os.replace(tmp, final)
        return root


def load_dataset(path: str | Path) -> Dataset:
    """Load a dataset directory, verifying version, checksums, and counts."""
    root = Path(path)
    meta_path = root / META
    if not meta_path.exists():
        raise DatasetError(f"{root} is not a dataset (no {META})")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetCorruptError(f"{meta_path}: unreadable JSON: {exc}") from exc

    version = str(meta.get("format_version", ""))
    major = version.split(".", 1)[0]
    if major != FORMAT_VERSION.split(".", 1)[0]:
        raise UnsupportedVersionError(found=version, expected=FORMAT_VERSION)

    checksums = meta.get("checksums", {})
    raw: dict[str, bytes] = {}
    for name in DATA_FILES:
        file_path = root / name
        if not file_path.exists():
            raise DatasetCorruptError(f"{file_path} is missing")
        data = file_path.read_bytes()
        digest = _sha256(data)
        if checksums.get(name) != digest:
            raise DatasetCorruptError(
                f"{file_path}: checksum mismatch (file {digest[:12]}, "
                f"metadata {str(checksums.get(name))[:12]})"
            )
        raw[name] = data

    counts = meta.get("counts", {})
    ingest_year = int(meta.get("ingest_year", current_year()))

    records = _read_records(root / RECORDS, raw[RECORDS])
    raw_refs = _read_refs(root / REFS, raw[REFS])
    by_record: dict[str, list[str]] = {r.record_id: [] for r in records}
    n_refs = 0
    for record_id, raws in raw_refs.items():
        if record_id not in by_record:
            raise DatasetCorruptError(
                f"{root / REFS}: reference for unknown record {record_id!r}"
            )
        by_record[record_id] = raws
        n_refs += len(raws)
    records = [
        replace(r, raw_refs=tuple(by_record[r.record_id])) for r in records
    ]
    if counts.get("records") != len(records):
        raise DatasetCorruptError(
            f"{root}: metadata says {counts.get('records')} records, found {len(records)}"
        )
    if counts.get("refs") != n_refs:
        raise DatasetCorruptError(
            f"{root}: metadata says {counts.get('refs')} refs, found {n_refs}"
        )

    dataset = Dataset.create(
        records=records,
        report=IngestReport.from_dict(meta.get("ingest_report", {})),
        name=str(meta.get("name", root.name)),
        source_format=str(meta.get("source_format", "")),
        source_files=list(meta.get("source_files", [])),
        created=str(meta.get("created", "")),
        ingest_year=ingest_year,
    )

    cluster_meta = meta.get("cluster")
    if cluster_meta is not None:
        snapshot = _read_snapshot(root / CLUSTERS, raw[CLUSTERS])
        n_members = sum(len(m) for m in snapshot.values())
        if counts.get("cluster_members") != n_members:
            raise DatasetCorruptError(
                f"{root}: metadata says {counts.get('cluster_members')} cluster "
                f"members, found {n_members}"
            )
        entries = _read_journal(root / JOURNAL, raw[JOURNAL])
        if counts.get("journal_entries") != len(entries):
            raise DatasetCorruptError(
                f"{root}: metadata says {counts.get('journal_entries')} journal "
                f"entries, found {len(entries)}"
            )
        variants = build_variants(dataset.refs)
        try:
            dataset.cluster_state = ClusterState.replay(
                snapshot,
                variants,
                entries,
                threshold=float(cluster_meta.get("threshold", 0.75)),
                created=str(cluster_meta.get("created", "")),
            )
        except ClusterError as exc:
            raise DatasetCorruptError(f"{root}: {exc}") from exc
    return dataset


def _read_records(path: Path, data: bytes) -> list[CitingRecord]:
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    header = next(reader, None)
    if header != _RECORDS_HEADER:
        raise DatasetCorruptError(f"{path}: bad header {header!r}")
    records = []
    for row in reader:
        if len(row) != len(_RECORDS_HEADER):
            raise DatasetCorruptError(f"{path}: line {reader.line_num}: bad row")
        record_id, pub_year, title, journal, _ = row
        try:
            year = int(pub_year)
        except ValueError:
            raise DatasetCorruptError(
                f"{path}: line {reader.line_num}: bad pub_year {pub_year!r}"
            ) from None
        records.append(
            CitingRecord(record_id=record_id, pub_year=year, title=title, journal=journal)
        )
    return records


def _read_refs(path: Path, data: bytes) -> dict[str, list[str]]:
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    header = next(reader, None)
    if header != _REFS_HEADER:
        raise DatasetCorruptError(f"{path}: bad header {header!r}")
    out: dict[str, list[tuple[int, str]]] = {}
    for row in reader:
        if len(row) != len(_REFS_HEADER):
            raise DatasetCorruptError(f"{path}: line {reader.line_num}: bad row")
        record_id, idx, raw = row[0], row[1], row[2]
        try:
            i = int(idx)
        except ValueError:
            raise DatasetCorruptError(
                f"{path}: line {reader.line_num}: bad idx {idx!r}"
            ) from None
        out.setdefault(record_id, []).append((i, raw))
    ordered: dict[str, list[str]] = {}
    for record_id, pairs in out.items():
        pairs.sort()
        if [i for i, _ in pairs] != list(range(len(pairs))):
            raise DatasetCorruptError(
                f"{path}: reference indexes for {record_id!r} are not 0..n-1"
            )
        ordered[record_id] = [raw for _, raw in pairs]
    return ordered


def _read_snapshot(path: Path, data: bytes) -> dict[str, tuple[str, ...]]:
    reader = csv.reader(io.StringIO(data.decode("utf-8")))
    header = next(reader, None)
    if header != _CLUSTERS_HEADER:
        raise DatasetCorruptError(f"{path}: bad header {header!r}")
    snapshot: dict[str, list[str]] = {}
    for row in reader:
        if len(row) != 2:
            raise DatasetCorruptError(f"{path}: line {reader.line_num}: bad row")
        snapshot.setdefault(row[0], []).append(row[1])
    return {cid: tuple(sorted(members)) for cid, members in snapshot.items()}


def _read_journal(path: Path, data: bytes) -> list[JournalEntry]:
    entries = []
    for lineno, line in enumerate(data.decode("utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            entries.append(JournalEntry.from_json(line))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DatasetCorruptError(f"{path}: line {lineno}: {exc}") from exc
    return entries
