"""Bibliographic export parsing: citing records and their cited references.

Two input formats are supported.

``wos-tagged``
    Tagged plain text.  Each line is ``TAG VALUE`` with a two-letter uppercase
    tag at columns 1-2 and the value starting at column 4; continuation lines
    begin with three spaces.  Within the ``CR`` block every line is one cited
    reference.  ``ER`` terminates a record, ``EF`` terminates the file::

        PT J
        TI Graphite oxide revisited
        SO J PHYS CHEM B
        PY 1998
        CR BRODIE B C, 1859, V149, P249, PHILOS T ROY SOC LONDON
           STAUDENMAIER L, 1898, V31, P1481, BER DTSCH CHEM GES
        ER

    Unknown tags are skipped.  A malformed record (missing or bad ``PY``) is
    rejected and counted; a structurally broken file (unreadable line, record
    never terminated) raises :class:`~refspect.errors.StructuralError` naming
    the line.

``ref-csv``
    UTF-8 CSV with header ``record_id,pub_year,title,journal,cited_ref`` and
    one row per (record, reference) pair, RFC 4180 quoting.  Rows sharing a
    ``record_id`` are grouped into one record; an empty ``cited_ref`` cell
    contributes no reference, which is how a record with no references at all
    is written (one row, empty last cell).

Cited-reference strings follow the comma-separated convention::

    BRODIE B C, 1859, V149, P249, PHILOS T ROY SOC LONDON

Segments are classified, not positioned: the first 4-digit token in
[1500, 2100] is the reference publication year, ``V``+digits the volume,
``P``+digits the starting page, the first unconsumed segment the author, the
last unconsumed segment the source.  Whatever remains is kept verbatim in
``residue``.  Parsing never fails on a non-empty string; problems surface as
flags on the parsed reference.
"""

from __future__ import annotations

import csv
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import date
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, Mapping

from .errors import EmptyReferenceError, StructuralError

# Reference-level diagnostic flags.
NO_YEAR = "NO_YEAR"
YEAR_OUT_OF_RANGE = "YEAR_OUT_OF_RANGE"
NO_SOURCE = "NO_SOURCE"
UNPARSED_SEGMENT = "UNPARSED_SEGMENT"

# Record-level rejection reasons.
MISSING_PUB_YEAR = "MISSING_PUB_YEAR"
BAD_PUB_YEAR = "BAD_PUB_YEAR"
INCONSISTENT_RECORD = "INCONSISTENT_RECORD"
MISSING_RECORD_ID = "MISSING_RECORD_ID"
DUPLICATE_RECORD_ID = "DUPLICATE_RECORD_ID"

FORMATS = ("wos-tagged", "ref-csv")

YEAR_FLOOR = 1500     # nothing cited before movable type is a real year here
RPY_CEILING = 2100    # grammar bound for year-shaped tokens

_YEAR_RE = re.compile(r"^\d{4}$")
_VOLUME_RE = re.compile(r"^V\d+$")
_PAGE_RE = re.compile(r"^P\d+$")
# Two uppercase letters at columns 1-2; value, if any, starts at column 4.
_TAG_RE = re.compile(r"^[A-Z][A-Z0-9](?: |$)")

_CSV_HEADER = ["record_id", "pub_year", "title", "journal", "cited_ref"]


def current_year() -> int:
    return date.today().year


def round_half_up(value: float, places: int = 2) -> float:
    """Round with ties away from zero, the way the tables do (57.085 -> 57.09)."""
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(value)).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class CitedReference:
    """One parsed cited-reference occurrence.

    ``owner`` is the record_id of the citing record.  Field values are
    normalized (uppercased, whitespace collapsed, trailing periods stripped);
    ``raw`` keeps the input string untouched.
    """

    owner: str
    raw: str
    author: str | None = None
    rpy: int | None = None          # reference publication year
    volume: str | None = None       # digits only, "V" prefix stripped
    page: str | None = None         # digits only, "P" prefix stripped
    source: str | None = None
    flags: frozenset[str] = frozenset()
    residue: tuple[str, ...] = ()   # unclassified segments, verbatim

    def canonical_parts(self) -> list[str]:
        parts = []
        if self.author is not None:
            parts.append(self.author)
        if self.rpy is not None:
            parts.append(str(self.rpy))
        if self.volume is not None:
            parts.append(f"V{self.volume}")
        if self.page is not None:
            parts.append(f"P{self.page}")
        if self.source is not None:
            parts.append(self.source)
        return parts

    def canonical(self) -> str:
        """Canonical serialization of the parsed fields, residue excluded."""
        return ", ".join(self.canonical_parts())

    def key(self) -> str:
        """Variant identity: canonical fields plus residue.

        Occurrences with equal keys are the same variant string for tallying
        and disambiguation purposes.
        """
        return ", ".join(self.canonical_parts() + list(self.residue))


def _normalize_field(segment: str) -> str:
    collapsed = " ".join(segment.split())
    return collapsed.upper().rstrip(".").rstrip()


def parse_cited_ref(
    raw: str, owner: str = "", now_year: int | None = None
) -> CitedReference:
    """Parse one cited-reference string.

    Raises :class:`EmptyReferenceError` for empty or all-whitespace input;
    every other string parses, with unrecognized content flagged rather than
    dropped.  A second volume- or page-shaped segment goes to ``residue``
    (never a silent overwrite) and is not a source candidate.
    """
    if raw is None or not raw.strip():
        raise EmptyReferenceError("empty cited-reference string")
    if now_year is None:
        now_year = current_year()

    segments = [s.strip() for s in raw.split(",")]
    segments = [s for s in segments if s]
    n = len(segments)
    consumed = [False] * n
    residue_idx: list[int] = []
    flags: set[str] = set()

    rpy: int | None = None
    volume: str | None = None
    page: str | None = None

    # First year-shaped token in range wins; later ones stay source/residue
    # candidates.
    for i, seg in enumerate(segments):
        if _YEAR_RE.match(seg):
            value = int(seg)
            if YEAR_FLOOR <= value <= RPY_CEILING:
                rpy = value
                consumed[i] = True
                break

    for i, seg in enumerate(segments):
        if consumed[i]:
            continue
        if _VOLUME_RE.match(seg):
            if volume is None:
                volume = seg[1:]
            else:
                residue_idx.append(i)
            consumed[i] = True
        elif _PAGE_RE.match(seg):
            if page is None:
                page = seg[1:]
            else:
                residue_idx.append(i)
            consumed[i] = True

    author: str | None = None
    if n and not consumed[0]:
        normalized = _normalize_field(segments[0])
        if normalized:
            author = normalized
            consumed[0] = True

    source: str | None = None
    for i in range(n - 1, -1, -1):
        if consumed[i]:
            continue
        normalized = _normalize_field(segments[i])
        if normalized:
            source = normalized
            consumed[i] = True
            break

    residue_idx.extend(i for i in range(n) if not consumed[i])
    residue = tuple(segments[i] for i in sorted(residue_idx))

    if rpy is None:
        flags.add(NO_YEAR)
    elif not (YEAR_FLOOR <= rpy <= now_year):
        flags.add(YEAR_OUT_OF_RANGE)
    if source is None:
        flags.add(NO_SOURCE)
    if residue:
        flags.add(UNPARSED_SEGMENT)

    return CitedReference(
        owner=owner,
        raw=raw,
        author=author,
        rpy=rpy,
        volume=volume,
        page=page,
        source=source,
        flags=frozenset(flags),
        residue=residue,
    )


@dataclass(frozen=True)
class CitingRecord:
    """One citing publication with its cited-reference strings, unparsed."""

    record_id: str
    pub_year: int
    title: str = ""
    journal: str = ""
    raw_refs: tuple[str, ...] = ()


@dataclass
class IngestReport:
    """Counts from one ingest run; every encountered record is kept or rejected."""

    kept: int = 0
    rejected: int = 0
    reject_reasons: Counter = field(default_factory=Counter)
    ref_flags: Counter = field(default_factory=Counter)

    def add(self, other: "IngestReport") -> None:
        self.kept += other.kept
        self.rejected += other.rejected
        self.reject_reasons.update(other.reject_reasons)
        self.ref_flags.update(other.ref_flags)

    def to_dict(self) -> dict:
        return {
            "kept": self.kept,
            "rejected": self.rejected,
            "reject_reasons": dict(sorted(self.reject_reasons.items())),
            "ref_flags": dict(sorted(self.ref_flags.items())),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "IngestReport":
        return cls(
            kept=int(data.get("kept", 0)),
            rejected=int(data.get("rejected", 0)),
            reject_reasons=Counter(data.get("reject_reasons", {})),
            ref_flags=Counter(data.get("ref_flags", {})),
        )


def parse_refs(
    records: Iterable[CitingRecord], now_year: int | None = None
) -> list[CitedReference]:
    """Parse every cited reference of every record, in record order."""
    if now_year is None:
        now_year = current_year()
    refs = []
    for record in records:
        for raw in record.raw_refs:
            refs.append(parse_cited_ref(raw, owner=record.record_id, now_year=now_year))
    return refs


def parse_export(
    path: str | Path,
    format: str,
    now_year: int | None = None,
    id_start: int = 1,
) -> tuple[list[CitingRecord], IngestReport]:
    """Parse one export file into citing records plus an ingest report.

    ``id_start`` seeds the generated record_id sequence for wos-tagged input
    so several files can share one id space; ref-csv records carry their own
    ids and ignore it.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown export format {format!r} (expected one of {FORMATS})")
    if now_year is None:
        now_year = current_year()
    text = Path(path).read_text(encoding="utf-8-sig")
    if format == "wos-tagged":
        return _parse_wos_tagged(text, now_year, id_start)
    return _parse_ref_csv(text, now_year)


def _valid_pub_year(value: str, now_year: int) -> int | None:
    value = value.strip()
    if not _YEAR_RE.match(value):
        return None
    year = int(value)
    if YEAR_FLOOR <= year <= now_year:
        return year
    return None


def _count_ref_flags(record: CitingRecord, now_year: int, report: IngestReport) -> None:
    for raw in record.raw_refs:
        parsed = parse_cited_ref(raw, owner=record.record_id, now_year=now_year)
        report.ref_flags.update(parsed.flags)


def _parse_wos_tagged(
    text: str, now_year: int, id_start: int
) -> tuple[list[CitingRecord], IngestReport]:
    records: list[CitingRecord] = []
    report = IngestReport()
    next_id = id_start

    fields: dict[str, str] | None = None    # open record, None between records
    refs: list[str] = []
    last_tag: str | None = None
    opened_at = 0

    def close_record() -> None:
        nonlocal fields, refs, last_tag, next_id
        assert fields is not None
        py = _valid_pub_year(fields.get("PY", ""), now_year)
        if py is None:
            report.rejected += 1
            reason = BAD_PUB_YEAR if fields.get("PY", "").strip() else MISSING_PUB_YEAR
            report.reject_reasons[reason] += 1
        else:
            record = CitingRecord(
                record_id=f"R{next_id:06d}",
                pub_year=py,
                title=fields.get("TI", ""),
                journal=fields.get("SO", ""),
                raw_refs=tuple(r for r in refs if r.strip()),
            )
            next_id += 1
            records.append(record)
            report.kept += 1
            _count_ref_flags(record, now_year, report)
        fields = None
        refs = []
        last_tag = None

    for lineno, line in enumerate(text.split("\n"), 1):
        line = line.rstrip("\r")
        if line == "EF" and fields is None:
            break
        if not line.strip():
            continue
        if line == "ER":
            if fields is None:
                raise StructuralError(lineno, "ER with no open record")
            close_record()
        elif line.startswith("   "):
            if fields is None or last_tag is None:
                raise StructuralError(lineno, "continuation line outside any tag")
            value = line[3:]
            if last_tag == "CR":
                refs.append(value)
            elif last_tag in fields:
                fields[last_tag] = f"{fields[last_tag]} {value.strip()}"
        elif _TAG_RE.match(line):
            tag = line[:2]
            value = line[3:] if len(line) > 3 else ""
            if tag == "EF":
                # EF with trailing junk on the line, or EF while a record is
                # open: both structural.
                raise StructuralError(lineno, "EF while a record is still open"
                                      if fields is not None else "malformed EF line")
            if fields is None:
                fields = {}
                opened_at = lineno
            if tag == "CR":
                refs.append(value)
            elif tag not in fields:
                fields[tag] = value.strip()
            last_tag = tag
        else:
            raise StructuralError(lineno, f"unrecognized line {line[:40]!r}")

    if fields is not None:
        raise StructuralError(
            opened_at, "record opened here was never terminated by ER"
        )
    return records, report


def _parse_ref_csv(text: str, now_year: int) -> tuple[list[CitingRecord], IngestReport]:
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        return [], IngestReport()
    if header != _CSV_HEADER:
        raise StructuralError(1, f"bad header {header!r}, expected {_CSV_HEADER!r}")

    report = IngestReport()
    groups: dict[str, list[tuple[str, str, str, str]]] = {}
    order: list[str] = []
    for row in reader:
        if not row:
            continue
        if len(row) != len(_CSV_HEADER):
            raise StructuralError(
                reader.line_num, f"expected {len(_CSV_HEADER)} fields, got {len(row)}"
            )
        record_id, pub_year, title, journal, cited_ref = row
        record_id = record_id.strip()
        if not record_id:
            # an id-less row can't join any group; reject it as its own record
            report.rejected += 1
            report.reject_reasons[MISSING_RECORD_ID] += 1
            continue
        if record_id not in groups:
            groups[record_id] = []
            order.append(record_id)
        groups[record_id].append((pub_year.strip(), title, journal, cited_ref))

    records: list[CitingRecord] = []
    for record_id in order:
        rows = groups[record_id]
        meta = {(py, title, journal) for py, title, journal, _ in rows}
        if len(meta) > 1:
            report.rejected += 1
            report.reject_reasons[INCONSISTENT_RECORD] += 1
            continue
        py_text, title, journal = rows[0][:3]
        py = _valid_pub_year(py_text, now_year)
        if py is None:
            report.rejected += 1
            reason = BAD_PUB_YEAR if py_text else MISSING_PUB_YEAR
            report.reject_reasons[reason] += 1
            continue
        record = CitingRecord(
            record_id=record_id,
            pub_year=py,
            title=title,
            journal=journal,
            raw_refs=tuple(r for _, _, _, r in rows if r.strip()),
        )
        records.append(record)
        report.kept += 1
        _count_ref_flags(record, now_year, report)
    return records, report


@dataclass(frozen=True)
class YearCount:
    """Tally entry for one reference publication year."""

    occurrences: int        # cited-reference occurrences with this year
    documents: int          # distinct citing records among them
    pct_documents: float    # documents as a percent of the whole corpus


@dataclass(frozen=True)
class YearTally:
    years: Mapping[int, YearCount]
    no_year: int            # occurrences whose string yielded no usable year
    total_records: int

    @property
    def counts(self) -> dict[int, int]:
        return {year: yc.occurrences for year, yc in self.years.items()}

    @property
    def total_occurrences(self) -> int:
        return sum(yc.occurrences for yc in self.years.values()) + self.no_year

    def span(self) -> tuple[int, int] | None:
        if not self.years:
            return None
        return min(self.years), max(self.years)


def year_tally(refs: Iterable[CitedReference], total_records: int) -> YearTally:
    """Tally cited references by reference publication year.

    References flagged ``YEAR_OUT_OF_RANGE`` or lacking a year entirely are
    excluded from the per-year map and counted under ``no_year``, so the
    spectrum never contains phantom future years.
    """
    occ: Counter = Counter()
    docs: dict[int, set[str]] = {}
    no_year = 0
    for ref in refs:
        if ref.rpy is None or YEAR_OUT_OF_RANGE in ref.flags:
            no_year += 1
            continue
        occ[ref.rpy] += 1
        docs.setdefault(ref.rpy, set()).add(ref.owner)
    years = {}
    for year in sorted(occ):
        documents = len(docs[year])
        pct = round_half_up(100.0 * documents / total_records) if total_records else 0.0
        years[year] = YearCount(occ[year], documents, pct)
    return YearTally(years=years, no_year=no_year, total_records=total_records)
