"""Shared fixtures.

The workhorse is a 254-record corpus citing fifteen variant renderings of two
1859/1860 chemistry papers.  Occurrence counts per variant are fixed so that
the year totals come out 156 (1859) and 102 (1860), every variant's
occurrences land in distinct citing records, and every record cites at least
one of the variants.  The heaviest variant therefore covers 145 of 254
records (57.09%).
"""

from __future__ import annotations

import pathlib

import pytest

from refspect.disambiguation import ClusterState
from refspect.ingest import (
    YearCount,
    YearTally,
    parse_export,
    parse_refs,
    year_tally,
)
from refspect.store import Dataset

NOW_YEAR = 2026
CREATED = "2026-08-22T12:00:00Z"

# (occurrences, raw cited-reference string), descending by weight
TABLE3 = [
    (145, "BRODIE B C, 1859, V149, P249, PHILOS T ROY SOC LONDON"),
    (89, "BRODIE B C, 1860, V59, P466, ANN CHIM PHYS"),
    (6, "BRODIE M B C, 1860, V59, P466, ANN CHIM PHYS"),
    (3, "BRODIE B C, 1859, V10, P249, P ROY SOC LONDON"),
    (3, "BRODIE B, 1859, V149, P249, PHILOS T R SOC LONDON"),
    (2, "BRODIE B C, 1859, V10, P249, P R SOC LONDON"),
    (2, "BRODIE B C, 1860, V12, P261, Q J CHEM SOC"),
    (1, "BRODIE B C, 1859, V10, P11, P R SOC LONDON"),
    (1, "BRODIE B C, 1859, V149, P10, PHILOS T R SOC"),
    (1, "BRODIE B C, 1860, V114, P6, LIEBIGS ANN CHEM"),
    (1, "BRODIE B, 1860, P59, ANN CHIM PHYS"),
    (1, "BRODIE B, 1860, V59, P17, NN CHIM PHYS"),
    (1, "BRODIE B, 1860, V59, P7, ANN CHIM PHYS"),
    (1, "BRODIE E C, 1860, V59, P466, ANN CHIM PHYS"),
    (1, "BRODIE F R S, 1859, V149, P249, PHILOS T R SOC LONDON"),
]

N_RECORDS = 254

ROWS_1859 = (1, 4, 5, 6, 8, 9, 15)
ROWS_1860 = (2, 3, 7, 10, 11, 12, 13, 14)

# rows 12-15 ride along in records that already hold an earlier row, keeping
# the record count at 254 while every occurrence stays in its own record
_WRAPPED = {12: 1, 13: 2, 14: 3, 15: 146}


def variant_assignment() -> dict[int, list[str]]:
    """1-based record index -> raw refs cited by that record."""
    refs_by_record: dict[int, list[str]] = {i: [] for i in range(1, N_RECORDS + 1)}
    nxt = 1
    for row, (occ, raw) in enumerate(TABLE3, start=1):
        if row in _WRAPPED:
            refs_by_record[_WRAPPED[row]].append(raw)
            continue
        for _ in range(occ):
            refs_by_record[nxt].append(raw)
            nxt += 1
    assert nxt == N_RECORDS + 1
    return refs_by_record


def record_pub_year(index: int) -> int:
    return 2004 + (index - 1) % 10


def wos_export(refs_by_record: dict[int, list[str]]) -> str:
    lines: list[str] = []
    for i in sorted(refs_by_record):
        lines.append("PT J")
        lines.append(f"TI Corpus record {i}")
        lines.append("SO CARBON")
        lines.append(f"PY {record_pub_year(i)}")
        for j, raw in enumerate(refs_by_record[i]):
            lines.append(("CR " if j == 0 else "   ") + raw)
        lines.append("ER")
        lines.append("")
    lines.append("EF")
    return "\n".join(lines) + "\n"


def tally_of(counts: dict[int, int], total_records: int = 1000) -> YearTally:
    """A tally with the given occurrence counts (documents set equal)."""
    years = {
        year: YearCount(n, n, 0.0) for year, n in sorted(counts.items()) if n
    }
    return YearTally(years=years, no_year=0, total_records=total_records)


@pytest.fixture(scope="session")
def table3_text() -> str:
    return wos_export(variant_assignment())


@pytest.fixture(scope="session")
def table3_path(table3_text, tmp_path_factory) -> pathlib.Path:
    path = tmp_path_factory.mktemp("corpus") / "brodie.txt"
    path.write_text(table3_text, encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def table3_corpus(table3_path):
    return parse_export(table3_path, "wos-tagged", now_year=NOW_YEAR)


@pytest.fixture(scope="session")
def table3_records(table3_corpus):
    return table3_corpus[0]


@pytest.fixture(scope="session")
def table3_refs(table3_records):
    return parse_refs(table3_records, now_year=NOW_YEAR)


@pytest.fixture(scope="session")
def table3_tally(table3_records, table3_refs):
    return year_tally(table3_refs, total_records=len(table3_records))


@pytest.fixture
def table3_state(table3_refs) -> ClusterState:
    return ClusterState.auto(table3_refs, created=CREATED)


@pytest.fixture
def table3_dataset(table3_corpus) -> Dataset:
    records, report = table3_corpus
    return Dataset.create(
        records,
        report,
        name="brodie",
        source_format="wos-tagged",
        source_files=["brodie.txt"],
        created=CREATED,
        ingest_year=NOW_YEAR,
    )
