"""Reference publication year spectrograms and peak detection.

The spectrogram is the per-year count of cited-reference occurrences together
with its deviation from the 5-year running median.  For year ``y`` the window
is ``{y-2 .. y+2}`` clipped to the observed span (years outside the span do
not exist, years inside it with no references count as zero):

    median5(y)  = median of counts over the clipped window
    dev_abs(y)  = count(y) - median5(y)
    dev_pct(y)  = 100 * dev_abs(y) / sum(window counts)      ("window-sum")
                  100 * dev_abs(y) / median5(y)              ("median")

A year is a peak when its count clears an absolute floor, its deviation is
positive, and it is not dominated by a neighbor: count(y) >= count(y-1) and
count(y) > count(y+1), neighbors read from the full tally.  On a flat run of
equal counts that rule keeps the last year of the run.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from statistics import median
from typing import Iterable, Mapping, Sequence

from .ingest import CitingRecord, YearTally

DENOMINATORS = ("window-sum", "median")
BASES = ("occurrences", "documents")

DEFAULT_MIN_COUNT = 10
DEFAULT_MIN_DEV_PCT = 0.0


@dataclass(frozen=True)
class SpectrogramRow:
    year: int
    count: int
    median5: float
    dev_abs: float
    dev_pct: float
    is_peak: bool


@dataclass(frozen=True)
class Spectrogram:
    year_from: int
    year_to: int
    denominator: str
    rows: tuple[SpectrogramRow, ...]
    counts: Mapping[int, int]       # full tally, not clipped to the range
    basis: str = "occurrences"

    def row(self, year: int) -> SpectrogramRow | None:
        i = year - self.year_from
        if 0 <= i < len(self.rows):
            return self.rows[i]
        return None


@dataclass(frozen=True)
class Peak:
    year: int
    count: int
    dev_abs: float
    dev_pct: float
    # (cluster_id, occurrences at this rpy, share of the year's occurrences)
    top_clusters: tuple[tuple[str, int, float], ...] = ()


def _window_counts(year: int, counts: Mapping[int, int], span: tuple[int, int]) -> list[int]:
    lo, hi = span
    return [
        counts.get(y, 0)
        for y in range(max(year - 2, lo), min(year + 2, hi) + 1)
    ]


def _deviation(year, counts, span, denominator):
    window = _window_counts(year, counts, span) if span else []
    n = counts.get(year, 0)
    if not window:
        return 0.0, float(n), 0.0
    med = float(median(window))
    dev = n - med
    if denominator == "window-sum":
        base = float(sum(window))
    else:
        base = med
    pct = 100.0 * dev / base if base else 0.0
    return med, dev, pct


def _qualifies(year, counts, span, denominator, min_count, min_dev_pct):
    n = counts.get(year, 0)
    if n < min_count:
        return False
    _, dev, pct = _deviation(year, counts, span, denominator)
    if dev <= 0 or pct < min_dev_pct:
        return False
    return n >= counts.get(year - 1, 0) and n > counts.get(year + 1, 0)


def build_spectrogram(
    tally: YearTally,
    year_from: int | None = None,
    year_to: int | None = None,
    denominator: str = "window-sum",
    peak_min_count: int = DEFAULT_MIN_COUNT,
    peak_min_dev_pct: float = DEFAULT_MIN_DEV_PCT,
    basis: str = "occurrences",
) -> Spectrogram:
    """Build the spectrogram over ``[year_from, year_to]``.

    Bounds default to the observed span; with no observed years and no bounds
    the result has no rows.  Every year in the range gets a row, zero-count
    years included.  ``is_peak`` flags are computed at the default detection
    thresholds unless overridden.  ``basis`` selects whether rows count
    reference occurrences or distinct citing documents.
    """
    if denominator not in DENOMINATORS:
        raise ValueError(f"unknown denominator {denominator!r} (expected one of {DENOMINATORS})")
    if basis not in BASES:
        raise ValueError(f"unknown basis {basis!r} (expected one of {BASES})")
    if basis == "documents":
        counts = {year: yc.documents for year, yc in tally.years.items()}
    else:
        counts = tally.counts
    span = tally.span()
    if year_from is None:
        year_from = span[0] if span else None
    if year_to is None:
        year_to = span[1] if span else None
    if year_from is None or year_to is None:
        # nothing observed and no explicit bounds
        return Spectrogram(0, -1, denominator, (), counts, basis)
    if year_from > year_to:
        raise ValueError(f"year_from {year_from} is after year_to {year_to}")

    rows = []
    for year in range(year_from, year_to + 1):
        med, dev, pct = _deviation(year, counts, span, denominator)
        rows.append(
            SpectrogramRow(
                year=year,
                count=counts.get(year, 0),
                median5=med,
                dev_abs=dev,
                dev_pct=pct,
                is_peak=_qualifies(
                    year, counts, span, denominator, peak_min_count, peak_min_dev_pct
                ),
            )
        )
    return Spectrogram(year_from, year_to, denominator, tuple(rows), counts, basis)


def detect_peaks(
    spec: Spectrogram,
    min_count: int = DEFAULT_MIN_COUNT,
    min_dev_pct: float = DEFAULT_MIN_DEV_PCT,
) -> list[Peak]:
    """Detect peak years within the spectrogram's range.

    Returns peaks ordered by percent deviation descending, then year
    ascending.  ``min_count`` must be at least 1; a floor of zero would turn
    every positive blip in a sparse early century into a peak.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = spec.counts
    observed = [y for y in counts if counts[y] > 0] or None
    span = (min(observed), max(observed)) if observed else None
    peaks = []
    for row in spec.rows:
        if not _qualifies(
            row.year, counts, span, spec.denominator, min_count, min_dev_pct
        ):
            continue
        med, dev, pct = _deviation(row.year, counts, span, spec.denominator)
        peaks.append(Peak(year=row.year, count=row.count, dev_abs=dev, dev_pct=pct))
    peaks.sort(key=lambda p: (-p.dev_pct, p.year))
    return peaks


def attribution_shares(
    year: int,
    clusters: Iterable,
    tally: YearTally,
    top: int | None = None,
) -> list[tuple[str, int, float]]:
    """Attribute a year's occurrences to work clusters.

    ``clusters`` is any iterable of objects exposing ``cluster_id`` and
    ``occ_by_year``.  Shares are fractions of the year's total occurrence
    count from the tally, so unclustered occurrences leave the shares summing
    below 1.  A year absent from the tally yields an empty list.
    """
    yc = tally.years.get(year)
    if yc is None or yc.occurrences == 0:
        return []
    total = yc.occurrences
    shares = []
    for cluster in clusters:
        occ = cluster.occ_by_year.get(year, 0)
        if occ:
            shares.append((cluster.cluster_id, occ, occ / total))
    shares.sort(key=lambda item: (-item[1], item[0]))
    if top is not None:
        shares = shares[:top]
    return shares


def with_attributions(
    peaks: Sequence[Peak],
    clusters: Iterable,
    tally: YearTally,
    top: int = 3,
) -> list[Peak]:
    """Return peaks with their ``top_clusters`` attribution filled in."""
    clusters = list(clusters)
    return [
        replace(p, top_clusters=tuple(attribution_shares(p.year, clusters, tally, top)))
        for p in peaks
    ]


def citation_history(
    records: Iterable[CitingRecord], cluster
) -> dict[int, int]:
    """Count distinct citing records per citing publication year for a cluster.

    ``cluster`` exposes ``owners`` (record_ids of citing records).  The series
    is zero-filled across the corpus publication-year span, so plotted
    histories share an x axis.  Sums to the cluster's document weight
    restricted to the given records.
    """
    records = list(records)
    owners = set(cluster.owners)
    if not records:
        return {}
    lo = min(r.pub_year for r in records)
    hi = max(r.pub_year for r in records)
    series = {year: 0 for year in range(lo, hi + 1)}
    for record in records:
        if record.record_id in owners:
            series[record.pub_year] += 1
    return series
