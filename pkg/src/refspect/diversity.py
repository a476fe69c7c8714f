"""Rao-Stirling diversity of the citing side of a corpus.

    delta = sum over ordered pairs (i, j) of p_i * p_j * d_ij

where p_i is the relative frequency of journal i among the citing records
that matched the map, and d_ij a pairwise distance between journals.  The
i = j terms contribute zero, so the ordered-pair sum is used as written
rather than the halved i < j convention.  Two distance modes:

``map-distance``
    Euclidean distance between journal coordinates on a 2-d map, divided by
    the maximum pairwise distance over the normalization domain: the whole
    map by default, or only the matched journals with
    ``normalize_over="set"``.

``one-minus-cosine``
    1 - cosine similarity between journal citation-profile vectors, the
    map's extra numeric columns.  Scale-free, so no max normalization.

The map file is CSV with header ``journal,x,y`` plus optional trailing
profile columns.  ``journal_frequencies`` matches records against the map
and reports coverage; ``rao_stirling`` scores a ready frequency vector.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import DegenerateMapError, DiversityError
from .ingest import CitingRecord, round_half_up

MODES = ("map-distance", "one-minus-cosine")
NORMALIZE_OVER = ("full-map", "set")


def normalize_journal(name: str) -> str:
    return " ".join(name.split()).upper()


@dataclass(frozen=True)
class JournalMap:
    """Journal positions (and optional profiles) loaded from a map CSV."""

    journals: tuple[str, ...]           # normalized names, file order
    coords: np.ndarray                  # (n, 2)
    profiles: np.ndarray | None = None  # (n, k) when the CSV has extra columns

    def __post_init__(self):
        object.__setattr__(self, "_index", {j: i for i, j in enumerate(self.journals)})

    def __contains__(self, journal: str) -> bool:
        return normalize_journal(journal) in self._index

    def __len__(self) -> int:
        return len(self.journals)

    @classmethod
    def from_csv(cls, path: str | Path) -> "JournalMap":
        with open(path, newline="", encoding="utf-8-sig") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DiversityError(f"{path}: empty map file") from None
            if len(header) < 3 or [h.strip().lower() for h in header[:3]] != ["journal", "x", "y"]:
                raise DiversityError(
                    f"{path}: map header must start with journal,x,y (got {header!r})"
                )
            n_profile = len(header) - 3
            journals: list[str] = []
            coords: list[list[float]] = []
            profiles: list[list[float]] = []
            seen: set[str] = set()
            for row in reader:
                if not row:
                    continue
                if len(row) != len(header):
                    raise DiversityError(
                        f"{path}: line {reader.line_num}: expected {len(header)} fields"
                    )
                name = normalize_journal(row[0])
                if not name:
                    raise DiversityError(f"{path}: line {reader.line_num}: empty journal name")
                if name in seen:
                    raise DiversityError(f"{path}: duplicate journal {name!r}")
                seen.add(name)
                try:
                    xy = [float(row[1]), float(row[2])]
                    prof = [float(v) for v in row[3:]]
                except ValueError as exc:
                    raise DiversityError(
                        f"{path}: line {reader.line_num}: non-numeric value"
                    ) from exc
                if not all(np.isfinite(xy)) or not all(np.isfinite(prof)):
                    raise DiversityError(
                        f"{path}: line {reader.line_num}: non-finite value"
                    )
                journals.append(name)
                coords.append(xy)
                profiles.append(prof)
            if not journals:
                raise DiversityError(f"{path}: map has no journals")
        return cls(
            journals=tuple(journals),
            coords=np.asarray(coords, dtype=float),
            profiles=np.asarray(profiles, dtype=float) if n_profile else None,
        )


def journal_frequencies(
    records: Iterable[CitingRecord], jmap: JournalMap
) -> tuple[dict[str, float], dict]:
    """Relative journal frequencies over the records the map covers.

    Records whose journal is missing from the map (or empty) are excluded
    and reported, not scored.  Returns ``(freqs, report)`` where freqs sum
    to 1 over the included records and the report carries
    ``matched_journals`` and ``inclusion_pct``.
    """
    counts: Counter = Counter()
    total = 0
    included = 0
    for record in records:
        total += 1
        name = normalize_journal(record.journal)
        if name and name in jmap:
            counts[name] += 1
            included += 1
    if included == 0:
        raise DiversityError("no record's journal appears in the map")
    freqs = {name: n / included for name, n in sorted(counts.items())}
    report = {
        "matched_journals": len(counts),
        "inclusion_pct": round_half_up(100.0 * included / total, 1),
    }
    return freqs, report


def _pairwise_euclidean(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt((diff * diff).sum(axis=-1))


def rao_stirling(
    freqs: Mapping[str, float],
    jmap: JournalMap,
    mode: str = "map-distance",
    normalize_over: str = "full-map",
) -> float:
    """Rao-Stirling diversity of a relative-frequency vector over the map.

    Every journal in ``freqs`` must exist in the map and the frequencies must
    sum to 1 (within 1e-9).  The pair sum is exactly rounded, so the result
    does not depend on map row order or on what the journals are called.
    Raises :class:`DegenerateMapError` when all pairwise distances over the
    normalization domain are zero with more than one journal in play.
    """
    if mode not in MODES:
        raise DiversityError(f"unknown mode {mode!r} (expected one of {MODES})")
    if normalize_over not in NORMALIZE_OVER:
        raise DiversityError(
            f"unknown normalize_over {normalize_over!r} "
            f"(expected one of {NORMALIZE_OVER})"
        )

    weights: dict[str, float] = {}
    for name, p in freqs.items():
        if p < 0:
            raise DiversityError(f"negative frequency for {name!r}")
        key = normalize_journal(name)
        if key not in jmap:
            raise DiversityError(f"journal {name!r} is missing from the map")
        if p > 0:
            weights[key] = weights.get(key, 0.0) + p
    total = sum(weights.values())
    if abs(total - 1.0) > 1e-9:
        raise DiversityError(f"frequencies sum to {total!r}, expected 1")

    matched = [
        (i, weights[name])
        for i, name in enumerate(jmap.journals)
        if name in weights
    ]
    if len(matched) <= 1:
        return 0.0
    idx = [i for i, _ in matched]
    p = np.asarray([w for _, w in matched], dtype=float)

    if mode == "map-distance":
        dist = _pairwise_euclidean(jmap.coords[idx])
        if normalize_over == "full-map":
            scale = float(_pairwise_euclidean(jmap.coords).max())
        else:
            scale = float(dist.max())
        if scale == 0.0:
            raise DegenerateMapError(
                "all pairwise distances over the normalization domain are zero"
            )
        dist = dist / scale
    else:
        if jmap.profiles is None:
            raise DiversityError(
                "one-minus-cosine mode requires profile columns in the map"
            )
        vectors = jmap.profiles[idx]
        if np.any(vectors < 0):
            raise DiversityError("profile vectors must be non-negative")
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms == 0.0):
            bad = jmap.journals[idx[int(np.argmin(norms))]]
            raise DiversityError(f"zero-norm profile vector for {bad!r}")
        unit = vectors / norms[:, None]
        dist = 1.0 - unit @ unit.T
        np.fill_diagonal(dist, 0.0)

    # fsum is exactly rounded, so the result cannot drift with the order the
    # matched journals happen to be listed in
    d = dist.tolist()
    w = p.tolist()
    n = len(w)
    return math.fsum(
        w[a] * d[a][b] * w[b] for a in range(n) for b in range(n) if a != b
    )
