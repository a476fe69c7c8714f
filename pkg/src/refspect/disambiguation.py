"""Variant reference strings, work clusters, and the analyst merge journal.

The same cited work surfaces under many strings (typos, abbreviation styles,
wrong volumes).  Occurrences sharing a parsed identity collapse into a
:class:`Variant`; variants are blocked by (author surname, reference year)
and compared with a weighted similarity:

    0.35 * author string similarity      (normalized Levenshtein)
    0.25 * volume agreement              (1 equal, 0.5 one absent, 0 conflict)
    0.20 * page agreement                (same scheme)
    0.20 * source string similarity      (after abbreviation canonicalization)

Single-linkage agglomeration at a threshold turns each block into work
clusters.  Analyst corrections are MERGE / SPLIT / EDIT_CANONICAL entries in
an append-only journal; current state is always reproducible by replaying
the journal over the auto-clustering snapshot.  Cluster ids are content
hashes of (creating revision, member keys): stable across replays, never
reused across revisions.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import lru_cache
from hashlib import sha1
from importlib import resources
from typing import Iterable, Mapping, Sequence

from .errors import ClusterError, JournalReplayError

DEFAULT_THRESHOLD = 0.75

MERGE = "MERGE"
SPLIT = "SPLIT"
EDIT_CANONICAL = "EDIT_CANONICAL"

CANONICAL_FIELDS = ("author", "rpy", "volume", "page", "source")

_W_AUTHOR = 0.35
_W_VOLUME = 0.25
_W_PAGE = 0.20
_W_SOURCE = 0.20


def now_iso() -> str:
    return (
        datetime.now(timezone.utc)
        .isoformat(timespec="seconds")
        .replace("+00:00", "Z")
    )


# ---------------------------------------------------------------------------
# variants

@dataclass(frozen=True)
class Variant:
    """All occurrences of one distinct reference string, aggregated."""

    key: str
    author: str | None
    rpy: int | None
    volume: str | None
    page: str | None
    source: str | None
    occurrences: int
    owners: frozenset[str]      # distinct citing record_ids
    exemplar: str               # one raw occurrence, for display

    @property
    def documents(self) -> int:
        return len(self.owners)


def build_variants(refs: Iterable) -> dict[str, Variant]:
    """Aggregate parsed references into variants keyed by their identity string."""
    occ: Counter = Counter()
    owners: dict[str, set[str]] = {}
    first: dict[str, object] = {}
    exemplar: dict[str, str] = {}
    for ref in refs:
        key = ref.key()
        occ[key] += 1
        owners.setdefault(key, set()).add(ref.owner)
        if key not in first:
            first[key] = ref
            exemplar[key] = ref.raw
        elif ref.raw < exemplar[key]:
            exemplar[key] = ref.raw
    variants = {}
    for key in occ:
        ref = first[key]
        variants[key] = Variant(
            key=key,
            author=ref.author,
            rpy=ref.rpy,
            volume=ref.volume,
            page=ref.page,
            source=ref.source,
            occurrences=occ[key],
            owners=frozenset(owners[key]),
            exemplar=exemplar[key],
        )
    return variants


def block(items: Iterable) -> dict[tuple[str, int | None], list]:
    """Group references or variants by (author surname, reference year).

    Items missing an author fall into a residual block per year; comparing
    across blocks is never attempted, which keeps clustering quadratic only
    within small groups.
    """
    blocks: dict[tuple[str, int | None], list] = {}
    for item in items:
        surname = item.author.split()[0] if item.author else ""
        blocks.setdefault((surname, item.rpy), []).append(item)
    return blocks


# ---------------------------------------------------------------------------
# similarity

def levenshtein(a: str, b: str) -> int:
    """Plain edit distance, two-row DP."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        for j, cb in enumerate(b, 1):
            current.append(
                min(
                    previous[j] + 1,            # deletion
                    current[j - 1] + 1,         # insertion
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


@lru_cache(maxsize=1)
def _abbrev_table() -> tuple[dict[str, str], frozenset[str]]:
    path = resources.files(__package__) / "data" / "source_abbrev.json"
    data = json.loads(path.read_text(encoding="utf-8"))
    return dict(data.get("replace", {})), frozenset(data.get("drop_trailing", ()))


@lru_cache(maxsize=4096)
def canonical_source(source: str) -> str:
    """Canonicalize a source title at the token level (ROY -> R, drop LONDON)."""
    replace, drop = _abbrev_table()
    tokens = source.split()
    while tokens and tokens[-1] in drop:
        tokens.pop()
    return " ".join(replace.get(t, t) for t in tokens)


def _string_sim(a: str | None, b: str | None) -> float:
    if a is None and b is None:
        return 1.0
    if a is None or b is None:
        return 0.5
    if a == b:
        return 1.0
    longest = max(len(a), len(b))
    return 1.0 - levenshtein(a, b) / longest if longest else 1.0


def _exact_sim(a: str | None, b: str | None) -> float:
    if a is None and b is None:
        return 1.0
    if a is None or b is None:
        return 0.5
    return 1.0 if a == b else 0.0


def similarity(a, b) -> float:
    """Weighted similarity of two references or variants, in [0, 1]."""
    src_a = canonical_source(a.source) if a.source is not None else None
    src_b = canonical_source(b.source) if b.source is not None else None
    return (
        _W_AUTHOR * _string_sim(a.author, b.author)
        + _W_VOLUME * _exact_sim(a.volume, b.volume)
        + _W_PAGE * _exact_sim(a.page, b.page)
        + _W_SOURCE * _string_sim(src_a, src_b)
    )


# ---------------------------------------------------------------------------
# clusters

@dataclass(frozen=True)
class WorkCluster:
    """A set of variants believed to denote one cited work."""

    cluster_id: str
    members: tuple[str, ...]            # variant keys, sorted
    canonical: dict                     # author/rpy/volume/page/source
    occ_weight: int
    doc_weight: int
    owners: frozenset[str]
    occ_by_year: Mapping[int, int]
    provenance: tuple[tuple[str, str], ...]   # (AUTO | ANALYST, iso timestamp)

    @property
    def n_members(self) -> int:
        return len(self.members)

    def to_dict(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "canonical": dict(self.canonical),
            "members": list(self.members),
            "occ_weight": self.occ_weight,
            "doc_weight": self.doc_weight,
            "n_members": self.n_members,
            "provenance": [list(p) for p in self.provenance],
        }


def _cluster_id(members: Sequence[str], rev: int) -> str:
    digest = sha1(("%d\x1e" % rev + "\x1f".join(sorted(members))).encode("utf-8"))
    return "c" + digest.hexdigest()[:12]


def _make_cluster(
    members: Iterable[str],
    variants: Mapping[str, Variant],
    rev: int,
    provenance: tuple[tuple[str, str], ...],
    canonical_override: Mapping | None = None,
) -> WorkCluster:
    keys = sorted(members)
    if not keys:
        raise ClusterError("cluster must have at least one member")
    missing = [k for k in keys if k not in variants]
    if missing:
        raise ClusterError(f"unknown variant key {missing[0]!r}")
    occ = sum(variants[k].occurrences for k in keys)
    owners: set[str] = set()
    by_year: Counter = Counter()
    for k in keys:
        owners |= variants[k].owners
        if variants[k].rpy is not None:
            by_year[variants[k].rpy] += variants[k].occurrences
    # canonical: the heaviest variant speaks for the cluster, ties to the
    # lexicographically first raw string
    dominant = min(
        keys, key=lambda k: (-variants[k].occurrences, variants[k].exemplar, k)
    )
    v = variants[dominant]
    canonical = {
        "author": v.author,
        "rpy": v.rpy,
        "volume": v.volume,
        "page": v.page,
        "source": v.source,
    }
    if canonical_override:
        canonical.update({k: canonical_override[k] for k in canonical_override})
    return WorkCluster(
        cluster_id=_cluster_id(keys, rev),
        members=tuple(keys),
        canonical=canonical,
        occ_weight=occ,
        doc_weight=len(owners),
        owners=frozenset(owners),
        occ_by_year=dict(by_year),
        provenance=provenance,
    )


def auto_cluster(
    blocks: Mapping[tuple[str, int | None], list],
    threshold: float = DEFAULT_THRESHOLD,
    created: str = "",
) -> list[WorkCluster]:
    """Single-linkage clustering of each block at the given threshold.

    Every pair within a block is compared; components of the >=threshold
    graph become clusters.  Items must be variants (weights are aggregated).
    """
    if not 0.0 < threshold <= 1.0:
        raise ClusterError(f"threshold must be in (0, 1], got {threshold}")
    variants: dict[str, Variant] = {}
    clusters: list[WorkCluster] = []
    provenance = ((("AUTO", created)),)
    for key in sorted(blocks, key=lambda k: (k[0], k[1] if k[1] is not None else -1)):
        group = sorted(blocks[key], key=lambda v: v.key)
        for v in group:
            variants[v.key] = v
        parent = list(range(len(group)))

        def find(i: int) -> int:
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                if similarity(group[i], group[j]) >= threshold:
                    ri, rj = find(i), find(j)
                    if ri != rj:
                        parent[rj] = ri
        components: dict[int, list[str]] = {}
        for i, v in enumerate(group):
            components.setdefault(find(i), []).append(v.key)
        for members in components.values():
            clusters.append(_make_cluster(members, variants, 0, provenance))
    clusters.sort(key=lambda c: c.cluster_id)
    return clusters


# ---------------------------------------------------------------------------
# journal

@dataclass(frozen=True)
class JournalEntry:
    """One analyst operation; the ndjson line is its exact serialization."""

    rev: int
    op: str
    targets: tuple[str, ...]
    actor: str
    ts: str
    members: tuple[str, ...] = ()       # SPLIT only: keys moved to the new cluster
    fields: Mapping | None = None       # EDIT_CANONICAL only

    def to_json(self) -> str:
        data: dict = {
            "rev": self.rev,
            "op": self.op,
            "targets": list(self.targets),
            "actor": self.actor,
            "ts": self.ts,
        }
        if self.op == SPLIT:
            data["members"] = list(self.members)
        if self.op == EDIT_CANONICAL:
            data["fields"] = dict(self.fields or {})
        return json.dumps(data, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "JournalEntry":
        data = json.loads(line)
        return cls(
            rev=int(data["rev"]),
            op=str(data["op"]),
            targets=tuple(data["targets"]),
            actor=str(data.get("actor", "")),
            ts=str(data.get("ts", "")),
            members=tuple(data.get("members", ())),
            fields=data.get("fields"),
        )


@dataclass
class ClusterState:
    """Clusters plus journal; every mutation appends an entry and bumps rev."""

    variants: dict[str, Variant]
    clusters: dict[str, WorkCluster]
    snapshot: dict[str, tuple[str, ...]]    # rev-0 membership, never mutated
    entries: list[JournalEntry] = field(default_factory=list)
    revision: int = 0
    threshold: float = DEFAULT_THRESHOLD
    created: str = ""

    @classmethod
    def auto(
        cls,
        refs: Iterable,
        threshold: float = DEFAULT_THRESHOLD,
        created: str | None = None,
    ) -> "ClusterState":
        """Cluster parsed references from scratch; journal starts empty."""
        if created is None:
            created = now_iso()
        variants = build_variants(refs)
        clusters = auto_cluster(block(variants.values()), threshold, created)
        return cls(
            variants=variants,
            clusters={c.cluster_id: c for c in clusters},
            snapshot={c.cluster_id: c.members for c in clusters},
            threshold=threshold,
            created=created,
        )

    @classmethod
    def replay(
        cls,
        snapshot: Mapping[str, Sequence[str]],
        variants: dict[str, Variant],
        entries: Iterable[JournalEntry],
        threshold: float = DEFAULT_THRESHOLD,
        created: str = "",
    ) -> "ClusterState":
        """Rebuild current state from the auto snapshot plus journal entries."""
        provenance = (("AUTO", created),)
        clusters = {}
        seen: set[str] = set()
        for cid, members in snapshot.items():
            cluster = _make_cluster(members, variants, 0, provenance)
            if cluster.cluster_id != cid:
                raise ClusterError(
                    f"snapshot cluster {cid} does not hash to its members"
                )
            overlap = seen & set(members)
            if overlap:
                raise ClusterError(
                    f"variant {sorted(overlap)[0]!r} appears in two snapshot clusters"
                )
            seen |= set(members)
            clusters[cid] = cluster
        state = cls(
            variants=variants,
            clusters=clusters,
            snapshot={cid: tuple(m) for cid, m in snapshot.items()},
            threshold=threshold,
            created=created,
        )
        for lineno, entry in enumerate(entries, 1):
            try:
                state._apply(entry)
            except ClusterError as exc:
                raise JournalReplayError(lineno, str(exc)) from exc
        return state

    # -- operations

    def merge(self, targets: Sequence[str], actor: str, ts: str | None = None) -> WorkCluster:
        entry = JournalEntry(
            rev=self.revision + 1,
            op=MERGE,
            targets=tuple(dict.fromkeys(targets)),
            actor=actor,
            ts=ts or now_iso(),
        )
        return self._apply(entry)

    def split(
        self,
        cluster_id: str,
        members: Sequence[str],
        actor: str,
        ts: str | None = None,
    ) -> tuple[WorkCluster, WorkCluster]:
        entry = JournalEntry(
            rev=self.revision + 1,
            op=SPLIT,
            targets=(cluster_id,),
            actor=actor,
            ts=ts or now_iso(),
            members=tuple(dict.fromkeys(members)),
        )
        self._apply(entry)
        new = [c for c in self.clusters.values() if c.cluster_id in self._last_created]
        moved = next(c for c in new if set(c.members) == set(entry.members))
        rest = next(c for c in new if set(c.members) != set(entry.members))
        return moved, rest

    def edit_canonical(
        self,
        cluster_id: str,
        fields: Mapping,
        actor: str,
        ts: str | None = None,
    ) -> WorkCluster:
        entry = JournalEntry(
            rev=self.revision + 1,
            op=EDIT_CANONICAL,
            targets=(cluster_id,),
            actor=actor,
            ts=ts or now_iso(),
            fields=dict(fields),
        )
        return self._apply(entry)

    # -- entry application (shared by live calls and replay)

    def _apply(self, entry: JournalEntry):
        if entry.rev != self.revision + 1:
            raise ClusterError(
                f"entry rev {entry.rev} does not follow revision {self.revision}"
            )
        if entry.op == MERGE:
            result = self._apply_merge(entry)
        elif entry.op == SPLIT:
            result = self._apply_split(entry)
        elif entry.op == EDIT_CANONICAL:
            result = self._apply_edit(entry)
        else:
            raise ClusterError(f"unknown journal op {entry.op!r}")
        self.entries.append(entry)
        self.revision = entry.rev
        return result

    def _require(self, cluster_id: str) -> WorkCluster:
        cluster = self.clusters.get(cluster_id)
        if cluster is None:
            raise ClusterError(f"no such cluster {cluster_id!r}")
        return cluster

    def _apply_merge(self, entry: JournalEntry) -> WorkCluster:
        ids = list(dict.fromkeys(entry.targets))
        if len(ids) < 2:
            raise ClusterError("merge needs at least two distinct clusters")
        parts = [self._require(cid) for cid in ids]
        members: list[str] = []
        provenance: dict[tuple[str, str], None] = {}
        for part in parts:
            members.extend(part.members)
            for p in part.provenance:
                provenance[p] = None
        provenance[("ANALYST", entry.ts)] = None
        merged = _make_cluster(
            members, self.variants, entry.rev, tuple(provenance)
        )
        for cid in ids:
            del self.clusters[cid]
        self.clusters[merged.cluster_id] = merged
        self._last_created = {merged.cluster_id}
        return merged

    def _apply_split(self, entry: JournalEntry) -> WorkCluster:
        if len(entry.targets) != 1:
            raise ClusterError("split targets exactly one cluster")
        cluster = self._require(entry.targets[0])
        moved = set(entry.members)
        if not moved:
            raise ClusterError("split needs a non-empty member subset")
        stray = moved - set(cluster.members)
        if stray:
            raise ClusterError(
                f"{sorted(stray)[0]!r} is not a member of {cluster.cluster_id}"
            )
        if moved == set(cluster.members):
            raise ClusterError("split subset must be proper (something must remain)")
        rest = [k for k in cluster.members if k not in moved]
        provenance = tuple(
            dict.fromkeys(list(cluster.provenance) + [("ANALYST", entry.ts)])
        )
        a = _make_cluster(sorted(moved), self.variants, entry.rev, provenance)
        b = _make_cluster(rest, self.variants, entry.rev, provenance)
        del self.clusters[cluster.cluster_id]
        self.clusters[a.cluster_id] = a
        self.clusters[b.cluster_id] = b
        self._last_created = {a.cluster_id, b.cluster_id}
        return a

    def _apply_edit(self, entry: JournalEntry) -> WorkCluster:
        if len(entry.targets) != 1:
            raise ClusterError("edit targets exactly one cluster")
        cluster = self._require(entry.targets[0])
        fields = dict(entry.fields or {})
        bad = [k for k in fields if k not in CANONICAL_FIELDS]
        if bad:
            raise ClusterError(f"unknown canonical field {bad[0]!r}")
        if not fields:
            raise ClusterError("edit needs at least one field")
        canonical = dict(cluster.canonical)
        canonical.update(fields)
        provenance = tuple(
            dict.fromkeys(list(cluster.provenance) + [("ANALYST", entry.ts)])
        )
        edited = WorkCluster(
            cluster_id=cluster.cluster_id,
            members=cluster.members,
            canonical=canonical,
            occ_weight=cluster.occ_weight,
            doc_weight=cluster.doc_weight,
            owners=cluster.owners,
            occ_by_year=cluster.occ_by_year,
            provenance=provenance,
        )
        self.clusters[edited.cluster_id] = edited
        self._last_created = {edited.cluster_id}
        return edited

    # -- views

    def ordered(self) -> list[WorkCluster]:
        return sorted(
            self.clusters.values(), key=lambda c: (-c.occ_weight, c.cluster_id)
        )

    def clusters_for_year(self, year: int) -> list[WorkCluster]:
        return [c for c in self.ordered() if c.occ_by_year.get(year, 0) > 0]

    def export_rows(self) -> list[list]:
        """Rows for the cluster export CSV, heaviest first."""
        rows = []
        for c in self.ordered():
            canon = c.canonical
            rows.append(
                [
                    c.cluster_id,
                    canon.get("author") or "",
                    canon.get("rpy") if canon.get("rpy") is not None else "",
                    canon.get("volume") or "",
                    canon.get("page") or "",
                    canon.get("source") or "",
                    c.occ_weight,
                    c.doc_weight,
                    c.n_members,
                ]
            )
        return rows


EXPORT_HEADER = [
    "cluster_id",
    "canonical_author",
    "rpy",
    "volume",
    "page",
    "source",
    "occ_weight",
    "doc_weight",
    "n_members",
]
