"""Dataset persistence: round trips, integrity checks, locking, crash safety."""

from __future__ import annotations

import hashlib
import json

import pytest

from conftest import CREATED, NOW_YEAR
from refspect.errors import (
    ClusterError,
    DatasetCorruptError,
    DatasetError,
    UnsupportedVersionError,
)
from refspect.ingest import parse_export
from refspect.store import Dataset, load_dataset

DATA_FILES = ("records.csv", "refs.csv", "clusters.csv", "journal.ndjson")


def edit_meta(root, fn) -> None:
    meta_path = root / "meta.json"
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    fn(meta)
    meta_path.write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def rehash(root) -> None:
    """Recompute stored checksums after deliberately editing a data file."""

    def fix(meta):
        for name in DATA_FILES:
            digest = hashlib.sha256((root / name).read_bytes()).hexdigest()
            meta["checksums"][name] = digest

    edit_meta(root, fix)


def merge_year(dataset, year: int) -> str:
    state = dataset.require_clusters()
    targets = [c.cluster_id for c in state.clusters_for_year(year)]
    merged = state.merge(targets, actor="analyst", ts=CREATED)
    return merged.cluster_id


@pytest.fixture
def empty_dataset(tmp_path):
    src = tmp_path / "empty.csv"
    src.write_text("record_id,pub_year,title,journal,cited_ref\n", encoding="utf-8")
    records, report = parse_export(src, "ref-csv", now_year=NOW_YEAR)
    return Dataset.create(
        records,
        report,
        name="empty",
        source_format="ref-csv",
        created=CREATED,
        ingest_year=NOW_YEAR,
    )


class TestRoundTrip:
    def test_observational_equality(self, table3_dataset, tmp_path):
        root = tmp_path / "ds"
        table3_dataset.save(root)
        loaded = load_dataset(root)
        assert loaded.meta_view() == table3_dataset.meta_view()
        assert loaded.spectrum().rows == table3_dataset.spectrum().rows
        assert loaded.refs_for_years([1859]) == table3_dataset.refs_for_years([1859])
        assert [p.year for p in loaded.peaks()] == [
            p.year for p in table3_dataset.peaks()
        ]
        assert loaded.ingest_year == NOW_YEAR

    def test_cluster_state_and_journal_survive(self, table3_dataset, tmp_path):
        table3_dataset.cluster(created=CREATED)
        cid = merge_year(table3_dataset, 1860)
        root = tmp_path / "ds"
        table3_dataset.save(root)

        loaded = load_dataset(root)
        state = loaded.require_clusters()
        assert loaded.revision == 1
        assert len(state.entries) == 1
        assert state.entries[0].op == "MERGE"
        assert set(state.clusters) == set(table3_dataset.cluster_state.clusters)
        merged = state.clusters[cid]
        assert merged.occ_weight == 102
        assert merged.canonical == table3_dataset.cluster_state.clusters[cid].canonical

    def test_load_save_is_byte_stable(self, table3_dataset, tmp_path):
        table3_dataset.cluster(created=CREATED)
        merge_year(table3_dataset, 1860)
        first = tmp_path / "a"
        second = tmp_path / "b"
        table3_dataset.save(first)
        load_dataset(first).save(second)
        for name in DATA_FILES + ("meta.json",):
            assert (first / name).read_bytes() == (second / name).read_bytes(), name

    def test_save_into_same_directory_twice(self, table3_dataset, tmp_path):
        root = tmp_path / "ds"
        table3_dataset.save(root)
        before = (root / "meta.json").read_bytes()
        table3_dataset.save(root)
        assert (root / "meta.json").read_bytes() == before

    def test_empty_dataset_round_trip(self, empty_dataset, tmp_path):
        root = tmp_path / "ds"
        empty_dataset.save(root)
        loaded = load_dataset(root)
        assert loaded.records == []
        assert loaded.refs == []
        assert loaded.meta_view()["reference_year_span"] is None
        assert loaded.spectrum().rows == ()


class TestValidation:
    def test_missing_directory(self, tmp_path):
        with pytest.raises(DatasetError):
            load_dataset(tmp_path / "nope")

    def test_major_version_refused(self, table3_dataset, tmp_path):
        root = tmp_path / "ds"
        table3_dataset.save(root)
        edit_meta(root, lambda m: m.update(format_version="2.0"))
        with pytest.raises(UnsupportedVersionError) as err:
            load_dataset(root)
        assert err.value.found == "2.0"
        assert err.value.expected == "1.0"

    def test_minor_version_accepted(self, table3_dataset, tmp_path):
        root = tmp_path / "ds"
        table3_dataset.save(root)
        edit_meta(root, lambda m: m.update(format_version="1.7"))
        assert len(load_dataset(root).records) == 254

    def test_checksum_mismatch(self, table3_dataset, tmp_path):
        root = tmp_path / "ds"
        table3_dataset.save(root)
        path = root / "refs.csv"
        path.write_bytes(path.read_bytes() + b"tampered\n")
        with pytest.raises(DatasetCorruptError) as err:
            load_dataset(root)
        assert "checksum" in str(err.value)

    def test_truncated_file_fails_cleanly(self, table3_dataset, tmp_path):
        root = tmp_path / "ds"
        table3_dataset.save(root)
        path = root / "refs.csv"
        data = path.read_bytes()
        path.write_bytes(data[: len(data) // 2])
        with pytest.raises(DatasetCorruptError):
            load_dataset(root)

    def test_missing_data_file(self, table3_dataset, tmp_path):
        root = tmp_path / "ds"
        table3_dataset.save(root)
        (root / "clusters.csv").unlink()
        with pytest.raises(DatasetCorruptError) as err:
            load_dataset(root)
        assert "clusters.csv" in str(err.value)

    def test_unreadable_meta(self, table3_dataset, tmp_path):
        root = tmp_path / "ds"
        table3_dataset.save(root)
        (root / "meta.json").write_text("{not json", encoding="utf-8")
        with pytest.raises(DatasetCorruptError):
            load_dataset(root)

    def test_record_count_mismatch(self, table3_dataset, tmp_path):
        root = tmp_path / "ds"
        table3_dataset.save(root)
        edit_meta(root, lambda m: m["counts"].update(records=9))
        with pytest.raises(DatasetCorruptError) as err:
            load_dataset(root)
        assert "9" in str(err.value)

    def test_reference_for_unknown_record(self, table3_dataset, tmp_path):
        root = tmp_path / "ds"
        table3_dataset.save(root)
        path = root / "refs.csv"
        with open(path, "a", encoding="utf-8", newline="") as fh:
            fh.write("GHOST,0,SMITH J. 1985. J X,SMITH J,1985,,,J X,,\n")
        rehash(root)

        def fix(meta):
            meta["counts"]["refs"] += 1

        edit_meta(root, fix)
        with pytest.raises(DatasetCorruptError) as err:
            load_dataset(root)
        assert "GHOST" in str(err.value)

    def test_tampered_journal_revision(self, table3_dataset, tmp_path):
        table3_dataset.cluster(created=CREATED)
        merge_year(table3_dataset, 1860)
        root = tmp_path / "ds"
        table3_dataset.save(root)
        journal = root / "journal.ndjson"
        line = journal.read_text(encoding="utf-8")
        journal.write_text(line.replace('"rev": 1', '"rev": 5'), encoding="utf-8")
        rehash(root)
        with pytest.raises(DatasetCorruptError):
            load_dataset(root)

    def test_garbled_journal_line_is_located(self, table3_dataset, tmp_path):
        table3_dataset.cluster(created=CREATED)
        merge_year(table3_dataset, 1860)
        root = tmp_path / "ds"
        table3_dataset.save(root)
        (root / "journal.ndjson").write_text("{broken\n", encoding="utf-8")
        rehash(root)
        with pytest.raises(DatasetCorruptError) as err:
            load_dataset(root)
        assert "line 1" in str(err.value)


class TestCrashSafety:
    def test_stray_temp_files_ignored_on_load(self, table3_dataset, tmp_path):
        root = tmp_path / "ds"
        table3_dataset.save(root)
        (root / "refs.csv.tmp").write_bytes(b"half written garbage")
        (root / "meta.json.tmp").write_bytes(b"{")
        assert len(load_dataset(root).records) == 254

    def test_crash_before_rename_leaves_previous_intact(self, table3_dataset, tmp_path):
        root = tmp_path / "ds"
        table3_dataset.save(root)
        baseline = {name: (root / name).read_bytes() for name in DATA_FILES}

        # mimic a writer that died after making its temp files durable but
        # before any rename: the visible dataset must still be the old one
        table3_dataset.cluster(created=CREATED)
        for name, data in table3_dataset._file_bytes().items():
            (root / (name + ".tmp")).write_bytes(data)

        loaded = load_dataset(root)
        assert loaded.cluster_state is None
        for name in DATA_FILES:
            assert (root / name).read_bytes() == baseline[name]

    def test_no_lock_left_after_save(self, table3_dataset, tmp_path):
        root = tmp_path / "ds"
        table3_dataset.save(root)
        assert not (root / ".lock").exists()


class TestWriterLock:
    def test_conflicting_writer_fails_fast(self, table3_dataset, tmp_path):
        root = tmp_path / "ds"
        root.mkdir()
        (root / ".lock").write_text("12345", encoding="utf-8")
        with pytest.raises(DatasetError) as err:
            table3_dataset.save(root)
        assert "12345" in str(err.value)
        assert "locked" in str(err.value)
        # nothing was written under the contested lock
        assert sorted(p.name for p in root.iterdir()) == [".lock"]

    def test_save_succeeds_after_lock_removed(self, table3_dataset, tmp_path):
        root = tmp_path / "ds"
        root.mkdir()
        (root / ".lock").write_text("12345", encoding="utf-8")
        with pytest.raises(DatasetError):
            table3_dataset.save(root)
        (root / ".lock").unlink()
        table3_dataset.save(root)
        assert len(load_dataset(root).records) == 254


class TestClusterLifecycle:
    def test_recluster_with_journal_requires_force(self, table3_dataset):
        table3_dataset.cluster(created=CREATED)
        merge_year(table3_dataset, 1860)
        with pytest.raises(ClusterError):
            table3_dataset.cluster()
        fresh = table3_dataset.cluster(force=True, created=CREATED)
        assert fresh.revision == 0
        assert fresh.entries == []

    def test_recluster_without_journal_is_fine(self, table3_dataset):
        table3_dataset.cluster(created=CREATED)
        table3_dataset.cluster(threshold=0.6, created=CREATED)
        assert table3_dataset.cluster_state.threshold == 0.6

    def test_history_requires_cluster_state(self, table3_dataset):
        with pytest.raises(ClusterError):
            table3_dataset.history("c000000000000")

    def test_history_unknown_cluster(self, table3_dataset):
        table3_dataset.cluster(created=CREATED)
        with pytest.raises(ClusterError):
            table3_dataset.history("c000000000000")

    def test_peaks_carry_attributions_once_clustered(self, table3_dataset):
        bare = table3_dataset.peaks(min_count=10)
        assert [p.year for p in bare] == [1859]
        assert bare[0].top_clusters == ()

        table3_dataset.cluster(created=CREATED)
        attributed = table3_dataset.peaks(min_count=10)
        assert attributed[0].year == 1859
        cid, occ, share = attributed[0].top_clusters[0]
        assert occ == 150
        assert share == pytest.approx(150 / 156)


class TestDerivedViews:
    def test_refs_for_single_year(self, table3_dataset):
        rows = table3_dataset.refs_for_years([1859])
        assert len(rows) == 7
        assert rows[0]["occurrences"] == 145
        assert rows[0]["documents"] == 145
        # 156 distinct records cite some 1859 variant
        assert rows[0]["pct_documents"] == 92.95
        assert [r["occurrences"] for r in rows] == sorted(
            (r["occurrences"] for r in rows), reverse=True
        )

    def test_refs_for_both_years_uses_union_denominator(self, table3_dataset):
        rows = table3_dataset.refs_for_years([1859, 1860])
        assert len(rows) == 15
        assert rows[0]["occurrences"] == 145
        assert rows[0]["pct_documents"] == 57.09

    def test_refs_for_absent_year(self, table3_dataset):
        assert table3_dataset.refs_for_years([1777]) == []

    def test_meta_view_shape(self, table3_dataset):
        view = table3_dataset.meta_view()
        assert view["name"] == "brodie"
        assert view["records"] == 254
        assert view["references"] == 258
        assert view["reference_year_span"] == [1859, 1860]
        assert view["records_per_year"]["2004"] == 26
        assert view["records_per_year"]["2013"] == 25
        assert sum(view["records_per_year"].values()) == 254
        assert view["revision"] == 0
        assert view["clustered"] is False
        assert view["threshold"] is None

    def test_meta_view_after_clustering(self, table3_dataset):
        table3_dataset.cluster(created=CREATED)
        view = table3_dataset.meta_view()
        assert view["clustered"] is True
        assert view["clusters"] == 7
        assert view["threshold"] == 0.75

    def test_diversity_through_dataset(self, table3_dataset, tmp_path):
        path = tmp_path / "map.csv"
        path.write_text(
            "journal,x,y\nCARBON,0,0\nNATURE,3,4\n", encoding="utf-8"
        )
        from refspect.diversity import JournalMap

        jmap = JournalMap.from_csv(path)
        out = table3_dataset.diversity(jmap)
        # every fixture record is published in CARBON: single support
        assert out["delta"] == 0.0
        assert out["matched_journals"] == 1
        assert out["inclusion_pct"] == 100.0
        assert out["mode"] == "map-distance"
