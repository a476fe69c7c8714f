"""Cited-reference spectroscopy workbench.

Parse bibliographic exports, tally cited references by publication year,
find the deviation peaks that mark a field's historical roots, merge variant
reference strings into work clusters under an auditable journal, and score
citation diversity against a journal map.
"""

from .errors import (
    ClusterError,
    DatasetCorruptError,
    DatasetError,
    DegenerateMapError,
    DiversityError,
    EmptyReferenceError,
    IngestError,
    JournalReplayError,
    RefspectError,
    StaleRevisionError,
    StructuralError,
    UnsupportedVersionError,
)
from .ingest import (
    CitedReference,
    CitingRecord,
    IngestReport,
    YearTally,
    parse_cited_ref,
    parse_export,
    parse_refs,
    year_tally,
)
from .spectroscopy import (
    Peak,
    Spectrogram,
    attribution_shares,
    build_spectrogram,
    citation_history,
    detect_peaks,
)
from .disambiguation import (
    ClusterState,
    JournalEntry,
    Variant,
    WorkCluster,
    auto_cluster,
    block,
    build_variants,
    similarity,
)
from .diversity import JournalMap, journal_frequencies, rao_stirling
from .store import Dataset, load_dataset

__version__ = "0.1.0"

__all__ = [
    "CitedReference",
    "CitingRecord",
    "ClusterError",
    "ClusterState",
    "Dataset",
    "DatasetCorruptError",
    "DatasetError",
    "DegenerateMapError",
    "DiversityError",
    "EmptyReferenceError",
    "IngestError",
    "IngestReport",
    "JournalEntry",
    "JournalMap",
    "JournalReplayError",
    "Peak",
    "RefspectError",
    "Spectrogram",
    "StaleRevisionError",
    "StructuralError",
    "UnsupportedVersionError",
    "Variant",
    "WorkCluster",
    "YearTally",
    "attribution_shares",
    "auto_cluster",
    "block",
    "build_spectrogram",
    "build_variants",
    "citation_history",
    "detect_peaks",
    "journal_frequencies",
    "load_dataset",
    "parse_cited_ref",
    "parse_export",
    "parse_refs",
    "rao_stirling",
    "similarity",
    "year_tally",
]
