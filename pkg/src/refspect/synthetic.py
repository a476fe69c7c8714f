"""Deterministic synthetic corpora.

The generator writes a tagged export with two layers: a recent citation
continuum (every record cites works from the 15 years before it) and one
old work injected under several variant strings, some with a misspelled
surname.  Against the flat continuum the old work's year stands out as the
lone early peak, which makes the corpus a good end-to-end fixture: the peak
is known, the variant partition is known, and the cluster weight after
merging is exactly the number of injected occurrences.

Same seed, same bytes.
"""

from __future__ import annotations

import random
from pathlib import Path

DEFAULT_SEED = 20260822

SURNAMES = [
    "NOVOSELOV", "GEIM", "STANKOVICH", "LERF", "HUMMERS", "OFFEMAN", "DREYER",
    "PARK", "RUOFF", "SCHNIEPP", "MCALLISTER", "STOLLER", "ZHU", "GOMEZ",
    "DIKIN", "JUNG", "EDA", "CHHOWALLA", "LI", "WANG", "YANG", "CHEN",
    "KUDIN", "BOEHM", "SCHOLZ", "SZABO", "DEKANY", "CAI", "KOVTYUKHOVA",
    "TITELMAN", "BOURLINOS", "PANIAGUA", "MATSUO", "HONTORIALUCAS",
]

JOURNALS = [
    "CARBON",
    "J PHYS CHEM B",
    "CHEM MATER",
    "NANO LETT",
    "J AM CHEM SOC",
    "ADV MATER",
    "PHYS REV B",
    "LANGMUIR",
]

# (occurrences, reference string); first nine share the surname block, the
# last two land in neighboring blocks via the misspelled surname
HISTORICAL_VARIANTS = [
    (17, "STAUDENMAIER L, 1898, V31, P1481, BER DTSCH CHEM GES"),
    (6, "STAUDENMAIER L, 1898, V31, P1481, BER DEUT CHEM GES"),
    (4, "STAUDENMAIER L, 1898, V31, P1481, CHEM BER"),
    (2, "STAUDENMAIER L, 1898, V31, P1487, BER DTSCH CHEM GES"),
    (2, "STAUDENMAIER L, 1898, V13, P1481, BER DTSCH CHEM GES"),
    (2, "STAUDENMAIER I, 1898, V31, P1481, BER DTSCH CHEM GES"),
    (1, "STAUDENMAIER L, 1898, P1481, BER DTSCH CHEM GES"),
    (1, "STAUDENMAIER L, 1898, V31, BER DTSCH CHEM GES"),
    (1, "STAUDENMAIER L, 1898, V31, P1481, BERICHTE DEUTSCHEN CHEM GESELLSCHAFT"),
    (1, "STAUDENMAIER L, 1898, V31, P1482, BER DTSCH CHEM GES"),
    (2, "STAUDENMAIR L, 1898, V31, P1481, BER DTSCH CHEM GES"),
    (1, "STAUDENMAYER L, 1898, V31, P1481, BER DTSCH CHEM GES"),
]

HISTORICAL_YEAR = 1898
HISTORICAL_OCCURRENCES = sum(n for n, _ in HISTORICAL_VARIANTS)

_TOPICS = [
    "exfoliation kinetics", "sheet conductivity", "oxide reduction",
    "dispersion stability", "layer stacking", "surface functional groups",
    "thermal expansion", "electron mobility", "membrane transport",
    "composite strength",
]


def _continuum_ref(rng: random.Random, pub_year: int) -> str:
    author = f"{rng.choice(SURNAMES)} {rng.choice('ABCDEFGHJKLMRSTW')}"
    rpy = pub_year - rng.randint(1, 15)
    volume = rng.randint(1, 120)
    page = rng.randint(1, 2000)
    source = rng.choice(JOURNALS)
    return f"{author}, {rpy}, V{volume}, P{page}, {source}"


def generate_export(seed: int = DEFAULT_SEED, n_records: int = 500) -> str:
    """Return a tagged export of ``n_records`` records (publication years 2004-2013)."""
    rng = random.Random(seed)
    pub_years = [2004 + i % 10 for i in range(n_records)]
    refs_per_record: list[list[str]] = []
    for i in range(n_records):
        refs_per_record.append(
            [_continuum_ref(rng, pub_years[i]) for _ in range(rng.randint(5, 15))]
        )

    # a few undated strings so the pipeline sees flagged references too
    for i in rng.sample(range(n_records), 5):
        refs_per_record[i].append("ANON, IN PRESS")

    occurrences = [s for n, s in HISTORICAL_VARIANTS for _ in range(n)]
    holders = rng.sample(range(n_records), len(occurrences))
    for ref, i in zip(occurrences, holders):
        refs_per_record[i].insert(rng.randrange(len(refs_per_record[i]) + 1), ref)

    lines: list[str] = []
    for i in range(n_records):
        lines.append("PT J")
        lines.append(f"TI Study of {rng.choice(_TOPICS)}, part {i + 1}")
        lines.append(f"SO {rng.choice(JOURNALS)}")
        lines.append(f"PY {pub_years[i]}")
        for j, ref in enumerate(refs_per_record[i]):
            lines.append(("CR " if j == 0 else "   ") + ref)
        lines.append("ER")
        lines.append("")
    lines.append("EF")
    return "\n".join(lines) + "\n"


def demo_journal_map() -> str:
    """A journal map CSV covering the generator's journal pool."""
    coords = {
        "CARBON": (0.82, 0.30),
        "J PHYS CHEM B": (0.40, 0.55),
        "CHEM MATER": (0.55, 0.45),
        "NANO LETT": (0.70, 0.62),
        "J AM CHEM SOC": (0.35, 0.38),
        "ADV MATER": (0.66, 0.52),
        "PHYS REV B": (0.18, 0.74),
        "LANGMUIR": (0.47, 0.28),
    }
    lines = ["journal,x,y"]
    for name, (x, y) in coords.items():
        lines.append(f"{name},{x},{y}")
    return "\n".join(lines) + "\n"


def main(argv: list[str] | None = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(
        prog="python -m refspect.synthetic",
        description="write a deterministic synthetic export (and optional journal map)",
    )
    parser.add_argument("out", help="path for the tagged export")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--records", type=int, default=500)
    parser.add_argument("--map", help="also write a journal map CSV here")
    args = parser.parse_args(argv)
    Path(args.out).write_text(generate_export(args.seed, args.records), encoding="utf-8")
    print(args.out)
    if args.map:
        Path(args.map).write_text(demo_journal_map(), encoding="utf-8")
        print(args.map)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
