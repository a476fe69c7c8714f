"""Figure rendering for the report path.

Everything here draws to files through the Agg backend; nothing opens a
window.  The spectrogram figure mirrors the four views an analyst reads side
by side: raw counts over the whole observed span, counts over the requested
range, absolute deviation from the 5-year median, and percent deviation with
the detected peaks flagged.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .spectroscopy import Peak, Spectrogram


def spectrogram_figure(
    spec: Spectrogram, peaks: list[Peak] = (), title: str = ""
) -> plt.Figure:
    fig, axes = plt.subplots(2, 2, figsize=(12, 8), constrained_layout=True)
    (ax_full, ax_range), (ax_dev, ax_pct) = axes

    counts = dict(sorted(spec.counts.items()))
    if counts:
        ax_full.plot(list(counts), list(counts.values()), lw=0.9, color="#30506d")
    ax_full.set_title("cited references per year, full span")
    ax_full.set_ylabel("occurrences")

    years = [r.year for r in spec.rows]
    ax_range.plot(years, [r.count for r in spec.rows], lw=0.9, color="#30506d")
    ax_range.set_title(f"counts, {spec.year_from}–{spec.year_to}" if years else "counts")

    ax_dev.plot(years, [r.dev_abs for r in spec.rows], lw=0.9, color="#7a3030")
    ax_dev.axhline(0.0, color="0.6", lw=0.6)
    ax_dev.set_title("deviation from 5-year median")
    ax_dev.set_xlabel("reference publication year")
    ax_dev.set_ylabel("occurrences − median")

    ax_pct.plot(years, [r.dev_pct for r in spec.rows], lw=0.9, color="#7a3030")
    ax_pct.axhline(0.0, color="0.6", lw=0.6)
    ax_pct.set_title(f"percent deviation ({spec.denominator})")
    ax_pct.set_xlabel("reference publication year")
    ax_pct.set_ylabel("%")
    for peak in peaks:
        row = spec.row(peak.year)
        if row is None:
            continue
        ax_pct.plot([peak.year], [row.dev_pct], "o", ms=5, color="#b2432f")
        ax_pct.annotate(
            str(peak.year),
            (peak.year, row.dev_pct),
            textcoords="offset points",
            xytext=(0, 6),
            ha="center",
            fontsize=8,
        )

    if title:
        fig.suptitle(title)
    return fig


def history_figure(series: dict[int, int], label: str = "") -> plt.Figure:
    fig, ax = plt.subplots(figsize=(8, 4), constrained_layout=True)
    years = sorted(series)
    ax.bar(years, [series[y] for y in years], color="#30506d", width=0.8)
    ax.set_xlabel("citing publication year")
    ax.set_ylabel("citing records")
    if label:
        ax.set_title(label)
    return fig


def save_figure(fig: plt.Figure, path) -> None:
    fig.savefig(path, dpi=150)
    plt.close(fig)
