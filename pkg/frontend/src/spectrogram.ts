/** Spectrogram panel: bar series with peak markers and a year-range control.
 *
 * All values are plotted exactly as the service reports them; the only
 * arithmetic here is pixel scaling.
 */

import { el, svg } from "./dom.js";
import { SERIES, SERIES_LABELS, seriesValue } from "./state.js";
import type { ViewState } from "./state.js";
import type { PeakRow, Series, SpectrumRow } from "./types.js";

export interface SpectrogramHandlers {
  onSelectYear(year: number): void;
  onSeries(series: Series): void;
  onRange(from: number | null, to: number | null): void;
}

const W = 720;
const H = 230;
const MARGIN = { left: 52, right: 12, top: 16, bottom: 28 };

export function renderSpectrogram(
  rows: readonly SpectrumRow[],
  peaks: readonly PeakRow[],
  state: ViewState,
  handlers: SpectrogramHandlers,
): HTMLElement {
  const section = el("section", { class: "panel spectrogram" });
  section.append(controls(state, handlers));

  if (!rows.length) {
    section.append(
      el("p", { class: "empty-state" }, "No references in this dataset yet."),
    );
    return section;
  }

  const plotW = W - MARGIN.left - MARGIN.right;
  const plotH = H - MARGIN.top - MARGIN.bottom;
  const values = rows.map((r) => seriesValue(r, state.series));
  let lo = Math.min(0, ...values);
  let hi = Math.max(0, ...values);
  if (lo === hi) hi = lo + 1;
  const step = plotW / rows.length;
  const x = (i: number) => MARGIN.left + i * step;
  const y = (v: number) => MARGIN.top + ((hi - v) / (hi - lo)) * plotH;

  const chart = svg("svg", {
    viewBox: `0 0 ${W} ${H}`,
    class: "spectrogram-chart",
    role: "img",
  });

  chart.append(
    svg("line", {
      x1: String(MARGIN.left),
      x2: String(W - MARGIN.right),
      y1: String(y(0)),
      y2: String(y(0)),
      class: "zero-line",
    }),
  );

  const peakYears = new Map(peaks.map((p) => [p.year, p]));
  rows.forEach((row, i) => {
    const v = seriesValue(row, state.series);
    const top = Math.min(y(v), y(0));
    const height = Math.abs(y(v) - y(0));
    const classes = ["bar"];
    if (row.year === state.selectedYear) classes.push("selected");
    chart.append(
      svg("rect", {
        x: String(x(i) + step * 0.1),
        y: String(top),
        width: String(Math.max(step * 0.8, 0.5)),
        height: String(Math.max(height, 0.5)),
        class: classes.join(" "),
      }),
    );
    // full-height invisible hit area so zero-count years stay clickable
    chart.append(
      svg("rect", {
        x: String(x(i)),
        y: String(MARGIN.top),
        width: String(step),
        height: String(plotH),
        class: "hit",
        "data-year": String(row.year),
        onclick: () => handlers.onSelectYear(row.year),
      }),
    );
    const peak = peakYears.get(row.year);
    if (peak) {
      const marker = svg("circle", {
        cx: String(x(i) + step / 2),
        cy: String(Math.max(top - 7, 5)),
        r: "4",
        class: "peak-marker",
        "data-peak": String(row.year),
        onclick: () => handlers.onSelectYear(row.year),
      });
      marker.append(
        svg("title", {}, `${peak.year}: ${peak.count} references, ${peak.dev_pct.toFixed(2)}% over median`),
      );
      chart.append(marker);
    }
  });

  chart.append(
    svg("text", { x: String(MARGIN.left), y: String(H - 8), class: "axis-label" },
      String(rows[0].year)),
    svg("text", {
      x: String(W - MARGIN.right),
      y: String(H - 8),
      class: "axis-label",
      "text-anchor": "end",
    }, String(rows[rows.length - 1].year)),
    svg("text", { x: "4", y: String(MARGIN.top + 8), class: "axis-label" },
      formatValue(hi)),
    svg("text", { x: "4", y: String(y(0) + 4), class: "axis-label" }, "0"),
  );
  if (lo < 0) {
    chart.append(
      svg("text", { x: "4", y: String(H - MARGIN.bottom), class: "axis-label" },
        formatValue(lo)),
    );
  }

  section.append(chart);
  return section;
}

function formatValue(v: number): string {
  return Number.isInteger(v) ? String(v) : v.toFixed(2);
}

function controls(state: ViewState, handlers: SpectrogramHandlers): HTMLElement {
  const toggles = el("div", { class: "series-toggle", role: "group" });
  for (const series of SERIES) {
    toggles.append(
      el(
        "button",
        {
          type: "button",
          class: series === state.series ? "toggle active" : "toggle",
          "data-series": series,
          onclick: () => handlers.onSeries(series),
        },
        SERIES_LABELS[series],
      ),
    );
  }

  const fromInput = el("input", {
    type: "number",
    class: "range-from",
    placeholder: "from",
  });
  if (state.range.from !== null) fromInput.value = String(state.range.from);
  const toInput = el("input", {
    type: "number",
    class: "range-to",
    placeholder: "to",
  });
  if (state.range.to !== null) toInput.value = String(state.range.to);

  const apply = el(
    "button",
    {
      type: "button",
      class: "range-apply",
      onclick: () => {
        const from = fromInput.value === "" ? null : Number(fromInput.value);
        const to = toInput.value === "" ? null : Number(toInput.value);
        handlers.onRange(from, to);
      },
    },
    "Apply range",
  );

  return el(
    "div",
    { class: "spectrogram-controls" },
    toggles,
    el("span", { class: "range-controls" }, fromInput, toInput, apply),
  );
}
