/** Cluster detail: canonical fields, member variants with the split workflow,
 * and the per-year citation history curve with an optional corpus-total
 * overlay.
 */

import { el, svg } from "./dom.js";
import { canSplit, canonicalLabel, splitAvailable } from "./state.js";
import type { ViewState } from "./state.js";
import type { ClusterDetail, HistoryPoint } from "./types.js";

export interface ClusterPanelHandlers {
  onToggleMember(key: string): void;
  onSplit(): void;
  onOverlay(show: boolean): void;
  onClose(): void;
}

const W = 720;
const H = 180;
const MARGIN = { left: 46, right: 12, top: 12, bottom: 24 };

export function renderClusterPanel(
  detail: ClusterDetail,
  history: readonly HistoryPoint[],
  corpusTotals: Readonly<Record<string, number>>,
  state: ViewState,
  handlers: ClusterPanelHandlers,
): HTMLElement {
  const section = el("section", { class: "panel cluster-detail" });
  const close = el(
    "button",
    { type: "button", class: "close-button", onclick: () => handlers.onClose() },
    "Close",
  );
  section.append(
    el("div", { class: "panel-head" },
      el("h2", {}, canonicalLabel(detail.canonical)),
      close,
    ),
  );

  const provenance = detail.provenance.length
    ? detail.provenance[detail.provenance.length - 1].join(" ")
    : "AUTO";
  section.append(
    el("dl", { class: "cluster-stats" },
      el("dt", {}, "occurrences"),
      el("dd", { "data-testid": "cluster-occ" }, String(detail.occ_weight)),
      el("dt", {}, "citing documents"),
      el("dd", { "data-testid": "cluster-doc" }, String(detail.doc_weight)),
      el("dt", {}, "variants"),
      el("dd", {}, String(detail.n_members)),
      el("dt", {}, "last change"),
      el("dd", { class: "provenance" }, provenance),
    ),
  );

  section.append(memberList(detail, state, handlers));
  section.append(historyChart(history, corpusTotals, state, handlers));
  return section;
}

function memberList(
  detail: ClusterDetail,
  state: ViewState,
  handlers: ClusterPanelHandlers,
): HTMLElement {
  const wrap = el("div", { class: "member-list" });
  wrap.append(el("h3", {}, "Variant spellings"));
  const list = el("ul", {});
  const splittable = splitAvailable(detail.n_members);
  for (const variant of detail.variants) {
    const item = el("li", { "data-member": variant.key });
    if (splittable) {
      const checkbox = el("input", {
        type: "checkbox",
        class: "member-pick",
        "data-member-pick": variant.key,
        onchange: () => handlers.onToggleMember(variant.key),
      });
      checkbox.checked = state.selectedMembers.includes(variant.key);
      item.append(checkbox);
    }
    item.append(
      el("span", { class: "member-key" }, variant.key),
      el("span", { class: "member-count" },
        ` ${variant.occurrences} in ${variant.documents} documents`),
    );
    list.append(item);
  }
  wrap.append(list);

  if (splittable) {
    const split = el(
      "button",
      { type: "button", class: "split-button", onclick: () => handlers.onSplit() },
      `Split out selected (${state.selectedMembers.length})`,
    );
    split.disabled = !canSplit(detail.n_members, state.selectedMembers);
    wrap.append(
      el("div", { class: "split-bar" },
        split,
        el("span", { class: "hint" },
          "Select some, but not all, variants to move into a new work."),
      ),
    );
  } else {
    wrap.append(
      el("p", { class: "split-unavailable hint" },
        "Single-variant work: nothing to split."),
    );
  }
  return wrap;
}

function historyChart(
  history: readonly HistoryPoint[],
  corpusTotals: Readonly<Record<string, number>>,
  state: ViewState,
  handlers: ClusterPanelHandlers,
): HTMLElement {
  const wrap = el("div", { class: "history" });
  const checkbox = el("input", {
    type: "checkbox",
    class: "overlay-toggle",
    onchange: () => handlers.onOverlay(checkbox.checked),
  });
  checkbox.checked = state.overlay;
  wrap.append(
    el("div", { class: "history-head" },
      el("h3", {}, "Citations per year"),
      el("label", { class: "overlay-label" }, checkbox, " show corpus total"),
    ),
  );

  if (!history.length) {
    wrap.append(el("p", { class: "empty-state" }, "No citing records."));
    return wrap;
  }

  const corpus: HistoryPoint[] = state.overlay
    ? Object.entries(corpusTotals)
        .map(([year, count]) => ({ year: Number(year), citing_records: count }))
        .sort((a, b) => a.year - b.year)
    : [];
  const years = [...new Set([...history, ...corpus].map((p) => p.year))].sort(
    (a, b) => a - b,
  );
  const loYear = years[0];
  const hiYear = years[years.length - 1];
  const maxCount = Math.max(1, ...history.map((p) => p.citing_records),
    ...corpus.map((p) => p.citing_records));
  const plotW = W - MARGIN.left - MARGIN.right;
  const plotH = H - MARGIN.top - MARGIN.bottom;
  const x = (year: number) =>
    hiYear === loYear
      ? MARGIN.left + plotW / 2
      : MARGIN.left + ((year - loYear) / (hiYear - loYear)) * plotW;
  const y = (count: number) => MARGIN.top + (1 - count / maxCount) * plotH;

  const chart = svg("svg", {
    viewBox: `0 0 ${W} ${H}`,
    class: "history-chart",
    role: "img",
  });
  if (corpus.length) {
    chart.append(path(corpus, x, y, "overlay-series"));
  }
  chart.append(path(history, x, y, "history-series"));
  for (const point of history) {
    const dot = svg("circle", {
      cx: String(x(point.year)),
      cy: String(y(point.citing_records)),
      r: "3",
      class: "history-point",
      "data-h-year": String(point.year),
      "data-h-count": String(point.citing_records),
    });
    dot.append(svg("title", {}, `${point.year}: ${point.citing_records}`));
    chart.append(dot);
  }
  chart.append(
    svg("text", { x: String(MARGIN.left), y: String(H - 6), class: "axis-label" },
      String(loYear)),
    svg("text", {
      x: String(W - MARGIN.right),
      y: String(H - 6),
      class: "axis-label",
      "text-anchor": "end",
    }, String(hiYear)),
    svg("text", { x: "4", y: String(MARGIN.top + 8), class: "axis-label" },
      String(maxCount)),
  );
  wrap.append(chart);
  return wrap;
}

function path(
  points: readonly HistoryPoint[],
  x: (year: number) => number,
  y: (count: number) => number,
  cls: string,
): SVGElement {
  const d = points
    .map((p, i) =>
      `${i ? "L" : "M"}${x(p.year).toFixed(1)} ${y(p.citing_records).toFixed(1)}`)
    .join(" ");
  return svg("path", { d, class: cls, fill: "none" });
}
