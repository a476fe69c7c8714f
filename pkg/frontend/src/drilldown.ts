/** Year drill-down: variant clusters for one referenced year plus the merge
 * workflow. On an unclustered dataset the panel is read-only and says so.
 */

import { el } from "./dom.js";
import { canMerge, canonicalLabel } from "./state.js";
import type { ViewState } from "./state.js";
import type { ClusterSummary, ReferenceRow } from "./types.js";

export interface DrillData {
  year: number;
  clustered: boolean;
  clusters: ClusterSummary[];
  references: ReferenceRow[];
}

export interface DrillHandlers {
  onToggleCluster(id: string): void;
  onMerge(): void;
  onOpenCluster(id: string): void;
  onReloadAfterConflict(): void;
}

export function renderDrilldown(
  data: DrillData,
  state: ViewState,
  handlers: DrillHandlers,
): HTMLElement {
  const section = el("section", { class: "panel drilldown" });
  section.append(el("h2", {}, `References first published in ${data.year}`));

  if (state.stalePrompt) {
    section.append(
      el(
        "div",
        { class: "stale-prompt", role: "alert" },
        el(
          "p",
          {},
          "The clustering changed in another session, so this merge was not applied. ",
          "Reload to pick up the latest state; your selection is kept.",
        ),
        el(
          "button",
          {
            type: "button",
            class: "reload-button",
            onclick: () => handlers.onReloadAfterConflict(),
          },
          "Reload",
        ),
      ),
    );
  }

  if (!data.clustered) {
    section.append(referenceTable(data.references));
    section.append(
      el("p", { class: "hint" },
        "Run clustering on this dataset to group variants and enable merging."),
    );
    return section;
  }

  if (!data.clusters.length) {
    section.append(el("p", { class: "empty-state" },
      "No clustered references for this year."));
    return section;
  }

  const table = el("table", { class: "cluster-table" });
  table.append(
    el("thead", {},
      el("tr", {},
        el("th", {}, ""),
        el("th", {}, "work"),
        el("th", { class: "num" }, "occurrences"),
        el("th", { class: "num" }, "documents"),
        el("th", { class: "num" }, "variants"),
      ),
    ),
  );
  const body = el("tbody", {});
  for (const cluster of data.clusters) {
    const checkbox = el("input", {
      type: "checkbox",
      class: "cluster-pick",
      "data-cluster": cluster.cluster_id,
      onchange: () => handlers.onToggleCluster(cluster.cluster_id),
    });
    checkbox.checked = state.selectedClusters.includes(cluster.cluster_id);
    body.append(
      el("tr", { "data-cluster-row": cluster.cluster_id },
        el("td", {}, checkbox),
        el("td", {},
          el(
            "button",
            {
              type: "button",
              class: "open-cluster",
              "data-open": cluster.cluster_id,
              onclick: () => handlers.onOpenCluster(cluster.cluster_id),
            },
            canonicalLabel(cluster.canonical),
          ),
        ),
        el("td", { class: "num" }, String(cluster.occ_weight)),
        el("td", { class: "num" }, String(cluster.doc_weight)),
        el("td", { class: "num" }, String(cluster.n_members)),
      ),
    );
  }
  table.append(body);
  section.append(table);

  const merge = el(
    "button",
    {
      type: "button",
      class: "merge-button",
      onclick: () => handlers.onMerge(),
    },
    `Merge selected (${state.selectedClusters.length})`,
  );
  merge.disabled = !canMerge(state.selectedClusters);
  section.append(
    el("div", { class: "merge-bar" },
      merge,
      el("span", { class: "hint" },
        "Pick two or more works that cite the same publication."),
    ),
  );
  return section;
}

function referenceTable(references: ReferenceRow[]): HTMLElement {
  const table = el("table", { class: "reference-table" });
  table.append(
    el("thead", {},
      el("tr", {},
        el("th", {}, "reference"),
        el("th", { class: "num" }, "occurrences"),
        el("th", { class: "num" }, "documents"),
        el("th", { class: "num" }, "% of year"),
      ),
    ),
  );
  const body = el("tbody", {});
  for (const row of references) {
    body.append(
      el("tr", {},
        el("td", {}, row.reference),
        el("td", { class: "num" }, String(row.occurrences)),
        el("td", { class: "num" }, String(row.documents)),
        el("td", { class: "num" }, row.pct_documents.toFixed(2)),
      ),
    );
  }
  table.append(body);
  return table;
}
