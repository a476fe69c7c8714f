/** View state and the small pure predicates the panels share.
 *
 * Everything here derives from API payloads plus the analyst's selections;
 * none of the analysis math (medians, deviations, weights) is recomputed on
 * the client.
 */

import type { CanonicalFields, ClusterSummary, Series, SpectrumRow } from "./types.js";

export const SERIES: readonly Series[] = ["count", "dev_abs", "dev_pct"];

export const SERIES_LABELS: Record<Series, string> = {
  count: "references",
  dev_abs: "deviation",
  dev_pct: "deviation %",
};

export interface ViewState {
  series: Series;
  range: { from: number | null; to: number | null };
  selectedYear: number | null;
  /** cluster ids picked in the drill-down, in pick order */
  selectedClusters: string[];
  /** member keys picked in the open cluster panel */
  selectedMembers: string[];
  openCluster: string | null;
  overlay: boolean;
  /** a mutation hit a 409; selections are kept until the analyst reloads */
  stalePrompt: boolean;
}

export function initialViewState(): ViewState {
  return {
    series: "count",
    range: { from: null, to: null },
    selectedYear: null,
    selectedClusters: [],
    selectedMembers: [],
    openCluster: null,
    overlay: false,
    stalePrompt: false,
  };
}

/** Merging needs at least two picked clusters. */
export function canMerge(selected: readonly string[]): boolean {
  return selected.length >= 2;
}

/** A singleton cluster cannot be split at all. */
export function splitAvailable(nMembers: number): boolean {
  return nMembers >= 2;
}

/** A split must move a non-empty proper subset of the members. */
export function canSplit(nMembers: number, picked: readonly string[]): boolean {
  return splitAvailable(nMembers) && picked.length >= 1 && picked.length < nMembers;
}

export function toggled(list: readonly string[], item: string): string[] {
  return list.includes(item) ? list.filter((x) => x !== item) : [...list, item];
}

/** Drop selections whose ids no longer exist after a reload. */
export function retained(list: readonly string[], existing: Iterable<string>): string[] {
  const keep = new Set(existing);
  return list.filter((x) => keep.has(x));
}

export function seriesValue(row: SpectrumRow, series: Series): number {
  switch (series) {
    case "count":
      return row.count;
    case "dev_abs":
      return row.dev_abs;
    case "dev_pct":
      return row.dev_pct;
  }
}

/** Display form of a cluster's canonical reference fields. */
export function canonicalLabel(canonical: CanonicalFields): string {
  const parts: string[] = [];
  if (canonical.author) parts.push(canonical.author);
  if (canonical.rpy !== null && canonical.rpy !== undefined) parts.push(String(canonical.rpy));
  if (canonical.volume) parts.push(`V${canonical.volume}`);
  if (canonical.page) parts.push(`P${canonical.page}`);
  if (canonical.source) parts.push(canonical.source);
  return parts.join(", ") || "(unnamed work)";
}

export function clusterById(
  clusters: readonly ClusterSummary[],
  id: string,
): ClusterSummary | undefined {
  return clusters.find((c) => c.cluster_id === id);
}
