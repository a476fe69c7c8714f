/** Single-page workbench. Everything on screen derives from service payloads
 * plus the analyst's current selections; a hard reload therefore reproduces
 * the same panels from the same dataset.
 */

import { ApiClient, ApiError, StaleRevisionError, ServiceUnreachableError } from "./api.js";
import { renderClusterPanel } from "./clusterpanel.js";
import { renderDrilldown } from "./drilldown.js";
import type { DrillData } from "./drilldown.js";
import { clear, el } from "./dom.js";
import { canonicalLabel, initialViewState, retained } from "./state.js";
import type { ViewState } from "./state.js";
import { renderSpectrogram } from "./spectrogram.js";
import type { ClusterDetail, HistoryPoint, MetaPayload, PeakRow, Series, SpectrumPayload } from "./types.js";

export class App {
  state: ViewState = initialViewState();

  private meta: MetaPayload | null = null;
  private spectrum: SpectrumPayload | null = null;
  private peaks: PeakRow[] = [];
  private drill: DrillData | null = null;
  private detail: ClusterDetail | null = null;
  private history: HistoryPoint[] = [];
  private failure: string | null = null;
  private pending: Promise<void> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
  ) {}

  start(): Promise<void> {
    return this.enqueue(() => this.reloadAll());
  }

  /** Resolves once every queued fetch/render has settled. */
  whenIdle(): Promise<void> {
    return this.pending;
  }

  private enqueue(task: () => Promise<void>): Promise<void> {
    const run = () => task();
    this.pending = this.pending.then(run, run);
    return this.pending;
  }

  private async reloadAll(): Promise<void> {
    try {
      this.meta = await this.client.meta();
      this.spectrum = await this.client.spectrum({
        from: this.state.range.from ?? undefined,
        to: this.state.range.to ?? undefined,
      });
      this.peaks = (await this.client.peaks()).peaks;
      if (this.state.selectedYear !== null) await this.loadDrill();
      else this.drill = null;
      if (this.state.openCluster !== null) await this.loadCluster();
      else this.clearClusterPanel();
      this.failure = null;
    } catch (err) {
      this.noteFailure(err);
    }
    this.render();
  }

  private async loadDrill(): Promise<void> {
    const year = this.state.selectedYear;
    if (year === null || this.meta === null) return;
    if (this.meta.clustered) {
      const payload = await this.client.clusters({ year });
      this.drill = { year, clustered: true, clusters: payload.clusters, references: [] };
      this.state.selectedClusters = retained(
        this.state.selectedClusters,
        payload.clusters.map((c) => c.cluster_id),
      );
    } else {
      const payload = await this.client.yearReferences(year);
      this.drill = { year, clustered: false, clusters: [], references: payload.references };
      this.state.selectedClusters = [];
    }
  }

  private async loadCluster(): Promise<void> {
    const id = this.state.openCluster;
    if (id === null) return;
    try {
      this.detail = await this.client.clusterDetail(id);
      this.history = (await this.client.clusterHistory(id)).history;
      this.state.selectedMembers = retained(
        this.state.selectedMembers,
        this.detail.variants.map((v) => v.key),
      );
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        // the cluster no longer exists under this id (merged elsewhere)
        this.state.openCluster = null;
        this.clearClusterPanel();
        return;
      }
      throw err;
    }
  }

  private clearClusterPanel(): void {
    this.detail = null;
    this.history = [];
    this.state.selectedMembers = [];
  }

  private noteFailure(err: unknown): void {
    if (err instanceof ServiceUnreachableError) {
      this.failure = `Service unreachable: ${err.reason}`;
    } else if (err instanceof ApiError) {
      this.failure = `Service error (${err.status}): ${err.message}`;
    } else {
      this.failure = String(err instanceof Error ? err.message : err);
    }
  }

  // -- analyst actions -------------------------------------------------

  selectYear(year: number): Promise<void> {
    return this.enqueue(async () => {
      this.state.selectedYear = year;
      this.state.selectedClusters = [];
      this.state.stalePrompt = false;
      try {
        await this.loadDrill();
        this.failure = null;
      } catch (err) {
        this.noteFailure(err);
      }
      this.render();
    });
  }

  setSeries(series: Series): Promise<void> {
    return this.enqueue(async () => {
      this.state.series = series;
      this.render();
    });
  }

  setRange(from: number | null, to: number | null): Promise<void> {
    return this.enqueue(async () => {
      this.state.range = { from, to };
      await this.reloadAll();
    });
  }

  toggleCluster(id: string): Promise<void> {
    return this.enqueue(async () => {
      const picked = this.state.selectedClusters;
      this.state.selectedClusters = picked.includes(id)
        ? picked.filter((x) => x !== id)
        : [...picked, id];
      this.render();
    });
  }

  openCluster(id: string): Promise<void> {
    return this.enqueue(async () => {
      this.state.openCluster = id;
      this.state.selectedMembers = [];
      try {
        await this.loadCluster();
        this.failure = null;
      } catch (err) {
        this.noteFailure(err);
      }
      this.render();
    });
  }

  closeCluster(): Promise<void> {
    return this.enqueue(async () => {
      this.state.openCluster = null;
      this.clearClusterPanel();
      this.render();
    });
  }

  toggleMember(key: string): Promise<void> {
    return this.enqueue(async () => {
      const picked = this.state.selectedMembers;
      this.state.selectedMembers = picked.includes(key)
        ? picked.filter((x) => x !== key)
        : [...picked, key];
      this.render();
    });
  }

  setOverlay(show: boolean): Promise<void> {
    return this.enqueue(async () => {
      this.state.overlay = show;
      this.render();
    });
  }

  merge(): Promise<void> {
    return this.enqueue(async () => {
      try {
        const payload = await this.client.merge([...this.state.selectedClusters]);
        this.state.selectedClusters = [];
        this.state.openCluster = payload.cluster.cluster_id;
        this.state.selectedMembers = [];
        await this.reloadAll();
        return;
      } catch (err) {
        if (err instanceof StaleRevisionError) {
          // keep the analyst's picks; they decide when to reload
          this.state.stalePrompt = true;
        } else {
          this.noteFailure(err);
        }
      }
      this.render();
    });
  }

  split(): Promise<void> {
    return this.enqueue(async () => {
      const id = this.state.openCluster;
      if (id === null) return;
      try {
        const payload = await this.client.split(id, [...this.state.selectedMembers]);
        const remainder = payload.clusters[payload.clusters.length - 1];
        this.state.openCluster = remainder ? remainder.cluster_id : null;
        this.state.selectedMembers = [];
        await this.reloadAll();
        return;
      } catch (err) {
        if (err instanceof StaleRevisionError) {
          this.state.stalePrompt = true;
        } else {
          this.noteFailure(err);
        }
      }
      this.render();
    });
  }

  reloadAfterConflict(): Promise<void> {
    return this.enqueue(async () => {
      this.state.stalePrompt = false;
      await this.reloadAll();
    });
  }

  retry(): Promise<void> {
    return this.enqueue(() => this.reloadAll());
  }

  // -- rendering -------------------------------------------------------

  private render(): void {
    clear(this.root);
    const page = el("div", { class: "workbench" });
    page.append(this.header());
    if (this.failure !== null) {
      page.append(
        el("div", { class: "banner", role: "alert" },
          el("span", {}, this.failure),
          el(
            "button",
            { type: "button", class: "retry-button", onclick: () => void this.retry() },
            "Retry",
          ),
        ),
      );
    }
    if (this.spectrum !== null) {
      page.append(
        renderSpectrogram(this.spectrum.rows, this.peaks, this.state, {
          onSelectYear: (year) => void this.selectYear(year),
          onSeries: (series) => void this.setSeries(series),
          onRange: (from, to) => void this.setRange(from, to),
        }),
      );
      page.append(this.peaksPanel());
    }
    if (this.drill !== null) {
      page.append(
        renderDrilldown(this.drill, this.state, {
          onToggleCluster: (id) => void this.toggleCluster(id),
          onMerge: () => void this.merge(),
          onOpenCluster: (id) => void this.openCluster(id),
          onReloadAfterConflict: () => void this.reloadAfterConflict(),
        }),
      );
    }
    if (this.detail !== null && this.meta !== null) {
      page.append(
        renderClusterPanel(this.detail, this.history, this.meta.records_per_year, this.state, {
          onToggleMember: (key) => void this.toggleMember(key),
          onSplit: () => void this.split(),
          onOverlay: (show) => void this.setOverlay(show),
          onClose: () => void this.closeCluster(),
        }),
      );
    }
    this.root.append(page);
  }

  private header(): HTMLElement {
    const head = el("header", { class: "masthead" }, el("h1", {}, "refspect"));
    if (this.meta !== null) {
      head.append(
        el("span", { class: "meta-line" },
          `${this.meta.records} records, ${this.meta.references} cited references`,
          this.meta.clustered ? ", clustered" : ", not clustered",
        ),
        el("span", { class: "revision", "data-testid": "revision" },
          `revision ${this.meta.revision}`),
      );
    }
    return head;
  }

  private peaksPanel(): HTMLElement {
    const section = el("section", { class: "panel peaks" });
    section.append(el("h2", {}, "Peak years"));
    if (!this.peaks.length) {
      section.append(el("p", { class: "empty-state" }, "No peaks at the current settings."));
      return section;
    }
    const list = el("ul", { class: "peak-list" });
    for (const peak of this.peaks) {
      const chip = el(
        "button",
        {
          type: "button",
          class: "peak-chip",
          "data-peak-year": String(peak.year),
          onclick: () => void this.selectYear(peak.year),
        },
        `${peak.year} · ${peak.count} refs · +${peak.dev_pct.toFixed(1)}%`,
      );
      const item = el("li", {}, chip);
      if (peak.top_clusters.length) {
        const top = peak.top_clusters[0];
        const label = this.labelFor(top.cluster_id);
        item.append(
          el("span", { class: "peak-top" }, ` top: ${label} (${top.occurrences})`),
        );
      }
      list.append(item);
    }
    section.append(list);
    return section;
  }

  private labelFor(clusterId: string): string {
    const fromDrill = this.drill?.clusters.find((c) => c.cluster_id === clusterId);
    if (fromDrill) return canonicalLabel(fromDrill.canonical);
    if (this.detail?.cluster_id === clusterId) return canonicalLabel(this.detail.canonical);
    return clusterId;
  }
}
