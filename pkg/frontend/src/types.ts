/** Payload shapes of the workbench service, as delivered inside envelopes. */

export interface IngestReport {
  kept: number;
  rejected: number;
  reject_reasons: Record<string, number>;
  ref_flags: Record<string, number>;
}

export interface MetaPayload {
  name: string;
  created: string;
  source_format: string;
  records: number;
  references: number;
  reference_year_span: [number, number] | null;
  records_per_year: Record<string, number>;
  revision: number;
  clustered: boolean;
  clusters: number;
  threshold: number | null;
  ingest_report: IngestReport;
}

export interface SpectrumRow {
  year: number;
  count: number;
  median5: number;
  dev_abs: number;
  dev_pct: number;
  is_peak: boolean;
}

export interface SpectrumPayload {
  year_from: number;
  year_to: number;
  denominator: string;
  rows: SpectrumRow[];
}

export interface TopCluster {
  cluster_id: string;
  occurrences: number;
  share: number;
}

export interface PeakRow {
  year: number;
  count: number;
  dev_abs: number;
  dev_pct: number;
  top_clusters: TopCluster[];
}

export interface PeaksPayload {
  peaks: PeakRow[];
}

export interface ReferenceRow {
  reference: string;
  occurrences: number;
  documents: number;
  pct_documents: number;
  rpy: number;
}

export interface YearReferencesPayload {
  year: number;
  references: ReferenceRow[];
}

export interface CanonicalFields {
  author: string | null;
  rpy: number | null;
  volume: string | null;
  page: string | null;
  source: string | null;
}

export interface ClusterSummary {
  cluster_id: string;
  canonical: CanonicalFields;
  members: string[];
  occ_weight: number;
  doc_weight: number;
  n_members: number;
  provenance: [string, string][];
}

export interface VariantRow {
  key: string;
  occurrences: number;
  documents: number;
}

export interface ClusterDetail extends ClusterSummary {
  variants: VariantRow[];
}

export interface ClustersPayload {
  clustered: boolean;
  clusters: ClusterSummary[];
}

export interface HistoryPoint {
  year: number;
  citing_records: number;
}

export interface HistoryPayload {
  cluster_id: string;
  history: HistoryPoint[];
}

export type Series = "count" | "dev_abs" | "dev_pct";
