/** Typed client for the workbench JSON API.
 *
 * Every response is an envelope `{revision, payload}` or `{revision, error}`;
 * the client keeps the last revision it saw and stamps it into every mutation
 * as `expected_revision`, so a concurrent change always surfaces as a 409
 * instead of silently clobbering another session's work.
 */

import type {
  ClusterDetail,
  ClustersPayload,
  ClusterSummary,
  HistoryPayload,
  MetaPayload,
  PeaksPayload,
  SpectrumPayload,
  YearReferencesPayload,
} from "./types.js";

export interface JsonResponse {
  ok: boolean;
  status: number;
  statusText: string;
  json(): Promise<unknown>;
}

export interface FetchInit {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}

export type FetchLike = (input: string, init?: FetchInit) => Promise<JsonResponse>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly revision: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class StaleRevisionError extends ApiError {
  constructor(message: string, revision: number) {
    super(409, message, revision);
    this.name = "StaleRevisionError";
  }
}

/** The service could not be reached or did not speak JSON at all. */
export class ServiceUnreachableError extends Error {
  constructor(readonly reason: unknown) {
    super("service unreachable");
    this.name = "ServiceUnreachableError";
  }
}

interface EnvelopeShape {
  revision?: unknown;
  payload?: unknown;
  error?: unknown;
}

function defaultFetch(): FetchLike {
  return (input, init) => fetch(input, init as RequestInit);
}

export interface SpectrumQuery {
  from?: number | null;
  to?: number | null;
  denominator?: string;
}

export interface PeaksQuery {
  min_count?: number;
  min_dev_pct?: number;
  top?: number;
}

export class ApiClient {
  /** Last revision reported by the service; 0 until the first response. */
  revision = 0;

  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = defaultFetch(),
  ) {}

  meta(): Promise<MetaPayload> {
    return this.get("/api/meta");
  }

  spectrum(query: SpectrumQuery = {}): Promise<SpectrumPayload> {
    return this.get("/api/spectrum", {
      from: query.from,
      to: query.to,
      denominator: query.denominator,
    });
  }

  peaks(query: PeaksQuery = {}): Promise<PeaksPayload> {
    return this.get("/api/peaks", { ...query });
  }

  yearReferences(year: number): Promise<YearReferencesPayload> {
    return this.get(`/api/years/${year}/references`);
  }

  clusters(query: { year?: number; min_occ?: number } = {}): Promise<ClustersPayload> {
    return this.get("/api/clusters", { ...query });
  }

  clusterDetail(id: string): Promise<ClusterDetail> {
    return this.get(`/api/clusters/${encodeURIComponent(id)}`);
  }

  clusterHistory(id: string): Promise<HistoryPayload> {
    return this.get(`/api/clusters/${encodeURIComponent(id)}/history`);
  }

  merge(targets: string[], actor = "analyst"): Promise<{ cluster: ClusterSummary }> {
    return this.post("/api/clusters/merge", {
      targets,
      actor,
      expected_revision: this.revision,
    });
  }

  split(
    cluster: string,
    members: string[],
    actor = "analyst",
  ): Promise<{ clusters: [ClusterSummary, ClusterSummary] }> {
    return this.post("/api/clusters/split", {
      cluster,
      members,
      actor,
      expected_revision: this.revision,
    });
  }

  private get<T>(
    path: string,
    params?: Record<string, number | string | null | undefined>,
  ): Promise<T> {
    let query = "";
    if (params) {
      const pairs = Object.entries(params)
        .filter(([, v]) => v !== undefined && v !== null)
        .map(([k, v]) => `${encodeURIComponent(k)}=${encodeURIComponent(String(v))}`);
      if (pairs.length) query = "?" + pairs.join("&");
    }
    return this.request<T>(path + query);
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  private async request<T>(path: string, init?: FetchInit): Promise<T> {
    let response: JsonResponse;
    let body: EnvelopeShape;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (reason) {
      throw new ServiceUnreachableError(reason);
    }
    try {
      body = (await response.json()) as EnvelopeShape;
    } catch (reason) {
      throw new ServiceUnreachableError(reason);
    }
    if (typeof body.revision === "number") {
      this.revision = body.revision;
    }
    if (!response.ok || body.error !== undefined) {
      const message = String(body.error ?? response.statusText);
      if (response.status === 409) {
        throw new StaleRevisionError(message, this.revision);
      }
      throw new ApiError(response.status, message, this.revision);
    }
    return body.payload as T;
  }
}
