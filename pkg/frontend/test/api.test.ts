import { describe, expect, it } from "vitest";

import {
  ApiClient,
  ApiError,
  ServiceUnreachableError,
  StaleRevisionError,
} from "../src/api.js";
import type { FetchInit, FetchLike, JsonResponse } from "../src/api.js";
import { FakeService } from "./fake.js";

function respond(status: number, body: unknown): JsonResponse {
  return {
    ok: status >= 200 && status < 300,
    status,
    statusText: "x",
    json: async () => body,
  };
}

/** Records every request and replies from a fixed script. */
function scripted(...bodies: [number, unknown][]) {
  const calls: { input: string; init?: FetchInit }[] = [];
  let i = 0;
  const fetchFn: FetchLike = async (input, init) => {
    calls.push({ input, init });
    const [status, body] = bodies[Math.min(i++, bodies.length - 1)];
    return respond(status, body);
  };
  return { calls, fetchFn };
}

describe("envelope handling", () => {
  it("unwraps the payload and tracks the revision", async () => {
    const { fetchFn } = scripted([200, { revision: 7, payload: { records: 3 } }]);
    const client = new ApiClient("", fetchFn);
    expect(client.revision).toBe(0);
    const payload = await client.meta();
    expect(payload).toEqual({ records: 3 });
    expect(client.revision).toBe(7);
  });

  it("turns an error envelope into ApiError", async () => {
    const { fetchFn } = scripted([400, { revision: 2, error: "bad denominator" }]);
    const client = new ApiClient("", fetchFn);
    const err = await client.spectrum().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(400);
    expect(err.message).toBe("bad denominator");
    // even a failed response reports where the dataset is
    expect(client.revision).toBe(2);
  });

  it("maps 409 to StaleRevisionError", async () => {
    const { fetchFn } = scripted([
      409,
      { revision: 5, error: "expected revision 0 but dataset is at 5" },
    ]);
    const client = new ApiClient("", fetchFn);
    const err = await client.merge(["a", "b"]).catch((e) => e);
    expect(err).toBeInstanceOf(StaleRevisionError);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(client.revision).toBe(5);
  });

  it("treats an error field as an error even on a 200", async () => {
    const { fetchFn } = scripted([200, { revision: 1, error: "odd" }]);
    const client = new ApiClient("", fetchFn);
    await expect(client.meta()).rejects.toBeInstanceOf(ApiError);
  });

  it("wraps a network failure in ServiceUnreachableError", async () => {
    const boom = new TypeError("fetch failed");
    const client = new ApiClient("", async () => {
      throw boom;
    });
    const err = await client.meta().catch((e) => e);
    expect(err).toBeInstanceOf(ServiceUnreachableError);
    expect(err.reason).toBe(boom);
  });

  it("wraps a non-JSON body in ServiceUnreachableError", async () => {
    const client = new ApiClient("", async () => ({
      ok: true,
      status: 200,
      statusText: "OK",
      json: async () => {
        throw new SyntaxError("not json");
      },
    }));
    await expect(client.meta()).rejects.toBeInstanceOf(ServiceUnreachableError);
  });

  it("leaves the revision alone when the body has none", async () => {
    const { fetchFn } = scripted(
      [200, { revision: 4, payload: {} }],
      [200, { payload: {} }],
    );
    const client = new ApiClient("", fetchFn);
    await client.meta();
    await client.meta();
    expect(client.revision).toBe(4);
  });
});

describe("request building", () => {
  it("skips null and undefined query parameters", async () => {
    const { calls, fetchFn } = scripted([200, { revision: 0, payload: {} }]);
    const client = new ApiClient("", fetchFn);
    await client.spectrum();
    await client.spectrum({ from: 1850, to: null, denominator: "median" });
    expect(calls[0].input).toBe("/api/spectrum");
    expect(calls[1].input).toBe("/api/spectrum?from=1850&denominator=median");
  });

  it("prefixes the configured base", async () => {
    const { calls, fetchFn } = scripted([200, { revision: 0, payload: {} }]);
    const client = new ApiClient("http://localhost:8400", fetchFn);
    await client.peaks({ min_count: 5 });
    expect(calls[0].input).toBe("http://localhost:8400/api/peaks?min_count=5");
  });

  it("escapes cluster ids in paths", async () => {
    const { calls, fetchFn } = scripted([200, { revision: 0, payload: {} }]);
    const client = new ApiClient("", fetchFn);
    await client.clusterDetail("odd/id");
    await client.clusterHistory("odd/id");
    expect(calls[0].input).toBe("/api/clusters/odd%2Fid");
    expect(calls[1].input).toBe("/api/clusters/odd%2Fid/history");
  });
});

describe("mutation bodies", () => {
  it("always stamps the last seen revision into a merge", async () => {
    const { calls, fetchFn } = scripted(
      [200, { revision: 3, payload: {} }],
      [200, { revision: 4, payload: { cluster: {} } }],
    );
    const client = new ApiClient("", fetchFn);
    await client.meta();
    await client.merge(["c1", "c2"]);
    const init = calls[1].init;
    expect(init?.method).toBe("POST");
    expect(init?.headers?.["Content-Type"]).toBe("application/json");
    expect(JSON.parse(init?.body ?? "")).toEqual({
      targets: ["c1", "c2"],
      actor: "analyst",
      expected_revision: 3,
    });
    expect(client.revision).toBe(4);
  });

  it("always stamps the last seen revision into a split", async () => {
    const { calls, fetchFn } = scripted(
      [200, { revision: 9, payload: {} }],
      [200, { revision: 10, payload: { clusters: [{}, {}] } }],
    );
    const client = new ApiClient("", fetchFn);
    await client.meta();
    await client.split("c7", ["KEY A", "KEY B"], "jo");
    expect(JSON.parse(calls[1].init?.body ?? "")).toEqual({
      cluster: "c7",
      members: ["KEY A", "KEY B"],
      actor: "jo",
      expected_revision: 9,
    });
  });
});

describe("against the fake service", () => {
  it("round-trips reads and a merge", async () => {
    const fake = new FakeService();
    const client = new ApiClient("", fake.fetch);
    const meta = await client.meta();
    expect(meta.records).toBe(254);
    expect(meta.clustered).toBe(true);

    const spectrum = await client.spectrum({ from: 1859, to: 1860 });
    expect(spectrum.rows.map((r) => r.count)).toEqual([156, 102]);

    const listing = await client.clusters({ year: 1860 });
    expect(listing.clusters).toHaveLength(5);
    const ids = listing.clusters.map((c) => c.cluster_id);
    const merged = await client.merge(ids);
    expect(merged.cluster.occ_weight).toBe(102);
    expect(merged.cluster.n_members).toBe(8);
    expect(fake.mergeCalls[0].expected_revision).toBe(0);
    expect(client.revision).toBe(1);

    const after = await client.clusters({ year: 1860 });
    expect(after.clusters).toHaveLength(1);
  });

  it("rejects a stale merge with 409 and does not mutate", async () => {
    const fake = new FakeService();
    const client = new ApiClient("", fake.fetch);
    await client.meta();
    fake.revision = 6; // another session moved the dataset forward
    const err = await client.merge(["c1860a", "c1860b"]).catch((e) => e);
    expect(err).toBeInstanceOf(StaleRevisionError);
    expect(fake.clusters.has("c1860a")).toBe(true);
    expect(fake.clusters.has("c1860b")).toBe(true);
    // the 409 envelope told us where the dataset really is
    expect(client.revision).toBe(6);
  });

  it("splits a cluster into moved and remainder", async () => {
    const fake = new FakeService();
    const client = new ApiClient("", fake.fetch);
    await client.meta();
    const detail = await client.clusterDetail("c1860b");
    const movedKey = detail.variants[0].key;
    const payload = await client.split("c1860b", [movedKey]);
    const [moved, rest] = payload.clusters;
    expect(moved.members).toEqual([movedKey]);
    expect(moved.occ_weight + rest.occ_weight).toBe(2);
    expect(fake.clusters.has("c1860b")).toBe(false);
  });
});
