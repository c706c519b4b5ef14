import { describe, expect, it, vi } from "vitest";

import { ApiError, Client } from "../src/api.js";

function fakeFetch(status: number, body: unknown): typeof fetch {
  return vi.fn(async () =>
    new Response(JSON.stringify(body), {
      status,
      headers: { "content-type": "application/json" },
    }),
  ) as unknown as typeof fetch;
}

describe("Client", () => {
  it("uploads CSV with the right content type", async () => {
    const fetchFn = fakeFetch(200, { tableId: "t", fields: [] });
    const client = new Client("http://x", fetchFn);
    await client.uploadCsv("a,b\n1,2\n");
    const [url, init] = (fetchFn as ReturnType<typeof vi.fn>).mock.calls[0];
    expect(url).toBe("http://x/tables");
    expect(init.headers["content-type"]).toBe("text/csv");
  });

  it("omits the constraints key when empty", async () => {
    const fetchFn = fakeFetch(200, { tableId: "t", recommendations: [] });
    const client = new Client("", fetchFn);
    await client.recommend("t", {}, 3);
    const [, init] = (fetchFn as ReturnType<typeof vi.fn>).mock.calls[0];
    expect(JSON.parse(init.body)).toEqual({ tableId: "t", top: 3 });
  });

  it("sends constraints through untouched", async () => {
    const fetchFn = fakeFetch(200, { tableId: "t", recommendations: [] });
    const client = new Client("", fetchFn);
    await client.recommend("t", { fields: [0, 2], chartTypes: ["bar"] }, 5);
    const [, init] = (fetchFn as ReturnType<typeof vi.fn>).mock.calls[0];
    expect(JSON.parse(init.body).constraints).toEqual({ fields: [0, 2], chartTypes: ["bar"] });
  });

  it("surfaces server errors with status codes", async () => {
    const client = new Client("", fakeFetch(422, { error: "unsatisfiable" }));
    await expect(client.recommend("t", {}, 3)).rejects.toThrowError(ApiError);
    await client.recommend("t", {}, 3).catch((err: ApiError) => {
      expect(err.status).toBe(422);
      expect(err.message).toBe("unsatisfiable");
    });
  });
});
