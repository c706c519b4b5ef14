// Thin REST client over the recommendation service.

import type { Constraints, RecommendResponse, UploadResponse } from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function parseError(res: Response): Promise<never> {
  let message = res.statusText;
  try {
    const body = (await res.json()) as { error?: string };
    if (body.error) message = body.error;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(res.status, message);
}

export class Client {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  async health(): Promise<{ status: string; modelVersion: string }> {
    const res = await this.fetchFn(`${this.baseUrl}/health`);
    if (!res.ok) await parseError(res);
    return res.json();
  }

  async uploadCsv(csv: string): Promise<UploadResponse> {
    const res = await this.fetchFn(`${this.baseUrl}/tables`, {
      method: "POST",
      headers: { "content-type": "text/csv" },
      body: csv,
    });
    if (!res.ok) await parseError(res);
    return res.json();
  }

  async recommend(
    tableId: string,
    constraints: Constraints,
    top: number,
  ): Promise<RecommendResponse> {
    const body: Record<string, unknown> = { tableId, top };
    if (constraints.fields !== undefined || constraints.chartTypes !== undefined) {
      body.constraints = constraints;
    }
    const res = await this.fetchFn(`${this.baseUrl}/recommend`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) await parseError(res);
    return res.json();
  }
}
