// End-to-end flow against the real service with a seeded trained model:
// upload -> constrain (Bar + 3 fields) -> top-1 is a rendered stacked bar.
//
// Heavy (trains a tiny model on first run, cached under .cache/). Skipped
// when CHARTREC_E2E=0; the default `npm test` includes it.

import { spawn, execSync, ChildProcess } from "node:child_process";
import { existsSync, mkdirSync } from "node:fs";
import path from "node:path";
import { afterAll, beforeAll, describe, expect, it, vi } from "vitest";

import { Client } from "../src/api.js";
import { ValidationError, recommendFlow, uploadFlow } from "../src/flows.js";
import { initialState, setChartType, toggleField } from "../src/state.js";

const ENABLED = process.env.CHARTREC_E2E !== "0";
const ROOT = path.resolve(__dirname, "..");
const REPO = path.resolve(ROOT, "..");
const CACHE = path.join(ROOT, ".cache");
const MODEL = path.join(CACHE, "model-e2e.t2c");
const PORT = 8791;
const BASE = `http://127.0.0.1:${PORT}`;

const CSV =
  "Program,Total Male Students,Total Female Students\n" +
  "Engineering,320,210\nBusiness,280,260\nArts,150,240\nScience,300,310\nLaw,120,180\n";

function py(args: string, timeoutMs = 900_000): void {
  execSync(`python3 -m chartrec.cli ${args}`, {
    cwd: REPO,
    stdio: "pipe",
    timeout: timeoutMs,
  });
}

function ensureModel(): void {
  if (existsSync(MODEL)) return;
  mkdirSync(CACHE, { recursive: true });
  const corpus = path.join(CACHE, "corpus.jsonl");
  const ready = path.join(CACHE, "ready");
  py(`synth --size 1600 --seed 7 --out ${corpus}`);
  py(`prep --in ${corpus} --out ${ready} --k 10 --ratios 7:1:2 --seed 7`);
  py(
    `train --corpus ${ready} --regime mixed --config tiny ` +
      `--epochs-tf 14 --epochs-ss 3 --seed 7 --out ${MODEL}`,
  );
}

async function waitHealthy(client: Client): Promise<void> {
  for (let i = 0; i < 120; i++) {
    try {
      const res = await client.health();
      if (res.status === "ok") return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("service did not become healthy");
}

describe.skipIf(!ENABLED)("ui e2e against the live service", () => {
  let server: ChildProcess | null = null;
  const client = new Client(BASE);

  beforeAll(async () => {
    ensureModel();
    server = spawn(
      "python3",
      ["-m", "chartrec.cli", "serve", "--model", MODEL, "--port", String(PORT)],
      { cwd: REPO, stdio: "ignore" },
    );
    await waitHealthy(client);
  }, 1_200_000);

  afterAll(() => {
    server?.kill("SIGTERM");
  });

  it("uploads, constrains to Bar + 3 fields, renders a stacked bar first", async () => {
    let state = await uploadFlow(client, initialState(), CSV);
    expect(state.fields.map((f) => f.name)).toEqual([
      "Program",
      "Total Male Students",
      "Total Female Students",
    ]);
    state = toggleField(state, 0);
    state = toggleField(state, 1);
    state = toggleField(state, 2);
    state = setChartType(state, "bar");
    const [, cards] = await recommendFlow(client, state);
    expect(cards.length).toBeGreaterThan(0);
    const top = cards[0];
    expect(top.sequence).toBe("[Bar] (1) (2) [SEP] (0) [Stack]");
    expect(top.svg).toContain("<svg");
    expect(top.svg).toContain('data-stacked="1"');
    expect([...top.fields].sort()).toEqual([0, 1, 2]);
  }, 120_000);

  it("unconstrained flow returns rendered cards", async () => {
    let state = await uploadFlow(client, initialState(), CSV);
    const [, cards] = await recommendFlow(client, state);
    expect(cards.length).toBeGreaterThan(0);
    for (const card of cards) {
      expect(card.svg).toContain("<svg");
    }
  }, 60_000);

  it("client validation blocks out-of-range field indices before sending", async () => {
    const spy = vi.fn(fetch);
    const spied = new Client(BASE, spy as typeof fetch);
    let state = await uploadFlow(client, initialState(), CSV);
    state.selected.add(11); // out of range for a 3-field table
    await expect(recommendFlow(spied, state)).rejects.toThrowError(ValidationError);
    expect(spy).not.toHaveBeenCalled();
  }, 60_000);
});
