// End-to-end check against the real inference service: train a tiny digits
// model that memorizes three fixture rasters, serve it, and verify that the
// rasterized strokes come back with their training labels.

import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { quantize } from "../src/controller.js";
import { rasterize, Stroke } from "../src/rasterize.js";

const SIDE = 16;
const TIMEOUT = 240_000;

// One glyph per class: dot, vertical bar, horizontal bar.
const GLYPHS: Stroke[][] = [
  [{ width: 24, points: [{ x: 128, y: 128 }] }],
  [{ width: 16, points: [{ x: 128, y: 40 }, { x: 128, y: 216 }] }],
  [{ width: 16, points: [{ x: 40, y: 128 }, { x: 216, y: 128 }] }],
];
const LABELS = ["sifr", "wahid", "ithnan"];

/**
 * The training loader transposes each decoded image to fix the source
 * orientation, so the CSV row stores the transpose of the upright raster.
 */
function toCsvRow(raster: Float64Array): string {
  const cells = new Array<number>(SIDE * SIDE);
  for (let i = 0; i < SIDE; i++) {
    for (let j = 0; j < SIDE; j++) {
      cells[j * SIDE + i] = Math.round(raster[i * SIDE + j] * 255);
    }
  }
  return cells.join(",");
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const port = (srv.address() as { port: number }).port;
      srv.close(() => resolve(port));
    });
    srv.on("error", reject);
  });
}

describe("memorized model round trip", () => {
  let dir: string;
  let server: ChildProcess | null = null;
  let client: ApiClient;

  beforeAll(async () => {
    dir = mkdtempSync(join(tmpdir(), "huruf-it-"));
    const rasters = GLYPHS.map((g) => rasterize(g, SIDE)!);
    writeFileSync(join(dir, "images.csv"), rasters.map(toCsvRow).join("\n") + "\n");
    writeFileSync(join(dir, "labels.csv"), "0\n1\n2\n");

    execFileSync(
      "python3",
      [
        "-m", "huruf.cli", "train",
        "--images", join(dir, "images.csv"),
        "--labels", join(dir, "labels.csv"),
        "--side", String(SIDE), "--head", "10",
        "--model", join(dir, "digits"),
        "--epochs", "250", "--batch", "1", "--lr", "0.003", "--seed", "7",
      ],
      { stdio: "pipe", timeout: TIMEOUT }
    );

    const port = await freePort();
    server = spawn(
      "python3",
      ["-m", "huruf.cli", "serve", "--model-dir", dir, "--port", String(port)],
      { stdio: "ignore" }
    );
    client = new ApiClient(`http://127.0.0.1:${port}`);
    const deadline = Date.now() + 60_000;
    for (;;) {
      try {
        const health = await client.health();
        if (health.status === "ok") break;
      } catch {
        // not up yet
      }
      if (Date.now() > deadline) throw new Error("service did not come up");
      await new Promise((res) => setTimeout(res, 300));
    }
  }, TIMEOUT);

  afterAll(() => {
    server?.kill();
    if (dir) rmSync(dir, { recursive: true, force: true });
  });

  it("reports the trained digits model", async () => {
    const models = await client.models();
    const digits = models.find((m) => m.name === "digits");
    expect(digits?.side).toBe(SIDE);
    expect(digits?.class_names.length).toBe(10);
  });

  it(
    "returns each fixture glyph's training label top-1",
    async () => {
      for (let k = 0; k < GLYPHS.length; k++) {
        const raster = rasterize(GLYPHS[k], SIDE)!;
        const pred = await client.predict("digits", quantize(raster));
        expect(pred.label).toBe(LABELS[k]);
        expect(pred.topk[0][0]).toBe(LABELS[k]);
      }
    },
    TIMEOUT
  );
});
