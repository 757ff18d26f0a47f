import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiClient, Prediction } from "../src/api.js";
import { Classifier, quantize } from "../src/controller.js";
import { Stroke } from "../src/rasterize.js";

const STROKE: Stroke[] = [
  { width: 14, points: [{ x: 60, y: 60 }, { x: 200, y: 200 }] },
];

function fakePrediction(label: string): Prediction {
  const probabilities = new Array(10).fill(0.3 / 9);
  probabilities[0] = 0.7;
  return { label, class_index: 0, probabilities, topk: [[label, 0.7]] };
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("empty-canvas guard", () => {
  it("sends no request for an empty stroke buffer", async () => {
    const fetchSpy = vi.fn();
    vi.stubGlobal("fetch", fetchSpy);
    const predictSpy = vi.spyOn(ApiClient.prototype, "predict");
    const classifier = new Classifier(new ApiClient(""));

    expect(await classifier.classify([], 16, "digits")).toBeNull();
    expect(await classifier.classify([{ width: 14, points: [] }], 16, "digits")).toBeNull();

    expect(predictSpy).not.toHaveBeenCalled();
    expect(fetchSpy).not.toHaveBeenCalled();
    predictSpy.mockRestore();
  });

  it("does send a request once ink exists", async () => {
    const predictSpy = vi
      .spyOn(ApiClient.prototype, "predict")
      .mockResolvedValue(fakePrediction("sifr"));
    const classifier = new Classifier(new ApiClient(""));

    const pred = await classifier.classify(STROKE, 16, "digits");
    expect(pred?.label).toBe("sifr");
    expect(predictSpy).toHaveBeenCalledTimes(1);
    const pixels = predictSpy.mock.calls[0][1] as number[];
    expect(pixels.length).toBe(256);
    predictSpy.mockRestore();
  });
});

describe("newest-wins", () => {
  it("drops the stale response when a newer request is in flight", async () => {
    let resolveFirst!: (p: Prediction) => void;
    const first = new Promise<Prediction>((res) => (resolveFirst = res));
    const predictSpy = vi
      .spyOn(ApiClient.prototype, "predict")
      .mockReturnValueOnce(first)
      .mockResolvedValueOnce(fakePrediction("wahid"));
    const classifier = new Classifier(new ApiClient(""));

    const stale = classifier.classify(STROKE, 16, "digits");
    const fresh = classifier.classify(STROKE, 16, "digits");
    resolveFirst(fakePrediction("sifr"));

    expect(await stale).toBeNull();
    expect((await fresh)?.label).toBe("wahid");
    predictSpy.mockRestore();
  });
});

describe("quantize", () => {
  it("snaps every value onto the 8-bit grid", () => {
    const q = quantize(new Float64Array([0, 0.123456, 0.5, 0.999, 1]));
    for (const v of q) {
      expect(Math.round(v * 255) / 255).toBe(v);
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThanOrEqual(1);
    }
    expect(q[0]).toBe(0);
    expect(q[4]).toBe(1);
  });
});

describe("api client sanity check", () => {
  it("rejects predictions whose probabilities do not sum to 1", async () => {
    vi.stubGlobal(
      "fetch",
      vi.fn().mockResolvedValue(
        new Response(
          JSON.stringify({
            label: "sifr",
            class_index: 0,
            probabilities: [0.5, 0.1],
            topk: [["sifr", 0.5]],
          }),
          { status: 200 }
        )
      )
    );
    const client = new ApiClient("http://example.invalid");
    await expect(client.predict("digits", [0, 1])).rejects.toThrow(/sum/);
  });
});
