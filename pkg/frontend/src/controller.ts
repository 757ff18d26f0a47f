// UI-independent classify flow: rasterize, guard, quantize, request.

import { ApiClient, Prediction } from "./api.js";
import { rasterize, Stroke } from "./rasterize.js";

/** Snap to the 8-bit levels the model was trained on. */
export function quantize(raster: Float64Array): number[] {
  return Array.from(raster, (v) => Math.round(v * 255) / 255);
}

export class Classifier {
  private requestId = 0;

  constructor(readonly client: ApiClient) {}

  /**
   * Rasterize and classify one stroke buffer. Returns null without touching
   * the network when the canvas is empty, and null for stale responses when
   * a newer request has been issued meanwhile (newest wins).
   */
  async classify(strokes: Stroke[], side: number, model: string): Promise<Prediction | null> {
    const raster = rasterize(strokes, side);
    if (raster === null) return null;
    const id = ++this.requestId;
    const pred = await this.client.predict(model, quantize(raster));
    return id === this.requestId ? pred : null;
  }
}
