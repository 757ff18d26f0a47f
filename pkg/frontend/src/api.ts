// Thin JSON client for the inference service.

export interface ModelInfo {
  name: string;
  side: number;
  class_names: string[];
}

export interface Prediction {
  label: string;
  class_index: number;
  probabilities: number[];
  topk: [string, number][];
}

export class ApiError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
  }
}

async function getJson(url: string): Promise<any> {
  const res = await fetch(url);
  if (!res.ok) throw new ApiError(`GET ${url} failed: ${res.status}`, res.status);
  return res.json();
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  async health(): Promise<{ status: string; models: { name: string; side: number }[] }> {
    return getJson(`${this.base}/api/health`);
  }

  async models(): Promise<ModelInfo[]> {
    const body = await getJson(`${this.base}/api/models`);
    return body.models;
  }

  async predict(model: string, pixels: number[] | Float64Array): Promise<Prediction> {
    const res = await fetch(`${this.base}/api/predict`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ model, pixels: Array.from(pixels) }),
    });
    if (!res.ok) {
      let detail = `${res.status}`;
      try {
        detail = (await res.json()).detail ?? detail;
      } catch {
        // non-JSON error body; keep the status code
      }
      throw new ApiError(`predict failed: ${detail}`, res.status);
    }
    const pred: Prediction = await res.json();
    const total = pred.probabilities.reduce((a, b) => a + b, 0);
    if (!(Math.abs(total - 1) < 1e-3)) {
      throw new ApiError(`probabilities sum to ${total}, expected 1`);
    }
    return pred;
  }
}
