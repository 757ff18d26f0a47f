// Browser wiring: drawing canvas, mode toggle, result bars, offline banner.

import { ApiClient, ModelInfo, Prediction } from "./api.js";
import { Classifier } from "./controller.js";
import { Point, Stroke } from "./rasterize.js";

const BRUSH_WIDTH = 14;

function renderBars(root: HTMLElement, pred: Prediction): void {
  root.innerHTML = pred.topk
    .map(
      ([name, prob]) => `
      <div class="row">
        <span class="name">${name}</span>
        <div class="track"><div class="bar" style="width:${(prob * 100).toFixed(1)}%"></div></div>
        <span class="pct">${(prob * 100).toFixed(1)}%</span>
      </div>`
    )
    .join("");
}

export function setup(doc: Document): void {
  const canvas = doc.getElementById("pad") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const results = doc.getElementById("results")!;
  const banner = doc.getElementById("banner")!;
  const modeSelect = doc.getElementById("mode") as HTMLSelectElement;
  const clearBtn = doc.getElementById("clear")!;

  const client = new ApiClient("");
  const classifier = new Classifier(client);
  let models: ModelInfo[] = [];
  let strokes: Stroke[] = [];
  let current: Stroke | null = null;

  function resetCanvas(): void {
    // Ink is drawn white on black to match the dataset polarity; CSS may
    // restyle the element but the pixel data keeps ink = high value.
    ctx.fillStyle = "#000";
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    ctx.strokeStyle = "#fff";
    ctx.lineWidth = BRUSH_WIDTH;
    ctx.lineCap = "round";
    ctx.lineJoin = "round";
  }

  function clearAll(): void {
    strokes = [];
    current = null;
    resetCanvas();
    results.innerHTML = "";
  }

  function pos(ev: PointerEvent): Point {
    const rect = canvas.getBoundingClientRect();
    return {
      x: ((ev.clientX - rect.left) / rect.width) * canvas.width,
      y: ((ev.clientY - rect.top) / rect.height) * canvas.height,
    };
  }

  async function refreshModels(): Promise<void> {
    try {
      models = await client.models();
      banner.hidden = true;
      modeSelect.innerHTML = models
        .map((m) => `<option value="${m.name}">${m.name} (${m.class_names.length})</option>`)
        .join("");
    } catch {
      banner.hidden = false;
    }
  }

  async function classify(): Promise<void> {
    const model = models.find((m) => m.name === modeSelect.value);
    if (!model) return;
    try {
      const pred = await classifier.classify(strokes, model.side, model.name);
      banner.hidden = true;
      if (pred !== null) renderBars(results, pred);
    } catch (err) {
      console.error("classify failed", err);
      if (err instanceof TypeError) {
        banner.hidden = false; // network failure: service unreachable
      } else {
        results.innerHTML = `<div class="row error">could not classify, try again</div>`;
      }
    }
  }

  canvas.addEventListener("pointerdown", (ev) => {
    canvas.setPointerCapture(ev.pointerId);
    current = { points: [pos(ev)], width: BRUSH_WIDTH };
    strokes.push(current);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!current) return;
    const p = pos(ev);
    const prev = current.points[current.points.length - 1];
    current.points.push(p);
    ctx.beginPath();
    ctx.moveTo(prev.x, prev.y);
    ctx.lineTo(p.x, p.y);
    ctx.stroke();
  });
  canvas.addEventListener("pointerup", (ev) => {
    if (!current) return;
    const p = pos(ev);
    current.points.push(p);
    ctx.beginPath();
    ctx.moveTo(p.x, p.y);
    ctx.lineTo(p.x + 0.01, p.y); // render single-tap dots too
    ctx.stroke();
    current = null;
    void classify(); // classify on pen-up, not continuously
  });

  modeSelect.addEventListener("change", () => {
    clearAll();
  });
  clearBtn.addEventListener("click", clearAll);

  resetCanvas();
  void refreshModels();
}
