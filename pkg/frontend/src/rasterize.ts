// Stroke capture -> model input tensor, as plain deterministic math.
// No canvas APIs here so the pipeline is testable in node and gives the
// same raster for the same strokes everywhere.

export interface Point {
  x: number;
  y: number;
}

export interface Stroke {
  points: Point[];
  width: number;
}

/** Fraction of the glyph bounding box added as margin on each side. */
const MARGIN_FRACTION = 0.15;

/** Render strokes as white-on-black ink into a size x size float grid. */
export function renderStrokes(strokes: Stroke[], size: number): Float64Array {
  const grid = new Float64Array(size * size);
  for (const stroke of strokes) {
    const radius = Math.max(stroke.width / 2, 0.5);
    const pts = stroke.points;
    if (pts.length === 0) continue;
    if (pts.length === 1) {
      stampDisk(grid, size, pts[0].x, pts[0].y, radius);
      continue;
    }
    for (let i = 1; i < pts.length; i++) {
      stampSegment(grid, size, pts[i - 1], pts[i], radius);
    }
  }
  return grid;
}

function stampSegment(grid: Float64Array, size: number, a: Point, b: Point, radius: number): void {
  const dx = b.x - a.x;
  const dy = b.y - a.y;
  const length = Math.hypot(dx, dy);
  // Step at half-pixel spacing so disks overlap into a solid line.
  const steps = Math.max(1, Math.ceil(length * 2));
  for (let s = 0; s <= steps; s++) {
    const t = s / steps;
    stampDisk(grid, size, a.x + dx * t, a.y + dy * t, radius);
  }
}

function stampDisk(grid: Float64Array, size: number, cx: number, cy: number, radius: number): void {
  const r2 = radius * radius;
  const i0 = Math.max(0, Math.floor(cy - radius));
  const i1 = Math.min(size - 1, Math.ceil(cy + radius));
  const j0 = Math.max(0, Math.floor(cx - radius));
  const j1 = Math.min(size - 1, Math.ceil(cx + radius));
  for (let i = i0; i <= i1; i++) {
    for (let j = j0; j <= j1; j++) {
      const di = i + 0.5 - cy;
      const dj = j + 0.5 - cx;
      if (di * di + dj * dj <= r2) grid[i * size + j] = 1;
    }
  }
}

interface Box {
  top: number;
  left: number;
  bottom: number; // inclusive
  right: number; // inclusive
}

function inkBounds(grid: Float64Array, size: number): Box | null {
  let top = size, left = size, bottom = -1, right = -1;
  for (let i = 0; i < size; i++) {
    for (let j = 0; j < size; j++) {
      if (grid[i * size + j] > 0) {
        if (i < top) top = i;
        if (i > bottom) bottom = i;
        if (j < left) left = j;
        if (j > right) right = j;
      }
    }
  }
  return bottom < 0 ? null : { top, left, bottom, right };
}

/**
 * Crop the ink bounding box to a margin-padded square centered on the
 * glyph, then box-average down to side x side and normalize the peak to 1.
 * Returns null when the strokes leave no ink (the empty-canvas signal).
 */
export function rasterize(strokes: Stroke[], side: number, canvasSize = 256): Float64Array | null {
  const grid = renderStrokes(strokes, canvasSize);
  const box = inkBounds(grid, canvasSize);
  if (box === null) return null;

  const boxH = box.bottom - box.top + 1;
  const boxW = box.right - box.left + 1;
  const span = Math.max(boxH, boxW);
  const crop = span + 2 * Math.max(1, Math.round(span * MARGIN_FRACTION));
  // Center the square crop on the glyph; reads outside the canvas are 0.
  const top = Math.round(box.top + boxH / 2 - crop / 2);
  const left = Math.round(box.left + boxW / 2 - crop / 2);

  const out = new Float64Array(side * side);
  const scale = crop / side;
  let peak = 0;
  for (let i = 0; i < side; i++) {
    const r0 = Math.floor(i * scale);
    const r1 = Math.max(Math.floor((i + 1) * scale), r0 + 1);
    for (let j = 0; j < side; j++) {
      const c0 = Math.floor(j * scale);
      const c1 = Math.max(Math.floor((j + 1) * scale), c0 + 1);
      let acc = 0;
      for (let r = r0; r < r1; r++) {
        const row = top + r;
        if (row < 0 || row >= canvasSize) continue;
        for (let c = c0; c < c1; c++) {
          const col = left + c;
          if (col < 0 || col >= canvasSize) continue;
          acc += grid[row * canvasSize + col];
        }
      }
      const v = acc / ((r1 - r0) * (c1 - c0));
      out[i * side + j] = v;
      if (v > peak) peak = v;
    }
  }
  if (peak > 0) {
    for (let k = 0; k < out.length; k++) out[k] /= peak;
  }
  return out;
}
