// Canvas scatter plot of one projection group: one mark per sample,
// colored by label or by cluster, with pan/zoom and point picking.
// Rendering goes through Context2DLike so tests can record draw calls.

import { ColorAssignment } from './colors.js';
import { ColorMode } from './state.js';
import { ProjectionPoint } from './types.js';

export interface Context2DLike {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
}

export interface Transform {
  scale: number;
  offsetX: number;
  offsetY: number;
}

const MARK_RADIUS = 4;
const PICK_RADIUS = 8;

export class ScatterPlot {
  points: ProjectionPoint[] = [];
  colorMode: ColorMode = 'labels';
  selectedId: string | null = null;
  legend: Array<[string, string]> = [];
  transform: Transform = { scale: 1, offsetX: 0, offsetY: 0 };
  private base: Transform = { scale: 1, offsetX: 0, offsetY: 0 };
  private zoom = 1;
  private panX = 0;
  private panY = 0;

  constructor(
    private ctx: Context2DLike,
    private width: number,
    private height: number,
  ) {}

  setPoints(points: ProjectionPoint[]): void {
    this.points = points;
    this.base = this.fitTransform();
    this.zoom = 1;
    this.panX = 0;
    this.panY = 0;
    this.updateTransform();
  }

  private fitTransform(): Transform {
    if (this.points.length === 0) return { scale: 1, offsetX: 0, offsetY: 0 };
    const xs = this.points.map((p) => p.x);
    const ys = this.points.map((p) => p.y);
    const minX = Math.min(...xs), maxX = Math.max(...xs);
    const minY = Math.min(...ys), maxY = Math.max(...ys);
    const margin = 24;
    const spanX = maxX - minX || 1;
    const spanY = maxY - minY || 1;
    const scale = Math.min((this.width - 2 * margin) / spanX,
                           (this.height - 2 * margin) / spanY);
    return {
      scale,
      offsetX: margin - minX * scale + (this.width - 2 * margin - spanX * scale) / 2,
      offsetY: margin - minY * scale + (this.height - 2 * margin - spanY * scale) / 2,
    };
  }

  private updateTransform(): void {
    this.transform = {
      scale: this.base.scale * this.zoom,
      offsetX: this.base.offsetX * this.zoom + this.panX
        + (1 - this.zoom) * (this.width / 2),
      offsetY: this.base.offsetY * this.zoom + this.panY
        + (1 - this.zoom) * (this.height / 2),
    };
  }

  toScreen(p: { x: number; y: number }): [number, number] {
    const t = this.transform;
    return [p.x * t.scale + t.offsetX, p.y * t.scale + t.offsetY];
  }

  zoomBy(factor: number): void {
    this.zoom = Math.min(50, Math.max(0.1, this.zoom * factor));
    this.updateTransform();
  }

  panBy(dx: number, dy: number): void {
    this.panX += dx;
    this.panY += dy;
    this.updateTransform();
  }

  colorKey(p: ProjectionPoint): string {
    if (this.colorMode === 'clusters') {
      return p.cluster === null ? 'unclustered' : `cluster ${p.cluster}`;
    }
    return p.label;
  }

  /** Repaint every mark; returns the number of marks drawn. */
  draw(): number {
    const ctx = this.ctx;
    ctx.clearRect(0, 0, this.width, this.height);
    const colors = new ColorAssignment();
    // stable legend order regardless of point order
    for (const key of [...new Set(this.points.map((p) => this.colorKey(p)))].sort()) {
      colors.color(key);
    }
    let drawn = 0;
    for (const p of this.points) {
      const [sx, sy] = this.toScreen(p);
      ctx.beginPath();
      ctx.fillStyle = colors.color(this.colorKey(p));
      ctx.arc(sx, sy, MARK_RADIUS, 0, 2 * Math.PI);
      ctx.fill();
      if (p.id === this.selectedId) {
        ctx.beginPath();
        ctx.strokeStyle = '#111111';
        ctx.lineWidth = 2;
        ctx.arc(sx, sy, MARK_RADIUS + 3, 0, 2 * Math.PI);
        ctx.stroke();
      }
      drawn += 1;
    }
    this.legend = colors.entries();
    return drawn;
  }

  /** Nearest point within picking range of a screen position, or null. */
  pick(sx: number, sy: number): ProjectionPoint | null {
    let best: ProjectionPoint | null = null;
    let bestD = PICK_RADIUS * PICK_RADIUS;
    for (const p of this.points) {
      const [px, py] = this.toScreen(p);
      const d = (px - sx) ** 2 + (py - sy) ** 2;
      if (d <= bestD) {
        best = p;
        bestD = d;
      }
    }
    return best;
  }
}
