// Grid replay playback: renders one frame of units onto a canvas and owns
// the play/pause/scrub state. Units are colored by owner and shaped by
// kind; the POV side gets a highlight ring and the selected sample's
// 32-frame window is marked on the timeline.

import { OWNER_COLORS } from './colors.js';
import { Context2DLike } from './scatter.js';
import { ReplayResponse, ReplayUnit } from './types.js';

export interface GridContext extends Context2DLike {
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
}

export interface SampleWindow {
  startTick: number;
  endTick: number;
}

const SQUARE_KINDS = new Set(['base', 'barracks', 'resource']);

export class ReplayPlayer {
  replay: ReplayResponse | null = null;
  frameIndex = 0;
  playing = false;
  speed = 10; // ticks per second
  window: SampleWindow | null = null;

  constructor(
    private ctx: GridContext,
    private size: number, // canvas pixels (square)
  ) {}

  load(replay: ReplayResponse, window: SampleWindow | null = null): void {
    this.replay = replay;
    this.window = window;
    this.frameIndex = 0;
    this.playing = false;
  }

  get frameCount(): number {
    return this.replay ? this.replay.frames.length : 0;
  }

  play(): void {
    if (this.replay) this.playing = true;
  }

  pause(): void {
    this.playing = false;
  }

  seek(index: number): void {
    const last = this.frameCount - 1;
    this.frameIndex = Math.max(0, Math.min(last, Math.round(index)));
  }

  /** Advance by elapsed wall-clock seconds; pauses at the final frame. */
  tick(dt: number): void {
    if (!this.playing || !this.replay) return;
    this.seek(this.frameIndex + dt * this.speed);
    if (this.frameIndex >= this.frameCount - 1) this.playing = false;
  }

  /** Fraction [0,1] of the timeline covered by the sample window. */
  windowSpan(): [number, number] | null {
    if (!this.window || !this.replay || this.replay.ticks === 0) return null;
    const span: [number, number] = [
      this.window.startTick / this.replay.ticks,
      this.window.endTick / this.replay.ticks,
    ];
    return [Math.max(0, span[0]), Math.min(1, span[1])];
  }

  draw(): void {
    const ctx = this.ctx;
    ctx.fillStyle = '#fafaf7';
    ctx.fillRect(0, 0, this.size, this.size);
    if (!this.replay) return;
    const cell = this.size / this.replay.width;
    ctx.strokeStyle = '#dddddd';
    ctx.lineWidth = 1;
    for (let i = 0; i <= this.replay.width; i++) {
      ctx.strokeRect(i * cell, 0, 0, this.size);
      ctx.strokeRect(0, i * cell, this.size, 0);
    }
    const frame = this.replay.frames[this.frameIndex];
    if (!frame) return;
    for (const unit of frame.units) {
      this.drawUnit(unit, cell);
    }
  }

  private drawUnit(unit: ReplayUnit, cell: number): void {
    const ctx = this.ctx;
    const cx = (unit.x + 0.5) * cell;
    const cy = (unit.y + 0.5) * cell;
    const owner = unit.owner ?? 'none';
    ctx.fillStyle = OWNER_COLORS[owner] ?? '#999999';
    if (SQUARE_KINDS.has(unit.kind)) {
      const pad = cell * 0.12;
      ctx.fillRect(unit.x * cell + pad, unit.y * cell + pad,
                   cell - 2 * pad, cell - 2 * pad);
    } else {
      const radius = unit.kind === 'worker' ? cell * 0.28 : cell * 0.38;
      ctx.beginPath();
      ctx.arc(cx, cy, radius, 0, 2 * Math.PI);
      ctx.fill();
    }
    if (this.replay && unit.owner === this.replay.pov) {
      ctx.beginPath();
      ctx.strokeStyle = '#222222';
      ctx.lineWidth = 1.5;
      ctx.arc(cx, cy, cell * 0.46, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
}
