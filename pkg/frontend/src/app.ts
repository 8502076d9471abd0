// Explorer wiring: controls, scatter canvas, replay panel, URL sync.

import { ApiClient } from './api.js';
import { ReplayPlayer, SampleWindow } from './replay.js';
import { ScatterPlot } from './scatter.js';
import {
  ColorMode,
  DEFAULT_STATE,
  ViewState,
  decodeState,
  encodeState,
} from './state.js';
import { ProjectionPoint, ReplayResponse, SchemesResponse } from './types.js';

const SCATTER_SIZE = 560;
const REPLAY_SIZE = 360;

export class ExplorerApp {
  state: ViewState = { ...DEFAULT_STATE };
  schemes: SchemesResponse = {};
  scatter!: ScatterPlot;
  player!: ReplayPlayer;
  lastReplay: ReplayResponse | null = null;
  lastError: string | null = null;

  private els!: Record<string, HTMLElement>;
  private schemeSelect!: HTMLSelectElement;
  private groupSelect!: HTMLSelectElement;
  private kSelect!: HTMLSelectElement;
  private scrub!: HTMLInputElement;

  constructor(
    private root: HTMLElement,
    private api: ApiClient,
    private win: Window,
  ) {}

  async init(): Promise<void> {
    this.buildDom();
    this.schemes = await this.api.schemes();
    const fromUrl = decodeState(this.win.location.hash);
    const scheme = fromUrl.scheme ?? Object.keys(this.schemes)[0] ?? null;
    const info = scheme ? this.schemes[scheme] : undefined;
    this.state = {
      ...fromUrl,
      scheme,
      group: fromUrl.group ?? info?.groups[0] ?? null,
      k: fromUrl.k ?? info?.ks[0] ?? null,
    };
    this.fillControls();
    await this.refreshProjection();
    if (this.state.selectedId) {
      const point = this.scatter.points.find((p) => p.id === this.state.selectedId);
      if (point) await this.select(point, { updateUrl: false });
    }
    this.startLoop();
  }

  private buildDom(): void {
    this.root.innerHTML = `
      <header>
        <h1>play-style explorer</h1>
        <nav>
          <label>scheme <select data-id="scheme"></select></label>
          <label>group <select data-id="group"></select></label>
          <label>k <select data-id="k"></select></label>
          <button data-id="toggle">color: labels</button>
        </nav>
      </header>
      <main>
        <section class="scatter-pane">
          <canvas data-id="scatter" width="${SCATTER_SIZE}" height="${SCATTER_SIZE}"></canvas>
          <div data-id="legend" class="legend"></div>
          <div data-id="tooltip" class="tooltip" hidden></div>
          <div data-id="status" class="status"></div>
        </section>
        <section class="replay-pane">
          <canvas data-id="replay" width="${REPLAY_SIZE}" height="${REPLAY_SIZE}"></canvas>
          <div class="transport">
            <button data-id="play">play</button>
            <input data-id="scrub" type="range" min="0" max="0" value="0">
            <label>speed <input data-id="speed" type="number" min="1" max="60"
              value="${DEFAULT_STATE.speed}"> t/s</label>
          </div>
          <div data-id="timeline" class="timeline"><div data-id="window"
            class="sample-window"></div><div data-id="cursor" class="cursor"></div></div>
          <div data-id="replay-info" class="status"></div>
        </section>
      </main>`;
    this.els = {};
    this.root.querySelectorAll<HTMLElement>('[data-id]').forEach((el) => {
      this.els[el.dataset.id as string] = el;
    });
    this.schemeSelect = this.els.scheme as HTMLSelectElement;
    this.groupSelect = this.els.group as HTMLSelectElement;
    this.kSelect = this.els.k as HTMLSelectElement;
    this.scrub = this.els.scrub as HTMLInputElement;

    const scatterCanvas = this.els.scatter as HTMLCanvasElement;
    const replayCanvas = this.els.replay as HTMLCanvasElement;
    this.scatter = new ScatterPlot(
      this.getContext(scatterCanvas), SCATTER_SIZE, SCATTER_SIZE);
    this.player = new ReplayPlayer(this.getContext(replayCanvas), REPLAY_SIZE);

    this.schemeSelect.addEventListener('change', () => {
      void this.setScheme(this.schemeSelect.value);
    });
    this.groupSelect.addEventListener('change', () => {
      void this.setGroup(this.groupSelect.value);
    });
    this.kSelect.addEventListener('change', () => {
      void this.setK(Number(this.kSelect.value));
    });
    this.els.toggle.addEventListener('click', () => {
      this.setColorMode(this.state.colorMode === 'labels' ? 'clusters' : 'labels');
    });
    scatterCanvas.addEventListener('click', (ev) => {
      const point = this.scatter.pick(ev.offsetX, ev.offsetY);
      if (point) void this.select(point);
    });
    scatterCanvas.addEventListener('mousemove', (ev) => {
      this.showTooltip(this.scatter.pick(ev.offsetX, ev.offsetY), ev.offsetX, ev.offsetY);
    });
    scatterCanvas.addEventListener('wheel', (ev) => {
      ev.preventDefault();
      this.scatter.zoomBy(ev.deltaY < 0 ? 1.15 : 1 / 1.15);
      this.scatter.draw();
    });
    this.els.play.addEventListener('click', () => {
      if (this.player.playing) {
        this.player.pause();
      } else {
        if (this.player.frameIndex >= this.player.frameCount - 1) this.player.seek(0);
        this.player.play();
      }
      this.updateTransport();
    });
    this.scrub.addEventListener('input', () => {
      this.player.pause();
      this.player.seek(Number(this.scrub.value));
      this.player.draw();
      this.updateTransport();
    });
    (this.els.speed as HTMLInputElement).addEventListener('change', () => {
      this.state.speed = Number((this.els.speed as HTMLInputElement).value);
      this.player.speed = this.state.speed;
      this.syncUrl();
    });
  }

  private getContext(canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext('2d');
    if (ctx) return ctx;
    // canvas-less environments (tests) get a recording stub via prototype patching
    return new Proxy({ fillStyle: '', strokeStyle: '', lineWidth: 1 }, {
      get: (target, prop) =>
        prop in target ? (target as never)[prop] : () => undefined,
      set: (target, prop, value) => {
        (target as Record<string | symbol, unknown>)[prop] = value;
        return true;
      },
    }) as unknown as CanvasRenderingContext2D;
  }

  // -- state transitions -------------------------------------------------

  async setScheme(scheme: string): Promise<void> {
    const info = this.schemes[scheme];
    this.state.scheme = scheme;
    this.state.group = info?.groups[0] ?? null;
    this.state.k = info?.ks[0] ?? null;
    this.state.selectedId = null;
    this.fillControls();
    await this.refreshProjection();
  }

  async setGroup(group: string): Promise<void> {
    this.state.group = group;
    this.state.selectedId = null;
    await this.refreshProjection();
  }

  async setK(k: number): Promise<void> {
    this.state.k = k;
    await this.refreshProjection();
  }

  /** Recolor without refetching: positions must not change. */
  setColorMode(mode: ColorMode): void {
    this.state.colorMode = mode;
    this.scatter.colorMode = mode;
    (this.els.toggle as HTMLButtonElement).textContent = `color: ${mode}`;
    this.scatter.draw();
    this.renderLegend();
    this.syncUrl();
  }

  async refreshProjection(): Promise<void> {
    if (!this.state.group || this.state.k === null) return;
    try {
      const data = await this.api.projection(
        this.state.group, this.state.k, this.state.scheme ?? undefined);
      this.lastError = null;
      this.scatter.colorMode = this.state.colorMode;
      this.scatter.selectedId = this.state.selectedId;
      this.scatter.setPoints(data.points);
      const drawn = this.scatter.draw();
      this.els.status.textContent = data.points.length === 0
        ? 'no samples in this group'
        : `${drawn} samples in ${data.group} (k=${data.k})`;
      this.renderLegend();
    } catch (err) {
      this.lastError = String(err instanceof Error ? err.message : err);
      this.els.status.textContent = this.lastError;
    }
    this.syncUrl();
  }

  async select(point: ProjectionPoint,
               opts: { updateUrl?: boolean } = {}): Promise<void> {
    this.state.selectedId = point.id;
    this.scatter.selectedId = point.id;
    this.scatter.draw();
    if (opts.updateUrl !== false) this.syncUrl();
    try {
      const replay = await this.api.replay(point.trace_id);
      this.lastReplay = replay;
      this.lastError = null;
      this.player.speed = this.state.speed;
      this.player.load(replay, sampleWindow(replay, point.slot));
      this.scrub.max = String(Math.max(0, this.player.frameCount - 1));
      this.scrub.value = '0';
      this.player.draw();
      this.els['replay-info'].textContent =
        `${replay.agents[0]} vs ${replay.agents[1]} on ${replay.variant} — ` +
        `${replay.outcome} in ${replay.ticks} ticks (pov ${replay.pov})`;
      this.updateTransport();
    } catch (err) {
      this.lastError = String(err instanceof Error ? err.message : err);
      this.els['replay-info'].innerHTML = '';
      const note = this.win.document.createElement('span');
      note.textContent = `replay failed: ${this.lastError} `;
      const retry = this.win.document.createElement('button');
      retry.textContent = 'retry';
      retry.addEventListener('click', () => void this.select(point));
      this.els['replay-info'].append(note, retry);
    }
  }

  // -- presentation -------------------------------------------------------

  private fillControls(): void {
    const options = (values: Array<string | number>, current: unknown) =>
      values.map((v) =>
        `<option value="${v}"${String(v) === String(current) ? ' selected' : ''}>${v}</option>`)
        .join('');
    this.schemeSelect.innerHTML = options(Object.keys(this.schemes), this.state.scheme);
    const info = this.state.scheme ? this.schemes[this.state.scheme] : undefined;
    this.groupSelect.innerHTML = options(info?.groups ?? [], this.state.group);
    this.kSelect.innerHTML = options(info?.ks ?? [], this.state.k);
    (this.els.toggle as HTMLButtonElement).textContent =
      `color: ${this.state.colorMode}`;
  }

  private renderLegend(): void {
    this.els.legend.innerHTML = this.scatter.legend
      .map(([key, color]) =>
        `<span class="key"><i style="background:${color}"></i>${key}</span>`)
      .join('');
  }

  private showTooltip(point: ProjectionPoint | null, x: number, y: number): void {
    const tip = this.els.tooltip;
    if (!point) {
      tip.hidden = true;
      return;
    }
    tip.hidden = false;
    tip.style.left = `${x + 12}px`;
    tip.style.top = `${y + 12}px`;
    const cluster = point.cluster === null ? '-' : point.cluster;
    tip.textContent =
      `${point.label} · cluster ${cluster} · ${point.map}/${point.side} · ${point.id}`;
  }

  updateTransport(): void {
    (this.els.play as HTMLButtonElement).textContent =
      this.player.playing ? 'pause' : 'play';
    this.scrub.value = String(this.player.frameIndex);
    const span = this.player.windowSpan();
    const windowEl = this.els.window;
    if (span) {
      windowEl.style.left = `${(span[0] * 100).toFixed(2)}%`;
      windowEl.style.width = `${((span[1] - span[0]) * 100).toFixed(2)}%`;
      windowEl.hidden = false;
    } else {
      windowEl.hidden = true;
    }
    const frames = Math.max(1, this.player.frameCount - 1);
    this.els.cursor.style.left =
      `${((this.player.frameIndex / frames) * 100).toFixed(2)}%`;
  }

  private syncUrl(): void {
    const hash = `#${encodeState(this.state)}`;
    if (this.win.location.hash !== hash) {
      this.win.history.replaceState(null, '', hash);
    }
  }

  private startLoop(): void {
    if (typeof this.win.requestAnimationFrame !== 'function') return;
    let last = 0;
    const step = (ts: number) => {
      const dt = last ? (ts - last) / 1000 : 0;
      last = ts;
      if (this.player.playing) {
        this.player.tick(dt);
        this.player.draw();
        this.updateTransport();
      }
      this.win.requestAnimationFrame(step);
    };
    this.win.requestAnimationFrame(step);
  }
}

/** Tick range covered by a sample: its 32 action frames in source ticks.
 * Commands attached to frame t were issued at tick t-1. */
export function sampleWindow(replay: ReplayResponse, slot: number,
                             length = 32, evalStride = 32): SampleWindow | null {
  const pov = replay.pov as 'p1' | 'p2';
  const actionTicks: number[] = [];
  for (const frame of replay.frames) {
    if (frame.commands[pov].some((c) => c.a !== 'noop')) {
      actionTicks.push(frame.tick - 1);
    }
  }
  const offset = slot * evalStride;
  if (offset >= actionTicks.length) return null;
  const end = Math.min(offset + length - 1, actionTicks.length - 1);
  return { startTick: actionTicks[offset], endTick: actionTicks[end] };
}

export function bootstrap(win: Window, api?: ApiClient): ExplorerApp {
  const root = win.document.getElementById('app');
  if (!root) throw new Error('missing #app element');
  const client = api ?? new ApiClient((url) => win.fetch(url));
  const app = new ExplorerApp(root, client, win);
  void app.init();
  return app;
}
