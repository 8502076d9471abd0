import { describe, expect, it } from 'vitest';

import { ReplayPlayer } from '../src/replay.js';
import { sampleWindow } from '../src/app.js';
import { FakeContext, makeReplay } from './fakes.js';

function player(ticks = 40) {
  const ctx = new FakeContext();
  const p = new ReplayPlayer(ctx, 360);
  p.load(makeReplay('A-agent0-agent1-r0-p1', ticks));
  return { ctx, p };
}

describe('replay player', () => {
  it('draws all units of the current frame', () => {
    const { ctx, p } = player();
    p.draw();
    const rects = ctx.calls.filter((c) => c.op === 'fillRect');
    const arcs = ctx.calls.filter((c) => c.op === 'arc');
    // background + 3 square units (2 bases + resource); worker drawn as arc
    expect(rects.length).toBe(1 + 3);
    expect(arcs.length).toBeGreaterThanOrEqual(1);
  });

  it('seek clamps to the frame range', () => {
    const { p } = player(10);
    p.seek(-5);
    expect(p.frameIndex).toBe(0);
    p.seek(500);
    expect(p.frameIndex).toBe(9);
  });

  it('tick advances by speed and pauses at the end', () => {
    const { p } = player(20);
    p.speed = 10;
    p.play();
    p.tick(1.0); // 10 ticks
    expect(p.frameIndex).toBe(10);
    p.tick(5.0);
    expect(p.frameIndex).toBe(19);
    expect(p.playing).toBe(false);
  });

  it('scrubbing while paused stays paused', () => {
    const { p } = player(20);
    p.pause();
    p.seek(7);
    p.tick(1.0);
    expect(p.frameIndex).toBe(7);
  });

  it('static before play', () => {
    const { p } = player(20);
    p.tick(1.0);
    expect(p.frameIndex).toBe(0);
  });
});

describe('sample window on the timeline', () => {
  it('covers exactly the source ticks of the 32-frame window', () => {
    const replay = makeReplay('t-p1', 80); // p1 acts on odd ticks => 40 action frames
    const window = sampleWindow(replay, 0);
    // action frames at ticks 1,3,5,... -> issue ticks 0,2,4,...
    expect(window).not.toBeNull();
    expect(window!.startTick).toBe(0);
    expect(window!.endTick).toBe(62); // 32nd action frame issued at tick 62
  });

  it('returns null when the slot offset exceeds the trace', () => {
    const replay = makeReplay('t-p1', 20);
    expect(sampleWindow(replay, 5)).toBeNull();
  });

  it('maps to a fraction of the timeline', () => {
    const ctx = new FakeContext();
    const p = new ReplayPlayer(ctx, 360);
    const replay = makeReplay('t-p1', 80);
    p.load(replay, sampleWindow(replay, 0));
    const span = p.windowSpan();
    expect(span).not.toBeNull();
    expect(span![0]).toBeCloseTo(0, 5);
    expect(span![1]).toBeCloseTo(62 / 80, 5);
  });
});
