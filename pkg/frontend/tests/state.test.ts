import { describe, expect, it } from 'vitest';

import { DEFAULT_STATE, ViewState, decodeState, encodeState } from '../src/state.js';

describe('view state url codec', () => {
  it('round-trips a full state', () => {
    const state: ViewState = {
      scheme: 'actions',
      group: 'L,p2,0',
      k: 13,
      colorMode: 'clusters',
      selectedId: 'L-a-b-r3-p2-s0',
      speed: 25,
    };
    expect(decodeState('#' + encodeState(state))).toEqual(state);
  });

  it('omits defaults from the url', () => {
    const encoded = encodeState({ ...DEFAULT_STATE, scheme: 'actions', group: 'A,p1,0', k: 4 });
    expect(encoded).not.toContain('color=');
    expect(encoded).not.toContain('speed=');
    expect(encoded).not.toContain('sel=');
  });

  it('decodes an empty hash to defaults', () => {
    expect(decodeState('')).toEqual(DEFAULT_STATE);
    expect(decodeState('#')).toEqual(DEFAULT_STATE);
  });

  it('handles group names with commas', () => {
    const state = { ...DEFAULT_STATE, group: 'A,p1,0' };
    expect(decodeState('#' + encodeState(state)).group).toBe('A,p1,0');
  });
});
