// View state and its URL (hash) encoding, so every view deep-links.

export type ColorMode = 'labels' | 'clusters';

export interface ViewState {
  scheme: string | null;
  group: string | null;
  k: number | null;
  colorMode: ColorMode;
  selectedId: string | null;
  speed: number; // replay ticks per second
}

export const DEFAULT_STATE: ViewState = {
  scheme: null,
  group: null,
  k: null,
  colorMode: 'labels',
  selectedId: null,
  speed: 10,
};

export function encodeState(state: ViewState): string {
  const params = new URLSearchParams();
  if (state.scheme) params.set('scheme', state.scheme);
  if (state.group) params.set('group', state.group);
  if (state.k !== null) params.set('k', String(state.k));
  if (state.colorMode !== 'labels') params.set('color', state.colorMode);
  if (state.selectedId) params.set('sel', state.selectedId);
  if (state.speed !== DEFAULT_STATE.speed) params.set('speed', String(state.speed));
  return params.toString();
}

export function decodeState(hash: string): ViewState {
  const params = new URLSearchParams(hash.replace(/^#/, ''));
  const k = params.get('k');
  const speed = params.get('speed');
  return {
    scheme: params.get('scheme'),
    group: params.get('group'),
    k: k !== null ? Number(k) : null,
    colorMode: params.get('color') === 'clusters' ? 'clusters' : 'labels',
    selectedId: params.get('sel'),
    speed: speed !== null ? Number(speed) : DEFAULT_STATE.speed,
  };
}
