// DTOs mirroring the explorer service's JSON responses.

export interface ProjectionPoint {
  id: string;
  x: number;
  y: number;
  label: string;
  map: string;
  side: string;
  slot: number;
  trace_id: string;
  clusters: Record<string, number>;
  cluster: number | null;
}

export interface ProjectionResponse {
  scheme: string;
  group: string;
  k: number;
  points: ProjectionPoint[];
}

export interface SchemeInfo {
  groups: string[];
  ks: number[];
}

export type SchemesResponse = Record<string, SchemeInfo>;

export interface ReplayUnit {
  id: number;
  owner: string | null;
  kind: string;
  x: number;
  y: number;
  hp: number;
  carried: number;
  resources: number;
}

export interface ReplayCommand {
  u: number;
  a: string;
  d?: string;
  k?: string;
  dx?: number;
  dy?: number;
}

export interface ReplayFrame {
  tick: number;
  units: ReplayUnit[];
  commands: { p1: ReplayCommand[]; p2: ReplayCommand[] };
}

export interface ReplayResponse {
  trace_id: string;
  match_id: string;
  pov: string;
  variant: string;
  agents: string[];
  outcome: string;
  ticks: number;
  width: number;
  height: number;
  frames: ReplayFrame[];
}

export interface MetricRow {
  scheme: string;
  k: number;
  train_maps: Record<string, number> | null;
  test_map: Record<string, number> | null;
}

export interface MetricsResponse {
  scheme: string;
  test_map: string;
  rows: MetricRow[];
}
