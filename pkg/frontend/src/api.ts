// Thin typed client over the explorer service; fetch is injectable so
// tests can stub the network.

import {
  MetricsResponse,
  ProjectionResponse,
  ReplayResponse,
  SchemesResponse,
} from './types.js';

export type FetchLike = (url: string) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export class ApiClient {
  constructor(
    private fetchImpl: FetchLike,
    private base = '',
  ) {}

  private async get<T>(path: string): Promise<T> {
    const resp = await this.fetchImpl(this.base + path);
    if (!resp.ok) {
      const body = (await resp.json().catch(() => ({}))) as { detail?: string };
      throw new Error(body.detail ?? `request failed: ${resp.status}`);
    }
    return (await resp.json()) as T;
  }

  schemes(): Promise<SchemesResponse> {
    return this.get('/api/schemes');
  }

  projection(group: string, k: number, scheme?: string): Promise<ProjectionResponse> {
    const params = new URLSearchParams({ group, k: String(k) });
    if (scheme) params.set('scheme', scheme);
    return this.get(`/api/projection?${params}`);
  }

  replay(traceId: string): Promise<ReplayResponse> {
    return this.get(`/api/trace/${encodeURIComponent(traceId)}/replay`);
  }

  metrics(scheme: string): Promise<MetricsResponse> {
    return this.get(`/api/metrics?scheme=${encodeURIComponent(scheme)}`);
  }
}
