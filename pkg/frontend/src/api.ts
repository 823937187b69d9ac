/**
 * Typed client for the driftsearch planning service (/v1).
 *
 * The console never computes probabilities itself: every number it shows
 * comes from these endpoints.
 */

export interface TopCell {
  lat: number;
  lon: number;
  probability: number;
}

export interface SnapshotSummary {
  index: number;
  label: string;
  n_particles: number;
  effective_sample_size: number;
  top_cell: TopCell;
}

export interface ContainmentDisk {
  center_lat: number;
  center_lon: number;
  radius_m: number;
}

export interface SessionState {
  session_id: string;
  config_digest: string;
  disk: ContainmentDisk;
  chain: SnapshotSummary[];
  increments: unknown[];
}

export interface GridResponse {
  label: string;
  nx: number;
  ny: number;
  cell_size_m: number;
  extent_m: [number, number, number, number];
  origin: { lat: number; lon: number };
  /** rows south to north (iy ascending) */
  values: number[][];
  max_value: number;
  off_extent_mass: number;
}

export interface AllocationCell {
  ix: number;
  iy: number;
  lat: number;
  lon: number;
  effort_hours: number;
  prior_probability: number;
}

export interface AllocationResponse {
  snapshot: number;
  budget_hours: number;
  achieved_detection_probability: number;
  spent_hours: number;
  cell_size_m: number;
  cells: AllocationCell[];
}

export interface ManifestStage {
  label: string;
  snapshot_digest: string;
}

export interface Manifest {
  config_digest: string;
  versions: Record<string, string>;
  stages: ManifestStage[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function parseError(resp: Response): Promise<never> {
  let detail = resp.statusText;
  try {
    const body = (await resp.json()) as { detail?: unknown };
    if (body.detail !== undefined) detail = JSON.stringify(body.detail);
  } catch {
    // non-JSON error body: keep the status text
  }
  throw new ApiError(resp.status, detail);
}

export class PlanningClient {
  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`);
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as T;
  }

  private async postJson<T>(path: string, body: unknown): Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!resp.ok) await parseError(resp);
    return (await resp.json()) as T;
  }

  health(): Promise<{ status: string; version: string }> {
    return this.getJson("/v1/health");
  }

  createSession(config?: unknown): Promise<SessionState> {
    return this.postJson("/v1/sessions", config ? { config } : {});
  }

  listSessions(): Promise<{ sessions: SessionState[] }> {
    return this.getJson("/v1/sessions");
  }

  sessionState(sid: string): Promise<SessionState> {
    return this.getJson(`/v1/sessions/${sid}`);
  }

  chain(sid: string): Promise<{ chain: SnapshotSummary[] }> {
    return this.getJson(`/v1/sessions/${sid}/chain`);
  }

  submitIncrement(sid: string, spec: unknown): Promise<SnapshotSummary> {
    return this.postJson(`/v1/sessions/${sid}/increments`, spec);
  }

  undo(sid: string, to: number): Promise<SessionState> {
    return this.postJson(`/v1/sessions/${sid}/undo`, { to });
  }

  grid(sid: string, snapshot: number, cellM?: number): Promise<GridResponse> {
    const q = cellM ? `?cell_m=${cellM}` : "";
    return this.getJson(`/v1/sessions/${sid}/snapshots/${snapshot}/grid${q}`);
  }

  async heatmapPng(sid: string, snapshot: number, cellM?: number): Promise<Uint8Array> {
    const q = cellM ? `?cell_m=${cellM}` : "";
    const resp = await this.fetchFn(
      `${this.baseUrl}/v1/sessions/${sid}/snapshots/${snapshot}/heatmap.png${q}`,
    );
    if (!resp.ok) await parseError(resp);
    return new Uint8Array(await resp.arrayBuffer());
  }

  manifest(sid: string): Promise<Manifest> {
    return this.getJson(`/v1/sessions/${sid}/manifest`);
  }

  allocation(
    sid: string,
    budgetHours: number,
    opts: { cellM?: number; sweepRatePerHour?: number; snapshot?: number } = {},
  ): Promise<AllocationResponse> {
    return this.postJson(`/v1/sessions/${sid}/allocation`, {
      budget_hours: budgetHours,
      cell_size_m: opts.cellM,
      sweep_rate_per_hour: opts.sweepRatePerHour,
      snapshot: opts.snapshot,
    });
  }
}
