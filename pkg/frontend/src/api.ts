// Thin typed client for the governance service. Every call except
// health() carries the X-Actor header; the service checks it against
// the team roster.

import type {
  BoardResponse,
  ClassifyResponse,
  DemotionResponse,
  EligibilityWire,
  ErosionResponse,
  EstimateWire,
  EventsResponse,
  HealthResponse,
  ItemWire,
  LintResponse,
  MetricsWire,
  PlanResponse,
  PreviewResponse,
  OutcomeResponse,
  RetroReportWire,
  SessionDetailResponse,
  SessionWire,
  TaskTypeWire,
  TierWire,
} from "./types";

export interface ApiConfig {
  baseUrl: string;
  actor: string;
  // injectable for tests; defaults to the global fetch
  fetchFn?: typeof fetch;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
    public readonly body: Record<string, unknown> | null = null,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

interface RequestOptions {
  method?: string;
  query?: Record<string, string | number | boolean | undefined>;
  body?: unknown;
  auth?: boolean;
}

export class ApiClient {
  private readonly baseUrl: string;
  readonly actor: string;
  private readonly fetchFn: typeof fetch;

  constructor(config: ApiConfig) {
    this.baseUrl = config.baseUrl.replace(/\/+$/, "");
    this.actor = config.actor;
    this.fetchFn = config.fetchFn ?? fetch;
  }

  private async request<T>(path: string, options: RequestOptions = {}): Promise<T> {
    const params = new URLSearchParams();
    for (const [key, value] of Object.entries(options.query ?? {})) {
      if (value !== undefined) params.set(key, String(value));
    }
    const qs = params.toString();
    // baseUrl may be absolute or empty for same-origin use behind the proxy
    const finalUrl = this.baseUrl + path + (qs ? `?${qs}` : "");

    const headers: Record<string, string> = {};
    if (options.auth !== false) headers["X-Actor"] = this.actor;
    if (options.body !== undefined) headers["Content-Type"] = "application/json";

    let response: Response;
    try {
      response = await this.fetchFn(finalUrl, {
        method: options.method ?? (options.body !== undefined ? "POST" : "GET"),
        headers,
        body: options.body !== undefined ? JSON.stringify(options.body) : undefined,
      });
    } catch (err) {
      throw new ApiError(0, `service unreachable: ${(err as Error).message}`);
    }

    const text = await response.text();
    let parsed: Record<string, unknown> | null = null;
    if (text) {
      try {
        parsed = JSON.parse(text) as Record<string, unknown>;
      } catch {
        parsed = null;
      }
    }
    if (!response.ok) {
      const detail =
        (parsed?.error as string) ?? (parsed?.detail as string) ?? response.statusText;
      throw new ApiError(response.status, String(detail), parsed);
    }
    return parsed as T;
  }

  health(): Promise<HealthResponse> {
    return this.request("/api/health", { auth: false });
  }

  /** Raw POST to a service path; used when replaying queued writes,
   * whose paths were fixed at enqueue time. */
  post<T = unknown>(path: string, body: Record<string, unknown>): Promise<T> {
    return this.request(path, { body });
  }

  board(): Promise<BoardResponse> {
    return this.request("/api/board");
  }

  items(): Promise<{ items: Record<string, ItemWire> }> {
    return this.request("/api/items");
  }

  item(itemId: string): Promise<ItemWire> {
    return this.request(`/api/items/${encodeURIComponent(itemId)}`);
  }

  taskType(taskTypeId: string): Promise<TaskTypeWire> {
    return this.request(`/api/task-types/${encodeURIComponent(taskTypeId)}`);
  }

  estimate(itemId: string, tier?: TierWire): Promise<EstimateWire> {
    return this.request(`/api/items/${encodeURIComponent(itemId)}/estimate`, {
      query: { tier },
    });
  }

  previewClassification(params: {
    structuredness: string;
    verifiability: string;
    consequence: string;
    capability: string;
    baseline_points?: number;
    tier?: TierWire;
    task_type_id?: string;
  }): Promise<PreviewResponse> {
    return this.request("/api/preview/classification", { query: { ...params } });
  }

  postClassification(payload: Record<string, unknown>): Promise<ClassifyResponse> {
    return this.request("/api/classifications", { body: payload });
  }

  postOutcome(payload: Record<string, unknown>): Promise<OutcomeResponse> {
    return this.request("/api/outcomes", { body: payload });
  }

  postDemotion(payload: Record<string, unknown>): Promise<DemotionResponse> {
    return this.request("/api/transitions/demotions", { body: payload });
  }

  eligibility(taskTypeId: string, capacityConfirmed = true): Promise<EligibilityWire> {
    return this.request(
      `/api/task-types/${encodeURIComponent(taskTypeId)}/eligibility`,
      { query: { capacity_confirmed: capacityConfirmed } },
    );
  }

  metrics(taskTypeId: string, cycle?: number): Promise<MetricsWire> {
    return this.request(`/api/task-types/${encodeURIComponent(taskTypeId)}/metrics`, {
      query: { cycle },
    });
  }

  lint(): Promise<LintResponse> {
    return this.request("/api/lint");
  }

  erosion(): Promise<ErosionResponse> {
    return this.request("/api/erosion");
  }

  runRetro(cycle: number, capacityConfirmed = true): Promise<RetroReportWire> {
    return this.request("/api/retro", {
      body: { cycle, capacity_confirmed: capacityConfirmed },
    });
  }

  buildPlan(payload: {
    sprint_id: string;
    cycle: number;
    item_ids: string[];
    team_validation_capacity?: number;
  }): Promise<PlanResponse> {
    return this.request("/api/plans", { body: payload });
  }

  events(after: number, waitSeconds = 0): Promise<EventsResponse> {
    return this.request("/api/events", { query: { after, wait: waitSeconds } });
  }

  sessions(): Promise<{ sessions: Record<string, SessionWire> }> {
    return this.request("/api/sessions");
  }

  session(sessionId: string, atMinutes?: number): Promise<SessionDetailResponse> {
    return this.request(`/api/sessions/${encodeURIComponent(sessionId)}`, {
      query: { at_minutes: atMinutes },
    });
  }

  postSessionEvent(
    sessionId: string,
    payload: Record<string, unknown>,
  ): Promise<{ event_id: number; session: SessionWire }> {
    return this.request(`/api/sessions/${encodeURIComponent(sessionId)}/events`, {
      body: payload,
    });
  }
}
