// Typed client for the assistant's HTTP JSON API.

export interface IntentScore {
  intent: string;
  confidence: number;
}

export interface EntityMentionPayload {
  entity: string;
  value: unknown;
  location: [number, number];
  confidence: number;
}

export interface GenericResponse {
  response_type: string;
  text: string;
}

export interface MessageOutput {
  generic: GenericResponse[];
  intents: IntentScore[];
  entities: EntityMentionPayload[];
  corrected_text?: string;
}

export interface MessageResponse {
  output: MessageOutput;
  context: Record<string, unknown>;
}

export interface HealthResponse {
  status: string;
  skill: string;
  intents: number;
  entities: number;
  uptime_seconds: number;
}

/** Non-2xx reply; carries the HTTP status so callers can branch on 404. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { error?: string };
    if (body.error) detail = body.error;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(response.status, detail);
}

export class ChatApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) throw await parseError(response);
    return response;
  }

  async createSession(): Promise<string> {
    const response = await this.request("/v2/sessions", { method: "POST" });
    const body = (await response.json()) as { session_id: string };
    return body.session_id;
  }

  async sendMessage(
    sessionId: string,
    text: string,
    context?: Record<string, unknown>,
  ): Promise<MessageResponse> {
    const payload: Record<string, unknown> = { input: { text } };
    if (context) payload.context = context;
    const response = await this.request(`/v2/sessions/${sessionId}/message`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
    return (await response.json()) as MessageResponse;
  }

  async deleteSession(sessionId: string): Promise<void> {
    await this.request(`/v2/sessions/${sessionId}`, { method: "DELETE" });
  }

  async health(): Promise<HealthResponse> {
    const response = await this.request("/health");
    return (await response.json()) as HealthResponse;
  }
}
