// Typed client for the assistant's HTTP JSON API.
/** Non-2xx reply; carries the HTTP status so callers can branch on 404. */
export class ApiError extends Error {
    status;
    constructor(status, message) {
        super(message);
        this.status = status;
        this.name = "ApiError";
    }
}
async function parseError(response) {
    let detail = response.statusText;
    try {
        const body = (await response.json());
        if (body.error)
            detail = body.error;
    }
    catch {
        // non-JSON error body; keep the status text
    }
    return new ApiError(response.status, detail);
}
export class ChatApi {
    baseUrl;
    fetchFn;
    constructor(baseUrl = "", fetchFn = fetch) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn;
    }
    async request(path, init) {
        const response = await this.fetchFn(this.baseUrl + path, init);
        if (!response.ok)
            throw await parseError(response);
        return response;
    }
    async createSession() {
        const response = await this.request("/v2/sessions", { method: "POST" });
        const body = (await response.json());
        return body.session_id;
    }
    async sendMessage(sessionId, text, context) {
        const payload = { input: { text } };
        if (context)
            payload.context = context;
        const response = await this.request(`/v2/sessions/${sessionId}/message`, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(payload),
        });
        return (await response.json());
    }
    async deleteSession(sessionId) {
        await this.request(`/v2/sessions/${sessionId}`, { method: "DELETE" });
    }
    async health() {
        const response = await this.request("/health");
        return (await response.json());
    }
}
