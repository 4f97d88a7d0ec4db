// Conversation state machine, kept free of DOM concerns so it can be
// exercised directly in tests. One message is in flight at a time; an
// expired session is recreated transparently (the transcript survives
// client-side) and transport failures preserve the input for a retry.

import { ApiError, ChatApi, EntityMentionPayload, IntentScore, MessageResponse } from "./api.js";

export interface DebugInfo {
  intents: IntentScore[];
  entities: EntityMentionPayload[];
  correctedText?: string;
}

export interface Turn {
  author: "user" | "assistant" | "system" | "error";
  text: string;
  debug?: DebugInfo;
}

export class ChatController {
  readonly turns: Turn[] = [];
  debugEnabled = false;
  busy = false;
  /** set after a transport failure so the view can refill the input box */
  pendingInput: string | null = null;

  private sessionId: string | null = null;
  private listeners: Array<() => void> = [];

  constructor(private readonly api: ChatApi) {}

  get session(): string | null {
    return this.sessionId;
  }

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  toggleDebug(): void {
    this.debugEnabled = !this.debugEnabled;
    this.notify();
  }

  async startConversation(): Promise<void> {
    this.sessionId = await this.api.createSession();
    this.notify();
  }

  async retry(): Promise<void> {
    const text = this.pendingInput;
    if (text === null) return;
    this.pendingInput = null;
    await this.send(text);
  }

  async send(text: string): Promise<void> {
    const trimmed = text.trim();
    if (!trimmed || this.busy) return;
    this.busy = true;
    this.pendingInput = null;
    const userTurn: Turn = { author: "user", text: trimmed };
    this.turns.push(userTurn);
    this.notify();
    try {
      if (this.sessionId === null) {
        this.sessionId = await this.api.createSession();
      }
      const response = await this.sendWithRecovery(trimmed);
      this.appendAssistantTurns(response);
    } catch (error) {
      if (error instanceof ApiError) {
        // the service rejected the message; surface it inline
        this.turns.push({ author: "error", text: `error ${error.status}: ${error.message}` });
      } else {
        // transport failure: the message never arrived, so withdraw it and
        // keep the text around for a retry
        const index = this.turns.lastIndexOf(userTurn);
        if (index >= 0) this.turns.splice(index, 1);
        this.pendingInput = trimmed;
        this.turns.push({ author: "error", text: "network error - check the service and retry" });
      }
    } finally {
      this.busy = false;
      this.notify();
    }
  }

  private async sendWithRecovery(text: string): Promise<MessageResponse> {
    try {
      return await this.api.sendMessage(this.sessionId as string, text);
    } catch (error) {
      if (!(error instanceof ApiError) || error.status !== 404) throw error;
      // expired or deleted server-side: open a fresh session and resend
      this.sessionId = await this.api.createSession();
      this.turns.push({ author: "system", text: "session expired - started a new one" });
      this.notify();
      return await this.api.sendMessage(this.sessionId, text);
    }
  }

  private appendAssistantTurns(response: MessageResponse): void {
    const debug: DebugInfo = {
      intents: response.output.intents,
      entities: response.output.entities,
      correctedText: response.output.corrected_text,
    };
    const texts = response.output.generic
      .filter((item) => item.response_type === "text")
      .map((item) => item.text);
    texts.forEach((text, index) => {
      this.turns.push({
        author: "assistant",
        text,
        debug: index === 0 ? debug : undefined,
      });
    });
    if (texts.length === 0) {
      this.turns.push({ author: "assistant", text: "", debug });
    }
  }
}
