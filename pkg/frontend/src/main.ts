// DOM glue: renders the controller state into the chat page.

import { ChatApi } from "./api.js";
import { ChatController, Turn } from "./controller.js";

declare global {
  interface Window {
    FITBOT_BASE_URL?: string;
  }
}

function baseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  return fromQuery ?? window.FITBOT_BASE_URL ?? "";
}

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found as T;
}

function debugBlock(turn: Turn): HTMLElement | null {
  if (!turn.debug) return null;
  const block = document.createElement("pre");
  block.className = "debug";
  const payload: Record<string, unknown> = {
    intents: turn.debug.intents,
    entities: turn.debug.entities,
  };
  if (turn.debug.correctedText !== undefined) {
    payload.corrected_text = turn.debug.correctedText;
  }
  block.textContent = JSON.stringify(payload, null, 2);
  return block;
}

function main(): void {
  const api = new ChatApi(baseUrl());
  const controller = new ChatController(api);

  const messages = element<HTMLDivElement>("messages");
  const input = element<HTMLTextAreaElement>("input");
  const send = element<HTMLButtonElement>("send");
  const debugToggle = element<HTMLInputElement>("debug-toggle");
  const status = element<HTMLSpanElement>("status");

  function render(): void {
    messages.replaceChildren();
    for (const turn of controller.turns) {
      const bubble = document.createElement("div");
      bubble.className = `msg ${turn.author}`;
      bubble.textContent = turn.text;
      messages.appendChild(bubble);
      if (controller.debugEnabled) {
        const block = debugBlock(turn);
        if (block) messages.appendChild(block);
      }
    }
    messages.scrollTop = messages.scrollHeight;
    input.disabled = controller.busy;
    send.disabled = controller.busy;
    if (controller.pendingInput !== null && !input.value) {
      input.value = controller.pendingInput;
    }
    status.className = controller.session ? "connected" : "";
  }

  controller.onChange(render);
  debugToggle.addEventListener("change", () => controller.toggleDebug());

  async function submit(): Promise<void> {
    const text = input.value;
    input.value = "";
    await controller.send(text);
    input.focus();
  }

  send.addEventListener("click", () => void submit());
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter" && !event.shiftKey) {
      event.preventDefault();
      void submit();
    }
  });

  controller.startConversation().catch(() => {
    controller.turns.push({
      author: "error",
      text: "cannot reach the assistant service - is it running?",
    });
    render();
  });
  render();
}

main();
