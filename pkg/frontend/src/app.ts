/**
 * Browser bootstrap: wires the pure state/render modules to the DOM.
 *
 * One active session per tab.  Sends are optimistic — the user bubble
 * appears immediately, and a busy gateway answer turns into a retry banner
 * instead of losing the reply.
 */

import { ApiError, GatewayClient } from "./client.js";
import {
  canSend,
  canStart,
  initialState,
  reduce,
  roundAnnotations,
  type ChatViewState,
  type UiEvent,
} from "./state.js";
import { renderApp } from "./render.js";
import type { RoundAnnotations } from "./types.js";

export class ChatApp {
  private state: ChatViewState = initialState();
  private draft = "";
  /** Annotations captured when the pending reply was first sent, for retry. */
  private pendingAnnotations: RoundAnnotations | undefined;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: GatewayClient,
  ) {
    root.addEventListener("click", (e) => this.onClick(e));
    root.addEventListener("submit", (e) => this.onSubmit(e));
    root.addEventListener("change", (e) => this.onChange(e));
    root.addEventListener("input", (e) => this.onInput(e));
    this.paint();
  }

  private dispatch(event: UiEvent): void {
    this.state = reduce(this.state, event);
    this.paint();
  }

  private paint(): void {
    this.root.innerHTML = renderApp(this.state, this.draft);
    const input = this.root.querySelector<HTMLInputElement>(".composer input");
    if (input) {
      input.value = this.draft;
      input.focus();
      input.setSelectionRange(this.draft.length, this.draft.length);
    }
  }

  private onInput(e: Event): void {
    const target = e.target as HTMLInputElement;
    if (target.matches(".composer input")) {
      this.draft = target.value;
      const button = this.root.querySelector<HTMLButtonElement>(
        ".composer button[type=submit]",
      );
      if (button) {
        button.disabled =
          this.state.phase === "idle"
            ? this.draft.trim().length === 0
            : !canSend(this.state, this.draft);
      }
    }
  }

  private onClick(e: Event): void {
    const target = e.target as HTMLElement;
    const chip = target.closest<HTMLButtonElement>("button[data-chip-index]");
    if (chip && !chip.disabled) {
      void this.send(chip.textContent ?? "");
      return;
    }
    const action = target.closest<HTMLElement>("[data-action]");
    if (!action) {
      return;
    }
    switch (action.getAttribute("data-action")) {
      case "retry":
        void this.retry();
        break;
      case "dismiss":
        this.dispatch({ kind: "dismiss-banner" });
        break;
      case "copy-handoff":
        void this.copyHandoff();
        break;
    }
  }

  private onChange(e: Event): void {
    const target = e.target as HTMLInputElement;
    if (target.matches("[data-action=evaluation-mode]")) {
      this.dispatch({ kind: "set-evaluation-mode", on: target.checked });
    } else if (target.matches("[data-toggle-index]")) {
      const index = Number(target.getAttribute("data-toggle-index"));
      this.dispatch({ kind: "toggle-reasonable", index });
    }
  }

  private onSubmit(e: Event): void {
    e.preventDefault();
    const form = e.target as HTMLFormElement;
    switch (form.getAttribute("data-form")) {
      case "start":
        void this.start();
        break;
      case "reply":
        void this.send(this.draft);
        break;
      case "outcome":
        void this.fileOutcome(form);
        break;
    }
  }

  private async start(): Promise<void> {
    if (!canStart(this.state, this.draft)) {
      return;
    }
    const task = this.draft.trim();
    this.draft = "";
    try {
      const envelope = await this.client.openSession(task);
      this.dispatch({ kind: "envelope", envelope });
    } catch (error) {
      this.fail(error);
    }
  }

  private async send(text: string): Promise<void> {
    if (!canSend(this.state, text)) {
      return;
    }
    const reply = text.trim();
    this.pendingAnnotations = roundAnnotations(this.state);
    this.draft = "";
    this.dispatch({ kind: "sent", text: reply });
    await this.deliver(reply);
  }

  private async retry(): Promise<void> {
    const reply = this.state.pendingReply;
    if (reply !== null) {
      this.dispatch({ kind: "dismiss-banner" });
      await this.deliver(reply);
    }
  }

  private async deliver(reply: string): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null) {
      return;
    }
    try {
      const envelope = await this.client.reply(
        sessionId,
        reply,
        this.pendingAnnotations,
      );
      this.pendingAnnotations = undefined;
      this.dispatch({ kind: "envelope", envelope });
    } catch (error) {
      this.fail(error);
    }
  }

  private async fileOutcome(form: HTMLFormElement): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null) {
      return;
    }
    const data = new FormData(form);
    try {
      const envelope = await this.client.annotateOutcome(sessionId, {
        intentions_provided: Number(data.get("intentions_provided") ?? 0),
        intentions_summarized: Number(data.get("intentions_summarized") ?? 0),
      });
      this.dispatch({ kind: "envelope", envelope });
    } catch (error) {
      this.fail(error);
    }
  }

  private async copyHandoff(): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null) {
      return;
    }
    try {
      const handoff = await this.client.handoff(sessionId);
      await navigator.clipboard.writeText(JSON.stringify(handoff, null, 2));
    } catch (error) {
      this.fail(error);
    }
  }

  private fail(error: unknown): void {
    if (error instanceof ApiError) {
      this.dispatch({
        kind: "send-failed",
        status: error.status,
        code: error.code,
        message: error.message,
      });
    } else {
      this.dispatch({
        kind: "send-failed",
        status: 0,
        code: "network",
        message: error instanceof Error ? error.message : String(error),
      });
    }
  }
}

export function mount(root: HTMLElement, gatewayUrl = ""): ChatApp {
  return new ChatApp(root, new GatewayClient(gatewayUrl));
}
