/**
 * Chat view state: a pure fold over the gateway envelope stream.
 *
 * `reduce` never mutates, never talks to the network, and never interprets
 * dialogue text — replaying the same events always reproduces the same
 * state, which is exactly how the replay tests verify the UI.
 */

import type { Envelope, MenuEntry, Phase, RoundAnnotations } from "./types.js";

/** One transcript entry: an assistant question card or a user bubble. */
export interface QuestionCard {
  role: "assistant";
  round: number;
  question: string;
  /** Chips are exactly the envelope's options array, in order. */
  chips: string[];
}

export interface UserBubble {
  role: "user";
  text: string;
}

export type ChatMessage = QuestionCard | UserBubble;

export interface SummaryPanel {
  text: string;
  constraints: string[];
}

export interface Banner {
  message: string;
  /** True for transient failures (busy session): the UI offers a retry. */
  retryable: boolean;
}

export interface ChatViewState {
  sessionId: string | null;
  task: string;
  phase: Phase | "idle";
  roundsUsed: number;
  maxRounds: number;
  judgedVague: boolean | null;
  menu: MenuEntry[];
  messages: ChatMessage[];
  summary: SummaryPanel | null;
  constraintCountOk: boolean | null;
  annotationsRecorded: number;
  banner: Banner | null;
  /** Reply sent but not yet acknowledged by an envelope. */
  pendingReply: string | null;
  /** Annotation controls stay collapsed unless evaluation mode is on. */
  evaluationMode: boolean;
  /** Per-chip "reasonable option" toggles for the current question. */
  reasonableToggles: boolean[];
}

export type UiEvent =
  | { kind: "envelope"; envelope: Envelope }
  | { kind: "sent"; text: string }
  | { kind: "send-failed"; status: number; code: string; message: string }
  | { kind: "toggle-reasonable"; index: number }
  | { kind: "set-evaluation-mode"; on: boolean }
  | { kind: "dismiss-banner" }
  | { kind: "reset" };

export function initialState(): ChatViewState {
  return {
    sessionId: null,
    task: "",
    phase: "idle",
    roundsUsed: 0,
    maxRounds: 0,
    judgedVague: null,
    menu: [],
    messages: [],
    summary: null,
    constraintCountOk: null,
    annotationsRecorded: 0,
    banner: null,
    pendingReply: null,
    evaluationMode: false,
    reasonableToggles: [],
  };
}

function lastQuestionRound(messages: ChatMessage[]): number {
  for (let i = messages.length - 1; i >= 0; i--) {
    const message = messages[i];
    if (message.role === "assistant") {
      return message.round;
    }
  }
  return 0;
}

function applyEnvelope(state: ChatViewState, envelope: Envelope): ChatViewState {
  const next: ChatViewState = {
    ...state,
    sessionId: envelope.session_id,
    task: envelope.task,
    phase: envelope.phase,
    roundsUsed: envelope.rounds_used,
    maxRounds: envelope.max_rounds,
    judgedVague: envelope.judged_vague,
    menu: envelope.menu,
    constraintCountOk: envelope.constraint_count_ok,
    annotationsRecorded: envelope.annotations_recorded,
    banner: null,
    pendingReply: null,
  };
  const move = envelope.move;
  if (move === null) {
    return next;
  }
  if (move.type === "inquiry") {
    // One question card per round; re-delivered envelopes must not duplicate.
    if (envelope.rounds_used > lastQuestionRound(state.messages)) {
      next.messages = [
        ...state.messages,
        {
          role: "assistant",
          round: envelope.rounds_used,
          question: move.question,
          chips: [...move.options],
        },
      ];
      next.reasonableToggles = move.options.map(() => false);
    }
    return next;
  }
  next.summary = { text: move.summary, constraints: [...move.constraints] };
  next.reasonableToggles = [];
  return next;
}

export function reduce(state: ChatViewState, event: UiEvent): ChatViewState {
  switch (event.kind) {
    case "envelope":
      return applyEnvelope(state, event.envelope);
    case "sent":
      return {
        ...state,
        messages: [...state.messages, { role: "user", text: event.text }],
        pendingReply: event.text,
        banner: null,
      };
    case "send-failed": {
      const retryable = event.code === "busy";
      return {
        ...state,
        banner: { message: event.message, retryable },
        // A busy reply may be retried verbatim; anything else is dropped.
        pendingReply: retryable ? state.pendingReply : null,
      };
    }
    case "toggle-reasonable": {
      if (event.index < 0 || event.index >= state.reasonableToggles.length) {
        return state;
      }
      const toggles = [...state.reasonableToggles];
      toggles[event.index] = !toggles[event.index];
      return { ...state, reasonableToggles: toggles };
    }
    case "set-evaluation-mode":
      return { ...state, evaluationMode: event.on };
    case "dismiss-banner":
      return { ...state, banner: null };
    case "reset":
      return initialState();
  }
}

/** Sending is only possible while the gateway is asking questions. */
export function canSend(state: ChatViewState, draft: string): boolean {
  return (
    state.phase === "inquiring" &&
    draft.trim().length > 0 &&
    state.pendingReply === null
  );
}

/** A conversation can start from scratch with a non-empty task only. */
export function canStart(state: ChatViewState, task: string): boolean {
  return state.phase === "idle" && task.trim().length > 0;
}

/**
 * The annotation payload for the *current* question: how many options the
 * assistant presented (the chip count) and how many the user marked
 * reasonable.  Returns undefined when there is nothing to annotate or
 * evaluation mode is off, so casual replies carry no annotations at all.
 */
export function roundAnnotations(
  state: ChatViewState,
): RoundAnnotations | undefined {
  if (!state.evaluationMode || state.reasonableToggles.length === 0) {
    return undefined;
  }
  return {
    options_provided: state.reasonableToggles.length,
    options_reasonable: state.reasonableToggles.filter(Boolean).length,
  };
}

/**
 * Flat view of the transcript for assertions and copy/export: question texts
 * with their chips, the user replies, and the final constraint list.
 */
export interface TranscriptView {
  questions: string[];
  chips: string[][];
  replies: string[];
  constraints: string[];
  summary: string | null;
}

export function transcriptView(state: ChatViewState): TranscriptView {
  const questions: string[] = [];
  const chips: string[][] = [];
  const replies: string[] = [];
  for (const message of state.messages) {
    if (message.role === "assistant") {
      questions.push(message.question);
      chips.push([...message.chips]);
    } else {
      replies.push(message.text);
    }
  }
  return {
    questions,
    chips,
    replies,
    constraints: state.summary ? [...state.summary.constraints] : [],
    summary: state.summary ? state.summary.text : null,
  };
}

/** Fold a recorded stream of events into a final state (replay helper). */
export function replay(events: UiEvent[]): ChatViewState {
  return events.reduce(reduce, initialState());
}
