/**
 * Wire types for the clarification gateway HTTP API.
 *
 * These mirror the JSON the gateway actually sends (see ../schemas/ in the
 * repository root for the authoritative JSON Schemas).  The UI renders these
 * shapes verbatim; it never derives or recomputes dialogue content.
 */

export type Phase = "inquiring" | "done" | "aborted";

/** One missing-detail entry from the assistant's opening judgment. */
export interface MenuEntry {
  description: string;
  options: string[];
}

/** An assistant question, with the option chips to render alongside it. */
export interface InquiryMove {
  type: "inquiry";
  thought: string;
  question: string;
  options: string[];
}

/** The closing move: clarified goal plus one constraint per inquiry round. */
export interface SummaryMove {
  type: "summary";
  thought: string;
  constraints: string[];
  summary: string;
}

export type Move = InquiryMove | SummaryMove;

/** The session envelope returned by every gateway call. */
export interface Envelope {
  session_id: string;
  task: string;
  phase: Phase;
  rounds_used: number;
  max_rounds: number;
  judged_vague: boolean;
  menu: MenuEntry[];
  move: Move | null;
  constraint_count_ok: boolean | null;
  annotations_recorded: number;
}

export interface TranscriptTurn {
  role: "system" | "user" | "assistant";
  content: string;
}

/** GET /sessions/{id}/handoff — what the downstream executor receives. */
export interface Handoff {
  session_id: string;
  task: string;
  t_user: string;
  judged_vague: boolean;
  constraints: string[];
  rounds_used: number;
  transcript: TranscriptTurn[];
}

export interface GatewayErrorBody {
  error: { code: string; message: string };
}

/** Per-round annotation counters, filed together with the reply. */
export interface RoundAnnotations {
  options_provided: number;
  options_reasonable: number;
}

/** End-of-session annotation counters, filed once after the summary. */
export interface OutcomeAnnotations {
  intentions_provided: number;
  intentions_summarized: number;
}
