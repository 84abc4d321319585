/**
 * HTML renderers: view state in, markup strings out.
 *
 * Pure string builders so they are trivially testable without a DOM; app.ts
 * assigns the output to innerHTML and wires events by data attributes.  All
 * dynamic text is escaped here and nowhere else.
 */

import { canSend, type ChatViewState } from "./state.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function renderPhaseBadge(state: ChatViewState): string {
  if (state.phase === "idle") {
    return `<span class="badge badge-idle">no session</span>`;
  }
  const label =
    state.phase === "inquiring"
      ? `inquiring &middot; round ${state.roundsUsed}/${state.maxRounds}`
      : state.phase;
  return `<span class="badge badge-${state.phase}">${label}</span>`;
}

function renderChips(
  chips: string[],
  options: { current: boolean; state: ChatViewState },
): string {
  if (chips.length === 0) {
    return "";
  }
  const buttons = chips
    .map((chip, index) => {
      const pressed =
        options.current && options.state.reasonableToggles[index]
          ? ` aria-pressed="true"`
          : "";
      const disabled = options.current ? "" : ` disabled`;
      return (
        `<button class="chip" data-chip-index="${index}"` +
        `${pressed}${disabled}>${escapeHtml(chip)}</button>`
      );
    })
    .join("");
  let toggles = "";
  if (options.current && options.state.evaluationMode) {
    const boxes = chips
      .map((chip, index) => {
        const checked = options.state.reasonableToggles[index]
          ? ` checked`
          : "";
        return (
          `<label class="toggle"><input type="checkbox" ` +
          `data-toggle-index="${index}"${checked}> ` +
          `${escapeHtml(chip)} is reasonable</label>`
        );
      })
      .join("");
    toggles = `<div class="annotations">${boxes}</div>`;
  }
  return `<div class="chips">${buttons}</div>${toggles}`;
}

export function renderTranscript(state: ChatViewState): string {
  const currentRound = state.phase === "inquiring" ? state.roundsUsed : -1;
  const parts = state.messages.map((message) => {
    if (message.role === "user") {
      return `<div class="msg user">${escapeHtml(message.text)}</div>`;
    }
    const chips = renderChips(message.chips, {
      current: message.round === currentRound,
      state,
    });
    return (
      `<div class="msg assistant" data-round="${message.round}">` +
      `<p class="question">${escapeHtml(message.question)}</p>${chips}</div>`
    );
  });
  return `<div class="transcript">${parts.join("")}</div>`;
}

export function renderSummaryPanel(state: ChatViewState): string {
  if (state.summary === null) {
    return "";
  }
  const constraints = state.summary.constraints
    .map((c) => `<li>${escapeHtml(c)}</li>`)
    .join("");
  const list = constraints
    ? `<ol class="constraints">${constraints}</ol>`
    : `<p class="no-constraints">No constraints: the task was already clear.</p>`;
  let outcome = "";
  if (state.evaluationMode && state.phase === "done") {
    outcome =
      `<form class="outcome" data-form="outcome">` +
      `<label>intentions provided <input type="number" min="0" value="0" ` +
      `name="intentions_provided"></label>` +
      `<label>intentions summarized <input type="number" min="0" value="0" ` +
      `name="intentions_summarized"></label>` +
      `<button type="submit">File outcome annotation</button></form>`;
  }
  return (
    `<section class="summary-panel">` +
    `<h2>Clarified goal</h2>` +
    `<p class="t-user">${escapeHtml(state.summary.text)}</p>` +
    list +
    `<button data-action="copy-handoff">Copy handoff</button>` +
    outcome +
    `</section>`
  );
}

export function renderBanner(state: ChatViewState): string {
  if (state.banner === null) {
    return "";
  }
  const retry = state.banner.retryable
    ? `<button data-action="retry">Retry</button>`
    : "";
  return (
    `<div class="banner${state.banner.retryable ? " banner-busy" : ""}">` +
    `${escapeHtml(state.banner.message)}${retry}` +
    `<button data-action="dismiss">Dismiss</button></div>`
  );
}

export function renderComposer(state: ChatViewState, draft: string): string {
  if (state.phase === "idle") {
    const disabled = draft.trim() ? "" : " disabled";
    return (
      `<form class="composer" data-form="start">` +
      `<input name="task" placeholder="Describe your task" ` +
      `value="${escapeHtml(draft)}">` +
      `<button type="submit"${disabled}>Start</button></form>`
    );
  }
  const disabled = canSend(state, draft) ? "" : " disabled";
  return (
    `<form class="composer" data-form="reply">` +
    `<input name="reply" placeholder="Answer, or click a chip" ` +
    `value="${escapeHtml(draft)}">` +
    `<button type="submit"${disabled}>Send</button></form>`
  );
}

export function renderApp(state: ChatViewState, draft = ""): string {
  const evaluation =
    state.phase === "idle"
      ? ""
      : `<label class="eval-mode"><input type="checkbox" ` +
        `data-action="evaluation-mode"${state.evaluationMode ? " checked" : ""}>` +
        ` evaluation mode</label>`;
  return (
    `<header>${renderPhaseBadge(state)}${evaluation}</header>` +
    renderBanner(state) +
    renderTranscript(state) +
    renderSummaryPanel(state) +
    renderComposer(state, draft)
  );
}
