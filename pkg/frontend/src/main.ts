import { ApiClient } from "./api.js";
import { renderCandidateList, renderInspector, renderTurn } from "./render.js";
import { candidateByRank, candidateViews, ChatSession } from "./session.js";

const api = new ApiClient("");
const session = new ChatSession(api);

const turnsEl = document.getElementById("turns") as HTMLDivElement;
const inputEl = document.getElementById("message") as HTMLInputElement;
const sendEl = document.getElementById("send") as HTMLButtonElement;
const inspectorEl = document.getElementById("inspector") as HTMLDivElement;
const statusEl = document.getElementById("status") as HTMLSpanElement;

const expanded = new Set<number>();

function redraw(): void {
  turnsEl.innerHTML = session.turns.map((turn, i) => {
    let html = renderTurn(turn, i);
    if (turn.author === "engine" && turn.response && expanded.has(i)) {
      html += renderCandidateList(candidateViews(turn.response), i);
    }
    return html;
  }).join("");
  inputEl.disabled = session.busy;
  sendEl.disabled = session.busy;
  turnsEl.scrollTop = turnsEl.scrollHeight;
}

async function submit(): Promise<void> {
  const text = inputEl.value;
  if (!text.trim() || session.busy) {
    return;
  }
  inputEl.value = "";
  const pending = session.send(text);
  redraw();
  const turn = await pending;
  if (turn.author === "error") {
    inputEl.value = text; // non-destructive: the message survives the failure
  }
  redraw();
}

sendEl.addEventListener("click", () => void submit());
inputEl.addEventListener("keydown", (ev) => {
  if (ev.key === "Enter") {
    void submit();
  }
});

turnsEl.addEventListener("click", (ev) => {
  const target = ev.target as HTMLElement;
  const action = target.dataset.action;
  if (action === "retry") {
    void session.retry().then(() => redraw());
    redraw();
    return;
  }
  if (action === "expand") {
    const idx = Number(target.dataset.turn);
    if (expanded.has(idx)) {
      expanded.delete(idx);
    } else {
      expanded.add(idx);
    }
    redraw();
    return;
  }
  if (action === "inspect") {
    const idx = Number(target.dataset.turn);
    const rank = Number(target.dataset.rank);
    const turn = session.turns[idx];
    if (turn?.response) {
      const view = candidateByRank(turn.response, rank);
      inspectorEl.innerHTML = view
        ? renderInspector(view)
        : `<div class="inspector empty">no candidates</div>`;
    }
  }
});

void api.health()
  .then((h) => {
    statusEl.textContent = h.engine_loaded ? "engine ready" : "engine not loaded";
    statusEl.className = h.engine_loaded ? "ok" : "warn";
  })
  .catch(() => {
    statusEl.textContent = "engine unreachable";
    statusEl.className = "warn";
  });
