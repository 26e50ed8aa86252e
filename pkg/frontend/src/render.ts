import type { CandidateView, ChatTurn } from "./types.js";

const escapeHtml = (s: string): string =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");

export const fmt = (x: number): string => x.toFixed(4);

export function renderTurn(turn: ChatTurn, index: number): string {
  if (turn.author === "human") {
    return `<div class="turn human"><span class="who">you</span>` +
      `<span class="text">${escapeHtml(turn.text)}</span></div>`;
  }
  if (turn.author === "error") {
    return `<div class="turn error" data-turn="${index}">` +
      `<span class="who">engine</span>` +
      `<span class="text">${escapeHtml(turn.text)}</span>` +
      `<button class="retry" data-action="retry">retry</button></div>`;
  }
  const n = turn.response?.candidates.length ?? 0;
  const toggle = n > 0
    ? `<button class="expand" data-action="expand" data-turn="${index}">` +
      `${n} candidate${n === 1 ? "" : "s"}</button>`
    : "";
  return `<div class="turn engine" data-turn="${index}">` +
    `<span class="who">engine</span>` +
    `<span class="text">${escapeHtml(turn.text)}</span>${toggle}</div>`;
}

export function renderCandidateList(views: CandidateView[], turnIndex: number): string {
  if (views.length === 0) {
    return `<div class="candidates empty">no candidates</div>`;
  }
  const rows = views.map((v) =>
    `<li><button class="inspect" data-action="inspect" ` +
    `data-turn="${turnIndex}" data-rank="${v.rank}">#${v.rank}</button> ` +
    `<span class="score">${fmt(v.score)}</span> ` +
    `<span class="text">${escapeHtml(v.response)}</span></li>`).join("");
  return `<ol class="candidates">${rows}</ol>`;
}

/** Feature bars scale against the largest |weighted| term of the candidate. */
export function renderInspector(view: CandidateView): string {
  const names = Object.keys(view.breakdown);
  const maxAbs = Math.max(1e-12, ...names.map((n) =>
    Math.abs(view.breakdown[n].weighted)));
  let sum = 0;
  const rows = names.map((name) => {
    const term = view.breakdown[name];
    sum += term.weighted;
    const width = Math.round((Math.abs(term.weighted) / maxAbs) * 100);
    const sign = term.weighted >= 0 ? "pos" : "neg";
    return `<tr><td class="name">${escapeHtml(name)}</td>` +
      `<td class="num">${fmt(term.raw)}</td>` +
      `<td class="num">${fmt(term.standardized)}</td>` +
      `<td class="num">${fmt(term.weight)}</td>` +
      `<td class="num weighted">${fmt(term.weighted)}</td>` +
      `<td class="bar"><span class="fill ${sign}" style="width:${width}%"></span></td></tr>`;
  }).join("");
  return `<div class="inspector" data-rank="${view.rank}">` +
    `<h3>candidate #${view.rank}</h3>` +
    `<p class="post"><strong>original post:</strong> ${escapeHtml(view.post)}</p>` +
    `<p class="response"><strong>response:</strong> ${escapeHtml(view.response)}</p>` +
    `<table class="terms"><thead><tr><th>feature</th><th>raw</th>` +
    `<th>standardized</th><th>weight</th><th>weighted</th><th></th></tr></thead>` +
    `<tbody>${rows}</tbody>` +
    `<tfoot><tr><td colspan="4">sum of weighted terms</td>` +
    `<td class="num sum">${fmt(sum)}</td><td></td></tr>` +
    `<tr><td colspan="4">final score</td>` +
    `<td class="num final">${fmt(view.score)}</td><td></td></tr></tfoot>` +
    `</table></div>`;
}
