import { ApiClient } from "./api.js";
import type { CandidateView, ChatTurn, RespondResponse } from "./types.js";

/** Chat state: the turn list and the single in-flight request gate.
 *
 * send() appends the human turn immediately, then either an engine turn
 * (with the full response payload) or an error turn that preserves the
 * failed message for retry. Only one request may be in flight; input is
 * expected to stay disabled while `busy` is true.
 */
export class ChatSession {
  readonly turns: ChatTurn[] = [];
  busy = false;

  constructor(
    private readonly api: ApiClient,
    private readonly now: () => number = () => Date.now(),
  ) {}

  async send(text: string): Promise<ChatTurn> {
    const trimmed = text.trim();
    if (!trimmed) {
      throw new Error("empty message");
    }
    if (this.busy) {
      throw new Error("a request is already in flight");
    }
    this.busy = true;
    this.turns.push({ author: "human", text: trimmed, timestamp: this.now() });
    try {
      const response = await this.api.respond(trimmed);
      const top = response.candidates[0];
      const turn: ChatTurn = {
        author: "engine",
        text: top ? top.response : "(no candidates)",
        timestamp: this.now(),
        response,
      };
      this.turns.push(turn);
      return turn;
    } catch (err) {
      const turn: ChatTurn = {
        author: "error",
        text: err instanceof Error ? err.message : String(err),
        timestamp: this.now(),
        failedMessage: trimmed,
      };
      this.turns.push(turn);
      return turn;
    } finally {
      this.busy = false;
    }
  }

  /** Re-send the message of the most recent error turn. */
  async retry(): Promise<ChatTurn | undefined> {
    for (let i = this.turns.length - 1; i >= 0; i--) {
      const turn = this.turns[i];
      if (turn.author === "error" && turn.failedMessage) {
        return this.send(turn.failedMessage);
      }
      if (turn.author === "engine") {
        return undefined; // nothing failed since the last success
      }
    }
    return undefined;
  }

  lastEngineTurn(): ChatTurn | undefined {
    for (let i = this.turns.length - 1; i >= 0; i--) {
      if (this.turns[i].author === "engine") {
        return this.turns[i];
      }
    }
    return undefined;
  }
}

/** Mirror of the server candidates, no mutation beyond shape projection. */
export function candidateViews(response: RespondResponse): CandidateView[] {
  return response.candidates.map((c) => ({
    rank: c.rank,
    response: c.response,
    post: c.post,
    score: c.score,
    features: c.features,
    breakdown: c.breakdown,
  }));
}

export function candidateByRank(
  response: RespondResponse,
  rank: number,
): CandidateView | undefined {
  return candidateViews(response).find((c) => c.rank === rank);
}
