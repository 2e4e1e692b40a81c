// Summary polling: the service solves synchronously, but other operators'
// solves land between polls, so the console refreshes the timeline on an
// interval until the round of interest reports solved.

import { SsoaClient } from "./api.js";
import type { SessionSummary } from "./types.js";

export async function pollUntilSolved(
  client: SsoaClient,
  sessionId: string,
  round: number,
  intervalMs = 1000,
  timeoutMs = 600_000,
): Promise<SessionSummary> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const summary = await client.summary(sessionId);
    const entry = summary.rounds.find((r) => r.number === round);
    if (entry?.solved) return summary;
    if (Date.now() > deadline) {
      throw new Error(`round ${round} still unsolved after ${timeoutMs} ms`);
    }
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}
