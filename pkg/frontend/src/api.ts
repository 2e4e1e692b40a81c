// Thin fetch client for the bidding service. Errors carry the backend's
// detail string so the UI can surface rejections inline.

import type {
  AllocationView,
  DeltaEntry,
  SessionSettings,
  SessionSummary,
  SolveReportDoc,
  WhatIfMutation,
  WhatIfResult,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  const body = await response.json().catch(() => ({}));
  if (!response.ok) {
    const detail =
      typeof body?.detail === "string" ? body.detail : JSON.stringify(body);
    throw new ApiError(response.status, detail);
  }
  return body as T;
}

export class SsoaClient {
  constructor(private readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}/v1${path}`;
  }

  createSession(
    instance: unknown,
    settings: SessionSettings,
  ): Promise<{ id: string }> {
    return request(this.url("/sessions"), {
      method: "POST",
      body: JSON.stringify({ instance, settings }),
    });
  }

  summary(sessionId: string): Promise<SessionSummary> {
    return request(this.url(`/sessions/${sessionId}/summary`));
  }

  submitRound(
    sessionId: string,
    delta: DeltaEntry[],
    label = "",
    skipUnsolved = false,
  ): Promise<{ number: number }> {
    return request(this.url(`/sessions/${sessionId}/rounds`), {
      method: "POST",
      body: JSON.stringify({ delta, label, skip_unsolved: skipUnsolved }),
    });
  }

  solveRound(sessionId: string, round: number): Promise<SolveReportDoc> {
    return request(this.url(`/sessions/${sessionId}/rounds/${round}/solve`), {
      method: "POST",
      body: JSON.stringify({}),
    });
  }

  allocation(sessionId: string, round: number): Promise<AllocationView> {
    return request(this.url(`/sessions/${sessionId}/rounds/${round}/allocation`));
  }

  whatIf(
    sessionId: string,
    baseRound: number,
    mutation: WhatIfMutation,
  ): Promise<WhatIfResult> {
    return request(this.url(`/sessions/${sessionId}/whatif`), {
      method: "POST",
      body: JSON.stringify({ base_round: baseRound, mutation }),
    });
  }
}
