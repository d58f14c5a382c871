// Thin REST client; every user action maps to exactly one endpoint.

import type { ScenarioInfo, SessionState } from "./types.js";

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(this.baseUrl + path, {
      method,
      headers: body !== undefined ? { "Content-Type": "application/json" } : undefined,
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    if (!response.ok) {
      const text = await response.text();
      throw new Error(`${method} ${path} -> ${response.status}: ${text}`);
    }
    return (await response.json()) as T;
  }

  listScenarios(): Promise<ScenarioInfo[]> {
    return this.request("GET", "/scenarios");
  }

  createSession(scenarioId: string, planner: string, intervalK: number): Promise<{ session_id: string }> {
    return this.request("POST", "/sessions", {
      scenario_id: scenarioId,
      planner,
      interval_k: intervalK,
      mode: "blocking",
    });
  }

  step(sessionId: string, n: number): Promise<unknown> {
    return this.request("POST", `/sessions/${sessionId}/step`, { n });
  }

  sendInstruction(sessionId: string, cmd: string, distanceM: number): Promise<unknown> {
    return this.request("POST", `/sessions/${sessionId}/instruction`, {
      cmd,
      distance_m: distanceM,
    });
  }

  setInterval(sessionId: string, k: number): Promise<unknown> {
    return this.request("POST", `/sessions/${sessionId}/interval`, { k });
  }

  state(sessionId: string): Promise<SessionState> {
    return this.request("GET", `/sessions/${sessionId}/state`);
  }

  metrics(sessionId: string): Promise<Record<string, number>> {
    return this.request("GET", `/sessions/${sessionId}/metrics`);
  }
}
