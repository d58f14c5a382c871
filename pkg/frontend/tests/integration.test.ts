// End-to-end loop against a live local server: create a session on the
// cruising fixture, stream frames over the websocket, press Stop, and watch
// the speed trace fall. Requires the python package to be importable.

import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { spawn, ChildProcess } from "node:child_process";
import WebSocket from "ws";

import { ApiClient } from "../src/api.js";
import { isFrameView, FrameView } from "../src/types.js";

const PORT = 8977;
const BASE = `http://127.0.0.1:${PORT}`;
const CRUISE_SCENARIO = "straight_with_lead-0000";

let server: ChildProcess;

async function waitForServer(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/scenarios`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("server did not come up");
}

beforeAll(async () => {
  server = spawn(
    "python3",
    ["-m", "asyncplan.cli", "serve", "--port", String(PORT), "--host", "127.0.0.1"],
    { cwd: "..", stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stderr?.on("data", (chunk) => {
    const text = String(chunk);
    if (text.includes("Traceback")) console.error(text);
  });
  await waitForServer();
}, 40000);

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("cockpit loop against a live server", () => {
  it("stop instruction surfaces in the next streamed frame and speed falls", async () => {
    const api = new ApiClient(BASE);
    const scenarios = await api.listScenarios();
    expect(scenarios.map((s) => s.id)).toContain(CRUISE_SCENARIO);

    const { session_id } = await api.createSession(CRUISE_SCENARIO, "idm", 1);
    const state = await api.state(session_id);
    expect(state.lanes.length).toBeGreaterThan(0);

    const frames: FrameView[] = [];
    const socket = new WebSocket(`ws://127.0.0.1:${PORT}/sessions/${session_id}/stream`);
    socket.on("message", (data) => {
      const parsed = JSON.parse(String(data));
      if (isFrameView(parsed)) frames.push(parsed);
    });
    await new Promise<void>((resolve, reject) => {
      socket.on("open", () => resolve());
      socket.on("error", reject);
    });

    // cruise for 2 s, then press Stop
    await api.step(session_id, 20);
    const stopAck = await api.sendInstruction(session_id, "stop", 0);
    expect(stopAck).toMatchObject({ ok: true });
    await api.step(session_id, 60);

    // wait until the stream caught up
    const deadline = Date.now() + 10000;
    while (frames.length < 80 && Date.now() < deadline) {
      await new Promise((r) => setTimeout(r, 100));
    }
    socket.close();
    expect(frames.length).toBeGreaterThanOrEqual(80);

    // the very next frame after injection carries the stop instruction
    const frame20 = frames.find((f) => f.step === 20)!;
    expect(frame20.instructions).toEqual([{ cmd: "stop", distance_m: 0 }]);

    // speed HUD trace decreases thereafter and ends near standstill
    const speedAtStop = frames.find((f) => f.step === 20)!.ego.speed;
    const speedLater = frames.find((f) => f.step === 50)!.ego.speed;
    const speedEnd = frames[frames.length - 1].ego.speed;
    expect(speedLater).toBeLessThan(speedAtStop - 1.0);
    expect(speedEnd).toBeLessThan(1.5);

    // frames arrive in order with consistent steps
    const steps = frames.map((f) => f.step);
    expect(steps.slice(0, 10)).toEqual([0, 1, 2, 3, 4, 5, 6, 7, 8, 9]);
  }, 60000);

  it("session metrics become available and carry a score", async () => {
    const api = new ApiClient(BASE);
    const { session_id } = await api.createSession(CRUISE_SCENARIO, "idm", 9);
    await api.step(session_id, 40);
    const metrics = await api.metrics(session_id);
    expect(typeof metrics.score).toBe("number");
    expect(metrics.score).toBeGreaterThanOrEqual(0);
    expect(metrics.score).toBeLessThanOrEqual(100);
  }, 30000);
});
