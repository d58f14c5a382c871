// Cockpit wiring: session lifecycle, stream consumption, and operator controls.
// The server is the source of truth; this file only maps frames to pixels and
// clicks to API calls.

import { ApiClient } from "./api.js";
import { buildDisplayList, drawDisplayList, drawSpeedTrace, egoCamera, hudLines } from "./render.js";
import { FrameStream, streamUrl } from "./stream.js";
import {
  ControlPanelState,
  defaultPanelState,
  FrameView,
  INTERVAL_CHOICES,
  LaneView,
} from "./types.js";

const api = new ApiClient("");
const panel: ControlPanelState = defaultPanelState();

let lanes: LaneView[] = [];
let lastFrame: FrameView | null = null;
let scoreSoFar: number | null = null;
let stream: FrameStream | null = null;
let stepTimer: ReturnType<typeof setInterval> | null = null;
const speedTrace: number[] = [];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function setStatus(text: string, bad = false): void {
  const banner = el<HTMLDivElement>("status");
  banner.textContent = text;
  banner.className = bad ? "status bad" : "status";
}

function repaint(): void {
  if (!lastFrame) return;
  const canvas = el<HTMLCanvasElement>("scene");
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const camera = egoCamera(lastFrame, canvas.width, canvas.height);
  drawDisplayList(ctx, buildDisplayList(lastFrame, lanes), camera);

  const hud = el<HTMLPreElement>("hud");
  hud.textContent = hudLines(lastFrame, scoreSoFar).join("\n");

  const trace = el<HTMLCanvasElement>("trace");
  const traceCtx = trace.getContext("2d");
  if (traceCtx) drawSpeedTrace(traceCtx, speedTrace, trace.width, trace.height);

  const badge = el<HTMLSpanElement>("active-instruction");
  badge.textContent = lastFrame.instructions.map((i) => i.cmd).join(", ") || "route";
}

function onFrame(frame: FrameView): void {
  lastFrame = frame;
  speedTrace.push(frame.ego.speed);
  if (speedTrace.length > 400) speedTrace.shift();
  repaint();
  if (frame.finished) pause();
}

async function refreshScore(): Promise<void> {
  if (!panel.sessionId) return;
  try {
    const metrics = await api.metrics(panel.sessionId);
    if (typeof metrics.score === "number") scoreSoFar = metrics.score;
  } catch {
    // metrics are advisory; keep the last value
  }
}

async function createSession(): Promise<void> {
  const scenarioId = el<HTMLSelectElement>("scenario").value;
  const planner = el<HTMLSelectElement>("planner").value;
  pause();
  stream?.close();
  speedTrace.length = 0;
  scoreSoFar = null;
  const created = await api.createSession(scenarioId, planner, panel.intervalK);
  panel.sessionId = created.session_id;
  const state = await api.state(panel.sessionId);
  lanes = state.lanes;
  lastFrame = state.frame;
  stream = new FrameStream(streamUrl("", panel.sessionId), {
    onFrame,
    onStatus: (status) => {
      if (status === "stale") setStatus("stream stale (no frame for > 1 s)", true);
      else if (status === "open") setStatus(`session ${panel.sessionId} live`);
      else setStatus(`stream ${status}`, status === "closed");
    },
  });
  stream.connect();
  setStatus(`session ${panel.sessionId} created`);
  repaint();
}

function play(): void {
  if (!panel.sessionId || panel.running) return;
  panel.running = true;
  el<HTMLButtonElement>("play").textContent = "pause";
  stepTimer = setInterval(async () => {
    if (!panel.sessionId) return;
    try {
      await api.step(panel.sessionId, 1);
    } catch (error) {
      setStatus(String(error), true);
      pause();
    }
  }, 100);
  const scoreTimer = setInterval(() => {
    if (!panel.running) clearInterval(scoreTimer);
    else void refreshScore();
  }, 1500);
}

function pause(): void {
  panel.running = false;
  const button = document.getElementById("play") as HTMLButtonElement | null;
  if (button) button.textContent = "play";
  if (stepTimer) clearInterval(stepTimer);
  stepTimer = null;
}

async function sendInstruction(): Promise<void> {
  if (!panel.sessionId) return;
  const cmd = panel.selectedCmd;
  const distance = cmd === "stop" ? 0 : panel.distanceM;
  try {
    await api.sendInstruction(panel.sessionId, cmd, distance);
    setStatus(`sent ${cmd} @ ${distance} m`);
  } catch (error) {
    setStatus(`instruction failed: ${error}. Retry?`, true);
  }
}

async function applyInterval(): Promise<void> {
  if (!panel.sessionId) return;
  await api.setInterval(panel.sessionId, panel.intervalK);
  setStatus(`interval k = ${panel.intervalK}`);
}

async function boot(): Promise<void> {
  const select = el<HTMLSelectElement>("scenario");
  const scenarios = await api.listScenarios();
  for (const s of scenarios) {
    const option = document.createElement("option");
    option.value = s.id;
    option.textContent = `${s.id} (${s.duration_s.toFixed(0)} s)`;
    select.appendChild(option);
  }

  const intervalSelect = el<HTMLSelectElement>("interval");
  for (const k of INTERVAL_CHOICES) {
    const option = document.createElement("option");
    option.value = String(k);
    option.textContent = `k = ${k}`;
    if (k === panel.intervalK) option.selected = true;
    intervalSelect.appendChild(option);
  }
  intervalSelect.onchange = () => {
    panel.intervalK = Number(intervalSelect.value);
    void applyInterval();
  };

  el<HTMLButtonElement>("create").onclick = () => void createSession();
  el<HTMLButtonElement>("play").onclick = () => (panel.running ? pause() : play());
  el<HTMLButtonElement>("send").onclick = () => void sendInstruction();
  for (const cmd of ["stop", "go_straight", "turn_left", "turn_right"]) {
    el<HTMLButtonElement>(`cmd-${cmd}`).onclick = () => {
      panel.selectedCmd = cmd;
      document.querySelectorAll(".cmd").forEach((b) => b.classList.remove("selected"));
      el(`cmd-${cmd}`).classList.add("selected");
      void sendInstruction();
    };
  }
  const distance = el<HTMLInputElement>("distance");
  distance.onchange = () => (panel.distanceM = Number(distance.value) || 0);
  setStatus("pick a scenario and create a session");
}

document.addEventListener("DOMContentLoaded", () => void boot());
