// Wire types mirroring the session service JSON.

export interface EgoView {
  x: number;
  y: number;
  heading: number;
  speed: number;
}

export interface AgentView {
  id: string;
  x: number;
  y: number;
  heading: number;
  speed: number;
  half_length: number;
  half_width: number;
  kind: string;
}

export interface InstructionView {
  cmd: string;
  distance_m: number;
}

export interface FrameView {
  step: number;
  t: number;
  ego: EgoView;
  agents: AgentView[];
  plan: [number, number][];
  instructions: InstructionView[];
  feature_age: number | null;
  degraded: boolean;
  guidance_invoked: boolean;
  timings: { planner_ms: number; guidance_ms: number };
  collisions: number;
  lights: Record<string, string>;
  finished: boolean;
}

export interface LaneView {
  id: string;
  centerline: [number, number][];
  polygon: [number, number][];
  speed_limit: number;
  on_route: boolean;
}

export interface SessionState {
  session_id: string;
  scenario_id: string;
  frame: FrameView;
  lanes: LaneView[];
  error: string | null;
}

export interface ScenarioInfo {
  id: string;
  archetype: string;
  duration_s: number;
}

// The interval choices exposed on the control panel.
export const INTERVAL_CHOICES = [1, 9, 17, 29, 49, 79, 149] as const;

export interface ControlPanelState {
  sessionId: string | null;
  selectedCmd: string;
  distanceM: number;
  intervalK: number;
  running: boolean;
}

export function defaultPanelState(): ControlPanelState {
  return {
    sessionId: null,
    selectedCmd: "stop",
    distanceM: 0,
    intervalK: 9,
    running: false,
  };
}

export function isFrameView(value: unknown): value is FrameView {
  if (typeof value !== "object" || value === null) return false;
  const v = value as Record<string, unknown>;
  return (
    typeof v.step === "number" &&
    typeof v.t === "number" &&
    typeof v.ego === "object" && v.ego !== null &&
    Array.isArray(v.agents) &&
    Array.isArray(v.plan) &&
    Array.isArray(v.instructions)
  );
}
