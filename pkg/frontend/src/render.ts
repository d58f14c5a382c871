// Top-down scene rendering. The scene is first compiled into a display list
// of primitives (pure data, exercised by the golden test), then painted onto
// a 2D canvas.

import type { AgentView, FrameView, LaneView } from "./types.js";

export interface Camera {
  centerX: number;
  centerY: number;
  scale: number; // pixels per meter
  width: number;
  height: number;
}

export type Primitive =
  | { kind: "polygon"; points: [number, number][]; fill: string }
  | { kind: "polyline"; points: [number, number][]; stroke: string; width: number }
  | { kind: "box"; x: number; y: number; heading: number; halfLength: number; halfWidth: number; fill: string; outline: string }
  | { kind: "label"; x: number; y: number; text: string; color: string };

const KIND_COLORS: Record<string, string> = {
  vehicle: "#4a7fd4",
  pedestrian: "#e0a030",
  static_object: "#999999",
};

const LIGHT_COLORS: Record<string, string> = {
  green: "#3fae5a",
  yellow: "#d8b929",
  red: "#d0453f",
  unknown: "#8a8a8a",
};

export function egoCamera(frame: FrameView, width: number, height: number, scale = 6): Camera {
  return { centerX: frame.ego.x, centerY: frame.ego.y, scale, width, height };
}

export function buildDisplayList(frame: FrameView, lanes: LaneView[]): Primitive[] {
  const list: Primitive[] = [];
  for (const lane of lanes) {
    if (lane.polygon.length >= 3) {
      list.push({ kind: "polygon", points: lane.polygon, fill: lane.on_route ? "#2e3440" : "#262b33" });
    }
  }
  for (const lane of lanes) {
    const light = frame.lights[lane.id] ?? "unknown";
    list.push({
      kind: "polyline",
      points: lane.centerline,
      stroke: lane.on_route ? LIGHT_COLORS[light] ?? LIGHT_COLORS.unknown : "#3c4454",
      width: lane.on_route ? 2 : 1,
    });
  }
  if (frame.plan.length > 1) {
    list.push({ kind: "polyline", points: frame.plan, stroke: "#7fd4f2", width: 3 });
  }
  for (const agent of frame.agents) {
    list.push(agentBox(agent));
  }
  list.push({
    kind: "box",
    x: frame.ego.x,
    y: frame.ego.y,
    heading: frame.ego.heading,
    halfLength: 2.35,
    halfWidth: 0.95,
    fill: "#e8e8e8",
    outline: "#ffffff",
  });
  for (const agent of frame.agents) {
    list.push({ kind: "label", x: agent.x, y: agent.y + 1.6, text: agent.id, color: "#aab2c0" });
  }
  return list;
}

function agentBox(agent: AgentView): Primitive {
  return {
    kind: "box",
    x: agent.x,
    y: agent.y,
    heading: agent.heading,
    halfLength: agent.half_length,
    halfWidth: agent.half_width,
    fill: KIND_COLORS[agent.kind] ?? "#777777",
    outline: "#111111",
  };
}

export function hudLines(frame: FrameView, scoreSoFar: number | null): string[] {
  const lines = [
    `t = ${frame.t.toFixed(1)} s  step ${frame.step}`,
    `speed ${frame.ego.speed.toFixed(2)} m/s`,
    `feature age ${frame.feature_age === null ? "-" : frame.feature_age}` +
      (frame.degraded ? " (degraded)" : ""),
    `planner ${frame.timings.planner_ms.toFixed(1)} ms` +
      `  guidance ${frame.timings.guidance_ms.toFixed(1)} ms`,
  ];
  const active = frame.instructions
    .map((i) => (i.distance_m > 0 ? `${i.cmd}@${i.distance_m.toFixed(0)}m` : i.cmd))
    .join(", ");
  lines.push(`instructions: ${active || "none"}`);
  if (scoreSoFar !== null) lines.push(`score so far ${scoreSoFar.toFixed(1)}`);
  if (frame.collisions > 0) lines.push(`collisions: ${frame.collisions}`);
  return lines;
}

function toScreen(camera: Camera, x: number, y: number): [number, number] {
  // +x right, +y up in world; canvas y grows downward
  return [
    camera.width / 2 + (x - camera.centerX) * camera.scale,
    camera.height / 2 - (y - camera.centerY) * camera.scale,
  ];
}

export function drawDisplayList(
  ctx: CanvasRenderingContext2D,
  list: Primitive[],
  camera: Camera,
): void {
  ctx.fillStyle = "#1b1f26";
  ctx.fillRect(0, 0, camera.width, camera.height);
  for (const prim of list) {
    if (prim.kind === "polygon" || prim.kind === "polyline") {
      if (prim.points.length < 2) continue;
      ctx.beginPath();
      const [sx, sy] = toScreen(camera, prim.points[0][0], prim.points[0][1]);
      ctx.moveTo(sx, sy);
      for (const [x, y] of prim.points.slice(1)) {
        const [px, py] = toScreen(camera, x, y);
        ctx.lineTo(px, py);
      }
      if (prim.kind === "polygon") {
        ctx.closePath();
        ctx.fillStyle = prim.fill;
        ctx.fill();
      } else {
        ctx.strokeStyle = prim.stroke;
        ctx.lineWidth = prim.width;
        ctx.stroke();
      }
    } else if (prim.kind === "box") {
      const [cx, cy] = toScreen(camera, prim.x, prim.y);
      ctx.save();
      ctx.translate(cx, cy);
      ctx.rotate(-prim.heading);
      const w = prim.halfLength * 2 * camera.scale;
      const h = prim.halfWidth * 2 * camera.scale;
      ctx.fillStyle = prim.fill;
      ctx.strokeStyle = prim.outline;
      ctx.lineWidth = 1;
      ctx.fillRect(-w / 2, -h / 2, w, h);
      ctx.strokeRect(-w / 2, -h / 2, w, h);
      ctx.restore();
    } else {
      const [lx, ly] = toScreen(camera, prim.x, prim.y);
      ctx.fillStyle = prim.color;
      ctx.font = "10px sans-serif";
      ctx.fillText(prim.text, lx, ly);
    }
  }
}

export function drawSpeedTrace(
  ctx: CanvasRenderingContext2D,
  speeds: number[],
  width: number,
  height: number,
): void {
  ctx.fillStyle = "#141820";
  ctx.fillRect(0, 0, width, height);
  if (speeds.length < 2) return;
  const vmax = Math.max(12, ...speeds);
  ctx.beginPath();
  speeds.forEach((v, i) => {
    const x = (i / (speeds.length - 1)) * width;
    const y = height - (v / vmax) * (height - 4) - 2;
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.strokeStyle = "#7fd4f2";
  ctx.lineWidth = 1.5;
  ctx.stroke();
}
