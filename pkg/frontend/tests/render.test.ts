import { describe, expect, it } from "vitest";
import { readFileSync } from "node:fs";
import { join } from "node:path";

import { buildDisplayList, egoCamera, hudLines } from "../src/render.js";
import type { FrameView, LaneView } from "../src/types.js";

const FIXTURE_DIR = join(__dirname, "fixtures");

export const fixtureFrame: FrameView = {
  step: 42,
  t: 4.2,
  ego: { x: 30.0, y: 0.5, heading: 0.05, speed: 7.4 },
  agents: [
    { id: "lead", x: 45.0, y: 0.2, heading: 0.0, speed: 6.1, half_length: 2.3, half_width: 0.9, kind: "vehicle" },
    { id: "ped", x: 52.0, y: -4.0, heading: 1.57, speed: 1.0, half_length: 0.4, half_width: 0.4, kind: "pedestrian" },
  ],
  plan: [[30.0, 0.5], [33.0, 0.55], [36.0, 0.6], [39.0, 0.65]],
  instructions: [{ cmd: "go_straight", distance_m: 0 }],
  feature_age: 3,
  degraded: false,
  guidance_invoked: false,
  timings: { planner_ms: 18.5, guidance_ms: 0.0 },
  collisions: 0,
  lights: { main: "green" },
  finished: false,
};

export const fixtureLanes: LaneView[] = [
  {
    id: "main",
    centerline: [[0, 0], [50, 0], [100, 0]],
    polygon: [[0, 2], [100, 2], [100, -2], [0, -2]],
    speed_limit: 10,
    on_route: true,
  },
  {
    id: "side",
    centerline: [[0, 3.5], [100, 3.5]],
    polygon: [[0, 5.5], [100, 5.5], [100, 1.5], [0, 1.5]],
    speed_limit: 10,
    on_route: false,
  },
];

describe("display list", () => {
  it("matches the golden fixture", () => {
    const list = buildDisplayList(fixtureFrame, fixtureLanes);
    const golden = JSON.parse(
      readFileSync(join(FIXTURE_DIR, "display_list.golden.json"), "utf-8"),
    );
    expect(JSON.parse(JSON.stringify(list))).toEqual(golden);
  });

  it("renders an empty agent list without error", () => {
    const frame = { ...fixtureFrame, agents: [] };
    const list = buildDisplayList(frame, fixtureLanes);
    const boxes = list.filter((p) => p.kind === "box");
    expect(boxes).toHaveLength(1); // only the ego box
  });

  it("route lanes pick up traffic light colors", () => {
    const red = { ...fixtureFrame, lights: { main: "red" } };
    const list = buildDisplayList(red, fixtureLanes);
    const routeLine = list.find(
      (p) => p.kind === "polyline" && p.points === fixtureLanes[0].centerline,
    );
    expect(routeLine && "stroke" in routeLine ? routeLine.stroke : null).toBe("#d0453f");
  });

  it("ego camera centers on the ego", () => {
    const cam = egoCamera(fixtureFrame, 780, 560);
    expect(cam.centerX).toBe(30.0);
    expect(cam.centerY).toBe(0.5);
  });
});

describe("hud", () => {
  it("shows feature age counting and instructions", () => {
    const lines = hudLines(fixtureFrame, 84.4).join("\n");
    expect(lines).toContain("feature age 3");
    expect(lines).toContain("go_straight");
    expect(lines).toContain("score so far 84.4");
  });

  it("feature age cycles through 0..k-1 frames", () => {
    // mirrors the scheduler invariant: ages 0,1,2 for k=3
    const ages = [0, 1, 2, 0, 1, 2].map(
      (age) => hudLines({ ...fixtureFrame, feature_age: age }, null)[2],
    );
    expect(ages).toEqual([
      "feature age 0", "feature age 1", "feature age 2",
      "feature age 0", "feature age 1", "feature age 2",
    ]);
  });

  it("marks degraded mode", () => {
    const lines = hudLines({ ...fixtureFrame, degraded: true }, null);
    expect(lines[2]).toContain("(degraded)");
  });
});
