import { describe, expect, it } from "vitest";

import {
  Command,
  Limits,
  Role,
  decodeLine,
  encodeCommand,
  sanitizeCommand,
  wrapAngle,
} from "../src/protocol.js";

const LIMITS: Limits = {
  v_max: 0.25,
  latency_alarm_ms: 25,
  patches: ["left_upper_arm", "right_upper_arm", "left_hand", "right_hand"],
  expressions: ["neutral", "smile", "frown", "surprise", "eyes_closed"],
  presets: ["neutral", "point_left", "point_right", "wave_right", "grasp_reach_left", "grasp_reach_right"],
  neck_yaw: [-1.2, 1.2],
  neck_pitch: [-0.7, 0.7],
};

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function wildNumber(r: () => number): number {
  const pick = r();
  if (pick < 0.1) return NaN;
  if (pick < 0.2) return Infinity * (r() < 0.5 ? 1 : -1);
  return (r() - 0.5) * 1e3;
}

function randomRawCommand(r: () => number): Command {
  const kinds = ["walk", "arm_pose", "fingers", "face", "eyelids", "head", "inject_touch"] as const;
  const kind = kinds[Math.floor(r() * kinds.length)];
  switch (kind) {
    case "walk":
      return { kind, heading: wildNumber(r), speed: wildNumber(r) };
    case "arm_pose":
      return { kind, preset: r() < 0.8 ? LIMITS.presets[Math.floor(r() * LIMITS.presets.length)] : "bogus" };
    case "fingers":
      return {
        kind,
        left: Array.from({ length: Math.floor(r() * 8) }, () => wildNumber(r)),
        right: Array.from({ length: 5 }, () => wildNumber(r)),
      };
    case "face":
      return { kind, label: r() < 0.8 ? LIMITS.expressions[Math.floor(r() * 5)] : "wink" };
    case "eyelids":
      return { kind, openness: wildNumber(r) };
    case "head":
      return { kind, yaw: wildNumber(r), pitch: wildNumber(r) };
    case "inject_touch":
      return {
        kind,
        patch: r() < 0.8 ? LIMITS.patches[Math.floor(r() * 4)] : "belly",
        intensity: wildNumber(r),
      };
  }
}

describe("sanitizeCommand", () => {
  it("clamps every fuzzed input into gateway-legal ranges", () => {
    const r = mulberry32(7);
    for (let i = 0; i < 2000; i++) {
      const role: Role = (["operator", "recipient", "observer"] as Role[])[Math.floor(r() * 3)];
      const raw = randomRawCommand(r);
      const clean = sanitizeCommand(raw, role, LIMITS);
      if (clean === null) continue; // role-gated or unknown label: never sent
      expect(["operator", "recipient"]).toContain(role);
      switch (clean.kind) {
        case "walk":
          expect(clean.speed).toBeGreaterThanOrEqual(0);
          expect(clean.speed).toBeLessThanOrEqual(LIMITS.v_max);
          expect(clean.heading).toBeGreaterThanOrEqual(-Math.PI);
          expect(clean.heading).toBeLessThanOrEqual(Math.PI);
          expect(Number.isFinite(clean.heading)).toBe(true);
          break;
        case "fingers":
          for (const v of [...clean.left, ...clean.right]) {
            expect(v).toBeGreaterThanOrEqual(0);
            expect(v).toBeLessThanOrEqual(1);
          }
          expect(clean.left).toHaveLength(5);
          expect(clean.right).toHaveLength(5);
          break;
        case "eyelids":
          expect(clean.openness).toBeGreaterThanOrEqual(0);
          expect(clean.openness).toBeLessThanOrEqual(1);
          break;
        case "head":
          expect(clean.yaw).toBeGreaterThanOrEqual(LIMITS.neck_yaw[0]);
          expect(clean.yaw).toBeLessThanOrEqual(LIMITS.neck_yaw[1]);
          break;
        case "inject_touch":
          expect(clean.intensity).toBeGreaterThan(0);
          expect(clean.intensity).toBeLessThanOrEqual(1);
          expect(LIMITS.patches).toContain(clean.patch);
          break;
      }
    }
  });

  it("role-gates commands", () => {
    const walk: Command = { kind: "walk", heading: 0, speed: 0.1 };
    expect(sanitizeCommand(walk, "observer", LIMITS)).toBeNull();
    expect(sanitizeCommand(walk, "recipient", LIMITS)).toBeNull();
    expect(sanitizeCommand(walk, "operator", LIMITS)).not.toBeNull();
    const touch: Command = { kind: "inject_touch", patch: "left_hand", intensity: 0.4 };
    expect(sanitizeCommand(touch, "operator", LIMITS)).toBeNull();
    expect(sanitizeCommand(touch, "recipient", LIMITS)).not.toBeNull();
  });
});

describe("wire helpers", () => {
  it("wraps angles into (-pi, pi]", () => {
    expect(wrapAngle(3 * Math.PI)).toBeCloseTo(Math.PI, 12);
    expect(wrapAngle(-Math.PI)).toBeCloseTo(Math.PI, 12);
    expect(wrapAngle(0.3)).toBeCloseTo(0.3, 12);
  });

  it("round-trips command encoding through the line decoder shape", () => {
    const line = encodeCommand({ kind: "walk", heading: 0.5, speed: 0.2 });
    const parsed = JSON.parse(line);
    expect(parsed.v).toBe(1);
    expect(parsed.type).toBe("cmd");
    expect(parsed.kind).toBe("walk");
  });

  it("rejects malformed or unversioned lines", () => {
    expect(decodeLine("not json")).toBeNull();
    expect(decodeLine('{"type":"telemetry"}')).toBeNull();
  });
});
