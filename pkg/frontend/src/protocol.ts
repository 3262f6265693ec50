// Gateway socket schema (v1): newline-delimited JSON messages.
// Client-side validation mirrors the gateway but clamps instead of
// rejecting, so nothing the UI emits can bounce.

export const SCHEMA_VERSION = 1;

export type Role = "operator" | "recipient" | "observer";

export interface Limits {
  v_max: number;
  latency_alarm_ms: number;
  patches: string[];
  expressions: string[];
  presets: string[];
  neck_yaw: [number, number];
  neck_pitch: [number, number];
}

export interface Welcome {
  v: number;
  type: "welcome";
  role: Role;
  limits: Limits;
}

export interface Telemetry {
  v: number;
  type: "telemetry";
  t: number;
  joints: { t: number; q: number[]; base_xyz: number[]; base_quat: number[] } | null;
  diag: Record<string, number | number[] | string> | null;
  skin: { patch: string; intensity: number; taxels: number[]; timestamp: number } | null;
  face: number | null;
  frame: FrameDescriptor | null;
  latency: { mean_ms: number; p95_ms: number; max_ms: number; alarm: boolean } | null;
  faults: number;
  haptic_count: number;
  pipeline_cmd: { heading: number; speed: number };
  stale: Record<string, number | null>;
}

export interface FrameDescriptor {
  timestamp: number;
  resolution: [number, number];
  camera: { position: number[]; orientation: number[] };
  objects: { id: number; position: number[]; orientation: number[] }[];
}

export interface ErrorMsg {
  v: number;
  type: "error";
  message: string;
}

export type ServerMessage = Welcome | Telemetry | ErrorMsg;

export type Command =
  | { kind: "walk"; heading: number; speed: number }
  | { kind: "arm_pose"; preset: string }
  | { kind: "fingers"; left: number[]; right: number[] }
  | { kind: "face"; label: string }
  | { kind: "eyelids"; openness: number }
  | { kind: "head"; yaw: number; pitch: number }
  | { kind: "inject_touch"; patch: string; intensity: number };

export const ROLE_COMMANDS: Record<Role, Set<string>> = {
  operator: new Set(["walk", "arm_pose", "fingers", "face", "eyelids", "head"]),
  recipient: new Set(["inject_touch"]),
  observer: new Set(),
};

function finite(x: number, fallback = 0): number {
  return Number.isFinite(x) ? x : fallback;
}

export function clamp(x: number, lo: number, hi: number): number {
  return Math.min(Math.max(finite(x, lo), lo), hi);
}

export function wrapAngle(a: number): number {
  const x = finite(a, 0);
  let w = ((x + Math.PI) % (2 * Math.PI) + 2 * Math.PI) % (2 * Math.PI) - Math.PI;
  if (w === -Math.PI) w = Math.PI;
  return w;
}

/** Clamp a raw UI-produced command into gateway-acceptable form, or return
 *  null when the kind is not permitted for the role. */
export function sanitizeCommand(cmd: Command, role: Role, limits: Limits): Command | null {
  if (!ROLE_COMMANDS[role].has(cmd.kind)) return null;
  switch (cmd.kind) {
    case "walk":
      return {
        kind: "walk",
        heading: wrapAngle(cmd.heading),
        speed: clamp(cmd.speed, 0, limits.v_max),
      };
    case "arm_pose":
      if (!limits.presets.includes(cmd.preset)) return null;
      return cmd;
    case "fingers": {
      const fix = (f: number[]) => {
        const out = new Array(5).fill(0);
        for (let i = 0; i < 5; i++) out[i] = clamp(f[i] ?? 0, 0, 1);
        return out;
      };
      return { kind: "fingers", left: fix(cmd.left), right: fix(cmd.right) };
    }
    case "face":
      if (!limits.expressions.includes(cmd.label)) return null;
      return cmd;
    case "eyelids":
      return { kind: "eyelids", openness: clamp(cmd.openness, 0, 1) };
    case "head":
      return {
        kind: "head",
        yaw: clamp(cmd.yaw, limits.neck_yaw[0], limits.neck_yaw[1]),
        pitch: clamp(cmd.pitch, limits.neck_pitch[0], limits.neck_pitch[1]),
      };
    case "inject_touch": {
      if (!limits.patches.includes(cmd.patch)) return null;
      const intensity = clamp(cmd.intensity, 0.05, 1); // gateway needs > 0
      return { kind: "inject_touch", patch: cmd.patch, intensity };
    }
  }
}

export function encodeHello(role: Role): string {
  return JSON.stringify({ v: SCHEMA_VERSION, type: "hello", role });
}

export function encodeCommand(cmd: Command): string {
  return JSON.stringify({ v: SCHEMA_VERSION, type: "cmd", ...cmd });
}

export function decodeLine(line: string): ServerMessage | null {
  try {
    const msg = JSON.parse(line);
    if (msg && msg.v === SCHEMA_VERSION && typeof msg.type === "string") {
      return msg as ServerMessage;
    }
    return null;
  } catch {
    return null;
  }
}
