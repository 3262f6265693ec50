// First-person scene rendering and overlays on a 2D canvas: the frame
// descriptor is projected through a simple pinhole at the avatar head pose;
// stale fields grey out; skin flashes highlight the body silhouette.

import { FrameDescriptor, Telemetry } from "./protocol.js";
import { FlashState } from "./client.js";

function quatRotateInv(q: number[], v: number[]): number[] {
  // rotate v by the conjugate of unit quaternion q = (w, x, y, z)
  const [w, x, y, z] = q;
  const qc = [w, -x, -y, -z];
  const [cw, cx, cy, cz] = qc;
  // v' = q^-1 * v * q via the rotation matrix of qc
  const r00 = 1 - 2 * (cy * cy + cz * cz);
  const r01 = 2 * (cx * cy - cw * cz);
  const r02 = 2 * (cx * cz + cw * cy);
  const r10 = 2 * (cx * cy + cw * cz);
  const r11 = 1 - 2 * (cx * cx + cz * cz);
  const r12 = 2 * (cy * cz - cw * cx);
  const r20 = 2 * (cx * cz - cw * cy);
  const r21 = 2 * (cy * cz + cw * cx);
  const r22 = 1 - 2 * (cx * cx + cy * cy);
  return [
    r00 * v[0] + r01 * v[1] + r02 * v[2],
    r10 * v[0] + r11 * v[1] + r12 * v[2],
    r20 * v[0] + r21 * v[1] + r22 * v[2],
  ];
}

/** Project a world point into normalized image coordinates for a camera
 * looking along +x (z up): returns null when behind the camera. */
export function projectPoint(
  frame: FrameDescriptor,
  world: number[],
  fov = 1.2
): { u: number; v: number; depth: number } | null {
  const rel = [
    world[0] - frame.camera.position[0],
    world[1] - frame.camera.position[1],
    world[2] - frame.camera.position[2],
  ];
  const cam = quatRotateInv(frame.camera.orientation, rel);
  const depth = cam[0]; // boresight is +x
  if (depth < 0.05) return null;
  const f = 1 / Math.tan(fov / 2);
  return { u: (-cam[1] / depth) * f, v: (-cam[2] / depth) * f, depth };
}

export interface Drawable {
  kind: "object" | "horizon";
  x: number;
  y: number;
  size: number;
  id?: number;
}

/** Pure scene layout for a canvas of the given pixel size. */
export function layoutScene(frame: FrameDescriptor, width: number, height: number): Drawable[] {
  const out: Drawable[] = [];
  for (const obj of frame.objects) {
    const p = projectPoint(frame, obj.position);
    if (!p) continue;
    out.push({
      kind: "object",
      id: obj.id,
      x: ((p.u + 1) / 2) * width,
      y: ((p.v + 1) / 2) * height,
      size: Math.max(4, 40 / p.depth),
    });
  }
  return out;
}

export interface Overlays {
  latencyText: string;
  latencyAlarm: boolean;
  marginText: string;
  marginFraction: number; // 0..1 bar fill
  stale: string[];
  flashPatch: string | null;
  facePattern: number | null;
  faults: number;
}

export function buildOverlays(snapshot: Telemetry | null, flash: FlashState | null, now: number): Overlays {
  if (!snapshot) {
    return {
      latencyText: "no data",
      latencyAlarm: false,
      marginText: "no data",
      marginFraction: 0,
      stale: [],
      flashPatch: null,
      facePattern: null,
      faults: 0,
    };
  }
  const lat = snapshot.latency;
  const margin = snapshot.diag ? (snapshot.diag["zmp_margin"] as number) : NaN;
  const stale: string[] = [];
  for (const [field, age] of Object.entries(snapshot.stale ?? {})) {
    if (age === null || age > 1.0) stale.push(field);
  }
  return {
    latencyText: lat ? `p95 ${lat.p95_ms.toFixed(1)} ms` : "no data",
    latencyAlarm: lat ? lat.alarm : false,
    marginText: Number.isFinite(margin) ? `${(margin * 1000).toFixed(0)} mm` : "no data",
    marginFraction: Number.isFinite(margin) ? Math.min(Math.max(margin / 0.05, 0), 1) : 0,
    stale,
    flashPatch: flash && flash.until > now ? flash.patch : null,
    facePattern: snapshot.face,
    faults: snapshot.faults,
  };
}

export function drawScene(
  ctx: CanvasRenderingContext2D,
  frame: FrameDescriptor | null,
  overlays: Overlays,
  width: number,
  height: number
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.fillStyle = "#10141c";
  ctx.fillRect(0, 0, width, height);
  // Ground horizon.
  ctx.strokeStyle = "#2c3c50";
  ctx.beginPath();
  ctx.moveTo(0, height * 0.62);
  ctx.lineTo(width, height * 0.62);
  ctx.stroke();
  if (frame) {
    for (const d of layoutScene(frame, width, height)) {
      ctx.fillStyle = "#d8b24a";
      ctx.beginPath();
      ctx.arc(d.x, d.y, d.size, 0, 2 * Math.PI);
      ctx.fill();
      ctx.fillStyle = "#10141c";
      ctx.font = "10px monospace";
      ctx.fillText(String(d.id ?? ""), d.x - 3, d.y + 3);
    }
  } else {
    ctx.fillStyle = "#56606e";
    ctx.font = "16px monospace";
    ctx.fillText("no frames yet", width / 2 - 60, height / 2);
  }
  // Latency badge.
  ctx.fillStyle = overlays.latencyAlarm ? "#c4302b" : "#2e7d32";
  ctx.fillRect(10, 10, 150, 24);
  ctx.fillStyle = "#ffffff";
  ctx.font = "12px monospace";
  ctx.fillText(overlays.latencyText, 16, 26);
  // ZMP margin bar.
  ctx.strokeStyle = "#56606e";
  ctx.strokeRect(10, 44, 150, 10);
  ctx.fillStyle = overlays.marginFraction > 0.1 ? "#2e7d32" : "#c4302b";
  ctx.fillRect(10, 44, 150 * overlays.marginFraction, 10);
}
