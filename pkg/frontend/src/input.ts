// Input-to-command scheduling: joystick at 10 Hz while displaced with a
// single stop on release, debounced sliders, edge-triggered buttons.

import { Command } from "./protocol.js";

export interface InputState {
  joystick: { x: number; y: number }; // unit square; magnitude maps to speed
  fingers: { left: number; right: number }; // single closure slider per hand
  eyelids: number; // openness 0..1
  head: { yaw: number; pitch: number };
  expression: string | null; // set on click, cleared after emission
  armPreset: string | null;
  touchPatch: string | null; // recipient clicks
}

export function emptyInput(): InputState {
  return {
    joystick: { x: 0, y: 0 },
    fingers: { left: 0, right: 0 },
    eyelids: 1,
    head: { yaw: 0, pitch: 0 },
    expression: null,
    armPreset: null,
    touchPatch: null,
  };
}

export const JOYSTICK_PERIOD = 0.1; // 10 Hz while displaced
export const DEBOUNCE = 0.05; // sliders

/** Joystick vector to a walk command: magnitude maps to speed in
 *  [0, v_max], direction to heading (x forward, y left). */
export function joystickToWalk(x: number, y: number, vMax: number): Command {
  const mag = Math.min(Math.hypot(x, y), 1);
  const heading = mag > 1e-6 ? Math.atan2(y, x) : 0;
  return { kind: "walk", heading, speed: mag * vMax };
}

export class CommandScheduler {
  private nextWalkDue = -Infinity;
  private joystickActive = false;
  private lastFingers = { left: -1, right: -1 };
  private fingersDirtyAt = -Infinity;
  private lastEyelids = -1;
  private eyelidsDirtyAt = -Infinity;
  private lastHead = { yaw: NaN, pitch: NaN };
  private headDirtyAt = -Infinity;

  /** Poll with the current input state; returns commands due this instant. */
  poll(input: InputState, vMax: number, now: number): Command[] {
    const out: Command[] = [];
    const mag = Math.hypot(input.joystick.x, input.joystick.y);
    if (mag > 1e-3) {
      if (!this.joystickActive) {
        this.joystickActive = true;
        this.nextWalkDue = now;
      }
      if (now >= this.nextWalkDue) {
        // Accumulate the schedule (drift-free cadence under jittery polls).
        this.nextWalkDue = Math.max(this.nextWalkDue + JOYSTICK_PERIOD, now - JOYSTICK_PERIOD);
        out.push(joystickToWalk(input.joystick.x, input.joystick.y, vMax));
      }
    } else if (this.joystickActive) {
      // Single stop command on release.
      this.joystickActive = false;
      out.push({ kind: "walk", heading: 0, speed: 0 });
    }

    if (
      input.fingers.left !== this.lastFingers.left ||
      input.fingers.right !== this.lastFingers.right
    ) {
      if (this.fingersDirtyAt < 0) this.fingersDirtyAt = now;
      if (now - this.fingersDirtyAt >= DEBOUNCE) {
        this.lastFingers = { ...input.fingers };
        this.fingersDirtyAt = -Infinity;
        out.push({
          kind: "fingers",
          left: new Array(5).fill(input.fingers.left),
          right: new Array(5).fill(input.fingers.right),
        });
      }
    }

    if (input.eyelids !== this.lastEyelids) {
      if (this.eyelidsDirtyAt < 0) this.eyelidsDirtyAt = now;
      if (now - this.eyelidsDirtyAt >= DEBOUNCE) {
        this.lastEyelids = input.eyelids;
        this.eyelidsDirtyAt = -Infinity;
        out.push({ kind: "eyelids", openness: input.eyelids });
      }
    }

    if (input.head.yaw !== this.lastHead.yaw || input.head.pitch !== this.lastHead.pitch) {
      if (this.headDirtyAt < 0) this.headDirtyAt = now;
      if (now - this.headDirtyAt >= DEBOUNCE) {
        this.lastHead = { ...input.head };
        this.headDirtyAt = -Infinity;
        out.push({ kind: "head", yaw: input.head.yaw, pitch: input.head.pitch });
      }
    }

    // Edge-triggered one-shots.
    if (input.expression) {
      out.push({ kind: "face", label: input.expression });
      input.expression = null;
    }
    if (input.armPreset) {
      out.push({ kind: "arm_pose", preset: input.armPreset });
      input.armPreset = null;
    }
    if (input.touchPatch) {
      out.push({ kind: "inject_touch", patch: input.touchPatch, intensity: 0.8 });
      input.touchPatch = null;
    }
    return out;
  }
}
