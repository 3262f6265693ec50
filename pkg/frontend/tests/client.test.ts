import { describe, expect, it } from "vitest";

import { ConsoleClient, FLASH_SECONDS, commandsEnabled, initialState, reduce } from "../src/client.js";
import { CommandScheduler, emptyInput, joystickToWalk } from "../src/input.js";
import { buildOverlays, projectPoint } from "../src/render.js";
import { ServerMessage, Telemetry } from "../src/protocol.js";

const WELCOME: ServerMessage = {
  v: 1,
  type: "welcome",
  role: "operator",
  limits: {
    v_max: 0.25,
    latency_alarm_ms: 25,
    patches: ["left_upper_arm"],
    expressions: ["smile", "neutral"],
    presets: ["neutral"],
    neck_yaw: [-1.2, 1.2],
    neck_pitch: [-0.7, 0.7],
  },
};

function telemetry(extra: Partial<Telemetry> = {}): Telemetry {
  return {
    v: 1,
    type: "telemetry",
    t: 1.0,
    joints: null,
    diag: null,
    skin: null,
    face: 0,
    frame: null,
    latency: { mean_ms: 8, p95_ms: 11, max_ms: 12, alarm: false },
    faults: 0,
    haptic_count: 0,
    pipeline_cmd: { heading: 0, speed: 0 },
    stale: {},
    ...extra,
  };
}

describe("console state reducer", () => {
  it("disables commands until the handshake is acknowledged", () => {
    const sent: string[] = [];
    const client = new ConsoleClient("operator", (line) => sent.push(line));
    client.opened();
    expect(commandsEnabled(client.state)).toBe(false);
    expect(client.command({ kind: "walk", heading: 0, speed: 0.1 })).toBeNull();
    expect(sent.filter((l) => l.includes("cmd"))).toHaveLength(0);
    client.feed(JSON.stringify(WELCOME) + "\n", 0);
    expect(commandsEnabled(client.state)).toBe(true);
    expect(client.command({ kind: "walk", heading: 0, speed: 0.1 })).not.toBeNull();
  });

  it("raises a skin flash from fresh telemetry and expires it", () => {
    let state = initialState("operator");
    state = reduce(state, WELCOME, 0);
    const touched = telemetry({
      skin: { patch: "left_upper_arm", intensity: 0.8, taxels: [1], timestamp: 1.0 },
      stale: { skin: 0.02 },
    });
    state = reduce(state, touched, 10.0);
    expect(state.flash?.patch).toBe("left_upper_arm");
    // A later snapshot with a stale skin field lets the flash expire.
    const quiet = telemetry({ stale: { skin: 3.0 }, skin: null });
    state = reduce(state, quiet, 10.0 + FLASH_SECONDS + 0.1);
    expect(state.flash).toBeNull();
  });

  it("is stateless on reload: reconnect restores from the next snapshot", () => {
    const client = new ConsoleClient("operator", () => {});
    client.opened();
    client.feed(JSON.stringify(WELCOME) + "\n", 0);
    client.feed(JSON.stringify(telemetry()) + "\n", 0.1);
    expect(client.state.snapshot).not.toBeNull();
    client.closed();
    expect(client.state.snapshot).toBeNull();
    client.opened();
    client.feed(JSON.stringify(WELCOME) + "\n", 1.0);
    client.feed(JSON.stringify(telemetry({ t: 2.0 })) + "\n", 1.1);
    expect(client.state.snapshot?.t).toBe(2.0);
    expect(commandsEnabled(client.state)).toBe(true);
  });
});

describe("command scheduler", () => {
  it("emits walk at 10 Hz while displaced and a single stop on release", () => {
    const scheduler = new CommandScheduler();
    const input = emptyInput();
    input.joystick = { x: 1, y: 0 };
    let walks = 0;
    for (let k = 0; k < 100; k++) {
      for (const cmd of scheduler.poll(input, 0.25, k * 0.025)) {
        if (cmd.kind === "walk") walks++;
      }
    }
    // 2.5 s displaced at 10 Hz -> ~25 commands.
    expect(walks).toBeGreaterThanOrEqual(24);
    expect(walks).toBeLessThanOrEqual(26);
    input.joystick = { x: 0, y: 0 };
    const stop = scheduler.poll(input, 0.25, 2.6);
    expect(stop).toHaveLength(1);
    expect(stop[0]).toMatchObject({ kind: "walk", speed: 0 });
    expect(scheduler.poll(input, 0.25, 2.7)).toHaveLength(0); // only once
  });

  it("edge-triggers expression buttons", () => {
    const scheduler = new CommandScheduler();
    const input = emptyInput();
    input.expression = "smile";
    const first = scheduler.poll(input, 0.25, 0);
    expect(first.filter((c) => c.kind === "face")).toHaveLength(1);
    expect(scheduler.poll(input, 0.25, 0.1).filter((c) => c.kind === "face")).toHaveLength(0);
  });

  it("maps joystick magnitude onto [0, v_max]", () => {
    const full = joystickToWalk(1, 0, 0.25);
    expect(full.kind).toBe("walk");
    if (full.kind === "walk") {
      expect(full.speed).toBeCloseTo(0.25, 12);
      expect(full.heading).toBeCloseTo(0, 12);
    }
    const diag = joystickToWalk(2, 2, 0.25); // over-unit input clamps
    if (diag.kind === "walk") {
      expect(diag.speed).toBeLessThanOrEqual(0.25);
      expect(diag.heading).toBeCloseTo(Math.PI / 4, 12);
    }
  });
});

describe("render helpers", () => {
  it("projects points ahead of the camera and culls behind", () => {
    const frame = {
      timestamp: 0,
      resolution: [1024, 768] as [number, number],
      camera: { position: [0, 0, 1], orientation: [1, 0, 0, 0] },
      objects: [],
    };
    const ahead = projectPoint(frame, [2, 0, 1]);
    expect(ahead).not.toBeNull();
    expect(ahead!.u).toBeCloseTo(0, 9);
    expect(projectPoint(frame, [-1, 0, 1])).toBeNull();
  });

  it("flags the latency alarm and stale fields", () => {
    const snap = telemetry({
      latency: { mean_ms: 20, p95_ms: 30, max_ms: 31, alarm: true },
      stale: { joints: 2.0, diag: 0.01 },
    });
    const overlays = buildOverlays(snap, null, 0);
    expect(overlays.latencyAlarm).toBe(true);
    expect(overlays.stale).toContain("joints");
    expect(overlays.stale).not.toContain("diag");
  });

  it("renders placeholders with no snapshot", () => {
    const overlays = buildOverlays(null, null, 0);
    expect(overlays.latencyText).toBe("no data");
    expect(overlays.marginText).toBe("no data");
  });
});
