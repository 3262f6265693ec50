// Live integration against the real gateway: spawns `avatar-sim --gateway`
// and drives two ConsoleClients (operator + recipient) over TCP. The console
// speaks exactly the gateway's newline-delimited schema; the WebSocket
// bridge carries the same lines verbatim for browsers.

import { ChildProcess, spawn } from "node:child_process";
import net from "node:net";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ConsoleClient } from "../src/client.js";
import { CommandScheduler, emptyInput } from "../src/input.js";
import { Role, Telemetry } from "../src/protocol.js";

const PORT = 18700 + Math.floor(Math.random() * 200);
let sim: ChildProcess;

function now(): number {
  return performance.now() / 1000;
}

function connectClient(role: Role): Promise<{ client: ConsoleClient; socket: net.Socket }> {
  return new Promise((resolve, reject) => {
    const socket = net.createConnection({ host: "127.0.0.1", port: PORT });
    socket.setNoDelay(true);
    const client = new ConsoleClient(role, (line) => socket.write(line));
    socket.on("connect", () => client.opened());
    socket.on("data", (chunk) => client.feed(chunk.toString(), now()));
    socket.on("error", reject);
    const poll = setInterval(() => {
      if (client.state.handshaken) {
        clearInterval(poll);
        resolve({ client, socket });
      }
    }, 10);
    setTimeout(() => {
      clearInterval(poll);
      reject(new Error("handshake timeout"));
    }, 8000);
  });
}

function waitFor(predicate: () => boolean, timeoutMs: number): Promise<number> {
  const start = now();
  return new Promise((resolve, reject) => {
    const poll = setInterval(() => {
      if (predicate()) {
        clearInterval(poll);
        resolve((now() - start) * 1000);
      } else if ((now() - start) * 1000 > timeoutMs) {
        clearInterval(poll);
        reject(new Error(`timeout after ${timeoutMs} ms`));
      }
    }, 2);
  });
}

beforeAll(async () => {
  sim = spawn("avatar-sim", ["--gateway", String(PORT)], { stdio: "pipe" });
  // Wait for the listener.
  await waitFor(() => false, 500).catch(() => {});
  let ready = false;
  for (let i = 0; i < 80 && !ready; i++) {
    ready = await new Promise<boolean>((resolve) => {
      const probe = net.createConnection({ host: "127.0.0.1", port: PORT });
      probe.on("connect", () => {
        probe.destroy();
        resolve(true);
      });
      probe.on("error", () => resolve(false));
    });
    if (!ready) await new Promise((r) => setTimeout(r, 100));
  }
  if (!ready) throw new Error("avatar-sim gateway did not come up");
}, 20000);

afterAll(() => {
  sim?.kill("SIGTERM");
});

describe("console against the live gateway", () => {
  it("joystick displacement lands a WalkingCommand within 100 ms", async () => {
    const { client, socket } = await connectClient("operator");
    const scheduler = new CommandScheduler();
    const input = emptyInput();
    input.joystick = { x: 0.8, y: 0 };
    const expected = 0.8 * client.state.limits!.v_max;
    for (const cmd of scheduler.poll(input, client.state.limits!.v_max, now())) {
      client.command(cmd);
    }
    const t0 = now();
    const elapsedMs = await waitFor(() => {
      const cmd = client.state.snapshot?.pipeline_cmd;
      return !!cmd && Math.abs(cmd.speed - expected) < 1e-6;
    }, 2000);
    expect(elapsedMs).toBeLessThan(100);
    // Release: a single stop command.
    input.joystick = { x: 0, y: 0 };
    for (const cmd of scheduler.poll(input, client.state.limits!.v_max, now() + 0.2)) {
      client.command(cmd);
    }
    await waitFor(() => client.state.snapshot?.pipeline_cmd.speed === 0, 2000);
    socket.destroy();
  }, 15000);

  it("recipient touch click flashes the operator view within 300 ms", async () => {
    const operator = await connectClient("operator");
    const recipient = await connectClient("recipient");
    const sent = recipient.client.command({
      kind: "inject_touch",
      patch: "left_upper_arm",
      intensity: 0.8,
    });
    expect(sent).not.toBeNull();
    const elapsedMs = await waitFor(
      () => operator.client.state.flash?.patch === "left_upper_arm",
      2000
    );
    expect(elapsedMs).toBeLessThan(300);
    operator.socket.destroy();
    recipient.socket.destroy();
  }, 15000);

  it("fuzzed UI inputs never produce a gateway-rejected command", async () => {
    const { client, socket } = await connectClient("operator");
    const recipient = await connectClient("recipient");
    const limits = client.state.limits!;
    let seed = 1;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    const wild = () => {
      const p = rand();
      if (p < 0.1) return NaN;
      if (p < 0.2) return (rand() < 0.5 ? 1 : -1) * Infinity;
      return (rand() - 0.5) * 100;
    };
    let sentCount = 0;
    for (let i = 0; i < 120; i++) {
      const raws = [
        { kind: "walk" as const, heading: wild(), speed: wild() },
        { kind: "eyelids" as const, openness: wild() },
        { kind: "head" as const, yaw: wild(), pitch: wild() },
        {
          kind: "fingers" as const,
          left: [wild(), wild(), wild(), wild(), wild()],
          right: [wild()],
        },
        { kind: "face" as const, label: rand() < 0.5 ? "smile" : "frown" },
        { kind: "arm_pose" as const, preset: limits.presets[Math.floor(rand() * limits.presets.length)] },
      ];
      if (client.command(raws[i % raws.length]) !== null) sentCount++;
      if (
        recipient.client.command({
          kind: "inject_touch",
          patch: limits.patches[Math.floor(rand() * limits.patches.length)],
          intensity: wild(),
        }) !== null
      )
        sentCount++;
    }
    expect(sentCount).toBeGreaterThan(200);
    // Give the gateway time to reply with any rejections.
    await new Promise((r) => setTimeout(r, 800));
    expect(client.state.errors).toEqual([]);
    expect(recipient.client.state.errors).toEqual([]);
    socket.destroy();
    recipient.socket.destroy();
  }, 20000);
});
