// Browser entry: WebSocket to the gateway bridge, DOM wiring, render loop.

import { ConsoleClient } from "./client.js";
import { CommandScheduler, emptyInput } from "./input.js";
import { buildOverlays, drawScene } from "./render.js";
import { Role } from "./protocol.js";

const params = new URLSearchParams(location.search);
const WS_URL = params.get("ws") ?? "ws://127.0.0.1:8592";
const ROLE = (params.get("role") ?? "operator") as Role;

const PATCH_REGIONS: Record<string, [number, number, number, number]> = {
  left_upper_arm: [18, 70, 26, 60],
  right_upper_arm: [116, 70, 26, 60],
  left_hand: [10, 140, 26, 30],
  right_hand: [124, 140, 26, 30],
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

function main(): void {
  const scene = el<HTMLCanvasElement>("scene");
  const body = el<HTMLCanvasElement>("silhouette");
  const statusEl = el<HTMLDivElement>("status");
  const logEl = el<HTMLDivElement>("log");
  const faceEl = el<HTMLDivElement>("face-preview");
  const sceneCtx = scene.getContext("2d")!;
  const bodyCtx = body.getContext("2d")!;

  let socket: WebSocket | null = null;
  const client = new ConsoleClient(ROLE, (line) => socket?.send(line));
  const input = emptyInput();
  const scheduler = new CommandScheduler();

  function connect(): void {
    socket = new WebSocket(WS_URL);
    socket.onopen = () => client.opened();
    socket.onmessage = (ev: MessageEvent) =>
      client.feed(String(ev.data) + "\n", performance.now() / 1000);
    socket.onclose = () => {
      client.closed();
      setTimeout(connect, 1000); // reconnect; next snapshot restores the view
    };
    socket.onerror = () => socket?.close();
  }
  connect();

  // -- joystick (pointer) + WASD mirror ---------------------------------
  const pad = el<HTMLDivElement>("joystick");
  let dragging = false;
  const keys = new Set<string>();
  function padVector(ev: PointerEvent): void {
    const rect = pad.getBoundingClientRect();
    const x = ((ev.clientX - rect.left) / rect.width) * 2 - 1;
    const y = ((ev.clientY - rect.top) / rect.height) * 2 - 1;
    // Screen up = forward (+x robot), screen left = +y robot.
    input.joystick = { x: -y, y: -x };
  }
  pad.addEventListener("pointerdown", (ev) => {
    dragging = true;
    pad.setPointerCapture(ev.pointerId);
    padVector(ev);
  });
  pad.addEventListener("pointermove", (ev) => dragging && padVector(ev));
  const release = () => {
    dragging = false;
    input.joystick = { x: 0, y: 0 };
  };
  pad.addEventListener("pointerup", release);
  pad.addEventListener("pointercancel", release);
  window.addEventListener("keydown", (ev) => keys.add(ev.key.toLowerCase()));
  window.addEventListener("keyup", (ev) => keys.delete(ev.key.toLowerCase()));

  function keysToJoystick(): void {
    if (dragging) return;
    let x = 0;
    let y = 0;
    if (keys.has("w")) x += 1;
    if (keys.has("s")) x -= 1;
    if (keys.has("a")) y += 1;
    if (keys.has("d")) y -= 1;
    input.joystick = { x, y };
  }

  // -- sliders and buttons -----------------------------------------------
  el<HTMLInputElement>("fingers-left").addEventListener("input", (ev) => {
    input.fingers.left = Number((ev.target as HTMLInputElement).value);
  });
  el<HTMLInputElement>("fingers-right").addEventListener("input", (ev) => {
    input.fingers.right = Number((ev.target as HTMLInputElement).value);
  });
  el<HTMLInputElement>("eyelids").addEventListener("input", (ev) => {
    input.eyelids = Number((ev.target as HTMLInputElement).value);
  });
  el<HTMLInputElement>("head-yaw").addEventListener("input", (ev) => {
    input.head = { ...input.head, yaw: Number((ev.target as HTMLInputElement).value) };
  });
  el<HTMLInputElement>("head-pitch").addEventListener("input", (ev) => {
    input.head = { ...input.head, pitch: Number((ev.target as HTMLInputElement).value) };
  });
  for (const label of ["neutral", "smile", "frown", "surprise", "eyes_closed"]) {
    const button = document.createElement("button");
    button.textContent = label;
    button.onclick = () => {
      input.expression = label;
    };
    el<HTMLDivElement>("expressions").appendChild(button);
  }
  el<HTMLSelectElement>("arm-preset").addEventListener("change", (ev) => {
    const value = (ev.target as HTMLSelectElement).value;
    if (value) input.armPreset = value;
  });

  // Recipient: click the silhouette to touch the avatar.
  body.addEventListener("click", (ev) => {
    const rect = body.getBoundingClientRect();
    const x = ((ev.clientX - rect.left) / rect.width) * body.width;
    const y = ((ev.clientY - rect.top) / rect.height) * body.height;
    for (const [patch, [px, py, w, h]] of Object.entries(PATCH_REGIONS)) {
      if (x >= px && x <= px + w && y >= py && y <= py + h) {
        input.touchPatch = patch;
        return;
      }
    }
  });

  // -- loops ----------------------------------------------------------------
  setInterval(() => {
    keysToJoystick();
    const limits = client.state.limits;
    if (!limits) return;
    for (const cmd of scheduler.poll(input, limits.v_max, performance.now() / 1000)) {
      client.command(cmd);
    }
  }, 25);

  function drawBody(flashPatch: string | null): void {
    bodyCtx.clearRect(0, 0, body.width, body.height);
    bodyCtx.fillStyle = "#2c3c50";
    bodyCtx.fillRect(55, 40, 50, 100); // trunk
    bodyCtx.beginPath();
    bodyCtx.arc(80, 24, 16, 0, 2 * Math.PI); // head
    bodyCtx.fill();
    bodyCtx.fillRect(62, 142, 14, 50);
    bodyCtx.fillRect(84, 142, 14, 50);
    for (const [patch, [x, y, w, h]] of Object.entries(PATCH_REGIONS)) {
      bodyCtx.fillStyle = flashPatch === patch ? "#e4572e" : "#3c5068";
      bodyCtx.fillRect(x, y, w, h);
    }
  }

  function render(): void {
    const now = performance.now() / 1000;
    const state = client.state;
    const overlays = buildOverlays(state.snapshot, state.flash, now);
    drawScene(sceneCtx, state.snapshot?.frame ?? null, overlays, scene.width, scene.height);
    drawBody(overlays.flashPatch);
    const cmd = state.snapshot?.pipeline_cmd;
    statusEl.textContent = state.handshaken
      ? `role=${state.role}  cmd=${cmd ? `${cmd.speed.toFixed(2)} m/s @ ${cmd.heading.toFixed(2)}` : "-"}  ` +
        `faults=${overlays.faults}  stale=[${overlays.stale.join(",")}]`
      : "connecting...";
    faceEl.textContent = `face pattern: ${overlays.facePattern ?? "-"}`;
    logEl.textContent = state.log.slice(-8).join("\n");
    requestAnimationFrame(render);
  }
  requestAnimationFrame(render);
}

main();
