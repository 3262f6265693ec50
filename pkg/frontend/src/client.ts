// Transport-agnostic console state: feed newline-delimited gateway messages
// through a reducer. The browser wires this to a WebSocket; tests feed it
// lines directly (or from a TCP socket under node).

import {
  Command,
  Limits,
  Role,
  ServerMessage,
  Telemetry,
  decodeLine,
  encodeCommand,
  encodeHello,
  sanitizeCommand,
} from "./protocol.js";

export interface FlashState {
  patch: string;
  intensity: number;
  until: number; // wall-clock seconds
}

export interface ConsoleState {
  connected: boolean;
  handshaken: boolean;
  role: Role;
  limits: Limits | null;
  snapshot: Telemetry | null;
  flash: FlashState | null;
  errors: string[];
  log: string[];
  hapticSeen: number;
}

export const FLASH_SECONDS = 0.6;

export function initialState(role: Role): ConsoleState {
  return {
    connected: false,
    handshaken: false,
    role,
    limits: null,
    snapshot: null,
    flash: null,
    errors: [],
    log: [],
    hapticSeen: 0,
  };
}

/** Commands are disabled until the handshake is acknowledged. */
export function commandsEnabled(state: ConsoleState): boolean {
  return state.connected && state.handshaken && state.limits !== null;
}

export function reduce(state: ConsoleState, msg: ServerMessage, now: number): ConsoleState {
  if (msg.type === "welcome") {
    return {
      ...state,
      handshaken: true,
      role: msg.role,
      limits: msg.limits,
      log: [...state.log, `welcome as ${msg.role}`],
    };
  }
  if (msg.type === "error") {
    return { ...state, errors: [...state.errors, msg.message], log: [...state.log, `error: ${msg.message}`] };
  }
  if (msg.type === "telemetry") {
    let flash = state.flash;
    const skinAge = msg.stale?.skin;
    if (msg.skin && skinAge !== null && skinAge !== undefined && skinAge < 0.5) {
      flash = { patch: msg.skin.patch, intensity: msg.skin.intensity, until: now + FLASH_SECONDS };
    } else if (flash && flash.until < now) {
      flash = null;
    }
    let log = state.log;
    if (msg.haptic_count > state.hapticSeen) {
      log = [...log, `haptic pulse #${msg.haptic_count}`];
    }
    return { ...state, snapshot: msg, flash, log, hapticSeen: msg.haptic_count };
  }
  return state;
}

export type SendFn = (line: string) => void;

export class ConsoleClient {
  state: ConsoleState;
  private send: SendFn;
  private buffer = "";
  onChange: ((s: ConsoleState) => void) | null = null;

  constructor(role: Role, send: SendFn) {
    this.state = initialState(role);
    this.send = send;
  }

  hello(): void {
    this.send(encodeHello(this.state.role) + "\n");
  }

  opened(): void {
    this.state = { ...this.state, connected: true };
    this.hello();
    this.emit();
  }

  closed(): void {
    // Stateless on reload: the next snapshot after reconnect restores
    // the full display.
    this.state = { ...initialState(this.state.role) };
    this.emit();
  }

  feed(data: string, now: number): void {
    this.buffer += data;
    let idx: number;
    while ((idx = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, idx);
      this.buffer = this.buffer.slice(idx + 1);
      if (!line.trim()) continue;
      const msg = decodeLine(line);
      if (msg) {
        this.state = reduce(this.state, msg, now);
      }
    }
    this.emit();
  }

  /** Validate + emit; returns the sanitized command or null when blocked. */
  command(cmd: Command): Command | null {
    if (!commandsEnabled(this.state) || !this.state.limits) {
      this.state = { ...this.state, log: [...this.state.log, "command blocked: not connected"] };
      this.emit();
      return null;
    }
    const clean = sanitizeCommand(cmd, this.state.role, this.state.limits);
    if (clean === null) {
      this.state = {
        ...this.state,
        log: [...this.state.log, `command blocked for role ${this.state.role}: ${cmd.kind}`],
      };
      this.emit();
      return null;
    }
    this.send(encodeCommand(clean) + "\n");
    return clean;
  }

  private emit(): void {
    if (this.onChange) this.onChange(this.state);
  }
}
