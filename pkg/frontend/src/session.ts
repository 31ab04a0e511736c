// Console session state: the single source of truth the UI renders from.
//
// The mode indicator always reflects the last server-reported mode, never a
// locally assumed one: sending init_box only marks the box "pending" until
// telemetry echoes mode=initializing. Frames are stored in a one-slot
// mailbox pulled at display rate; overwriting an unpulled frame increments
// the visible drop counter (the UI must never apply backpressure to the
// control loop).

import {
  ConsoleCommand,
  FrameMessage,
  Mode,
  ServerMessage,
  TelemetryMessage,
  encodeCommand,
  parseServerMessage,
} from "./protocol.js";
import { Transport } from "./transport.js";

export interface TelemetrySample {
  t: number;
  depth: number;
  altitude: number;
  heading: number;
  mode: Mode;
}

export const TELEMETRY_RING_CAPACITY = 2048;

export class ConsoleSession {
  connected = true;
  mode: Mode | null = null;
  telemetry: TelemetrySample[] = [];
  pendingBox: [number, number, number, number] | null = null;
  lastError: string | null = null;
  framesReceived = 0;
  framesDropped = 0;
  overridesSent = 0;
  private frameSlot: FrameMessage | null = null;
  private listeners: (() => void)[] = [];

  constructor(private transport: Transport) {
    transport.onLine((line) => this.handleLine(line));
    transport.onClose(() => {
      this.connected = false;
      this.notify();
    });
  }

  onChange(cb: () => void): void {
    this.listeners.push(cb);
  }

  private notify(): void {
    for (const cb of this.listeners) cb();
  }

  private handleLine(line: string): void {
    const msg = parseServerMessage(line);
    if (msg === null) return;
    if (msg.type === "telemetry") this.handleTelemetry(msg);
    else if (msg.type === "frame") this.handleFrame(msg);
    else this.lastError = msg.msg;
    this.notify();
  }

  private handleTelemetry(msg: TelemetryMessage): void {
    this.mode = msg.mode;
    this.telemetry.push({
      t: msg.t,
      depth: msg.depth,
      altitude: msg.altitude,
      heading: msg.heading,
      mode: msg.mode,
    });
    if (this.telemetry.length > TELEMETRY_RING_CAPACITY) {
      this.telemetry.splice(0, this.telemetry.length - TELEMETRY_RING_CAPACITY);
    }
    // the pending box is confirmed once the server starts initializing
    if (this.pendingBox && (msg.mode === "initializing" || msg.mode === "tracking")) {
      this.pendingBox = null;
    }
  }

  private handleFrame(msg: FrameMessage): void {
    this.framesReceived += 1;
    if (this.frameSlot !== null) {
      this.framesDropped += 1; // UI has not pulled the previous frame yet
    }
    this.frameSlot = msg;
  }

  /** Pull the newest frame (display-rate consumer); null when none is new. */
  takeFrame(): FrameMessage | null {
    const frame = this.frameSlot;
    this.frameSlot = null;
    return frame;
  }

  private send(cmd: ConsoleCommand): boolean {
    if (!this.connected) return false;
    this.transport.send(encodeCommand(cmd));
    return true;
  }

  sendInitBox(box: [number, number, number, number]): boolean {
    if (!this.send({ type: "init_box", box })) return false;
    this.pendingBox = box;
    this.notify();
    return true;
  }

  sendOverride(surge: number, sway: number, heave: number, yaw: number): boolean {
    if (!this.send({ type: "override", surge, sway, heave, yaw })) return false;
    this.overridesSent += 1;
    return true;
  }

  sendRelease(): boolean {
    return this.send({ type: "release" });
  }

  sendReinit(): boolean {
    return this.send({ type: "reinit" });
  }

  close(): void {
    this.transport.close();
    this.connected = false;
  }
}

export type { ServerMessage };
