// Operator channel messages: newline-delimited JSON over one duplex socket.
// This file mirrors the server's wire schema exactly.

export type Mode = "manual" | "initializing" | "tracking" | "lost";

export interface FrameMessage {
  type: "frame";
  seq: number;
  png_b64: string;
  box: [number, number, number, number] | null;
  mode: Mode;
  confidence: number;
}

export interface TelemetryMessage {
  type: "telemetry";
  t: number;
  depth: number;
  altitude: number;
  heading: number;
  mode: Mode;
}

export interface ErrorMessage {
  type: "err";
  msg: string;
}

export type ServerMessage = FrameMessage | TelemetryMessage | ErrorMessage;

export interface InitBoxCommand {
  type: "init_box";
  box: [number, number, number, number];
}

export interface OverrideCommand {
  type: "override";
  surge: number;
  sway: number;
  heave: number;
  yaw: number;
}

export interface ReleaseCommand {
  type: "release";
}

export interface ReinitCommand {
  type: "reinit";
}

export type ConsoleCommand = InitBoxCommand | OverrideCommand | ReleaseCommand | ReinitCommand;

export function parseServerMessage(line: string): ServerMessage | null {
  let msg: unknown;
  try {
    msg = JSON.parse(line);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null) return null;
  const type = (msg as { type?: unknown }).type;
  if (type === "frame" || type === "telemetry" || type === "err") {
    return msg as ServerMessage;
  }
  return null;
}

export function encodeCommand(cmd: ConsoleCommand): string {
  return JSON.stringify(cmd);
}
