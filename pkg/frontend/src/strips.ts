// Telemetry strips: scrolling depth and altitude traces plus the mode
// timeline, with operator-intervention spans (manual or lost) highlighted.
// Rendering targets a minimal 2D-context interface so the logic is testable
// without a browser canvas.

import { Mode } from "./protocol.js";
import { TelemetrySample } from "./session.js";

export interface StripContext {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  stroke(): void;
  setLineDash(segments: number[]): void;
}

export const MODE_COLORS: Record<Mode, string> = {
  tracking: "#2a9d48",
  initializing: "#e9c46a",
  manual: "#e76f51",
  lost: "#b02425",
};

export const INTERVENTION_FILL = "rgba(220, 40, 40, 0.25)";

export interface Interval {
  t0: number;
  t1: number;
}

/** Maximal spans where the operator is in the loop (manual or lost mode). */
export function interventionIntervals(samples: TelemetrySample[]): Interval[] {
  const out: Interval[] = [];
  let start: number | null = null;
  for (const s of samples) {
    const manual = s.mode === "manual" || s.mode === "lost";
    if (manual && start === null) start = s.t;
    else if (!manual && start !== null) {
      out.push({ t0: start, t1: s.t });
      start = null;
    }
  }
  if (start !== null && samples.length > 0) {
    out.push({ t0: start, t1: samples[samples.length - 1].t });
  }
  return out;
}

export interface ModeSpan extends Interval {
  mode: Mode;
}

export function modeSpans(samples: TelemetrySample[]): ModeSpan[] {
  const out: ModeSpan[] = [];
  let current: Mode | null = null;
  let start = 0;
  for (const s of samples) {
    if (s.mode !== current) {
      if (current !== null) out.push({ t0: start, t1: s.t, mode: current });
      current = s.mode;
      start = s.t;
    }
  }
  if (current !== null && samples.length > 0) {
    out.push({ t0: start, t1: samples[samples.length - 1].t, mode: current });
  }
  return out;
}

interface Window {
  t0: number;
  t1: number;
  toX(t: number, width: number): number;
}

function timeWindow(samples: TelemetrySample[], spanSeconds: number): Window {
  const t1 = samples.length ? samples[samples.length - 1].t : 0;
  const t0 = Math.max(samples.length ? samples[0].t : 0, t1 - spanSeconds);
  const span = Math.max(t1 - t0, 1e-9);
  return { t0, t1, toX: (t, width) => ((t - t0) / span) * width };
}

function drawTrace(
  ctx: StripContext,
  width: number,
  height: number,
  samples: TelemetrySample[],
  win: Window,
  value: (s: TelemetrySample) => number,
  lo: number,
  hi: number,
  color: string,
  invert: boolean,
): void {
  const range = Math.max(hi - lo, 1e-9);
  const toY = (v: number) => {
    const n = (v - lo) / range;
    return invert ? n * height : (1 - n) * height;
  };
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.setLineDash([]);
  ctx.beginPath();
  let started = false;
  for (const s of samples) {
    if (s.t < win.t0) continue;
    const x = win.toX(s.t, width);
    const y = toY(value(s));
    if (!started) {
      ctx.moveTo(x, y);
      started = true;
    } else {
      ctx.lineTo(x, y);
    }
  }
  ctx.stroke();
}

function shadeInterventions(
  ctx: StripContext,
  width: number,
  height: number,
  samples: TelemetrySample[],
  win: Window,
): Interval[] {
  const intervals = interventionIntervals(samples).filter((iv) => iv.t1 >= win.t0);
  ctx.fillStyle = INTERVENTION_FILL;
  for (const iv of intervals) {
    const x0 = win.toX(Math.max(iv.t0, win.t0), width);
    const x1 = win.toX(iv.t1, width);
    ctx.fillRect(x0, 0, Math.max(x1 - x0, 1), height);
  }
  return intervals;
}

export function renderDepthStrip(
  ctx: StripContext,
  width: number,
  height: number,
  samples: TelemetrySample[],
  spanSeconds = 60,
): Interval[] {
  ctx.clearRect(0, 0, width, height);
  if (!samples.length) return [];
  const win = timeWindow(samples, spanSeconds);
  const depths = samples.map((s) => s.depth);
  const lo = Math.min(...depths);
  const hi = Math.max(...depths);
  const shaded = shadeInterventions(ctx, width, height, samples, win);
  // depth axis points down: shallower at the top of the strip
  drawTrace(ctx, width, height, samples, win, (s) => s.depth, lo, hi + 1e-6, "#1d3557", true);
  return shaded;
}

export function renderAltitudeStrip(
  ctx: StripContext,
  width: number,
  height: number,
  samples: TelemetrySample[],
  altitudeFloor: number | null,
  spanSeconds = 60,
): void {
  ctx.clearRect(0, 0, width, height);
  if (!samples.length) return;
  const win = timeWindow(samples, spanSeconds);
  const alts = samples.map((s) => s.altitude);
  const lo = Math.min(...alts, altitudeFloor ?? Infinity, 0);
  const hi = Math.max(...alts, (altitudeFloor ?? 0) + 0.5);
  shadeInterventions(ctx, width, height, samples, win);
  drawTrace(ctx, width, height, samples, win, (s) => s.altitude, lo, hi, "#457b9d", false);
  if (altitudeFloor !== null) {
    const y = (1 - (altitudeFloor - lo) / Math.max(hi - lo, 1e-9)) * height;
    ctx.strokeStyle = MODE_COLORS.lost;
    ctx.lineWidth = 1;
    ctx.setLineDash([4, 3]);
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(width, y);
    ctx.stroke();
    ctx.setLineDash([]);
  }
}

export function renderModeStrip(
  ctx: StripContext,
  width: number,
  height: number,
  samples: TelemetrySample[],
  spanSeconds = 60,
): ModeSpan[] {
  ctx.clearRect(0, 0, width, height);
  if (!samples.length) return [];
  const win = timeWindow(samples, spanSeconds);
  const spans = modeSpans(samples).filter((s) => s.t1 >= win.t0);
  for (const span of spans) {
    ctx.fillStyle = MODE_COLORS[span.mode];
    const x0 = win.toX(Math.max(span.t0, win.t0), width);
    const x1 = win.toX(span.t1, width);
    ctx.fillRect(x0, 0, Math.max(x1 - x0, 1), height);
  }
  return spans;
}
