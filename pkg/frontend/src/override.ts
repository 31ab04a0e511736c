// Manual takeover: samples the held input state into override messages at a
// fixed rate (>= 10 Hz) while any axis is engaged, and emits exactly one
// release when the operator hands control back. Inputs are disabled while
// disconnected; reconnecting never replays stale state.

import { ConsoleSession } from "./session.js";

export interface Axes {
  surge: number;
  sway: number;
  heave: number;
  yaw: number;
}

export const ZERO_AXES: Axes = { surge: 0, sway: 0, heave: 0, yaw: 0 };

export const SAMPLE_INTERVAL_MS = 50; // 20 Hz, comfortably above the 10 Hz floor

function engaged(a: Axes): boolean {
  return a.surge !== 0 || a.sway !== 0 || a.heave !== 0 || a.yaw !== 0;
}

export class OverrideSampler {
  axes: Axes = { ...ZERO_AXES };
  private active = false;
  private timer: ReturnType<typeof setInterval> | null = null;

  constructor(private session: ConsoleSession) {}

  start(intervalMs: number = SAMPLE_INTERVAL_MS): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => this.tick(), intervalMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  setAxes(axes: Partial<Axes>): void {
    this.axes = { ...this.axes, ...axes };
  }

  /** One sampling instant; called by the timer (or directly in tests). */
  tick(): void {
    if (!this.session.connected) return;
    if (engaged(this.axes)) {
      this.active = true;
      this.session.sendOverride(this.axes.surge, this.axes.sway, this.axes.heave, this.axes.yaw);
    } else if (this.active) {
      // keep streaming zeros only while the override is held; idle otherwise
      this.active = false;
    }
  }

  /** Hand control back to the autonomous loop: exactly one release. */
  release(): boolean {
    this.axes = { ...ZERO_AXES };
    this.active = false;
    return this.session.sendRelease();
  }
}

/** Keyboard layout: WASD drives surge/sway, R/F heave, Q/E yaw. */
export function axesFromKeys(held: Set<string>): Axes {
  const axis = (plus: string, minus: string) =>
    (held.has(plus) ? 1 : 0) - (held.has(minus) ? 1 : 0);
  return {
    surge: axis("w", "s"),
    sway: axis("d", "a"),
    heave: axis("r", "f"),
    yaw: axis("e", "q"),
  };
}
