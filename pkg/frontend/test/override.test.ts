import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { OverrideSampler, axesFromKeys } from "../src/override";
import { ConsoleSession } from "../src/session";
import { LoopbackTransport } from "../src/transport";

function overrides(tr: LoopbackTransport) {
  return tr.sent.map((l) => JSON.parse(l)).filter((m) => m.type === "override");
}

describe("OverrideSampler", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("streams overrides at >= 10 Hz while an axis is held", () => {
    const tr = new LoopbackTransport();
    const session = new ConsoleSession(tr);
    const sampler = new OverrideSampler(session);
    sampler.start();
    sampler.setAxes({ surge: 1 });
    vi.advanceTimersByTime(1000);
    const sent = overrides(tr);
    expect(sent.length).toBeGreaterThanOrEqual(10);
    expect(sent[0]).toMatchObject({ surge: 1, sway: 0, heave: 0, yaw: 0 });
    sampler.stop();
  });

  it("stops streaming once the keys are let go", () => {
    const tr = new LoopbackTransport();
    const sampler = new OverrideSampler(new ConsoleSession(tr));
    sampler.start();
    sampler.setAxes({ yaw: -1 });
    vi.advanceTimersByTime(500);
    const whileHeld = overrides(tr).length;
    sampler.setAxes({ yaw: 0 });
    vi.advanceTimersByTime(500);
    expect(overrides(tr).length).toBe(whileHeld);
    sampler.stop();
  });

  it("sends exactly one release", () => {
    const tr = new LoopbackTransport();
    const sampler = new OverrideSampler(new ConsoleSession(tr));
    sampler.start();
    sampler.setAxes({ surge: 0.5 });
    vi.advanceTimersByTime(300);
    sampler.release();
    vi.advanceTimersByTime(500);
    const releases = tr.sent.map((l) => JSON.parse(l)).filter((m) => m.type === "release");
    expect(releases).toHaveLength(1);
    expect(overrides(tr).every((m) => m.surge !== 0)).toBe(true); // no stale zeros after release
  });

  it("emits nothing while disconnected", () => {
    const tr = new LoopbackTransport();
    const session = new ConsoleSession(tr);
    const sampler = new OverrideSampler(session);
    sampler.start();
    tr.dropConnection();
    sampler.setAxes({ surge: 1 });
    vi.advanceTimersByTime(1000);
    expect(tr.sent).toHaveLength(0);
    sampler.stop();
  });
});

describe("axesFromKeys", () => {
  it("maps the key layout", () => {
    expect(axesFromKeys(new Set(["w"]))).toEqual({ surge: 1, sway: 0, heave: 0, yaw: 0 });
    expect(axesFromKeys(new Set(["s", "a", "f", "q"]))).toEqual({
      surge: -1,
      sway: -1,
      heave: -1,
      yaw: -1,
    });
    expect(axesFromKeys(new Set(["w", "s"]))).toEqual({ surge: 0, sway: 0, heave: 0, yaw: 0 });
  });
});
