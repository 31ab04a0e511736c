// End-to-end against the real server: spawn `reefloop serve`, connect over
// the TCP operator channel, and drive the full operator flow the way the
// browser console does (drag -> init_box -> mode echo; override; release).

import { ChildProcess, spawn } from "child_process";
import * as fs from "fs";
import * as os from "os";
import * as path from "path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { dragToFrameBox } from "../src/dragbox";
import { Mode } from "../src/protocol";
import { OverrideSampler } from "../src/override";
import { ConsoleSession } from "../src/session";
import { modeSpans } from "../src/strips";
import { TcpTransport } from "../src/node/tcp";

const PORT = 7431;
let server: ChildProcess;
let session: ConsoleSession;
let scenarioDir: string;

function waitFor(predicate: () => boolean, timeoutMs: number, what: string): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  return new Promise((resolve, reject) => {
    const poll = () => {
      if (predicate()) return resolve();
      if (Date.now() > deadline) return reject(new Error(`timed out waiting for ${what}`));
      setTimeout(poll, 20);
    };
    poll();
  });
}

async function connectWithRetry(port: number, attempts = 100): Promise<TcpTransport> {
  for (let k = 0; k < attempts; k++) {
    try {
      return await TcpTransport.connect("127.0.0.1", port, 500);
    } catch {
      await new Promise((r) => setTimeout(r, 100));
    }
  }
  throw new Error(`server on :${port} never came up`);
}

beforeAll(async () => {
  scenarioDir = fs.mkdtempSync(path.join(os.tmpdir(), "reefloop-console-"));
  const scenarioPath = path.join(scenarioDir, "scenario.toml");
  const py = [
    "from reefloop.sim.scenario import save_scenario",
    "from reefloop.sim.scripts import midwater_easy_scenario",
    `save_scenario(midwater_easy_scenario(duration_s=40.0), r'${scenarioPath}')`,
  ].join("\n");
  const gen = spawn("python3", ["-c", py], { stdio: "inherit" });
  await new Promise((resolve, reject) => {
    gen.on("exit", (code) => (code === 0 ? resolve(null) : reject(new Error(`scenario gen ${code}`))));
  });
  server = spawn(
    "python3",
    ["-m", "reefloop.cli", "serve", "--bind", `127.0.0.1:${PORT}`, "--scenario", scenarioPath],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  const transport = await connectWithRetry(PORT);
  session = new ConsoleSession(transport);
}, 30_000);

afterAll(() => {
  session?.close();
  server?.kill("SIGKILL");
  fs.rmSync(scenarioDir, { recursive: true, force: true });
});

describe("operator console against the live server", () => {
  it("receives telemetry in manual mode before initialization", async () => {
    await waitFor(() => session.telemetry.length >= 3, 10_000, "telemetry");
    expect(session.mode).toBe("manual");
    expect(session.telemetry[0].depth).toBeGreaterThan(0);
  }, 15_000);

  it("turns a scaled drag into init_box and sees the mode change within a tick", async () => {
    // the easy scenario centers the target at the principal point (160,120)
    // with a ~40x32 box; the operator drags over it on a 2x-scaled view
    const drag = dragToFrameBox(280, 208, 360, 272, 2);
    expect(drag.box).toEqual([140, 104, 40, 32]);
    const sent = session.telemetry.length;
    expect(session.sendInitBox(drag.box!)).toBe(true);
    expect(session.pendingBox).not.toBeNull();
    await waitFor(
      () => session.mode === "initializing" || session.mode === "tracking",
      5_000,
      "initialization echo",
    );
    // the command is consumed on the next tick: at most two more manual
    // samples may land between the send and the echo
    const after = session.telemetry.slice(sent);
    const manualAfter = after.filter((s) => s.mode === "manual").length;
    expect(manualAfter).toBeLessThanOrEqual(2);
    expect(session.pendingBox).toBeNull(); // echoed, no longer pending
    await waitFor(() => session.mode === "tracking", 5_000, "tracking");
  }, 15_000);

  it("streams held overrides at >= 10 Hz and the servo hands over", async () => {
    const sampler = new OverrideSampler(session);
    sampler.start();
    sampler.setAxes({ surge: 0.4 });
    const before = session.overridesSent;
    await new Promise((r) => setTimeout(r, 1000));
    sampler.setAxes({ surge: 0 });
    const rate = session.overridesSent - before;
    expect(rate).toBeGreaterThanOrEqual(10);
    await waitFor(() => session.mode === "manual", 5_000, "manual mode");

    // release: exactly one message, autonomy resumes
    expect(sampler.release()).toBe(true);
    sampler.stop();
    await waitFor(() => session.mode === "tracking", 5_000, "autonomy resumed");
  }, 15_000);

  it("shows the intervention on the mode strip", () => {
    const spans = modeSpans(session.telemetry);
    const kinds = spans.map((s) => s.mode);
    expect(kinds).toContain("manual");
    expect(kinds).toContain("tracking");
    // the override episode sits between two tracking spans
    const manualIdx = kinds.lastIndexOf("manual");
    expect(kinds.slice(0, manualIdx)).toContain("tracking");
    expect(kinds.slice(manualIdx + 1)).toContain("tracking");
  });

  it("receives frames with boxes and counts display drops", async () => {
    await waitFor(() => session.framesReceived >= 2, 10_000, "frames");
    const frame = session.takeFrame();
    if (frame) {
      expect(frame.png_b64.length).toBeGreaterThan(100);
      expect(["tracking", "manual", "initializing", "lost"] as Mode[]).toContain(frame.mode);
    }
    expect(session.framesDropped).toBeGreaterThanOrEqual(0);
  }, 15_000);
});
