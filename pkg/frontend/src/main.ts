// Browser entry: wires the session, drag selection, keyboard override, and
// telemetry strips to the DOM. All behavior lives in the testable modules;
// this file only binds events and paints.

import { dragToFrameBox } from "./dragbox.js";
import { OverrideSampler, axesFromKeys } from "./override.js";
import { ConsoleSession } from "./session.js";
import { renderAltitudeStrip, renderDepthStrip, renderModeStrip } from "./strips.js";
import { WebSocketTransport } from "./transport.js";

const FRAME_W = 320;
const FRAME_H = 240;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function ctx2d(canvas: HTMLCanvasElement): CanvasRenderingContext2D {
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("no 2d context");
  return ctx;
}

async function start(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const url = params.get("server") ?? "ws://127.0.0.1:8765";
  const scale = parseFloat(params.get("scale") ?? "2");
  const floor = parseFloat(params.get("floor") ?? "0.75");

  const video = el<HTMLCanvasElement>("video");
  video.width = FRAME_W * scale;
  video.height = FRAME_H * scale;
  const videoCtx = ctx2d(video);
  const depthCtx = ctx2d(el<HTMLCanvasElement>("depth"));
  const altitudeCtx = ctx2d(el<HTMLCanvasElement>("altitude"));
  const modeCtx = ctx2d(el<HTMLCanvasElement>("modes"));
  const status = el<HTMLSpanElement>("status");
  const hintBox = el<HTMLSpanElement>("hint");

  const transport = new WebSocketTransport(url);
  status.textContent = `connecting to ${url} ...`;
  await transport.ready().catch(() => {
    status.textContent = `cannot reach ${url} - is the bridge running?`;
    throw new Error("connect failed");
  });
  const session = new ConsoleSession(transport);
  const sampler = new OverrideSampler(session);
  sampler.start();

  // -- drag-to-init -------------------------------------------------------
  let dragStart: [number, number] | null = null;
  let dragNow: [number, number] | null = null;
  const canvasPos = (ev: MouseEvent): [number, number] => {
    const rect = video.getBoundingClientRect();
    return [ev.clientX - rect.left, ev.clientY - rect.top];
  };
  video.addEventListener("mousedown", (ev) => {
    dragStart = canvasPos(ev);
    dragNow = dragStart;
  });
  video.addEventListener("mousemove", (ev) => {
    if (dragStart) dragNow = canvasPos(ev);
  });
  video.addEventListener("mouseup", (ev) => {
    if (!dragStart) return;
    const [ex, ey] = canvasPos(ev);
    const result = dragToFrameBox(dragStart[0], dragStart[1], ex, ey, scale);
    dragStart = dragNow = null;
    if (result.box) {
      session.sendInitBox(result.box);
      hintBox.textContent = "";
    } else {
      hintBox.textContent = result.hint ?? "";
    }
  });

  // -- keyboard override --------------------------------------------------
  const held = new Set<string>();
  window.addEventListener("keydown", (ev) => {
    const key = ev.key.toLowerCase();
    if ("wasdrfqe".includes(key)) {
      held.add(key);
      sampler.setAxes(axesFromKeys(held));
      ev.preventDefault();
    }
  });
  window.addEventListener("keyup", (ev) => {
    held.delete(ev.key.toLowerCase());
    sampler.setAxes(axesFromKeys(held));
  });
  el<HTMLButtonElement>("release").addEventListener("click", () => sampler.release());
  el<HTMLButtonElement>("reinit").addEventListener("click", () => session.sendReinit());

  // -- render loop (display rate; the server is never back-pressured) ------
  const frameImg = new Image();
  let lastBox: [number, number, number, number] | null = null;
  const paint = () => {
    const frame = session.takeFrame();
    if (frame) {
      frameImg.src = `data:image/png;base64,${frame.png_b64}`;
      lastBox = frame.box;
    }
    if (frameImg.complete && frameImg.naturalWidth > 0) {
      videoCtx.drawImage(frameImg, 0, 0, video.width, video.height);
    } else {
      videoCtx.fillStyle = "#04141f";
      videoCtx.fillRect(0, 0, video.width, video.height);
    }
    if (lastBox) {
      videoCtx.strokeStyle = "#35e06f";
      videoCtx.lineWidth = 2;
      const [x, y, w, h] = lastBox;
      videoCtx.strokeRect(x * scale, y * scale, w * scale, h * scale);
    }
    if (session.pendingBox) {
      videoCtx.strokeStyle = "#e9c46a";
      videoCtx.setLineDash([6, 4]);
      const [x, y, w, h] = session.pendingBox;
      videoCtx.strokeRect(x * scale, y * scale, w * scale, h * scale);
      videoCtx.setLineDash([]);
    }
    renderDepthStrip(depthCtx, 640, 90, session.telemetry);
    renderAltitudeStrip(altitudeCtx, 640, 90, session.telemetry, floor);
    renderModeStrip(modeCtx, 640, 26, session.telemetry);
    status.textContent = session.connected
      ? `mode: ${session.mode ?? "-"} | frames dropped: ${session.framesDropped}` +
        (session.lastError ? ` | server: ${session.lastError}` : "")
      : "disconnected (inputs disabled)";
    requestAnimationFrame(paint);
  };
  requestAnimationFrame(paint);
}

start().catch((err) => console.error(err));
