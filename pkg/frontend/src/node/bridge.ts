// WebSocket-to-TCP bridge: browsers cannot open raw TCP sockets, so this
// small relay pipes one WebSocket client to the server's operator channel,
// one protocol line per WebSocket text message, bytes untouched.
//
//   node dist/node/bridge.js [--listen 8765] [--target 127.0.0.1:7071]

import { WebSocketServer, WebSocket } from "ws";

import { TcpTransport } from "./tcp.js";

function arg(name: string, fallback: string): string {
  const i = process.argv.indexOf(`--${name}`);
  return i >= 0 && process.argv[i + 1] ? process.argv[i + 1] : fallback;
}

const listenPort = parseInt(arg("listen", "8765"), 10);
const [targetHost, targetPort] = (() => {
  const t = arg("target", "127.0.0.1:7071");
  const idx = t.lastIndexOf(":");
  return [t.slice(0, idx), parseInt(t.slice(idx + 1), 10)] as const;
})();

const wss = new WebSocketServer({ port: listenPort });
console.log(`ws-tcp bridge: ws://127.0.0.1:${listenPort} -> tcp ${targetHost}:${targetPort}`);

wss.on("connection", async (ws: WebSocket) => {
  let tcp: TcpTransport;
  try {
    tcp = await TcpTransport.connect(targetHost, targetPort);
  } catch (err) {
    ws.send(JSON.stringify({ type: "err", msg: `bridge: ${String(err)}` }));
    ws.close();
    return;
  }
  tcp.onLine((line) => {
    if (ws.readyState === WebSocket.OPEN) ws.send(line);
  });
  tcp.onClose(() => ws.close());
  ws.on("message", (data) => tcp.send(data.toString()));
  ws.on("close", () => tcp.close());
});
