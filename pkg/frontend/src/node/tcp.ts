// Raw TCP transport (node): the operator channel's native form. Used by the
// ws-tcp bridge and by the integration tests, which talk to the real server.

import * as net from "net";

import { Transport } from "../transport.js";

export class TcpTransport implements Transport {
  private socket: net.Socket;
  private buffer = "";
  private lineCb: ((line: string) => void) | null = null;
  private closeCb: (() => void) | null = null;

  private constructor(socket: net.Socket) {
    this.socket = socket;
    socket.setEncoding("utf8");
    socket.on("data", (chunk: string) => {
      this.buffer += chunk;
      let idx: number;
      while ((idx = this.buffer.indexOf("\n")) >= 0) {
        const line = this.buffer.slice(0, idx);
        this.buffer = this.buffer.slice(idx + 1);
        if (line.trim()) this.lineCb?.(line);
      }
    });
    socket.on("close", () => this.closeCb?.());
    socket.on("error", () => this.closeCb?.());
  }

  static connect(host: string, port: number, timeoutMs = 5000): Promise<TcpTransport> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port });
      const timer = setTimeout(() => {
        socket.destroy();
        reject(new Error(`connect to ${host}:${port} timed out`));
      }, timeoutMs);
      socket.once("connect", () => {
        clearTimeout(timer);
        resolve(new TcpTransport(socket));
      });
      socket.once("error", (err) => {
        clearTimeout(timer);
        reject(err);
      });
    });
  }

  send(line: string): void {
    this.socket.write(line.endsWith("\n") ? line : line + "\n");
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onClose(cb: () => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.socket.end();
    this.socket.destroy();
  }
}
