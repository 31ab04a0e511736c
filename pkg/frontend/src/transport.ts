// Transport abstraction: one duplex line-oriented connection. The browser
// build uses a WebSocket (one text frame = one protocol line) through the
// ws-tcp bridge; tests and the bridge itself use the raw TCP transport in
// node/tcp.ts. The session logic never touches the concrete transport.

export interface Transport {
  send(line: string): void;
  onLine(cb: (line: string) => void): void;
  onClose(cb: () => void): void;
  close(): void;
}

export class WebSocketTransport implements Transport {
  private ws: WebSocket;
  private lineCb: ((line: string) => void) | null = null;
  private closeCb: (() => void) | null = null;

  constructor(url: string) {
    this.ws = new WebSocket(url);
    this.ws.onmessage = (ev) => {
      if (this.lineCb && typeof ev.data === "string") {
        for (const line of ev.data.split("\n")) {
          if (line.trim()) this.lineCb(line);
        }
      }
    };
    this.ws.onclose = () => this.closeCb?.();
    this.ws.onerror = () => this.closeCb?.();
  }

  ready(): Promise<void> {
    if (this.ws.readyState === WebSocket.OPEN) return Promise.resolve();
    return new Promise((resolve, reject) => {
      this.ws.addEventListener("open", () => resolve(), { once: true });
      this.ws.addEventListener("error", () => reject(new Error("connect failed")), { once: true });
    });
  }

  send(line: string): void {
    if (this.ws.readyState === WebSocket.OPEN) this.ws.send(line);
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onClose(cb: () => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.ws.close();
  }
}

/** In-memory transport for unit tests. */
export class LoopbackTransport implements Transport {
  sent: string[] = [];
  private lineCb: ((line: string) => void) | null = null;
  private closeCb: (() => void) | null = null;
  closed = false;

  send(line: string): void {
    if (!this.closed) this.sent.push(line);
  }

  onLine(cb: (line: string) => void): void {
    this.lineCb = cb;
  }

  onClose(cb: () => void): void {
    this.closeCb = cb;
  }

  close(): void {
    this.closed = true;
  }

  feed(line: string): void {
    this.lineCb?.(line);
  }

  dropConnection(): void {
    this.closed = true;
    this.closeCb?.();
  }
}
