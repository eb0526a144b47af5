/**
 * Minimal DevTools-protocol client: JSON frames over one WebSocket, with
 * integer command ids and event fan-out.
 */

import WebSocket from "ws";

type EventHandler = (params: any) => void;

interface Pending {
  resolve: (result: any) => void;
  reject: (error: Error) => void;
}

export class CdpConnection {
  private ws: WebSocket;
  private nextId = 1;
  private pending = new Map<number, Pending>();
  private handlers = new Map<string, EventHandler[]>();
  private closeHandlers: Array<() => void> = [];
  closed = false;

  private constructor(ws: WebSocket) {
    this.ws = ws;
    ws.on("message", (data) => this.dispatch(data.toString()));
    ws.on("close", () => this.handleClose());
    ws.on("error", () => this.handleClose());
  }

  static connect(url: string, timeoutMs = 10_000): Promise<CdpConnection> {
    return new Promise((resolve, reject) => {
      const ws = new WebSocket(url);
      const timer = setTimeout(() => {
        ws.terminate();
        reject(new Error(`timed out connecting to ${url}`));
      }, timeoutMs);
      ws.once("open", () => {
        clearTimeout(timer);
        resolve(new CdpConnection(ws));
      });
      ws.once("error", (err) => {
        clearTimeout(timer);
        reject(err);
      });
    });
  }

  send(method: string, params: Record<string, unknown> = {}): Promise<any> {
    if (this.closed) {
      return Promise.reject(new Error(`connection closed before ${method}`));
    }
    const id = this.nextId++;
    return new Promise((resolve, reject) => {
      this.pending.set(id, { resolve, reject });
      this.ws.send(JSON.stringify({ id, method, params }), (err) => {
        if (err) {
          this.pending.delete(id);
          reject(err);
        }
      });
    });
  }

  on(event: string, handler: EventHandler): void {
    const list = this.handlers.get(event) ?? [];
    list.push(handler);
    this.handlers.set(event, list);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }

  close(): void {
    this.closed = true;
    try {
      this.ws.close();
    } catch {
      /* already gone */
    }
  }

  private dispatch(raw: string): void {
    let frame: any;
    try {
      frame = JSON.parse(raw);
    } catch {
      return; // tolerate stray frames
    }
    if (typeof frame.id === "number") {
      const entry = this.pending.get(frame.id);
      if (!entry) return;
      this.pending.delete(frame.id);
      if (frame.error) {
        entry.reject(new Error(frame.error.message ?? "CDP error"));
      } else {
        entry.resolve(frame.result ?? {});
      }
      return;
    }
    if (typeof frame.method === "string") {
      for (const handler of this.handlers.get(frame.method) ?? []) {
        handler(frame.params ?? {});
      }
    }
  }

  private handleClose(): void {
    if (this.closed) return;
    this.closed = true;
    const error = new Error("connection closed");
    for (const { reject } of this.pending.values()) {
      reject(error);
    }
    this.pending.clear();
    for (const handler of this.closeHandlers) {
      handler();
    }
  }
}
