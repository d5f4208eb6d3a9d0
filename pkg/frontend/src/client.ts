/** WebSocket observer client: registers as a console, feeds the renderer,
 * reconnects with backoff (never faster than 1 s), injects T frames. */

import WebSocket from "ws";
import { ConsoleRenderer } from "./renderer.js";
import { injectionFrame, registerFrame } from "./protocol.js";

export interface ClientOptions {
  name?: string;
  reconnectDelayMs?: number;
  maxEntries?: number;
}

export class ConsoleClient {
  readonly renderer: ConsoleRenderer;
  readonly url: string;
  private readonly name: string;
  private readonly reconnectDelayMs: number;
  private ws: WebSocket | null = null;
  private closed = false;
  private reconnectTimer: NodeJS.Timeout | null = null;
  private injectionCounter = 0;
  private readonly startedAt = Date.now();

  constructor(hubAddress: string, options: ClientOptions = {}) {
    this.url = hubAddress.startsWith("ws") ? hubAddress : `ws://${hubAddress}/observe`;
    this.name = options.name ?? "console";
    this.reconnectDelayMs = Math.max(1000, options.reconnectDelayMs ?? 1000);
    this.renderer = new ConsoleRenderer(options.maxEntries);
  }

  private now(): number {
    return Date.now() - this.startedAt;
  }

  connect(): Promise<void> {
    return new Promise((resolve, reject) => {
      const ws = new WebSocket(this.url);
      this.ws = ws;
      ws.on("open", () => {
        ws.send(registerFrame(this.name));
        this.renderer.markConnected(this.now());
        resolve();
      });
      ws.on("message", (data) => {
        for (const line of data.toString("utf8").split("\n")) {
          if (line !== "") this.renderer.apply(line, this.now());
        }
      });
      ws.on("close", () => this.onDrop());
      ws.on("error", (err) => {
        if (!this.renderer.connected) reject(err);
        // post-connect errors surface via the close handler
      });
    });
  }

  private onDrop(): void {
    if (this.renderer.connected) this.renderer.markDisconnected(this.now());
    this.ws = null;
    if (this.closed || this.reconnectTimer) return;
    this.reconnectTimer = setTimeout(() => {
      this.reconnectTimer = null;
      this.connect().catch(() => this.onDrop());
    }, this.reconnectDelayMs);
  }

  get canSend(): boolean {
    return this.ws !== null && this.ws.readyState === WebSocket.OPEN;
  }

  /** Send a T frame; the utterance renders as a pending bubble until the
   * pipeline's outcome frame for it arrives. */
  injectUtterance(text: string): void {
    const trimmed = text.trim();
    if (trimmed === "") throw new Error("empty utterance");
    if (!this.canSend) throw new Error("disconnected: input disabled");
    this.injectionCounter += 1;
    this.ws!.send(injectionFrame(this.injectionCounter, this.name, trimmed));
    this.renderer.injectPending(trimmed, this.now());
  }

  close(): void {
    this.closed = true;
    if (this.reconnectTimer) clearTimeout(this.reconnectTimer);
    this.ws?.close();
  }
}
