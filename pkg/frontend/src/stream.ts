// WebSocket frame subscription with reconnect and staleness tracking.

import { FrameView, isFrameView } from "./types.js";

export interface StreamHandlers {
  onFrame: (frame: FrameView) => void;
  onStatus?: (status: "connecting" | "open" | "closed" | "stale") => void;
}

const BACKOFF_START_MS = 250;
const BACKOFF_MAX_MS = 4000;
const STALE_AFTER_MS = 1000;

export class FrameStream {
  private socket: WebSocket | null = null;
  private closed = false;
  private backoffMs = BACKOFF_START_MS;
  private lastFrameAt = 0;
  private staleTimer: ReturnType<typeof setInterval> | null = null;

  constructor(
    private url: string,
    private handlers: StreamHandlers,
    private socketFactory: (url: string) => WebSocket = (u) => new WebSocket(u),
  ) {}

  connect(): void {
    this.closed = false;
    this.open();
    this.staleTimer = setInterval(() => {
      if (this.lastFrameAt && Date.now() - this.lastFrameAt > STALE_AFTER_MS) {
        this.handlers.onStatus?.("stale");
      }
    }, 250);
  }

  private open(): void {
    this.handlers.onStatus?.("connecting");
    const socket = this.socketFactory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.backoffMs = BACKOFF_START_MS;
      this.handlers.onStatus?.("open");
    };
    socket.onmessage = (event) => this.handleMessage(event.data);
    socket.onclose = () => {
      this.handlers.onStatus?.("closed");
      if (!this.closed) {
        setTimeout(() => this.open(), this.backoffMs);
        this.backoffMs = Math.min(this.backoffMs * 2, BACKOFF_MAX_MS);
      }
    };
    socket.onerror = () => {
      // close handler performs the reconnect
    };
  }

  handleMessage(data: unknown): void {
    let parsed: unknown;
    try {
      parsed = typeof data === "string" ? JSON.parse(data) : data;
    } catch (error) {
      console.warn("frame parse failure, skipping", error);
      return;
    }
    if (!isFrameView(parsed)) {
      console.warn("malformed frame skipped", parsed);
      return;
    }
    this.lastFrameAt = Date.now();
    this.handlers.onFrame(parsed);
  }

  close(): void {
    this.closed = true;
    if (this.staleTimer) clearInterval(this.staleTimer);
    this.socket?.close();
  }
}

export function streamUrl(base: string, sessionId: string): string {
  const root = base || (typeof location !== "undefined" ? location.origin : "");
  return root.replace(/^http/, "ws") + `/sessions/${sessionId}/stream`;
}
