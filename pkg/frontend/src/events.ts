/**
 * Server-sent event consumption with automatic reconnect.
 *
 * The service replays the full event log on every (re)connect, so the
 * consumer tracks how many events it has already delivered and skips them
 * after a reconnect. Long jobs therefore survive flaky connections without
 * duplicated or dropped progress entries.
 */

import { ProgressEventPayload } from "./api.js";

export interface StreamHandle {
  close(): void;
}

/** Opens a raw SSE connection; the default implementation uses EventSource. */
export type StreamFactory = (
  url: string,
  onMessage: (data: string) => void,
  onError: () => void,
) => StreamHandle;

export const eventSourceFactory: StreamFactory = (url, onMessage, onError) => {
  const source = new EventSource(url);
  source.addEventListener("progress", (event) => {
    onMessage((event as MessageEvent).data);
  });
  source.onerror = () => onError();
  return { close: () => source.close() };
};

export interface ConsumerOptions {
  reconnectDelayMs?: number;
  maxReconnects?: number;
  schedule?: (fn: () => void, ms: number) => void;
}

export class EventLogConsumer {
  private delivered = 0;
  private receivedThisConnection = 0;
  private closed = false;
  private reconnects = 0;
  private handle: StreamHandle | null = null;

  constructor(
    private readonly factory: StreamFactory,
    private readonly onEvent: (event: ProgressEventPayload) => void,
    private readonly onTerminal: () => void = () => undefined,
    private readonly onGiveUp: () => void = () => undefined,
    private readonly options: ConsumerOptions = {},
  ) {}

  get reconnectCount(): number {
    return this.reconnects;
  }

  subscribe(url: string): void {
    this.connect(url);
  }

  close(): void {
    this.closed = true;
    this.handle?.close();
  }

  private connect(url: string): void {
    if (this.closed) return;
    this.receivedThisConnection = 0;
    this.handle = this.factory(
      url,
      (data) => this.handleMessage(data),
      () => this.handleError(url),
    );
  }

  private handleMessage(data: string): void {
    this.receivedThisConnection += 1;
    // Replay-from-log: skip events already delivered before the reconnect.
    if (this.receivedThisConnection <= this.delivered) return;
    let event: ProgressEventPayload;
    try {
      event = JSON.parse(data) as ProgressEventPayload;
    } catch {
      return;
    }
    this.delivered += 1;
    this.onEvent(event);
    if (event.stage === "terminal") {
      this.closed = true;
      this.handle?.close();
      this.onTerminal();
    }
  }

  private handleError(url: string): void {
    if (this.closed) return;
    this.handle?.close();
    const max = this.options.maxReconnects ?? 20;
    if (this.reconnects >= max) {
      this.closed = true;
      this.onGiveUp();
      return;
    }
    this.reconnects += 1;
    const schedule =
      this.options.schedule ?? ((fn: () => void, ms: number) => setTimeout(fn, ms));
    schedule(() => this.connect(url), this.options.reconnectDelayMs ?? 1000);
  }
}
