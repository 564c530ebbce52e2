import { describe, expect, it } from "vitest";

import { ProgressEventPayload } from "../src/api.js";
import { EventLogConsumer } from "../src/events.js";
import { ScriptedStream, recordedEvents, waitFor } from "./helpers.js";

describe("EventLogConsumer", () => {
  it("delivers every event once and stops at the terminal marker", async () => {
    const stream = new ScriptedStream(recordedEvents());
    const seen: ProgressEventPayload[] = [];
    let finished = false;
    const consumer = new EventLogConsumer(
      stream.factory,
      (event) => seen.push(event),
      () => {
        finished = true;
      },
    );
    consumer.subscribe("http://svc/evaluations/job-1/events");
    await waitFor(() => finished);
    expect(seen.map((event) => event.stage)).toEqual(
      recordedEvents().map((event) => event.stage),
    );
  });

  it("reconnects after a drop and skips already-delivered events", async () => {
    const stream = new ScriptedStream(recordedEvents(), 1, 4);
    const seen: string[] = [];
    let finished = false;
    const consumer = new EventLogConsumer(
      stream.factory,
      (event) => seen.push(event.stage),
      () => {
        finished = true;
      },
      () => undefined,
      { reconnectDelayMs: 1 },
    );
    consumer.subscribe("http://svc/evaluations/job-1/events");
    await waitFor(() => finished);
    expect(stream.connections).toBe(2);
    expect(consumer.reconnectCount).toBe(1);
    // Full ordered log, no duplicates from the replayed prefix.
    expect(seen).toEqual(recordedEvents().map((event) => event.stage));
  });

  it("gives up after the reconnect budget", async () => {
    const failing = new ScriptedStream([], 0, 0);
    const alwaysFail = (url: string, onMessage: (d: string) => void, onError: () => void) => {
      setTimeout(onError, 0);
      return { close: () => undefined };
    };
    let gaveUp = false;
    const consumer = new EventLogConsumer(
      alwaysFail,
      () => undefined,
      () => undefined,
      () => {
        gaveUp = true;
      },
      { reconnectDelayMs: 1, maxReconnects: 3 },
    );
    consumer.subscribe("http://svc/x/events");
    await waitFor(() => gaveUp);
    expect(consumer.reconnectCount).toBe(3);
    void failing;
  });
});
