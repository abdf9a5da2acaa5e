/** Shared test plumbing: the recorded gateway stream and fake transports. */

import { readFileSync } from "node:fs";

import { TraceEvent } from "../src/model.js";
import {
  ConsoleStore,
  GatewayClient,
  HttpPost,
  Socket,
  SocketHandlers,
} from "../src/gateway.js";
import { ConsoleState, initialState, reduce } from "../src/state.js";

/**
 * The full demonstration session as recorded from the gateway's event
 * stream (285 events: decisions, messages, transitions, snapshots).
 */
export function goldenEvents(): TraceEvent[] {
  const url = new URL("./fixtures/golden_trace.jsonl", import.meta.url);
  return readFileSync(url, "utf8")
    .trim()
    .split("\n")
    .map((line) => JSON.parse(line) as TraceEvent);
}

export function replay(events: TraceEvent[], from: ConsoleState = initialState()): ConsoleState {
  return events.reduce((state, event) => reduce(state, { type: "event", event }), from);
}

export class FakeSocket implements Socket {
  sent: string[] = [];
  closed = false;

  constructor(
    public readonly url: string,
    private readonly handlers: SocketHandlers
  ) {}

  send(data: string): void {
    this.sent.push(data);
  }

  close(): void {
    this.closed = true;
    this.handlers.onClose();
  }

  // Test-side controls for the far end of the connection.
  open(): void {
    this.handlers.onOpen();
  }

  frame(obj: unknown): void {
    this.handlers.onFrame(obj);
  }

  drop(): void {
    this.handlers.onClose();
  }
}

export interface Harness {
  store: ConsoleStore;
  client: GatewayClient;
  sockets: FakeSocket[];
  runScheduled(): void;
}

export function harness(post?: HttpPost): Harness {
  const store = new ConsoleStore();
  const sockets: FakeSocket[] = [];
  const scheduled: (() => void)[] = [];
  const client = new GatewayClient(
    store,
    "http://gateway.test",
    (url, handlers) => {
      const socket = new FakeSocket(url, handlers);
      sockets.push(socket);
      return socket;
    },
    {
      schedule: (fn) => {
        scheduled.push(fn);
      },
      post,
    }
  );
  return {
    store,
    client,
    sockets,
    runScheduled() {
      const due = scheduled.splice(0);
      for (const fn of due) fn();
    },
  };
}

export const tick = (): Promise<void> => new Promise((resolve) => setTimeout(resolve, 0));
