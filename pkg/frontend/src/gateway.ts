/**
 * Gateway client: one event-stream subscription plus fire-and-acknowledge
 * commands.
 *
 * The socket and HTTP transports are injectable so the command and
 * reconnect behavior is testable without a network. On connection loss
 * the client reconnects with `resume_from` set to the number of trace
 * events already consumed; the gateway replays exactly the missed
 * suffix, so each event is processed once no matter how often the
 * connection drops.
 */

import { CommandPayload, isTraceEvent } from "./model.js";
import { ConsoleState, Input, initialState, reduce } from "./state.js";

export class ConsoleStore {
  state: ConsoleState = initialState();
  private listeners: ((state: ConsoleState) => void)[] = [];

  dispatch(input: Input): void {
    this.state = reduce(this.state, input);
    for (const listener of this.listeners) listener(this.state);
  }

  subscribe(listener: (state: ConsoleState) => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }
}

export interface Socket {
  send(data: string): void;
  close(): void;
}

export interface SocketHandlers {
  onOpen(): void;
  onFrame(frame: unknown): void;
  onClose(): void;
}

export type SocketFactory = (url: string, handlers: SocketHandlers) => Socket;

export type HttpPost = (
  url: string,
  body: unknown
) => Promise<{ status: number; body: Record<string, unknown> }>;

export interface GatewayOptions {
  reconnectDelayMs?: number;
  schedule?: (fn: () => void, ms: number) => void;
  post?: HttpPost;
}

export function toWsUrl(baseUrl: string): string {
  return baseUrl.replace(/^http/, "ws") + "/events";
}

function browserSocket(url: string, handlers: SocketHandlers): Socket {
  const ws = new WebSocket(url);
  ws.onopen = () => handlers.onOpen();
  ws.onmessage = (msg) => handlers.onFrame(JSON.parse(String(msg.data)));
  ws.onclose = () => handlers.onClose();
  return { send: (data) => ws.send(data), close: () => ws.close() };
}

async function fetchPost(
  url: string,
  body: unknown
): Promise<{ status: number; body: Record<string, unknown> }> {
  const resp = await fetch(url, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
  return { status: resp.status, body: (await resp.json()) as Record<string, unknown> };
}

export class GatewayClient {
  private socket: Socket | null = null;
  private stopped = false;
  private nextCommandId = 1;
  /** Command ids awaiting a socket reply. The gateway serializes all
   * command handling, so replies arrive in submission order and FIFO
   * matching is sound. */
  private inFlight: number[] = [];
  private readonly reconnectDelayMs: number;
  private readonly schedule: (fn: () => void, ms: number) => void;
  private readonly post: HttpPost;

  constructor(
    private readonly store: ConsoleStore,
    private readonly baseUrl: string,
    private readonly connectSocket: SocketFactory = browserSocket,
    options: GatewayOptions = {}
  ) {
    this.reconnectDelayMs = options.reconnectDelayMs ?? 1000;
    this.schedule = options.schedule ?? ((fn, ms) => setTimeout(fn, ms));
    this.post = options.post ?? fetchPost;
  }

  connect(): void {
    this.stopped = false;
    const url = `${toWsUrl(this.baseUrl)}?resume_from=${this.store.state.nextIndex}`;
    this.socket = this.connectSocket(url, {
      onOpen: () => this.store.dispatch({ type: "connected" }),
      onFrame: (frame) => this.handleFrame(frame),
      onClose: () => {
        this.socket = null;
        this.inFlight = [];
        this.store.dispatch({ type: "disconnected" });
        if (!this.stopped) {
          this.schedule(() => this.connect(), this.reconnectDelayMs);
        }
      },
    });
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
  }

  private handleFrame(frame: unknown): void {
    if (isTraceEvent(frame)) {
      this.store.dispatch({ type: "event", event: frame });
      return;
    }
    if (typeof frame !== "object" || frame === null) return;
    const f = frame as Record<string, unknown>;
    if ("ack" in f) {
      const id = this.inFlight.shift();
      if (id !== undefined) this.store.dispatch({ type: "ack", id, ack: f.ack as Record<string, unknown> });
    } else if ("error" in f) {
      const id = this.inFlight.shift();
      if (id !== undefined) {
        this.store.dispatch({
          type: "rejected",
          id,
          status: Number(f.status ?? 0),
          error: String(f.error),
        });
      }
    }
  }

  /** Send a command over the socket when connected, HTTP otherwise. */
  submit(command: CommandPayload): number {
    const id = this.nextCommandId++;
    this.store.dispatch({ type: "submit", id, command });
    if (this.socket !== null) {
      this.inFlight.push(id);
      this.socket.send(JSON.stringify(command));
      return id;
    }
    void this.post(`${this.baseUrl}/command`, command).then(
      ({ status, body }) => {
        if (status < 400) {
          this.store.dispatch({ type: "ack", id, ack: body });
        } else {
          this.store.dispatch({
            type: "rejected",
            id,
            status,
            error: String(body.detail ?? "request failed"),
          });
        }
      },
      (err: unknown) => {
        this.store.dispatch({ type: "rejected", id, status: 0, error: String(err) });
      }
    );
    return id;
  }
}
