/**
 * Gateway JSON contracts.
 *
 * Everything the console displays arrives through these shapes, either
 * over the `/events` WebSocket or from `GET /trace`; there is no
 * client-side simulation. Timestamps are simulation minutes, either an
 * integer or an exact fraction rendered as "p/q".
 */

export type EventKind = "snapshot" | "decision" | "message" | "transition";

export interface TopologyDict {
  /** vehicle name -> layer number (1 operational, 2 execution, 3 planning) */
  layers: Record<string, number>;
  /** vehicle name -> master name ("MCC" or another vehicle) */
  masters: Record<string, string>;
  /** undirected links, each a sorted name pair */
  peer_links: string[][];
}

export interface SnapshotPayload {
  pattern: string | null;
  mode: "automatic" | "manual";
  requested: string | null;
  topology: TopologyDict;
  traffic: Record<string, number>;
  utilizations: Record<string, number>;
  uncontrolled: string[];
  states: Record<string, string>;
  clocks: Record<string, Record<string, string>>;
}

export interface DecisionPayload {
  action: string;
  subject: string | null;
  detail: Record<string, unknown>;
  rules: string[];
}

export interface TraceEvent {
  at: number | string;
  kind: EventKind;
  payload: Record<string, unknown>;
}

/** Commands accepted by POST /command and over the event socket. */
export type CommandPayload =
  | { set_mode: "automatic" }
  | { set_mode: "manual"; pattern: string }
  | { set_pattern: string }
  | { inject_failure: string }
  | { set_pace: number | "max" }
  | { step: number };

/** Convert a gateway timestamp ("p/q" or number) to minutes. */
export function minutes(at: number | string): number {
  if (typeof at === "number") return at;
  const slash = at.indexOf("/");
  if (slash < 0) return Number(at);
  return Number(at.slice(0, slash)) / Number(at.slice(slash + 1));
}

export function isTraceEvent(frame: unknown): frame is TraceEvent {
  if (typeof frame !== "object" || frame === null) return false;
  const f = frame as Record<string, unknown>;
  return (
    (typeof f.at === "number" || typeof f.at === "string") &&
    typeof f.kind === "string" &&
    typeof f.payload === "object" &&
    f.payload !== null
  );
}

const SNAPSHOT_KEYS = [
  "pattern",
  "mode",
  "topology",
  "traffic",
  "utilizations",
  "uncontrolled",
  "states",
] as const;

/**
 * Structural guard for snapshot payloads. A gateway speaking a newer
 * schema fails this check and the reducer raises a banner instead of
 * rendering garbage.
 */
export function isSnapshotPayload(payload: Record<string, unknown>): payload is Record<string, unknown> & SnapshotPayload {
  if (!SNAPSHOT_KEYS.every((key) => key in payload)) return false;
  const topo = payload.topology as Record<string, unknown> | null;
  return (
    typeof topo === "object" &&
    topo !== null &&
    typeof topo.layers === "object" &&
    typeof topo.masters === "object" &&
    Array.isArray(topo.peer_links)
  );
}

export function isDecisionPayload(payload: Record<string, unknown>): payload is Record<string, unknown> & DecisionPayload {
  return typeof payload.action === "string" && Array.isArray(payload.rules);
}

/** Sorted vehicle names appearing anywhere in a snapshot. */
export function fleetNames(snapshot: SnapshotPayload): string[] {
  const names = new Set<string>([
    ...Object.keys(snapshot.states),
    ...Object.keys(snapshot.topology.layers),
    ...snapshot.uncontrolled,
  ]);
  return [...names].sort();
}
