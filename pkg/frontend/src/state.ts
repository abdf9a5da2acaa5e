/**
 * Console state: one pure reducer over gateway inputs.
 *
 * The view is a function of the trace. Replaying the same events from
 * the initial state always reconstructs the identical state, which is
 * what makes reloads and reconnects safe: the client resumes from
 * `nextIndex` and the gateway replays the missed suffix.
 */

import {
  CommandPayload,
  DecisionPayload,
  SnapshotPayload,
  TraceEvent,
  isDecisionPayload,
  isSnapshotPayload,
  minutes,
} from "./model.js";

export type CommandStatus = "sent" | "acknowledged" | "applied" | "rejected";

export interface CommandRecord {
  id: number;
  command: CommandPayload;
  label: string;
  status: CommandStatus;
  /** Event-log index of the decision that confirmed a steering command. */
  decisionIndex: number | null;
  error: string | null;
}

export interface SnapshotView {
  at: number;
  index: number;
  payload: SnapshotPayload;
}

export interface DecisionView {
  at: number;
  index: number;
  payload: DecisionPayload;
}

export interface ConsoleState {
  connected: boolean;
  /** Trace events consumed so far; doubles as resume_from on reconnect. */
  nextIndex: number;
  snapshots: SnapshotView[];
  decisions: DecisionView[];
  messageCount: number;
  transitionCount: number;
  commands: CommandRecord[];
  banner: string | null;
}

export type Input =
  | { type: "connected" }
  | { type: "disconnected" }
  | { type: "event"; event: TraceEvent }
  | { type: "submit"; id: number; command: CommandPayload }
  | { type: "ack"; id: number; ack: Record<string, unknown> }
  | { type: "rejected"; id: number; status: number; error: string };

export function initialState(): ConsoleState {
  return {
    connected: false,
    nextIndex: 0,
    snapshots: [],
    decisions: [],
    messageCount: 0,
    transitionCount: 0,
    commands: [],
    banner: null,
  };
}

/** Steering commands are confirmed by decision events; the rest (step,
 * pace) are transport and terminal once acknowledged. */
export function isSteering(command: CommandPayload): boolean {
  return "set_mode" in command || "set_pattern" in command || "inject_failure" in command;
}

export function commandLabel(command: CommandPayload): string {
  if ("set_mode" in command) {
    return command.set_mode === "manual"
      ? `manual mode (${(command as { pattern?: string }).pattern ?? "?"})`
      : "automatic mode";
  }
  if ("set_pattern" in command) return `pattern ${command.set_pattern}`;
  if ("inject_failure" in command) return `fail ${command.inject_failure}`;
  if ("set_pace" in command) return `pace ${command.set_pace}`;
  return `step ${command.step}`;
}

export function reduce(state: ConsoleState, input: Input): ConsoleState {
  switch (input.type) {
    case "connected":
      return { ...state, connected: true };
    case "disconnected":
      return { ...state, connected: false };
    case "submit":
      return {
        ...state,
        commands: [
          ...state.commands,
          {
            id: input.id,
            command: input.command,
            label: commandLabel(input.command),
            status: "sent",
            decisionIndex: null,
            error: null,
          },
        ],
      };
    case "ack":
      return {
        ...state,
        commands: state.commands.map((c) =>
          c.id === input.id && c.status === "sent" ? { ...c, status: "acknowledged" } : c
        ),
      };
    case "rejected":
      return {
        ...state,
        commands: state.commands.map((c) =>
          c.id === input.id && c.status === "sent"
            ? { ...c, status: "rejected", error: `${input.status}: ${input.error}` }
            : c
        ),
      };
    case "event":
      return applyEvent(state, input.event);
  }
}

function applyEvent(state: ConsoleState, event: TraceEvent): ConsoleState {
  const index = state.nextIndex;
  const next = { ...state, nextIndex: index + 1 };
  switch (event.kind) {
    case "snapshot": {
      if (!isSnapshotPayload(event.payload)) {
        return { ...next, banner: "snapshot schema not recognized; console may be outdated" };
      }
      const view: SnapshotView = {
        at: minutes(event.at),
        index,
        payload: event.payload as unknown as SnapshotPayload,
      };
      return { ...next, snapshots: [...state.snapshots, view] };
    }
    case "decision": {
      if (!isDecisionPayload(event.payload)) return next;
      const view: DecisionView = {
        at: minutes(event.at),
        index,
        payload: event.payload as unknown as DecisionPayload,
      };
      // A decision confirms the oldest acknowledged steering command:
      // "applied" is only ever shown for commands the gateway answered
      // with an actual decision event.
      const confirmable = next.commands.findIndex(
        (c) => c.status === "acknowledged" && isSteering(c.command)
      );
      const commands =
        confirmable < 0
          ? next.commands
          : next.commands.map((c, i) =>
              i === confirmable ? { ...c, status: "applied" as const, decisionIndex: index } : c
            );
      return { ...next, decisions: [...state.decisions, view], commands };
    }
    case "message":
      return { ...next, messageCount: state.messageCount + 1 };
    case "transition":
      return { ...next, transitionCount: state.transitionCount + 1 };
    default:
      return next;
  }
}

export function latestSnapshot(state: ConsoleState): SnapshotView | null {
  return state.snapshots.length > 0 ? state.snapshots[state.snapshots.length - 1]! : null;
}

/**
 * Whether manual mode governs the next processed point: an in-flight
 * mode switch wins over the latest snapshot, mirroring how the gateway
 * itself validates pattern assignment.
 */
export function manualActive(state: ConsoleState): boolean {
  for (let i = state.commands.length - 1; i >= 0; i--) {
    const c = state.commands[i]!;
    if (!("set_mode" in c.command)) continue;
    if (c.status === "rejected") continue;
    if (c.status === "applied") break; // already reflected in a snapshot
    return c.command.set_mode === "manual";
  }
  const latest = latestSnapshot(state);
  return latest !== null && latest.payload.mode === "manual";
}

/** Invariant guard used by tests: applied implies decision-backed. */
export function appliedAreDecisionBacked(state: ConsoleState): boolean {
  const decisionIndices = new Set(state.decisions.map((d) => d.index));
  return state.commands
    .filter((c) => c.status === "applied")
    .every((c) => c.decisionIndex !== null && decisionIndices.has(c.decisionIndex));
}
