/**
 * HTML-string renderers.
 *
 * Every panel renders from ConsoleState alone, so tests can assert on
 * the produced markup without a DOM. Layout is deterministic: layers
 * are rows (MCC on top), siblings sort by vehicle name, and edges are
 * listed in sorted order, so two runs of the same trace produce
 * byte-identical markup.
 */

import { SnapshotPayload, TopologyDict, fleetNames } from "./model.js";
import {
  COLUMN_NODE,
  TRAFFIC_COLUMNS,
  referenceByTime,
} from "./reference.js";
import {
  ConsoleState,
  SnapshotView,
  latestSnapshot,
  manualActive,
} from "./state.js";

export const PATTERNS = ["central", "hierarchical", "holonic"] as const;
const NO_PATTERN = "no pattern assigned";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

const BADGE: Record<string, string> = {
  INITIAL: "initial",
  UNAVAILABLE: "unavailable",
  AVAILABLE_UNREGISTERED: "unregistered",
  REGISTERED_UNCONTROLLED: "uncontrolled",
  REGISTERED_CONTROLLED: "controlled",
};

// -- fleet panel -----------------------------------------------------

export function renderFleet(snapshot: SnapshotPayload | null): string {
  if (snapshot === null) return `<ul class="fleet"></ul>`;
  const items = fleetNames(snapshot)
    .map((name) => {
      const stateName = snapshot.states[name] ?? "INITIAL";
      const badge = BADGE[stateName] ?? stateName.toLowerCase();
      const pct = snapshot.utilizations[name] ?? 0;
      return (
        `<li class="uv" data-uv="${name}" data-state="${escapeHtml(stateName)}">` +
        `<span class="name">${name}</span>` +
        `<span class="badge badge-${badge}">${badge}</span>` +
        `<meter class="gauge" min="0" max="100" value="${pct}"></meter>` +
        `<span class="pct">${Math.round(pct)}%</span>` +
        `</li>`
      );
    })
    .join("");
  return `<ul class="fleet">${items}</ul>`;
}

// -- topology view ---------------------------------------------------

interface Cluster {
  head: string;
  members: string[];
}

/** Same-kind clusters: a layer-2 head peer-linked to layer-3 members. */
export function clustersOf(topology: TopologyDict): Cluster[] {
  const byHead = new Map<string, string[]>();
  for (const pair of topology.peer_links) {
    const [a, b] = [pair[0]!, pair[1]!];
    for (const [x, y] of [
      [a, b],
      [b, a],
    ] as const) {
      if (topology.layers[x] === 2 && topology.layers[y] === 3) {
        byHead.set(x, [...(byHead.get(x) ?? []), y].sort());
      }
    }
  }
  return [...byHead.entries()]
    .map(([head, members]) => ({ head, members }))
    .sort((p, q) => p.head.localeCompare(q.head));
}

function node(name: string, classes: string[]): string {
  return `<span class="${["node", ...classes].join(" ")}" data-node="${name}">${name}</span>`;
}

export function renderTopology(snapshot: SnapshotPayload | null): string {
  const pattern = snapshot?.pattern ?? null;
  const label =
    `<h2 class="pattern-label" data-pattern="${pattern ?? "none"}">` +
    `${pattern ?? NO_PATTERN}</h2>`;
  if (snapshot === null || Object.keys(snapshot.topology.layers).length === 0) {
    const grey = snapshot === null ? "" : uncontrolledRow(snapshot);
    return `<div class="topology">${label}<p class="placeholder">${NO_PATTERN}</p>${grey}</div>`;
  }

  const topo = snapshot.topology;
  const clusters = clustersOf(topo);
  const heads = new Set(clusters.map((c) => c.head));
  const clustered = new Set(clusters.flatMap((c) => c.members));

  const rows: string[] = [
    `<div class="layer" data-layer="0">${node("MCC", ["mcc"])}</div>`,
  ];
  for (const layer of [1, 2, 3]) {
    const names = Object.keys(topo.layers)
      .filter((name) => topo.layers[name] === layer)
      .sort();
    if (names.length === 0) continue;
    let body: string;
    if (layer === 3) {
      // Members render grouped under their head so the cluster reads as
      // one unit even though its uplink runs through the head alone.
      body = clusters
        .map(
          (c) =>
            `<div class="cluster" data-head="${c.head}">` +
            c.members.map((m) => node(m, ["member"])).join("") +
            `</div>`
        )
        .join("");
      const loose = names.filter((n) => !clustered.has(n));
      body += loose.map((n) => node(n, ["member"])).join("");
    } else {
      body = names
        .map((n) => node(n, heads.has(n) ? ["head"] : []))
        .join("");
    }
    rows.push(`<div class="layer" data-layer="${layer}">${body}</div>`);
  }

  const masterEdges = Object.keys(topo.masters)
    .sort()
    .map((slave) => {
      const master = topo.masters[slave]!;
      return (
        `<li class="edge master" data-from="${master}" data-to="${slave}">` +
        `${master} &rarr; ${slave}</li>`
      );
    });
  const peerEdges = topo.peer_links
    .map((pair) => [...pair].sort() as [string, string])
    .sort((p, q) => (p[0] + p[1]).localeCompare(q[0] + q[1]))
    .map(
      ([a, b]) =>
        `<li class="edge peer" data-a="${a}" data-b="${b}">${a} &#8596; ${b}</li>`
    );

  return (
    `<div class="topology">${label}` +
    `<div class="graph">${rows.join("")}</div>` +
    `<ul class="edges">${[...masterEdges, ...peerEdges].join("")}</ul>` +
    uncontrolledRow(snapshot) +
    `</div>`
  );
}

function uncontrolledRow(snapshot: SnapshotPayload): string {
  if (snapshot.uncontrolled.length === 0) return "";
  const nodes = [...snapshot.uncontrolled]
    .sort()
    .map((name) => node(name, ["uncontrolled"]))
    .join("");
  return `<div class="uncontrolled-row">${nodes}</div>`;
}

// -- metrics panel ---------------------------------------------------

export function renderTrafficTable(snapshots: SnapshotView[]): string {
  const head =
    `<tr><th>tc</th><th>time</th>` +
    TRAFFIC_COLUMNS.map((c) => `<th>${c}</th>`).join("") +
    `</tr>`;
  const body = snapshots
    .map((snap, i) => {
      const reference = referenceByTime(snap.at);
      const cells = TRAFFIC_COLUMNS.map((column) => {
        const value = snap.payload.traffic[COLUMN_NODE[column]] ?? 0;
        const expected = reference?.cells[column];
        if (expected !== undefined && expected !== value) {
          return (
            `<td class="divergent" data-column="${column}" data-reference="${expected}" ` +
            `title="reference table prints ${expected}">${value}</td>`
          );
        }
        return `<td data-column="${column}">${value}</td>`;
      }).join("");
      return `<tr data-tc="${i + 1}"><td>${i + 1}</td><td>${snap.at}</td>${cells}</tr>`;
    })
    .join("");
  return `<table class="traffic"><thead>${head}</thead><tbody>${body}</tbody></table>`;
}

export function renderUtilizationChart(snapshots: SnapshotView[]): string {
  const names = new Set<string>();
  for (const snap of snapshots) {
    for (const name of Object.keys(snap.payload.utilizations)) names.add(name);
  }
  const maxT = Math.max(1, ...snapshots.map((s) => s.at));
  const lines = [...names]
    .sort()
    .map((name) => {
      const points = snapshots
        .filter((s) => name in s.payload.utilizations)
        .map((s) => `${s.at},${100 - (s.payload.utilizations[name] ?? 0)}`)
        .join(" ");
      return `<polyline data-uv="${name}" fill="none" points="${points}"></polyline>`;
    })
    .join("");
  return (
    `<svg class="utilization-chart" viewBox="0 0 ${maxT} 100" preserveAspectRatio="none">` +
    `${lines}</svg>`
  );
}

// -- control panel ---------------------------------------------------

export function renderControls(state: ConsoleState): string {
  const manual = manualActive(state);
  const latest = latestSnapshot(state);
  const fleet = latest === null ? [] : fleetNames(latest.payload);

  const modeToggle =
    `<div class="mode-toggle">` +
    `<button data-command="mode-automatic"${manual ? "" : ' class="active"'}>automatic</button>` +
    `<button data-command="mode-manual"${manual ? ' class="active"' : ""}>manual</button>` +
    `</div>`;
  const options = PATTERNS.map((p) => `<option value="${p}">${p}</option>`).join("");
  const selector =
    `<select class="pattern-select" data-command="pattern"` +
    `${manual ? "" : " disabled"}>${options}</select>`;
  const failures =
    `<div class="failures">` +
    fleet
      .map((n) => `<button data-command="fail" data-uv="${n}">fail ${n}</button>`)
      .join("") +
    `</div>`;
  const pace =
    `<div class="pace">` +
    `<button data-command="pause">pause</button>` +
    `<button data-command="step">step</button>` +
    `<input class="pace-input" data-command="pace" type="number" min="0" step="0.5" value="1">` +
    `<button data-command="run-max">run to end</button>` +
    `</div>`;
  const log =
    `<ul class="command-log">` +
    state.commands
      .map((c) => {
        const error = c.error === null ? "" : ` <span class="error">${escapeHtml(c.error)}</span>`;
        return (
          `<li class="command ${c.status}" data-id="${c.id}" data-status="${c.status}">` +
          `${escapeHtml(c.label)}${error}</li>`
        );
      })
      .join("") +
    `</ul>`;
  return `<div class="controls">${modeToggle}${selector}${failures}${pace}${log}</div>`;
}

// -- whole console ---------------------------------------------------

export function renderConsole(state: ConsoleState): string {
  const latest = latestSnapshot(state);
  const banner =
    state.banner === null ? "" : `<div class="banner">${escapeHtml(state.banner)}</div>`;
  const status =
    `<header class="status">` +
    `<span class="conn ${state.connected ? "online" : "offline"}">` +
    `${state.connected ? "connected" : "disconnected"}</span>` +
    `<span class="clock">t=${latest === null ? "-" : latest.at} min</span>` +
    `<span class="mode">${latest === null ? "automatic" : latest.payload.mode}</span>` +
    `</header>`;
  return (
    `<div class="console">${banner}${status}` +
    `<section id="fleet">${renderFleet(latest?.payload ?? null)}</section>` +
    `<section id="topology">${renderTopology(latest?.payload ?? null)}</section>` +
    `<section id="metrics">${renderTrafficTable(state.snapshots)}` +
    `${renderUtilizationChart(state.snapshots)}</section>` +
    `<section id="controls">${renderControls(state)}</section>` +
    `</div>`
  );
}
