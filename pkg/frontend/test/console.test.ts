/**
 * Console contract against the recorded gateway stream: the rendered
 * model must reproduce the demonstration session's nine snapshots,
 * layer by layer and placement by placement.
 */

import { describe, expect, it } from "vitest";

import { renderConsole, renderTopology } from "../src/render.js";
import { goldenEvents, replay } from "./helpers.js";

const events = goldenEvents();
const full = replay(events);

const EXPECTED = [
  { at: 2, pattern: null, layerCounts: {} },
  { at: 4, pattern: "hierarchical", layerCounts: { 1: 1, 2: 1 } },
  { at: 6, pattern: "hierarchical", layerCounts: { 1: 2, 2: 1 } },
  { at: 8, pattern: "hierarchical", layerCounts: { 1: 3, 2: 2 } },
  { at: 12, pattern: "central", layerCounts: { 1: 3 } },
  { at: 14, pattern: "hierarchical", layerCounts: { 1: 3, 2: 3 } },
  { at: 16, pattern: "hierarchical", layerCounts: { 1: 3, 2: 4 } },
  { at: 18, pattern: "hierarchical", layerCounts: { 1: 3, 2: 5 } },
  { at: 20, pattern: "holonic", layerCounts: { 1: 3, 2: 3, 3: 2 } },
] as const;

function layerCounts(html: string): Record<number, number> {
  // Count only inside the graph block; the uncontrolled row reuses the
  // same node markup and must not leak into layer totals.
  const graph = html.match(/<div class="graph">([\s\S]*?)<ul class="edges">/);
  if (graph === null) return {};
  const counts: Record<number, number> = {};
  const chunks = graph[1]!.split('<div class="layer" data-layer="');
  for (const chunk of chunks.slice(1)) {
    const layer = Number(chunk[0]);
    if (layer === 0) continue;
    counts[layer] = (chunk.match(/data-node="/g) ?? []).length;
  }
  return counts;
}

describe("nine rendered snapshots", () => {
  it("carries the full pattern sequence", () => {
    expect(full.snapshots.map((s) => s.payload.pattern)).toEqual(EXPECTED.map((e) => e.pattern));
    expect(full.snapshots.map((s) => s.at)).toEqual(EXPECTED.map((e) => e.at));
  });

  it.each(EXPECTED)("minute $at renders pattern $pattern with its layer counts", (expected) => {
    const view = full.snapshots.find((s) => s.at === expected.at)!;
    const html = renderTopology(view.payload);
    expect(html).toContain(`data-pattern="${expected.pattern ?? "none"}"`);
    expect(layerCounts(html)).toEqual(expected.layerCounts);
  });
});

describe("pinned per-vehicle placements", () => {
  const topologyAt = (minute: number) =>
    renderTopology(full.snapshots.find((s) => s.at === minute)!.payload);

  it("minute 14: the operational layer is UAV1, UAV2, UAV5", () => {
    const html = topologyAt(14);
    for (const uav of ["UAV1", "UAV2", "UAV5"]) {
      expect(html).toContain(`data-from="MCC" data-to="${uav}"`);
    }
    expect(html).not.toContain('data-from="MCC" data-to="UAV3"');
    expect(html).not.toContain('data-from="MCC" data-to="UAV4"');
  });

  it("minute 16: the operational layer is UAV1, UAV3, UAV5 and UAV3 relays double", () => {
    const html = topologyAt(16);
    for (const uav of ["UAV1", "UAV3", "UAV5"]) {
      expect(html).toContain(`data-from="MCC" data-to="${uav}"`);
    }
    expect(html).toContain('data-from="UAV3" data-to="UAV2"');
    expect(html).toContain('data-from="UAV3" data-to="UGV3"');
    const view = full.snapshots.find((s) => s.at === 16)!;
    expect(view.payload.traffic["UAV3"]).toBe(1600);
  });

  it("minute 18: the new ground vehicle follows UAV1", () => {
    expect(topologyAt(18)).toContain('data-from="UAV1" data-to="UGV2"');
  });

  it("minute 20: cluster under UAV3 with UAV2 behind UAV1 and UAV4 behind UAV5", () => {
    const html = topologyAt(20);
    expect(html).toContain('<div class="cluster" data-head="UGV2">');
    expect(html).toContain('data-from="UAV3" data-to="UGV2"');
    expect(html).toContain('data-from="UAV1" data-to="UAV2"');
    expect(html).toContain('data-from="UAV5" data-to="UAV4"');
  });
});

describe("reload safety", () => {
  it("replaying the stream reconstructs the identical rendered console", () => {
    expect(renderConsole(replay(events))).toBe(renderConsole(full));
  });

  it("a disconnect/resume split renders the same as one session", () => {
    for (const cut of [1, 57, 200, events.length - 1]) {
      const resumed = replay(events.slice(cut), replay(events.slice(0, cut)));
      expect(renderConsole(resumed)).toBe(renderConsole(full));
    }
  });
});
