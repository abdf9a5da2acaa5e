import { describe, expect, it } from "vitest";

import { SnapshotPayload } from "../src/model.js";
import {
  clustersOf,
  renderControls,
  renderFleet,
  renderTopology,
  renderTrafficTable,
  renderUtilizationChart,
} from "../src/render.js";
import { replay, goldenEvents } from "./helpers.js";

const events = goldenEvents();
const full = replay(events);

function snapshotAt(minute: number): SnapshotPayload {
  const view = full.snapshots.find((s) => s.at === minute);
  if (view === undefined) throw new Error(`no snapshot at ${minute}`);
  return view.payload;
}

describe("topology view", () => {
  it("renders the empty first snapshot as a placeholder", () => {
    const html = renderTopology(snapshotAt(2));
    expect(html).toContain("no pattern assigned");
    expect(html).toContain('data-pattern="none"');
    // the unreachable ground vehicle still shows, greyed out
    expect(html).toContain('class="node uncontrolled" data-node="UGV3"');
    expect(html).not.toContain('data-layer="1"');
  });

  it("renders the single-layer manual snapshot with greyed ground vehicles", () => {
    const html = renderTopology(snapshotAt(12));
    expect(html).toContain('data-pattern="central"');
    const layer1 = html.match(/data-layer="1"/g) ?? [];
    expect(layer1).toHaveLength(1);
    expect(html).not.toContain('data-layer="2"');
    for (const uav of ["UAV2", "UAV4", "UAV5"]) {
      expect(html).toContain(`data-from="MCC" data-to="${uav}"`);
    }
    for (const ugv of ["UGV1", "UGV3"]) {
      expect(html).toContain(`class="node uncontrolled" data-node="${ugv}"`);
    }
  });

  it("renders the three-layer snapshot with mesh and grouped cluster", () => {
    const html = renderTopology(snapshotAt(20));
    expect(html).toContain('data-pattern="holonic"');
    for (const layer of ["1", "2", "3"]) {
      expect(html).toContain(`data-layer="${layer}"`);
    }
    // dashed lateral mesh among the three operational vehicles
    expect(html).toContain('class="edge peer" data-a="UAV1" data-b="UAV3"');
    expect(html).toContain('class="edge peer" data-a="UAV1" data-b="UAV5"');
    expect(html).toContain('class="edge peer" data-a="UAV3" data-b="UAV5"');
    // ground cluster grouped under its head, which uplinks through UAV3
    expect(html).toContain('<div class="cluster" data-head="UGV2">');
    expect(html).toContain('data-from="UAV3" data-to="UGV2"');
    expect(html).toContain('class="node head" data-node="UGV2"');
    const cluster = html.match(/<div class="cluster"[^>]*>(.*?)<\/div>/)![1]!;
    expect(cluster).toContain('data-node="UGV1"');
    expect(cluster).toContain('data-node="UGV3"');
  });

  it("derives clusters from layers plus peer links", () => {
    expect(clustersOf(snapshotAt(20).topology)).toEqual([
      { head: "UGV2", members: ["UGV1", "UGV3"] },
    ]);
    expect(clustersOf(snapshotAt(12).topology)).toEqual([]);
  });
});

describe("fleet panel", () => {
  it("shows one gauge per vehicle with its state badge", () => {
    const html = renderFleet(snapshotAt(20));
    expect(html.match(/<li class="uv"/g)).toHaveLength(8);
    expect(html).toContain('data-uv="UAV1"');
    expect(html).toMatch(/data-uv="UAV1"[^<]*<span class="name">UAV1<\/span><span class="badge badge-controlled">/);
    expect(html).toContain('value="33"'); // injected utilization for UAV1
  });
});

describe("metrics panel", () => {
  it("highlights exactly the one cell that differs from the reference", () => {
    const html = renderTrafficTable(full.snapshots);
    const divergent = html.match(/<td class="divergent"[^>]*>/g) ?? [];
    expect(divergent).toHaveLength(1);
    expect(divergent[0]).toContain('data-column="Tr_A1"');
    expect(divergent[0]).toContain('data-reference="800"');
    const row8 = html.match(/<tr data-tc="8">.*?<\/tr>/)![0];
    expect(row8).toContain('class="divergent" data-column="Tr_A1" data-reference="800"');
    expect(row8).toMatch(/data-reference="800"[^>]*>1600</);
  });

  it("lays the table out row-per-snapshot in reference column order", () => {
    const html = renderTrafficTable(full.snapshots);
    expect(html.match(/<tr data-tc=/g)).toHaveLength(9);
    expect(html).toContain("<th>Tr_A1</th>");
    expect(html).toContain("<th>Tr_MCC</th>");
    const finalRow = html.match(/<tr data-tc="9">.*?<\/tr>/)![0];
    expect(finalRow).toContain(">16000<");
  });

  it("draws one utilization series per vehicle", () => {
    const svg = renderUtilizationChart(full.snapshots);
    expect(svg.match(/<polyline/g)).toHaveLength(8);
    // injected 33% at minute 20 plots as y = 100 - 33
    expect(svg).toMatch(/data-uv="UAV1"[^>]*points="[^"]*20,67"/);
  });
});

describe("control panel", () => {
  it("disables the pattern selector while automatic", () => {
    const automatic = replay(
      events.slice(0, events.findIndex((e) => e.kind === "snapshot" && e.at === 8) + 1)
    );
    const html = renderControls(automatic);
    expect(html).toContain('data-command="pattern" disabled');
    expect(html).toMatch(/data-command="mode-automatic" class="active"/);
  });

  it("enables the selector and failure buttons in manual mode", () => {
    const html = renderControls(full); // final snapshot is manual
    expect(html).not.toContain("disabled");
    expect(html).toMatch(/data-command="mode-manual" class="active"/);
    expect(html.match(/data-command="fail"/g)).toHaveLength(8);
  });
});
