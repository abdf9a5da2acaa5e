/**
 * Reference per-cycle traffic table for the bundled demonstration
 * scenario, as printed (Kbit). Mirrors the simulator's
 * `data/reference_traffic.json`; the console only uses it to highlight
 * cells where the live run diverges, most notably the documented
 * minute-18 cell where the printed 800 is internally inconsistent and
 * the simulator reports 1600.
 */

export const TRAFFIC_COLUMNS = [
  "Tr_A1",
  "Tr_A2",
  "Tr_A3",
  "Tr_A4",
  "Tr_A5",
  "Tr_G1",
  "Tr_G2",
  "Tr_G3",
  "Tr_MCC",
] as const;

export type TrafficColumn = (typeof TRAFFIC_COLUMNS)[number];

/** Column name -> vehicle name in snapshot traffic maps. */
export const COLUMN_NODE: Record<TrafficColumn, string> = {
  Tr_A1: "UAV1",
  Tr_A2: "UAV2",
  Tr_A3: "UAV3",
  Tr_A4: "UAV4",
  Tr_A5: "UAV5",
  Tr_G1: "UGV1",
  Tr_G2: "UGV2",
  Tr_G3: "UGV3",
  Tr_MCC: "MCC",
};

export interface ReferenceRow {
  tc: number;
  time: number;
  cells: Record<TrafficColumn, number>;
}

function row(tc: number, time: number, values: number[]): ReferenceRow {
  const cells = {} as Record<TrafficColumn, number>;
  TRAFFIC_COLUMNS.forEach((column, i) => {
    cells[column] = values[i]!;
  });
  return { tc, time, cells };
}

export const REFERENCE_TRAFFIC: ReferenceRow[] = [
  row(1, 2, [0, 0, 0, 0, 0, 0, 0, 0, 0]),
  row(2, 4, [0, 0, 0, 800, 0, 0, 0, 0, 1600]),
  row(3, 6, [0, 0, 0, 800, 0, 0, 0, 0, 2400]),
  row(4, 8, [0, 0, 0, 800, 800, 0, 0, 0, 4000]),
  row(5, 12, [0, 0, 0, 0, 0, 0, 0, 0, 2400]),
  row(6, 14, [800, 800, 0, 0, 800, 0, 0, 0, 4800]),
  row(7, 16, [800, 0, 1600, 0, 800, 0, 0, 0, 5600]),
  row(8, 18, [800, 0, 1600, 0, 800, 0, 0, 0, 6400]),
  row(9, 20, [4000, 0, 5600, 0, 4000, 1600, 1600, 1600, 16000]),
];

export function referenceByTime(time: number): ReferenceRow | undefined {
  return REFERENCE_TRAFFIC.find((r) => r.time === time);
}
