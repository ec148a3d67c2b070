import { describe, expect, it } from "vitest";

import { bucketCounts, changeStability, specCurve } from "../src/aggregate";
import type { MultiverseModel, UniverseRecord } from "../src/store";

const BUCKETS = [
  "full-replication",
  "unconfirmed-results",
  "opposite-results",
  "model-fit-failure",
];

function rec(
  id: number,
  assignment: Record<string, string>,
  bucket: string,
  matches: number,
): UniverseRecord {
  return {
    universe_id: id,
    assignment,
    dvs: {},
    study_bucket: bucket,
    match_count: matches,
  };
}

function toyModel(records: UniverseRecord[]): MultiverseModel {
  const header = {
    format: "forkgarden-store",
    version: 1,
    engine: "test",
    alpha: 0.05,
    spec_digest: "",
    dataset_digest: "",
    n_universes: records.length,
    dv_names: [],
    decisions: [
      { id: "periods", kind: "count", values: ["4", "8"] },
      { id: "period_length", kind: "duration-days", values: ["30", "60"] },
    ],
    severity: BUCKETS,
    baseline: {},
  };
  return {
    header,
    records,
    decisions: header.decisions,
    dvNames: [],
    buckets: BUCKETS,
    byId: new Map(records.map((r) => [r.universe_id, r])),
  };
}

// Bucket depends only on periods: flipping periods always flips the
// outcome, flipping period_length never does.
const twoByTwo = [
  rec(0, { periods: "4", period_length: "30" }, BUCKETS[0], 3),
  rec(1, { periods: "4", period_length: "60" }, BUCKETS[0], 3),
  rec(2, { periods: "8", period_length: "30" }, BUCKETS[2], 0),
  rec(3, { periods: "8", period_length: "60" }, BUCKETS[2], 0),
];

describe("specCurve", () => {
  it("orders by match count then universe id", () => {
    const records = [
      rec(0, { periods: "4", period_length: "30" }, BUCKETS[0], 2),
      rec(1, { periods: "4", period_length: "60" }, BUCKETS[1], 0),
      rec(2, { periods: "8", period_length: "30" }, BUCKETS[1], 1),
      rec(3, { periods: "8", period_length: "60" }, BUCKETS[1], 1),
    ];
    const curve = specCurve(records);
    expect(curve.map((p) => p.universeId)).toEqual([1, 2, 3, 0]);
    expect(curve.map((p) => p.matchCount)).toEqual([0, 1, 1, 2]);
  });
});

describe("bucketCounts", () => {
  it("tallies study buckets with zeros for absent buckets", () => {
    const model = toyModel(twoByTwo);
    const counts = bucketCounts(model, twoByTwo);
    expect([...counts.keys()]).toEqual(BUCKETS);
    expect(counts.get(BUCKETS[0])).toBe(2);
    expect(counts.get(BUCKETS[1])).toBe(0);
    expect(counts.get(BUCKETS[2])).toBe(2);
    expect(counts.get(BUCKETS[3])).toBe(0);
  });
});

describe("changeStability", () => {
  it("reports flip rate 1 for the deciding decision and 0 for the inert one", () => {
    const model = toyModel(twoByTwo);
    const stability = changeStability(model, twoByTwo);

    const periods = stability.get("periods")!;
    expect(periods.nGroups).toBe(2);
    expect(periods.pairsTotal).toBe(4);
    expect(periods.pairsDiffering).toBe(4);
    expect(periods.flipRate).toBe(1.0);
    expect(Object.fromEntries(periods.histogram)).toEqual({ "2": 2 });

    const length = stability.get("period_length")!;
    expect(length.nGroups).toBe(2);
    expect(length.pairsTotal).toBe(4);
    expect(length.pairsDiffering).toBe(0);
    expect(length.flipRate).toBe(0.0);
    expect(Object.fromEntries(length.histogram)).toEqual({ "1": 2 });
  });

  it("matches a hand-worked mixed group", () => {
    // One group of three universes with buckets A, A, B: ordered pairs
    // 3*2 = 6, same-bucket pairs 2*1 = 2, so 4 of 6 differ.
    const records = [
      rec(0, { periods: "4", period_length: "30" }, BUCKETS[0], 0),
      rec(1, { periods: "4", period_length: "60" }, BUCKETS[0], 0),
      rec(2, { periods: "4", period_length: "90" }, BUCKETS[2], 0),
    ];
    const model = toyModel(records);
    model.decisions[1] = {
      id: "period_length",
      kind: "duration-days",
      values: ["30", "60", "90"],
    };
    const s = changeStability(model, records).get("period_length")!;
    expect(s.nGroups).toBe(1);
    expect(s.pairsTotal).toBe(6);
    expect(s.pairsDiffering).toBe(4);
    expect(s.flipRate).toBe(4 / 6);
    expect(Object.fromEntries(s.histogram)).toEqual({ "2": 1 });
  });

  it("gives singleton groups zero pairs, not NaN", () => {
    const only = [twoByTwo[0], twoByTwo[2]];
    const model = toyModel(only);
    const s = changeStability(model, only).get("period_length")!;
    expect(s.nGroups).toBe(2);
    expect(s.pairsTotal).toBe(0);
    expect(s.flipRate).toBe(0.0);
    expect(Object.fromEntries(s.histogram)).toEqual({ "1": 2 });
  });
});
