import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { decodeRecords, encodeRecord, encodeRecords } from "../src/codec.js";
import { AnnotationRecord } from "../src/types.js";

const FIXTURE = join(
  dirname(fileURLToPath(import.meta.url)),
  "..",
  "fixtures",
  "reference_track.jsonl",
);

function record(overrides: Partial<AnnotationRecord> = {}): AnnotationRecord {
  return {
    videoId: "v",
    frame: 0,
    annotator: "a",
    valence: null,
    arousal: null,
    aus: null,
    expression: null,
    ...overrides,
  };
}

describe("codec", () => {
  it("encodes in canonical key order with compact separators", () => {
    const line = encodeRecord(
      record({ valence: 0.38, arousal: 0.35, expression: "happiness" }),
    );
    expect(line).toBe(
      '{"video_id":"v","frame":0,"annotator":"a","valence":0.38,' +
        '"arousal":0.35,"aus":null,"expression":"happiness"}',
    );
  });

  it("keeps one decimal on integral floats, shortest repr otherwise", () => {
    expect(encodeRecord(record({ valence: 1, arousal: -1 }))).toContain(
      '"valence":1.0,"arousal":-1.0',
    );
    expect(encodeRecord(record({ valence: 0.125, arousal: 0.5 }))).toContain(
      '"valence":0.125,"arousal":0.5',
    );
  });

  it("orders AU keys canonically", () => {
    const bits = [true, false, false, false, false, false, false, true];
    expect(encodeRecord(record({ aus: bits }))).toContain(
      '"aus":{"1":1,"2":0,"4":0,"6":0,"12":0,"15":0,"20":0,"25":1}',
    );
  });

  it("round-trips the hand-written reference file byte-for-byte", () => {
    const raw = readFileSync(FIXTURE, "utf-8");
    const records = decodeRecords(raw);
    expect(records.length).toBe(21);
    expect(encodeRecords(records)).toBe(raw);
  });

  it("rejects half-absent VA pairs", () => {
    expect(() => encodeRecord(record({ valence: 0.5 }))).toThrow();
    expect(() =>
      decodeRecords('{"video_id":"v","frame":0,"annotator":"a","valence":0.5,' +
        '"arousal":null,"aus":null,"expression":null}\n'),
    ).toThrow(/half-absent/);
  });

  it("reports the offending line number", () => {
    const good = encodeRecord(record());
    expect(() => decodeRecords(`${good}\n{nope\n`)).toThrow(/line 2/);
  });

  it("empty body decodes to no records and encodes to empty string", () => {
    expect(decodeRecords("")).toEqual([]);
    expect(encodeRecords([])).toBe("");
  });
});
