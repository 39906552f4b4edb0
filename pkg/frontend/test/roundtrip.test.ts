/**
 * Acceptance round trip: labels entered through the UI state machine for
 * a 90-frame fixture, saved through the versioned protocol, re-exported,
 * and compared byte-for-byte against the hand-written reference
 * JSON-lines file; plus the stale-version conflict path.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { BackendClient } from "../src/api.js";
import {
  applyTag,
  commitSave,
  hasPendingEdits,
  newTrack,
  pendingRecords,
  rebase,
} from "../src/track.js";
import { VideoMeta, makeSelection, rangeSelection } from "../src/types.js";
import { MemoryBackend } from "./helpers.js";

const REFERENCE = readFileSync(
  join(dirname(fileURLToPath(import.meta.url)), "..", "fixtures", "reference_track.jsonl"),
  "utf-8",
);

const META: VideoMeta = {
  video_id: "clip90",
  subject_id: "subj0",
  frame_count: 90,
  fps: 30,
  valid: true,
};
const N = META.frame_count;
const VIDEO = META.video_id;
const ANNOTATOR = "expert1";

describe("annotation round trip", () => {
  it("reproduces the reference file byte-for-byte", async () => {
    const backend = new MemoryBackend([META]);
    // frame 89 was annotated in an earlier session (VA from the original
    // track plus a smile); this save session must merge around it
    backend.seed(VIDEO, ANNOTATOR, [
      {
        videoId: VIDEO, frame: 89, annotator: ANNOTATOR,
        valence: 0.5, arousal: -0.25,
        aus: [false, false, false, false, true, false, false, false],
        expression: "happiness",
      },
    ]);
    const client = new BackendClient("", backend.fetch);

    // load the video: fetch the existing track at its current version
    const fetched = await client.fetchTrack(VIDEO, ANNOTATOR);
    const track = newTrack(VIDEO, ANNOTATOR, N, fetched.records, fetched.version);
    expect(track.baseVersion).toBe(1);

    // annotate: brow raise + surprise on frame 0
    applyTag(track, makeSelection(VIDEO, [0], N), { kind: "au", activeTag: 1 });
    applyTag(track, makeSelection(VIDEO, [0], N), { kind: "au", activeTag: 2 });
    applyTag(track, makeSelection(VIDEO, [0], N), {
      kind: "expression", activeTag: "surprise",
    });
    // a brow-lowering passage on frames 10..20
    applyTag(track, rangeSelection(VIDEO, 10, 20, N), { kind: "au", activeTag: 4 });
    // a happy stretch on 30..35, with the last frame corrected to sadness
    applyTag(track, rangeSelection(VIDEO, 30, 35, N), {
      kind: "expression", activeTag: "happiness",
    });
    applyTag(track, makeSelection(VIDEO, [35], N), {
      kind: "expression", activeTag: "sadness",
    });
    // two isolated smile-with-open-mouth frames
    applyTag(track, makeSelection(VIDEO, [50, 52], N), { kind: "au", activeTag: 12 });
    applyTag(track, makeSelection(VIDEO, [50, 52], N), { kind: "au", activeTag: 25 });

    expect(hasPendingEdits(track)).toBe(true);
    const result = await client.save(
      VIDEO, ANNOTATOR, pendingRecords(track), track.baseVersion,
    );
    expect(result).toEqual({ status: "ok", version: 2 });
    commitSave(track, 2);

    // re-export from the backend and compare bytes
    expect(backend.exportTrack(VIDEO, ANNOTATOR)).toBe(REFERENCE);

    // the client sees the same bytes through the GET endpoint
    const refetched = await client.fetchTrack(VIDEO, ANNOTATOR);
    expect(refetched.version).toBe(2);
  });

  it("stale save surfaces the conflict flow and recovers", async () => {
    const backend = new MemoryBackend([META]);
    const client = new BackendClient("", backend.fetch);

    // two annotator sessions race on the same track
    const session1 = newTrack(VIDEO, ANNOTATOR, N);
    const session2 = newTrack(VIDEO, ANNOTATOR, N);
    applyTag(session1, makeSelection(VIDEO, [1], N), { kind: "au", activeTag: 6 });
    applyTag(session2, makeSelection(VIDEO, [2], N), { kind: "au", activeTag: 20 });

    const first = await client.save(
      VIDEO, ANNOTATOR, pendingRecords(session1), session1.baseVersion,
    );
    expect(first.status).toBe("ok");

    const stale = await client.save(
      VIDEO, ANNOTATOR, pendingRecords(session2), session2.baseVersion,
    );
    expect(stale).toEqual({ status: "conflict", currentVersion: 1 });

    // conflict path: refetch, rebase (edits stay pending), save again
    const fresh = await client.fetchTrack(VIDEO, ANNOTATOR);
    rebase(session2, fresh.records, fresh.version);
    expect(hasPendingEdits(session2)).toBe(true);
    const retry = await client.save(
      VIDEO, ANNOTATOR, pendingRecords(session2), session2.baseVersion,
    );
    expect(retry).toEqual({ status: "ok", version: 2 });

    // both edits survive in the merged track
    const final = await client.fetchTrack(VIDEO, ANNOTATOR);
    expect(final.records.map((r) => r.frame)).toEqual([1, 2]);
  });
});
