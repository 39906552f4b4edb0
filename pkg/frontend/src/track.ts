/**
 * Pure annotation-track state.
 *
 * The editor holds the last-fetched track (base) plus a pending edit
 * set. Tags are applied to the effective view (base with edits on top);
 * saving sends exactly the pending edit set, so the records put to the
 * backend equal the edits applied to the last fetched track, never
 * fabricated labels.
 */

import {
  AU_IDS,
  AnnotationRecord,
  FrameLabels,
  LabelTab,
  TimelineSelection,
  cloneLabels,
  emptyLabels,
} from "./types.js";

export interface TrackState {
  videoId: string;
  annotator: string;
  frameCount: number;
  /** last track fetched from the backend */
  base: Map<number, FrameLabels>;
  baseVersion: number;
  /** local, unsaved frame edits */
  edits: Map<number, FrameLabels>;
}

export function newTrack(
  videoId: string,
  annotator: string,
  frameCount: number,
  records: readonly AnnotationRecord[] = [],
  version = 0,
): TrackState {
  const base = new Map<number, FrameLabels>();
  for (const rec of records) {
    if (rec.videoId !== videoId || rec.annotator !== annotator) {
      throw new Error("record does not belong to this track");
    }
    base.set(rec.frame, cloneLabels(rec));
  }
  return { videoId, annotator, frameCount, base, baseVersion: version, edits: new Map() };
}

export function effectiveLabels(state: TrackState, frame: number): FrameLabels {
  const edited = state.edits.get(frame);
  if (edited) return cloneLabels(edited);
  const base = state.base.get(frame);
  return base ? cloneLabels(base) : emptyLabels();
}

/** Apply one tag to every selected frame; returns the new pending-edit count. */
export function applyTag(
  state: TrackState,
  selection: TimelineSelection,
  tab: LabelTab,
): number {
  if (selection.videoId !== state.videoId) {
    throw new Error("selection targets a different video");
  }
  for (const frame of selection.frames) {
    if (frame < 0 || frame >= state.frameCount) {
      throw new Error(`frame ${frame} outside the video`);
    }
    const labels = effectiveLabels(state, frame);
    if (tab.kind === "au") {
      const idx = AU_IDS.indexOf(tab.activeTag);
      const bits = labels.aus ?? AU_IDS.map(() => false);
      bits[idx] = !bits[idx];
      labels.aus = bits;
    } else {
      // one category per frame: the new tag replaces any prior one
      labels.expression = tab.activeTag;
    }
    state.edits.set(frame, labels);
  }
  return state.edits.size;
}

export function clearExpression(state: TrackState, selection: TimelineSelection): void {
  for (const frame of selection.frames) {
    const labels = effectiveLabels(state, frame);
    labels.expression = null;
    state.edits.set(frame, labels);
  }
}

export function hasPendingEdits(state: TrackState): boolean {
  return state.edits.size > 0;
}

/** Records to send on save: exactly the pending edit set, frame-sorted. */
export function pendingRecords(state: TrackState): AnnotationRecord[] {
  return [...state.edits.keys()]
    .sort((a, b) => a - b)
    .map((frame) => ({
      videoId: state.videoId,
      frame,
      annotator: state.annotator,
      ...cloneLabels(state.edits.get(frame)!),
    }));
}

/** Fold a successful save into the base track. */
export function commitSave(state: TrackState, newVersion: number): void {
  for (const [frame, labels] of state.edits) {
    state.base.set(frame, labels);
  }
  state.edits.clear();
  state.baseVersion = newVersion;
}

/** Replace the base with a refetched track, keeping local edits pending. */
export function rebase(
  state: TrackState,
  records: readonly AnnotationRecord[],
  version: number,
): void {
  state.base.clear();
  for (const rec of records) {
    state.base.set(rec.frame, cloneLabels(rec));
  }
  state.baseVersion = version;
}

/**
 * Dense per-frame track for the replay overlay (mirror of the backend's
 * replay semantics: one entry per frame, null where unlabeled).
 */
export function replayTrack(
  records: readonly AnnotationRecord[],
  frameCount: number,
): (FrameLabels | null)[] {
  const track: (FrameLabels | null)[] = new Array(frameCount).fill(null);
  for (const rec of records) {
    if (rec.frame < frameCount) {
      track[rec.frame] = cloneLabels(rec);
    }
  }
  return track;
}

/** Expression exclusivity holds in every rendered state. */
export function assertExclusive(track: (FrameLabels | null)[]): void {
  for (const entry of track) {
    if (entry && entry.expression !== null && typeof entry.expression !== "string") {
      throw new Error("corrupt expression label");
    }
  }
}
