/** Shared domain types mirroring the backend's annotation model. */

export const AU_IDS = [1, 2, 4, 6, 12, 15, 20, 25] as const;
export type AuId = (typeof AU_IDS)[number];

export const EXPRESSIONS = [
  "anger",
  "disgust",
  "fear",
  "happiness",
  "sadness",
  "surprise",
  "neutral",
] as const;
export type Expression = (typeof EXPRESSIONS)[number];

/** Labels carried by one frame; absent families are null. */
export interface FrameLabels {
  valence: number | null;
  arousal: number | null;
  /** bit per AU in AU_IDS order, or null when the family is absent */
  aus: boolean[] | null;
  expression: Expression | null;
}

export interface AnnotationRecord extends FrameLabels {
  videoId: string;
  frame: number;
  annotator: string;
}

export interface VideoMeta {
  video_id: string;
  subject_id: string;
  frame_count: number;
  fps: number;
  valid?: boolean;
  problems?: string[];
}

export type LabelTab =
  | { kind: "au"; activeTag: AuId }
  | { kind: "expression"; activeTag: Expression };

export interface TimelineSelection {
  videoId: string;
  mode: "range" | "frame-set";
  /** ordered, deduplicated frame indices */
  frames: number[];
}

export function emptyLabels(): FrameLabels {
  return { valence: null, arousal: null, aus: null, expression: null };
}

export function cloneLabels(labels: FrameLabels): FrameLabels {
  return {
    valence: labels.valence,
    arousal: labels.arousal,
    aus: labels.aus === null ? null : [...labels.aus],
    expression: labels.expression,
  };
}

/** Range or frame-set selection, validated against the frame count. */
export function makeSelection(
  videoId: string,
  frames: Iterable<number>,
  frameCount: number,
  mode: "range" | "frame-set" = "frame-set",
): TimelineSelection {
  const unique = [...new Set(frames)].sort((a, b) => a - b);
  if (unique.length === 0) {
    throw new Error("selection must be non-empty");
  }
  for (const f of unique) {
    if (!Number.isInteger(f) || f < 0 || f >= frameCount) {
      throw new Error(`frame ${f} outside [0, ${frameCount})`);
    }
  }
  return { videoId, mode, frames: unique };
}

export function rangeSelection(
  videoId: string,
  start: number,
  end: number,
  frameCount: number,
): TimelineSelection {
  if (end < start) {
    throw new Error(`range end ${end} before start ${start}`);
  }
  const frames = [];
  for (let f = start; f <= end; f++) frames.push(f);
  return makeSelection(videoId, frames, frameCount, "range");
}
