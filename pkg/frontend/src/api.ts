/**
 * Backend client for the annotation endpoints.
 *
 * Save uses optimistic concurrency: the PUT carries X-Expected-Version
 * and a 409 response surfaces as a conflict result (with the backend's
 * current version) instead of an exception, so the UI can refetch and
 * prompt.
 */

import { decodeRecords, encodeRecords } from "./codec.js";
import { AnnotationRecord, VideoMeta } from "./types.js";

export type FetchLike = (
  url: string,
  init?: RequestInit,
) => Promise<Response>;

export interface TrackFetch {
  records: AnnotationRecord[];
  version: number;
}

export type SaveResult =
  | { status: "ok"; version: number }
  | { status: "conflict"; currentVersion: number };

export class BackendClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private url(path: string): string {
    return `${this.base}${path}`;
  }

  async health(): Promise<{ status: string; version: string }> {
    const resp = await this.fetchFn(this.url("/health"));
    if (!resp.ok) throw new Error(`health check failed: ${resp.status}`);
    return resp.json();
  }

  async listVideos(): Promise<VideoMeta[]> {
    const resp = await this.fetchFn(this.url("/videos"));
    if (!resp.ok) throw new Error(`listing videos failed: ${resp.status}`);
    return resp.json();
  }

  frameUrl(videoId: string, frame: number): string {
    return this.url(`/videos/${encodeURIComponent(videoId)}/frames/${frame}`);
  }

  async fetchTrack(videoId: string, annotator: string): Promise<TrackFetch> {
    const resp = await this.fetchFn(
      this.url(
        `/annotations/${encodeURIComponent(videoId)}/${encodeURIComponent(annotator)}`,
      ),
    );
    if (resp.status === 404) {
      throw new Error(`unknown video ${videoId}`);
    }
    if (!resp.ok) throw new Error(`fetching annotations failed: ${resp.status}`);
    const version = Number(resp.headers.get("X-Version") ?? "0");
    const body = await resp.text();
    return { records: decodeRecords(body), version };
  }

  async save(
    videoId: string,
    annotator: string,
    records: readonly AnnotationRecord[],
    expectedVersion: number,
  ): Promise<SaveResult> {
    const resp = await this.fetchFn(
      this.url(
        `/annotations/${encodeURIComponent(videoId)}/${encodeURIComponent(annotator)}`,
      ),
      {
        method: "PUT",
        headers: {
          "Content-Type": "application/x-ndjson",
          "X-Expected-Version": String(expectedVersion),
        },
        body: encodeRecords(records),
      },
    );
    if (resp.status === 409) {
      const body = await resp.json();
      return { status: "conflict", currentVersion: body.current_version };
    }
    if (!resp.ok) {
      const body = await resp.text();
      throw new Error(`save failed (${resp.status}): ${body}`);
    }
    const body = await resp.json();
    return { status: "ok", version: body.version };
  }
}
