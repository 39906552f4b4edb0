/**
 * DOM application: watch a video frame-by-frame, select a time range or
 * individual frames, tag AUs or one basic expression, save with
 * optimistic versioning, and replay with overlay badges to verify.
 */

import { BackendClient } from "./api.js";
import { shortcutFor } from "./keyboard.js";
import {
  TrackState,
  applyTag,
  commitSave,
  effectiveLabels,
  hasPendingEdits,
  newTrack,
  pendingRecords,
  rebase,
  replayTrack,
} from "./track.js";
import {
  AU_IDS,
  EXPRESSIONS,
  LabelTab,
  TimelineSelection,
  VideoMeta,
  makeSelection,
  rangeSelection,
} from "./types.js";

interface PlayerState {
  meta: VideoMeta;
  frame: number;
  playing: boolean;
  timer: number | null;
  rangeStart: number | null;
  pickedFrames: Set<number>;
  tab: LabelTab;
  track: TrackState;
}

export class App {
  private client: BackendClient;
  private annotator: string;
  private state: PlayerState | null = null;

  constructor(
    private root: HTMLElement,
    client?: BackendClient,
    annotator?: string,
  ) {
    this.client = client ?? new BackendClient("");
    this.annotator =
      annotator ?? new URLSearchParams(location.search).get("annotator") ?? "expert1";
    this.renderShell();
  }

  private el<T extends HTMLElement>(id: string): T {
    return this.root.querySelector(`#${id}`) as T;
  }

  private banner(message: string, kind: "error" | "info" = "error"): void {
    const banner = this.el<HTMLDivElement>("banner");
    banner.textContent = message;
    banner.className = message ? `banner ${kind}` : "banner hidden";
  }

  private renderShell(): void {
    this.root.innerHTML = `
      <div id="banner" class="banner hidden"></div>
      <header>
        <select id="video-select"><option>loading...</option></select>
        <span id="annotator-label"></span>
      </header>
      <main>
        <div id="viewer">
          <img id="frame-img" alt="frame" />
          <div id="overlay"></div>
          <div id="transport">
            <button id="play">play</button>
            <input type="range" id="scrubber" min="0" max="0" value="0" />
            <span id="frame-label">-</span>
          </div>
          <div id="selection-controls">
            <button id="mark-start">mark range start</button>
            <button id="mark-end">mark range end</button>
            <button id="pick-frame">pick frame</button>
            <button id="clear-selection">clear</button>
            <span id="selection-label">no selection</span>
          </div>
        </div>
        <aside>
          <div id="tabs">
            <div class="tab-block"><h3>Action units</h3><div id="au-tabs"></div></div>
            <div class="tab-block"><h3>Expression</h3><div id="expr-tabs"></div></div>
          </div>
          <button id="apply">apply tag to selection</button>
          <button id="save">save</button>
          <button id="replay">replay with overlay</button>
          <pre id="status"></pre>
        </aside>
      </main>`;
    this.el<HTMLSelectElement>("video-select").addEventListener("change", (e) =>
      this.loadVideo((e.target as HTMLSelectElement).value),
    );
    this.el<HTMLButtonElement>("play").addEventListener("click", () => this.togglePlay());
    this.el<HTMLInputElement>("scrubber").addEventListener("input", (e) =>
      this.showFrame(Number((e.target as HTMLInputElement).value)),
    );
    this.el<HTMLButtonElement>("mark-start").addEventListener("click", () => {
      if (this.state) this.state.rangeStart = this.state.frame;
      this.updateSelectionLabel();
    });
    this.el<HTMLButtonElement>("mark-end").addEventListener("click", () => {
      this.updateSelectionLabel();
    });
    this.el<HTMLButtonElement>("pick-frame").addEventListener("click", () => {
      this.state?.pickedFrames.add(this.state.frame);
      this.updateSelectionLabel();
    });
    this.el<HTMLButtonElement>("clear-selection").addEventListener("click", () => {
      if (this.state) {
        this.state.rangeStart = null;
        this.state.pickedFrames.clear();
      }
      this.updateSelectionLabel();
    });
    this.el<HTMLButtonElement>("apply").addEventListener("click", () => this.apply());
    this.el<HTMLButtonElement>("save").addEventListener("click", () => void this.save());
    this.el<HTMLButtonElement>("replay").addEventListener("click", () => void this.replay());
    document.addEventListener("keydown", (e) => this.onKey(e));
    this.el<HTMLSpanElement>("annotator-label").textContent = `annotator: ${this.annotator}`;
    this.renderTabs();
    void this.start();
  }

  private renderTabs(): void {
    const auTabs = this.el<HTMLDivElement>("au-tabs");
    auTabs.innerHTML = AU_IDS.map(
      (au, i) => `<button class="tag au" data-au="${au}">AU${au} <kbd>${i + 1}</kbd></button>`,
    ).join("");
    auTabs.querySelectorAll("button").forEach((b) =>
      b.addEventListener("click", () =>
        this.setTab({ kind: "au", activeTag: Number(b.dataset.au) as never }),
      ),
    );
    const exprTabs = this.el<HTMLDivElement>("expr-tabs");
    exprTabs.innerHTML = EXPRESSIONS.map(
      (e) => `<button class="tag expr" data-expr="${e}">${e}</button>`,
    ).join("");
    exprTabs.querySelectorAll("button").forEach((b) =>
      b.addEventListener("click", () =>
        this.setTab({ kind: "expression", activeTag: b.dataset.expr as never }),
      ),
    );
  }

  private setTab(tab: LabelTab): void {
    if (this.state) this.state.tab = tab;
    this.root.querySelectorAll("button.tag").forEach((b) => b.classList.remove("active"));
    const selector =
      tab.kind === "au"
        ? `button[data-au="${tab.activeTag}"]`
        : `button[data-expr="${tab.activeTag}"]`;
    this.root.querySelector(selector)?.classList.add("active");
  }

  private async start(): Promise<void> {
    try {
      const videos = await this.client.listVideos();
      const select = this.el<HTMLSelectElement>("video-select");
      select.innerHTML = videos
        .map(
          (v) =>
            `<option value="${v.video_id}" ${v.valid === false ? "disabled" : ""}>` +
            `${v.video_id} (${v.frame_count} frames${v.valid === false ? ", invalid" : ""})</option>`,
        )
        .join("");
      const first = videos.find((v) => v.valid !== false);
      if (first) await this.loadVideo(first.video_id);
    } catch (e) {
      this.banner(`backend unreachable: ${e}`);
    }
  }

  async loadVideo(videoId: string): Promise<void> {
    try {
      const videos = await this.client.listVideos();
      const meta = videos.find((v) => v.video_id === videoId);
      if (!meta) {
        this.banner(`unknown video ${videoId}`);
        return;
      }
      const { records, version } = await this.client.fetchTrack(videoId, this.annotator);
      this.state = {
        meta,
        frame: 0,
        playing: false,
        timer: null,
        rangeStart: null,
        pickedFrames: new Set(),
        tab: { kind: "au", activeTag: AU_IDS[0] },
        track: newTrack(videoId, this.annotator, meta.frame_count, records, version),
      };
      const scrubber = this.el<HTMLInputElement>("scrubber");
      scrubber.max = String(meta.frame_count - 1);
      scrubber.value = "0";
      this.setTab(this.state.tab);
      this.banner("");
      this.showFrame(0);
      this.status(`loaded ${videoId} at version ${version}`);
    } catch (e) {
      this.banner(String(e));
    }
  }

  private showFrame(frame: number): void {
    if (!this.state) return;
    const meta = this.state.meta;
    this.state.frame = Math.max(0, Math.min(frame, meta.frame_count - 1));
    this.el<HTMLImageElement>("frame-img").src = this.client.frameUrl(
      meta.video_id,
      this.state.frame,
    );
    this.el<HTMLInputElement>("scrubber").value = String(this.state.frame);
    this.el<HTMLSpanElement>("frame-label").textContent =
      `${this.state.frame} / ${meta.frame_count - 1}`;
    this.renderOverlay();
  }

  private renderOverlay(): void {
    if (!this.state) return;
    const labels = effectiveLabels(this.state.track, this.state.frame);
    const badges: string[] = [];
    if (labels.aus) {
      AU_IDS.forEach((au, i) => {
        if (labels.aus![i]) badges.push(`<span class="badge au">AU${au}</span>`);
      });
    }
    if (labels.expression) {
      badges.push(`<span class="badge expr">${labels.expression}</span>`);
    }
    this.el<HTMLDivElement>("overlay").innerHTML = badges.join("");
  }

  private togglePlay(): void {
    if (!this.state) return;
    if (this.state.playing) {
      if (this.state.timer !== null) clearInterval(this.state.timer);
      this.state.playing = false;
      this.state.timer = null;
      this.el<HTMLButtonElement>("play").textContent = "play";
      return;
    }
    this.state.playing = true;
    this.el<HTMLButtonElement>("play").textContent = "pause";
    const interval = 1000 / (this.state.meta.fps || 30);
    this.state.timer = setInterval(() => {
      if (!this.state) return;
      if (this.state.frame + 1 >= this.state.meta.frame_count) {
        this.togglePlay();
      } else {
        this.showFrame(this.state.frame + 1);
      }
    }, interval) as unknown as number;
  }

  private currentSelection(): TimelineSelection | null {
    if (!this.state) return null;
    const { meta, rangeStart, pickedFrames, frame } = this.state;
    if (pickedFrames.size > 0) {
      return makeSelection(meta.video_id, pickedFrames, meta.frame_count);
    }
    if (rangeStart !== null) {
      const [a, b] = rangeStart <= frame ? [rangeStart, frame] : [frame, rangeStart];
      return rangeSelection(meta.video_id, a, b, meta.frame_count);
    }
    return makeSelection(meta.video_id, [frame], meta.frame_count);
  }

  private updateSelectionLabel(): void {
    const label = this.el<HTMLSpanElement>("selection-label");
    try {
      const sel = this.currentSelection();
      label.textContent = sel
        ? `${sel.mode}: ${sel.frames.length} frame(s)`
        : "no selection";
    } catch (e) {
      label.textContent = String(e);
    }
  }

  private apply(): void {
    if (!this.state) return;
    try {
      const selection = this.currentSelection();
      if (!selection) return;
      const pending = applyTag(this.state.track, selection, this.state.tab);
      this.status(`${pending} frame(s) pending`);
      this.renderOverlay();
    } catch (e) {
      this.banner(String(e));
    }
  }

  async save(): Promise<void> {
    if (!this.state) return;
    const track = this.state.track;
    if (!hasPendingEdits(track)) {
      this.status("nothing to save");
      return;
    }
    const result = await this.client.save(
      track.videoId,
      track.annotator,
      pendingRecords(track),
      track.baseVersion,
    );
    if (result.status === "conflict") {
      // someone else moved the track forward: refetch, keep local edits
      // pending, and let the annotator re-apply/save
      const fresh = await this.client.fetchTrack(track.videoId, track.annotator);
      rebase(track, fresh.records, fresh.version);
      this.banner(
        `save conflict: track moved to version ${result.currentVersion}; ` +
          `your ${track.edits.size} edit(s) are still pending - review and save again`,
        "info",
      );
      return;
    }
    commitSave(track, result.version);
    this.status(`saved at version ${result.version}`);
    this.renderOverlay();
  }

  async replay(): Promise<void> {
    if (!this.state) return;
    const meta = this.state.meta;
    try {
      const fresh = await this.client.fetchTrack(meta.video_id, this.annotator);
      const track = replayTrack(fresh.records, meta.frame_count);
      let labelled = 0;
      for (const entry of track) if (entry) labelled++;
      this.status(`replaying ${labelled} labelled frame(s) at ${meta.fps} fps`);
      rebase(this.state.track, fresh.records, fresh.version);
      this.showFrame(0);
      if (!this.state.playing) this.togglePlay();
    } catch (e) {
      this.banner(String(e));
    }
  }

  private onKey(event: KeyboardEvent): void {
    const action = shortcutFor(event.key);
    if (!action || !this.state) return;
    event.preventDefault();
    switch (action.action) {
      case "tab":
        this.setTab(action.tab);
        break;
      case "apply":
        this.apply();
        break;
      case "save":
        void this.save();
        break;
      case "play-pause":
        this.togglePlay();
        break;
      case "step":
        this.showFrame(this.state.frame + action.delta);
        break;
    }
  }

  private status(message: string): void {
    this.el<HTMLPreElement>("status").textContent = message;
  }
}
