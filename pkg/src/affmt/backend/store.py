"""File-backed annotation store.

Directory layout (also produced by the synthetic corpus generator, so a
corpus directory is a valid store):

    <root>/
      videos/<video_id>/meta.json
      videos/<video_id>/frames/000000.png ...
      annotations/<video_id>/<annotator_id>.jsonl     (canonical JSON-lines)
      annotations/<video_id>/<annotator_id>.version   ({"version": n})
      consolidated/<video_id>.csv

Writes are optimistic: each (video, annotator) track carries a version,
a PUT must present the version it last saw, and a stale write is rejected
so the client can refetch and merge. Tracks of distinct keys never
contend; writes to one key are serialized with an in-process lock plus a
file lock for cross-process safety.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from filelock import FileLock

from affmt.data import (
    AnnotationRecord,
    ConsolidatedFrame,
    VideoMeta,
    consolidate,
    parse_annotations,
    serialize_annotations,
    write_consolidated_csv,
)
from affmt.errors import (
    NotFoundError,
    StorageError,
    ValidationError,
    VersionConflictError,
)


@dataclass
class VideoEntry:
    meta: VideoMeta
    valid: bool
    problems: List[str]


class AnnotationStore:
    def __init__(self, root, required_annotators: int = 3):
        self.root = Path(root)
        if not self.root.is_dir():
            raise StorageError(f"store root {self.root} is not a directory")
        self.required_annotators = required_annotators
        self._locks: Dict[Tuple[str, str], threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # --- videos ---------------------------------------------------------

    def _video_dir(self, video_id: str) -> Path:
        return self.root / "videos" / video_id

    def get_meta(self, video_id: str) -> VideoMeta:
        meta_path = self._video_dir(video_id) / "meta.json"
        if not meta_path.exists():
            raise NotFoundError(f"unknown video {video_id!r}")
        try:
            return VideoMeta.from_dict(json.loads(meta_path.read_text()))
        except (json.JSONDecodeError, KeyError, ValueError) as e:
            raise StorageError(f"unreadable meta for {video_id!r}: {e}") from e

    def _validate_video(self, meta: VideoMeta) -> List[str]:
        frame_dir = self._video_dir(meta.video_id) / "frames"
        if not frame_dir.is_dir():
            return ["missing frames directory"]
        present = {p.name for p in frame_dir.glob("*.png")}
        missing = [
            i for i in range(meta.frame_count) if f"{i:06d}.png" not in present
        ]
        if missing:
            shown = ", ".join(str(i) for i in missing[:5])
            suffix = "..." if len(missing) > 5 else ""
            return [f"missing frames: {shown}{suffix}"]
        return []

    def list_videos(self) -> List[VideoEntry]:
        videos_dir = self.root / "videos"
        if not videos_dir.exists():
            return []
        entries = []
        for meta_path in sorted(videos_dir.glob("*/meta.json")):
            meta = VideoMeta.from_dict(json.loads(meta_path.read_text()))
            problems = self._validate_video(meta)
            entries.append(VideoEntry(meta=meta, valid=not problems, problems=problems))
        entries.sort(key=lambda e: e.meta.video_id)
        return entries

    def get_frame(self, video_id: str, frame_index: int) -> bytes:
        meta = self.get_meta(video_id)
        if not (0 <= frame_index < meta.frame_count):
            raise ValidationError(
                f"frame {frame_index} out of range [0, {meta.frame_count})"
            )
        path = self._video_dir(video_id) / "frames" / f"{frame_index:06d}.png"
        if not path.exists():
            raise StorageError(f"frame file missing: {path}")
        return path.read_bytes()

    # --- annotations ----------------------------------------------------

    def _ann_dir(self, video_id: str) -> Path:
        return self.root / "annotations" / video_id

    def _track_paths(self, video_id: str, annotator_id: str) -> Tuple[Path, Path]:
        base = self._ann_dir(video_id)
        return base / f"{annotator_id}.jsonl", base / f"{annotator_id}.version"

    def _lock_for(self, video_id: str, annotator_id: str) -> threading.Lock:
        key = (video_id, annotator_id)
        with self._locks_guard:
            if key not in self._locks:
                self._locks[key] = threading.Lock()
            return self._locks[key]

    def get_version(self, video_id: str, annotator_id: str) -> int:
        _, version_path = self._track_paths(video_id, annotator_id)
        if not version_path.exists():
            return 0
        return int(json.loads(version_path.read_text())["version"])

    def get_annotations(self, video_id: str, annotator_id: str) -> Tuple[bytes, int]:
        self.get_meta(video_id)  # 404 on unknown video
        records_path, _ = self._track_paths(video_id, annotator_id)
        version = self.get_version(video_id, annotator_id)
        if not records_path.exists():
            return b"", version
        return records_path.read_bytes(), version

    def put_annotations(
        self,
        video_id: str,
        annotator_id: str,
        records: List[AnnotationRecord],
        expected_version: int,
    ) -> int:
        meta = self.get_meta(video_id)
        for rec in records:
            if rec.video_id != video_id or rec.annotator_id != annotator_id:
                raise ValidationError(
                    f"record for ({rec.video_id}, {rec.annotator_id}) does not "
                    f"belong to ({video_id}, {annotator_id})"
                )
            if rec.frame_index >= meta.frame_count:
                raise ValidationError(
                    f"frame {rec.frame_index} beyond frame count {meta.frame_count}"
                )

        records_path, version_path = self._track_paths(video_id, annotator_id)
        records_path.parent.mkdir(parents=True, exist_ok=True)
        with self._lock_for(video_id, annotator_id):
            with FileLock(str(records_path) + ".lock"):
                current = self.get_version(video_id, annotator_id)
                if expected_version != current:
                    raise VersionConflictError(expected_version, current)

                existing: Dict[int, AnnotationRecord] = {}
                if records_path.exists():
                    for rec in parse_annotations(records_path.read_bytes()):
                        existing[rec.frame_index] = rec
                for rec in records:  # new records replace covered frames
                    existing[rec.frame_index] = rec
                merged = [existing[i] for i in sorted(existing)]

                self._atomic_write(records_path, serialize_annotations(merged))
                new_version = current + 1
                self._atomic_write(
                    version_path,
                    (json.dumps({"version": new_version}) + "\n").encode(),
                )
                return new_version

    @staticmethod
    def _atomic_write(path: Path, data: bytes) -> None:
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)

    def replay_annotations(self, video_id: str, annotator_id: str) -> List[Optional[dict]]:
        """Dense per-frame label track for overlay during playback."""
        meta = self.get_meta(video_id)
        records_path, _ = self._track_paths(video_id, annotator_id)
        if not records_path.exists():
            raise NotFoundError(
                f"no annotations from {annotator_id!r} for {video_id!r}"
            )
        track: List[Optional[dict]] = [None] * meta.frame_count
        for rec in parse_annotations(records_path.read_bytes()):
            track[rec.frame_index] = {
                "valence": rec.va.valence if rec.va else None,
                "arousal": rec.va.arousal if rec.va else None,
                "aus": list(rec.aus.active_ids()) if rec.aus else None,
                "expression": rec.expression.value if rec.expression else None,
            }
        return track

    # --- consolidation --------------------------------------------------

    def annotators_for(self, video_id: str) -> List[str]:
        ann_dir = self._ann_dir(video_id)
        if not ann_dir.is_dir():
            return []
        return sorted(p.stem for p in ann_dir.glob("*.jsonl"))

    def export_records(self, video_id: str) -> List[AnnotationRecord]:
        records: List[AnnotationRecord] = []
        for annotator in self.annotators_for(video_id):
            records_path, _ = self._track_paths(video_id, annotator)
            records.extend(parse_annotations(records_path.read_bytes()))
        return records

    def run_consolidation(self, video_id: str) -> List[ConsolidatedFrame]:
        self.get_meta(video_id)
        frames = consolidate(
            self.export_records(video_id),
            required_annotators=self.required_annotators,
        )
        out_dir = self.root / "consolidated"
        out_dir.mkdir(exist_ok=True)
        self._atomic_write(
            out_dir / f"{video_id}.csv",
            write_consolidated_csv(frames).encode(),
        )
        return frames
