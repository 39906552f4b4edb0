"""Annotation service walkthrough.

Exercises the HTTP surface in-process: listing videos, fetching frames,
the optimistic-concurrency save flow (including a 409 conflict), replay
tracks, and consolidation. To serve the same API over the network:

    AFFMT_STORE=<corpus dir> affmt serve-annotation
"""

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from affmt.backend import AnnotationStore, create_app
from affmt.data import AnnotationRecord, AUVector, VAPair, serialize_annotations
from affmt.preprocessing import synth_corpus

root = Path(tempfile.mkdtemp(prefix="affmt_store_"))
synth_corpus(root, n_subjects=2, frames_per_subject=90, resolution=32, seed=0)
store = AnnotationStore(root, required_annotators=3)
client = TestClient(create_app(store))

print("health:", client.get("/health").json())

videos = client.get("/videos").json()
print("videos:", [(v["video_id"], v["frame_count"], v["valid"]) for v in videos])
video_id = videos[0]["video_id"]

frame = client.get(f"/videos/{video_id}/frames/0")
print(f"frame 0: {frame.headers['content-type']}, {len(frame.content)} bytes")

# a human annotator tags AU4 on frames 10..20
records = [
    AnnotationRecord(video_id=video_id, frame_index=f, annotator_id="demo",
                     va=VAPair(-0.2, 0.4), aus=AUVector.from_active([4]))
    for f in range(10, 21)
]
resp = client.put(
    f"/annotations/{video_id}/demo",
    content=serialize_annotations(records),
    headers={"X-Expected-Version": "0"},
)
print("save:", resp.status_code, resp.json())

# a save against a stale version is rejected so the client can refetch
stale = client.put(
    f"/annotations/{video_id}/demo",
    content=serialize_annotations(records),
    headers={"X-Expected-Version": "0"},
)
print("stale save:", stale.status_code, stale.json())

track = store.replay_annotations(video_id, "demo")
tagged = [i for i, e in enumerate(track) if e is not None]
print(f"replay track: {len(track)} frames, AU4 on {tagged[0]}..{tagged[-1]}")

csv = client.post(f"/videos/{video_id}/consolidate")
print("consolidated CSV head:")
print("\n".join(csv.text.splitlines()[:3]))
