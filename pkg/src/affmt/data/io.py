"""Annotation file I/O.

Two on-disk formats:

* Annotation files: JSON-lines, UTF-8, one record per line:
  ``{"video_id": str, "frame": int, "annotator": str, "valence": float|null,
  "arousal": float|null, "aus": {"1":0|1, ..., "25":0|1}|null,
  "expression": str|null}``
* Consolidated datasets: CSV with header
  ``video_id,frame,valence,arousal,au1,...,au25,expression`` where AU cells
  are 0/1 or empty and expression may be empty.

Serialization is canonical: fixed key order, compact separators, floats in
shortest round-trip form (integral values keep one decimal). parse followed
by serialize therefore reproduces a canonical file byte-for-byte.
"""

from __future__ import annotations

import csv
import io as _io
import json
from typing import Iterable, List, Optional, Union

from affmt.data.types import (
    AU_IDS,
    AnnotationRecord,
    AUVector,
    ConsolidatedFrame,
    Expression,
    VAPair,
)
from affmt.errors import ParseError, ValidationError

_AU_KEYS = tuple(str(a) for a in AU_IDS)
_EXPR_VALUES = {e.value: e for e in Expression}


def _format_float(v: float) -> str:
    # Matches JSON.stringify for non-integral doubles; integral values keep
    # a trailing ".0" so the format is unambiguous across languages.
    if v == int(v):
        return f"{v:.1f}"
    return repr(float(v))


def _record_to_json_line(rec: AnnotationRecord) -> str:
    parts = [
        f'"video_id":{json.dumps(rec.video_id)}',
        f'"frame":{rec.frame_index}',
        f'"annotator":{json.dumps(rec.annotator_id)}',
    ]
    if rec.va is None:
        parts.append('"valence":null')
        parts.append('"arousal":null')
    else:
        parts.append(f'"valence":{_format_float(rec.va.valence)}')
        parts.append(f'"arousal":{_format_float(rec.va.arousal)}')
    if rec.aus is None:
        parts.append('"aus":null')
    else:
        au_items = ",".join(
            f'"{k}":{1 if b else 0}' for k, b in zip(_AU_KEYS, rec.aus.bits)
        )
        parts.append(f'"aus":{{{au_items}}}')
    if rec.expression is None:
        parts.append('"expression":null')
    else:
        parts.append(f'"expression":{json.dumps(rec.expression.value)}')
    return "{" + ",".join(parts) + "}"


def serialize_annotations(records: Iterable[AnnotationRecord]) -> bytes:
    """Serialize records to canonical JSON-lines (UTF-8)."""
    lines = [_record_to_json_line(r) for r in records]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def _parse_va(obj: dict, line_no: int) -> Optional[VAPair]:
    valence = obj.get("valence")
    arousal = obj.get("arousal")
    if valence is None and arousal is None:
        return None
    if valence is None or arousal is None:
        raise ParseError("valence and arousal must both be present or both null", line_no)
    try:
        return VAPair(float(valence), float(arousal))
    except ValidationError as e:
        raise ParseError(str(e), line_no) from e


def _parse_aus(obj: dict, line_no: int) -> Optional[AUVector]:
    aus = obj.get("aus")
    if aus is None:
        return None
    if not isinstance(aus, dict) or set(aus) != set(_AU_KEYS):
        raise ParseError(f"aus object must have exactly the keys {list(_AU_KEYS)}", line_no)
    bits = []
    for k in _AU_KEYS:
        v = aus[k]
        if v not in (0, 1):
            raise ParseError(f"AU {k} value must be 0 or 1, got {v!r}", line_no)
        bits.append(bool(v))
    return AUVector(tuple(bits))


def _parse_expression(obj: dict, line_no: int) -> Optional[Expression]:
    expr = obj.get("expression")
    if expr is None:
        return None
    if expr not in _EXPR_VALUES:
        raise ParseError(f"unknown expression {expr!r}", line_no)
    return _EXPR_VALUES[expr]


def parse_annotations(stream: Union[bytes, str, _io.IOBase]) -> List[AnnotationRecord]:
    """Parse a JSON-lines annotation stream.

    Raises ParseError with the 1-based line number for any malformed or
    out-of-range line, and for duplicate (video, frame, annotator) keys.
    """
    if isinstance(stream, bytes):
        text = stream.decode("utf-8")
    elif isinstance(stream, str):
        text = stream
    else:
        data = stream.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data

    records: List[AnnotationRecord] = []
    seen = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ParseError(f"invalid JSON: {e.msg}", line_no) from e
        if not isinstance(obj, dict):
            raise ParseError("each line must be a JSON object", line_no)
        for field in ("video_id", "frame", "annotator"):
            if field not in obj:
                raise ParseError(f"missing required field {field!r}", line_no)
        frame = obj["frame"]
        if not isinstance(frame, int) or isinstance(frame, bool) or frame < 0:
            raise ParseError(f"frame must be a non-negative integer, got {frame!r}", line_no)
        try:
            rec = AnnotationRecord(
                video_id=str(obj["video_id"]),
                frame_index=frame,
                annotator_id=str(obj["annotator"]),
                va=_parse_va(obj, line_no),
                aus=_parse_aus(obj, line_no),
                expression=_parse_expression(obj, line_no),
            )
        except ValidationError as e:
            raise ParseError(str(e), line_no) from e
        key = (rec.video_id, rec.frame_index, rec.annotator_id)
        if key in seen:
            raise ParseError(f"duplicate record for {key}", line_no)
        seen.add(key)
        records.append(rec)
    return records


CSV_HEADER = (
    "video_id,frame,valence,arousal,"
    "au1,au2,au4,au6,au12,au15,au20,au25,expression"
)


def write_consolidated_csv(frames: Iterable[ConsolidatedFrame]) -> str:
    """Render consolidated frames as the canonical CSV (sorted rows)."""
    rows = sorted(frames, key=lambda f: (f.video_id, f.frame_index))
    out = [CSV_HEADER]
    for f in rows:
        cells = [
            f.video_id,
            str(f.frame_index),
            _format_float(f.va.valence),
            _format_float(f.va.arousal),
        ]
        if f.aus is None:
            cells.extend([""] * len(AU_IDS))
        else:
            cells.extend("1" if b else "0" for b in f.aus.bits)
        cells.append("" if f.expression is None else f.expression.value)
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def read_consolidated_csv(text: str) -> List[ConsolidatedFrame]:
    reader = csv.reader(_io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty CSV") from None
    if ",".join(header) != CSV_HEADER:
        raise ParseError(f"unexpected CSV header {header}")
    frames = []
    for row_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 13:
            raise ParseError(f"expected 13 cells, got {len(row)}", row_no)
        au_cells = row[4:12]
        if all(c == "" for c in au_cells):
            aus = None
        elif any(c == "" for c in au_cells):
            raise ParseError("AU cells must be all present or all empty", row_no)
        else:
            aus = AUVector(tuple(c == "1" for c in au_cells))
        expr = None if row[12] == "" else _EXPR_VALUES.get(row[12])
        if row[12] and expr is None:
            raise ParseError(f"unknown expression {row[12]!r}", row_no)
        frames.append(
            ConsolidatedFrame(
                video_id=row[0],
                frame_index=int(row[1]),
                va=VAPair(float(row[2]), float(row[3])),
                aus=aus,
                expression=expr,
            )
        )
    return frames
