/**
 * Canonical JSON-lines codec for annotation records.
 *
 * Encoding matches the backend's canonical serializer byte-for-byte:
 * fixed key order (video_id, frame, annotator, valence, arousal, aus,
 * expression), compact separators, AU keys in AU_IDS order, and floats
 * in shortest round-trip form except integral values, which keep one
 * decimal ("1.0"). Negative zero is not produced by the tool, and values
 * of magnitude under 1e-4 may pick a different exponent spelling than
 * the backend; the store re-canonicalizes every PUT, so stored bytes are
 * always the backend's form.
 */

import {
  AU_IDS,
  AnnotationRecord,
  EXPRESSIONS,
  Expression,
} from "./types.js";

function formatFloat(v: number): string {
  if (!Number.isFinite(v)) throw new Error(`non-finite value ${v}`);
  return Number.isInteger(v) ? v.toFixed(1) : String(v);
}

export function encodeRecord(rec: AnnotationRecord): string {
  const parts: string[] = [
    `"video_id":${JSON.stringify(rec.videoId)}`,
    `"frame":${rec.frame}`,
    `"annotator":${JSON.stringify(rec.annotator)}`,
  ];
  if (rec.valence === null || rec.arousal === null) {
    if (rec.valence !== null || rec.arousal !== null) {
      throw new Error("valence and arousal must be both set or both null");
    }
    parts.push(`"valence":null`, `"arousal":null`);
  } else {
    parts.push(`"valence":${formatFloat(rec.valence)}`);
    parts.push(`"arousal":${formatFloat(rec.arousal)}`);
  }
  if (rec.aus === null) {
    parts.push(`"aus":null`);
  } else {
    if (rec.aus.length !== AU_IDS.length) {
      throw new Error(`expected ${AU_IDS.length} AU bits`);
    }
    const bits = AU_IDS.map((au, i) => `"${au}":${rec.aus![i] ? 1 : 0}`);
    parts.push(`"aus":{${bits.join(",")}}`);
  }
  parts.push(
    rec.expression === null
      ? `"expression":null`
      : `"expression":${JSON.stringify(rec.expression)}`,
  );
  return `{${parts.join(",")}}`;
}

export function encodeRecords(records: readonly AnnotationRecord[]): string {
  if (records.length === 0) return "";
  return records.map(encodeRecord).join("\n") + "\n";
}

export function decodeRecords(body: string): AnnotationRecord[] {
  const records: AnnotationRecord[] = [];
  const lines = body.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i]!;
    if (line.trim() === "") continue;
    let obj: Record<string, unknown>;
    try {
      obj = JSON.parse(line);
    } catch (e) {
      throw new Error(`line ${i + 1}: invalid JSON`);
    }
    const frame = obj["frame"];
    if (typeof frame !== "number" || !Number.isInteger(frame) || frame < 0) {
      throw new Error(`line ${i + 1}: bad frame ${frame}`);
    }
    const valence = obj["valence"] as number | null;
    const arousal = obj["arousal"] as number | null;
    if ((valence === null) !== (arousal === null)) {
      throw new Error(`line ${i + 1}: half-absent VA pair`);
    }
    const rawAus = obj["aus"] as Record<string, 0 | 1> | null;
    let aus: boolean[] | null = null;
    if (rawAus !== null && rawAus !== undefined) {
      aus = AU_IDS.map((au) => {
        const bit = rawAus[String(au)];
        if (bit !== 0 && bit !== 1) {
          throw new Error(`line ${i + 1}: bad AU ${au} bit`);
        }
        return bit === 1;
      });
    }
    const expression = (obj["expression"] ?? null) as Expression | null;
    if (expression !== null && !EXPRESSIONS.includes(expression)) {
      throw new Error(`line ${i + 1}: unknown expression ${expression}`);
    }
    records.push({
      videoId: String(obj["video_id"]),
      frame,
      annotator: String(obj["annotator"]),
      valence: valence ?? null,
      arousal: arousal ?? null,
      aus,
      expression,
    });
  }
  return records;
}
