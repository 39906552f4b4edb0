/** Keyboard shortcuts for tag toggling and transport control. */

import { AU_IDS, EXPRESSIONS, LabelTab } from "./types.js";

export type ShortcutAction =
  | { action: "tab"; tab: LabelTab }
  | { action: "apply" }
  | { action: "save" }
  | { action: "play-pause" }
  | { action: "step"; delta: number };

/** Digits 1..8 pick an AU, a/d/f/h/s/u/n pick an expression. */
export function shortcutFor(key: string): ShortcutAction | null {
  const digit = Number(key);
  if (Number.isInteger(digit) && digit >= 1 && digit <= AU_IDS.length) {
    return { action: "tab", tab: { kind: "au", activeTag: AU_IDS[digit - 1]! } };
  }
  const byLetter: Record<string, (typeof EXPRESSIONS)[number]> = {
    a: "anger",
    d: "disgust",
    f: "fear",
    h: "happiness",
    s: "sadness",
    u: "surprise",
    n: "neutral",
  };
  const expr = byLetter[key.toLowerCase()];
  if (expr) return { action: "tab", tab: { kind: "expression", activeTag: expr } };
  switch (key) {
    case "Enter":
      return { action: "apply" };
    case "w":
      return { action: "save" };
    case " ":
      return { action: "play-pause" };
    case "ArrowRight":
      return { action: "step", delta: 1 };
    case "ArrowLeft":
      return { action: "step", delta: -1 };
    default:
      return null;
  }
}
