/** Color ramps shared by the grid and graph renderers.
 *
 * Diverging cell ramp: positive-leaning values go cool blue, negative
 * warm red, white at zero. Class identities in graph views: purple for
 * the positive class, orange for the negative.
 */

import { ClassLabel } from "./types.js";

export const HEAT_POS = "#2166ac";
export const HEAT_NEG = "#b2182b";
export const CLASS_POS = "#7b3294";
export const CLASS_NEG = "#e66101";

function channel(hex: string, i: number): number {
  return parseInt(hex.slice(1 + 2 * i, 3 + 2 * i), 16);
}

export function blend(from: string, to: string, t: number): string {
  const k = Math.min(Math.max(t, 0), 1);
  let out = "#";
  for (let i = 0; i < 3; i++) {
    const a = channel(from, i);
    const b = channel(to, i);
    out += Math.round(a + (b - a) * k).toString(16).padStart(2, "0");
  }
  return out;
}

/** Cell fill for a signed display intensity in [-1, 1]. */
export function divergingFill(display: number): string {
  if (display >= 0) return blend("#ffffff", HEAT_POS, display);
  return blend("#ffffff", HEAT_NEG, -display);
}

export function classColor(cls: ClassLabel): string {
  return cls === "pos" ? CLASS_POS : CLASS_NEG;
}

/** Class color faded toward white by 1 - intensity. */
export function classFill(cls: ClassLabel, intensity: number): string {
  return blend("#ffffff", classColor(cls), intensity);
}

/** Sampled stops for the diverging legend, left (-1) to right (+1). */
export function legendStops(steps: number): string[] {
  const out: string[] = [];
  for (let i = 0; i < steps; i++) {
    const v = -1 + (2 * (i + 0.5)) / steps;
    out.push(divergingFill(v));
  }
  return out;
}
