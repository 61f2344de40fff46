/** Color handling: class palette tints and the confidence ramp.
 *
 * Confidences live in [0.5, 1] (the propagation's winning cost never exceeds
 * the rival cost), so the ramp maps 0.5 -> pure red and 1.0 -> pure green.
 */

export const RESIDUE_COLOR = "#000000";
export const SUPERVISED_BORDER = "#d62728";

export function clamp(value: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, value));
}

/** Linear red->green ramp over confidence in [0.5, 1]. */
export function confidenceColor(confidence: number): string {
  const t = clamp((confidence - 0.5) / 0.5, 0, 1);
  const r = Math.round(255 * (1 - t));
  const g = Math.round(255 * t);
  return `rgb(${r},${g},0)`;
}

function hexChannel(hex: string, index: number): number {
  return parseInt(hex.slice(1 + 2 * index, 3 + 2 * index), 16);
}

/** Lighten a #rrggbb class color toward white (auto points are light tints). */
export function tint(hex: string, amount: number): string {
  const t = clamp(amount, 0, 1);
  const channels = [0, 1, 2].map((i) => {
    const v = hexChannel(hex, i);
    return Math.round(v + (255 - v) * t);
  });
  return `rgb(${channels[0]},${channels[1]},${channels[2]})`;
}
