/**
 * Heat-to-color mapping for feature cells.
 *
 * Two linear ramps anchored at the neutral point: heat 0 is saturated blue,
 * 0.5 is neutral, 1 is saturated red. The function is pure; fixed inputs
 * yield fixed color strings (snapshot-tested).
 */

type Rgb = readonly [number, number, number];

export const BLUE: Rgb = [33, 102, 172];
export const NEUTRAL: Rgb = [247, 247, 247];
export const RED: Rgb = [178, 24, 43];

function lerp(a: Rgb, b: Rgb, t: number): Rgb {
  return [
    Math.round(a[0] + (b[0] - a[0]) * t),
    Math.round(a[1] + (b[1] - a[1]) * t),
    Math.round(a[2] + (b[2] - a[2]) * t),
  ];
}

export function heatColor(heat: number): string {
  const h = Math.min(1, Math.max(0, heat));
  const rgb = h <= 0.5 ? lerp(BLUE, NEUTRAL, h / 0.5)
                       : lerp(NEUTRAL, RED, (h - 0.5) / 0.5);
  return `rgb(${rgb[0]}, ${rgb[1]}, ${rgb[2]})`;
}

/** Dark text on light cells, light text on saturated ones. */
export function heatTextColor(heat: number): string {
  const h = Math.min(1, Math.max(0, heat));
  return h < 0.2 || h > 0.85 ? "#ffffff" : "#1c1c1c";
}
