/**
 * Deterministic synthetic pointer strokes for tests: what a person would
 * draw on the pad, with seeded hand jitter. Coordinates are canvas pixels;
 * capture normalizes scale away.
 */

import { mulberry32, PointerSample } from "../src/capture.js";

const N = 64;
const DURATION_MS = 1200;

function times(n: number): number[] {
  const out: number[] = [];
  for (let i = 0; i < n; i++) out.push((DURATION_MS * i) / (n - 1));
  return out;
}

/** Full circle with drifting angular speed and radial wobble. */
export function circleEvents(seed: number): PointerSample[] {
  const rand = mulberry32(1000 + seed);
  const ts = times(N);
  let drift = 0;
  return ts.map((t, i) => {
    drift += (rand() - 0.5) * 0.02;
    const th = (2 * Math.PI * i) / (N - 1) + drift;
    const r = 120 * (1 + (rand() - 0.5) * 0.05);
    return { x: 210 + r * Math.cos(th), y: 210 + r * Math.sin(th), t };
  });
}

/** Horizontal drag with ease-in-out speed and slight vertical wander. */
export function lineEvents(seed: number): PointerSample[] {
  const rand = mulberry32(2000 + seed);
  const ts = times(N);
  let wander = 0;
  return ts.map((t, i) => {
    const s = i / (N - 1);
    const ease = 3 * s * s - 2 * s * s * s;
    wander += (rand() - 0.5) * 1.2;
    return { x: 60 + 300 * ease + (rand() - 0.5) * 3, y: 210 + wander, t };
  });
}

/**
 * Ambiguous scribble: a sloppy half-collapsed loop that drifts sideways,
 * carrying both circular sweep and straight drag in equal measure so
 * neither trained pattern dominates.
 */
export function scribbleEvents(seed: number): PointerSample[] {
  const mix = 0.52;
  const loop = circleEvents(700 + seed);
  const drag = lineEvents(700 + seed);
  return loop.map((p, i) => ({
    x: mix * p.x + (1 - mix) * drag[i]!.x,
    y: mix * p.y + (1 - mix) * drag[i]!.y,
    t: p.t,
  }));
}
