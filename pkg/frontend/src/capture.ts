/**
 * Pointer strokes to pseudo-accelerometer traces.
 *
 * The browser stands in for a phone: a drawn stroke is resampled onto a
 * uniform 50 Hz grid, smoothed with a window of 3, and second-differenced
 * into accelerations. The horizontal plane of the canvas becomes the x/y
 * axes; z is the constant gravity reading of -1 g plus the noise slider.
 * Acceleration is peak-normalized so canvas pixel units never matter.
 *
 * Everything is deterministic: identical replayed events with the same
 * noise seed yield the identical trace, bit for bit.
 */

export interface PointerSample {
  x: number;
  y: number;
  /** event timestamp in milliseconds */
  t: number;
}

export interface CaptureOptions {
  /** std-dev of the simulated sensor noise added per axis, in g */
  noiseSigma?: number;
  /** seed for the noise generator; same seed + events = same trace */
  seed?: number;
  /** points on the canonical resampling grid */
  points?: number;
  /** output sample rate in Hz */
  rateHz?: number;
  /** peak |acceleration| after normalization, in g */
  peakG?: number;
}

export interface StrokeCapture {
  /** resampled, smoothed canvas positions (for redrawing the stroke) */
  positions: Array<[number, number]>;
  /** derived trace rows [t, ax, ay, az] ready for the service */
  rows: Array<[number, number, number, number]>;
}

export const DEFAULTS = {
  noiseSigma: 0.03,
  seed: 0,
  points: 32,
  rateHz: 50,
  peakG: 0.8,
} as const;

/** Small deterministic PRNG (mulberry32), uniform in [0, 1). */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Deterministic standard normal draws (Box-Muller on mulberry32). */
export function gaussian(seed: number): () => number {
  const uniform = mulberry32(seed);
  let spare: number | null = null;
  return () => {
    if (spare !== null) {
      const v = spare;
      spare = null;
      return v;
    }
    let u = 0;
    while (u === 0) u = uniform();
    const r = Math.sqrt(-2 * Math.log(u));
    const th = 2 * Math.PI * uniform();
    spare = r * Math.sin(th);
    return r * Math.cos(th);
  };
}

function interpolate(events: PointerSample[], n: number): Array<[number, number]> {
  const t0 = events[0]!.t;
  const t1 = events[events.length - 1]!.t;
  const span = t1 - t0;
  const out: Array<[number, number]> = [];
  let j = 0;
  for (let i = 0; i < n; i++) {
    const tt = t0 + (span * i) / (n - 1);
    while (j < events.length - 2 && events[j + 1]!.t < tt) j++;
    const a = events[j]!;
    const b = events[j + 1]!;
    const w = b.t === a.t ? 0 : (tt - a.t) / (b.t - a.t);
    out.push([a.x + (b.x - a.x) * w, a.y + (b.y - a.y) * w]);
  }
  return out;
}

/**
 * Convert raw pointer events into a StrokeCapture.
 *
 * Throws if the stroke is too short to differentiate (under 8 events or
 * zero duration) or contains non-finite coordinates.
 */
export function captureStroke(
  events: PointerSample[],
  options: CaptureOptions = {},
): StrokeCapture {
  const opt = { ...DEFAULTS, ...options };
  if (events.length < 8) {
    throw new Error(`stroke too short: ${events.length} events, need >= 8`);
  }
  for (const e of events) {
    if (!Number.isFinite(e.x) || !Number.isFinite(e.y) || !Number.isFinite(e.t)) {
      throw new Error("stroke contains a non-finite coordinate");
    }
  }
  if (events[events.length - 1]!.t <= events[0]!.t) {
    throw new Error("stroke duration must be positive");
  }

  const dt = 1 / opt.rateHz;
  const grid = interpolate(events, opt.points);

  // moving average, window 3, valid region only
  const smooth: Array<[number, number]> = [];
  for (let i = 0; i + 2 < grid.length; i++) {
    smooth.push([
      (grid[i]![0] + grid[i + 1]![0] + grid[i + 2]![0]) / 3,
      (grid[i]![1] + grid[i + 1]![1] + grid[i + 2]![1]) / 3,
    ]);
  }

  // second difference over the uniform grid
  const accel: Array<[number, number]> = [];
  for (let i = 0; i + 2 < smooth.length; i++) {
    accel.push([
      (smooth[i]![0] - 2 * smooth[i + 1]![0] + smooth[i + 2]![0]) / (dt * dt),
      (smooth[i]![1] - 2 * smooth[i + 1]![1] + smooth[i + 2]![1]) / (dt * dt),
    ]);
  }

  let peak = 0;
  for (const [ax, ay] of accel) {
    peak = Math.max(peak, Math.abs(ax), Math.abs(ay));
  }
  const scale = peak > 0 ? opt.peakG / peak : 1;

  const noise = gaussian(opt.seed);
  const rows: Array<[number, number, number, number]> = accel.map(
    ([ax, ay], i) => [
      i * dt,
      ax * scale + noise() * opt.noiseSigma,
      ay * scale + noise() * opt.noiseSigma,
      -1 + noise() * opt.noiseSigma,
    ],
  );
  return { positions: smooth, rows };
}
