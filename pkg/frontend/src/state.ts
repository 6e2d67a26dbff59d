/**
 * UI state and the rules that drive it.
 *
 * The store is the single source of truth for rendering; every mutation
 * goes through an action method which notifies subscribers. State is
 * always reconstructible from the service: `refresh()` rebuilds gesture
 * counts, training status, thr, and metrics from GET routes, so a page
 * reload with the session id in the URL hash loses nothing.
 *
 * Probabilities shown in the UI are the service's numbers verbatim; the
 * store never recomputes them.
 */

import {
  ApiClient,
  ApiError,
  ClassifyResponse,
  MetricsResponse,
  TraceRows,
} from "./api.js";

export type Mode = "signaled" | "dead_start";

export interface GestureEntry {
  label: string;
  samples: number;
}

export interface UiState {
  sessionId: string | null;
  gestures: GestureEntry[];
  trained: boolean;
  stale: boolean;
  training: boolean;
  classifying: boolean;
  minSamples: number;
  thr: number;
  mode: Mode;
  noiseSigma: number;
  lastResult: ClassifyResponse | null;
  metrics: MetricsResponse | null;
  toasts: string[];
}

export function initialState(): UiState {
  return {
    sessionId: null,
    gestures: [],
    trained: false,
    stale: false,
    training: false,
    classifying: false,
    minSamples: 10,
    thr: 0.5,
    mode: "dead_start",
    noiseSigma: 0.03,
    lastResult: null,
    metrics: null,
    toasts: [],
  };
}

/** Training stays disabled until every gesture has enough samples. */
export function canTrain(s: UiState): boolean {
  return (
    s.sessionId !== null &&
    !s.training &&
    s.gestures.length > 0 &&
    s.gestures.every((g) => g.samples >= s.minSamples)
  );
}

/** What the decision readout shows; dead-start abstentions say so. */
export function decisionText(res: ClassifyResponse | null): string {
  if (res === null) return "";
  if (res.decision === null) return "no gesture";
  return res.forced ? `${res.decision} (forced)` : res.decision;
}

/**
 * Precision/recall readout for the slider position: the metrics grid
 * point nearest to thr. Replayed server-side; moving the slider never
 * retrains or re-classifies.
 */
export function metricsAt(
  metrics: MetricsResponse | null,
  thr: number,
): { thr: number; recognition: number; abstention: number } | null {
  if (metrics === null || metrics.thr_grid.length === 0) return null;
  let k = 0;
  for (let i = 1; i < metrics.thr_grid.length; i++) {
    if (Math.abs(metrics.thr_grid[i]! - thr) < Math.abs(metrics.thr_grid[k]! - thr)) {
      k = i;
    }
  }
  return {
    thr: metrics.thr_grid[k]!,
    recognition: metrics.recognition[k]!,
    abstention: metrics.abstention[k]!,
  };
}

export class Store {
  state: UiState = initialState();
  private listeners: Array<(s: UiState) => void> = [];
  private classifyQueue: Promise<unknown> = Promise.resolve();

  constructor(private api: ApiClient) {}

  subscribe(fn: (s: UiState) => void): void {
    this.listeners.push(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.state);
  }

  private update(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch };
    this.emit();
  }

  toast(message: string): void {
    this.update({ toasts: [...this.state.toasts, message] });
  }

  private fail(err: unknown): void {
    this.toast(err instanceof ApiError ? err.message : String(err));
  }

  async createSession(): Promise<void> {
    try {
      const { session_id } = await this.api.createSession();
      this.update({ ...initialState(), sessionId: session_id });
    } catch (err) {
      this.fail(err);
    }
  }

  /** Rebuild everything shown on screen from the service. */
  async refresh(): Promise<void> {
    const id = this.state.sessionId;
    if (id === null) return;
    try {
      const s = await this.api.session(id);
      const gestures = Object.entries(s.gestures).map(([label, samples]) => ({
        label,
        samples,
      }));
      this.update({
        gestures,
        trained: s.trained,
        stale: s.stale,
        minSamples: s.min_samples,
        thr: s.thr,
      });
      if (s.trained) {
        const metrics = await this.api.metrics(id);
        this.update({ metrics });
      }
    } catch (err) {
      this.fail(err);
    }
  }

  async addGesture(label: string): Promise<void> {
    const id = this.state.sessionId;
    if (id === null || label.trim() === "") return;
    try {
      const res = await this.api.addGesture(id, label.trim());
      this.update({
        gestures: [...this.state.gestures, { label: res.label, samples: 0 }],
      });
    } catch (err) {
      this.fail(err);
    }
  }

  async addSample(label: string, rows: TraceRows): Promise<void> {
    const id = this.state.sessionId;
    if (id === null) return;
    try {
      const res = await this.api.addSample(id, label, rows);
      this.update({
        gestures: this.state.gestures.map((g) =>
          g.label === label ? { ...g, samples: res.samples } : g,
        ),
        stale: this.state.trained,
      });
    } catch (err) {
      this.fail(err);
    }
  }

  /** At most one train request in flight; the button is disabled anyway. */
  async train(seed = 0): Promise<void> {
    const id = this.state.sessionId;
    if (id === null || !canTrain(this.state)) return;
    this.update({ training: true });
    try {
      await this.api.train(id, { seed });
      const metrics = await this.api.metrics(id);
      this.update({ trained: true, stale: false, metrics });
    } catch (err) {
      this.fail(err);
    } finally {
      this.update({ training: false });
    }
  }

  /** Classifications run FIFO so results appear in draw order. */
  classify(rows: TraceRows): Promise<void> {
    const run = async (): Promise<void> => {
      const id = this.state.sessionId;
      if (id === null || !this.state.trained) return;
      this.update({ classifying: true });
      try {
        const res = await this.api.classify(id, rows, {
          mode: this.state.mode,
          thr: this.state.thr,
        });
        this.update({ lastResult: res });
      } catch (err) {
        this.fail(err);
      } finally {
        this.update({ classifying: false });
      }
    };
    this.classifyQueue = this.classifyQueue.then(run);
    return this.classifyQueue as Promise<void>;
  }

  /** Persist thr and refresh the readout; no retraining happens. */
  async setThr(thr: number): Promise<void> {
    if (!(thr > 0 && thr < 1)) {
      this.toast("thr must be in (0, 1)");
      return;
    }
    const id = this.state.sessionId;
    this.update({ thr });
    if (id === null) return;
    try {
      await this.api.patchConfig(id, { thr });
      if (this.state.trained) {
        const metrics = await this.api.metrics(id);
        this.update({ metrics });
      }
    } catch (err) {
      this.fail(err);
    }
  }

  setMode(mode: Mode): void {
    this.update({ mode });
  }

  setNoise(sigma: number): void {
    if (sigma >= 0) this.update({ noiseSigma: sigma });
  }
}
