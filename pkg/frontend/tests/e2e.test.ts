/**
 * Scripted end-to-end flow against a live service process: create a
 * session, draw training strokes for two gestures, train, classify fresh
 * strokes, then tune the threshold and watch an ambiguous scribble abstain.
 * Runs the same store the browser UI uses; only the canvas is synthetic.
 */

import { afterAll, beforeAll, describe, expect, test } from "vitest";

import { ApiClient } from "../src/api.js";
import { captureStroke } from "../src/capture.js";
import { canTrain, decisionText, Store } from "../src/state.js";
import { RunningService, spawnService } from "./service.js";
import { circleEvents, lineEvents, scribbleEvents } from "./strokes.js";

const NOISE = 0.03;

let svc: RunningService;

beforeAll(async () => {
  svc = await spawnService(8473);
}, 60_000);

afterAll(async () => {
  await svc.stop();
});

function drawnCircle(eventSeed: number, captureSeed: number) {
  return captureStroke(circleEvents(eventSeed), { noiseSigma: NOISE, seed: captureSeed }).rows;
}

function drawnLine(eventSeed: number, captureSeed: number) {
  return captureStroke(lineEvents(eventSeed), { noiseSigma: NOISE, seed: captureSeed }).rows;
}

describe("scripted trainer session", () => {
  test("capture, gate, train, classify, tune, abstain, reload", async () => {
    const api = new ApiClient(svc.baseUrl);
    const store = new Store(api);

    await store.createSession();
    const id = store.state.sessionId;
    expect(id).not.toBeNull();

    await store.addGesture("circle");
    await store.addGesture("line");

    for (let k = 0; k < 3; k++) {
      await store.addSample("circle", drawnCircle(k, k));
    }
    expect(canTrain(store.state)).toBe(false);
    await expect(api.train(id!, { seed: 0 })).rejects.toMatchObject({
      status: 409,
      detail: expect.stringMatching(/at least 10/),
    });
    await store.train(0);
    expect(store.state.trained).toBe(false);

    for (let k = 3; k < 12; k++) {
      await store.addSample("circle", drawnCircle(k, k));
    }
    for (let k = 0; k < 12; k++) {
      await store.addSample("line", drawnLine(k, 100 + k));
    }
    expect(store.state.gestures).toEqual([
      { label: "circle", samples: 12 },
      { label: "line", samples: 12 },
    ]);
    expect(canTrain(store.state)).toBe(true);

    await store.train(0);
    expect(store.state.trained).toBe(true);
    expect(store.state.stale).toBe(false);
    expect(store.state.metrics).not.toBeNull();
    expect(store.state.metrics!.thr_grid.length).toBeGreaterThan(0);

    // fresh strokes the session has never seen
    let correct = 0;
    for (let i = 0; i < 10; i++) {
      await store.classify(drawnCircle(100 + i, 300 + i));
      const res = store.state.lastResult!;
      expect(Object.keys(res.posteriors).sort()).toEqual(["circle", "line"]);
      if (res.decision === "circle") correct++;
      await store.classify(drawnLine(100 + i, 400 + i));
      if (store.state.lastResult!.decision === "line") correct++;
    }
    expect(correct).toBeGreaterThanOrEqual(18);

    // moving the slider replays recorded decisions; the curves are the
    // same objects the service computed at train time
    const before = store.state.metrics!;
    await store.setThr(0.99);
    const after = store.state.metrics!;
    expect(after.thr_grid).toEqual(before.thr_grid);
    expect(after.recognition).toEqual(before.recognition);
    expect(after.abstention).toEqual(before.abstention);
    expect(after.thr).toBe(0.99);

    await store.classify(
      captureStroke(scribbleEvents(4), { noiseSigma: NOISE, seed: 504 }).rows,
    );
    const scribble = store.state.lastResult!;
    expect(scribble.thr).toBe(0.99);
    expect(scribble.decision).toBeNull();
    expect(decisionText(scribble)).toBe("no gesture");
    const pmax = Math.max(...Object.values(scribble.posteriors));
    expect(pmax).toBeLessThan(0.99);

    // a page reload rebuilds everything from the service
    const reloaded = new Store(api);
    reloaded.state.sessionId = id;
    await reloaded.refresh();
    expect(reloaded.state.gestures).toEqual(store.state.gestures);
    expect(reloaded.state.trained).toBe(true);
    expect(reloaded.state.thr).toBe(0.99);
    expect(reloaded.state.metrics).not.toBeNull();
  }, 300_000);
});
