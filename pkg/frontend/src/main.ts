/**
 * DOM wiring for the trainer page.
 *
 * One canvas records strokes. A radio row decides where the next stroke
 * goes: appended as a training sample of some gesture, or classified
 * against the trained models. Everything else renders from the store,
 * which in turn mirrors the service.
 */

import { ApiClient } from "./api.js";
import { captureStroke, PointerSample } from "./capture.js";
import { canTrain, decisionText, metricsAt, Store } from "./state.js";

const api = new ApiClient("");
const store = new Store(api);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

const canvas = el<HTMLCanvasElement>("pad");
const ctx = canvas.getContext("2d")!;
let strokeNo = 0;
let events: PointerSample[] = [];
let drawing = false;

function clearPad(): void {
  ctx.fillStyle = "#fafaf7";
  ctx.fillRect(0, 0, canvas.width, canvas.height);
}

function padPoint(ev: PointerEvent): PointerSample {
  const r = canvas.getBoundingClientRect();
  return { x: ev.clientX - r.left, y: ev.clientY - r.top, t: ev.timeStamp };
}

canvas.addEventListener("pointerdown", (ev) => {
  drawing = true;
  events = [padPoint(ev)];
  clearPad();
  ctx.strokeStyle = "#1d3557";
  ctx.lineWidth = 2.5;
  ctx.beginPath();
  ctx.moveTo(events[0]!.x, events[0]!.y);
  canvas.setPointerCapture(ev.pointerId);
});

canvas.addEventListener("pointermove", (ev) => {
  if (!drawing) return;
  const p = padPoint(ev);
  events.push(p);
  ctx.lineTo(p.x, p.y);
  ctx.stroke();
});

canvas.addEventListener("pointerup", () => {
  drawing = false;
  void handleStroke(events);
});

async function handleStroke(evts: PointerSample[]): Promise<void> {
  let rows;
  try {
    rows = captureStroke(evts, {
      noiseSigma: store.state.noiseSigma,
      seed: strokeNo++,
    }).rows;
  } catch (err) {
    store.toast(String(err));
    return;
  }
  const target = (
    document.querySelector<HTMLInputElement>("input[name=target]:checked")
  )?.value;
  if (target === undefined) {
    store.toast("add a gesture first, then pick where strokes go");
  } else if (target === "__classify__") {
    await store.classify(rows);
  } else {
    await store.addSample(target, rows);
  }
}

el<HTMLButtonElement>("new-session").addEventListener("click", async () => {
  await store.createSession();
  if (store.state.sessionId !== null) {
    location.hash = store.state.sessionId;
  }
});

el<HTMLButtonElement>("add-gesture").addEventListener("click", async () => {
  const input = el<HTMLInputElement>("gesture-name");
  await store.addGesture(input.value);
  input.value = "";
});

el<HTMLButtonElement>("train").addEventListener("click", () => {
  void store.train(0);
});

el<HTMLInputElement>("thr").addEventListener("change", (ev) => {
  void store.setThr(Number((ev.target as HTMLInputElement).value));
});

el<HTMLInputElement>("noise").addEventListener("input", (ev) => {
  store.setNoise(Number((ev.target as HTMLInputElement).value));
});

el<HTMLInputElement>("mode").addEventListener("change", (ev) => {
  store.setMode((ev.target as HTMLInputElement).checked ? "dead_start" : "signaled");
});

function render(): void {
  const s = store.state;
  el("session-id").textContent = s.sessionId ?? "none";

  const list = el("gesture-list");
  list.innerHTML = "";
  for (const g of s.gestures) {
    const li = document.createElement("li");
    const ready = g.samples >= s.minSamples ? "ready" : `needs ${s.minSamples}`;
    li.innerHTML =
      `<label><input type="radio" name="target" value="${g.label}">` +
      ` ${g.label} &mdash; ${g.samples} samples (${ready})</label>`;
    list.appendChild(li);
  }
  if (s.trained) {
    const li = document.createElement("li");
    li.innerHTML =
      `<label><input type="radio" name="target" value="__classify__">` +
      ` <b>classify the next stroke</b></label>`;
    list.appendChild(li);
  }

  const train = el<HTMLButtonElement>("train");
  train.disabled = !canTrain(s);
  train.textContent = s.training
    ? "training..."
    : s.stale
      ? "retrain (samples changed)"
      : "train";

  el("thr-value").textContent = s.thr.toFixed(2);
  const m = metricsAt(s.metrics, s.thr);
  el("metrics-readout").textContent =
    m === null
      ? "train to see precision/recall"
      : `@thr ${m.thr.toFixed(1)} recognition ${(m.recognition * 100).toFixed(0)}%` +
        ` abstention ${(m.abstention * 100).toFixed(0)}%`;

  const res = s.lastResult;
  el("decision").textContent = decisionText(res);
  const bars = el("posteriors");
  bars.innerHTML = "";
  if (res !== null) {
    for (const [label, p] of Object.entries(res.posteriors)) {
      const row = document.createElement("div");
      row.className = "bar-row";
      row.innerHTML =
        `<span class="bar-label">${label}</span>` +
        `<span class="bar"><span class="fill" style="width:${(p * 100).toFixed(1)}%"></span></span>` +
        `<span class="bar-num">${p.toFixed(3)}</span>`;
      bars.appendChild(row);
    }
  }

  const toasts = el("toasts");
  toasts.innerHTML = "";
  for (const t of s.toasts.slice(-4)) {
    const div = document.createElement("div");
    div.className = "toast";
    div.textContent = t;
    toasts.appendChild(div);
  }
}

store.subscribe(render);
clearPad();

const fromHash = location.hash.replace(/^#/, "");
if (fromHash !== "") {
  store.state.sessionId = fromHash;
  void store.refresh();
} else {
  render();
}
