import init, { DemoTracker, saliencyRgba, weightTrajectory } from "./pkg/saltrack_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function report(e) {
  $("error").textContent = e ? String(e.message ?? e) : "";
}

function blit(canvas, rgba, w, h) {
  const tmp = new OffscreenCanvas(w, h);
  tmp.getContext("2d").putImageData(new ImageData(new Uint8ClampedArray(rgba), w, h), 0, 0);
  const ctx = canvas.getContext("2d");
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

// tracker

let tracker = null;
let timer = null;

function drawTracker() {
  const w = tracker.width, h = tracker.height;
  const canvas = $("frame");
  blit(canvas, tracker.frameRgba(), w, h);
  const s = canvas.width / w;
  const ctx = canvas.getContext("2d");
  const b = tracker.boxes();
  ctx.lineWidth = 2;
  ctx.strokeStyle = "#e33";
  ctx.strokeRect(b[4] * s, b[5] * s, b[6] * s, b[7] * s);
  ctx.strokeStyle = "#3c3";
  ctx.strokeRect(b[0] * s, b[1] * s, b[2] * s, b[3] * s);

  const rw = tracker.responseWidth();
  if (rw > 0) blit($("response"), tracker.responseRgba(), rw, tracker.responseHeight());
  $("trackstat").textContent =
    `frame ${tracker.index + 1}/${tracker.frames}  sim ${tracker.sim.toFixed(4)}  w ${tracker.weight.toFixed(5)}`;
}

function restart() {
  stop();
  try {
    tracker?.free();
    tracker = new DemoTracker(Math.max(0, Math.floor(num("seed"))), num("noise"), num("k"), 120);
    $("response").getContext("2d").clearRect(0, 0, 320, 320);
    drawTracker();
    report();
  } catch (e) {
    tracker = null;
    report(e);
  }
}

function step() {
  if (!tracker) return false;
  const more = tracker.step();
  drawTracker();
  return more;
}

function stop() {
  clearInterval(timer);
  timer = null;
  $("play").textContent = "play";
}

$("restart").onclick = restart;
$("step").onclick = () => { stop(); step(); };
$("play").onclick = () => {
  if (timer) return stop();
  $("play").textContent = "pause";
  timer = setInterval(() => { if (!step()) stop(); }, 50);
};

// weight trajectory

function drawWeights() {
  const n = 400;
  const sims = new Float64Array(n).map((_, i) => (i >= 100 && i < 200 ? num("wlo") : num("whi")));
  let w;
  try {
    w = weightTrajectory(num("wk"), num("wl"), num("w0"), $("rule").value, sims);
    report();
  } catch (e) {
    report(e);
    return;
  }
  const canvas = $("weights");
  const ctx = canvas.getContext("2d");
  const top = Math.max(num("wk"), 1e-6);
  const x = (i) => (i / (n - 1)) * (canvas.width - 20) + 10;
  const y = (v) => canvas.height - 10 - (v / top) * (canvas.height - 20);
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  ctx.moveTo(10, y(top));
  ctx.lineTo(canvas.width - 10, y(top));
  ctx.stroke();
  ctx.strokeStyle = "#36c";
  ctx.beginPath();
  w.forEach((v, i) => (i ? ctx.lineTo(x(i), y(v)) : ctx.moveTo(x(i), y(v))));
  ctx.stroke();
  $("weightstat").textContent =
    `w after 100: ${w[99].toFixed(5)}  after 200: ${w[199].toFixed(5)}  final: ${w[n - 1].toFixed(5)}  (axis top = K)`;
}

for (const id of ["wk", "wl", "w0", "whi", "wlo", "rule"]) $(id).oninput = drawWeights;

// saliency sketchpad

const pad = $("draw");
const padCtx = pad.getContext("2d");

function clearPad() {
  padCtx.fillStyle = "#fff";
  padCtx.fillRect(0, 0, pad.width, pad.height);
  updateSaliency();
}

function updateSaliency() {
  const { width, height } = pad;
  try {
    const px = padCtx.getImageData(0, 0, width, height).data;
    blit($("sal"), saliencyRgba(width, height, new Uint8Array(px.buffer)), width, height);
    report();
  } catch (e) {
    report(e);
  }
}

let drawing = false;
function paint(ev) {
  if (!drawing) return;
  const r = pad.getBoundingClientRect();
  const x = ((ev.clientX - r.left) / r.width) * pad.width;
  const y = ((ev.clientY - r.top) / r.height) * pad.height;
  padCtx.fillStyle = "#000";
  padCtx.beginPath();
  padCtx.arc(x, y, 4, 0, 2 * Math.PI);
  padCtx.fill();
}
pad.onpointerdown = (ev) => { drawing = true; paint(ev); };
pad.onpointermove = paint;
window.addEventListener("pointerup", () => {
  if (drawing) {
    drawing = false;
    updateSaliency();
  }
});
$("clear").onclick = clearPad;

await init();
restart();
drawWeights();
clearPad();
