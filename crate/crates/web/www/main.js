import init, { Lab } from "./pkg/fednam_web.js";

const $ = (id) => document.getElementById(id);
let lab = null;
let info = null;

function fmt(v) {
  return Number.isFinite(v) ? v.toFixed(3) : "n/a";
}

function train() {
  $("status").textContent = "training...";
  // Let the status paint before the synchronous training call.
  setTimeout(() => {
    try {
      lab?.free();
      const t = performance.now();
      lab = new Lab(+$("seed").value, +$("clients").value, +$("rounds").value);
      info = JSON.parse(lab.summary());
      $("status").textContent = `done in ${((performance.now() - t) / 1000).toFixed(1)} s`;
      showSummary();
      fillSelects();
      buildSliders();
      drawCurves();
      drawDecomposition();
    } catch (e) {
      $("status").textContent = `error: ${e.message ?? e}`;
    }
  }, 20);
}

function showSummary() {
  const rows = info.ranking
    .map((r, i) => `<tr><td>${i + 1}. ${r.feature}</td><td>${fmt(r.score)}</td></tr>`)
    .join("");
  $("summary").innerHTML =
    `<p>test accuracy ${fmt(info.accuracy)}, AUC ${fmt(info.auc)}, ${info.rounds} rounds</p>` +
    `<table><tr><th>global contribution</th><th>score</th></tr>${rows}</table>`;
}

function fillSelects() {
  const opts = (names) => names.map((n, i) => `<option value="${i}">${n}</option>`).join("");
  $("feature").innerHTML = opts(info.features);
  $("class").innerHTML = opts(info.classes);
}

function drawCurves() {
  if (!lab) return;
  const data = JSON.parse(lab.curves(+$("feature").value, +$("class").value));
  const all = [...data.clients, data.averaged, data.fedavg];
  const ys = all.flatMap((c) => c.y);
  const xs = data.averaged.x;
  const box = { x0: xs[0], x1: xs[xs.length - 1], y0: Math.min(...ys), y1: Math.max(...ys) };
  const cv = $("plot");
  const g = cv.getContext("2d");
  g.clearRect(0, 0, cv.width, cv.height);
  const pad = 40;
  const px = (x) => pad + ((x - box.x0) / (box.x1 - box.x0 || 1)) * (cv.width - 2 * pad);
  const py = (y) => cv.height - pad - ((y - box.y0) / (box.y1 - box.y0 || 1)) * (cv.height - 2 * pad);
  g.strokeStyle = "#ccc";
  g.beginPath();
  g.moveTo(pad, py(0));
  g.lineTo(cv.width - pad, py(0));
  g.stroke();
  g.fillStyle = "#444";
  g.fillText(fmt(box.x0), pad, cv.height - 12);
  g.fillText(fmt(box.x1), cv.width - pad - 30, cv.height - 12);
  g.fillText(fmt(box.y1), 2, pad);
  g.fillText(fmt(box.y0), 2, cv.height - pad);
  const line = (c, color, width, dash) => {
    g.strokeStyle = color;
    g.lineWidth = width;
    g.setLineDash(dash);
    g.beginPath();
    c.x.forEach((x, i) => (i ? g.lineTo(px(x), py(c.y[i])) : g.moveTo(px(x), py(c.y[i]))));
    g.stroke();
  };
  data.clients.forEach((c) => line(c, "#999", 1, []));
  line(data.averaged, "#c33", 3, []);
  line(data.fedavg, "#36c", 2, [6, 4]);
  g.setLineDash([]);
  g.lineWidth = 1;
}

function buildSliders() {
  $("sliders").innerHTML = info.features
    .map((name, k) => {
      const [lo, hi] = info.ranges[k];
      const mid = ((lo + hi) / 2).toFixed(2);
      return `<label>${name}<input type="range" id="x${k}" min="${lo}" max="${hi}" step="${(hi - lo) / 100}" value="${mid}"><span id="v${k}">${mid}</span></label>`;
    })
    .join("");
  info.features.forEach((_, k) =>
    $(`x${k}`).addEventListener("input", () => {
      $(`v${k}`).textContent = (+$(`x${k}`).value).toFixed(2);
      drawDecomposition();
    }),
  );
}

function drawDecomposition() {
  if (!lab) return;
  const x = Float64Array.from(info.features.map((_, k) => +$(`x${k}`).value));
  const d = JSON.parse(lab.decompose(x));
  const cls = +$("class").value;
  const terms = d.terms.map((t) => t[cls] ?? t[0]);
  const cv = $("bars");
  const g = cv.getContext("2d");
  g.clearRect(0, 0, cv.width, cv.height);
  const labels = [...info.features, "bias"];
  const vals = [...terms, d.bias[cls] ?? d.bias[0]];
  const m = Math.max(1e-9, ...vals.map(Math.abs));
  const mid = cv.width / 2 + 60;
  const h = cv.height / labels.length;
  labels.forEach((l, i) => {
    const w = (vals[i] / m) * (cv.width / 2 - 80);
    g.fillStyle = vals[i] >= 0 ? "#c33" : "#36c";
    g.fillRect(Math.min(mid, mid + w), i * h + 4, Math.abs(w), h - 8);
    g.fillStyle = "#222";
    g.fillText(`${l}  ${fmt(vals[i])}`, 4, i * h + h / 2 + 4);
  });
  const className = info.classes[cls] ?? "positive";
  $("probs").textContent =
    `logit terms for ${className}; probabilities: ` +
    d.probabilities.map((p, i) => `${info.classes[i] ?? i} ${fmt(p)}`).join(", ");
}

$("train").addEventListener("click", train);
$("feature").addEventListener("change", drawCurves);
$("class").addEventListener("change", () => {
  drawCurves();
  drawDecomposition();
});

await init();
train();
