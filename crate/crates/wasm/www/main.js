import init, { coefficientCurves, filterHistory, detectorStatistics } from "./pkg/fwm_cascade_wasm.js";

const COLORS = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"];
const $ = (id) => document.getElementById(id);

function plot(canvas, xs, series, xLabel) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, 10, w - pad - 10, h - pad - 10);
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText("1", pad - 14, 16);
  ctx.fillText("0", pad - 14, h - pad + 4);
  ctx.fillText(xLabel, w / 2 - 20, h - 8);
  const x0 = xs[0], x1 = xs[xs.length - 1];
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - pad - 10);
  const py = (y) => 10 + (1 - y) * (h - pad - 20);
  series.forEach((ys, k) => {
    ctx.strokeStyle = COLORS[k % COLORS.length];
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ys.forEach((y, i) => (i ? ctx.lineTo(px(xs[i]), py(y)) : ctx.moveTo(px(xs[i]), py(y))));
    ctx.stroke();
  });
}

function guard(fn) {
  return () => {
    try {
      $("status").textContent = "";
      fn();
    } catch (e) {
      $("status").textContent = String(e.message ?? e);
      $("status").className = "error";
    }
  };
}

const drawCurves = guard(() => {
  const n = Number($("c-n").value);
  const range = Number($("c-range").value) * Math.PI;
  const points = 800;
  const flat = coefficientCurves(n, range, points);
  const xs = Array.from({ length: points }, (_, p) => (range * p) / (points - 1) / Math.PI);
  const series = Array.from({ length: n + 1 }, (_, j) => xs.map((_, p) => flat[p * (n + 1) + j]));
  plot($("c-plot"), xs, series, "θ / π");
  $("c-legend").innerHTML = series
    .map((_, j) => `<span style="color:${COLORS[j % COLORS.length]}">■ j = ${j}</span>`)
    .join("");
});

const drawFilter = guard(() => {
  const stages = Number($("f-stages").value);
  const flat = filterHistory($("f-kind").value, Number($("f-value").value), Number($("f-theta").value) * Math.PI, stages);
  const xs = Array.from({ length: stages + 1 }, (_, k) => k);
  const series = [0, 1, 2].map((i) => xs.map((k) => flat[3 * k + i]));
  plot($("f-plot"), xs, series, "stage");
});

const drawDetect = guard(() => {
  const stages = Number($("d-stages").value);
  const s = detectorStatistics(Number($("d-n").value), Number($("d-theta").value) * Math.PI, stages, Number($("d-eff").value));
  const rows = [["only D∞ fires", s[0]], ["no detector fires", s[1]]];
  for (let k = 1; k <= stages; k++) rows.push([`D${k} fires`, s[1 + k]]);
  $("d-table").innerHTML = "<tr><th>event</th><th>probability</th></tr>" +
    rows.map(([name, p]) => `<tr><td>${name}</td><td>${p.toExponential(4)}</td></tr>`).join("");
});

await init();
for (const id of ["c-n", "c-range"]) $(id).addEventListener("input", drawCurves);
for (const id of ["f-kind", "f-value", "f-theta", "f-stages"]) $(id).addEventListener("input", drawFilter);
for (const id of ["d-n", "d-theta", "d-stages", "d-eff"]) $(id).addEventListener("input", drawDetect);
drawCurves();
drawFilter();
drawDetect();
