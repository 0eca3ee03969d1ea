// Drives the demo page: reads the sliders, calls the three WebAssembly
// entry points, and renders the results on two canvases and a table.
import init, {
  outage_curve_json,
  association_json,
  dms_sweep_json,
} from "../crates/wasm/pkg/jsdm_outage_wasm.js";

const $ = (id) => document.getElementById(id);
const sliders = ["m", "k1", "k2", "snr", "d", "r"].map($);
const status = $("status");

const CURVE_START_DB = -10;
const CURVE_STOP_DB = 20;
const CURVE_STEP_DB = 2;
const SWEEP_THRESHOLD_DB = 0;
const CELL_RADIUS_M = 200;

function params() {
  return {
    m: +$("m").value,
    k1: +$("k1").value,
    k2: +$("k2").value,
    snr: +$("snr").value,
    d: +$("d").value,
    r: +$("r").value,
  };
}

// The pico disk has to fit between the base station and the cell edge.
function clampRadius() {
  const d = +$("d").value;
  const rMax = Math.min(60, CELL_RADIUS_M - d, d);
  const r = $("r");
  r.max = rMax;
  if (+r.value > rMax) r.value = rMax;
}

function showValues() {
  $("mOut").value = $("m").value;
  $("k1Out").value = $("k1").value;
  $("k2Out").value = $("k2").value;
  $("snrOut").value = `${$("snr").value} dB`;
  $("dOut").value = `${$("d").value} m`;
  $("rOut").value = `${$("r").value} m`;
}

function call(fn, ...args) {
  const out = JSON.parse(fn(...args));
  if (out.error) throw new Error(out.error);
  return out;
}

// ---------------------------------------------------------------- plotting

function frame(ctx, x0, y0, w, h) {
  ctx.strokeStyle = "#9aa0a6";
  ctx.lineWidth = 1;
  ctx.strokeRect(x0, y0, w, h);
}

function gridLabel(ctx, text, x, y, align = "center") {
  ctx.fillStyle = "#5b616b";
  ctx.font = "12px system-ui";
  ctx.textAlign = align;
  ctx.fillText(text, x, y);
}

// Outage on a log axis spanning [1e-4, 1].
function drawCurve(canvas, data) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height;
  ctx.clearRect(0, 0, W, H);
  const x0 = 52, y0 = 12, w = W - x0 - 14, h = H - y0 - 40;
  const floor = 1e-4;
  const xs = data.thresholds_db;
  const px = (t) => x0 + ((t - xs[0]) / (xs[xs.length - 1] - xs[0])) * w;
  // log10 in [-4, 0] -> bottom..top
  const pyl = (p) => y0 + (1 - (Math.log10(Math.max(p, floor)) + 4) / 4) * h;

  // decade grid
  for (let e = 0; e >= -4; e--) {
    const y = pyl(10 ** e);
    ctx.strokeStyle = "#e4e7eb";
    ctx.beginPath();
    ctx.moveTo(x0, y);
    ctx.lineTo(x0 + w, y);
    ctx.stroke();
    gridLabel(ctx, `1e${e}`, x0 - 8, y + 4, "right");
  }
  for (const t of xs) {
    if (t % 10 !== 0 && t !== xs[0] && t !== xs[xs.length - 1]) continue;
    gridLabel(ctx, `${t}`, px(t), y0 + h + 16);
  }
  gridLabel(ctx, "SINR threshold (dB)", x0 + w / 2, y0 + h + 32);
  frame(ctx, x0, y0, w, h);

  const series = [
    { ys: data.analytic, color: "#0b66c3", dash: [] },
    { ys: data.noise_limited, color: "#1d8a4c", dash: [7, 4] },
    { ys: data.no_pico, color: "#b3261e", dash: [2, 3] },
  ];
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dash);
    ctx.lineWidth = 2;
    ctx.beginPath();
    xs.forEach((t, i) => {
      const x = px(t), y = pyl(s.ys[i]);
      i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
  ctx.setLineDash([]);
}

// Placement sweep: two probability series on a linear [0, 1] axis.
function drawSweep(canvas, data) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height;
  ctx.clearRect(0, 0, W, H);
  const x0 = 52, y0 = 12, w = W - x0 - 14, h = H - y0 - 40;
  const xs = data.d_ms_m;
  const px = (d) => x0 + ((d - xs[0]) / (xs[xs.length - 1] - xs[0])) * w;
  const py = (p) => y0 + (1 - p) * h;

  for (let g = 0; g <= 1; g += 0.25) {
    const y = py(g);
    ctx.strokeStyle = "#e4e7eb";
    ctx.beginPath();
    ctx.moveTo(x0, y);
    ctx.lineTo(x0 + w, y);
    ctx.stroke();
    gridLabel(ctx, g.toFixed(2), x0 - 8, y + 4, "right");
  }
  for (const d of xs) {
    if (d % 30 !== 0) continue;
    gridLabel(ctx, `${d}`, px(d), y0 + h + 16);
  }
  gridLabel(ctx, "relay distance d (m)", x0 + w / 2, y0 + h + 32);
  frame(ctx, x0, y0, w, h);

  const series = [
    { ys: data.analytic, color: "#0b66c3", dash: [] },
    { ys: data.p_gs, color: "#7b3ff2", dash: [7, 4] },
  ];
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.setLineDash(s.dash);
    ctx.lineWidth = 2;
    ctx.beginPath();
    xs.forEach((d, i) => {
      const x = px(d), y = py(s.ys[i]);
      i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
  ctx.setLineDash([]);

  // Mark the outage minimum.
  let best = 0;
  data.analytic.forEach((p, i) => { if (p < data.analytic[best]) best = i; });
  ctx.fillStyle = "#0b66c3";
  ctx.beginPath();
  ctx.arc(px(xs[best]), py(data.analytic[best]), 4, 0, 2 * Math.PI);
  ctx.fill();
  gridLabel(ctx, `min at ${xs[best]} m`, px(xs[best]), py(data.analytic[best]) - 10);
}

function fillAssoc(table, a) {
  const deg = (rad) => ((rad * 180) / Math.PI).toFixed(2) + "°";
  const rows = [
    ["Pico-served share of group 1", a.p_gs.toFixed(4)],
    ["Pico-served area / cell area", a.pico_served_mass.toFixed(4)],
    ["Macro share of group-1 area", a.macro_in_pico_group_mass.toFixed(4)],
    ["Disk half-angle from base", deg(a.theta0_rad)],
    ["Shadowed angle behind disk", deg(a.clip_angle_rad)],
  ];
  table.innerHTML = rows
    .map(([k, v]) => `<tr><td>${k}</td><td>${v}</td></tr>`)
    .join("");
}

// ---------------------------------------------------------------- wiring

let pending = null;

function recompute() {
  clampRadius();
  showValues();
  status.textContent = "computing…";
  status.className = "";
  // Let the browser paint the status line before the (synchronous) math runs.
  if (pending) cancelAnimationFrame(pending);
  pending = requestAnimationFrame(() => {
    const p = params();
    try {
      const curve = call(
        outage_curve_json,
        p.m, p.k1, p.k2, p.snr, p.d, p.r,
        CURVE_START_DB, CURVE_STOP_DB, CURVE_STEP_DB,
      );
      drawCurve($("curve"), curve);
      fillAssoc($("assocTable"), call(association_json, p.d, p.r));
      const sweep = call(
        dms_sweep_json,
        p.m, p.k1, p.k2, p.snr, 1 / 3, SWEEP_THRESHOLD_DB,
        60, 190, 10,
      );
      drawSweep($("sweep"), sweep);
      status.textContent = "";
    } catch (err) {
      status.textContent = String(err.message || err);
      status.className = "error";
    }
  });
}

async function main() {
  try {
    await init();
  } catch (err) {
    status.textContent =
      "WebAssembly module not found — build it with " +
      "`wasm-pack build crates/wasm --target web --out-dir pkg` first.";
    status.className = "error";
    return;
  }
  sliders.forEach((s) => s.addEventListener("input", recompute));
  recompute();
}

main();
