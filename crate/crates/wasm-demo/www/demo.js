import init, { activity_transforms, power_law_tail, distance_decay } from "./pkg/crisis_netkit_wasm.js";

const COLORS = { post: "#1f77b4", retweet: "#d62728", reply: "#2ca02c", quote: "#9467bd" };

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function call(fn, ...args) {
  const out = JSON.parse(fn(...args));
  if (out.error) throw new Error(out.error);
  return out;
}

function show(id, text, isError = false) {
  const el = $(id);
  el.textContent = text;
  el.className = isError ? "stats error" : "stats";
}

function extent(values) {
  let lo = Infinity, hi = -Infinity;
  for (const v of values) {
    if (Number.isFinite(v)) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  }
  if (lo === hi) { lo -= 1; hi += 1; }
  return [lo, hi];
}

// Axes with linear or log10 scales; `series` is [{points, color, dots}].
function plot(canvas, series, { logX = false, logY = false, xLabel = "", yLabel = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 44;
  ctx.clearRect(0, 0, w, h);
  const tx = logX ? Math.log10 : (v) => v;
  const ty = logY ? Math.log10 : (v) => v;
  const pts = series.flatMap((s) => s.points.filter(([x, y]) => (!logX || x > 0) && (!logY || y > 0)));
  if (pts.length === 0) return;
  const [x0, x1] = extent(pts.map(([x]) => tx(x)));
  const [y0, y1] = extent(pts.map(([, y]) => ty(y)));
  const sx = (v) => pad + ((tx(v) - x0) / (x1 - x0)) * (w - 2 * pad);
  const sy = (v) => h - pad - ((ty(v) - y0) / (y1 - y0)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "11px system-ui";
  const fmt = (v, log) => (log ? "1e" + v.toFixed(1) : v.toPrecision(3));
  ctx.fillText(fmt(x0, logX), pad, h - pad + 14);
  ctx.fillText(fmt(x1, logX), w - pad - 30, h - pad + 14);
  ctx.fillText(fmt(y0, logY), 2, h - pad);
  ctx.fillText(fmt(y1, logY), 2, pad + 8);
  ctx.fillText(xLabel, w / 2 - 20, h - 8);
  ctx.save();
  ctx.translate(12, h / 2 + 20);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(yLabel, 0, 0);
  ctx.restore();

  for (const s of series) {
    const p = s.points.filter(([x, y]) => (!logX || x > 0) && (!logY || y > 0));
    ctx.strokeStyle = ctx.fillStyle = s.color;
    if (s.dots) {
      for (const [x, y] of p) ctx.fillRect(sx(x) - 1.5, sy(y) - 1.5, 3, 3);
    } else {
      ctx.beginPath();
      p.forEach(([x, y], i) => (i ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
      ctx.stroke();
    }
  }
}

function legend(canvas, entries) {
  const ctx = canvas.getContext("2d");
  ctx.font = "11px system-ui";
  entries.forEach(([label, color], i) => {
    ctx.fillStyle = color;
    ctx.fillRect(canvas.width - 110, 52 + i * 14, 10, 10);
    ctx.fillStyle = "#222";
    ctx.fillText(label, canvas.width - 95, 61 + i * 14);
  });
}

function runActivity() {
  try {
    const v = call(activity_transforms, num("act-users"), num("act-days"), num("act-h"), num("act-seed"));
    const ok = v.kinds.filter((k) => k.Ok).map((k) => k.Ok);
    const kdeSeries = ok.map((k) => {
      // standardize the grid so curves share the normal reference
      const [m, s] = moments(k.kde);
      return { points: k.kde.map(([y, f]) => [(y - m) / s, f * s]), color: COLORS[k.kind] };
    });
    const ref = [];
    for (let z = -4; z <= 4; z += 0.05) ref.push([z, Math.exp(-0.5 * z * z) / Math.sqrt(2 * Math.PI)]);
    plot($("act-kde"), [...kdeSeries, { points: ref, color: "#000" }], { xLabel: "standardized value", yLabel: "density" });
    legend($("act-kde"), [...ok.map((k) => [k.kind, COLORS[k.kind]]), ["N(0,1)", "#000"]]);
    plot($("act-qq"), [
      ...ok.map((k) => ({ points: k.qq, color: COLORS[k.kind], dots: true })),
      { points: [[-4, -4], [4, 4]], color: "#000" },
    ], { xLabel: "normal quantile", yLabel: "sample quantile" });
    const lines = v.kinds.map((k) =>
      k.Ok ? `${k.Ok.kind.padEnd(8)} lambda ${k.Ok.lambda.toFixed(4)}  n ${k.Ok.n}  at 0 or 1: ${k.Ok.excluded}` : `skipped: ${k.Err}`);
    show("act-stats", `${v.users} users, ${v.events} events\n` + lines.join("\n"));
  } catch (e) {
    show("act-stats", e.message, true);
  }
}

// Mean and standard deviation of a density on a grid.
function moments(grid) {
  let m0 = 0, m1 = 0, m2 = 0;
  for (let i = 1; i < grid.length; i++) {
    const dx = grid[i][0] - grid[i - 1][0];
    const [y, f] = grid[i];
    m0 += f * dx; m1 += f * y * dx; m2 += f * y * y * dx;
  }
  const m = m1 / m0;
  return [m, Math.sqrt(Math.max(m2 / m0 - m * m, 1e-12))];
}

function runTail() {
  try {
    const v = call(power_law_tail, num("pl-alpha"), num("pl-n"), $("pl-exp").checked, num("pl-reps"), num("pl-seed"));
    plot($("pl-ccdf"), [
      { points: v.ccdf, color: "#1f77b4", dots: true },
      { points: v.model, color: "#d62728" },
    ], { logX: true, logY: true, xLabel: "x", yLabel: "P(X >= x)" });
    legend($("pl-ccdf"), [["empirical", "#1f77b4"], ["fitted", "#d62728"]]);
    const verdict = v.p_value > 0.01 ? "consistent with a power law" : "power law rejected";
    show("pl-stats", `alpha ${v.alpha.toFixed(4)}  KS ${v.ks_statistic.toFixed(4)}  p ${v.p_value.toFixed(3)} (${v.replicates} replicates)\n${verdict} at p > 0.01`);
  } catch (e) {
    show("pl-stats", e.message, true);
  }
}

function drawMap(canvas, v) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  ctx.clearRect(0, 0, w, h);
  const [lon0, lon1] = extent(v.places.map((p) => p.lon));
  const [lat0, lat1] = extent(v.places.map((p) => p.lat));
  const span = Math.max(lon1 - lon0, lat1 - lat0);
  const sx = (lon) => pad + ((lon - lon0) / span) * (w - 2 * pad);
  const sy = (lat) => h - pad - ((lat - lat0) / span) * (h - 2 * pad);
  ctx.strokeStyle = "rgba(214, 39, 40, 0.5)";
  for (const [from, to, width] of v.surrogate) {
    if (from === to) continue;
    const a = v.places[from], b = v.places[to];
    ctx.lineWidth = width;
    ctx.beginPath();
    ctx.moveTo(sx(a.lon), sy(a.lat));
    ctx.lineTo(sx(b.lon), sy(b.lat));
    ctx.stroke();
  }
  ctx.lineWidth = 1;
  ctx.font = "11px system-ui";
  for (const p of v.places) {
    ctx.fillStyle = "#1f77b4";
    ctx.beginPath();
    ctx.arc(sx(p.lon), sy(p.lat), 3 + Math.sqrt(p.events) / 20, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#222";
    ctx.fillText(p.name, sx(p.lon) + 6, sy(p.lat) - 6);
  }
}

function runDecay() {
  try {
    const v = call(distance_decay, num("dd-users"), num("dd-locs"), num("dd-grav"), num("dd-seed"));
    drawMap($("dd-map"), v);
    // the zero-distance bucket is drawn at 1 km on the log axis
    const pts = v.decay.map(([lo, hi, mean]) => [lo === 0 ? 1000 : Math.sqrt(lo * hi), mean]);
    plot($("dd-curve"), [{ points: pts, color: "#1f77b4", dots: true }, { points: pts, color: "#1f77b4" }],
      { logX: true, logY: true, xLabel: "distance (m)", yLabel: "mean pair frequency" });
    const rows = v.frequency.map((row, i) => v.places[i].name.padEnd(14) + row.map((c) => String(c ?? "-").padStart(7)).join(""));
    show("dd-stats", "rows: diffuser location, columns: origin location\n" + rows.join("\n"));
  } catch (e) {
    show("dd-stats", e.message, true);
  }
}

await init();
$("act-run").onclick = runActivity;
$("pl-run").onclick = runTail;
$("dd-run").onclick = runDecay;
runActivity();
runTail();
runDecay();
