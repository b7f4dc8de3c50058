import init, { escan, hsweep, density_curves } from "./pkg/semispec_web.js";

const POTENTIALS = {
  harmonic: { kind: "harmonic", coefficients: [1.0] },
  double_well: { kind: "double_well" },
  quartic: { kind: "pure_power", c: 1.0, k: 2 },
  asymmetric: { kind: "asymmetric_double_well", epsilon: 0.2 },
};

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const info = $("info");

function potential() {
  return POTENTIALS[document.querySelector("input[name=pot]:checked").value];
}

// Each series: { x, y, color, points }. Non-finite or (in log mode) nonpositive
// values break the line.
function draw(series, { logx = false, logy = false, xlabel = "", ylabel = "" } = {}) {
  const cv = $("plot");
  const g = cv.getContext("2d");
  const W = cv.width, H = cv.height, m = { l: 110, r: 30, t: 30, b: 80 };
  g.clearRect(0, 0, W, H);
  const tx = (v) => (logx ? Math.log10(v) : v);
  const ty = (v) => (logy ? Math.log10(v) : v);
  const ok = (x, y) => Number.isFinite(tx(x)) && Number.isFinite(ty(y)) && (!logx || x > 0) && (!logy || y > 0);
  let xs = [], ys = [];
  for (const s of series) s.x.forEach((x, i) => { if (ok(x, s.y[i])) { xs.push(tx(x)); ys.push(ty(s.y[i])); } });
  if (xs.length === 0) { g.font = "28px sans-serif"; g.fillText("nothing to plot", W / 2 - 100, H / 2); return; }
  let [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (x1 === x0) x1 = x0 + 1;
  if (y1 === y0) y1 = y0 + 1;
  const pad = 0.05 * (y1 - y0); y0 -= pad; y1 += pad;
  const px = (v) => m.l + ((tx(v) - x0) / (x1 - x0)) * (W - m.l - m.r);
  const py = (v) => H - m.b - ((ty(v) - y0) / (y1 - y0)) * (H - m.t - m.b);

  g.strokeStyle = "#999"; g.lineWidth = 2;
  g.strokeRect(m.l, m.t, W - m.l - m.r, H - m.t - m.b);
  g.fillStyle = "#333"; g.font = "24px sans-serif";
  for (let i = 0; i <= 5; i++) {
    const fx = x0 + ((x1 - x0) * i) / 5, fy = y0 + ((y1 - y0) * i) / 5;
    const lx = logx ? (10 ** fx).toPrecision(2) : fx.toPrecision(3);
    const ly = logy ? (10 ** fy).toExponential(1) : fy.toPrecision(3);
    g.fillText(lx, m.l + ((W - m.l - m.r) * i) / 5 - 25, H - m.b + 32);
    g.fillText(ly, 5, H - m.b - ((H - m.t - m.b) * i) / 5 + 8);
  }
  g.fillText(xlabel, W / 2, H - 20);
  g.save(); g.translate(30, H / 2); g.rotate(-Math.PI / 2); g.fillText(ylabel, 0, 0); g.restore();

  for (const s of series) {
    g.strokeStyle = g.fillStyle = s.color; g.lineWidth = 3;
    if (s.points) {
      s.x.forEach((x, i) => { if (ok(x, s.y[i])) { g.beginPath(); g.arc(px(x), py(s.y[i]), 6, 0, 2 * Math.PI); g.fill(); } });
      continue;
    }
    g.beginPath();
    let pen = false;
    s.x.forEach((x, i) => {
      if (!ok(x, s.y[i])) { pen = false; return; }
      pen ? g.lineTo(px(x), py(s.y[i])) : g.moveTo(px(x), py(s.y[i]));
      pen = true;
    });
    g.stroke();
  }
}

function call(fn, request) {
  info.textContent = "running…";
  // Let the status paint before the synchronous computation blocks the page.
  return new Promise((resolve) => setTimeout(() => {
    const t0 = performance.now();
    try {
      const out = JSON.parse(fn(JSON.stringify(request)));
      resolve({ out, ms: performance.now() - t0 });
    } catch (e) {
      info.textContent = "error: " + e;
      resolve(null);
    }
  }, 20));
}

async function runScan() {
  const r = await call(escan, {
    potential: potential(), h: num("scan-h"), e_min: num("scan-e1"), e_max: num("scan-e2"), points: num("scan-n"),
  });
  if (!r) return;
  const o = r.out;
  draw([
    { x: o.energies, y: o.magnitudes, color: "#1f5fbf" },
    { x: o.energies, y: o.tail_bounds, color: "#c33" },
  ], { xlabel: "E", ylabel: "|Υ|" });
  info.textContent = `peaks at ${o.peaks.map((e) => e.toFixed(4)).join(", ") || "none"}\n` +
    o.warnings.join("\n") + `\n(${r.ms.toFixed(0)} ms; red: tail bound)`;
}

async function runSweep() {
  const r = await call(hsweep, {
    potential: potential(), energy: num("sweep-e"), h_max: num("sweep-h1"), h_min: num("sweep-h2"), count: num("sweep-n"),
  });
  if (!r) return;
  const o = r.out;
  draw([
    { x: o.h, y: o.magnitudes, color: "#1f5fbf", points: true },
    { x: o.h, y: o.magnitudes, color: "#1f5fbf" },
    { x: o.h, y: o.tail_bounds, color: "#c33" },
  ], { logx: true, logy: true, xlabel: "h", ylabel: "|Υ|" });
  let fit = o.fit_error || "sweep is numerically zero";
  if (o.fit && o.fit.outcome === "fit") {
    fit = `|Υ| ≈ C h^α log(1/h)^m with α = ${o.fit.alpha.toFixed(4)}, m = ${o.fit.log_power}, C = ${o.fit.amplitude.toExponential(3)}`;
  }
  info.textContent = `${fit}\n(${r.ms.toFixed(0)} ms; red: tail bound)`;
}

async function runDensity() {
  const r = await call(density_curves, {
    potential: potential(), energy: num("dens-e"), t_max: num("dens-t"), samples: num("dens-n"),
  });
  if (!r) return;
  const o = r.out;
  draw([
    { x: o.t, y: o.predicted, color: "#1f5fbf" },
    { x: o.sample_t, y: o.sample_value, color: "#c60", points: true },
  ], { xlabel: "t", ylabel: "|det(dΦ_t − I)|^(-1/2)" });
  const lines = [
    `critical point x0 = ${o.location.map((v) => v.toFixed(4)).join(", ")}`,
    `Hessian eigenvalues ${o.hessian_eigenvalues.map((v) => v.toFixed(4)).join(", ")}`,
  ];
  if (o.recovered_eigenvalues) lines.push(`recovered from spectra ${o.recovered_eigenvalues.map((v) => v.toFixed(3)).join(", ")}`);
  lines.push(...o.notes, `(${r.ms.toFixed(0)} ms; blue: closed form, orange: from spectra)`);
  info.textContent = lines.join("\n");
}

for (const b of document.querySelectorAll(".tabs button")) {
  b.addEventListener("click", () => {
    for (const o of document.querySelectorAll(".tabs button, section")) o.classList.remove("on");
    b.classList.add("on");
    $(b.dataset.tab).classList.add("on");
  });
}
$("scan-run").addEventListener("click", runScan);
$("sweep-run").addEventListener("click", runSweep);
$("dens-run").addEventListener("click", runDensity);

init().then(() => { info.textContent = "ready"; runScan(); });
