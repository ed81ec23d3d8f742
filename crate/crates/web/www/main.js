import init, { soar_spectrum, analyze_cell, cg_trace } from "./pkg/dacond_web.js";

const $ = (id) => document.getElementById(id);

// Semilog line/point plot of one or more series on a canvas.
function plotLog(canvas, series, { xLabel = "", yLabel = "", points = false } = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height;
  const pad = { l: 64, r: 12, t: 12, b: 34 };
  ctx.clearRect(0, 0, w, h);
  const all = series.flatMap((s) => s.y).filter((v) => v > 0 && Number.isFinite(v));
  if (!all.length) return;
  let lo = Math.floor(Math.log10(Math.min(...all)));
  let hi = Math.ceil(Math.log10(Math.max(...all)));
  if (hi === lo) hi = lo + 1;
  const xmax = Math.max(...series.map((s) => s.y.length - 1), 1);
  const X = (i) => pad.l + (i / xmax) * (w - pad.l - pad.r);
  const Y = (v) => pad.t + (1 - (Math.log10(v) - lo) / (hi - lo)) * (h - pad.t - pad.b);

  ctx.strokeStyle = "#eee";
  ctx.fillStyle = "#555";
  ctx.font = "11px system-ui";
  const step = Math.max(1, Math.ceil((hi - lo) / 8));
  for (let e = lo; e <= hi; e += step) {
    ctx.beginPath();
    ctx.moveTo(pad.l, Y(10 ** e));
    ctx.lineTo(w - pad.r, Y(10 ** e));
    ctx.stroke();
    ctx.fillText(`1e${e}`, 6, Y(10 ** e) + 4);
  }
  ctx.fillText(xLabel, w / 2 - 30, h - 8);
  ctx.save();
  ctx.translate(12, h / 2 + 30);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(yLabel, 0, 0);
  ctx.restore();

  for (const s of series) {
    ctx.strokeStyle = ctx.fillStyle = s.color;
    if (points) {
      s.y.forEach((v, i) => v > 0 && ctx.fillRect(X(i) - 1.5, Y(v) - 1.5, 3, 3));
    } else {
      ctx.beginPath();
      s.y.forEach((v, i) => (i ? ctx.lineTo(X(i), Y(v)) : ctx.moveTo(X(i), Y(v))));
      ctx.stroke();
    }
  }
}

function showError(el, e) {
  el.innerHTML = `<span class="err">${String(e)}</span>`;
}

const fmt = (v) => (v === null || v === undefined ? "–" : Number(v).toPrecision(5));

function updateSoar() {
  const n = Number($("soar-n").value);
  const l = Number($("soar-l").value);
  $("soar-l-val").textContent = l.toFixed(2);
  try {
    const r = JSON.parse(soar_spectrum(n, l));
    $("soar-out").textContent = `λ_min ${fmt(r.lambda_min)}   λ_max ${fmt(r.lambda_max)}   κ ${fmt(r.kappa)}`;
    plotLog($("soar-plot"), [{ y: r.eigenvalues, color: "#1f5fa8" }], { xLabel: "index (descending)", yLabel: "eigenvalue" });
  } catch (e) {
    showError($("soar-out"), e);
  }
}

function cellParams() {
  const lb = Number($("cell-lb").value);
  const lr = Number($("cell-lr").value);
  $("cell-lb-val").textContent = lb.toFixed(2);
  $("cell-lr-val").textContent = lr.toFixed(2);
  return [$("cell-op").value, Number($("cell-p").value), lb, lr, BigInt($("cell-seed").value || 0)];
}

function updateCell() {
  const args = cellParams();
  try {
    const r = JSON.parse(analyze_cell(...args));
    const b = r.bounds;
    const rows = [
      ["κ(Ŝ)", b.kappa_exact, b.kappa_exact],
      ["general (max lower / min upper)", Math.max(...b.general.lower_terms), Math.min(...b.general.upper_terms)],
      ["factored", Math.max(...b.factored.lower_terms), b.factored.upper],
      ["row sums", b.haben.lower, b.haben.upper],
    ];
    $("cell-out").innerHTML =
      `<table><tr><th></th><th>lower</th><th>upper</th></tr>` +
      rows.map(([k, lo, hi]) => `<tr><th>${k}</th><td>${fmt(lo)}</td><td>${fmt(hi)}</td></tr>`).join("") +
      `</table><p class="note">row-sum bounds exact: ${b.exactness.exact}; ` +
      `clusters in spectrum of Ŝ: ${r.distinct_cluster_count}</p>`;
    plotLog($("cell-plot"), [{ y: r.update_eigenvalues, color: "#a83a1f" }], {
      xLabel: "index (descending)",
      yLabel: "update eigenvalue",
      points: true,
    });
  } catch (e) {
    showError($("cell-out"), e);
  }
  updateCg();
}

function updateCg() {
  const args = cellParams();
  const tol = Number($("cg-tol").value);
  try {
    const r = JSON.parse(cg_trace(...args, tol));
    $("cg-out").textContent = `${r.converged ? "converged" : "not converged"} in ${r.iterations} iterations (κ ${fmt(r.kappa)}, solution error ${fmt(r.solution_error)})`;
    plotLog($("cg-plot"), [
      { y: r.relative_residual_trace, color: "#2b8a3e" },
      { y: r.relative_residual_trace.map(() => tol), color: "#999" },
    ], { xLabel: "iteration", yLabel: "relative residual" });
  } catch (e) {
    showError($("cg-out"), e);
  }
}

await init();
for (const id of ["soar-n", "soar-l"]) $(id).addEventListener("input", updateSoar);
for (const id of ["cell-op", "cell-p", "cell-lb", "cell-lr", "cell-seed"]) $(id).addEventListener("input", updateCell);
$("cg-tol").addEventListener("input", updateCg);
updateSoar();
updateCell();
