// Plain-canvas front-end for the aifsim wasm bindings. No framework.
import init, {
  simulate_gene_ensemble,
  gene_variance_curve,
  maturation_variance_map,
} from "./pkg/aifsim_wasm.js";

const $ = (id) => document.getElementById(id);

// ---------------------------------------------------------------------------
// Tiny plotting helper
// ---------------------------------------------------------------------------

function makePlot(canvas, { xLabel, yLabel }) {
  const ctx = canvas.getContext("2d");
  const pad = { l: 48, r: 12, t: 12, b: 30 };
  const W = canvas.width, H = canvas.height;
  return {
    ctx, pad, W, H,
    xr: [0, 1], yr: [0, 1],
    setRange(xs, ys) {
      const finite = (v) => Number.isFinite(v);
      const fx = xs.filter(finite), fy = ys.filter(finite);
      this.xr = [Math.min(...fx), Math.max(...fx)];
      const lo = Math.min(0, ...fy), hi = Math.max(...fy);
      this.yr = [lo, hi + 0.08 * (hi - lo || 1)];
    },
    px(x) { return this.pad.l + (x - this.xr[0]) / (this.xr[1] - this.xr[0]) * (W - this.pad.l - this.pad.r); },
    py(y) { return H - this.pad.b - (y - this.yr[0]) / (this.yr[1] - this.yr[0]) * (H - this.pad.t - this.pad.b); },
    clear() {
      ctx.clearRect(0, 0, W, H);
      ctx.strokeStyle = "#d0d7de"; ctx.lineWidth = 1;
      ctx.strokeRect(pad.l, pad.t, W - pad.l - pad.r, H - pad.t - pad.b);
      ctx.fillStyle = "#57606a"; ctx.font = "12px system-ui";
      ctx.fillText(xLabel, W / 2 - 12, H - 8);
      ctx.save(); ctx.translate(12, H / 2 + 12); ctx.rotate(-Math.PI / 2);
      ctx.fillText(yLabel, 0, 0); ctx.restore();
      // y ticks
      const ticks = 4;
      for (let i = 0; i <= ticks; i++) {
        const y = this.yr[0] + (this.yr[1] - this.yr[0]) * i / ticks;
        ctx.fillText(y.toPrecision(3), 4, this.py(y) + 4);
      }
      const xt = 5;
      for (let i = 0; i <= xt; i++) {
        const x = this.xr[0] + (this.xr[1] - this.xr[0]) * i / xt;
        ctx.fillText(x.toPrecision(3), this.px(x) - 8, H - this.pad.b + 16);
      }
    },
    line(xs, ys, color, dash = []) {
      ctx.strokeStyle = color; ctx.lineWidth = 1.8; ctx.setLineDash(dash);
      ctx.beginPath();
      let started = false;
      for (let i = 0; i < xs.length; i++) {
        if (!Number.isFinite(ys[i])) { started = false; continue; }
        const X = this.px(xs[i]), Y = this.py(ys[i]);
        if (!started) { ctx.moveTo(X, Y); started = true; } else ctx.lineTo(X, Y);
      }
      ctx.stroke(); ctx.setLineDash([]);
    },
    hline(y, color, dash = [5, 4]) {
      this.line([this.xr[0], this.xr[1]], [y, y], color, dash);
    },
    legend(entries) {
      let y = pad.t + 14;
      ctx.font = "12px system-ui";
      for (const [label, color] of entries) {
        ctx.strokeStyle = color; ctx.lineWidth = 2;
        ctx.beginPath(); ctx.moveTo(pad.l + 10, y - 4); ctx.lineTo(pad.l + 34, y - 4); ctx.stroke();
        ctx.fillStyle = "#1b1f24"; ctx.fillText(label, pad.l + 40, y);
        y += 16;
      }
    },
  };
}

// ---------------------------------------------------------------------------
// Panel 1: live ensemble
// ---------------------------------------------------------------------------

function bindSlider(id) {
  const el = $(id), out = $(id + "-out");
  el.addEventListener("input", () => { out.value = el.value; });
  return el;
}

const ensK = bindSlider("ens-k");
const ensKp = bindSlider("ens-kp");
const ensN = bindSlider("ens-n");

function runEnsemble() {
  const btn = $("ens-run");
  btn.disabled = true;
  // Let the browser paint the disabled state before the wasm call blocks.
  setTimeout(() => {
    const params = {
      k: Number(ensK.value),
      kp: Number(ensKp.value),
      kind: $("ens-kind").value,
      n: Number(ensN.value),
      t_end: 20.0,
      points: 121,
      seed: 42,
    };
    const out = JSON.parse(simulate_gene_ensemble(JSON.stringify(params)));
    btn.disabled = false;
    if (out.error) { $("ens-stat").textContent = "error: " + out.error; return; }

    const meanPlot = makePlot($("ens-mean"), { xLabel: "time", yLabel: "mean protein" });
    meanPlot.setRange(out.times, [...out.mean, out.set_point * 1.4]);
    meanPlot.clear();
    meanPlot.hline(out.set_point, "#57606a");
    meanPlot.line(out.times, out.mean, "#0969da");
    if (out.ode_mean.length) meanPlot.line(out.times, out.ode_mean, "#cf222e", [6, 4]);
    meanPlot.legend([["SSA ensemble mean", "#0969da"], ["deterministic PI mean", "#cf222e"],
                     ["set-point", "#57606a"]]);

    const varPlot = makePlot($("ens-var"), { xLabel: "time", yLabel: "protein variance" });
    varPlot.setRange(out.times, [...out.var, out.var_constitutive * 1.3]);
    varPlot.clear();
    varPlot.hline(out.var_constitutive, "#57606a");
    varPlot.line(out.times, out.var, "#0969da");
    if (out.ode_var.length) varPlot.line(out.times, out.ode_var, "#8250df", [6, 4]);
    varPlot.legend([["SSA ensemble variance", "#0969da"], ["moment-closure transient", "#8250df"],
                    ["constitutive level", "#57606a"]]);

    let stat =
      `measured beta = ${out.beta_hat.toFixed(3)}   ` +
      (out.formula_var != null ? `closure Var = ${out.formula_var.toFixed(3)}   ` : "closure outside validity   ") +
      (out.pi_zero != null ? `PI zero at s = ${out.pi_zero.toFixed(3)}   ` : "") +
      `u* = ${out.u_star.toFixed(1)}   n = ${out.n}`;
    $("ens-stat").textContent = stat;
    if (out.guard_warning) {
      $("ens-stat").innerHTML += `\n<span class="warn">${out.guard_warning}</span>`;
    }
  }, 10);
}
$("ens-run").addEventListener("click", runEnsemble);

// ---------------------------------------------------------------------------
// Panel 2: variance-vs-beta curve
// ---------------------------------------------------------------------------

const curveK = bindSlider("curve-k");
const curveBmax = bindSlider("curve-bmax");

function drawCurve() {
  const out = JSON.parse(gene_variance_curve(Number(curveK.value), Number(curveBmax.value), 400));
  if (out.error) { $("curve-stat").textContent = "error: " + out.error; return; }
  const plot = makePlot($("curve"), { xLabel: "effective proportional gain beta", yLabel: "Var(protein)" });
  const ys = out.variance.map((v) => (v == null ? NaN : v));
  plot.setRange(out.betas, [...ys.filter(Number.isFinite), out.openloop * 1.25]);
  plot.clear();
  plot.hline(out.openloop, "#57606a");
  plot.hline(out.beta_limit, "#1a7f37", [2, 4]);
  plot.line(out.betas, ys, "#0969da");
  plot.legend([["closed-loop variance", "#0969da"], ["constitutive (open-loop)", "#57606a"],
               ["beta → ∞ limit", "#1a7f37"]]);
  $("curve-stat").textContent =
    `open-loop ${out.openloop.toFixed(3)}; large-beta limit ${out.beta_limit.toFixed(3)}. ` +
    `Monotone decrease in beta: crossing the grey line is variance below the constitutive level.`;
}
curveK.addEventListener("input", drawCurve);
curveBmax.addEventListener("input", drawCurve);

// ---------------------------------------------------------------------------
// Panel 3: maturation stability map
// ---------------------------------------------------------------------------

function drawMap() {
  const KMAX = 9.0, BMAX = 35.0, NK = 160, NB = 120;
  const out = JSON.parse(maturation_variance_map(KMAX, BMAX, NK, NB));
  if (out.error) { $("map-stat").textContent = "error: " + out.error; return; }
  const canvas = $("map"), ctx = canvas.getContext("2d");
  const pad = { l: 48, r: 12, t: 12, b: 30 };
  const W = canvas.width, H = canvas.height;
  ctx.clearRect(0, 0, W, H);
  const plotW = W - pad.l - pad.r, plotH = H - pad.t - pad.b;
  const vals = out.variance.filter((v) => v != null);
  const logs = vals.map(Math.log10);
  const lo = Math.min(...logs), hi = Math.max(...logs);
  const cw = plotW / NK, ch = plotH / NB;
  for (let i = 0; i < NK; i++) {
    for (let j = 0; j < NB; j++) {
      const v = out.variance[i * NB + j];
      if (v == null) { ctx.fillStyle = "#e6e8eb"; }
      else {
        const t = (Math.log10(v) - lo) / (hi - lo || 1);
        // blue (low variance) to red (high)
        const r = Math.round(30 + 200 * t), g = Math.round(90 - 40 * t), b = Math.round(220 - 190 * t);
        ctx.fillStyle = `rgb(${r},${g},${b})`;
      }
      // k on x, beta on y (origin bottom-left)
      const x = pad.l + i * cw;
      const y = H - pad.b - (j + 1) * ch;
      ctx.fillRect(x, y, Math.ceil(cw), Math.ceil(ch));
    }
  }
  // analytic boundary
  ctx.strokeStyle = "#ffffff"; ctx.lineWidth = 2;
  ctx.beginPath();
  let started = false;
  out.k_values.forEach((k, i) => {
    const b = out.boundary[i];
    if (!b) { started = false; return; }
    const x = pad.l + (i + 0.5) * cw;
    const y = H - pad.b - (b[1] / BMAX) * plotH;
    if (!started) { ctx.moveTo(x, y); started = true; } else ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.beginPath(); started = false;
  out.k_values.forEach((k, i) => {
    const b = out.boundary[i];
    if (!b || b[0] <= 0) { started = false; return; }
    const x = pad.l + (i + 0.5) * cw;
    const y = H - pad.b - (b[0] / BMAX) * plotH;
    if (!started) { ctx.moveTo(x, y); started = true; } else ctx.lineTo(x, y);
  });
  ctx.stroke();
  // axes
  ctx.strokeStyle = "#d0d7de"; ctx.strokeRect(pad.l, pad.t, plotW, plotH);
  ctx.fillStyle = "#57606a"; ctx.font = "12px system-ui";
  ctx.fillText("integral gain k", W / 2 - 30, H - 8);
  ctx.save(); ctx.translate(12, H / 2 + 30); ctx.rotate(-Math.PI / 2);
  ctx.fillText("proportional gain beta", 0, 0); ctx.restore();
  for (let i = 0; i <= 5; i++) {
    ctx.fillText((KMAX * i / 5).toFixed(1), pad.l + plotW * i / 5 - 8, H - pad.b + 16);
    ctx.fillText((BMAX * i / 5).toFixed(0), 20, H - pad.b - plotH * i / 5 + 4);
  }
  $("map-stat").textContent =
    "Log-scale variance inside the stability region; it blows up towards the boundary, " +
    "so for fixed k the variance first falls then rises again with beta.";
}

await init();
drawCurve();
drawMap();
runEnsemble();
