import init, { envelopes, solve, scan } from "./pkg/lvwave_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);
const status = (text) => { $("status").textContent = text; };

function params() {
  return [num("a"), num("b"), num("c"), num("d")];
}

function frame(ctx, xs, ymax) {
  const { width: w, height: h } = ctx.canvas;
  const pad = 36;
  const x0 = xs[0], x1 = xs[xs.length - 1];
  const X = (x) => pad + (x - x0) / (x1 - x0) * (w - 2 * pad);
  const Y = (y) => h - pad - y / ymax * (h - 2 * pad);
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  ctx.beginPath();
  ctx.moveTo(pad, Y(0)); ctx.lineTo(w - pad, Y(0));
  ctx.moveTo(pad, Y(0)); ctx.lineTo(pad, Y(ymax));
  ctx.stroke();
  ctx.fillText(x0.toFixed(1), pad, h - pad + 14);
  ctx.fillText(x1.toFixed(1), w - pad - 24, h - pad + 14);
  ctx.fillText(ymax.toFixed(2), 2, Y(ymax) + 4);
  return { X, Y };
}

function line(ctx, map, xs, ys, color, dash = []) {
  ctx.strokeStyle = color;
  ctx.setLineDash(dash);
  ctx.beginPath();
  xs.forEach((x, i) => {
    const y = Math.max(ys[i], 0);
    if (i === 0) ctx.moveTo(map.X(x), map.Y(y)); else ctx.lineTo(map.X(x), map.Y(y));
  });
  ctx.stroke();
  ctx.setLineDash([]);
}

function level(ctx, map, xs, y) {
  line(ctx, map, [xs[0], xs[xs.length - 1]], [y, y], "#999", [2, 3]);
}

function showEnvelopes() {
  const [a, b, c, d] = params();
  try {
    const r = JSON.parse(envelopes(a, b, c, d, num("s"), $("mode").value));
    const ctx = $("plot").getContext("2d");
    const ymax = Math.max(1, a) * 1.05;
    const m = frame(ctx, r.xi, ymax);
    line(ctx, m, r.xi, r.u_upper, "#1f5fbf");
    line(ctx, m, r.xi, r.u_lower, "#1f5fbf", [5, 4]);
    line(ctx, m, r.xi, r.v_upper, "#c0392b");
    line(ctx, m, r.xi, r.v_lower, "#c0392b", [5, 4]);
    level(ctx, m, r.xi, r.coexistence[0]);
    level(ctx, m, r.xi, r.coexistence[1]);
    status(`s* = ${r.critical_speed.toFixed(4)}   certificate: ${r.certificate}\n` +
      `max lower envelopes: u ${r.lower_max[0].toFixed(5)}, v ${r.lower_max[1].toFixed(5)}   ` +
      `coexistence (${r.coexistence[0].toFixed(5)}, ${r.coexistence[1].toFixed(5)})`);
  } catch (e) {
    status(`error: ${e.message ?? e}`);
  }
}

function showProfile() {
  const [a, b, c, d] = params();
  status("solving...");
  // Let the status repaint before the solver blocks the thread.
  setTimeout(() => {
    try {
      const t = performance.now();
      const r = JSON.parse(solve(a, b, c, d, num("s"), $("mode").value));
      const ctx = $("plot").getContext("2d");
      const ymax = Math.max(...r.u, ...r.v, r.coexistence[0], r.coexistence[1]) * 1.05;
      const m = frame(ctx, r.xi, ymax);
      line(ctx, m, r.xi, r.u, "#1f5fbf");
      line(ctx, m, r.xi, r.v, "#c0392b");
      level(ctx, m, r.xi, r.coexistence[0]);
      level(ctx, m, r.xi, r.coexistence[1]);
      status(`${r.converged ? "converged" : "not converged"} after ${r.iterations} iterations ` +
        `(${((performance.now() - t) / 1000).toFixed(1)} s), residual ${r.residual.toExponential(2)}\n` +
        `shape ${r.shape}, tail check ${r.tail_pass ? "pass" : "fail"}`);
    } catch (e) {
      status(`error: ${e.message ?? e}`);
    }
  }, 20);
}

function showScan() {
  const [a, b, c, d] = params();
  const onC = $("axis").value === "c";
  try {
    const r = JSON.parse(scan(a, b, c, d, onC, num("slo"), num("shi"), 60, num("alo"), num("ahi"), 40));
    const ctx = $("scan").getContext("2d");
    const { width: w, height: h } = ctx.canvas;
    const pad = 36;
    ctx.clearRect(0, 0, w, h);
    const cw = (w - 2 * pad) / Math.max(r.s.length, 1);
    const ch = (h - 2 * pad) / Math.max(r.axis.length, 1);
    let held = 0;
    r.cells.forEach((row, i) => row.forEach((cell, j) => {
      ctx.fillStyle = cell === 1 ? "#2e8b57" : cell === 0 ? "#e8e8e8" : "#fff";
      held += cell === 1;
      ctx.fillRect(pad + j * cw, h - pad - (i + 1) * ch, cw + 0.5, ch + 0.5);
    }));
    ctx.fillStyle = "#444";
    ctx.font = "11px sans-serif";
    if (r.s.length) {
      ctx.fillText(`s = ${r.s[0].toFixed(2)}`, pad, h - pad + 14);
      ctx.fillText(`${r.s[r.s.length - 1].toFixed(2)}`, w - pad - 24, h - pad + 14);
    }
    ctx.fillText(onC ? "c" : "a - b", 2, pad - 8);
    status(`${held} of ${r.s.length * r.axis.length} cells where the lower envelope exceeds the coexistence state`);
  } catch (e) {
    status(`error: ${e.message ?? e}`);
  }
}

await init();
$("btn-env").onclick = showEnvelopes;
$("btn-solve").onclick = showProfile;
$("btn-scan").onclick = showScan;
showEnvelopes();
