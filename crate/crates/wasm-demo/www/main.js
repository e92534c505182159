import init, { spacetime, decay_curve, circuit_curve, analyze_rule } from "./pkg/rca_lab_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function report(id, fn) {
  try {
    fn();
  } catch (e) {
    $(id).textContent = String(e.message ?? e);
    $(id).className = "err";
  }
}

// Draws several series on a log-scale y axis.
function plot(canvas, series) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const all = series.flatMap((s) => s.values).filter((v) => v > 0);
  const lo = Math.log10(Math.min(...all));
  const hi = Math.log10(Math.max(...all));
  const span = Math.max(hi - lo, 1e-9);
  const len = Math.max(...series.map((s) => s.values.length));
  const x = (i) => 30 + (i * (w - 40)) / Math.max(len - 1, 1);
  const y = (v) => h - 20 - ((Math.log10(Math.max(v, 10 ** lo)) - lo) * (h - 40)) / span;
  ctx.fillStyle = "#444";
  ctx.fillText(`1e${hi.toFixed(1)}`, 0, 15);
  ctx.fillText(`1e${lo.toFixed(1)}`, 0, h - 22);
  ctx.fillText("t", w - 10, h - 5);
  series.forEach((s, k) => {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.values.forEach((v, i) => (i ? ctx.lineTo(x(i), y(v)) : ctx.moveTo(x(i), y(v))));
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.label, w - 120, 15 + 14 * k);
  });
}

function drawSpacetime() {
  report("st-info", () => {
    const canvas = $("st-canvas");
    const rule = num("st-rule");
    const cells = spacetime(rule, num("st-p"), canvas.width, canvas.height - 1, BigInt(num("st-seed")));
    const img = canvas.getContext("2d").createImageData(canvas.width, canvas.height);
    cells.forEach((c, i) => {
      const v = c ? 20 : 245;
      img.data.set([v, v, v, 255], 4 * i);
    });
    canvas.getContext("2d").putImageData(img, 0, 0);
    const a = JSON.parse(analyze_rule(rule));
    $("st-info").className = "";
    $("st-info").textContent =
      `surjective ${a.surjective}, injective ${a.injective}, balanced ${a.balanced}`;
  });
}

function drawDecay() {
  report("dc-info", () => {
    const c = JSON.parse(decay_curve(num("dc-rule"), num("dc-p"), num("dc-n"), num("dc-t")));
    plot($("dc-canvas"), [
      { label: "TV to uniform", values: c.tv, color: "#1f77b4" },
      { label: "Pinsker bound", values: c.pinsker, color: "#d62728" },
    ]);
    $("dc-info").className = "";
    $("dc-info").textContent = `final deficiency ${c.deficiency.at(-1).toExponential(3)} nats`;
  });
}

function drawCircuit() {
  report("cc-info", () => {
    const c = JSON.parse(circuit_curve(num("cc-bits"), num("cc-p"), num("cc-t")));
    plot($("cc-canvas"), [
      { label: "worst-case TV", values: c.d, color: "#1f77b4" },
      { label: "bound", values: c.bound, color: "#d62728" },
    ]);
    $("cc-info").className = "";
    $("cc-info").textContent = `sup over initials: ${c.mode}`;
  });
}

await init();
$("st-run").onclick = drawSpacetime;
$("dc-run").onclick = drawDecay;
$("cc-run").onclick = drawCircuit;
drawSpacetime();
drawDecay();
drawCircuit();
