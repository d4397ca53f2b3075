import init, { run_sandwich_demo, stage_params, edge_probabilities_demo } from "./pkg/sandwich_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function layout(n, size) {
  const r = size / 2 - 24;
  return Array.from({ length: n }, (_, i) => {
    const a = (2 * Math.PI * i) / n - Math.PI / 2;
    return [size / 2 + r * Math.cos(a), size / 2 + r * Math.sin(a)];
  });
}

function drawEdges(ctx, pos, edges, style, width) {
  ctx.strokeStyle = style;
  ctx.lineWidth = width;
  for (const [u, v] of edges) {
    ctx.beginPath();
    ctx.moveTo(...pos[u]);
    ctx.lineTo(...pos[v]);
    ctx.stroke();
  }
}

function drawVertices(ctx, pos) {
  ctx.font = "12px system-ui";
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  pos.forEach(([x, y], i) => {
    ctx.fillStyle = "#fff";
    ctx.strokeStyle = "#333";
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    ctx.arc(x, y, 11, 0, 2 * Math.PI);
    ctx.fill();
    ctx.stroke();
    ctx.fillStyle = "#111";
    ctx.fillText(String(i), x, y);
  });
}

const key = ([u, v]) => `${u}-${v}`;

function runTrial() {
  const out = $("t-out");
  let view;
  try {
    view = JSON.parse(
      run_sandwich_demo(num("t-n"), num("t-d"), num("t-seed"), num("t-trial"), num("t-c"), num("t-xi1"), num("t-xi")),
    );
  } catch (e) {
    out.textContent = String(e);
    return;
  }
  const canvas = $("t-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const pos = layout(view.n, canvas.width);
  const mid = new Set(view.middle.map(key));
  const up = new Set(view.upper.map(key));
  const low = new Set(view.lower.map(key));
  drawEdges(ctx, pos, view.upper.filter((e) => !mid.has(key(e))), "#bbb", 1.5);
  drawEdges(ctx, pos, view.middle.filter((e) => !low.has(key(e)) && up.has(key(e))), "#2566c4", 3);
  drawEdges(ctx, pos, view.middle.filter((e) => !up.has(key(e))), "#d22", 3);
  drawEdges(ctx, pos, view.lower.filter((e) => mid.has(key(e))), "#111", 3);
  ctx.setLineDash([5, 4]);
  drawEdges(ctx, pos, view.lower.filter((e) => !mid.has(key(e))), "#d22", 2);
  ctx.setLineDash([]);
  drawVertices(ctx, pos);
  const flag = (b) => (b ? "yes" : "NO");
  out.textContent = [
    `lower ⊆ regular   ${flag(view.contains_lower)}`,
    `regular ⊆ upper   ${flag(view.contains_upper)}`,
    `IndSample stage 1 ${view.stage1_ind_sample}`,
    `IndSample stage 2 ${view.stage2_ind_sample}`,
    "",
    `|lower| ${view.lower.length}  |regular| ${view.middle.length}  |upper| ${view.upper.length}`,
    `stage-1 partial graph ${view.partial.length} edges`,
    `ζ₁ ${view.zeta1.toFixed(4)}  ζ₂ ${view.zeta2.toFixed(4)}`,
    `lower ~ G(n, ${view.p_lower.toFixed(4)})`,
    `upper ~ G(n, ${view.p_upper.toFixed(4)})`,
  ].join("\n");
}

function etaColour(eta) {
  const r = Math.round(40 + 200 * eta);
  const b = Math.round(200 - 160 * eta);
  return `rgb(${r},60,${b})`;
}

function runProbs() {
  const out = $("p-out");
  let view;
  try {
    view = JSON.parse(edge_probabilities_demo($("p-target").value, $("p-host").value));
  } catch (e) {
    out.textContent = String(e);
    return;
  }
  const canvas = $("p-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const pos = layout(view.n, canvas.width);
  for (const row of view.edges) {
    if (row.probability > 0) drawEdges(ctx, pos, [row.edge], etaColour(row.eta), 0.5 + 7 * row.probability);
  }
  drawVertices(ctx, pos);
  const rows = view.edges
    .map((r) => `<tr><td>${r.edge[0]}–${r.edge[1]}</td><td>${r.fraction}</td><td>${r.probability.toFixed(4)}</td><td>${r.eta.toFixed(4)}</td></tr>`)
    .join("");
  out.innerHTML =
    `<p>${view.factors} factors, max η ${view.max_eta.toFixed(4)}. Width is probability, red is large η.</p>` +
    `<table><tr><th>edge</th><th>exact</th><th>P</th><th>η</th></tr>${rows}</table>`;
}

function runParams() {
  const out = $("s-out");
  let view;
  try {
    view = JSON.parse(stage_params(num("s-n"), num("s-d"), num("s-c")));
  } catch (e) {
    out.textContent = String(e);
    return;
  }
  const p = view.params;
  const fmt = (x) => (x === null ? "—" : typeof x === "number" ? x.toPrecision(6) : String(x));
  const fields = ["case", "in_validity_window", "xi1", "xi", "f", "sigma", "zeta1", "zeta2", "mu1", "mu2", "p1", "q1", "q2"];
  const prows = fields.map((k) => `<tr><td style="text-align:left">${k}</td><td>${fmt(p[k])}</td></tr>`).join("");
  const crows = view.constraints.constraints
    .map((c) => {
      const verdict = c.pass === null ? "reported" : c.pass ? "pass" : "fail";
      const cls = c.pass === false ? "fail" : c.pass ? "ok" : "";
      return `<tr><td style="text-align:left">${c.name}</td><td>${fmt(c.ratio)}</td><td class="${cls}">${verdict}</td></tr>`;
    })
    .join("");
  out.innerHTML =
    `<table>${prows}</table><p>${view.constraints.note}</p>` +
    `<table><tr><th style="text-align:left">constraint</th><th>lhs/rhs</th><th></th></tr>${crows}</table>`;
}

await init();
$("t-run").addEventListener("click", runTrial);
$("t-next").addEventListener("click", () => {
  $("t-trial").value = num("t-trial") + 1;
  runTrial();
});
$("p-run").addEventListener("click", runProbs);
$("s-run").addEventListener("click", runParams);
runTrial();
runProbs();
runParams();
