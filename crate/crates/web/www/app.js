import init, { simulate, lambdaSweep, dag } from "./pkg/dagsim_web.js";

const $ = (id) => document.getElementById(id);
const pct = (x) => (x == null ? "n/a" : (100 * x).toFixed(2) + "%");

function params() {
  const out = {};
  for (const el of $("params").querySelectorAll("input, select")) {
    out[el.name] = el.type === "number" ? Number(el.value) : el.value;
  }
  return JSON.stringify(out);
}

function table(headers, rows) {
  const head = "<tr>" + headers.map((h) => `<th>${h}</th>`).join("") + "</tr>";
  const body = rows.map((r) => "<tr>" + r.map((c) => `<td>${c}</td>`).join("") + "</tr>").join("");
  return `<table>${head}${body}</table>`;
}

// Runs `work` after the status text has had a chance to paint.
function busy(label, work) {
  $("error").textContent = "";
  $("status").textContent = label + "...";
  setTimeout(() => {
    try {
      $("output").innerHTML = work();
    } catch (e) {
      $("error").textContent = String(e);
    }
    $("status").textContent = "";
  }, 20);
}

function runOnce() {
  const s = JSON.parse(simulate(params()));
  const headline = table(
    ["blocks", "collision", "throughput", "parallel blocks", "worst case", "rational / random profit"],
    [[s.blocks, pct(s.collision_rate), pct(s.throughput), pct(s.parallel_block_rate),
      pct(s.worst_case_collision), s.malicious_over_honest == null ? "n/a" : s.malicious_over_honest.toFixed(2)]],
  );
  const miners = table(
    ["miner", "strategy", "blocks", "profit", "profit / fair share"],
    s.miners.map((m) => [m.miner, m.strategy, m.blocks, m.profit.toFixed(0), m.fairness.toFixed(2)]),
  );
  return headline + miners;
}

function runSweep() {
  const lambdas = [10, 20, 40, 60, 120, 300, 600];
  const points = JSON.parse(lambdaSweep(params(), new Float64Array(lambdas)));
  return table(
    ["λ (s)", "collision, all random", "collision, all rational", "parallel blocks"],
    points.map((p) => [p.lambda, pct(p.honest_collision), pct(p.malicious_collision), pct(p.parallel_block_rate)]),
  );
}

function drawDag() {
  const nodes = JSON.parse(dag(params()));
  const width = 920, height = 360, r = 5;
  const tMax = Math.max(...nodes.map((n) => n.time), 1);
  const x = (n) => 20 + (n.time / tMax) * (width - 40);
  // Spread blocks mined close together over separate rows.
  const rows = [];
  const y = new Map();
  for (const n of nodes) {
    let row = rows.findIndex((end) => x(n) - end > 3 * r);
    if (row < 0) { row = rows.length; rows.push(0); }
    rows[row] = x(n);
    y.set(n.id, 20 + (row % 16) * 20);
  }
  const pos = new Map(nodes.map((n) => [n.id, [x(n), y.get(n.id)]]));
  let edges = "";
  for (const n of nodes) {
    const [x1, y1] = pos.get(n.id);
    for (const p of n.parents) {
      const [x2, y2] = pos.get(p);
      edges += `<line x1="${x1}" y1="${y1}" x2="${x2}" y2="${y2}" stroke="#bbb"/>`;
    }
  }
  const dots = nodes.map((n) => {
    const [cx, cy] = pos.get(n.id);
    const cls = n.miner == null ? "genesis" : n.malicious ? "rational" : "random";
    const stroke = n.duplicates > 0 ? ' stroke="#000" stroke-width="2"' : "";
    return `<circle class="${cls}" cx="${cx}" cy="${cy}" r="${r}"${stroke}>` +
      `<title>block ${n.id}, miner ${n.miner ?? "-"}, t=${n.time.toFixed(1)}s, ${n.duplicates} duplicate tx</title></circle>`;
  }).join("");
  const parallel = nodes.filter((n) => n.parallel).length;
  return `<p>${nodes.length - 1} blocks, ${parallel} with a parallel block. Red: rational miner, blue: random miner,
    outlined: carries duplicate transactions.</p><svg width="${width}" height="${height}">${edges}${dots}</svg>`;
}

await init();
$("run").onclick = () => busy("simulating", runOnce);
$("sweep").onclick = () => busy("sweeping", runSweep);
$("draw").onclick = () => busy("drawing", drawDag);
