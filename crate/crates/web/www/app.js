// Drives the WebAssembly simulation: a share plot over time plus three
// kinds of operations (run control, layout adjustments, behaviour toggles).
import init, { Simulation } from "./pkg/modal_web.js";

const MODES = ["car", "bike", "bus", "walk"];
const CRITERIA = ["ecology", "comfort", "price", "practicality", "time", "safety"];
const COLORS = { car: "#d1495b", bike: "#2e933c", bus: "#edae49", walk: "#00798c" };
const TICKS_PER_FRAME = 1;

const $ = (id) => document.getElementById(id);
let sim = null;
let history = [];
let playing = false;

function report(err) {
  $("error").textContent = err ? String(err) : "";
}

function restart() {
  try {
    sim = new Simulation(Number($("seed").value) >>> 0, Number($("agents").value) >>> 0);
  } catch (e) {
    report(e);
    return;
  }
  report(null);
  history = [JSON.parse(sim.observe())];
  $("biases").checked = true;
  $("habits").checked = true;
  render();
}

function advance(n) {
  history.push(...JSON.parse(sim.step(n)));
  render();
}

function drawShares() {
  const canvas = $("shares");
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 30;
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#eee";
  ctx.fillStyle = "#888";
  ctx.font = "11px system-ui";
  for (let y = 0; y <= 1.0001; y += 0.25) {
    const py = h - pad - y * (h - 2 * pad);
    ctx.beginPath(); ctx.moveTo(pad, py); ctx.lineTo(w - 10, py); ctx.stroke();
    ctx.fillText(y.toFixed(2), 2, py + 4);
  }
  const last = history[history.length - 1].tick;
  const span = Math.max(last, 50);
  ctx.fillText(`tick ${last}`, w - 70, h - 8);
  for (const m of MODES) {
    ctx.strokeStyle = COLORS[m];
    ctx.lineWidth = 2;
    ctx.beginPath();
    history.forEach((s, i) => {
      const x = pad + (s.tick / span) * (w - pad - 10);
      const y = h - pad - s.shares[m] * (h - 2 * pad);
      i === 0 ? ctx.moveTo(x, y) : ctx.lineTo(x, y);
    });
    ctx.stroke();
  }
}

function render() {
  drawShares();
  const now = history[history.length - 1];
  const fmt = (v) => (v === null ? "–" : v.toFixed(3));
  $("current").innerHTML =
    "<tr><th></th><th>share</th><th>satisfaction</th></tr>" +
    MODES.map((m) => `<tr><th>${m}</th><td>${fmt(now.shares[m])}</td><td>${fmt(now.satisfaction[m])}</td></tr>`).join("") +
    `<tr><th>by habit</th><td colspan=2>${now.by_habit}</td></tr>` +
    `<tr><th>biased</th><td colspan=2>${now.biased}</td></tr>`;
  const layout = JSON.parse(sim.layout());
  $("layout").innerHTML =
    "<tr><th></th>" + CRITERIA.map((c) => `<th>${c}</th>`).join("") + "</tr>" +
    MODES.map((m) => `<tr><th>${m}</th>` + CRITERIA.map((c) => `<td>${layout[m][c].toFixed(1)}</td>`).join("") + "</tr>").join("");
  $("value").textContent = `now ${layout[$("mode").value][$("criterion").value].toFixed(1)}`;
  $("status").textContent = `${playing ? "Running" : "Paused"} at tick ${now.tick}`;
}

function loop() {
  if (!playing) return;
  advance(TICKS_PER_FRAME);
  requestAnimationFrame(loop);
}

function attempt(action) {
  try {
    action();
    report(null);
  } catch (e) {
    report(e);
  }
  render();
}

async function main() {
  await init();
  $("legend").innerHTML = MODES.map((m) => `<span><i style="background:${COLORS[m]}"></i>${m}</span>`).join("");
  $("mode").innerHTML = MODES.map((m) => `<option>${m}</option>`).join("");
  $("criterion").innerHTML = CRITERIA.map((c) => `<option>${c}</option>`).join("");
  $("mode").value = "bike";
  $("criterion").value = "safety";

  $("play").onclick = () => {
    playing = !playing;
    $("play").textContent = playing ? "Pause" : "Play";
    if (playing) requestAnimationFrame(loop);
    render();
  };
  $("step").onclick = () => advance(10);
  $("restart").onclick = restart;
  $("mode").onchange = $("criterion").onchange = render;
  for (const b of document.querySelectorAll("button[data-delta]")) {
    b.onclick = () => attempt(() => sim.adjust_value($("mode").value, $("criterion").value, Number(b.dataset.delta)));
  }
  $("biases").onchange = (e) => attempt(() => sim.set_toggle("biases", e.target.checked));
  $("habits").onchange = (e) => attempt(() => sim.set_toggle("habits", e.target.checked));
  $("reset-habits").onclick = () => attempt(() => sim.reset_habits());

  restart();
}

main().catch((e) => report(e));
