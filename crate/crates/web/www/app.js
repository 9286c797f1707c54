import init, { maps_list, pvf, eigenoption, diffusion } from "./pkg/eigenoptions_web.js";

const $ = (id) => document.getElementById(id);
const laplacian = () => document.querySelector("input[name=lap]:checked").value;
const gamma = () => Number($("gamma").value);

function fail(e) {
  $("error").textContent = String(e.message ?? e);
}

function grid(el, rows, cell) {
  el.innerHTML = "";
  el.style.gridTemplateColumns = `repeat(${rows[0].length}, 1.6em)`;
  rows.forEach((row, r) => row.forEach((v, c) => {
    const d = document.createElement("div");
    if (v === null) d.className = "wall";
    else cell(d, v, r, c);
    el.appendChild(d);
  }));
}

function colour(t) {
  // t in [0,1]: blue through white to red
  const a = Math.round(255 * Math.min(1, 2 * t));
  const b = Math.round(255 * Math.min(1, 2 - 2 * t));
  return `rgb(${a}, ${Math.min(a, b)}, ${b})`;
}

function show() {
  $("error").textContent = "";
  try {
    const map = $("map").value;
    const rank = Number($("rank").value);
    const p = JSON.parse(pvf(map, laplacian(), rank));
    const vals = p.values.flat().filter((v) => v !== null);
    const lo = Math.min(...vals), hi = Math.max(...vals);
    const span = hi - lo || 1;
    grid($("pvf"), p.values, (d, v) => {
      d.style.background = colour((v - lo) / span);
      d.title = v.toFixed(4);
    });
    $("pvf-info").textContent = `rank ${rank}, eigenvalue ${p.eigenvalue.toFixed(5)}`;
    const o = JSON.parse(eigenoption(map, laplacian(), rank, $("sign").value, gamma()));
    grid($("option"), o.glyphs, (d, g) => {
      d.textContent = g === "T" ? "" : { "^": "↑", v: "↓", ">": "→", "<": "←" }[g];
      if (g === "T") d.className = "term";
    });
    $("option-info").textContent =
      `option ${o.label}: starts in ${o.initiation} states, terminates in ${o.termination.length}`;
  } catch (e) { fail(e); }
}

function sweep() {
  $("error").textContent = "";
  try {
    const t0 = performance.now();
    const rows = JSON.parse(diffusion($("map").value, laplacian(), gamma(), Number($("count").value)));
    const svg = $("curve");
    const W = 520, H = 260, pad = 40;
    const xs = rows.map((r) => r[0]), ys = rows.map((r) => Math.log10(r[1]));
    const xmax = Math.max(...xs, 1), ylo = Math.min(...ys), yhi = Math.max(...ys);
    const x = (v) => pad + (W - 2 * pad) * v / xmax;
    const y = (v) => H - pad - (H - 2 * pad) * (v - ylo) / ((yhi - ylo) || 1);
    const pts = rows.map((r, i) => `${x(xs[i])},${y(ys[i])}`).join(" ");
    svg.innerHTML =
      `<polyline points="${pts}" fill="none" stroke="#06c" stroke-width="2"/>` +
      rows.map((r, i) => `<circle cx="${x(xs[i])}" cy="${y(ys[i])}" r="3" fill="#06c"><title>${r[0]} options: ${r[1].toFixed(1)}</title></circle>`).join("") +
      `<text x="${pad}" y="${H - 10}">options (0 to ${xmax})</text>` +
      `<text x="5" y="${pad - 10}">log10 diffusion time (${ylo.toFixed(2)} to ${yhi.toFixed(2)})</text>`;
    $("curve-info").textContent =
      rows.map((r) => `${r[0]}: ${r[1].toFixed(1)}`).join(", ") + ` (${((performance.now() - t0) / 1000).toFixed(1)} s)`;
  } catch (e) { fail(e); }
}

await init();
const maps = JSON.parse(maps_list());
for (const name of Object.keys(maps)) $("preset").add(new Option(name, name));
$("preset").value = "four_room";
$("map").value = maps.four_room;
$("preset").onchange = () => { $("map").value = maps[$("preset").value]; show(); };
$("show").onclick = show;
$("sweep").onclick = sweep;
show();
