import init, { Band } from "./pkg/band_wasm.js";

const $ = (id) => document.getElementById(id);
let band = null;

function parseModes(text) {
  return Float64Array.from(
    text.split(/[\s,]+/).filter((t) => t.length).map(Number).filter(Number.isFinite)
  );
}

function report(label) {
  const [dx, dr] = band.closureGap();
  const sx = band.singularPoint();
  $("status").textContent =
    `${label}: energy ${band.energy.toFixed(6)}, ` +
    `closure gaps ${dx.toExponential(2)} / ${dr.toExponential(2)}` +
    (Number.isNaN(sx) ? "" : `, singular point at s = ${sx.toFixed(4)}`);
}

// Orthographic projection after yaw about z and pitch about x.
function project(x, y, z, yaw, pitch) {
  const c = Math.cos(yaw), s = Math.sin(yaw);
  const x1 = c * x - s * y, y1 = s * x + c * y;
  const cp = Math.cos(pitch), sp = Math.sin(pitch);
  return [x1, cp * y1 - sp * z, sp * y1 + cp * z];
}

function drawBand() {
  const canvas = $("view");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!band) return;
  const yaw = +$("yaw").value, pitch = +$("pitch").value;
  let tris;
  try {
    tris = band.strip(+$("width").value);
  } catch (e) {
    $("status").textContent = String(e);
    return;
  }
  const line = band.centerline();
  let cx = 0, cy = 0, cz = 0;
  const m = line.length / 3;
  for (let i = 0; i < m; i++) { cx += line[3 * i]; cy += line[3 * i + 1]; cz += line[3 * i + 2]; }
  cx /= m; cy /= m; cz /= m;

  const faces = [];
  let extent = 1e-9;
  for (let t = 0; t < tris.length; t += 9) {
    const p = [0, 3, 6].map((o) =>
      project(tris[t + o] - cx, tris[t + o + 1] - cy, tris[t + o + 2] - cz, yaw, pitch));
    for (const q of p) extent = Math.max(extent, Math.abs(q[0]), Math.abs(q[1]));
    const depth = (p[0][2] + p[1][2] + p[2][2]) / 3;
    // Shade by the projected normal so both sides of the band stay visible.
    const ux = p[1][0] - p[0][0], uy = p[1][1] - p[0][1], uz = p[1][2] - p[0][2];
    const vx = p[2][0] - p[0][0], vy = p[2][1] - p[0][1], vz = p[2][2] - p[0][2];
    const nx = uy * vz - uz * vy, ny = uz * vx - ux * vz, nz = ux * vy - uy * vx;
    const shade = Math.abs(nz) / (Math.hypot(nx, ny, nz) || 1);
    faces.push({ p, depth, shade, index: t / 18 });
  }
  faces.sort((a, b) => a.depth - b.depth);
  const scale = 0.45 * canvas.width / extent;
  const cells = tris.length / 18;
  for (const f of faces) {
    const hue = Math.round(300 * f.index / cells);
    ctx.fillStyle = `hsl(${hue} 60% ${25 + 45 * f.shade}%)`;
    ctx.beginPath();
    f.p.forEach(([x, y], i) => {
      const X = canvas.width / 2 + scale * x, Y = canvas.height / 2 - scale * y;
      i ? ctx.lineTo(X, Y) : ctx.moveTo(X, Y);
    });
    ctx.closePath();
    ctx.fill();
  }
}

function drawProfile() {
  const canvas = $("plot");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!band) return;
  const series = [["K", band.curvature(), "#c33"], ["W", band.twist(), "#36c"]];
  let top = 1e-9;
  for (const [, v] of series) for (const x of v) top = Math.max(top, Math.abs(x));
  const w = canvas.width, h = canvas.height, pad = 24;
  ctx.strokeStyle = "#999";
  ctx.beginPath(); ctx.moveTo(pad, h / 2); ctx.lineTo(w - pad, h / 2); ctx.stroke();
  series.forEach(([name, v, color], j) => {
    ctx.strokeStyle = color;
    ctx.beginPath();
    v.forEach((y, i) => {
      const X = pad + (w - 2 * pad) * (i + 0.5) / v.length;
      const Y = h / 2 - (h / 2 - pad) * y / top;
      i ? ctx.lineTo(X, Y) : ctx.moveTo(X, Y);
    });
    ctx.stroke();
    ctx.fillStyle = color;
    ctx.fillText(name, pad + 20 * j, 14);
  });
}

function redraw() { drawBand(); drawProfile(); }

function build() {
  try {
    band = Band.fromFourier(256, parseModes($("k").value), parseModes($("w").value), $("moebius").checked);
    report("profile");
  } catch (e) {
    $("status").textContent = String(e);
  }
  redraw();
}

function solve() {
  $("status").textContent = "solving…";
  // Let the status paint before the solve blocks the page.
  setTimeout(() => {
    const t0 = performance.now();
    try {
      band = Band.solve(Math.round(+$("n").value));
      report(`${band.converged ? "converged" : "not converged"} in ${((performance.now() - t0) / 1000).toFixed(1)} s`);
    } catch (e) {
      $("status").textContent = String(e);
    }
    redraw();
  }, 20);
}

await init();
$("build").onclick = build;
$("solve").onclick = solve;
for (const id of ["width", "yaw", "pitch"]) $(id).oninput = drawBand;
build();
