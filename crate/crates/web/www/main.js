import init, { presets, fluxSweep, tuneAsymmetry, compileGates } from "./pkg/multimon_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function table(el, header, rows) {
  const head = "<tr>" + header.map((h) => `<th>${h}</th>`).join("") + "</tr>";
  const body = rows.map((r) => "<tr>" + r.map((c) => `<td>${c}</td>`).join("") + "</tr>").join("");
  el.innerHTML = head + body;
}

function guarded(errorId, f) {
  return () => {
    $(errorId).textContent = "";
    try {
      f();
    } catch (e) {
      $(errorId).textContent = e.message ?? String(e);
    }
  };
}

function plot(svg, xs, series) {
  const w = svg.width.baseVal.value, h = svg.height.baseVal.value, pad = 36;
  const ys = series.flat();
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0 || 1)) * (h - 2 * pad);
  const colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
  let s = `<rect x="${pad}" y="${pad}" width="${w - 2 * pad}" height="${h - 2 * pad}" fill="none" stroke="#ccc"/>`;
  s += `<text x="${pad}" y="${h - 8}" font-size="11">${x0}</text><text x="${w - pad}" y="${h - 8}" font-size="11" text-anchor="end">${x1} &#934;0</text>`;
  s += `<text x="4" y="${pad}" font-size="11">${y1.toFixed(2)}</text><text x="4" y="${h - pad}" font-size="11">${y0.toFixed(2)}</text>`;
  series.forEach((ys, k) => {
    const pts = ys.map((y, i) => `${sx(xs[i])},${sy(y)}`).join(" ");
    s += `<polyline points="${pts}" fill="none" stroke="${colors[k % colors.length]}" stroke-width="2"/>`;
  });
  svg.innerHTML = s;
}

function runSweep() {
  const rows = JSON.parse(fluxSweep($("sweep-preset").value, num("sweep-max"), parseInt($("sweep-points").value, 10)));
  const modes = rows[0].frequencies_ghz.length;
  const letters = "ABCDEFG".slice(0, modes).split("");
  const xs = rows.map((r) => r.flux_phi0);
  plot($("sweep-plot"), xs, letters.map((_, m) => rows.map((r) => r.frequencies_ghz[m])));
  const header = ["flux", ...letters.map((l) => `f_${l} (GHz)`), ...rows[0].couplings_mhz.map(([pair]) => `J_${pair} (MHz)`), "xi (MHz)"];
  table($("sweep-table"), header, rows.map((r) => [
    r.flux_phi0.toFixed(3),
    ...r.frequencies_ghz.map((f) => f.toFixed(4)),
    ...r.couplings_mhz.map(([, j]) => j.toFixed(2)),
    r.xi_mhz.toFixed(1),
  ]));
}

function runTune() {
  for (const k of ["ab", "bc", "ca"]) $(`tune-${k}-v`).textContent = num(`tune-${k}`).toFixed(3);
  const r = JSON.parse(tuneAsymmetry(num("tune-ej"), num("tune-ab"), num("tune-bc"), num("tune-ca"),
    num("tune-c"), num("tune-c13"), num("tune-c24")));
  const f = r.frequencies_ghz.map((x) => x.toFixed(4)).join(" / ");
  const j = r.couplings_mhz.map(([k, v]) => `J_${k} ${v.toFixed(1)}`).join(", ");
  const ej = r.junction_ej_ghz.map((x) => x.toFixed(3)).join(" / ");
  const verdict = r.passes ? `<span class="pass">spacing passes</span>` : `<span class="error">${r.violations.join("; ")}</span>`;
  $("tune-summary").innerHTML = `EJ ${ej} GHz<br>f ${f} GHz<br>${j} MHz<br>min gap ${r.min_gap_mhz.toFixed(1)} MHz: ${verdict}`;
  table($("tune-table"), ["transition", "GHz"], r.transitions.map((t) => [t.label, t.frequency_ghz.toFixed(4)]));
}

function runCompile() {
  const r = JSON.parse(compileGates($("compile-program").value));
  $("compile-summary").textContent = `${r.pulses.length} pulses, replay error ${r.replay_error.toExponential(2)}`;
  table($("compile-pulses"), ["step", "transition", "theta", "phi"],
    r.pulses.map((p) => [p.step, p.transition, p.theta.toFixed(4), p.phi.toFixed(4)]));
  table($("compile-frames"), ["transition", "frame offset (rad)"], r.frame_offsets_rad.map(([l, v]) => [l, v.toFixed(4)]));
}

await init();
for (const [name, description] of JSON.parse(presets())) {
  const opt = document.createElement("option");
  opt.value = name;
  opt.textContent = name;
  opt.title = description;
  $("sweep-preset").append(opt);
}
$("sweep-run").onclick = guarded("sweep-error", runSweep);
const tune = guarded("tune-error", runTune);
for (const id of ["tune-ej", "tune-c", "tune-c13", "tune-c24", "tune-ab", "tune-bc", "tune-ca"]) $(id).oninput = tune;
$("compile-run").onclick = guarded("compile-error", runCompile);
guarded("sweep-error", runSweep)();
tune();
guarded("compile-error", runCompile)();
