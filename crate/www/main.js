// Single-page driver for the wasm solver. No framework: DOM reads, one
// requestAnimationFrame loop, and the three wasm operations (step/render,
// shell spectrum, regularity readouts).

import init, { Simulation } from './pkg/qg_wasm.js';

const $ = (id) => document.getElementById(id);

const fieldCanvas = $('field');
const fieldCtx = fieldCanvas.getContext('2d');
const specCanvas = $('spectrum');
const specCtx = specCanvas.getContext('2d');

let sim = null;
let running = false;
const STEPS_PER_FRAME = 5;

// Offscreen canvas at grid resolution; the visible canvas scales it up with
// pixelated rendering.
const gridCanvas = document.createElement('canvas');
const gridCtx = gridCanvas.getContext('2d');

function status(msg) {
  $('status').textContent = msg || '';
}

function fmt(x, digits = 4) {
  if (!Number.isFinite(x)) return String(x);
  const a = Math.abs(x);
  if (a !== 0 && (a < 1e-3 || a >= 1e4)) return x.toExponential(digits);
  return x.toFixed(digits);
}

function restart() {
  running = false;
  $('toggle').textContent = 'Run';
  if (sim) { sim.free(); sim = null; }
  const n = parseInt($('n').value, 10);
  const gamma = parseFloat($('gamma').value);
  const seed = BigInt($('seed').value || '0');
  const kmin = parseFloat($('kmin').value);
  const kmax = parseFloat($('kmax').value);
  const linf = parseFloat($('linf').value);
  const dt = parseFloat($('dt').value);
  try {
    sim = new Simulation(n, gamma, 1.0, seed, kmin, kmax, 0.0, linf, dt);
    gridCanvas.width = n;
    gridCanvas.height = n;
    status('');
  } catch (e) {
    sim = null;
    status(e.message || String(e));
  }
  draw();
}

function stepOnce(steps) {
  if (!sim) return false;
  try {
    sim.step(steps);
    return true;
  } catch (e) {
    status(e.message || String(e));
    return false;
  }
}

function drawField() {
  const n = sim.grid_n;
  const pixels = new Uint8ClampedArray(sim.render());
  gridCtx.putImageData(new ImageData(pixels, n, n), 0, 0);
  fieldCtx.imageSmoothingEnabled = false;
  fieldCtx.drawImage(gridCanvas, 0, 0, fieldCanvas.width, fieldCanvas.height);
}

function drawSpectrum() {
  const shells = sim.spectrum();
  const w = specCanvas.width, h = specCanvas.height;
  specCtx.clearRect(0, 0, w, h);
  specCtx.fillStyle = '#49536b';
  specCtx.font = '11px system-ui';
  specCtx.fillText('rms amplitude per |k|₁ shell (log scale)', 8, 14);

  const floor = -16;           // log10 floor
  const barw = w / shells.length;
  specCtx.fillStyle = '#3b5bdb';
  for (let m = 1; m < shells.length; m++) {
    const v = shells[m];
    if (v <= 0) continue;
    const t = Math.min(1, Math.max(0, (Math.log10(v) - floor) / -floor));
    const bh = t * (h - 24);
    specCtx.fillRect(m * barw, h - bh, Math.max(1, barw - 1), bh);
  }
}

function drawReadouts() {
  $('ro-time').textContent = fmt(sim.time);
  try { $('ro-l2').textContent = fmt(sim.l2()); } catch { $('ro-l2').textContent = '?'; }
  try { $('ro-linf').textContent = fmt(sim.linf()); } catch { $('ro-linf').textContent = '?'; }
  const alpha = parseFloat($('alpha').value);
  try {
    $('ro-wl2').textContent = fmt(sim.weighted_l2(alpha));
  } catch (e) {
    $('ro-wl2').textContent = 'guard: ' + (e.message || 'refused');
  }
  const d = sim.decay();
  $('ro-decay').textContent = d.reliable
    ? `${fmt(d.radius)} (fit r² ${fmt(d.fit_quality, 3)})`
    : 'too few active shells';
  d.free();
}

function draw() {
  if (!sim) {
    fieldCtx.clearRect(0, 0, fieldCanvas.width, fieldCanvas.height);
    specCtx.clearRect(0, 0, specCanvas.width, specCanvas.height);
    return;
  }
  drawField();
  drawSpectrum();
  drawReadouts();
}

function frame() {
  if (!running) return;
  if (!stepOnce(STEPS_PER_FRAME)) {
    running = false;
    $('toggle').textContent = 'Run';
  }
  draw();
  if (running) requestAnimationFrame(frame);
}

function wire() {
  $('toggle').addEventListener('click', () => {
    if (!sim) return;
    running = !running;
    $('toggle').textContent = running ? 'Pause' : 'Run';
    if (running) requestAnimationFrame(frame);
  });
  $('step').addEventListener('click', () => {
    if (running || !sim) return;
    stepOnce(10);
    draw();
  });
  $('restart').addEventListener('click', restart);
  $('gamma').addEventListener('input', () => {
    $('gamma-out').textContent = parseFloat($('gamma').value).toFixed(2);
  });
  $('alpha').addEventListener('input', () => {
    $('alpha-out').textContent = parseFloat($('alpha').value).toFixed(2);
    if (sim && !running) drawReadouts();
  });
}

init().then(() => {
  wire();
  restart();
}).catch((e) => status('failed to load wasm module: ' + (e.message || e)));
