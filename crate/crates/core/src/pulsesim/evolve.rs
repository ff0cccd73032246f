//! Lindblad evolution under square pulses.
//!
//! The stored state is `rho_I = e^{i H0 t} rho e^{-i H0 t}`. During a
//! segment with carrier `w_d` the generator is time independent in the
//! frame `e^{i w_d N t}`, where `H' = H0 - w_d N + sum_mu w_mu eps (a_mu
//! e^{i phi} + h.c.)`; the propagator of each connected block of that
//! generator is an exact matrix exponential.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, Mutex};

use super::{DensityMatrix, DeviceModel, Drive, Integrator, SimulationConfig};
use crate::compiler::{FrameTracker, GateSequence, NativeGate, Op};
use crate::error::{Error, Result};
use crate::units;

/// One square-envelope segment. `amplitude` is `eps` in rad/ns; a zero
/// amplitude is an idle gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSegment {
    pub carrier_ghz: f64,
    pub amplitude: f64,
    pub phase_rad: f64,
    pub duration_ns: f64,
    /// Mode addressed by the pulse, used by the ideal drive.
    #[serde(default)]
    pub target_mode: Option<usize>,
}

impl PulseSegment {
    pub fn idle(duration_ns: f64) -> Self {
        PulseSegment { carrier_ghz: 0.0, amplitude: 0.0, phase_rad: 0.0, duration_ns, target_mode: None }
    }

    fn check(&self) -> Result<()> {
        if !(self.duration_ns > 0.0) || !self.duration_ns.is_finite() {
            return Err(Error::config(format!("segment duration must be positive, got {}", self.duration_ns)));
        }
        if !self.amplitude.is_finite() || !self.phase_rad.is_finite() || !self.carrier_ghz.is_finite() {
            return Err(Error::config("segment amplitude, phase and carrier must be finite"));
        }
        Ok(())
    }
}

pub type PulseSchedule = Vec<PulseSegment>;

/// Physical state, absolute time and the virtual frame of the controller.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub rho: DensityMatrix,
    pub time_ns: f64,
    pub frame: FrameTracker,
}

impl SimState {
    pub fn ground(space: super::FockSpace) -> Self {
        let n = space.modes;
        SimState { rho: DensityMatrix::basis(space, 0), time_ns: 0.0, frame: FrameTracker::new(n) }
    }

    /// Computational block with the virtual frame applied, i.e. the state
    /// as seen by subsequent frame-aware pulses.
    pub fn logical_block(&self) -> DMatrix<Complex64> {
        let f = self.frame.matrix();
        &f * self.rho.logical_block() * f.adjoint()
    }
}

#[derive(Debug)]
struct Block {
    indices: Vec<usize>,
    propagator: DMatrix<Complex64>,
}

#[derive(Debug)]
enum Propagator {
    Blocks(Vec<Block>),
    Rk4,
}

/// `c e^{i (w t + phase)}` sampled on an RK4 grid by phasor recurrence.
struct Oscillating {
    index: [usize; 4],
    c: f64,
    w: f64,
    phase: f64,
    until: f64,
    origin: f64,
    half_step: f64,
    now: Complex64,
    q: Complex64,
}

impl Oscillating {
    fn new(index: [usize; 4], c: f64, w: f64, phase: f64, until: f64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        Oscillating { index, c, w, phase, until, origin: 0.0, half_step: 0.0, now: one, q: one }
    }

    fn start(&mut self, t0: f64, half_step: f64) {
        self.origin = t0;
        self.half_step = half_step;
        self.now = Complex64::from_polar(self.c, self.w * t0 + self.phase);
        self.q = Complex64::from_polar(1.0, self.w * half_step);
    }

    fn at(&self, stage: usize) -> Complex64 {
        match stage {
            0 => self.now,
            1 => self.now * self.q,
            _ => self.now * self.q * self.q,
        }
    }

    /// Moves to step `k`, resynchronizing every 64 steps against rounding.
    fn advance(&mut self, k: usize) {
        if k % 64 == 0 {
            let t = self.origin + 2.0 * self.half_step * k as f64;
            self.now = Complex64::from_polar(self.c, self.w * t + self.phase);
        } else {
            self.now *= self.q * self.q;
        }
    }
}

/// RK4 step when the exact integrator meets a multi-tone segment.
const DEFAULT_STEP_NS: f64 = 0.1;

type CacheKey = (u64, u64, u64, u64, Option<usize>, bool);

/// Simulator for one device and configuration; propagators are cached per
/// distinct segment.
#[derive(Debug)]
pub struct Simulator {
    pub model: DeviceModel,
    pub config: SimulationConfig,
    energies: Vec<f64>,
    rates: Vec<f64>,
    cache: Mutex<HashMap<CacheKey, Arc<Propagator>>>,
}

impl Simulator {
    pub fn new(model: DeviceModel, config: SimulationConfig) -> Result<Self> {
        if model.space.levels != config.levels_per_mode {
            return Err(Error::config(format!(
                "device model has {} levels per mode, configuration asks for {}",
                model.space.levels, config.levels_per_mode
            )));
        }
        let rates = config.decay_rates(model.space.modes)?;
        if let Drive::Weights(w) = &config.drive {
            if w.len() != model.space.modes || w.iter().any(|x| !x.is_finite()) {
                return Err(Error::config("drive weights need one finite entry per mode"));
            }
        }
        if matches!(config.drive, Drive::CavityWeighted) && model.coupling_weights.is_none() {
            return Err(Error::config("cavity-weighted drive needs device coupling weights"));
        }
        Ok(Simulator { energies: model.angular_energies(), model, config, rates, cache: Mutex::new(HashMap::new()) })
    }

    pub fn dim(&self) -> usize {
        self.model.space.dim()
    }

    fn weights(&self, segment: &PulseSegment) -> Result<Vec<f64>> {
        let m = self.model.space.modes;
        Ok(match &self.config.drive {
            Drive::Ideal => {
                let mut w = vec![0.0; m];
                if segment.amplitude != 0.0 {
                    let t = segment
                        .target_mode
                        .filter(|&t| t < m)
                        .ok_or_else(|| Error::config("ideal drive needs a valid target mode on every pulse"))?;
                    w[t] = 1.0;
                }
                w
            }
            Drive::CavityWeighted => self.model.coupling_weights.clone().expect("checked at construction"),
            Drive::Weights(w) => w.clone(),
        })
    }

    /// Weight of the addressed mode, which sets the pulse amplitude.
    pub fn target_weight(&self, mode: usize) -> Result<f64> {
        let w = match &self.config.drive {
            Drive::Ideal => 1.0,
            Drive::CavityWeighted => self.model.coupling_weights.as_ref().expect("checked")[mode],
            Drive::Weights(w) => w[mode],
        };
        if w == 0.0 {
            return Err(Error::config(format!("mode {mode} has zero drive weight and cannot be addressed")));
        }
        Ok(w)
    }

    /// Transition frequency of a native gate in GHz.
    pub fn transition_ghz(&self, gate: &NativeGate) -> f64 {
        let n = self.model.space.modes;
        let lo = gate.lower(n).occupations(n);
        let up = gate.upper(n).occupations(n);
        self.model.energy(&up) - self.model.energy(&lo)
    }

    /// Square pulse for a native gate: a `pi` rotation lasts `pi_length_ns`
    /// and other angles scale at the same amplitude. The played phase
    /// includes the frame offset.
    pub fn pulse_for(
        &self,
        gate: &NativeGate,
        frame: &FrameTracker,
        pi_length_ns: f64,
    ) -> Result<Option<PulseSegment>> {
        if gate.theta == 0.0 {
            return Ok(None);
        }
        let w = self.target_weight(gate.target)?;
        let phi = gate.phi + frame.offset(gate);
        Ok(Some(PulseSegment {
            carrier_ghz: self.transition_ghz(gate),
            amplitude: PI / (2.0 * pi_length_ns * w),
            // CCR(phi, theta) is generated by eps (a e^{i phi_d} + h.c.) with
            // phi_d = -phi - pi/2.
            phase_rad: -phi - FRAC_PI_2,
            duration_ns: pi_length_ns * gate.theta / PI,
            target_mode: Some(gate.target),
        }))
    }

    /// Plays a compiled sequence from the state's current frame; parallel
    /// groups are played as simultaneous tones.
    pub fn play(&self, state: &mut SimState, seq: &GateSequence, pi_length_ns: f64, decay: bool) -> Result<()> {
        for op in &seq.ops {
            match op {
                Op::Pulse { gate } => self.play_gate(state, gate, pi_length_ns, decay)?,
                Op::Parallel { gates } => {
                    let mut tones = Vec::with_capacity(gates.len());
                    for g in gates {
                        tones.extend(self.pulse_for(g, &state.frame, pi_length_ns)?);
                    }
                    self.evolve_tones(state, &tones, decay)?;
                }
                Op::Frame { phases } => state.frame.apply(phases),
            }
        }
        Ok(())
    }

    pub fn play_gate(&self, state: &mut SimState, gate: &NativeGate, pi_length_ns: f64, decay: bool) -> Result<()> {
        if let Some(seg) = self.pulse_for(gate, &state.frame, pi_length_ns)? {
            self.evolve_segment(state, &seg, decay)?;
        }
        Ok(())
    }

    pub fn evolve(&self, state: &mut SimState, schedule: &[PulseSegment], decay: bool) -> Result<()> {
        for seg in schedule {
            self.evolve_segment(state, seg, decay)?;
        }
        Ok(())
    }

    pub fn evolve_segment(&self, state: &mut SimState, segment: &PulseSegment, decay: bool) -> Result<()> {
        segment.check()?;
        let decay = decay && self.rates.iter().any(|&g| g > 0.0);
        let (t0, t1) = (state.time_ns, state.time_ns + segment.duration_ns);
        if segment.amplitude == 0.0 && !decay {
            state.time_ns = t1;
            return Ok(());
        }
        let mut seg = *segment;
        if seg.amplitude == 0.0 {
            // Idle: any reference frame works; pick one near the modes.
            seg.carrier_ghz = self.reference_carrier();
        }
        let propagator = self.propagator(&seg, decay)?;
        match &*propagator {
            Propagator::Blocks(blocks) => self.apply_blocks(state, &seg, blocks, t0, t1),
            Propagator::Rk4 => self.rk4(state, &seg, decay)?,
        }
        state.time_ns = t1;
        Ok(())
    }

    fn reference_carrier(&self) -> f64 {
        let m = self.model.space.modes;
        let singles: Vec<f64> = (0..m)
            .map(|mu| {
                let mut occ = vec![0u8; m];
                occ[mu] = 1;
                self.model.energy(&occ) - self.model.energy(&vec![0; m])
            })
            .collect();
        singles.iter().sum::<f64>() / m as f64
    }

    /// Diagonal of `H0 - w_d N` in rad/ns.
    fn shifted_diagonal(&self, carrier_ghz: f64) -> Vec<f64> {
        let wd = units::angular(carrier_ghz);
        (0..self.dim())
            .map(|i| {
                let n: u32 = self.model.space.occupations(i).iter().map(|&k| k as u32).sum();
                self.energies[i] - wd * n as f64
            })
            .collect()
    }

    fn apply_blocks(&self, state: &mut SimState, seg: &PulseSegment, blocks: &[Block], t0: f64, t1: f64) {
        let d = self.dim();
        let diag = self.shifted_diagonal(seg.carrier_ghz);
        let into_frame = |t: f64, sign: f64| -> Vec<Complex64> {
            diag.iter().map(|&e| Complex64::from_polar(1.0, -sign * e * t)).collect()
        };
        // rho_R = e^{-i D t} rho_I e^{i D t} with D = H0 - w_d N.
        let u0 = into_frame(t0, 1.0);
        let mut v: Vec<Complex64> =
            (0..d * d).map(|k| state.rho.matrix[(k / d, k % d)] * u0[k / d] * u0[k % d].conj()).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); d * d];
        for b in blocks {
            let x = nalgebra::DVector::from_iterator(b.indices.len(), b.indices.iter().map(|&k| v[k]));
            let y = &b.propagator * x;
            for (&k, &val) in b.indices.iter().zip(y.iter()) {
                out[k] = val;
            }
        }
        std::mem::swap(&mut v, &mut out);
        let u1 = into_frame(t1, -1.0);
        for k in 0..d * d {
            let (m, n) = (k / d, k % d);
            state.rho.matrix[(m, n)] = v[k] * u1[m] * u1[n].conj();
        }
    }

    fn propagator(&self, seg: &PulseSegment, decay: bool) -> Result<Arc<Propagator>> {
        let key: CacheKey = (
            seg.carrier_ghz.to_bits(),
            seg.amplitude.to_bits(),
            seg.phase_rad.rem_euclid(2.0 * PI).to_bits(),
            seg.duration_ns.to_bits(),
            if matches!(self.config.drive, Drive::Ideal) { seg.target_mode } else { None },
            decay,
        );
        if let Some(p) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(p.clone());
        }
        let p = Arc::new(self.build_propagator(seg, decay)?);
        self.cache.lock().expect("cache lock").insert(key, p.clone());
        Ok(p)
    }

    /// Sparse columns of `H'`: `(row, value)` for each column.
    fn hamiltonian_columns(&self, seg: &PulseSegment) -> Result<Vec<Vec<(usize, Complex64)>>> {
        let space = &self.model.space;
        let d = self.dim();
        let diag = self.shifted_diagonal(seg.carrier_ghz);
        let weights = self.weights(seg)?;
        let mut cols: Vec<Vec<(usize, Complex64)>> = (0..d).map(|i| vec![(i, Complex64::new(diag[i], 0.0))]).collect();
        let e = Complex64::from_polar(seg.amplitude, seg.phase_rad);
        for i in 0..d {
            let occ = space.occupations(i);
            for (mu, &w) in weights.iter().enumerate() {
                if w == 0.0 || occ[mu] == 0 {
                    continue;
                }
                let mut lower = occ.clone();
                lower[mu] -= 1;
                let j = space.index(&lower);
                let amp = w * (occ[mu] as f64).sqrt();
                // <j| a e^{i phi} |i> and <i| a^dagger e^{-i phi} |j>.
                cols[i].push((j, e * amp));
                cols[j].push((i, e.conj() * amp));
            }
        }
        Ok(cols)
    }

    fn rabi_guard(&self, seg: &PulseSegment, weights: &[f64]) -> f64 {
        let wmax = weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let top = ((self.model.space.levels - 1) as f64).sqrt();
        2.0 * seg.amplitude.abs() * wmax * top
    }

    fn build_propagator(&self, seg: &PulseSegment, decay: bool) -> Result<Propagator> {
        let d = self.dim();
        let (max_block, step) = match self.config.integrator {
            Integrator::Exact => (usize::MAX, None),
            Integrator::Rk4 { step_ns } => (0, Some(step_ns)),
            Integrator::Auto { max_block, step_ns } => (max_block, Some(step_ns)),
        };
        if let Some(step) = step {
            let weights = self.weights(seg)?;
            let rabi = self.rabi_guard(seg, &weights);
            if rabi > 0.0 && step > 0.5 * (2.0 * PI / rabi) {
                return Err(Error::config(format!(
                    "integrator step {step} ns exceeds half the shortest Rabi period {:.3} ns",
                    PI / rabi
                )));
            }
        }
        let h = self.hamiltonian_columns(seg)?;
        let rates = if decay { self.rates.clone() } else { vec![0.0; self.rates.len()] };
        let space = &self.model.space;
        let occs: Vec<Vec<u8>> = (0..d).map(|i| space.occupations(i)).collect();
        // Column of the generator for the basis operator |m><n|.
        let column = |m: usize, n: usize| -> Vec<(usize, Complex64)> {
            let mut out = Vec::new();
            let i = Complex64::new(0.0, 1.0);
            for &(k, hkm) in &h[m] {
                out.push((k * d + n, -i * hkm));
            }
            for &(l, hln) in &h[n] {
                out.push((m * d + l, i * hln.conj()));
            }
            for (mu, &g) in rates.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let (a, b) = (occs[m][mu] as f64, occs[n][mu] as f64);
                if a > 0.0 && b > 0.0 {
                    let mut lm = occs[m].clone();
                    let mut ln = occs[n].clone();
                    lm[mu] -= 1;
                    ln[mu] -= 1;
                    out.push((space.index(&lm) * d + space.index(&ln), Complex64::new(g * (a * b).sqrt(), 0.0)));
                }
                out.push((m * d + n, Complex64::new(-0.5 * g * (a + b), 0.0)));
            }
            out
        };
        let mut parent: Vec<usize> = (0..d * d).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut columns = Vec::with_capacity(d * d);
        for k in 0..d * d {
            let col = column(k / d, k % d);
            for &(r, v) in &col {
                if v != Complex64::new(0.0, 0.0) {
                    let (a, b) = (find(&mut parent, k), find(&mut parent, r));
                    if a != b {
                        parent[a] = b;
                    }
                }
            }
            columns.push(col);
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for k in 0..d * d {
            let root = find(&mut parent, k);
            groups.entry(root).or_default().push(k);
        }
        if groups.values().any(|g| g.len() > max_block) {
            return Ok(Propagator::Rk4);
        }
        let mut blocks = Vec::with_capacity(groups.len());
        let mut local = vec![usize::MAX; d * d];
        for (_, indices) in groups {
            for (pos, &k) in indices.iter().enumerate() {
                local[k] = pos;
            }
            let size = indices.len();
            let mut l = DMatrix::<Complex64>::zeros(size, size);
            for (c, &k) in indices.iter().enumerate() {
                for &(r, v) in &columns[k] {
                    l[(local[r], c)] += v * seg.duration_ns;
                }
            }
            blocks.push(Block { indices, propagator: l.exp() });
        }
        Ok(Propagator::Blocks(blocks))
    }

    /// Integration step for segments without an exact propagator.
    fn step_ns(&self) -> f64 {
        match self.config.integrator {
            Integrator::Rk4 { step_ns } | Integrator::Auto { step_ns, .. } => step_ns,
            Integrator::Exact => DEFAULT_STEP_NS,
        }
    }

    fn rk4(&self, state: &mut SimState, seg: &PulseSegment, decay: bool) -> Result<()> {
        self.rk4_tones(state, std::slice::from_ref(seg), seg.duration_ns, decay)
    }

    /// Several simultaneous tones starting together; tone `k` stops after
    /// its own duration.
    pub fn evolve_tones(&self, state: &mut SimState, tones: &[PulseSegment], decay: bool) -> Result<()> {
        match tones {
            [] => Ok(()),
            [one] => self.evolve_segment(state, one, decay),
            _ => {
                let mut duration: f64 = 0.0;
                for t in tones {
                    t.check()?;
                    duration = duration.max(t.duration_ns);
                    let rabi = self.rabi_guard(t, &self.weights(t)?);
                    if rabi > 0.0 && self.step_ns() > PI / rabi {
                        return Err(Error::config(format!(
                            "integrator step {} ns exceeds half the shortest Rabi period {:.3} ns",
                            self.step_ns(),
                            PI / rabi
                        )));
                    }
                }
                let decay = decay && self.rates.iter().any(|&g| g > 0.0);
                self.rk4_tones(state, tones, duration, decay)?;
                state.time_ns += duration;
                Ok(())
            }
        }
    }

    /// RK4 on `rho_I` directly; drive and jump operators carry the phases
    /// `e^{i (E_k - E_m) t}` of the interaction picture. Leaves `time_ns`
    /// unchanged.
    fn rk4_tones(&self, state: &mut SimState, tones: &[PulseSegment], duration: f64, decay: bool) -> Result<()> {
        let d = self.dim();
        let space = &self.model.space;
        let e = &self.energies;
        let rates: Vec<f64> = if decay { self.rates.clone() } else { vec![0.0; self.rates.len()] };
        // (upper, lower, mode, sqrt(n)) for every lowering matrix element.
        let mut lowering = Vec::new();
        for i in 0..d {
            let occ = space.occupations(i);
            for mu in 0..space.modes {
                if occ[mu] > 0 {
                    let mut lo = occ.clone();
                    lo[mu] -= 1;
                    lowering.push((i, space.index(&lo), mu, (occ[mu] as f64).sqrt()));
                }
            }
        }
        // Drive entries <lo| V_I(t) |up> = c e^{i (w t + phase)} while the tone is on.
        let mut entries: Vec<Oscillating> = Vec::new();
        for tone in tones {
            let weights = self.weights(tone)?;
            let wd = units::angular(tone.carrier_ghz);
            for &(up, lo, mu, s) in &lowering {
                if weights[mu] != 0.0 && tone.amplitude != 0.0 {
                    entries.push(Oscillating::new(
                        [lo, up, 0, 0],
                        tone.amplitude * weights[mu] * s,
                        e[lo] - e[up] + wd,
                        tone.phase_rad,
                        tone.duration_ns,
                    ));
                }
            }
        }
        // Jump terms rho[l1, l2] += g e^{i w t} rho[u1, u2] per mode.
        let mut jumps: Vec<Oscillating> = Vec::new();
        for (mu, &g) in rates.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let own: Vec<_> = lowering.iter().filter(|l| l.2 == mu).collect();
            for a in &own {
                for b in &own {
                    let w = (e[a.1] - e[a.0]) - (e[b.1] - e[b.0]);
                    jumps.push(Oscillating::new([a.1, b.1, a.0, b.0], g * a.3 * b.3, w, 0.0, f64::INFINITY));
                }
            }
        }
        // Column-major storage: element (r, c) at c d + r.
        let damping: Vec<f64> = (0..d * d)
            .map(|k| {
                let (r, c) = (space.occupations(k % d), space.occupations(k / d));
                -0.5 * rates.iter().enumerate().map(|(mu, g)| g * (r[mu] as f64 + c[mu] as f64)).sum::<f64>()
            })
            .collect();
        let steps = (duration / self.step_ns()).ceil().max(1.0) as usize;
        let dt = duration / steps as f64;
        let t0 = state.time_ns;
        for o in entries.iter_mut().chain(jumps.iter_mut()) {
            o.start(t0, dt / 2.0);
        }
        let zero = Complex64::new(0.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        // `stage` 0, 1, 2 selects the phasor at t, t + dt/2, t + dt.
        let rhs = |elapsed: f64,
                   stage: usize,
                   rho: &[Complex64],
                   out: &mut [Complex64],
                   entries: &[Oscillating],
                   jumps: &[Oscillating]| {
            out.fill(zero);
            for en in entries {
                if elapsed > en.until + 1e-9 {
                    continue;
                }
                let v = en.at(stage);
                let (iv, ivc) = (i * v, i * v.conj());
                let [lo, up, _, _] = en.index;
                for col in 0..d {
                    let base = col * d;
                    let (a, b) = (rho[base + up], rho[base + lo]);
                    out[base + lo] -= iv * a;
                    out[base + up] -= ivc * b;
                }
                let (clo, cup) = (lo * d, up * d);
                for row in 0..d {
                    let (a, b) = (rho[clo + row], rho[cup + row]);
                    out[cup + row] += a * iv;
                    out[clo + row] += b * ivc;
                }
            }
            for j in jumps {
                let [l1, l2, u1, u2] = j.index;
                out[l2 * d + l1] += j.at(stage) * rho[u2 * d + u1];
            }
            if decay {
                for ((o, r), &g) in out.iter_mut().zip(rho).zip(&damping) {
                    *o += r * g;
                }
            }
        };
        let mut rho: Vec<Complex64> = state.rho.matrix.as_slice().to_vec();
        let n = d * d;
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
            (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
        let axpy = |out: &mut [Complex64], x: &[Complex64], k: &[Complex64], h: f64| {
            for ((o, a), b) in out.iter_mut().zip(x).zip(k) {
                *o = a + b * h;
            }
        };
        for step in 0..steps {
            let el = step as f64 * dt;
            rhs(el, 0, &rho, &mut k1, &entries, &jumps);
            axpy(&mut tmp, &rho, &k1, dt / 2.0);
            rhs(el + dt / 2.0, 1, &tmp, &mut k2, &entries, &jumps);
            axpy(&mut tmp, &rho, &k2, dt / 2.0);
            rhs(el + dt / 2.0, 1, &tmp, &mut k3, &entries, &jumps);
            axpy(&mut tmp, &rho, &k3, dt);
            rhs(el + dt, 2, &tmp, &mut k4, &entries, &jumps);
            for idx in 0..n {
                rho[idx] += (k1[idx] + (k2[idx] + k3[idx]) * 2.0 + k4[idx]) * (dt / 6.0);
            }
            for o in entries.iter_mut().chain(jumps.iter_mut()) {
                o.advance(step + 1);
            }
        }
        let rho = DMatrix::from_vec(d, d, rho);
        state.rho.matrix = rho;
        Ok(())
    }
}
