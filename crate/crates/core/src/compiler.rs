//! Native conditional rotations with virtual phase frames.
//!
//! Every pulse addresses one transition `|lower> <-> |upper>` of a target
//! qubit with all other qubits fixed. Virtual Z gates are kept as a
//! diagonal frame `F = diag(e^{i alpha_s})`; a pulse requested with phase
//! `phi` is played at `phi + alpha_lower - alpha_upper`, so the logical
//! operation of a sequence is `F P` with `P` the product of played pulses.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::error::{Error, Result};
use crate::kerr::{mode_letter, transition_label};

pub type CMatrix = DMatrix<Complex64>;

/// Basis state as bits, qubit 0 (A) most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct BasisState(pub usize);

impl BasisState {
    pub fn bit(self, qubit: usize, n: usize) -> u8 {
        (self.0 >> (n - 1 - qubit) & 1) as u8
    }

    pub fn flipped(self, qubit: usize, n: usize) -> BasisState {
        BasisState(self.0 ^ (1 << (n - 1 - qubit)))
    }

    pub fn occupations(self, n: usize) -> Vec<u8> {
        (0..n).map(|q| self.bit(q, n)).collect()
    }

    pub fn label(self, n: usize) -> String {
        self.occupations(n).iter().map(|b| char::from(b'0' + b)).collect()
    }

    pub fn parse(label: &str) -> Result<(BasisState, usize)> {
        if label.is_empty() || !label.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::config(format!("basis state {label:?} must be a string of 0/1")));
        }
        Ok((BasisState(usize::from_str_radix(label, 2).expect("binary digits")), label.len()))
    }
}

/// One conditional rotation. `phi` is the logical phase; the frame offset
/// is added at replay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NativeGate {
    pub target: usize,
    /// Bits of the other qubits in ascending qubit order.
    pub control_state: Vec<u8>,
    pub theta: f64,
    pub phi: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duration_hint_ns: Option<f64>,
}

impl NativeGate {
    /// `theta` is brought into `[0, 2 pi]` using the `4 pi` period and
    /// `R(4 pi - theta, phi + pi) = R(theta, phi)`.
    pub fn new(target: usize, control_state: Vec<u8>, theta: f64, phi: f64) -> Self {
        let t = theta.rem_euclid(2.0 * TAU);
        let (theta, phi) = if t > TAU { (2.0 * TAU - t, phi + PI) } else { (t, phi) };
        NativeGate { target, control_state, theta, phi, duration_hint_ns: None }
    }

    /// The lower level, with the target qubit in 0.
    pub fn lower(&self, n: usize) -> BasisState {
        let mut bits = 0usize;
        let mut controls = self.control_state.iter();
        for q in 0..n {
            bits <<= 1;
            if q != self.target {
                bits |= *controls.next().expect("control state covers the other qubits") as usize;
            }
        }
        BasisState(bits)
    }

    pub fn upper(&self, n: usize) -> BasisState {
        self.lower(n).flipped(self.target, n)
    }

    pub fn label(&self, n: usize) -> String {
        transition_label(self.target, &self.lower(n).occupations(n))
    }
}

/// One element of a compiled sequence.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Op {
    Pulse {
        gate: NativeGate,
    },
    /// Pulses on level-disjoint transitions, played simultaneously.
    Parallel {
        gates: Vec<NativeGate>,
    },
    /// Virtual phases `(state, angle)` multiplied onto basis states.
    Frame {
        phases: Vec<(BasisState, f64)>,
    },
}

/// Accumulated virtual phase of each basis state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameTracker {
    pub n_qubits: usize,
    pub basis_phases: Vec<f64>,
}

impl FrameTracker {
    pub fn new(n_qubits: usize) -> Self {
        FrameTracker { n_qubits, basis_phases: vec![0.0; 1 << n_qubits] }
    }

    pub fn apply(&mut self, phases: &[(BasisState, f64)]) {
        for &(s, a) in phases {
            self.basis_phases[s.0] = (self.basis_phases[s.0] + a).rem_euclid(TAU);
        }
    }

    /// Offset added to the drive phase of a pulse on this transition.
    pub fn offset(&self, gate: &NativeGate) -> f64 {
        let n = self.n_qubits;
        (self.basis_phases[gate.lower(n).0] - self.basis_phases[gate.upper(n).0]).rem_euclid(TAU)
    }

    /// Offsets of all `N 2^(N-1)` transitions keyed by label, in (-pi, pi].
    pub fn phase_offsets(&self) -> BTreeMap<String, f64> {
        all_transitions(self.n_qubits)
            .into_iter()
            .map(|g| {
                let mut o = self.offset(&g);
                if o > PI {
                    o -= TAU;
                }
                (g.label(self.n_qubits), o)
            })
            .collect()
    }

    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.basis_phases.len(),
            self.basis_phases.iter().map(|&a| Complex64::from_polar(1.0, a)),
        ))
    }
}

/// Every conditional transition, target-major with the control bits
/// counting up.
pub fn all_transitions(n: usize) -> Vec<NativeGate> {
    let mut out = Vec::new();
    for target in 0..n {
        for c in 0..(1usize << (n - 1)) {
            let bits = (0..n - 1).map(|k| (c >> (n - 2 - k) & 1) as u8).collect();
            out.push(NativeGate::new(target, bits, 0.0, 0.0));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateSequence {
    pub n_qubits: usize,
    pub ops: Vec<Op>,
    pub initial_frame: FrameTracker,
    /// Standard gates this sequence was compiled from.
    pub source: Vec<String>,
}

impl GateSequence {
    pub fn new(n_qubits: usize) -> Self {
        GateSequence { n_qubits, ops: Vec::new(), initial_frame: FrameTracker::new(n_qubits), source: Vec::new() }
    }

    pub fn extend(&mut self, other: GateSequence) {
        self.ops.extend(other.ops);
        self.source.extend(other.source);
    }

    pub fn gates(&self) -> impl Iterator<Item = &NativeGate> {
        self.ops.iter().flat_map(|op| match op {
            Op::Pulse { gate } => std::slice::from_ref(gate),
            Op::Parallel { gates } => gates.as_slice(),
            Op::Frame { .. } => &[],
        })
    }

    /// Pulses with nonzero rotation angle.
    pub fn pulse_count(&self) -> usize {
        self.gates().filter(|g| g.theta != 0.0).count()
    }

    /// Played pulses with resolved drive phases and the frame after each op.
    pub fn schedule(&self) -> Schedule {
        let mut frame = self.initial_frame.clone();
        let mut steps = Vec::new();
        for op in &self.ops {
            match op {
                Op::Pulse { gate } => steps.push(ScheduledStep::pulses(std::slice::from_ref(gate), &frame)),
                Op::Parallel { gates } => steps.push(ScheduledStep::pulses(gates, &frame)),
                Op::Frame { phases } => frame.apply(phases),
            }
        }
        Schedule { steps, final_offsets_rad: frame.phase_offsets(), final_frame: frame }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayedPulse {
    pub transition: String,
    pub target: usize,
    pub lower: BasisState,
    pub theta: f64,
    /// Logical phase plus frame offset.
    pub phi_played: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduledStep {
    pub pulses: Vec<PlayedPulse>,
}

impl ScheduledStep {
    fn pulses(gates: &[NativeGate], frame: &FrameTracker) -> Self {
        let n = frame.n_qubits;
        ScheduledStep {
            pulses: gates
                .iter()
                .map(|g| PlayedPulse {
                    transition: g.label(n),
                    target: g.target,
                    lower: g.lower(n),
                    theta: g.theta,
                    phi_played: (g.phi + frame.offset(g)).rem_euclid(TAU),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub steps: Vec<ScheduledStep>,
    pub final_frame: FrameTracker,
    pub final_offsets_rad: BTreeMap<String, f64>,
}

fn check_qubit(q: usize, n: usize) -> Result<()> {
    if q >= n {
        return Err(Error::config(format!("qubit index {q} out of range for {n} qubits")));
    }
    Ok(())
}

/// Rotation in the `{lower, upper}` subspace:
/// `[[cos, -e^{-i phi} sin], [e^{i phi} sin, cos]]` with half-angle `theta/2`.
pub fn native_matrix(n: usize, target: usize, lower: BasisState, theta: f64, phi: f64) -> CMatrix {
    let dim = 1 << n;
    let mut u = CMatrix::identity(dim, dim);
    let (lo, up) = (lower.0, lower.flipped(target, n).0);
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    u[(lo, lo)] = Complex64::new(c, 0.0);
    u[(up, up)] = Complex64::new(c, 0.0);
    u[(lo, up)] = -Complex64::from_polar(s, -phi);
    u[(up, lo)] = Complex64::from_polar(s, phi);
    u
}

/// Logical unitary `F_final P` of the sequence.
pub fn sequence_unitary(seq: &GateSequence) -> CMatrix {
    let n = seq.n_qubits;
    let dim = 1 << n;
    let schedule = seq.schedule();
    let mut u = CMatrix::identity(dim, dim);
    for step in &schedule.steps {
        for p in &step.pulses {
            u = native_matrix(n, p.target, p.lower, p.theta, p.phi_played) * u;
        }
    }
    let initial = seq.initial_frame.matrix().adjoint();
    schedule.final_frame.matrix() * u * initial
}

/// `(state, angle)` pairs for phases `e^{i theta}` on basis states.
fn frame_op(phases: Vec<(BasisState, f64)>) -> Op {
    Op::Frame { phases }
}

/// `pi` rotation at the transition of `target` with the given control
/// bits, followed by the `+pi/2` frame phase on both of its levels that
/// turns `-i X` into `X`.
pub fn ccnot_conditioned(n: usize, target: usize, control_state: Vec<u8>) -> Result<GateSequence> {
    check_qubit(target, n)?;
    if control_state.len() != n - 1 || control_state.iter().any(|&b| b > 1) {
        return Err(Error::config(format!("control state needs {} bits", n - 1)));
    }
    let gate = NativeGate::new(target, control_state, PI, -FRAC_PI_2);
    let (lo, up) = (gate.lower(n), gate.upper(n));
    let mut seq = GateSequence::new(n);
    seq.ops.push(Op::Pulse { gate });
    seq.ops.push(frame_op(vec![(lo, FRAC_PI_2), (up, FRAC_PI_2)]));
    Ok(seq)
}

/// CCNOT on `target` conditioned on every other qubit being 1.
pub fn ccnot(n: usize, target: usize) -> Result<GateSequence> {
    ccnot_conditioned(n, target, vec![1; n.saturating_sub(1)])
}

/// Phase `e^{i theta}` on one basis state, no pulses.
pub fn cctheta(n: usize, state: BasisState, theta: f64) -> Result<GateSequence> {
    if state.0 >= 1 << n {
        return Err(Error::config(format!("basis state {} out of range for {n} qubits", state.0)));
    }
    let mut seq = GateSequence::new(n);
    if theta.rem_euclid(TAU) != 0.0 {
        seq.ops.push(frame_op(vec![(state, theta)]));
    }
    Ok(seq)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum StandardGate {
    X {
        qubit: usize,
    },
    Z {
        qubit: usize,
    },
    R {
        qubit: usize,
        theta: f64,
        phi: f64,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    Cz {
        a: usize,
        b: usize,
    },
    Swap {
        a: usize,
        b: usize,
    },
    Fredkin {
        control: usize,
        a: usize,
        b: usize,
    },
    /// Flip of `target` conditioned on every other qubit being 1.
    Ccnot {
        target: usize,
    },
    /// Flip of `target` conditioned on the given bits of the other qubits.
    CcnotConditioned {
        target: usize,
        control_state: Vec<u8>,
    },
    Ccz {
        state: usize,
    },
    Cctheta {
        state: usize,
        theta: f64,
    },
}

impl StandardGate {
    pub fn name(&self, n: usize) -> String {
        let q = |i: usize| mode_letter(i);
        match self {
            StandardGate::X { qubit } => format!("X {}", q(*qubit)),
            StandardGate::Z { qubit } => format!("Z {}", q(*qubit)),
            StandardGate::R { qubit, theta, phi } => format!("R {} {theta} {phi}", q(*qubit)),
            StandardGate::Cnot { control, target } => format!("CNOT {} {}", q(*control), q(*target)),
            StandardGate::Cz { a, b } => format!("CZ {} {}", q(*a), q(*b)),
            StandardGate::Swap { a, b } => format!("SWAP {} {}", q(*a), q(*b)),
            StandardGate::Fredkin { control, a, b } => format!("FREDKIN {} {} {}", q(*control), q(*a), q(*b)),
            StandardGate::Ccnot { target } => format!("CCNOT {}", q(*target)),
            StandardGate::CcnotConditioned { target, control_state } => {
                let lower = NativeGate::new(*target, control_state.clone(), 0.0, 0.0);
                format!("CCNOT {}", lower.label(n))
            }
            StandardGate::Ccz { state } => format!("CCZ {}", BasisState(*state).label(n)),
            StandardGate::Cctheta { state, theta } => format!("CCTHETA {} {theta}", BasisState(*state).label(n)),
        }
    }

    fn parse_qubit(token: &str, n: usize) -> Result<usize> {
        let q = match token.as_bytes() {
            [c] if c.is_ascii_uppercase() => (c - b'A') as usize,
            _ => token.parse::<usize>().map_err(|_| Error::config(format!("bad qubit {token:?}")))?,
        };
        check_qubit(q, n)?;
        Ok(q)
    }

    /// One program line: `CNOT A B`, `X C`, `CCZ 111`, `R A 1.5708 0.0`,
    /// `CCNOT A`, `CCNOT AB0C1`, `CCTHETA 011 0.5`, `SWAP A B`,
    /// `FREDKIN C A B`, `CZ A B`, `Z B`.
    pub fn parse(line: &str, n: usize) -> Result<StandardGate> {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let (name, args) = tokens.split_first().ok_or_else(|| Error::config("empty gate line"))?;
        let q = |i: usize| -> Result<usize> {
            Self::parse_qubit(args.get(i).ok_or_else(|| Error::config(format!("{name} needs more arguments")))?, n)
        };
        let num = |i: usize| -> Result<f64> {
            let t = args.get(i).ok_or_else(|| Error::config(format!("{name} needs more arguments")))?;
            t.parse::<f64>().map_err(|_| Error::config(format!("bad angle {t:?}")))
        };
        let state = |i: usize| -> Result<usize> {
            let t = args.get(i).ok_or_else(|| Error::config(format!("{name} needs a basis state")))?;
            let (s, len) = BasisState::parse(t)?;
            if len != n {
                return Err(Error::config(format!("basis state {t} needs {n} bits")));
            }
            Ok(s.0)
        };
        let expect = |count: usize| -> Result<()> {
            if args.len() != count {
                return Err(Error::config(format!("{name} takes {count} arguments, got {}", args.len())));
            }
            Ok(())
        };
        let gate = match name.to_ascii_uppercase().as_str() {
            "X" => {
                expect(1)?;
                StandardGate::X { qubit: q(0)? }
            }
            "Z" => {
                expect(1)?;
                StandardGate::Z { qubit: q(0)? }
            }
            "R" => {
                expect(3)?;
                StandardGate::R { qubit: q(0)?, theta: num(1)?, phi: num(2)? }
            }
            "CNOT" => {
                expect(2)?;
                StandardGate::Cnot { control: q(0)?, target: q(1)? }
            }
            "CZ" => {
                expect(2)?;
                StandardGate::Cz { a: q(0)?, b: q(1)? }
            }
            "SWAP" => {
                expect(2)?;
                StandardGate::Swap { a: q(0)?, b: q(1)? }
            }
            "FREDKIN" | "CSWAP" => {
                expect(3)?;
                StandardGate::Fredkin { control: q(0)?, a: q(1)?, b: q(2)? }
            }
            "CCNOT" | "TOFFOLI" => {
                expect(1)?;
                if args[0].len() == 1 {
                    StandardGate::Ccnot { target: q(0)? }
                } else {
                    let (target, control_state) = parse_transition_label(args[0], n)?;
                    StandardGate::CcnotConditioned { target, control_state }
                }
            }
            "CCZ" => {
                expect(1)?;
                StandardGate::Ccz { state: state(0)? }
            }
            "CCTHETA" => {
                expect(2)?;
                StandardGate::Cctheta { state: state(0)?, theta: num(1)? }
            }
            other => return Err(Error::config(format!("unsupported gate {other:?}"))),
        };
        gate.check(n)?;
        Ok(gate)
    }

    fn check(&self, n: usize) -> Result<()> {
        let distinct = |qs: &[usize]| -> Result<()> {
            for (i, a) in qs.iter().enumerate() {
                check_qubit(*a, n)?;
                if qs[i + 1..].contains(a) {
                    return Err(Error::config(format!("qubit {} is used twice", mode_letter(*a))));
                }
            }
            Ok(())
        };
        match self {
            StandardGate::X { qubit } | StandardGate::Z { qubit } | StandardGate::R { qubit, .. } => {
                distinct(&[*qubit])
            }
            StandardGate::Cnot { control, target } => distinct(&[*control, *target]),
            StandardGate::Cz { a, b } | StandardGate::Swap { a, b } => distinct(&[*a, *b]),
            StandardGate::Fredkin { control, a, b } => distinct(&[*control, *a, *b]),
            StandardGate::Ccnot { target } => distinct(&[*target]),
            StandardGate::CcnotConditioned { target, control_state } => {
                distinct(&[*target])?;
                if control_state.len() + 1 != n {
                    return Err(Error::config(format!("control state needs {} bits", n - 1)));
                }
                Ok(())
            }
            StandardGate::Ccz { state } | StandardGate::Cctheta { state, .. } => {
                if *state >= 1 << n {
                    return Err(Error::config("basis state out of range"));
                }
                Ok(())
            }
        }
    }
}

/// `"AB0C1"` into target 0 and control bits `[0, 1]`.
pub fn parse_transition_label(label: &str, n: usize) -> Result<(usize, Vec<u8>)> {
    let bad = || Error::config(format!("bad transition label {label:?}"));
    let bytes = label.as_bytes();
    if bytes.len() != 1 + 2 * (n - 1) {
        return Err(bad());
    }
    let target = StandardGate::parse_qubit(&label[..1], n)?;
    let mut bits = vec![None; n];
    for pair in bytes[1..].chunks(2) {
        let q = StandardGate::parse_qubit(std::str::from_utf8(&pair[..1]).map_err(|_| bad())?, n)?;
        let b = match pair[1] {
            b'0' => 0,
            b'1' => 1,
            _ => return Err(bad()),
        };
        if q == target || bits[q].is_some() {
            return Err(bad());
        }
        bits[q] = Some(b);
    }
    let control: Option<Vec<u8>> = (0..n).filter(|&q| q != target).map(|q| bits[q]).collect();
    Ok((target, control.ok_or_else(bad)?))
}

/// Control bit string for `target` given a full basis state.
fn controls_of(state: usize, target: usize, n: usize) -> Vec<u8> {
    (0..n).filter(|&q| q != target).map(|q| BasisState(state).bit(q, n)).collect()
}

/// Rotation of one qubit as `2^(N-1)` level-disjoint pulses.
fn single_qubit(n: usize, qubit: usize, theta: f64, phi: f64) -> GateSequence {
    let gates = (0..(1usize << n))
        .filter(|s| BasisState(*s).bit(qubit, n) == 0)
        .map(|s| NativeGate::new(qubit, controls_of(s, qubit, n), theta, phi));
    let mut seq = GateSequence::new(n);
    seq.ops.push(Op::Parallel { gates: gates.collect() });
    seq
}

/// Flip of `target` whenever `control` is 1, as CCNOTs over the remaining
/// qubits' states.
fn cnot(n: usize, control: usize, target: usize) -> Result<GateSequence> {
    let mut seq = GateSequence::new(n);
    for s in 0..(1usize << n) {
        let st = BasisState(s);
        if st.bit(target, n) == 0 && st.bit(control, n) == 1 {
            seq.extend(ccnot_conditioned(n, target, controls_of(s, target, n))?);
        }
    }
    Ok(seq)
}

/// Phase on every basis state where all `qubits` are 1.
fn phase_on_ones(n: usize, qubits: &[usize], theta: f64) -> Result<GateSequence> {
    let mut seq = GateSequence::new(n);
    for s in 0..(1usize << n) {
        if qubits.iter().all(|&q| BasisState(s).bit(q, n) == 1) {
            seq.extend(cctheta(n, BasisState(s), theta)?);
        }
    }
    Ok(seq)
}

pub fn compile_standard(gate: &StandardGate, n: usize) -> Result<GateSequence> {
    gate.check(n)?;
    let mut seq = match *gate {
        StandardGate::X { qubit } => single_qubit(n, qubit, PI, -FRAC_PI_2),
        StandardGate::R { qubit, theta, phi } => single_qubit(n, qubit, theta, phi),
        StandardGate::Z { qubit } => phase_on_ones(n, &[qubit], PI)?,
        StandardGate::Cz { a, b } => phase_on_ones(n, &[a, b], PI)?,
        StandardGate::Ccz { state } => cctheta(n, BasisState(state), PI)?,
        StandardGate::Cctheta { state, theta } => cctheta(n, BasisState(state), theta)?,
        StandardGate::Cnot { control, target } => cnot(n, control, target)?,
        StandardGate::Swap { a, b } => {
            let mut s = cnot(n, a, b)?;
            s.extend(cnot(n, b, a)?);
            s.extend(cnot(n, a, b)?);
            s
        }
        StandardGate::Fredkin { control, a, b } => {
            if n != 3 {
                return Err(Error::config("the Fredkin decomposition is defined for three qubits"));
            }
            // Swap of a and b inside the control = 1 sector, one CCNOT per CNOT.
            let cond = |target: usize, other: usize| {
                let mut bits = vec![0u8; n];
                bits[control] = 1;
                bits[other] = 1;
                ccnot_conditioned(n, target, (0..n).filter(|&q| q != target).map(|q| bits[q]).collect())
            };
            let mut s = cond(a, b)?;
            s.extend(cond(b, a)?);
            s.extend(cond(a, b)?);
            s
        }
        StandardGate::Ccnot { target } => ccnot(n, target)?,
        StandardGate::CcnotConditioned { target, ref control_state } => {
            ccnot_conditioned(n, target, control_state.clone())?
        }
    };
    seq.source = vec![gate.name(n)];
    check_level_disjoint(&seq)?;
    Ok(seq)
}

/// Parallel groups may not share an energy level.
pub fn check_level_disjoint(seq: &GateSequence) -> Result<()> {
    let n = seq.n_qubits;
    for op in &seq.ops {
        if let Op::Parallel { gates } = op {
            let mut used = vec![false; 1 << n];
            for g in gates {
                for s in [g.lower(n), g.upper(n)] {
                    if std::mem::replace(&mut used[s.0], true) {
                        return Err(Error::config(format!("parallel pulses share level |{}>", s.label(n))));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Compiles a program of one gate per line; `#` starts a comment.
pub fn compile_program(text: &str, n: usize) -> Result<GateSequence> {
    let mut seq = GateSequence::new(n);
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let gate = StandardGate::parse(line, n).map_err(|e| Error::Parse { line: k + 1, message: e.to_string() })?;
        seq.extend(compile_standard(&gate, n)?);
    }
    Ok(seq)
}

/// Ideal matrix of a standard gate.
pub fn ideal_unitary(gate: &StandardGate, n: usize) -> Result<CMatrix> {
    gate.check(n)?;
    let dim = 1usize << n;
    let one = Complex64::new(1.0, 0.0);
    let permutation = |f: &dyn Fn(BasisState) -> BasisState| {
        let mut u = CMatrix::zeros(dim, dim);
        for s in 0..dim {
            u[(f(BasisState(s)).0, s)] = one;
        }
        u
    };
    let diagonal = |f: &dyn Fn(BasisState) -> Complex64| {
        CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(dim, (0..dim).map(|s| f(BasisState(s)))))
    };
    let bit = |s: BasisState, q: usize| s.bit(q, n);
    Ok(match *gate {
        StandardGate::X { qubit } => permutation(&|s| s.flipped(qubit, n)),
        StandardGate::R { qubit, theta, phi } => {
            let mut u = CMatrix::identity(dim, dim);
            for s in (0..dim).map(BasisState).filter(|&s| bit(s, qubit) == 0) {
                u *= native_matrix(n, qubit, s, theta, phi);
            }
            u
        }
        StandardGate::Z { qubit } => diagonal(&|s| if bit(s, qubit) == 1 { -one } else { one }),
        StandardGate::Cz { a, b } => diagonal(&|s| if bit(s, a) & bit(s, b) == 1 { -one } else { one }),
        StandardGate::Ccz { state } => diagonal(&|s| if s.0 == state { -one } else { one }),
        StandardGate::Cctheta { state, theta } => {
            diagonal(&|s| if s.0 == state { Complex64::from_polar(1.0, theta) } else { one })
        }
        StandardGate::Cnot { control, target } => {
            permutation(&|s| if bit(s, control) == 1 { s.flipped(target, n) } else { s })
        }
        StandardGate::Swap { a, b } => {
            permutation(&|s| if bit(s, a) != bit(s, b) { s.flipped(a, n).flipped(b, n) } else { s })
        }
        StandardGate::Fredkin { control, a, b } => permutation(&|s| {
            if bit(s, control) == 1 && bit(s, a) != bit(s, b) {
                s.flipped(a, n).flipped(b, n)
            } else {
                s
            }
        }),
        StandardGate::Ccnot { target } => {
            permutation(&|s| if (0..n).all(|q| q == target || bit(s, q) == 1) { s.flipped(target, n) } else { s })
        }
        StandardGate::CcnotConditioned { target, ref control_state } => {
            permutation(&|s| if controls_of(s.0, target, n) == *control_state { s.flipped(target, n) } else { s })
        }
    })
}

/// Largest entrywise difference after the best global phase alignment.
pub fn phase_aligned_distance(u: &CMatrix, v: &CMatrix) -> f64 {
    let overlap: Complex64 = v.iter().zip(u.iter()).map(|(a, b)| a.conj() * b).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { Complex64::new(1.0, 0.0) };
    u.iter().zip(v.iter()).map(|(a, b)| (a - phase * b).norm()).fold(0.0, f64::max)
}

/// `max |U^dagger U - I|`.
pub fn unitarity_error(u: &CMatrix) -> f64 {
    let d = u.adjoint() * u - CMatrix::identity(u.nrows(), u.ncols());
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transition_labels_round_trip() {
        for g in all_transitions(3) {
            let (t, c) = parse_transition_label(&g.label(3), 3).unwrap();
            assert_eq!((t, c), (g.target, g.control_state.clone()));
        }
    }

    #[test]
    fn parallel_group_rejects_shared_level() {
        let mut seq = GateSequence::new(3);
        seq.ops.push(Op::Parallel {
            gates: vec![NativeGate::new(0, vec![0, 0], PI, 0.0), NativeGate::new(1, vec![0, 0], PI, 0.0)],
        });
        assert!(check_level_disjoint(&seq).is_err());
    }
}
