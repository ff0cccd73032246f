use multimon::compiler::{
    all_transitions, ccnot, ccnot_conditioned, cctheta, compile_program, compile_standard, ideal_unitary,
    native_matrix, parse_transition_label, phase_aligned_distance, sequence_unitary, unitarity_error, BasisState,
    CMatrix, FrameTracker, GateSequence, NativeGate, Op, StandardGate,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_2, PI};

const N: usize = 3;

fn frame_after(seq: &GateSequence) -> FrameTracker {
    seq.schedule().final_frame
}

fn assert_offsets(frame: &FrameTracker, expected: &[(&str, f64)]) {
    let offsets = frame.phase_offsets();
    for (label, angle) in offsets.iter() {
        let want = expected.iter().find(|(l, _)| l == label).map(|(_, a)| *a).unwrap_or(0.0);
        let d = (angle - want + PI).rem_euclid(2.0 * PI) - PI;
        assert!(d.abs() < 1e-12, "{label}: {angle} vs {want}");
    }
}

#[test]
fn ccnot_frames_follow_the_sign_rule() {
    let q = FRAC_PI_2;
    type Row<'a> = (&'a [u8], [(&'a str, f64); 4]);
    let rows: [Row; 4] = [
        (&[0, 0], [("BC0A0", q), ("BC0A1", q), ("CA0B0", q), ("CA1B0", q)]),
        (&[0, 1], [("BC1A0", q), ("BC1A1", q), ("CA0B0", -q), ("CA1B0", -q)]),
        (&[1, 0], [("BC0A0", -q), ("BC0A1", -q), ("CA0B1", q), ("CA1B1", q)]),
        (&[1, 1], [("BC1A0", -q), ("BC1A1", -q), ("CA0B1", -q), ("CA1B1", -q)]),
    ];
    for (controls, expected) in rows {
        let seq = ccnot_conditioned(N, 0, controls.to_vec()).unwrap();
        assert_eq!(seq.pulse_count(), 1);
        assert_offsets(&frame_after(&seq), &expected);
        let ideal =
            ideal_unitary(&StandardGate::CcnotConditioned { target: 0, control_state: controls.to_vec() }, N).unwrap();
        assert!(phase_aligned_distance(&sequence_unitary(&seq), &ideal) < 1e-12);
    }
}

#[test]
fn cctheta_frames_follow_the_table() {
    let theta = 0.37;
    for s in 0..8usize {
        let state = BasisState(s);
        let seq = cctheta(N, state, theta).unwrap();
        assert_eq!(seq.pulse_count(), 0);
        // Transitions leaving the state gain +theta when it is the lower level.
        let expected: Vec<(String, f64)> = (0..N)
            .map(|q| {
                let lower = if state.bit(q, N) == 0 { state } else { state.flipped(q, N) };
                let label = multimon::kerr::transition_label(q, &lower.occupations(N));
                (label, if state.bit(q, N) == 0 { theta } else { -theta })
            })
            .collect();
        let expected: Vec<(&str, f64)> = expected.iter().map(|(l, a)| (l.as_str(), *a)).collect();
        assert_offsets(&frame_after(&seq), &expected);
    }
    let ccz = cctheta(N, BasisState(7), PI).unwrap();
    assert_offsets(&frame_after(&ccz), &[("AB1C1", -PI), ("BC1A1", -PI), ("CA1B1", -PI)]);
    let row3 = cctheta(N, BasisState(0b010), theta).unwrap();
    assert_offsets(&frame_after(&row3), &[("AB1C0", theta), ("BC0A0", -theta), ("CA0B1", theta)]);
    assert!(cctheta(N, BasisState(3), 0.0).unwrap().ops.is_empty());
    assert!(cctheta(N, BasisState(8), 0.1).is_err());
}

#[test]
fn bare_pi_pulse_is_minus_i_ccnot() {
    let (target, controls) = parse_transition_label("CA1B1", N).unwrap();
    let gate = NativeGate::new(target, controls, PI, -FRAC_PI_2);
    let u = native_matrix(N, gate.target, gate.lower(N), gate.theta, gate.phi);
    let mut expected = CMatrix::identity(8, 8);
    let mi = Complex64::new(0.0, -1.0);
    expected[(6, 6)] = Complex64::new(0.0, 0.0);
    expected[(7, 7)] = Complex64::new(0.0, 0.0);
    expected[(6, 7)] = mi;
    expected[(7, 6)] = mi;
    assert!((u - expected).iter().all(|z| z.norm() < 1e-15));
}

#[test]
fn z_family_emits_no_pulses() {
    for line in ["Z A", "Z B", "Z C", "CZ A B", "CZ B C", "CZ C A", "CCZ 111", "CCZ 010", "CCTHETA 101 0.7"] {
        let seq = compile_program(line, N).unwrap();
        assert_eq!(seq.pulse_count(), 0, "{line}");
        assert!(seq.gates().all(|g| g.theta == 0.0), "{line}");
        let gate = StandardGate::parse(line, N).unwrap();
        assert!(phase_aligned_distance(&sequence_unitary(&seq), &ideal_unitary(&gate, N).unwrap()) < 1e-12);
    }
    let z = compile_program("Z A", N).unwrap();
    let frames = z.ops.iter().filter(|op| matches!(op, Op::Frame { .. })).count();
    assert_eq!(frames, 4);
    let cz = compile_program("CZ A B", N).unwrap();
    assert_eq!(cz.ops.iter().filter(|op| matches!(op, Op::Frame { .. })).count(), 2);
}

#[test]
fn cnot_b_to_a_uses_two_ccnots() {
    let seq = compile_program("CNOT B A", N).unwrap();
    let labels: Vec<String> = seq.gates().map(|g| g.label(N)).collect();
    assert_eq!(labels, ["AB1C0", "AB1C1"]);
    assert!(seq.gates().all(|g| (g.theta - PI).abs() < 1e-15));
}

#[test]
fn x_on_c_pulses_every_c_transition() {
    let seq = compile_program("X C", N).unwrap();
    let mut labels: Vec<String> = seq.gates().map(|g| g.label(N)).collect();
    labels.sort();
    assert_eq!(labels, ["CA0B0", "CA0B1", "CA1B0", "CA1B1"]);
    assert_eq!(seq.ops.len(), 1);
    assert!(matches!(seq.ops[0], Op::Parallel { .. }));
    assert_eq!(seq.schedule().steps.len(), 1);
}

#[test]
fn composite_gates_match_ideal() {
    for (line, pulses) in [("SWAP A B", 6), ("FREDKIN C A B", 3), ("CCNOT A", 1), ("CCNOT BC0A1", 1), ("X A", 4)] {
        let seq = compile_program(line, N).unwrap();
        assert_eq!(seq.pulse_count(), pulses, "{line}");
        let gate = StandardGate::parse(line, N).unwrap();
        let d = phase_aligned_distance(&sequence_unitary(&seq), &ideal_unitary(&gate, N).unwrap());
        assert!(d < 1e-12, "{line}: {d}");
    }
}

#[test]
fn ccnot_is_an_involution() {
    for target in 0..N {
        let mut seq = ccnot(N, target).unwrap();
        seq.extend(ccnot(N, target).unwrap());
        let d = phase_aligned_distance(&sequence_unitary(&seq), &CMatrix::identity(8, 8));
        assert!(d < 1e-12, "{target}: {d}");
    }
}

#[test]
fn empty_sequence_is_identity() {
    let seq = GateSequence::new(N);
    assert_eq!(sequence_unitary(&seq), CMatrix::identity(8, 8));
    assert_eq!(compile_program("# nothing\n\n", N).unwrap().ops.len(), 0);
}

#[test]
fn bad_programs_are_rejected() {
    assert!(compile_program("FOO A", N).is_err());
    assert!(compile_program("CNOT A A", N).is_err());
    assert!(compile_program("X D", N).is_err());
    assert!(compile_program("CCZ 11", N).is_err());
    let err = compile_program("X A\nR B 1.0", N).unwrap_err().to_string();
    assert!(err.contains('2'), "{err}");
}

#[test]
fn transition_inventory_has_n_two_to_n_minus_one_entries() {
    for n in 2..=5 {
        let all = all_transitions(n);
        assert_eq!(all.len(), n << (n - 1));
        let mut labels: Vec<String> = all.iter().map(|g| g.label(n)).collect();
        labels.sort();
        labels.dedup();
        assert_eq!(labels.len(), all.len());
    }
}

#[test]
fn four_qubit_ccnot_is_exact() {
    for target in 0..4 {
        let seq = ccnot(4, target).unwrap();
        let ideal = ideal_unitary(&StandardGate::Ccnot { target }, 4).unwrap();
        assert!(phase_aligned_distance(&sequence_unitary(&seq), &ideal) < 1e-12);
    }
}

fn random_gate(rng: &mut ChaCha8Rng) -> StandardGate {
    let q = |rng: &mut ChaCha8Rng| rng.random_range(0..N);
    let pair = |rng: &mut ChaCha8Rng| {
        let a = rng.random_range(0..N);
        (a, (a + rng.random_range(1..N)) % N)
    };
    match rng.random_range(0..11) {
        0 => StandardGate::X { qubit: q(rng) },
        1 => StandardGate::Z { qubit: q(rng) },
        2 => StandardGate::R { qubit: q(rng), theta: rng.random_range(-7.0..7.0), phi: rng.random_range(-7.0..7.0) },
        3 => {
            let (control, target) = pair(rng);
            StandardGate::Cnot { control, target }
        }
        4 => {
            let (a, b) = pair(rng);
            StandardGate::Cz { a, b }
        }
        5 => {
            let (a, b) = pair(rng);
            StandardGate::Swap { a, b }
        }
        6 => {
            let (a, b) = pair(rng);
            StandardGate::Fredkin { control: 3 - a - b, a, b }
        }
        7 => StandardGate::Ccnot { target: q(rng) },
        8 => StandardGate::CcnotConditioned {
            target: q(rng),
            control_state: vec![rng.random_range(0..2), rng.random_range(0..2)],
        },
        9 => StandardGate::Ccz { state: rng.random_range(0..8) },
        _ => StandardGate::Cctheta { state: rng.random_range(0..8), theta: rng.random_range(-4.0..4.0) },
    }
}

#[test]
fn random_programs_replay_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let len = rng.random_range(1..=12);
        let gates: Vec<StandardGate> = (0..len).map(|_| random_gate(&mut rng)).collect();
        let text: Vec<String> = gates.iter().map(|g| g.name(N)).collect();
        let seq = compile_program(&text.join("\n"), N).unwrap();
        let ideal = gates.iter().fold(CMatrix::identity(8, 8), |u, g| ideal_unitary(g, N).unwrap() * u);
        let u = sequence_unitary(&seq);
        assert!(unitarity_error(&u) < 1e-12);
        worst = worst.max(phase_aligned_distance(&u, &ideal));
    }
    assert!(worst < 1e-10, "{worst}");
}

proptest! {
    #[test]
    fn native_angles_are_normalized(theta in -30.0..30.0f64, phi in -10.0..10.0f64, target in 0..3usize) {
        let g = NativeGate::new(target, vec![0, 1], theta, phi);
        prop_assert!(g.theta >= 0.0 && g.theta <= 2.0 * PI);
        let a = native_matrix(N, target, g.lower(N), g.theta, g.phi);
        let b = native_matrix(N, target, g.lower(N), theta, phi);
        prop_assert!((a - b).iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn compiled_single_qubit_gates_are_level_disjoint(qubit in 0..3usize, theta in 0.0..6.0f64, phi in -3.0..3.0f64) {
        let seq = compile_standard(&StandardGate::R { qubit, theta, phi }, N).unwrap();
        prop_assert_eq!(seq.pulse_count(), 4);
        prop_assert!(multimon::compiler::check_level_disjoint(&seq).is_ok());
        prop_assert!(unitarity_error(&sequence_unitary(&seq)) < 1e-12);
    }
}
