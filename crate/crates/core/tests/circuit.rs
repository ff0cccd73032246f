mod support;

use multimon::circuit::{analyze_modes, build_matrices, normal_modes, solve_dc_phases, symmetric_ring_modes};
use multimon::error::Error;
use multimon::netlist::Netlist;
use multimon::presets::{preset, trimon};
use multimon::units;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use std::f64::consts::PI;
use support::rings::ring_projector_distance;

#[test]
fn ring_modes_match_standing_waves() {
    for n in 3..=7 {
        let d = ring_projector_distance(n).unwrap();
        assert!(d < 1e-8, "N = {n}: projector distance {d:e}");
    }
}

#[test]
fn analytic_ring_modes_are_orthonormal_and_chargeless() {
    for n in 3..=8 {
        let m = symmetric_ring_modes(n).unwrap();
        let gram = m.transpose() * &m;
        assert!((gram - DMatrix::identity(n - 1, n - 1)).norm() < 1e-12);
        for mu in 0..n - 1 {
            assert!(m.column(mu).sum().abs() < 1e-12);
        }
    }
    assert!(matches!(symmetric_ring_modes(2), Err(Error::Domain(_))));
}

#[test]
fn four_node_ring_modes_are_dipoles_and_quadrupole() {
    let m = symmetric_ring_modes(4).unwrap();
    let expect = [[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0], [1.0, -1.0, 1.0, -1.0]];
    for (mu, e) in expect.iter().enumerate() {
        let v = DVector::from_row_slice(e).normalize();
        assert!((m.column(mu).dot(&v).abs() - 1.0).abs() < 1e-12, "mode {mu}");
    }
}

#[test]
fn symmetric_trimon_modes_follow_ring_vectors() {
    let (_, modes) = analyze_modes(&preset("trimon-symmetric").unwrap()).unwrap();
    let labels = modes.ring_labels().unwrap();
    let expect = [[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, -1.0], [1.0, -1.0, 1.0, -1.0]];
    for (k, e) in expect.iter().enumerate() {
        // The uniform component is set by the tiny ground capacitances and
        // carries no junction phase.
        let v = modes.mode(labels[k]);
        let v = v.add_scalar(-v.mean()).normalize();
        let overlap = v.dot(&DVector::from_row_slice(e).normalize()).abs();
        assert!(overlap > 1.0 - 1e-6, "mode {k}: overlap {overlap}");
    }
}

#[test]
fn symmetric_trimon_zero_flux_frequencies() {
    let (_, modes) = analyze_modes(&preset("trimon-symmetric").unwrap()).unwrap();
    let f: Vec<f64> = modes.ring_labels().unwrap().iter().map(|&k| modes.frequencies_ghz[k]).collect();
    // Linear frequencies sit above the quoted omega - J values by J (~0.07 GHz).
    for (got, want) in f.iter().zip([5.338, 4.778, 6.156]) {
        assert!(*got > want && *got < want * 1.03, "{got} vs {want}");
    }
}

#[test]
fn inductive_matrix_matches_hand_stamp() {
    let m = build_matrices(&preset("trimon-symmetric").unwrap()).unwrap();
    for i in 0..4 {
        assert!((m.el_ghz[(i, i)] - 18.0).abs() < 1e-12);
        assert!((m.el_ghz[(i, (i + 1) % 4)] + 9.0).abs() < 1e-12);
        assert!(m.el_ghz[(i, (i + 2) % 4)].abs() < 1e-12);
        assert!(m.el_ghz.row(i).sum().abs() < 1e-12);
    }
    assert!((m.c_ff[(0, 2)] + 12.0).abs() < 1e-12);
    assert!((m.c_ff[(1, 3)] + 24.0).abs() < 1e-12);
    assert!((m.c_ff[(0, 0)] - (36.0 * 2.0 + 12.0 + 0.01)).abs() < 1e-12);
}

#[test]
fn flux_scales_equal_junctions_by_cosine() {
    let net = preset("trimon-symmetric").unwrap().with_flux(0.2);
    let m = build_matrices(&net).unwrap();
    let scale = (2.0 * PI * 0.2 / 4.0).cos();
    assert!((m.el_ghz[(0, 1)] + 9.0 * scale).abs() < 1e-10);
    assert!((m.el_ghz[(0, 0)] - 18.0 * scale).abs() < 1e-10);
}

#[test]
fn dc_phases_zero_and_symmetric_split() {
    let net = preset("trimon-symmetric").unwrap();
    assert!(solve_dc_phases(&net).unwrap().junction_phases().iter().all(|&p| p == 0.0));
    let p = solve_dc_phases(&net.with_flux(0.25)).unwrap().junction_phases();
    for &x in &p {
        assert!((x.abs() - PI / 8.0).abs() < 1e-12, "{p:?}");
    }
}

/// Shared loop current found by bisection, independent of the solver.
fn bisect_current(ej: &[f64], flux: f64) -> f64 {
    let target = 2.0 * PI * flux;
    let total = |i: f64| ej.iter().map(|e| (i / e).asin()).sum::<f64>();
    let (mut lo, mut hi) = (0.0, ej.iter().copied().fold(f64::INFINITY, f64::min));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < target {
            lo = mid
        } else {
            hi = mid
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn dc_phases_match_bisection_on_asymmetric_ring() {
    let ej = [8.794, 8.712, 8.042, 7.143];
    let net = trimon(ej, [34.0; 4], 11.2, 19.1).with_flux(0.1);
    let dc = solve_dc_phases(&net).unwrap();
    let phases = dc.junction_phases();
    let sum: f64 = phases.iter().sum();
    assert!((sum.abs() - 2.0 * PI * 0.1).abs() < 1e-12, "loop sum {sum}");
    let currents: Vec<f64> = ej.iter().zip(&phases).map(|(e, p)| e * p.sin()).collect();
    for c in &currents {
        assert!((c - currents[0]).abs() < 1e-12, "{currents:?}");
    }
    let reference = bisect_current(&ej, 0.1);
    assert!((currents[0].abs() - reference).abs() < 1e-10, "{} vs {reference}", currents[0]);
}

#[test]
fn flux_errors() {
    let net = preset("trimon-symmetric").unwrap();
    // Four equal junctions stop supporting a minimum with cos(delta) > 0 past one flux quantum.
    assert!(matches!(solve_dc_phases(&net.with_flux(1.2)), Err(Error::FluxTooLarge(_))));
    let chain = preset("linear-chain").unwrap().with_flux(0.1);
    assert!(matches!(solve_dc_phases(&chain), Err(Error::Topology(_))));
}

#[test]
fn singular_capacitance_is_rejected() {
    let mut net = preset("trimon-symmetric").unwrap();
    net.ground_caps_ff[2] = 0.0;
    let err = net.validate().unwrap_err();
    assert!(err.to_string().contains("node 3"), "{err}");
}

fn generalized_residual(net: &Netlist) -> (f64, f64) {
    let (m, modes) = analyze_modes(net).unwrap();
    let el = m.el_ghz.map(units::angular);
    let c = &modes.capacitance;
    let mut residual: f64 = 0.0;
    for mu in 0..modes.mode_count() {
        let v = modes.mode(mu);
        let w = units::angular(modes.frequencies_ghz[mu]);
        let r = (&el * &v - c * &v * (w * w)).norm() / (v.norm() * w * w * c.norm());
        residual = residual.max(r);
    }
    let gram = modes.vectors.transpose() * c * &modes.vectors;
    let ortho = (gram - DMatrix::identity(modes.mode_count(), modes.mode_count())).amax();
    (residual, ortho)
}

#[test]
fn presets_diagonalize_both_matrices() {
    for name in ["trimon-symmetric", "trimon-design-table", "ring6", "open-ring", "linear-chain"] {
        let (residual, ortho) = generalized_residual(&preset(name).unwrap());
        assert!(residual < 1e-8, "{name}: residual {residual:e}");
        assert!(ortho < 1e-9, "{name}: orthonormality {ortho:e}");
    }
}

#[test]
fn connected_circuits_have_one_uniform_zero_mode() {
    for name in ["trimon-symmetric", "trimon-design-table", "ring6", "linear-chain", "open-ring"] {
        let (_, modes) = analyze_modes(&preset(name).unwrap()).unwrap();
        assert_eq!(modes.zero_modes.ncols(), 1, "{name}");
        let z = modes.zero_modes.column(0).normalize();
        let n = z.len() as f64;
        let uniform = DVector::from_element(z.len(), 1.0 / n.sqrt());
        assert!((z.dot(&uniform).abs() - 1.0).abs() < 1e-6, "{name}");
    }
}

#[test]
fn frequencies_are_sorted_and_positive() {
    let (_, modes) = analyze_modes(&preset("ring6").unwrap()).unwrap();
    assert_eq!(modes.mode_count(), 5);
    assert!(modes.frequencies_ghz.windows(2).all(|w| w[0] <= w[1]));
    assert!(modes.frequencies_ghz.iter().all(|&f| f > 0.0));
}

#[test]
fn negative_curvature_is_unstable() {
    let mut m = build_matrices(&preset("trimon-symmetric").unwrap()).unwrap();
    m.el_ghz[(0, 0)] -= 40.0;
    assert!(matches!(normal_modes(&m), Err(Error::Unstable(_))));
}

fn random_netlist() -> impl Strategy<Value = Netlist> {
    (
        prop::array::uniform4(6.0..12.0f64),
        prop::array::uniform4(20.0..50.0f64),
        5.0..30.0f64,
        5.0..30.0f64,
        prop::array::uniform4(0.01..0.05f64),
    )
        .prop_map(|(ej, c, c13, c24, g)| {
            let mut net = trimon(ej, c, c13, c24);
            net.ground_caps_ff = g.to_vec();
            net
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_rings_diagonalize(net in random_netlist()) {
        let (residual, ortho) = generalized_residual(&net);
        prop_assert!(residual < 1e-8);
        prop_assert!(ortho < 1e-9);
    }

    #[test]
    fn relabelling_nodes_keeps_frequencies(net in random_netlist(), perm in Just([3usize, 1, 4, 2])) {
        let map = |k: usize| perm[k - 1];
        let mut permuted = net.clone();
        for b in &mut permuted.branches {
            let (i, j) = (map(b.i), map(b.j));
            b.i = i.min(j);
            b.j = i.max(j);
        }
        for (k, &g) in net.ground_caps_ff.iter().enumerate() {
            permuted.ground_caps_ff[map(k + 1) - 1] = g;
        }
        let (_, a) = analyze_modes(&net).unwrap();
        let (_, b) = analyze_modes(&permuted).unwrap();
        for (x, y) in a.frequencies_ghz.iter().zip(&b.frequencies_ghz) {
            prop_assert!((x - y).abs() < 1e-10);
        }
        // Mode rows follow the node relabelling wherever modes are non-degenerate.
        let gap = a.frequencies_ghz.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        if gap > 1e-3 {
            for mu in 0..a.mode_count() {
                for node in 1..=4 {
                    let d = a.vectors[(node - 1, mu)].abs() - b.vectors[(map(node) - 1, mu)].abs();
                    prop_assert!(d.abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn dc_phases_conserve_current(ej in prop::array::uniform4(6.0..12.0f64), flux in -0.25..0.25f64) {
        let net = trimon(ej, [34.0; 4], 11.2, 19.1).with_flux(flux);
        let phases = solve_dc_phases(&net).unwrap().junction_phases();
        let sum: f64 = phases.iter().sum();
        prop_assert!((sum.abs() - 2.0 * PI * flux.abs()).abs() < 1e-12);
        let currents: Vec<f64> = ej.iter().zip(&phases).map(|(e, p)| e * p.sin()).collect();
        for c in &currents {
            prop_assert!((c - currents[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn netlist_json_round_trips(net in random_netlist()) {
        let back = Netlist::from_json(&net.to_json()).unwrap();
        prop_assert_eq!(back, net);
    }
}
