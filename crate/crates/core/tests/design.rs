use multimon::design::{
    analyze_device, apply_asymmetry, optimize_design, AsymmetrySpec, DesignTarget, Knob, Mixing, OptimizerConfig,
};
use multimon::kerr::KerrOptions;
use multimon::presets::preset;
use proptest::prelude::*;

const TABLE_EJ: [f64; 4] = [8.794, 8.712, 8.042, 7.143];
const TABLE_F: [f64; 3] = [5.244, 4.773, 6.059];
const ETA_KNOBS: [Knob; 4] = [Knob::EjMean, Knob::EtaAb, Knob::EtaBc, Knob::EtaCa];

fn table_spec() -> AsymmetrySpec {
    AsymmetrySpec::from_netlist(&preset("trimon-design-table").unwrap()).unwrap()
}

#[test]
fn design_table_mixing_is_recovered() {
    let spec = table_spec();
    assert!((spec.ej_mean_ghz - 8.17275).abs() < 1e-9, "{}", spec.ej_mean_ghz);
    for (got, want) in spec.junction_energies().iter().zip(TABLE_EJ) {
        assert!((got - want).abs() < 1e-12);
    }
    assert!(spec.eta_prime.ab.abs() < 1e-15 && spec.eta_prime.bc.abs() < 1e-15 && spec.eta_prime.ca.abs() < 1e-15);
    assert_eq!(spec.diagonal_caps_ff, [11.2, 19.1]);
}

#[test]
fn zero_mixing_gives_symmetric_ring() {
    let net = apply_asymmetry(&AsymmetrySpec::symmetric(9.0, 34.0, 11.2, 19.1)).unwrap();
    let ring: Vec<_> = net.branches.iter().filter(|b| b.ej_ghz > 0.0).collect();
    assert_eq!(ring.len(), 4);
    for b in ring {
        assert_eq!(b.ej_ghz, 9.0);
        assert_eq!(b.c_ff, 34.0);
    }
}

#[test]
fn out_of_range_mixing_is_rejected() {
    let mut spec = AsymmetrySpec::symmetric(9.0, 34.0, 11.2, 19.1);
    spec.eta.bc = 1.0;
    assert!(apply_asymmetry(&spec).is_err());
    spec.eta = Mixing { ab: 0.6, bc: 0.6, ca: 0.0 };
    assert!(apply_asymmetry(&spec).is_err(), "junction 4 would be negative");
}

#[test]
fn eta_bc_leaves_mode_a_untouched_to_first_order() {
    // Mode A has no weight on the BC mixing pattern at linear order.
    let target = DesignTarget::default();
    let at = |bc: f64| {
        let mut spec = AsymmetrySpec::symmetric(8.2, 34.0, 11.2, 19.1);
        spec.eta.bc = bc;
        analyze_device(&apply_asymmetry(&spec).unwrap(), &target, KerrOptions::default()).unwrap()
    };
    let base = at(0.0);
    let moved = at(0.02);
    let df_a = (moved.frequencies_ghz[0] - base.frequencies_ghz[0]).abs();
    let df_b = (moved.frequencies_ghz[1] - base.frequencies_ghz[1]).abs();
    let df_c = (moved.frequencies_ghz[2] - base.frequencies_ghz[2]).abs();
    assert!(df_a < 0.1 * df_b.max(df_c), "A {df_a} B {df_b} C {df_c}");
    let da = (moved.anharmonicities_ghz[0] - base.anharmonicities_ghz[0]).abs();
    assert!(da < 0.2e-3, "{da}");
}

#[test]
fn design_table_passes_spacing() {
    let report =
        analyze_device(&preset("trimon-design-table").unwrap(), &DesignTarget::default(), KerrOptions::default())
            .unwrap();
    assert!(report.spacing.passes, "{:?}", report.spacing.violations);
    assert!(report.spacing.min_gap_mhz >= 35.0, "{}", report.spacing.min_gap_mhz);
    assert!(report.spacing.stability_ratio < 0.6);
    let lines = report.diagram.transitions.len() + report.diagram.leakage_transitions.len();
    assert_eq!(report.spacing.gaps.len(), lines * (lines - 1) / 2);
}

#[test]
fn degenerate_dipoles_are_flagged() {
    let spec = AsymmetrySpec::symmetric(8.5, 34.0, 15.0, 15.0);
    let report =
        analyze_device(&apply_asymmetry(&spec).unwrap(), &DesignTarget::default(), KerrOptions::default()).unwrap();
    assert!(!report.spacing.passes);
    assert!(report.spacing.min_gap_mhz < 1.0, "{}", report.spacing.min_gap_mhz);
}

#[test]
fn weak_junctions_fail_stability() {
    let mut spec = table_spec();
    spec.ej_mean_ghz *= 0.2;
    let target = DesignTarget { frequency_window_ghz: [0.0, 100.0], ..Default::default() };
    let report = analyze_device(&apply_asymmetry(&spec).unwrap(), &target, KerrOptions::default()).unwrap();
    assert!(report.spacing.stability_ratio > 0.6, "{}", report.spacing.stability_ratio);
    assert!(report.spacing.violations.iter().any(|v| v.contains("EJ_min")), "{:?}", report.spacing.violations);
}

#[test]
fn optimizer_stays_at_a_fixed_point() {
    let spec = table_spec();
    let report =
        analyze_device(&apply_asymmetry(&spec).unwrap(), &DesignTarget::default(), KerrOptions::default()).unwrap();
    let target = DesignTarget { target_frequencies_ghz: Some(report.frequencies_ghz.clone()), ..Default::default() };
    let result = optimize_design(&target, &spec, &ETA_KNOBS, &OptimizerConfig::default()).unwrap();
    assert!(result.max_target_deviation_mhz < 0.01, "{}", result.max_target_deviation_mhz);
    for (got, want) in result.spec.junction_energies().iter().zip(TABLE_EJ) {
        assert!((got - want).abs() < 0.01, "{got} vs {want}");
    }
}

#[test]
fn optimizer_recovers_design_table_from_symmetric_seed() {
    let target = DesignTarget { target_frequencies_ghz: Some(TABLE_F.to_vec()), ..Default::default() };
    let seed = AsymmetrySpec::symmetric(9.0, 34.0, 11.2, 19.1);
    let result = optimize_design(&target, &seed, &ETA_KNOBS, &OptimizerConfig::default()).unwrap();
    assert!(!result.infeasible, "{:?}", result.report.violations);
    assert!(result.max_target_deviation_mhz < 1.0);
    for (got, want) in result.spec.junction_energies().iter().zip(TABLE_EJ) {
        assert!((got - want).abs() < 0.05 * want, "{got} vs {want}");
    }
    assert!(result.evaluations <= OptimizerConfig::default().budget * OptimizerConfig::default().outer_rounds);
}

#[test]
fn equal_frequencies_are_infeasible() {
    let target = DesignTarget { target_frequencies_ghz: Some(vec![5.2; 3]), ..Default::default() };
    let seed = AsymmetrySpec::symmetric(9.0, 34.0, 11.2, 19.1);
    let result = optimize_design(&target, &seed, &ETA_KNOBS, &OptimizerConfig::default()).unwrap();
    assert!(result.infeasible);
    assert!(!result.report.passes);
}

#[test]
fn optimizer_is_deterministic() {
    let target = DesignTarget { target_frequencies_ghz: Some(TABLE_F.to_vec()), ..Default::default() };
    let seed = AsymmetrySpec::symmetric(9.0, 34.0, 11.2, 19.1);
    let config = OptimizerConfig { budget: 200, outer_rounds: 1, ..Default::default() };
    let a = optimize_design(&target, &seed, &ETA_KNOBS, &config).unwrap();
    let b = optimize_design(&target, &seed, &ETA_KNOBS, &config).unwrap();
    assert_eq!(a.spec, b.spec);
    assert_eq!(a.evaluations, b.evaluations);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn asymmetry_round_trips(
        ej in 5.0..15.0f64, c in 10.0..60.0f64,
        ab in -0.3..0.3f64, bc in -0.3..0.3f64, ca in -0.3..0.3f64,
        pab in -0.3..0.3f64, pbc in -0.3..0.3f64, pca in -0.3..0.3f64,
        c13 in 1.0..30.0f64, c24 in 1.0..30.0f64,
    ) {
        let spec = AsymmetrySpec {
            ej_mean_ghz: ej,
            eta: Mixing { ab, bc, ca },
            c_mean_ff: c,
            eta_prime: Mixing { ab: pab, bc: pbc, ca: pca },
            diagonal_caps_ff: [c13, c24],
            flux_phi0: 0.0,
        };
        let back = AsymmetrySpec::from_netlist(&apply_asymmetry(&spec).unwrap()).unwrap();
        prop_assert!((back.ej_mean_ghz - ej).abs() < 1e-12 * ej);
        prop_assert!((back.c_mean_ff - c).abs() < 1e-12 * c);
        for (x, y) in [(back.eta.ab, ab), (back.eta.bc, bc), (back.eta.ca, ca),
                       (back.eta_prime.ab, pab), (back.eta_prime.bc, pbc), (back.eta_prime.ca, pca)] {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert_eq!(back.diagonal_caps_ff, [c13, c24]);
    }

    #[test]
    fn optimized_elements_stay_positive(f_a in 4.6..5.6f64, f_b in 4.4..5.2f64, f_c in 5.6..6.4f64) {
        let target = DesignTarget { target_frequencies_ghz: Some(vec![f_a, f_b, f_c]), ..Default::default() };
        let seed = AsymmetrySpec::symmetric(9.0, 34.0, 11.2, 19.1);
        let config = OptimizerConfig { budget: 300, outer_rounds: 1, ..Default::default() };
        let result = optimize_design(&target, &seed, &ETA_KNOBS, &config).unwrap();
        prop_assert!(result.spec.junction_energies().iter().all(|&e| e > 0.0));
        prop_assert!(result.netlist.branches.iter().all(|b| b.c_ff > 0.0 && b.ej_ghz >= 0.0));
        prop_assert!(result.objective.is_finite() && result.objective >= 0.0);
    }
}
