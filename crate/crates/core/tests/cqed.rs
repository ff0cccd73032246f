use multimon::circuit::analyze_modes;
use multimon::cqed::*;
use multimon::design::{analyze_device, DesignTarget};
use multimon::error::Error;
use multimon::kerr::{diagonal_energy, KerrOptions, KerrTensor};
use multimon::presets::preset;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

fn random_params(rng: &mut ChaCha8Rng) -> TrimonDispersive {
    TrimonDispersive {
        g: [rng.random_range(0.02..0.12), rng.random_range(0.0..0.03), rng.random_range(0.0..0.03)],
        delta: [-rng.random_range(1.0..3.0), -rng.random_range(1.0..3.0), -rng.random_range(0.5..2.0)],
        j_self: [rng.random_range(0.04..0.09), rng.random_range(0.04..0.09), rng.random_range(0.04..0.09)],
        j_ab: rng.random_range(0.03..0.15),
        j_bc: rng.random_range(0.03..0.15),
        j_ca: rng.random_range(0.03..0.15),
    }
}

#[test]
fn seven_state_formulas_reduce_to_single_coupling() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let mut p = random_params(&mut rng);
        p.g[1] = 0.0;
        p.g[2] = 0.0;
        let full = trimon_seven_state_shifts(&p);
        let reduced = trimon_single_coupling_shifts(p.g[0], p.delta[0], p.j_self[0], p.j_ab, p.j_ca);
        for k in 0..3 {
            assert!((full[k] - reduced[k]).abs() <= 1e-12 * reduced[k].abs(), "{k}: {} vs {}", full[k], reduced[k]);
        }
    }
}

fn tensor(p: &TrimonDispersive) -> KerrTensor {
    let cross = vec![vec![0.0, p.j_ab, p.j_ca], vec![p.j_ab, 0.0, p.j_bc], vec![p.j_ca, p.j_bc, 0.0]];
    let beta = (0..3).map(|mu| p.j_self[mu] + cross[mu].iter().sum::<f64>()).collect();
    KerrTensor {
        mode_frequencies_ghz: vec![5.0; 3],
        linear_frequencies_ghz: vec![5.0; 3],
        self_kerr: p.j_self.to_vec(),
        cross_kerr: cross,
        three_body: Vec::new(),
        three_wave: Vec::new(),
        beta,
        options: KerrOptions::default(),
        warnings: Vec::new(),
    }
}

#[test]
fn general_shift_matches_written_out_formulas() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let labels = ["100", "010", "001", "110", "011", "101", "111"];
    for _ in 0..100 {
        let p = random_params(&mut rng);
        let g_mhz: Vec<f64> = p.g.iter().map(|g| g * 1e3).collect();
        let chi = dispersive_shifts(&g_mhz, &p.delta, &tensor(&p)).unwrap();
        let written = trimon_seven_state_shifts(&p);
        assert_eq!(chi["000"], 0.0);
        for (k, label) in labels.iter().enumerate() {
            let want = written[k] * 1e3;
            assert!((chi[*label] - want).abs() <= 1e-10 * want.abs().max(1e-9), "{label}: {} vs {want}", chi[*label]);
        }
    }
}

#[test]
fn couplings_scale_shifts_quadratically() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let p = random_params(&mut rng);
        let k = tensor(&p);
        let g: Vec<f64> = p.g.iter().map(|g| g * 1e3).collect();
        let g2: Vec<f64> = g.iter().map(|x| 2.0 * x).collect();
        let a = dispersive_shifts(&g, &p.delta, &k).unwrap();
        let b = dispersive_shifts(&g2, &p.delta, &k).unwrap();
        for (label, x) in &a {
            assert!((b[label] - 4.0 * x).abs() <= 1e-12 * x.abs().max(1e-12), "{label}");
        }
    }
}

#[test]
fn shifts_are_additive_without_cross_kerr() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut p = random_params(&mut rng);
    let g: Vec<f64> = p.g.iter().map(|g| g * 1e3).collect();
    let coupled = dispersive_shifts(&g, &p.delta, &tensor(&p)).unwrap();
    assert!((coupled["110"] - coupled["100"] - coupled["010"]).abs() > 1e-6);
    p.j_ab = 0.0;
    p.j_bc = 0.0;
    p.j_ca = 0.0;
    let c = dispersive_shifts(&g, &p.delta, &tensor(&p)).unwrap();
    for (pair, a, b) in [("110", "100", "010"), ("011", "010", "001"), ("101", "100", "001")] {
        assert!((c[pair] - c[a] - c[b]).abs() < 1e-10, "{pair}");
    }
    assert!((c["111"] - c["100"] - c["010"] - c["001"]).abs() < 1e-10);

    let mut single = p;
    single.g = [p.g[0], 0.0, 0.0];
    let g1: Vec<f64> = single.g.iter().map(|g| g * 1e3).collect();
    let s = dispersive_shifts(&g1, &p.delta, &tensor(&single)).unwrap();
    assert_eq!(s["010"], 0.0);
    assert_eq!(s["001"], 0.0);
}

#[test]
fn resonant_denominator_is_reported() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut p = random_params(&mut rng);
    p.delta[0] = 2.0 * p.j_self[0] + 2.0 * p.j_ab + 2e-4;
    let g: Vec<f64> = p.g.iter().map(|g| g * 1e3).collect();
    assert!(matches!(dispersive_shifts(&g, &p.delta, &tensor(&p)), Err(Error::Resonance(_))));
}

/// Cavity frequency pull of each computational state from exact
/// diagonalization of the diagonal device Hamiltonian coupled to one
/// cavity mode, photons 0..=2, four levels per mode.
fn jaynes_cummings_pulls(kerr: &KerrTensor, g_mhz: &[f64], omega_r: f64) -> BTreeMap<String, f64> {
    let m = kerr.mode_count();
    let levels = 4usize;
    let photons = 3usize;
    let qdim = levels.pow(m as u32);
    let dim = qdim * photons;
    let occ =
        |q: usize| -> Vec<u8> { (0..m).map(|mu| ((q / levels.pow((m - 1 - mu) as u32)) % levels) as u8).collect() };
    let index = |o: &[u8]| o.iter().fold(0usize, |acc, &k| acc * levels + k as usize);
    let freqs: Vec<f64> = (0..m).map(|mu| kerr.mode_frequencies_ghz[mu] + kerr.beta[mu]).collect();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for q in 0..qdim {
        let o = occ(q);
        for r in 0..photons {
            h[(q * photons + r, q * photons + r)] = diagonal_energy(kerr, &freqs, &o, false) + omega_r * r as f64;
        }
        for mu in 0..m {
            if o[mu] as usize + 1 >= levels {
                continue;
            }
            let mut up = o.clone();
            up[mu] += 1;
            let q2 = index(&up);
            for r in 1..photons {
                // a b_mu^dag: one photon into one excitation.
                let v = g_mhz[mu] * 1e-3 * ((o[mu] + 1) as f64).sqrt() * (r as f64).sqrt();
                h[(q2 * photons + r - 1, q * photons + r)] = v;
                h[(q * photons + r, q2 * photons + r - 1)] = v;
            }
        }
    }
    let eig = SymmetricEigen::new(h);
    let dressed = |o: &[u8], r: usize| {
        let k = index(o) * photons + r;
        let best = (0..dim)
            .max_by(|&a, &b| eig.eigenvectors[(k, a)].abs().total_cmp(&eig.eigenvectors[(k, b)].abs()))
            .unwrap();
        eig.eigenvalues[best]
    };
    let mut out = BTreeMap::new();
    let zero = vec![0u8; m];
    let base = dressed(&zero, 1) - dressed(&zero, 0);
    for bits in 0..(1usize << m) {
        let o: Vec<u8> = (0..m).map(|mu| (bits >> (m - 1 - mu) & 1) as u8).collect();
        let label: String = o.iter().map(|k| k.to_string()).collect();
        out.insert(label, (dressed(&o, 1) - dressed(&o, 0) - base) * 1e3);
    }
    out
}

#[test]
fn shifts_match_jaynes_cummings_diagonalization() {
    let report =
        analyze_device(&preset("trimon-design-table").unwrap(), &DesignTarget::default(), KerrOptions::default())
            .unwrap();
    let cavity = report.cavity.as_ref().unwrap();
    // Weak coupling isolates the second-order shift.
    let weak: Vec<f64> = cavity.g_direct_mhz.iter().map(|g| g * 0.1).collect();
    let chi = dispersive_shifts(&weak, &cavity.detunings_ghz, &report.kerr).unwrap();
    let exact = jaynes_cummings_pulls(&report.kerr, &weak, cavity.omega_r_ghz);
    for (label, c) in &chi {
        if label == "000" {
            continue;
        }
        let pull = exact[label];
        assert!((pull - 2.0 * c).abs() < 0.01 * (2.0 * c).abs(), "{label}: {pull} vs {}", 2.0 * c);
    }
    // Full coupling: the fourth-order remainder stays small.
    let exact = jaynes_cummings_pulls(&report.kerr, &cavity.g_direct_mhz, cavity.omega_r_ghz);
    let c111 = cavity.chi_mhz["111"];
    assert!((exact["111"] - 2.0 * c111).abs() < 0.05 * (2.0 * c111).abs(), "{} vs {}", exact["111"], 2.0 * c111);
}

#[test]
fn design_table_couplings_and_shifts() {
    let report =
        analyze_device(&preset("trimon-design-table").unwrap(), &DesignTarget::default(), KerrOptions::default())
            .unwrap();
    let cavity = report.cavity.unwrap();
    for (got, want) in cavity.g_direct_mhz.iter().zip([69.0, 13.0, 5.0]) {
        assert!((got - want).abs() <= 0.15 * want, "g' {got} vs {want}");
    }
    for (label, want) in [("100", 0.131), ("010", 0.089), ("001", 0.123)] {
        let got = cavity.chi_mhz[label].abs();
        assert!((got - want).abs() <= 0.15 * want, "chi {label} {got} vs {want}");
    }
}

#[test]
fn symmetric_device_couples_only_the_dipole() {
    let (_, modes) = analyze_modes(&preset("trimon-symmetric").unwrap()).unwrap();
    let order = modes.ring_labels().unwrap();
    let g = direct_couplings(&modes.reordered(&order), 0, 70.0).unwrap();
    assert!((g[0] - 70.0).abs() < 1e-6, "{g:?}");
    assert!(g[1] < 1e-6 && g[2] < 1e-6, "{g:?}");
}

#[test]
fn matched_capacitor_asymmetry_suppresses_mixing() {
    use multimon::design::{apply_asymmetry, AsymmetrySpec, Mixing};
    let couplings = |eta: f64, matched: bool| {
        let mut spec = AsymmetrySpec::symmetric(9.0, 36.0, 12.0, 24.0);
        spec.eta = Mixing { ab: eta, bc: 0.0, ca: eta };
        if matched {
            spec.eta_prime = spec.eta;
        }
        let (_, modes) = analyze_modes(&apply_asymmetry(&spec).unwrap()).unwrap();
        let order = modes.ring_labels().unwrap();
        direct_couplings(&modes.reordered(&order), 0, 70.0).unwrap()
    };
    for eta in [0.02, 0.05, 0.1] {
        let (bare, matched) = (couplings(eta, false), couplings(eta, true));
        assert!(matched[1] < bare[1] && matched[2] < bare[2], "eta {eta}: {bare:?} -> {matched:?}");
        assert!(matched[2] < 2.0, "eta {eta}: {matched:?}");
        assert!((matched[0] - 70.0).abs() < (bare[0] - 70.0).abs());
    }
}

#[test]
fn histograms_separate_extreme_states() {
    let report =
        analyze_device(&preset("trimon-design-table").unwrap(), &DesignTarget::default(), KerrOptions::default())
            .unwrap();
    let chi = report.cavity.unwrap().chi_mhz;
    let config = ReadoutConfig::default();
    let r = readout_histograms(&chi, &config).unwrap();
    let mean = |s: &str| r.histograms.iter().find(|h| h.state == s).unwrap().label_mean;
    let extreme = (mean("000") - mean("111")).abs();
    for a in &r.histograms {
        for b in &r.histograms {
            if (a.state.as_str(), b.state.as_str()) != ("000", "111")
                && (a.state.as_str(), b.state.as_str()) != ("111", "000")
            {
                assert!((a.label_mean - b.label_mean).abs() <= extreme + 1e-15);
            }
        }
    }
    for h in &r.histograms {
        assert_eq!(h.count_below + h.count_between + h.count_above, config.shots);
    }
    let csv = r.csv();
    assert_eq!(csv.lines().next().unwrap(), HISTOGRAM_HEADER);
    assert_eq!(csv.lines().count(), 9);

    let quiet = readout_histograms(&chi, &ReadoutConfig { sigma: 1e-6, ..config.clone() }).unwrap();
    assert_eq!(quiet.misassignment_000_111, 0.0);
    let noisy = readout_histograms(&chi, &ReadoutConfig { sigma: 0.5, ..config.clone() }).unwrap();
    assert!(noisy.misassignment_000_111 > r.misassignment_000_111);
    assert!(matches!(
        readout_histograms(&chi, &ReadoutConfig { demarcations: Some((0.8, 0.2)), ..config }),
        Err(Error::Domain(_))
    ));
}

#[test]
fn equal_shifts_give_identical_histogram_means() {
    let chi: BTreeMap<String, f64> = ["000", "111"].iter().map(|s| (s.to_string(), 0.2)).collect();
    let config = ReadoutConfig::default();
    let r = readout_histograms(&chi, &config).unwrap();
    assert_eq!(r.histograms[0].label_mean, r.histograms[1].label_mean);
    assert!((pairwise_confusion(0.2, 0.2, &config) - 0.5).abs() < 1e-7);
}

#[test]
fn histograms_are_seeded() {
    let chi: BTreeMap<String, f64> = [("000", 0.0), ("111", 0.3)].iter().map(|(s, c)| (s.to_string(), *c)).collect();
    let config = ReadoutConfig { sigma: 0.3, seed: 9, ..Default::default() };
    assert_eq!(readout_histograms(&chi, &config).unwrap(), readout_histograms(&chi, &config).unwrap());
}
