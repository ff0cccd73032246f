use multimon::design::AsymmetrySpec;
use multimon::presets::preset;
use multimon_web::{compile_json, presets_json, sweep_json, tune_json};
use serde_json::Value;

fn parse(s: Result<String, String>) -> Value {
    serde_json::from_str(&s.unwrap()).unwrap()
}

#[test]
fn presets_are_listed() {
    let v = parse(presets_json());
    assert_eq!(v.as_array().unwrap().len(), 5);
    assert_eq!(v[0][0], "trimon-symmetric");
}

#[test]
fn sweep_starts_at_the_zero_flux_device() {
    let v = parse(sweep_json("trimon-symmetric", 0.25, 6));
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[5]["flux_phi0"], 0.25);
    for (got, want) in rows[0]["frequencies_ghz"].as_array().unwrap().iter().zip([5.338, 4.778, 6.156]) {
        assert!((got.as_f64().unwrap() - want).abs() / want < 0.01);
    }
    assert_eq!(rows[0]["couplings_mhz"][0][0], "AB");
    let j_ab: Vec<f64> = rows.iter().map(|r| r["couplings_mhz"][0][1].as_f64().unwrap()).collect();
    assert!(j_ab.iter().all(|j| (j - j_ab[0]).abs() < 0.005 * j_ab[0]));
    let xi: Vec<f64> = rows.iter().map(|r| r["xi_mhz"].as_f64().unwrap()).collect();
    assert!(xi.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn sweep_rejects_bad_input() {
    assert!(sweep_json("nope", 0.25, 6).is_err());
    assert!(sweep_json("trimon-symmetric", 0.25, 1).is_err());
    assert!(sweep_json("trimon-symmetric", 0.4, 3).is_err());
}

#[test]
fn tuning_reproduces_the_design_table() {
    let spec = AsymmetrySpec::from_netlist(&preset("trimon-design-table").unwrap()).unwrap();
    let [c13, c24] = spec.diagonal_caps_ff;
    let v = parse(tune_json(spec.ej_mean_ghz, [spec.eta.ab, spec.eta.bc, spec.eta.ca], spec.c_mean_ff, c13, c24));
    let f = v["frequencies_ghz"].as_array().unwrap();
    for (got, want) in f.iter().zip([5.244, 4.773, 6.059]) {
        assert!((got.as_f64().unwrap() - want).abs() / want < 0.02, "{got}");
    }
    assert_eq!(v["transitions"].as_array().unwrap().len(), 12);
    assert!(tune_json(8.0, [1.2, 0.0, 0.0], 34.0, 11.2, 19.1).is_err());
}

#[test]
fn compiled_cnot_has_two_pulses_and_a_frame_table() {
    let v = parse(compile_json("CNOT B A"));
    let pulses = v["pulses"].as_array().unwrap();
    assert_eq!(pulses.len(), 2);
    assert_eq!(pulses[0]["transition"], "AB1C0");
    assert_eq!(v["frame_offsets_rad"].as_array().unwrap().len(), 4);
    assert!(v["replay_error"].as_f64().unwrap() < 1e-12);
    assert!(compile_json("X Q").unwrap_err().contains("line 1"));
}
