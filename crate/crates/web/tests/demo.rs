use semispec_web::{density_json, run_density, run_scan, run_sweep, scan_json, sweep_json, DensityRequest, ScanRequest};

fn harmonic() -> semispec::PotentialSpec {
    serde_json::from_str(r#"{ "kind": "harmonic", "coefficients": [1.0] }"#).unwrap()
}

#[test]
fn scan_peaks_at_the_minimum() {
    let r = run_scan(&ScanRequest {
        potential: harmonic(),
        test_function: None,
        h: 0.01,
        e_min: -0.2,
        e_max: 0.5,
        points: 71,
    })
    .unwrap();
    assert_eq!(r.energies.len(), 71);
    assert_eq!(r.magnitudes.len(), 71);
    assert!(r.peaks.iter().any(|e| e.abs() < 0.011), "{:?}", r.peaks);
}

#[test]
fn json_round_trip_and_errors() {
    let out = scan_json(r#"{"potential":{"kind":"double_well"},"h":0.02,"e_min":0.8,"e_max":1.2,"points":21}"#).unwrap();
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["energies"].as_array().unwrap().len(), 21);
    assert!(scan_json("{}").unwrap_err().starts_with("bad request"));
    assert!(scan_json(r#"{"potential":{"kind":"double_well"},"h":0.02,"e_min":1,"e_max":0,"points":21}"#).is_err());
    assert!(sweep_json(r#"{"potential":{"kind":"double_well"},"energy":1,"h_max":0.01,"h_min":0.02,"count":6}"#).is_err());
    assert!(density_json(r#"{"potential":{"kind":"double_well"},"energy":0.5,"t_max":1}"#).is_err());
}

#[test]
fn sweep_at_a_minimum_is_flat() {
    let out = sweep_json(r#"{"potential":{"kind":"harmonic","coefficients":[1.0]},"energy":0,"h_max":0.04,"h_min":0.01,"count":6}"#)
        .unwrap();
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let alpha = v["fit"]["alpha"].as_f64().unwrap();
    assert!(alpha.abs() < 0.05, "alpha = {alpha}");
    assert_eq!(v["h"].as_array().unwrap().len(), 6);
    let r = run_sweep(&serde_json::from_str(
        r#"{"potential":{"kind":"double_well"},"energy":1,"h_max":0.04,"h_min":0.01,"count":6}"#,
    ).unwrap())
    .unwrap();
    assert!(r.fit.is_some());
}

#[test]
fn closed_form_curve_at_the_barrier_top() {
    let r = run_density(&DensityRequest {
        potential: serde_json::from_str(r#"{ "kind": "double_well" }"#).unwrap(),
        energy: 1.0,
        t_max: 2.0,
        curve_points: 50,
        samples: 0,
    })
    .unwrap();
    assert_eq!(r.location.len(), 1);
    assert!(r.location[0].abs() < 1e-9);
    assert!((r.hessian_eigenvalues[0] + 4.0).abs() < 1e-9);
    for (t, d) in r.t.iter().zip(&r.predicted) {
        let expected = 0.5 / (2f64.sqrt() * t).sinh();
        assert!((d - expected).abs() < 1e-9 * expected.max(1.0), "t = {t}: {d} vs {expected}");
    }
    assert!(r.sample_t.is_empty());
}
