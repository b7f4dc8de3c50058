//! Browser demo. Each operation takes a JSON request and returns a JSON
//! response; the `wasm` functions are thin wrappers so the same code runs
//! and is tested natively.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use semispec::classical::predicted_density;
use semispec::detector::{
    default_density_centers, default_probe, density_from_quantum, fit_samples, recover_hessian_spectrum,
    sweep_samples, DensityParams, FitOutcome,
};
use semispec::specdist::{e_scan, geometric_h_list, h_sweep, SweepParams};
use semispec::testfn::{TestFunction, TestFunctionSpec};
use semispec::{Potential, PotentialSpec};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanRequest {
    pub potential: PotentialSpec,
    #[serde(default)]
    pub test_function: Option<TestFunctionSpec>,
    pub h: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanResponse {
    pub energies: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub tail_bounds: Vec<f64>,
    pub peaks: Vec<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    pub potential: PotentialSpec,
    #[serde(default)]
    pub test_function: Option<TestFunctionSpec>,
    pub energy: f64,
    pub h_max: f64,
    pub h_min: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResponse {
    pub h: Vec<f64>,
    pub magnitudes: Vec<f64>,
    pub tail_bounds: Vec<f64>,
    pub fit: Option<FitOutcome>,
    pub fit_error: Option<String>,
}

/// Density curves at a nondegenerate equilibrium: the closed form from the
/// Hessian, and optionally samples recovered from spectra (slow).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityRequest {
    pub potential: PotentialSpec,
    pub energy: f64,
    pub t_max: f64,
    #[serde(default = "default_curve_points")]
    pub curve_points: usize,
    /// Bump centers for the spectral estimate; none skips it.
    #[serde(default)]
    pub samples: usize,
}

fn default_curve_points() -> usize {
    400
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityResponse {
    pub location: Vec<f64>,
    pub hessian_eigenvalues: Vec<f64>,
    pub t: Vec<f64>,
    /// NaN at singular times.
    pub predicted: Vec<f64>,
    pub sample_t: Vec<f64>,
    pub sample_value: Vec<f64>,
    pub recovered_eigenvalues: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

fn build(spec: &PotentialSpec, tf: &Option<TestFunctionSpec>) -> Result<(Potential, TestFunction), String> {
    let pot = spec.build().map_err(|e| e.to_string())?;
    let tf = match tf {
        Some(s) => s.build(),
        None => default_probe(),
    }
    .map_err(|e| e.to_string())?;
    Ok((pot, tf))
}

pub fn run_scan(req: &ScanRequest) -> Result<ScanResponse, String> {
    if req.points < 2 || !(req.e_min < req.e_max) {
        return Err("need e_min < e_max and at least 2 points".into());
    }
    let (pot, tf) = build(&req.potential, &req.test_function)?;
    let n = req.points;
    let energies: Vec<f64> =
        (0..n).map(|i| req.e_min + (req.e_max - req.e_min) * i as f64 / (n - 1) as f64).collect();
    let p = e_scan(&pot, req.h, &tf, &energies, &SweepParams::default()).map_err(|e| e.to_string())?;
    Ok(ScanResponse {
        magnitudes: p.values.iter().map(|v| v.norm()).collect(),
        peaks: p.peak_energies(),
        energies: p.energies,
        tail_bounds: p.tail_bounds,
        warnings: p.warnings,
    })
}

pub fn run_sweep(req: &SweepRequest) -> Result<SweepResponse, String> {
    if !(req.h_max > req.h_min && req.h_min > 0.0) || req.count < 2 {
        return Err("need h_max > h_min > 0 and at least 2 values of h".into());
    }
    let (pot, tf) = build(&req.potential, &req.test_function)?;
    let hs = geometric_h_list(req.h_max, req.h_min, req.count);
    let sweep = h_sweep(&pot, req.energy, &tf, &hs, &SweepParams::default()).map_err(|e| e.to_string())?;
    let (fit, fit_error) = match fit_samples(&sweep_samples(&sweep)) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let kept: Vec<_> = sweep.points.iter().filter(|p| !p.flagged()).collect();
    Ok(SweepResponse {
        h: kept.iter().map(|p| p.h).collect(),
        magnitudes: kept.iter().map(|p| p.value.norm()).collect(),
        tail_bounds: kept.iter().map(|p| p.tail_bound).collect(),
        fit,
        fit_error,
    })
}

pub fn run_density(req: &DensityRequest) -> Result<DensityResponse, String> {
    if !(req.t_max > 0.0) || req.curve_points < 2 {
        return Err("need t_max > 0 and at least 2 curve points".into());
    }
    let pot = req.potential.build().map_err(|e| e.to_string())?;
    let info = pot.critical_point_at(req.energy, 1e-6).map_err(|e| e.to_string())?;
    let m = req.curve_points;
    let t: Vec<f64> = (1..=m).map(|i| req.t_max * i as f64 / m as f64).collect();
    let predicted = t
        .iter()
        .map(|&s| predicted_density(&info.hessian_eigenvalues, s).unwrap_or(f64::NAN))
        .collect();
    let mut out = DensityResponse {
        location: info.location.clone(),
        hessian_eigenvalues: info.hessian_eigenvalues.clone(),
        t,
        predicted,
        sample_t: Vec::new(),
        sample_value: Vec::new(),
        recovered_eigenvalues: None,
        notes: Vec::new(),
    };
    if req.samples == 0 {
        return Ok(out);
    }
    if pot.dim() != 1 {
        out.notes.push("spectral samples need a one-dimensional potential".into());
        return Ok(out);
    }
    let centers = default_density_centers(&pot, &info.location, req.samples);
    let samples = density_from_quantum(&pot, &info.location, req.energy, &centers, &DensityParams::default())
        .map_err(|e| e.to_string())?;
    let pairs: Vec<(f64, f64)> =
        samples.iter().filter(|s| s.value.is_finite()).map(|s| (s.t, s.value)).collect();
    out.sample_t = pairs.iter().map(|p| p.0).collect();
    out.sample_value = pairs.iter().map(|p| p.1).collect();
    match recover_hessian_spectrum(&pairs, 1) {
        Ok(fit) => out.recovered_eigenvalues = Some(fit.hessian_eigenvalues),
        Err(e) => out.notes.push(format!("Hessian recovery: {e}")),
    }
    Ok(out)
}

fn dispatch<Req, Resp>(json: &str, f: impl Fn(&Req) -> Result<Resp, String>) -> Result<String, String>
where
    Req: for<'de> Deserialize<'de>,
    Resp: Serialize,
{
    let req: Req = serde_json::from_str(json).map_err(|e| format!("bad request: {e}"))?;
    let resp = f(&req)?;
    serde_json::to_string(&resp).map_err(|e| e.to_string())
}

pub fn scan_json(json: &str) -> Result<String, String> {
    dispatch(json, run_scan)
}

pub fn sweep_json(json: &str) -> Result<String, String> {
    dispatch(json, run_sweep)
}

pub fn density_json(json: &str) -> Result<String, String> {
    dispatch(json, run_density)
}

#[wasm_bindgen]
pub fn escan(request: &str) -> Result<String, JsValue> {
    scan_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn hsweep(request: &str) -> Result<String, JsValue> {
    sweep_json(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn density_curves(request: &str) -> Result<String, JsValue> {
    density_json(request).map_err(|e| JsValue::from_str(&e))
}
