//! The localized spectral sum Υ(E, h, φ) = Σ φ((λ_j - E)/h) over a window,
//! sweeps in h and scans in E.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{err, ErrorKind, Module, Result};
use crate::potential::Potential;
use crate::quantum::{spectrum_for, SolverParams, Spectrum, Window};
use crate::testfn::TestFunction;

const MOD: Module = Module::SpecDist;

/// Anything that can weight rescaled eigenvalues.
pub trait SpectralWeight: Sync {
    fn weight(&self, s: f64) -> Complex64;
    /// Bound on |weight(s)|, valid at least for |s| > s_max.
    fn weight_bound(&self, s: f64) -> f64;
    fn s_max(&self) -> f64;
    fn describe(&self) -> String;
}

impl SpectralWeight for TestFunction {
    fn weight(&self, s: f64) -> Complex64 {
        self.eval(s)
    }

    fn weight_bound(&self, s: f64) -> f64 {
        self.tail_bound(s)
    }

    fn s_max(&self) -> f64 {
        TestFunction::s_max(self)
    }

    fn describe(&self) -> String {
        TestFunction::describe(self)
    }
}

/// Finite linear combination Σ a_i φ_i.
pub struct Combination<'a> {
    pub terms: Vec<(Complex64, &'a TestFunction)>,
}

impl SpectralWeight for Combination<'_> {
    fn weight(&self, s: f64) -> Complex64 {
        self.terms.iter().map(|(a, f)| a * f.eval(s)).sum()
    }

    fn weight_bound(&self, s: f64) -> f64 {
        self.terms.iter().map(|(a, f)| a.norm() * f.tail_bound(s)).sum()
    }

    fn s_max(&self) -> f64 {
        self.terms.iter().map(|(_, f)| f.s_max()).fold(f64::INFINITY, f64::min)
    }

    fn describe(&self) -> String {
        self.terms.iter().map(|(a, f)| format!("({a})*[{}]", f.describe())).collect::<Vec<_>>().join(" + ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Upsilon {
    pub value: Complex64,
    /// Bound on the dropped terms with |s| > s_max and on eigenvalues
    /// outside the window; the part above the window uses the level density
    /// observed near the window top.
    pub tail_bound: f64,
    /// Terms summed.
    pub terms: usize,
    /// Terms dropped beyond s_max.
    pub dropped: usize,
}

/// Υ(E, h, φ) from a computed spectrum.
pub fn upsilon<W: SpectralWeight + ?Sized>(spec: &Spectrum, energy: f64, w: &W) -> Result<Upsilon> {
    let win = &spec.window;
    if energy < win.e1 - 1e-12 || energy > win.e2 + 1e-12 {
        return err(
            MOD,
            ErrorKind::WindowMismatch(format!("E = {energy} is outside [{}, {}]", win.e1, win.e2)),
        );
    }
    let s_max = w.s_max();
    let mut value = Complex64::new(0.0, 0.0);
    let mut tail_bound = 0.0;
    let (mut terms, mut dropped) = (0, 0);
    for &l in &spec.eigenvalues {
        let s = (l - energy) / spec.h;
        if s.abs() > s_max {
            tail_bound += w.weight_bound(s);
            dropped += 1;
        } else {
            value += w.weight(s);
            terms += 1;
        }
    }
    // eigenvalues outside the window: the count below is known exactly, the
    // level density above is estimated from the top quarter of the window
    let s_lo = (win.lo() - energy) / spec.h;
    tail_bound += spec.below_window as f64 * w.weight_bound(s_lo);
    let s_hi = (win.hi() - energy) / spec.h;
    if s_hi > 0.0 {
        let cut = energy + 0.75 * (win.hi() - energy);
        let upper = spec.eigenvalues.iter().filter(|&&l| l >= cut).count().max(1) as f64;
        let density = upper / (0.25 * s_hi);
        tail_bound += 2.0 * density * w.weight_bound(s_hi) * s_hi / 7.0;
    }
    Ok(Upsilon { value, tail_bound, terms, dropped })
}

/// Margin of the window around E: at least s_max h so that truncation is
/// governed by the decay of φ rather than by the window edge.
pub fn sweep_eps(s_max: f64, h: f64, min_eps: f64) -> f64 {
    (s_max * h).max(min_eps)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub h: f64,
    pub value: Complex64,
    pub tail_bound: f64,
    /// Eigenvalues inside the window.
    pub count: usize,
    pub window: Window,
    /// Solver error at this h, if any; such points are excluded from fits.
    pub error: Option<String>,
}

impl SweepPoint {
    pub fn flagged(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub energy: f64,
    pub test_function: String,
    pub points: Vec<SweepPoint>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,re,im,abs,tail_bound,count\n");
        for p in &self.points {
            if p.flagged() {
                continue;
            }
            s.push_str(&format!(
                "{:.6e},{:.12e},{:.12e},{:.12e},{:.3e},{}\n",
                p.h,
                p.value.re,
                p.value.im,
                p.value.norm(),
                p.tail_bound,
                p.count
            ));
        }
        s
    }
}

/// Geometric list from `h_max` down to `h_min`.
pub fn geometric_h_list(h_max: f64, h_min: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![h_max];
    }
    let r = (h_min / h_max).ln() / (count - 1) as f64;
    (0..count).map(|i| h_max * (r * i as f64).exp()).collect()
}

/// Twelve points from 0.05 to 0.004.
pub fn default_h_list() -> Vec<f64> {
    geometric_h_list(0.05, 0.004, 12)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepParams {
    pub solver: SolverParams,
    /// Lower bound for the window margin eps.
    pub min_eps: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self { solver: SolverParams::default(), min_eps: 0.05 }
    }
}

fn map_jobs<T: Send, F: Fn(f64) -> T + Sync>(hs: &[f64], f: F) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        hs.par_iter().map(|&h| f(h)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        hs.iter().map(|&h| f(h)).collect()
    }
}

fn check_h_list(h_list: &[f64]) -> Result<()> {
    if h_list.is_empty() {
        return err(MOD, ErrorKind::InvalidArgument("empty h list".into()));
    }
    if h_list.windows(2).any(|p| !(p[1] < p[0])) || h_list.iter().any(|h| !(*h > 0.0)) {
        return err(MOD, ErrorKind::InvalidArgument("h list must be positive and strictly decreasing".into()));
    }
    Ok(())
}

/// Spectra around `energy` for each h, with windows wide enough for
/// weights truncated at `s_max`. Several weights sharing s_max can reuse them.
pub fn sweep_spectra(
    pot: &Potential,
    energy: f64,
    s_max: f64,
    h_list: &[f64],
    params: &SweepParams,
) -> Result<Vec<(Window, Result<Spectrum>)>> {
    check_h_list(h_list)?;
    Ok(map_jobs(h_list, |h| {
        let window = Window { e1: energy, e2: energy, eps: sweep_eps(s_max, h, params.min_eps) };
        (window, spectrum_for(pot, h, &window, &params.solver))
    }))
}

/// Sweep assembled from precomputed spectra.
pub fn sweep_from_spectra<W: SpectralWeight + ?Sized>(
    energy: f64,
    w: &W,
    h_list: &[f64],
    spectra: &[(Window, Result<Spectrum>)],
) -> SweepResult {
    let points = h_list
        .iter()
        .zip(spectra)
        .map(|(&h, (window, spec))| {
            let run = spec
                .as_ref()
                .map_err(|e| e.clone())
                .and_then(|spec| upsilon(spec, energy, w).map(|u| (u, spec.len())));
            match run {
                Ok((u, count)) => {
                    SweepPoint { h, value: u.value, tail_bound: u.tail_bound, count, window: *window, error: None }
                }
                Err(e) => SweepPoint {
                    h,
                    value: Complex64::new(f64::NAN, f64::NAN),
                    tail_bound: f64::NAN,
                    count: 0,
                    window: *window,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    SweepResult { energy, test_function: w.describe(), points }
}

/// Υ at a fixed energy for each h of a strictly decreasing list.
pub fn h_sweep<W: SpectralWeight + ?Sized>(
    pot: &Potential,
    energy: f64,
    w: &W,
    h_list: &[f64],
    params: &SweepParams,
) -> Result<SweepResult> {
    let spectra = sweep_spectra(pot, energy, w.s_max(), h_list, params)?;
    Ok(sweep_from_spectra(energy, w, h_list, &spectra))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanProfile {
    pub h: f64,
    pub energies: Vec<f64>,
    pub values: Vec<Complex64>,
    pub tail_bounds: Vec<f64>,
    /// Indices of local maxima of |Υ| that stand out from the background.
    pub peaks: Vec<usize>,
    pub warnings: Vec<String>,
}

impl ScanProfile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("energy,re,im,abs,tail_bound\n");
        for ((e, v), t) in self.energies.iter().zip(&self.values).zip(&self.tail_bounds) {
            s.push_str(&format!("{e:.9e},{:.12e},{:.12e},{:.12e},{t:.3e}\n", v.re, v.im, v.norm()));
        }
        s
    }

    pub fn peak_energies(&self) -> Vec<f64> {
        self.peaks.iter().map(|&i| self.energies[i]).collect()
    }
}

/// Contrast factor over the median that a peak must exceed.
pub const PEAK_CONTRAST: f64 = 5.0;

/// |Υ| over an energy grid at fixed h, from a single spectrum.
pub fn e_scan(
    pot: &Potential,
    h: f64,
    tf: &TestFunction,
    energies: &[f64],
    params: &SweepParams,
) -> Result<ScanProfile> {
    if energies.is_empty() {
        return err(MOD, ErrorKind::InvalidArgument("empty energy grid".into()));
    }
    let e1 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let e2 = energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let window = Window { e1, e2, eps: sweep_eps(tf.s_max(), h, params.min_eps) };
    let spec = spectrum_for(pot, h, &window, &params.solver).map_err(|e| {
        if e.is_input_error() {
            e
        } else {
            crate::error::Error::new(MOD, ErrorKind::Pipeline(format!("spectrum for the scan failed: {e}")))
        }
    })?;
    let mut values = Vec::with_capacity(energies.len());
    let mut tail_bounds = Vec::with_capacity(energies.len());
    for &e in energies {
        let u = upsilon(&spec, e, tf)?;
        values.push(u.value);
        tail_bounds.push(u.tail_bound);
    }
    let mags: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    let mut sorted = mags.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = sorted[sorted.len() / 2];
    let floor = tail_bounds.iter().copied().fold(0.0, f64::max);
    let threshold = (PEAK_CONTRAST * median).max(10.0 * floor);
    let mut peaks = Vec::new();
    for i in 0..mags.len() {
        let left = if i > 0 { mags[i - 1] } else { f64::NEG_INFINITY };
        let right = if i + 1 < mags.len() { mags[i + 1] } else { f64::NEG_INFINITY };
        if mags[i] >= left && mags[i] > right && mags[i] > threshold {
            peaks.push(i);
        }
    }
    let mut warnings = Vec::new();
    if !tf.weyl_kill_check() {
        warnings.push(
            "test function is not flat at t = 0: the smooth Weyl term dominates every energy and masks critical levels"
                .to_string(),
        );
    }
    Ok(ScanProfile { h, energies: energies.to_vec(), values, tail_bounds, peaks, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::GridInfo;
    use crate::testfn::{SupportMode, TestFunctionSpec};

    fn fake(h: f64, eigs: Vec<f64>, e1: f64, e2: f64) -> Spectrum {
        let n = eigs.len();
        Spectrum {
            h,
            window: Window { e1, e2, eps: 1.0 },
            indices: (0..n).collect(),
            convergence: vec![0.0; n],
            eigenvalues: eigs,
            below_window: 0,
            grid: GridInfo { half_width: 1.0, n_points: 10, dx: 0.1, richardson: false },
        }
    }

    #[test]
    fn trivial_sums() {
        let tf = TestFunctionSpec::new(0, -1.0, 1.0, SupportMode::Symmetric).build().unwrap();
        let empty = fake(0.1, vec![], 0.0, 1.0);
        assert_eq!(upsilon(&empty, 0.5, &tf).unwrap().value, Complex64::new(0.0, 0.0));
        let one = fake(0.1, vec![0.5], 0.0, 1.0);
        assert!((upsilon(&one, 0.5, &tf).unwrap().value - tf.eval(0.0)).norm() < 1e-15);
        assert!(upsilon(&one, 3.0, &tf).is_err());
    }

    #[test]
    fn harmonic_ladder() {
        let tf = TestFunctionSpec::new(0, -1.0, 1.0, SupportMode::Symmetric).build().unwrap();
        let eigs: Vec<f64> = (0..30).map(|j| 0.1 * (2 * j + 1) as f64).collect();
        let spec = fake(0.1, eigs, 0.0, 1.0);
        let u = upsilon(&spec, 0.5, &tf).unwrap().value;
        let want: Complex64 = (0..30).map(|j| tf.eval(2.0 * j as f64 - 4.0)).sum();
        assert!((u - want).norm() < 1e-14);
        // Poisson summation: Σ_j φ(2j) over all j equals φ̂(0)/2 when supp φ̂ ⊂ (-π, π)
        let full: Complex64 = (-60..=60).map(|j| tf.eval(2.0 * j as f64)).sum();
        assert!((full - 0.5 * tf.phi_hat(0.0)).norm() < 1e-5);
    }

    #[test]
    fn default_list() {
        let hs = default_h_list();
        assert_eq!(hs.len(), 12);
        assert!((hs[0] - 0.05).abs() < 1e-15 && (hs[11] - 0.004).abs() < 1e-15);
    }
}
