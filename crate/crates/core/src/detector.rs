//! The inverse pipeline: power-log fits of h-sweeps, classification of
//! energy levels, and recovery of local data of V at a critical point.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::classical::{hessian_from_alphas, period_lower_bound, shortest_period_1d, Direction};
use crate::error::{err, Error, ErrorKind, Module, Result};
use crate::invariants::{classify_singularity, min_functional, max_functionals, CriticalType};
use crate::polynomial::Polynomial;
use crate::potential::{spherical_mean_of_germ, Potential, SeedGrid};
use crate::specdist::{
    default_h_list, e_scan, geometric_h_list, h_sweep, sweep_from_spectra, sweep_spectra, ScanProfile, SweepParams,
    SweepResult,
};
use crate::testfn::{SupportMode, TestFunction, TestFunctionSpec};

const MOD: Module = Module::Detector;

pub const MIN_SWEEP_POINTS: usize = 6;
/// Required span log10(h_max / h_min).
pub const MIN_SPAN_DECADES: f64 = 0.5;
/// The log model must cut the residual by at least this factor.
pub const LOG_MARGIN: f64 = 0.95;
/// Significance level of the F-test for the extra log parameter.
pub const LOG_TEST_LEVEL: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitSample {
    pub h: f64,
    pub magnitude: f64,
    pub tail_bound: f64,
    pub flagged: bool,
}

/// |Υ| ≈ C h^α (log(1/h) + c)^m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub alpha: f64,
    pub log_power: u32,
    pub amplitude: f64,
    pub log_amplitude: f64,
    /// Offset c inside the logarithm; 0 when m = 0.
    pub log_offset: f64,
    /// Root mean square of the residuals of log|Υ|.
    pub residual_rms: f64,
    /// Covariance of (log C, α).
    pub covariance: [[f64; 2]; 2],
    pub points: usize,
    pub rms_power: f64,
    pub rms_log: Option<f64>,
    pub f_statistic: Option<f64>,
}

impl FitResult {
    pub fn alpha_std(&self) -> f64 {
        self.covariance[1][1].max(0.0).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum FitOutcome {
    Fit(FitResult),
    /// Fewer than three points rise above their tail bounds.
    NumericallyZero { usable: usize, total: usize },
}

impl FitOutcome {
    pub fn fit(&self) -> Option<&FitResult> {
        match self {
            FitOutcome::Fit(f) => Some(f),
            FitOutcome::NumericallyZero { .. } => None,
        }
    }
}

struct Ols {
    intercept: f64,
    slope: f64,
    sse: f64,
    /// (XᵀX)^{-1}.
    inv: [[f64; 2]; 2],
}

fn ols(x: &[f64], y: &[f64]) -> Ols {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let inv = [[1.0 / n + mx * mx / sxx, -mx / sxx], [-mx / sxx, 1.0 / sxx]];
    Ols { intercept, slope, sse, inv }
}

fn scaled_cov(inv: [[f64; 2]; 2], sse: f64, dof: usize) -> [[f64; 2]; 2] {
    let s2 = sse / dof.max(1) as f64;
    [[inv[0][0] * s2, inv[0][1] * s2], [inv[1][0] * s2, inv[1][1] * s2]]
}

/// Best log offset by a grid scan followed by golden-section refinement.
fn best_offset(x: &[f64], y: &[f64]) -> (f64, Ols) {
    let l: Vec<f64> = x.iter().map(|v| -v).collect();
    let lmin = l.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = (-0.9 * lmin, 4.0 * lmax);
    let fit_at = |c: f64| {
        let adj: Vec<f64> = y.iter().zip(&l).map(|(v, li)| v - (li + c).ln()).collect();
        ols(x, &adj)
    };
    let steps = 400;
    let grid: Vec<f64> = (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect();
    let mut best = 0;
    let mut best_sse = f64::INFINITY;
    for (i, &c) in grid.iter().enumerate() {
        let s = fit_at(c).sse;
        if s < best_sse {
            best_sse = s;
            best = i;
        }
    }
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(steps)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c1 = b - g * (b - a);
    let mut c2 = a + g * (b - a);
    let (mut f1, mut f2) = (fit_at(c1).sse, fit_at(c2).sse);
    for _ in 0..100 {
        if f1 < f2 {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - g * (b - a);
            f1 = fit_at(c1).sse;
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + g * (b - a);
            f2 = fit_at(c2).sse;
        }
    }
    let c = if fit_at(grid[best]).sse < f1.min(f2) { grid[best] } else { 0.5 * (a + b) };
    (c, fit_at(c))
}

struct Prepared {
    x: Vec<f64>,
    y: Vec<f64>,
    hmax: f64,
}

fn prepare(samples: &[FitSample]) -> Result<std::result::Result<Prepared, FitOutcome>> {
    let valid: Vec<&FitSample> =
        samples.iter().filter(|s| !s.flagged && s.h > 0.0 && s.magnitude.is_finite()).collect();
    if valid.len() < MIN_SWEEP_POINTS {
        return err(
            MOD,
            ErrorKind::Precondition(format!(
                "fit needs at least {MIN_SWEEP_POINTS} valid h points, got {}",
                valid.len()
            )),
        );
    }
    let hmax = valid.iter().map(|s| s.h).fold(0.0, f64::max);
    let hmin = valid.iter().map(|s| s.h).fold(f64::INFINITY, f64::min);
    if (hmax / hmin).log10() < MIN_SPAN_DECADES - 1e-9 {
        return err(
            MOD,
            ErrorKind::Precondition(format!("h range [{hmin}, {hmax}] spans less than half a decade")),
        );
    }
    let usable: Vec<&&FitSample> =
        valid.iter().filter(|s| s.magnitude > 0.0 && s.magnitude > s.tail_bound).collect();
    if usable.len() < 3 {
        return Ok(Err(FitOutcome::NumericallyZero { usable: usable.len(), total: valid.len() }));
    }
    let x = usable.iter().map(|s| s.h.ln()).collect();
    let y = usable.iter().map(|s| s.magnitude.ln()).collect();
    Ok(Ok(Prepared { x, y, hmax }))
}

fn power_fit(x: &[f64], y: &[f64]) -> FitResult {
    let n = x.len();
    let p0 = ols(x, y);
    let rms0 = (p0.sse / n as f64).sqrt();
    FitResult {
        alpha: p0.slope,
        log_power: 0,
        amplitude: p0.intercept.exp(),
        log_amplitude: p0.intercept,
        log_offset: 0.0,
        residual_rms: rms0,
        covariance: scaled_cov(p0.inv, p0.sse, n.saturating_sub(2)),
        points: n,
        rms_power: rms0,
        rms_log: None,
        f_statistic: None,
    }
}

/// Fit with the log power fixed at m = 0.
pub fn fit_power_only(samples: &[FitSample]) -> Result<FitOutcome> {
    Ok(match prepare(samples)? {
        Ok(p) => FitOutcome::Fit(power_fit(&p.x, &p.y)),
        Err(zero) => zero,
    })
}

/// Least-squares fit of log|Υ| = log C + α log h + m log(log(1/h) + c).
pub fn fit_samples(samples: &[FitSample]) -> Result<FitOutcome> {
    let Prepared { x, y, hmax } = match prepare(samples)? {
        Ok(p) => p,
        Err(zero) => return Ok(zero),
    };
    let n = x.len();
    let power = power_fit(&x, &y);
    let (p0_sse, rms0) = (power.rms_power.powi(2) * n as f64, power.rms_power);
    let scale = y.iter().map(|v| v.abs()).fold(1.0, f64::max);
    if n < 5 || hmax >= 1.0 || rms0 <= 1e-12 * scale {
        return Ok(FitOutcome::Fit(power));
    }
    let (c, p1) = best_offset(&x, &y);
    let rms1 = (p1.sse / n as f64).sqrt();
    let dof = n - 3;
    let f = if p1.sse > 0.0 { (p0_sse - p1.sse) / (p1.sse / dof as f64) } else { f64::INFINITY };
    let critical = FisherSnedecor::new(1.0, dof as f64)
        .map(|d| d.inverse_cdf(1.0 - LOG_TEST_LEVEL))
        .unwrap_or(f64::INFINITY);
    let with_log = rms1 < LOG_MARGIN * rms0 && f > critical;
    if !with_log {
        return Ok(FitOutcome::Fit(FitResult { rms_log: Some(rms1), f_statistic: Some(f), ..power }));
    }
    Ok(FitOutcome::Fit(FitResult {
        alpha: p1.slope,
        log_power: 1,
        amplitude: p1.intercept.exp(),
        log_amplitude: p1.intercept,
        log_offset: c,
        residual_rms: rms1,
        covariance: scaled_cov(p1.inv, p1.sse, dof),
        points: n,
        rms_power: rms0,
        rms_log: Some(rms1),
        f_statistic: Some(f),
    }))
}

pub fn sweep_samples(sweep: &SweepResult) -> Vec<FitSample> {
    sweep
        .points
        .iter()
        .map(|p| FitSample { h: p.h, magnitude: p.value.norm(), tail_bound: p.tail_bound, flagged: p.flagged() })
        .collect()
}

/// Fit of an h-sweep; solver-flagged points are left out.
pub fn fit_power_log(sweep: &SweepResult) -> Result<FitOutcome> {
    fit_samples(&sweep_samples(sweep))
}

/// Test function used for level classification: j0 = 0, one-sided support
/// [0.1, 1], so that φ̂ vanishes near t = 0.
pub fn default_probe() -> Result<TestFunction> {
    TestFunctionSpec::new(0, 0.1, 1.0, SupportMode::OneSided).build()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyParams {
    pub sweep: SweepParams,
    pub h_list: Vec<f64>,
    /// Slope above which a sweep counts as O(h^∞).
    pub regular_slope: f64,
    /// Slope above which a sweep counts as bounded when periods may contribute.
    pub weak_slope: f64,
    pub max_residual: f64,
    /// Half-width of the energy band whose orbit periods decide the mode.
    pub period_band: f64,
    /// Run a second sweep with φ̂(0) ≠ 0 to look for a log term when α ≈ 0.
    pub log_probe: bool,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        Self {
            sweep: SweepParams::default(),
            h_list: default_h_list(),
            regular_slope: 3.0,
            weak_slope: -0.05,
            max_residual: 0.25,
            period_band: 0.05,
            log_probe: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionMode {
    /// supp φ̂ avoids every period: regular levels give O(h^∞).
    Strong,
    /// Periods may lie in supp φ̂: regular levels only give O(1).
    Weak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelVerdict {
    Regular,
    Critical,
    Inconclusive,
}

impl LevelVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            LevelVerdict::Regular => "regular",
            LevelVerdict::Critical => "critical",
            LevelVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelReport {
    pub energy: f64,
    pub verdict: LevelVerdict,
    pub mode: DecisionMode,
    /// Shortest orbit period (or its lower bound) near the level.
    pub period: Option<f64>,
    pub fit: FitOutcome,
    pub log_probe: Option<FitOutcome>,
    pub sweep: SweepResult,
    pub probe_sweep: Option<SweepResult>,
    pub notes: Vec<String>,
}

impl LevelReport {
    pub fn primary_fit(&self) -> Option<&FitResult> {
        self.fit.fit()
    }

    /// Log power, taken from the probe when it ran.
    pub fn log_power(&self) -> u32 {
        let probe = self.log_probe.as_ref().and_then(|f| f.fit()).map(|f| f.log_power).unwrap_or(0);
        probe.max(self.primary_fit().map(|f| f.log_power).unwrap_or(0))
    }
}

fn decision_mode(pot: &Potential, energy: f64, tf: &TestFunction, band: f64) -> (DecisionMode, Option<f64>, Option<String>) {
    let (a, b) = tf.support();
    let reach = a.abs().max(b.abs());
    let period = if pot.dim() == 1 {
        shortest_period_1d(pot, energy - band, energy + band)
    } else {
        period_lower_bound(pot, energy - band, energy + band).map(|p| Some(p.period))
    };
    match period {
        Ok(None) => (DecisionMode::Strong, None, None),
        Ok(Some(t)) if reach < t => (DecisionMode::Strong, Some(t), None),
        Ok(Some(t)) => (DecisionMode::Weak, Some(t), None),
        Err(e) => (DecisionMode::Weak, None, Some(format!("period check failed, using the weak criterion: {e}"))),
    }
}

/// Regular, critical or inconclusive verdict for the level E.
pub fn classify_level(pot: &Potential, energy: f64, tf: &TestFunction, params: &ClassifyParams) -> Result<LevelReport> {
    if !tf.weyl_kill_check() {
        return err(
            MOD,
            ErrorKind::Precondition("test function must be flat at t = 0 so that smooth Weyl terms vanish".into()),
        );
    }
    let (mode, period, note) = decision_mode(pot, energy, tf, params.period_band);
    let mut notes: Vec<String> = note.into_iter().collect();
    let sweep = h_sweep(pot, energy, tf, &params.h_list, &params.sweep)?;
    let fit = fit_power_log(&sweep)?;
    let mut verdict = match &fit {
        FitOutcome::NumericallyZero { .. } => LevelVerdict::Regular,
        FitOutcome::Fit(f) => {
            let regular = match mode {
                DecisionMode::Strong => f.alpha >= params.regular_slope,
                DecisionMode::Weak => f.alpha >= params.weak_slope,
            };
            if regular {
                LevelVerdict::Regular
            } else if f.residual_rms > params.max_residual {
                notes.push(format!("residual {:.3} exceeds {}", f.residual_rms, params.max_residual));
                LevelVerdict::Inconclusive
            } else {
                LevelVerdict::Critical
            }
        }
    };
    let flat_alpha = fit.fit().map(|f| f.alpha.abs() < 0.1).unwrap_or(false);
    let (mut log_probe, mut probe_sweep) = (None, None);
    if params.log_probe && flat_alpha && pot.dim() % 2 == 1 && verdict != LevelVerdict::Inconclusive {
        let reach = period.map(|t| (0.9 * t).min(1.0)).unwrap_or(1.0);
        let probe = TestFunctionSpec::new(0, -reach, reach, SupportMode::Symmetric).build()?;
        let ps = h_sweep(pot, energy, &probe, &params.h_list, &params.sweep)?;
        let pf = fit_power_log(&ps)?;
        if pf.fit().map(|f| f.log_power == 1).unwrap_or(false) {
            if verdict == LevelVerdict::Regular {
                notes.push("log term found by the probe overrides the weak-mode regular verdict".into());
            }
            verdict = LevelVerdict::Critical;
        }
        log_probe = Some(pf);
        probe_sweep = Some(ps);
    }
    Ok(LevelReport { energy, verdict, mode, period, fit, log_probe, sweep, probe_sweep, notes })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeEstimate {
    pub k: u32,
    pub k_raw: f64,
    pub tolerance: f64,
}

/// k = n / (n + 2α), rounded; rejected when the rounding error exceeds the
/// uncertainty propagated from α.
pub fn infer_degree(alpha: f64, alpha_std: f64, n: u32) -> Result<DegreeEstimate> {
    let nf = n as f64;
    let slack = (3.0 * alpha_std).max(0.05);
    if n == 0 || !alpha.is_finite() || alpha <= -nf / 2.0 || alpha > slack {
        return err(MOD, ErrorKind::Domain(format!("α = {alpha} is outside (-{}, 0] for n = {n}", nf / 2.0)));
    }
    let k_raw = nf / (nf + 2.0 * alpha);
    let dk = 2.0 * nf / (nf + 2.0 * alpha).powi(2);
    let tolerance = (dk * slack).max(1e-6);
    let k = k_raw.round().max(1.0);
    if (k_raw - k).abs() > tolerance {
        return err(
            MOD,
            ErrorKind::NoFit(format!("k = {k_raw:.4} is not within {tolerance:.4} of an integer")),
        );
    }
    Ok(DegreeEstimate { k: k as u32, k_raw, tolerance })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeVerdict {
    Min,
    Max,
    Inconclusive,
}

impl TypeVerdict {
    pub fn critical_type(&self) -> Option<CriticalType> {
        match self {
            TypeVerdict::Min => Some(CriticalType::Min),
            TypeVerdict::Max => Some(CriticalType::Max),
            TypeVerdict::Inconclusive => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            TypeVerdict::Min => "min",
            TypeVerdict::Max => "max",
            TypeVerdict::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeRoute {
    LogTerm,
    Reflection,
    DensitySignature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeEvidence {
    pub verdict: TypeVerdict,
    pub route: TypeRoute,
    /// Υ[φ(-s)] / Υ[φ(s)] at the smallest usable h.
    pub observed_ratio: Option<Complex64>,
    pub predicted_min: Option<Complex64>,
    pub predicted_max: Option<Complex64>,
    pub deviation: Option<f64>,
    pub noise: Option<f64>,
    pub signature: Option<usize>,
    pub notes: Vec<String>,
}

impl TypeEvidence {
    fn simple(verdict: TypeVerdict, route: TypeRoute) -> Self {
        Self {
            verdict,
            route,
            observed_ratio: None,
            predicted_min: None,
            predicted_max: None,
            deviation: None,
            noise: None,
            signature: None,
            notes: Vec::new(),
        }
    }
}

/// Reflection test: a minimum sees φ only through s ≥ 0, so the response
/// ratio between φ(-s) and φ(s) must match the ratio of the one-sided
/// Mellin functionals.
pub fn reflection_test(
    pot: &Potential,
    e_c: f64,
    k: u32,
    tf: &TestFunction,
    params: &ClassifyParams,
) -> Result<TypeEvidence> {
    let n = pot.dim() as u32;
    let refl = tf.reflected();
    let spectra = sweep_spectra(pot, e_c, tf.s_max(), &params.h_list, &params.sweep)?;
    let a = sweep_from_spectra(e_c, tf, &params.h_list, &spectra);
    let b = sweep_from_spectra(e_c, &refl, &params.h_list, &spectra);
    let ratios: Vec<Complex64> = a
        .points
        .iter()
        .zip(&b.points)
        .filter(|(p, q)| {
            !p.flagged()
                && !q.flagged()
                && p.value.norm() > 10.0 * p.tail_bound
                && q.value.norm() > 10.0 * q.tail_bound
        })
        .map(|(p, q)| q.value / p.value)
        .collect();
    if ratios.len() < 3 {
        let mut ev = TypeEvidence::simple(TypeVerdict::Inconclusive, TypeRoute::Reflection);
        ev.notes.push(format!("only {} h points rise above the tail bounds", ratios.len()));
        return Ok(ev);
    }
    let pred_min = min_functional(&refl, n, k)? / min_functional(tf, n, k)?;
    let pred_max = if n.is_multiple_of(2) {
        // only the t_- part survives in even dimension
        let (_, im) = max_functionals(tf, n, k)?;
        let (_, im_r) = max_functionals(&refl, n, k)?;
        Some(im_r / im)
    } else {
        None
    };
    let observed = *ratios.last().expect("nonempty");
    let tail = &ratios[ratios.len() / 2..];
    let mean: Complex64 = tail.iter().sum::<Complex64>() / tail.len() as f64;
    let noise = (tail.iter().map(|r| (r - mean).norm_sqr()).sum::<f64>() / tail.len() as f64).sqrt()
        / pred_min.norm().max(1e-300);
    let tol = 3.0 * noise + 0.05;
    let d_min = (observed - pred_min).norm() / pred_min.norm();
    let mut ev = TypeEvidence::simple(TypeVerdict::Inconclusive, TypeRoute::Reflection);
    ev.observed_ratio = Some(observed);
    ev.predicted_min = Some(pred_min);
    ev.predicted_max = pred_max;
    ev.deviation = Some(d_min);
    ev.noise = Some(noise);
    if let Some(pm) = pred_max {
        if (pm - pred_min).norm() / pred_min.norm() < tol {
            ev.notes.push("minimum and maximum predictions are closer than the noise".into());
            return Ok(ev);
        }
    }
    ev.verdict = if d_min <= tol {
        TypeVerdict::Min
    } else if let Some(pm) = pred_max {
        if (observed - pm).norm() / pm.norm() <= tol {
            TypeVerdict::Max
        } else {
            TypeVerdict::Inconclusive
        }
    } else if d_min > 2.0 * tol {
        TypeVerdict::Max
    } else {
        TypeVerdict::Inconclusive
    };
    Ok(ev)
}

/// Min or max at the critical level E_c.
///
/// A log term settles max. For k = 1 the minimum and maximum reflection
/// ratios coincide, so the signature of the recovered Hessian spectrum is
/// used instead (pass the density fit). Otherwise the reflection test runs.
pub fn infer_type(
    pot: &Potential,
    e_c: f64,
    log_power: u32,
    k: u32,
    hessian: Option<&HessianFit>,
    params: &ClassifyParams,
) -> Result<TypeEvidence> {
    if log_power == 1 {
        return Ok(TypeEvidence::simple(TypeVerdict::Max, TypeRoute::LogTerm));
    }
    let n = pot.dim();
    if k == 1 {
        let mut ev = TypeEvidence::simple(TypeVerdict::Inconclusive, TypeRoute::DensitySignature);
        match hessian {
            Some(hf) => {
                ev.signature = Some(hf.signature);
                ev.verdict = if hf.signature == 0 {
                    TypeVerdict::Min
                } else if hf.signature == n {
                    TypeVerdict::Max
                } else {
                    ev.notes.push(format!("mixed signature r = {} is not an extremum", hf.signature));
                    TypeVerdict::Inconclusive
                };
            }
            None => ev.notes.push("no density samples for a nondegenerate level".into()),
        }
        return Ok(ev);
    }
    reflection_test(pot, e_c, k, &default_probe()?, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRatio {
    /// C_a / C_b under a shared exponent.
    pub ratio: f64,
    pub alpha_a: f64,
    pub alpha_b: f64,
    /// Relative spread of the per-h ratios.
    pub spread: f64,
    pub points: usize,
}

/// Ratio of leading amplitudes at two critical levels of the same class;
/// the universal constants and the φ-functional cancel, leaving A(V_a)/A(V_b).
pub fn recover_spherical_mean_ratio(
    pot_a: &Potential,
    e_a: f64,
    pot_b: &Potential,
    e_b: f64,
    tf: &TestFunction,
    params: &ClassifyParams,
) -> Result<AmplitudeRatio> {
    let ia = pot_a.critical_point_at(e_a, 1e-6)?;
    let ib = pot_b.critical_point_at(e_b, 1e-6)?;
    if ia.dim() != ib.dim() || ia.k != ib.k || ia.extremum != ib.extremum {
        return err(
            MOD,
            ErrorKind::Precondition(format!(
                "critical points differ: (n, k, type) = ({}, {}, {:?}) vs ({}, {}, {:?})",
                ia.dim(),
                ia.k,
                ia.extremum,
                ib.dim(),
                ib.k,
                ib.extremum
            )),
        );
    }
    let sa = h_sweep(pot_a, e_a, tf, &params.h_list, &params.sweep)?;
    let sb = h_sweep(pot_b, e_b, tf, &params.h_list, &params.sweep)?;
    let fa = fit_power_log(&sa)?;
    let fb = fit_power_log(&sb)?;
    let (Some(fa), Some(fb)) = (fa.fit(), fb.fit()) else {
        return err(MOD, ErrorKind::NoFit("one of the sweeps is numerically zero".into()));
    };
    let logs: Vec<f64> = sa
        .points
        .iter()
        .zip(&sb.points)
        .filter(|(p, q)| {
            !p.flagged() && !q.flagged() && p.value.norm() > p.tail_bound && q.value.norm() > q.tail_bound
        })
        .map(|(p, q)| p.value.norm().ln() - q.value.norm().ln())
        .collect();
    if logs.len() < 3 {
        return err(MOD, ErrorKind::NoFit("fewer than three common usable h points".into()));
    }
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    let spread = (logs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / logs.len() as f64).sqrt();
    Ok(AmplitudeRatio { ratio: mean.exp(), alpha_a: fa.alpha, alpha_b: fb.alpha, spread, points: logs.len() })
}

/// Calibration potential with critical value 0 at the origin and known
/// spherical mean: |x|^{2k} for a minimum, -|x|^{2k} + |x|^{2k+2} for a maximum.
pub fn calibration_potential(n: usize, k: u32, kind: CriticalType) -> Result<(Potential, f64)> {
    if n == 0 || k == 0 {
        return err(MOD, ErrorKind::InvalidArgument("calibration needs n >= 1 and k >= 1".into()));
    }
    let r2 = (0..n).map(|i| Polynomial::coordinate(n, i).pow(2)).fold(Polynomial::zero(n), |a, b| a.add(&b));
    let germ = r2.pow(k);
    let pot = match kind {
        CriticalType::Min => Potential::pure_power(n, 1.0, k)?,
        CriticalType::Max => Potential::polynomial(germ.scale(-1.0).add(&r2.pow(k + 1)))?,
    };
    let a = spherical_mean_of_germ(&germ, k)?;
    Ok((pot, a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DensityParams {
    pub sweep: SweepParams,
    pub h_list: Vec<f64>,
    /// Largest half-width of a bump φ̂_i; narrower near t = 0 and near
    /// singular times, where the density is steep.
    pub half_width: f64,
    pub s_max: f64,
    /// Largest |α| accepted for the constant-in-h sweeps.
    pub max_alpha: f64,
}

impl Default for DensityParams {
    fn default() -> Self {
        Self {
            sweep: SweepParams::default(),
            h_list: geometric_h_list(0.01, 0.0025, 6),
            half_width: 0.3,
            s_max: 600.0,
            max_alpha: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySample {
    pub t: f64,
    pub value: f64,
    /// Phase of Υ at the smallest h.
    pub phase: f64,
    pub alpha: f64,
    pub support: (f64, f64),
}

/// Estimates |det(dΦ_t - I)|^{-1/2} at an equilibrium from the h → 0
/// limit of |Υ| for bumps φ̂_i centered at t_i, divided by |φ_i(0)|.
pub fn density_from_quantum(
    pot: &Potential,
    z0: &[f64],
    e_c: f64,
    centers: &[f64],
    params: &DensityParams,
) -> Result<Vec<DensitySample>> {
    if pot.dim() != 1 || z0.len() != 1 {
        return err(MOD, ErrorKind::DimensionMismatch { expected: 1, got: pot.dim().max(z0.len()) });
    }
    let x0 = z0[0];
    let scale = 1.0 + pot.polynomial_form().max_abs_coeff();
    if pot.deriv1(x0).abs() > 1e-8 * scale {
        return err(MOD, ErrorKind::Precondition(format!("x0 = {x0} is not a critical point")));
    }
    if (pot.value1(x0) - e_c).abs() > 1e-6 * scale {
        return err(MOD, ErrorKind::Precondition(format!("V(x0) = {} differs from E_c = {e_c}", pot.value1(x0))));
    }
    let curv = pot.second1(x0);
    if curv.abs() < 1e-8 * scale {
        return err(MOD, ErrorKind::Precondition("critical point is degenerate".into()));
    }
    // singular times of the linearization: multiples of π/α for an elliptic point
    let spacing = if curv > 0.0 { PI / (curv / 2.0).sqrt() } else { f64::INFINITY };
    let spectra = sweep_spectra(pot, e_c, params.s_max, &params.h_list, &params.sweep)?;
    let mut out = Vec::with_capacity(centers.len());
    for &t in centers {
        if !(t > 0.0 && t.is_finite()) {
            return err(MOD, ErrorKind::InvalidArgument(format!("bump center {t} must be positive")));
        }
        let nearest = if spacing.is_finite() { (t / spacing).round() * spacing } else { 0.0 };
        let dist = (t - nearest).abs().min(t);
        if dist < 0.05 {
            return Err(Error::new(
                MOD,
                ErrorKind::SingularTime { t, detail: format!("within {dist:.3} of a linearized period") },
            ));
        }
        let w = params.half_width.min(0.3 * t).min(0.5 * dist);
        let tf = TestFunctionSpec::new(0, t - w, t + w, SupportMode::OneSided).with_s_max(params.s_max).build()?;
        let sweep = sweep_from_spectra(e_c, &tf, &params.h_list, &spectra);
        let fit = fit_power_only(&sweep_samples(&sweep))?;
        let Some(f) = fit.fit() else {
            return err(MOD, ErrorKind::Pipeline(format!("sweep for the bump at t = {t} is numerically zero")));
        };
        if f.alpha.abs() > params.max_alpha {
            return err(
                MOD,
                ErrorKind::Pipeline(format!("sweep for the bump at t = {t} is not flat: α = {:.3}", f.alpha)),
            );
        }
        let usable: Vec<&crate::specdist::SweepPoint> =
            sweep.points.iter().filter(|p| !p.flagged() && p.value.norm() > p.tail_bound).collect();
        let mean_log = usable.iter().map(|p| p.value.norm().ln()).sum::<f64>() / usable.len() as f64;
        let phase = usable.last().map(|p| p.value.arg()).unwrap_or(0.0);
        out.push(DensitySample {
            t,
            value: mean_log.exp() / tf.eval(0.0).norm(),
            phase,
            alpha: f.alpha,
            support: (t - w, t + w),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianFit {
    /// Hyperbolic rates first, then elliptic ones.
    pub alphas: Vec<f64>,
    /// Number of hyperbolic (negative Hessian) directions.
    pub signature: usize,
    pub log_amplitude: f64,
    pub residual_rms: f64,
    pub hessian_eigenvalues: Vec<f64>,
}

impl HessianFit {
    pub fn directions(&self) -> Vec<(f64, Direction)> {
        self.alphas
            .iter()
            .enumerate()
            .map(|(j, &a)| (a, if j < self.signature { Direction::Hyperbolic } else { Direction::Elliptic }))
            .collect()
    }
}

/// Residual threshold (log scale) above which no product model is accepted.
pub const HESSIAN_MAX_RESIDUAL: f64 = 0.1;

const LM_STARTS: usize = 12;

fn log_factor(a: f64, t: f64, hyperbolic: bool) -> f64 {
    if hyperbolic {
        (a * t).sinh().abs().ln()
    } else {
        (a * t).sin().abs().ln()
    }
}

/// Residuals y_i - log A + Σ log|f_j(α_j t_i)| with log A profiled out.
fn profiled_sse(ts: &[f64], ys: &[f64], alphas: &[f64], r: usize) -> (f64, f64) {
    let base: Vec<f64> = ts
        .iter()
        .zip(ys)
        .map(|(&t, &y)| y + alphas.iter().enumerate().map(|(j, &a)| log_factor(a, t, j < r)).sum::<f64>())
        .collect();
    let log_a = base.iter().sum::<f64>() / base.len() as f64;
    let sse = base.iter().map(|b| (b - log_a).powi(2)).sum::<f64>();
    (if sse.is_finite() { sse } else { f64::INFINITY }, log_a)
}

/// Nondecreasing index tuples of length `len` over 0..m.
fn nondecreasing(m: usize, len: usize) -> Vec<Vec<usize>> {
    if len == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for tail in nondecreasing(m, len - 1) {
        let start = tail.last().copied().unwrap_or(0);
        for i in start..m {
            let mut v = tail.clone();
            v.push(i);
            out.push(v);
        }
    }
    out
}

fn levenberg_marquardt(ts: &[f64], ys: &[f64], r: usize, start: &[f64]) -> (Vec<f64>, f64, f64) {
    let n = start.len();
    let mut p: Vec<f64> = start.iter().map(|a| a.ln()).collect();
    // equal rates of one kind stay equal under symmetric steps
    for j in 1..n {
        if j != r && p[j] <= p[j - 1] + 1e-9 {
            p[j] = p[j - 1] + 0.05;
        }
    }
    let eval = |p: &[f64]| {
        let al: Vec<f64> = p.iter().map(|v| v.exp()).collect();
        profiled_sse(ts, ys, &al, r)
    };
    let (mut sse, _) = eval(&p);
    let mut lambda = 1e-3;
    for _ in 0..300 {
        // Jacobian of the profiled residuals with respect to log α_j
        let m = ts.len();
        let mut jac = DMatrix::<f64>::zeros(m, n);
        let al: Vec<f64> = p.iter().map(|v| v.exp()).collect();
        for (i, &t) in ts.iter().enumerate() {
            for j in 0..n {
                let x = al[j] * t;
                let d = if j < r { x / x.tanh() } else { x / x.tan() };
                jac[(i, j)] = d;
            }
        }
        for j in 0..n {
            let mean = jac.column(j).sum() / m as f64;
            for i in 0..m {
                jac[(i, j)] -= mean;
            }
        }
        let base: Vec<f64> = ts
            .iter()
            .zip(ys)
            .map(|(&t, &y)| y + al.iter().enumerate().map(|(j, &a)| log_factor(a, t, j < r)).sum::<f64>())
            .collect();
        let mean = base.iter().sum::<f64>() / m as f64;
        let res = DVector::from_iterator(m, base.iter().map(|b| b - mean));
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &res;
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj.clone();
            for j in 0..n {
                a[(j, j)] += lambda * (1.0 + jtj[(j, j)]);
            }
            let Some(step) = a.lu().solve(&(-&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let (s, _) = eval(&trial);
            if s < sse {
                let done = (sse - s) <= 1e-15 * (1.0 + sse);
                p = trial;
                sse = s;
                lambda = (lambda * 0.3).max(1e-12);
                improved = !done;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let al: Vec<f64> = p.iter().map(|v| v.exp()).collect();
    let (sse, log_a) = profiled_sse(ts, ys, &al, r);
    (al, sse, log_a)
}

/// Fits samples of the density to A / |Π_{j<r} sinh(α_j t) Π_{j≥r} sin(α_j t)|
/// over r = 0..=n and α_j > 0.
pub fn recover_hessian_spectrum(samples: &[(f64, f64)], n: usize) -> Result<HessianFit> {
    if n == 0 || n > 4 {
        return err(MOD, ErrorKind::InvalidArgument(format!("dimension {n} is outside 1..=4")));
    }
    if samples.len() < 8 * (n + 1) {
        return err(
            MOD,
            ErrorKind::Precondition(format!("need at least {} samples, got {}", 8 * (n + 1), samples.len())),
        );
    }
    if samples.iter().any(|&(t, v)| !(t > 0.0 && t.is_finite() && v > 0.0 && v.is_finite())) {
        return err(MOD, ErrorKind::InvalidArgument("samples need t > 0 and finite positive values".into()));
    }
    let ts: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let grid_size = match n {
        1 => 80,
        2 => 40,
        3 => 20,
        _ => 12,
    };
    let grid = geometric_h_list(0.05, 20.0, grid_size);
    let mut best: Option<(f64, usize, Vec<f64>, f64)> = None;
    for r in 0..=n {
        // several grid starts: a coarse grid can straddle a zero of sin(α t)
        let mut starts: Vec<(f64, Vec<f64>)> = Vec::new();
        for hyp in nondecreasing(grid_size, r) {
            for ell in nondecreasing(grid_size, n - r) {
                let alphas: Vec<f64> = hyp.iter().chain(&ell).map(|&i| grid[i]).collect();
                let (sse, _) = profiled_sse(&ts, &ys, &alphas, r);
                starts.push((sse, alphas));
            }
        }
        starts.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (_, alphas) in starts.into_iter().take(LM_STARTS) {
            let (al, sse, log_a) = levenberg_marquardt(&ts, &ys, r, &alphas);
            if best.as_ref().is_none_or(|b| sse < b.0) {
                best = Some((sse, r, al, log_a));
            }
        }
    }
    let (sse, r, mut alphas, log_a) = best.expect("at least one signature");
    let rms = (sse / ts.len() as f64).sqrt();
    if !(rms <= HESSIAN_MAX_RESIDUAL) {
        return err(MOD, ErrorKind::NoFit(format!("best product model leaves residual {rms:.3e}")));
    }
    alphas[..r].sort_by(|a, b| a.partial_cmp(b).unwrap());
    alphas[r..].sort_by(|a, b| a.partial_cmp(b).unwrap());
    let fit = HessianFit { alphas, signature: r, log_amplitude: log_a, residual_rms: rms, hessian_eigenvalues: Vec::new() };
    let eig = hessian_from_alphas(&fit.directions());
    Ok(HessianFit { hessian_eigenvalues: eig, ..fit })
}

/// Bump centers for the density route: `count` times spread over
/// (0.35, t_end), with t_end below the first linearized period.
pub fn default_density_centers(pot: &Potential, x0: &[f64], count: usize) -> Vec<f64> {
    let curv = if pot.dim() == 1 { pot.second1(x0[0]) } else { 0.0 };
    let t_end = if curv > 0.0 { (PI / (curv / 2.0).sqrt() - 0.35).min(1.3) } else { 1.2 };
    let t0 = 0.35f64.min(0.5 * t_end);
    (0..count).map(|i| t0 + (t_end - t0) * i as f64 / (count - 1).max(1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InvertParams {
    pub classify: ClassifyParams,
    pub density: DensityParams,
    /// Bump centers for the density route; chosen automatically when empty.
    pub density_times: Vec<f64>,
    /// Recover A(V) against a calibration potential.
    pub calibrate: bool,
}

impl Default for InvertParams {
    fn default() -> Self {
        Self { classify: ClassifyParams::default(), density: DensityParams::default(), density_times: Vec::new(), calibrate: true }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalReport {
    pub energy: f64,
    pub dimension: usize,
    pub location: Option<Vec<f64>>,
    pub verdict: LevelVerdict,
    pub extremum: TypeVerdict,
    pub type_evidence: Option<TypeEvidence>,
    pub k: Option<u32>,
    pub degree: Option<DegreeEstimate>,
    pub alpha: Option<f64>,
    pub alpha_std: Option<f64>,
    pub log_power: u32,
    pub amplitude: Option<f64>,
    /// A(V) = (C / C_cal) A(V_cal).
    pub spherical_mean: Option<f64>,
    pub amplitude_ratio: Option<AmplitudeRatio>,
    pub hessian: Option<HessianFit>,
    pub density_samples: Vec<DensitySample>,
    pub level: LevelReport,
    pub diagnostics: Vec<String>,
}

/// Full local analysis of the level E_c.
pub fn invert(pot: &Potential, e_c: f64, tf: &TestFunction, params: &InvertParams) -> Result<CriticalReport> {
    let n = pot.dim();
    let level = classify_level(pot, e_c, tf, &params.classify)?;
    let mut report = CriticalReport {
        energy: e_c,
        dimension: n,
        location: None,
        verdict: level.verdict,
        extremum: TypeVerdict::Inconclusive,
        type_evidence: None,
        k: None,
        degree: None,
        alpha: level.primary_fit().map(|f| f.alpha),
        alpha_std: level.primary_fit().map(|f| f.alpha_std()),
        log_power: level.log_power(),
        amplitude: level.primary_fit().map(|f| f.amplitude),
        spherical_mean: None,
        amplitude_ratio: None,
        hessian: None,
        density_samples: Vec::new(),
        level: level.clone(),
        diagnostics: level.notes.clone(),
    };
    if level.verdict != LevelVerdict::Critical {
        return Ok(report);
    }
    let fit = *level.primary_fit().expect("critical verdicts carry a fit");
    match infer_degree(fit.alpha, fit.alpha_std(), n as u32) {
        Ok(d) => {
            report.k = Some(d.k);
            report.degree = Some(d);
        }
        Err(e) => {
            report.diagnostics.push(format!("degree: {e}"));
            return Ok(report);
        }
    }
    let k = report.k.expect("set above");
    let location = pot.critical_point_at(e_c, 1e-6).ok().map(|c| c.location);
    report.location = location.clone();
    if k == 1 && n == 1 {
        match &location {
            Some(x0) => {
                let centers = if params.density_times.is_empty() {
                    default_density_centers(pot, x0, 8 * (n + 1))
                } else {
                    params.density_times.clone()
                };
                match density_from_quantum(pot, x0, e_c, &centers, &params.density) {
                    Ok(samples) => {
                        let pairs: Vec<(f64, f64)> = samples.iter().map(|s| (s.t, s.value)).collect();
                        report.density_samples = samples;
                        match recover_hessian_spectrum(&pairs, n) {
                            Ok(h) => report.hessian = Some(h),
                            Err(e) => report.diagnostics.push(format!("hessian: {e}")),
                        }
                    }
                    Err(e) => report.diagnostics.push(format!("density: {e}")),
                }
            }
            None => report.diagnostics.push("no critical point located at this level".into()),
        }
    }
    match infer_type(pot, e_c, report.log_power, k, report.hessian.as_ref(), &params.classify) {
        Ok(ev) => {
            report.extremum = ev.verdict;
            report.type_evidence = Some(ev);
        }
        Err(e) => report.diagnostics.push(format!("type: {e}")),
    }
    if let (Some(kind), true) = (report.extremum.critical_type(), params.calibrate) {
        let expected = classify_singularity(n as u32, k, kind)?;
        if expected.log_power != report.log_power {
            report.diagnostics.push(format!(
                "observed log power {} differs from the predicted {} for this class",
                report.log_power, expected.log_power
            ));
        }
        if n == 1 {
            let run = calibration_potential(n, k, kind).and_then(|(cal, a_cal)| {
                recover_spherical_mean_ratio(pot, e_c, &cal, 0.0, tf, &params.classify).map(|r| (r, a_cal))
            });
            match run {
                Ok((r, a_cal)) => {
                    report.spherical_mean = Some(r.ratio * a_cal);
                    report.amplitude_ratio = Some(r);
                }
                Err(e) => report.diagnostics.push(format!("spherical mean: {e}")),
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectedLevel {
    /// Energy of the scan peak.
    pub scan_energy: f64,
    /// Nearest critical value of V, when one lies within the scan resolution.
    pub critical_value: Option<f64>,
    pub level: LevelReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectReport {
    pub scan: ScanProfile,
    pub levels: Vec<DetectedLevel>,
}

/// E-scan for candidate levels, each snapped to the nearest critical value
/// and classified by an h-sweep.
pub fn detect_levels(
    pot: &Potential,
    energies: &[f64],
    scan_h: f64,
    tf: &TestFunction,
    params: &ClassifyParams,
) -> Result<DetectReport> {
    let scan = e_scan(pot, scan_h, tf, energies, &params.sweep)?;
    let step = if energies.len() > 1 {
        (energies[energies.len() - 1] - energies[0]).abs() / (energies.len() - 1) as f64
    } else {
        0.0
    };
    let reach = (3.0 * step).max(10.0 * scan_h);
    let values: Vec<f64> = pot.find_critical_points(&SeedGrid::default()).iter().map(|c| c.value).collect();
    let mut levels: Vec<DetectedLevel> = Vec::new();
    for e in scan.peak_energies() {
        let snapped = values
            .iter()
            .copied()
            .filter(|v| (v - e).abs() <= reach)
            .min_by(|a, b| (a - e).abs().partial_cmp(&(b - e).abs()).unwrap());
        let target = snapped.unwrap_or(e);
        if levels.iter().any(|l| (l.level.energy - target).abs() < 1e-9) {
            continue;
        }
        let level = classify_level(pot, target, tf, params)?;
        levels.push(DetectedLevel { scan_energy: e, critical_value: snapped, level });
    }
    Ok(DetectReport { scan, levels })
}

/// Human-readable table of critical reports.
pub fn summary_table(reports: &[CriticalReport]) -> String {
    let mut s = format!(
        "{:>10} {:>12} {:>6} {:>3} {:>10} {:>3} {:>12} {:>12} {}\n",
        "E_c", "verdict", "type", "k", "alpha", "m", "A(V)", "hessian", "notes"
    );
    for r in reports {
        let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
        let hess = r
            .hessian
            .as_ref()
            .map(|h| h.hessian_eigenvalues.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(";"))
            .unwrap_or_else(|| "-".into());
        s.push_str(&format!(
            "{:>10.5} {:>12} {:>6} {:>3} {:>10} {:>3} {:>12} {:>12} {}\n",
            r.energy,
            r.verdict.as_str(),
            r.extremum.as_str(),
            r.k.map(|k| k.to_string()).unwrap_or_else(|| "-".into()),
            fmt_opt(r.alpha),
            r.log_power,
            fmt_opt(r.spherical_mean),
            hess,
            r.diagnostics.join("; ")
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synth(f: impl Fn(f64) -> f64) -> Vec<FitSample> {
        default_h_list()
            .into_iter()
            .map(|h| FitSample { h, magnitude: f(h), tail_bound: 0.0, flagged: false })
            .collect()
    }

    #[test]
    fn synthetic_power() {
        let f = fit_samples(&synth(|h| 3.0 * h.powf(-0.25))).unwrap();
        let f = f.fit().unwrap();
        assert_eq!(f.log_power, 0);
        assert!((f.alpha + 0.25).abs() < 1e-6 && (f.amplitude - 3.0).abs() < 1e-6);
    }

    #[test]
    fn synthetic_log() {
        let f = fit_samples(&synth(|h| 2.0 * (1.0 / h).ln())).unwrap();
        let f = f.fit().unwrap();
        assert_eq!(f.log_power, 1);
        assert!(f.alpha.abs() < 1e-3 && (f.amplitude - 2.0).abs() < 1e-3, "{f:?}");
        assert!(f.log_offset.abs() < 1e-3);
    }

    #[test]
    fn precondition_and_zero() {
        let few: Vec<FitSample> = synth(|h| h).into_iter().take(4).collect();
        assert!(fit_samples(&few).is_err());
        let narrow: Vec<FitSample> = geometric_h_list(0.05, 0.03, 8)
            .into_iter()
            .map(|h| FitSample { h, magnitude: h, tail_bound: 0.0, flagged: false })
            .collect();
        assert!(fit_samples(&narrow).is_err());
        let buried = synth(|h| h).into_iter().map(|s| FitSample { tail_bound: 1.0, ..s }).collect::<Vec<_>>();
        assert!(matches!(fit_samples(&buried).unwrap(), FitOutcome::NumericallyZero { .. }));
    }

    #[test]
    fn degrees() {
        assert_eq!(infer_degree(0.0, 0.0, 1).unwrap().k, 1);
        assert_eq!(infer_degree(-0.25, 0.0, 1).unwrap().k, 2);
        assert_eq!(infer_degree(-0.5, 0.0, 2).unwrap().k, 2);
        assert!(infer_degree(-0.5, 0.0, 1).is_err());
        assert!(infer_degree(0.5, 0.01, 1).is_err());
        assert!(infer_degree(-0.9, 0.0, 3).is_err());
    }

    fn product(ts: &[f64], dirs: &[(f64, bool)]) -> Vec<(f64, f64)> {
        ts.iter()
            .map(|&t| {
                let p: f64 = dirs.iter().map(|&(a, hyp)| if hyp { (a * t).sinh() } else { (a * t).sin() }).product();
                (t, 1.0 / p.abs())
            })
            .collect()
    }

    fn times(count: usize, t_end: f64) -> Vec<f64> {
        (1..=count).map(|i| t_end * i as f64 / (count + 1) as f64).collect()
    }

    #[test]
    fn exact_models() {
        let f = recover_hessian_spectrum(&product(&times(16, PI), &[(1.0, false)]), 1).unwrap();
        assert_eq!(f.signature, 0);
        assert!((f.alphas[0] - 1.0).abs() < 1e-6);
        let f = recover_hessian_spectrum(&product(&times(16, 2.0), &[(2.0, true)]), 1).unwrap();
        assert_eq!(f.signature, 1);
        assert!((f.alphas[0] - 2.0).abs() < 1e-6);
        let f = recover_hessian_spectrum(&product(&times(24, PI / 3.0), &[(1.0, true), (3.0, false)]), 2).unwrap();
        assert_eq!(f.signature, 1);
        assert!((f.alphas[0] - 1.0).abs() < 1e-4 && (f.alphas[1] - 3.0).abs() < 1e-4, "{f:?}");
        assert!(recover_hessian_spectrum(&product(&times(4, 1.0), &[(1.0, false)]), 1).is_err());
    }

    #[test]
    fn calibration_means() {
        let (_, a) = calibration_potential(1, 2, CriticalType::Min).unwrap();
        assert!((a - 2.0).abs() < 1e-12);
        let (p, a) = calibration_potential(1, 1, CriticalType::Max).unwrap();
        assert!((a - 2.0).abs() < 1e-12);
        assert!(p.value1(0.5) < 0.0 && p.value1(2.0) > 0.0);
    }
}
