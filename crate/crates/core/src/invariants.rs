//! Closed forms for the contributions of critical levels: exponents, log
//! powers and the test-function functionals that multiply them.

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;

use crate::error::{err, ErrorKind, Module, Result};
use crate::potential::Extremum;
use crate::quad::gauss_legendre;
use crate::testfn::TestFunction;

const MOD: Module = Module::Invariants;

pub type Fraction = Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalType {
    Min,
    Max,
}

impl CriticalType {
    pub fn from_extremum(e: Extremum) -> Option<Self> {
        match e {
            Extremum::Minimum => Some(CriticalType::Min),
            Extremum::Maximum => Some(CriticalType::Max),
            Extremum::NonExtremal => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CriticalType::Min => "min",
            CriticalType::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseTag {
    Minimum,
    MaxGeneric,
    MaxLog,
    MaxEvenInteger,
}

impl CaseTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseTag::Minimum => "minimum",
            CaseTag::MaxGeneric => "max-generic",
            CaseTag::MaxLog => "max-log",
            CaseTag::MaxEvenInteger => "max-even-integer",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingularityClass {
    pub n: u32,
    pub k: u32,
    pub kind: CriticalType,
    /// Power of h in the leading term, n/(2k) - n/2.
    pub exponent: Fraction,
    /// Power of log(1/h).
    pub log_power: u32,
    pub case: CaseTag,
}

impl SingularityClass {
    pub fn alpha(&self) -> f64 {
        to_f64(self.exponent)
    }

    /// γ = n(k+1)/(2k), the homogeneity of the local volume near the level.
    pub fn gamma(&self) -> Fraction {
        gamma(self.n, self.k)
    }
}

pub fn to_f64(r: Fraction) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn gamma(n: u32, k: u32) -> Fraction {
    Fraction::new(n as i64 * (k as i64 + 1), 2 * k as i64)
}

/// n/(2k) - n/2 as a reduced fraction.
pub fn exponent(n: u32, k: u32) -> Fraction {
    Fraction::new(n as i64, 2 * k as i64) - Fraction::new(n as i64, 2)
}

pub fn classify_singularity(n: u32, k: u32, kind: CriticalType) -> Result<SingularityClass> {
    if n == 0 || k == 0 {
        return err(MOD, ErrorKind::InvalidArgument(format!("need n >= 1 and k >= 1, got n = {n}, k = {k}")));
    }
    let (log_power, case) = match kind {
        CriticalType::Min => (0, CaseTag::Minimum),
        CriticalType::Max => {
            if gamma(n, k).is_integer() {
                if n % 2 == 1 {
                    (1, CaseTag::MaxLog)
                } else {
                    (0, CaseTag::MaxEvenInteger)
                }
            } else {
                (0, CaseTag::MaxGeneric)
            }
        }
    };
    Ok(SingularityClass { n, k, kind, exponent: exponent(n, k), log_power, case })
}

/// Upper end of the Mellin integrals; beyond it φ is below its tail bound.
fn mellin_cutoff(tf: &TestFunction) -> f64 {
    tf.s_max()
}

/// ∫_0^∞ φ(sign s) s^{β-1} ds for rational β > 0.
///
/// Near 0 the substitution s = u^d (d the denominator of β) turns the
/// integrand into d u^{p-1} φ(u^d), which is smooth.
pub fn mellin_moment(tf: &TestFunction, beta: Fraction, sign: f64) -> Result<Complex64> {
    if *beta.numer() <= 0 {
        return err(MOD, ErrorKind::InvalidArgument(format!("Mellin exponent must be positive, got {beta}")));
    }
    let (p, d) = (*beta.numer(), *beta.denom());
    let (gx, gw) = gauss_legendre(16);
    let nodes: Vec<(f64, f64)> = gx.into_iter().zip(gw).collect();
    let mut total = Complex64::new(0.0, 0.0);
    let panels = 16;
    for j in 0..panels {
        let (a, b) = (j as f64 / panels as f64, (j + 1) as f64 / panels as f64);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for &(x, w) in &nodes {
            let u = mid + half * x;
            let s = u.powi(d as i32);
            total += w * half * d as f64 * u.powi(p as i32 - 1) * tf.eval(sign * s);
        }
    }
    let expo = to_f64(beta) - 1.0;
    let top = mellin_cutoff(tf);
    let width = 0.25;
    let count = ((top - 1.0) / width).ceil() as usize;
    let width = (top - 1.0) / count as f64;
    for j in 0..count {
        let a = 1.0 + j as f64 * width;
        let mid = a + 0.5 * width;
        for &(x, w) in &nodes {
            let s = mid + 0.5 * width * x;
            total += w * 0.5 * width * s.powf(expo) * tf.eval(sign * s);
        }
    }
    Ok(total)
}

/// ∫∫_{u,v > 0} φ(u² + v^{2k}) u^{n-1} v^{n-1} du dv.
///
/// With a = u², b = v^{2k} this is (1/4k) B(n/2, n/2k) ∫_0^∞ φ(s) s^{β-1} ds
/// with β = n/2 + n/(2k).
pub fn min_functional(tf: &TestFunction, n: u32, k: u32) -> Result<Complex64> {
    if n == 0 || k == 0 {
        return err(MOD, ErrorKind::InvalidArgument(format!("need n >= 1 and k >= 1, got n = {n}, k = {k}")));
    }
    let (nf, kf) = (n as f64, k as f64);
    let b = beta(nf / 2.0, nf / (2.0 * kf));
    let m = mellin_moment(tf, gamma(n, k), 1.0)?;
    Ok(m * b / (4.0 * kf))
}

/// (∫ t_+^{γ-1} φ, ∫ t_-^{γ-1} φ) with γ = n(k+1)/(2k).
pub fn max_functionals(tf: &TestFunction, n: u32, k: u32) -> Result<(Complex64, Complex64)> {
    if n == 0 || k == 0 {
        return err(MOD, ErrorKind::InvalidArgument(format!("need n >= 1 and k >= 1, got n = {n}, k = {k}")));
    }
    let g = gamma(n, k);
    if *g.numer() <= 0 {
        return err(MOD, ErrorKind::Domain(format!("γ = {g} must be positive")));
    }
    Ok((mellin_moment(tf, g, 1.0)?, mellin_moment(tf, g, -1.0)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PseudoInvariant {
    /// 2n/k - n.
    pub exponent: Fraction,
    pub functional: Complex64,
}

/// Leading term for a germ of even degree k > 2 with subprincipal value
/// `p1_shift` at the critical point: (1/k) ∫ φ(t + p1) t_±^{(2n-k)/k} dt,
/// t_+ at a minimum and t_- at a maximum.
pub fn pseudo_invariant(
    n: u32,
    k: u32,
    tf: &TestFunction,
    p1_shift: f64,
    kind: CriticalType,
) -> Result<PseudoInvariant> {
    if n == 0 {
        return err(MOD, ErrorKind::InvalidArgument("dimension must be at least 1".into()));
    }
    if k <= 2 || k % 2 == 1 {
        return err(MOD, ErrorKind::InvalidArgument(format!("degree must be even and larger than 2, got {k}")));
    }
    let shifted = subprincipal_shift_hook(tf, p1_shift);
    let beta = Fraction::new(2 * n as i64, k as i64);
    let sign = match kind {
        CriticalType::Min => 1.0,
        CriticalType::Max => -1.0,
    };
    let m = mellin_moment(&shifted, beta, sign)?;
    Ok(PseudoInvariant { exponent: beta - Fraction::from_integer(n as i64), functional: m / k as f64 })
}

/// φ(t) ↦ φ(t + p1).
pub fn subprincipal_shift_hook(tf: &TestFunction, p1_at_z0: f64) -> TestFunction {
    if p1_at_z0 == 0.0 {
        return tf.clone();
    }
    tf.shifted(p1_at_z0)
}

/// Exponent and log-power table over n = 1..=n_max, k = 1..=k_max.
pub fn exponent_table(n_max: u32, k_max: u32) -> Vec<(SingularityClass, SingularityClass)> {
    let mut rows = Vec::new();
    for n in 1..=n_max {
        for k in 1..=k_max {
            let lo = classify_singularity(n, k, CriticalType::Min).expect("n, k >= 1");
            let hi = classify_singularity(n, k, CriticalType::Max).expect("n, k >= 1");
            rows.push((lo, hi));
        }
    }
    rows
}

pub fn exponent_table_csv(n_max: u32, k_max: u32) -> String {
    let mut s = String::from("n,k,alpha,alpha_fraction,gamma,log_power_min,log_power_max,case_max\n");
    for (lo, hi) in exponent_table(n_max, k_max) {
        s.push_str(&format!(
            "{},{},{:.12},{},{},{},{},{}\n",
            lo.n,
            lo.k,
            lo.alpha(),
            lo.exponent,
            lo.gamma(),
            lo.log_power,
            hi.log_power,
            hi.case.as_str()
        ));
    }
    s
}
