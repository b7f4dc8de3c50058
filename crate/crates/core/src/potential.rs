//! Potentials V on a confinement box, the symbol p(x, xi) = |xi|^2 + V(x),
//! critical points and their homogeneous germs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{err, Error, ErrorKind, Module, Result};
use crate::polynomial::{Polynomial, Term};
use crate::sphere;

const MOD: Module = Module::Potential;

/// Config-level description of a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// V = sum_j c_j x_j^2.
    Harmonic {
        coefficients: Vec<f64>,
        #[serde(default)]
        half_width: Option<f64>,
    },
    /// V = c |x|^{2k}.
    PurePower {
        #[serde(default = "one")]
        dim: usize,
        #[serde(default = "unit")]
        c: f64,
        k: u32,
        #[serde(default)]
        half_width: Option<f64>,
    },
    /// V = (x^2 - 1)^2.
    DoubleWell {
        #[serde(default)]
        half_width: Option<f64>,
    },
    /// V = (x^2 - 1)^2 + epsilon x.
    AsymmetricDoubleWell {
        epsilon: f64,
        #[serde(default)]
        half_width: Option<f64>,
    },
    Polynomial {
        dim: usize,
        terms: Vec<Term>,
        #[serde(default)]
        half_width: Option<f64>,
    },
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Potential> {
        let (pot, hw) = match self {
            PotentialSpec::Harmonic { coefficients, half_width } => {
                (Potential::harmonic(coefficients)?, *half_width)
            }
            PotentialSpec::PurePower { dim, c, k, half_width } => {
                (Potential::pure_power(*dim, *c, *k)?, *half_width)
            }
            PotentialSpec::DoubleWell { half_width } => (Potential::double_well(), *half_width),
            PotentialSpec::AsymmetricDoubleWell { epsilon, half_width } => {
                (Potential::asymmetric_double_well(*epsilon), *half_width)
            }
            PotentialSpec::Polynomial { dim, terms, half_width } => {
                if *dim == 0 {
                    return err(MOD, ErrorKind::InvalidArgument("dimension must be positive".into()));
                }
                if let Some(t) = terms.iter().find(|t| t.powers.len() != *dim) {
                    return err(
                        MOD,
                        ErrorKind::DimensionMismatch { expected: *dim, got: t.powers.len() },
                    );
                }
                (Potential::polynomial(Polynomial::new(*dim, terms.clone()))?, *half_width)
            }
        };
        match hw {
            Some(l) => pot.with_half_width(l),
            None => Ok(pot),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Harmonic,
    PurePower,
    DoubleWell,
    AsymmetricDoubleWell,
    Polynomial,
}

/// A polynomial potential with exact derivatives.
#[derive(Debug, Clone, Serialize)]
pub struct Potential {
    kind: PotentialKind,
    poly: Polynomial,
    #[serde(skip)]
    grad: Vec<Polynomial>,
    #[serde(skip)]
    hess: Vec<Vec<Polynomial>>,
    /// Ascending coefficients in one dimension, for Horner evaluation.
    #[serde(skip)]
    coeffs1: Vec<f64>,
    half_width: f64,
}

impl Potential {
    fn from_poly(kind: PotentialKind, poly: Polynomial, half_width: f64) -> Self {
        let n = poly.dim();
        let grad: Vec<Polynomial> = (0..n).map(|i| poly.partial(i)).collect();
        let hess = (0..n).map(|i| (0..n).map(|j| grad[i].partial(j)).collect()).collect();
        let coeffs1 = if n == 1 {
            let mut c = vec![0.0; poly.degree() as usize + 1];
            for t in poly.terms() {
                c[t.powers[0] as usize] += t.coeff;
            }
            c
        } else {
            Vec::new()
        };
        Self { kind, poly, grad, hess, coeffs1, half_width }
    }

    pub fn harmonic(coefficients: &[f64]) -> Result<Self> {
        let n = coefficients.len();
        if n == 0 {
            return err(MOD, ErrorKind::InvalidArgument("harmonic needs at least one coefficient".into()));
        }
        let terms = coefficients
            .iter()
            .enumerate()
            .map(|(j, &c)| {
                let mut powers = vec![0; n];
                powers[j] = 2;
                Term { coeff: c, powers }
            })
            .collect();
        let cmin = coefficients.iter().fold(f64::INFINITY, |m, c| m.min(c.abs()));
        let l = (8.0 / cmin.max(1e-3).sqrt()).clamp(4.0, 40.0);
        Ok(Self::from_poly(PotentialKind::Harmonic, Polynomial::new(n, terms), l))
    }

    pub fn pure_power(dim: usize, c: f64, k: u32) -> Result<Self> {
        if dim == 0 || k == 0 {
            return err(MOD, ErrorKind::InvalidArgument("pure power needs dim >= 1 and k >= 1".into()));
        }
        let r2 = (0..dim)
            .map(|i| Polynomial::coordinate(dim, i).pow(2))
            .fold(Polynomial::zero(dim), |a, b| a.add(&b));
        Ok(Self::from_poly(PotentialKind::PurePower, r2.pow(k).scale(c), 4.0))
    }

    pub fn double_well() -> Self {
        Self::from_poly(
            PotentialKind::DoubleWell,
            Polynomial::univariate(&[1.0, 0.0, -2.0, 0.0, 1.0]),
            3.0,
        )
    }

    pub fn asymmetric_double_well(epsilon: f64) -> Self {
        Self::from_poly(
            PotentialKind::AsymmetricDoubleWell,
            Polynomial::univariate(&[1.0, epsilon, -2.0, 0.0, 1.0]),
            3.0,
        )
    }

    pub fn polynomial(poly: Polynomial) -> Result<Self> {
        if poly.dim() == 0 {
            return err(MOD, ErrorKind::InvalidArgument("dimension must be positive".into()));
        }
        Ok(Self::from_poly(PotentialKind::Polynomial, poly, 4.0))
    }

    /// Replaces the confinement box [-L, L]^n.
    pub fn with_half_width(mut self, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return err(MOD, ErrorKind::InvalidArgument(format!("box half-width {half_width} must be positive")));
        }
        self.half_width = half_width;
        Ok(self)
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.poly.dim()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn polynomial_form(&self) -> &Polynomial {
        &self.poly
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return err(MOD, ErrorKind::DimensionMismatch { expected: self.dim(), got: len });
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        if self.dim() == 1 {
            return self.value1(x[0]);
        }
        self.poly.eval(x)
    }

    /// V at a point of the line; only valid in one dimension.
    pub fn value1(&self, x: f64) -> f64 {
        self.coeffs1.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// V' in one dimension.
    pub fn deriv1(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (p, c) in self.coeffs1.iter().enumerate().skip(1).rev() {
            acc = acc * x + p as f64 * c;
        }
        acc
    }

    /// V'' in one dimension.
    pub fn second1(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (p, c) in self.coeffs1.iter().enumerate().skip(2).rev() {
            acc = acc * x + (p * (p - 1)) as f64 * c;
        }
        acc
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.grad.iter().map(|g| g.eval(x)).collect()
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        if self.dim() == 1 {
            out[0] = self.deriv1(x[0]);
            return;
        }
        for (o, g) in out.iter_mut().zip(&self.grad) {
            *o = g.eval(x);
        }
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.hess[i][j].eval(x))
    }

    pub fn hessian_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        if n == 1 {
            out[0] = self.second1(x[0]);
            return;
        }
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.hess[i][j].eval(x);
            }
        }
    }

    /// p(x, xi) = |xi|^2 + V(x).
    pub fn symbol_eval(&self, x: &[f64], xi: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        self.check_dim(xi.len())?;
        Ok(xi.iter().map(|v| v * v).sum::<f64>() + self.value(x))
    }

    /// Minimum of V over a uniform grid of the box.
    pub fn grid_minimum(&self, per_axis: usize) -> f64 {
        let mut best = f64::INFINITY;
        for_each_grid_point(self.dim(), per_axis, self.half_width, |x| {
            best = best.min(self.value(x));
        });
        best
    }

    /// Minimum of V over the boundary of the box (in one dimension the two endpoints).
    pub fn boundary_minimum(&self, half_width: f64, per_axis: usize) -> f64 {
        let n = self.dim();
        if n == 1 {
            return self.value1(-half_width).min(self.value1(half_width));
        }
        let mut best = f64::INFINITY;
        for_each_grid_point(n, per_axis, half_width, |x| {
            if x.iter().any(|v| (v.abs() - half_width).abs() < 1e-12 * half_width.max(1.0)) {
                best = best.min(self.value(x));
            }
        });
        best
    }

    /// Newton search for critical points from a uniform seed grid.
    pub fn find_critical_points(&self, seeds: &SeedGrid) -> Vec<CriticalPointInfo> {
        let n = self.dim();
        let mut found: Vec<(Vec<f64>, f64)> = Vec::new();
        let l = self.half_width;
        for_each_grid_point(n, seeds.per_axis, l * seeds.coverage, |x0| {
            if let Some(x) = self.newton(x0, seeds.max_iter) {
                let g = norm(&self.gradient(&x));
                if x.iter().all(|v| v.abs() <= l) {
                    match found.iter_mut().find(|(y, _)| dist(y, &x) < 1e-6) {
                        Some(entry) => {
                            if g < entry.1 {
                                *entry = (x, g);
                            }
                        }
                        None => found.push((x, g)),
                    }
                }
            }
        });
        found.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        found.into_iter().map(|(x, _)| self.analyze_critical_point(&x)).collect()
    }

    fn newton(&self, x0: &[f64], max_iter: usize) -> Option<Vec<f64>> {
        let n = self.dim();
        let mut x = x0.to_vec();
        for _ in 0..max_iter {
            let g = DVector::from_vec(self.gradient(&x));
            if g.iter().all(|v| *v == 0.0) {
                return Some(x);
            }
            let h = self.hessian(&x);
            let svd = h.svd(true, true);
            let step = svd.solve(&g, 1e-14 * svd.singular_values.max().max(1e-300)).ok()?;
            for i in 0..n {
                x[i] -= step[i];
            }
            if !x.iter().all(|v| v.is_finite()) || x.iter().any(|v| v.abs() > 10.0 * self.half_width) {
                return None;
            }
            if step.norm() <= 1e-14 * (1.0 + norm(&x)) {
                break;
            }
        }
        let g = norm(&self.gradient(&x));
        let scale = 1.0 + self.poly.max_abs_coeff();
        (g <= 1e-10 * scale).then_some(x)
    }

    /// Classifies a critical point by its first non-vanishing Taylor block.
    pub fn analyze_critical_point(&self, x0: &[f64]) -> CriticalPointInfo {
        let n = self.dim();
        let shifted = self.poly.shifted(x0);
        let tol = 1e-8 * (1.0 + shifted.max_abs_coeff());
        let hess = self.hessian(x0);
        let eig = SymmetricEigen::new(hess.clone());
        let mut hessian_eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        hessian_eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let value = self.value(x0);
        let max_deg = shifted.degree().max(2);
        let mut degree = 0;
        let mut germ = Polynomial::zero(n);
        for d in 2..=max_deg {
            let block = shifted.homogeneous_part(d).pruned(tol);
            if !block.is_zero() {
                degree = d;
                germ = block;
                break;
            }
        }
        let extremum = if degree == 0 || degree % 2 == 1 {
            Extremum::NonExtremal
        } else if degree == 2 {
            let scale = hessian_eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let small = 1e-8 * scale.max(1e-300);
            if hessian_eigenvalues.iter().all(|&v| v > small) {
                Extremum::Minimum
            } else if hessian_eigenvalues.iter().all(|&v| v < -small) {
                Extremum::Maximum
            } else {
                Extremum::NonExtremal
            }
        } else {
            definiteness(&germ, n)
        };
        CriticalPointInfo {
            location: x0.to_vec(),
            value,
            degree,
            k: degree / 2,
            germ,
            extremum,
            hessian_eigenvalues,
        }
    }

    /// The critical point whose critical value is within `tol` of `energy`.
    pub fn critical_point_at(&self, energy: f64, tol: f64) -> Result<CriticalPointInfo> {
        let pts = self.find_critical_points(&SeedGrid::default());
        let mut hits: Vec<CriticalPointInfo> =
            pts.into_iter().filter(|p| (p.value - energy).abs() <= tol).collect();
        match hits.len() {
            0 => err(MOD, ErrorKind::Precondition(format!("no critical point with critical value {energy}"))),
            1 => Ok(hits.remove(0)),
            _ => {
                let first = &hits[0];
                let same = hits
                    .iter()
                    .all(|p| p.k == first.k && p.extremum == first.extremum && p.dim() == first.dim());
                if same {
                    Ok(hits.remove(0))
                } else {
                    err(
                        MOD,
                        ErrorKind::Precondition(format!(
                            "critical value {energy} is shared by critical points of different types"
                        )),
                    )
                }
            }
        }
    }
}

fn definiteness(germ: &Polynomial, n: usize) -> Extremum {
    let pts = sphere::sample_points(n, 256);
    let vals: Vec<f64> = pts.iter().map(|p| germ.eval(p)).collect();
    if vals.iter().all(|&v| v > 1e-10) {
        Extremum::Minimum
    } else if vals.iter().all(|&v| v < -1e-10) {
        Extremum::Maximum
    } else {
        Extremum::NonExtremal
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub(crate) fn for_each_grid_point<F: FnMut(&[f64])>(n: usize, per_axis: usize, l: f64, mut f: F) {
    let per_axis = per_axis.max(2);
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    loop {
        for i in 0..n {
            x[i] = -l + 2.0 * l * idx[i] as f64 / (per_axis - 1) as f64;
        }
        f(&x);
        let mut i = 0;
        while i < n {
            idx[i] += 1;
            if idx[i] < per_axis {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == n {
            break;
        }
    }
}

/// Seeds for the critical point search: a uniform grid over a fraction of the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedGrid {
    pub per_axis: usize,
    pub coverage: f64,
    pub max_iter: usize,
}

impl Default for SeedGrid {
    fn default() -> Self {
        Self { per_axis: 41, coverage: 1.0, max_iter: 600 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremum {
    Minimum,
    Maximum,
    NonExtremal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPointInfo {
    pub location: Vec<f64>,
    pub value: f64,
    /// Degree 2k of the leading germ, 0 if none was found.
    pub degree: u32,
    pub k: u32,
    pub germ: Polynomial,
    pub extremum: Extremum,
    pub hessian_eigenvalues: Vec<f64>,
}

impl CriticalPointInfo {
    pub fn dim(&self) -> usize {
        self.location.len()
    }
}

/// Default sphere resolution for spherical means.
pub const SPHERE_RESOLUTION: usize = 96;

/// Spherical mean of the leading germ: integral over S^{n-1} of |V_{2k}|^{-n/2k}.
pub fn spherical_mean(info: &CriticalPointInfo) -> Result<f64> {
    if info.extremum == Extremum::NonExtremal {
        return err(MOD, ErrorKind::IndefiniteGerm(format!("germ of degree {} is not definite", info.degree)));
    }
    spherical_mean_of_germ(&info.germ, info.k)
}

/// Spherical mean of a homogeneous germ of degree 2k.
pub fn spherical_mean_of_germ(germ: &Polynomial, k: u32) -> Result<f64> {
    let n = germ.dim();
    if k == 0 {
        return err(MOD, ErrorKind::InvalidArgument("degree must be positive".into()));
    }
    if definiteness(germ, n) == Extremum::NonExtremal {
        return err(MOD, ErrorKind::IndefiniteGerm("germ changes sign on the sphere".into()));
    }
    let expo = -(n as f64) / (2.0 * k as f64);
    let v = sphere::integrate(n, SPHERE_RESOLUTION, |p| germ.eval(p).abs().powf(expo));
    if !v.is_finite() {
        return Err(Error::new(MOD, ErrorKind::NonFinite("spherical mean".into())));
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_values() {
        let h = Potential::harmonic(&[1.0]).unwrap();
        assert_eq!(h.symbol_eval(&[0.0], &[0.0]).unwrap(), 0.0);
        assert_eq!(h.symbol_eval(&[1.0], &[1.0]).unwrap(), 2.0);
        let dw = Potential::double_well();
        assert!((dw.symbol_eval(&[0.0], &[0.5]).unwrap() - 1.25).abs() < 1e-15);
        assert!(h.symbol_eval(&[0.0, 1.0], &[0.0]).is_err());
    }

    #[test]
    fn derivative_paths_agree() {
        let dw = Potential::asymmetric_double_well(0.3);
        for &x in &[-1.7, -0.4, 0.0, 0.9, 2.2] {
            let g = dw.gradient(&[x])[0];
            assert!((g - dw.deriv1(x)).abs() < 1e-12);
            assert!((dw.hessian(&[x])[(0, 0)] - dw.second1(x)).abs() < 1e-12);
            assert!((dw.value(&[x]) - dw.polynomial_form().eval(&[x])).abs() < 1e-12);
        }
    }

    #[test]
    fn harmonic_critical_point() {
        let h = Potential::harmonic(&[1.0]).unwrap();
        let pts = h.find_critical_points(&SeedGrid::default());
        assert_eq!(pts.len(), 1);
        assert!(pts[0].location[0].abs() < 1e-10);
        assert_eq!(pts[0].k, 1);
        assert_eq!(pts[0].extremum, Extremum::Minimum);
    }

    #[test]
    fn double_well_critical_points() {
        let pts = Potential::double_well().find_critical_points(&SeedGrid::default());
        assert_eq!(pts.len(), 3);
        assert!((pts[0].location[0] + 1.0).abs() < 1e-10);
        assert_eq!(pts[0].extremum, Extremum::Minimum);
        assert!(pts[0].value.abs() < 1e-12);
        assert!(pts[1].location[0].abs() < 1e-10);
        assert_eq!(pts[1].extremum, Extremum::Maximum);
        assert!((pts[1].value - 1.0).abs() < 1e-12);
        assert_eq!(pts[1].k, 1);
        assert_eq!(pts[2].extremum, Extremum::Minimum);
    }

    #[test]
    fn quartic_is_degenerate_minimum() {
        let q = Potential::pure_power(1, 1.0, 2).unwrap();
        let pts = q.find_critical_points(&SeedGrid::default());
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].k, 2);
        assert_eq!(pts[0].extremum, Extremum::Minimum);
        assert!(pts[0].value.abs() < 1e-12);
    }

    #[test]
    fn cubic_is_non_extremal() {
        let p = Potential::polynomial(Polynomial::univariate(&[0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0])).unwrap();
        let info = p.analyze_critical_point(&[0.0]);
        assert_eq!(info.degree, 3);
        assert_eq!(info.extremum, Extremum::NonExtremal);
        assert!(spherical_mean(&info).is_err());
    }

    #[test]
    fn saddle_is_non_extremal() {
        let p = Potential::harmonic(&[1.0, -1.0]).unwrap();
        let info = p.analyze_critical_point(&[0.0, 0.0]);
        assert_eq!(info.extremum, Extremum::NonExtremal);
    }

    #[test]
    fn spherical_means_closed_forms() {
        let h = Potential::harmonic(&[1.0]).unwrap().analyze_critical_point(&[0.0]);
        assert!((spherical_mean(&h).unwrap() - 2.0).abs() < 1e-12);
        let q = Potential::pure_power(1, 16.0, 2).unwrap().analyze_critical_point(&[0.0]);
        assert!((spherical_mean(&q).unwrap() - 1.0).abs() < 1e-12);
        let h2 = Potential::harmonic(&[1.0, 1.0]).unwrap().analyze_critical_point(&[0.0, 0.0]);
        assert!((spherical_mean(&h2).unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn anisotropic_quadratic_mean() {
        // integral over the circle of (a cos^2 + b sin^2)^{-1} equals 2 pi / sqrt(ab)
        let (a, b) = (1.0, 9.0);
        let info = Potential::harmonic(&[a, b]).unwrap().analyze_critical_point(&[0.0, 0.0]);
        let want = 2.0 * std::f64::consts::PI / (a * b).sqrt();
        assert!((spherical_mean(&info).unwrap() - want).abs() < 1e-8 * want);
        // n = 3: integral of (Q)^{-3/2} over S^2 equals 4 pi / sqrt(det Q)
        let info = Potential::harmonic(&[1.0, 2.0, 5.0]).unwrap().analyze_critical_point(&[0.0; 3]);
        let want = 4.0 * std::f64::consts::PI / 10f64.sqrt();
        assert!((spherical_mean(&info).unwrap() - want).abs() < 1e-8 * want);
    }

    #[test]
    fn spec_parsing() {
        let s: PotentialSpec = serde_json::from_str(r#"{"kind":"double_well"}"#).unwrap_or_else(|e| panic!("{e}"));
        assert_eq!(s.build().unwrap().kind(), PotentialKind::DoubleWell);
        let s: PotentialSpec =
            serde_json::from_str(r#"{"kind":"polynomial","dim":1,"terms":[{"coeff":1.0,"powers":[2,1]}]}"#).unwrap();
        assert!(s.build().is_err());
    }
}
