//! Hamiltonian flow of p = |xi|^2 + V, its linearization, period bounds and
//! the local density |det(dΦ_t - I)|^{-1/2} at equilibria.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{err, Error, ErrorKind, Module, Result};
use crate::potential::{for_each_grid_point, Potential};

const MOD: Module = Module::Classical;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Self {
        Self { x, xi }
    }

    pub fn rest(x: Vec<f64>) -> Self {
        let n = x.len();
        Self { x, xi: vec![0.0; n] }
    }

    fn check(&self, pot: &Potential) -> Result<()> {
        let n = pot.dim();
        if self.x.len() != n || self.xi.len() != n {
            return err(MOD, ErrorKind::DimensionMismatch { expected: n, got: self.x.len().max(self.xi.len()) });
        }
        if !self.x.iter().chain(&self.xi).all(|v| v.is_finite()) {
            return err(MOD, ErrorKind::InvalidArgument("phase point has non-finite components".into()));
        }
        Ok(())
    }

    pub fn energy(&self, pot: &Potential) -> f64 {
        self.xi.iter().map(|v| v * v).sum::<f64>() + pot.value(&self.x)
    }
}

/// The vector field (∂_xi p, -∂_x p) = (2 xi, -∇V(x)).
pub fn hamiltonian_field(pot: &Potential, z: &PhasePoint) -> Result<Vec<f64>> {
    z.check(pot)?;
    let mut out: Vec<f64> = z.xi.iter().map(|v| 2.0 * v).collect();
    out.extend(pot.gradient(&z.x).iter().map(|g| -g));
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowResult {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    /// dΦ_t at each sample time, if requested.
    #[serde(skip)]
    pub monodromy: Option<Vec<DMatrix<f64>>>,
    pub energies: Vec<f64>,
    pub step: f64,
    /// The trajectory left the confinement box and was cut short.
    pub exited_box: bool,
}

impl FlowResult {
    pub fn final_point(&self) -> &PhasePoint {
        self.points.last().expect("at least the initial point")
    }

    pub fn final_monodromy(&self) -> Option<&DMatrix<f64>> {
        self.monodromy.as_ref().and_then(|m| m.last())
    }

    /// CSV with columns t, x_i, xi_i, energy, det.
    pub fn to_csv(&self) -> String {
        let n = self.points.first().map(|p| p.x.len()).unwrap_or(0);
        let mut s = String::from("t");
        for i in 0..n {
            s.push_str(&format!(",x{i}"));
        }
        for i in 0..n {
            s.push_str(&format!(",xi{i}"));
        }
        s.push_str(",energy,det\n");
        for (i, (t, p)) in self.times.iter().zip(&self.points).enumerate() {
            s.push_str(&format!("{t:.9e}"));
            for v in p.x.iter().chain(&p.xi) {
                s.push_str(&format!(",{v:.12e}"));
            }
            let det = self.monodromy.as_ref().map(|m| m[i].determinant()).unwrap_or(f64::NAN);
            s.push_str(&format!(",{:.12e},{det:.12e}\n", self.energies[i]));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowOptions {
    /// Step as a fraction of the characteristic period.
    pub step_fraction: f64,
    /// Keep every k-th step; the final time is always kept.
    pub sample_every: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { step_fraction: 1e-3, sample_every: 1 }
    }
}

/// 2π/ω where ω^2 = 2 sup ‖d²V‖ over the region reachable at energy `e`
/// (the fastest small oscillation), floored at the free value ω = 2.
pub fn characteristic_period(pot: &Potential, e: f64, x0: &[f64]) -> f64 {
    let n = pot.dim();
    let per_axis = match n {
        1 => 2001,
        2 => 81,
        3 => 25,
        _ => 9,
    };
    let mut hbuf = vec![0.0; n * n];
    pot.hessian_into(x0, &mut hbuf);
    let mut b = spectral_norm(&hbuf, n);
    for_each_grid_point(n, per_axis, pot.half_width(), |x| {
        if pot.value(x) <= e {
            pot.hessian_into(x, &mut hbuf);
            b = b.max(spectral_norm(&hbuf, n));
        }
    });
    let omega = (2.0 * b).sqrt().max(2.0);
    2.0 * PI / omega
}

fn spectral_norm(h: &[f64], n: usize) -> f64 {
    if n == 1 {
        return h[0].abs();
    }
    let m = DMatrix::from_row_slice(n, n, h);
    m.symmetric_eigenvalues().iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

// Fourth-order composition of the kick-drift-kick Verlet step.
const CBRT2: f64 = 1.259_921_049_894_873_2;
const W1: f64 = 1.0 / (2.0 - CBRT2);
const W0: f64 = -CBRT2 / (2.0 - CBRT2);

struct Stepper<'a> {
    pot: &'a Potential,
    n: usize,
    grad: Vec<f64>,
    hess: Vec<f64>,
    tmp: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(pot: &'a Potential) -> Self {
        let n = pot.dim();
        Self { pot, n, grad: vec![0.0; n], hess: vec![0.0; n * n], tmp: vec![0.0; 2 * n * n] }
    }

    /// One Verlet step of length dt; `var` holds the 2n x 2n tangent map,
    /// rows 0..n for δx and n..2n for δxi, row-major.
    fn verlet(&mut self, x: &mut [f64], xi: &mut [f64], var: Option<&mut [f64]>, dt: f64) {
        let n = self.n;
        let cols = 2 * n;
        self.pot.gradient_into(x, &mut self.grad);
        for (p, g) in xi.iter_mut().zip(&self.grad) {
            *p -= 0.5 * dt * g;
        }
        let mut var = var;
        if let Some(v) = var.as_deref_mut() {
            self.pot.hessian_into(x, &mut self.hess);
            kick(v, &self.hess, n, cols, 0.5 * dt, &mut self.tmp);
        }
        for i in 0..n {
            x[i] += 2.0 * dt * xi[i];
        }
        if let Some(v) = var.as_deref_mut() {
            for i in 0..n {
                for c in 0..cols {
                    v[i * cols + c] += 2.0 * dt * v[(n + i) * cols + c];
                }
            }
        }
        self.pot.gradient_into(x, &mut self.grad);
        for (p, g) in xi.iter_mut().zip(&self.grad) {
            *p -= 0.5 * dt * g;
        }
        if let Some(v) = var {
            self.pot.hessian_into(x, &mut self.hess);
            kick(v, &self.hess, n, cols, 0.5 * dt, &mut self.tmp);
        }
    }

    fn step(&mut self, x: &mut [f64], xi: &mut [f64], mut var: Option<&mut [f64]>, dt: f64) {
        self.verlet(x, xi, var.as_deref_mut(), W1 * dt);
        self.verlet(x, xi, var.as_deref_mut(), W0 * dt);
        self.verlet(x, xi, var, W1 * dt);
    }
}

/// δxi -= tau * H δx for every column of the tangent map.
fn kick(v: &mut [f64], hess: &[f64], n: usize, cols: usize, tau: f64, tmp: &mut [f64]) {
    for i in 0..n {
        for c in 0..cols {
            let mut s = 0.0;
            for k in 0..n {
                s += hess[i * n + k] * v[k * cols + c];
            }
            tmp[i * cols + c] = s;
        }
    }
    for i in 0..n {
        for c in 0..cols {
            v[(n + i) * cols + c] -= tau * tmp[i * cols + c];
        }
    }
}

/// Integrates the flow (and optionally its linearization) from z0 to t_end.
pub fn integrate_flow(
    pot: &Potential,
    z0: &PhasePoint,
    t_end: f64,
    with_monodromy: bool,
    opts: &FlowOptions,
) -> Result<FlowResult> {
    z0.check(pot)?;
    if !t_end.is_finite() {
        return err(MOD, ErrorKind::InvalidArgument("final time must be finite".into()));
    }
    if !(opts.step_fraction > 0.0 && opts.step_fraction <= 1e-3) {
        return err(
            MOD,
            ErrorKind::InvalidArgument(format!(
                "step fraction {} exceeds 1e-3 of the characteristic period",
                opts.step_fraction
            )),
        );
    }
    let n = pot.dim();
    let e0 = z0.energy(pot);
    let t_char = characteristic_period(pot, e0, &z0.x);
    let max_dt = opts.step_fraction * t_char;
    let steps = ((t_end.abs() / max_dt).ceil() as usize).max(1);
    let dt = t_end / steps as f64;
    let every = opts.sample_every.max(1);

    let mut x = z0.x.clone();
    let mut xi = z0.xi.clone();
    let mut var = with_monodromy.then(|| {
        let mut v = vec![0.0; 4 * n * n];
        for i in 0..2 * n {
            v[i * 2 * n + i] = 1.0;
        }
        v
    });
    let to_matrix = |v: &[f64]| DMatrix::from_row_slice(2 * n, 2 * n, v);
    let mut out = FlowResult {
        times: vec![0.0],
        points: vec![z0.clone()],
        monodromy: var.as_ref().map(|v| vec![to_matrix(v)]),
        energies: vec![e0],
        step: dt,
        exited_box: false,
    };
    let l = pot.half_width();
    let mut stepper = Stepper::new(pot);
    for k in 1..=steps {
        stepper.step(&mut x, &mut xi, var.as_deref_mut(), dt);
        let outside = x.iter().any(|v| v.abs() > l) || !x.iter().chain(&xi).all(|v| v.is_finite());
        if k % every == 0 || k == steps || outside {
            let p = PhasePoint { x: x.clone(), xi: xi.clone() };
            out.energies.push(p.energy(pot));
            out.times.push(k as f64 * dt);
            out.points.push(p);
            if let (Some(m), Some(v)) = (out.monodromy.as_mut(), var.as_ref()) {
                m.push(to_matrix(v));
            }
        }
        if outside {
            out.exited_box = true;
            break;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeriodBound {
    /// Lower bound 2π/a on the period of every closed orbit in the band.
    pub period: f64,
    /// Lipschitz constant a = max(2, b) of the Hamiltonian field.
    pub lipschitz: f64,
    /// Grid sup b of ‖d²V‖ over the projection of the band.
    pub hessian_sup: f64,
    pub grid_spacing: f64,
}

/// Yorke lower bound on periods of closed orbits with energy in [e_lo, e_hi].
pub fn period_lower_bound(pot: &Potential, e_lo: f64, e_hi: f64) -> Result<PeriodBound> {
    if !(e_lo <= e_hi) {
        return err(MOD, ErrorKind::InvalidArgument(format!("empty energy band [{e_lo}, {e_hi}]")));
    }
    let n = pot.dim();
    let l = pot.half_width();
    if pot.boundary_minimum(l, 64) <= e_hi {
        return err(
            MOD,
            ErrorKind::Domain(format!("sublevel set {{V <= {e_hi}}} is not bounded inside the box")),
        );
    }
    let per_axis = match n {
        1 => 40001,
        2 => 401,
        3 => 61,
        _ => 17,
    };
    let spacing = 2.0 * l / (per_axis - 1) as f64;
    let mut b: f64 = 0.0;
    let mut hbuf = vec![0.0; n * n];
    let mut any = false;
    for_each_grid_point(n, per_axis, l, |x| {
        if pot.value(x) <= e_hi {
            any = true;
            pot.hessian_into(x, &mut hbuf);
            b = b.max(spectral_norm(&hbuf, n));
        }
    });
    if !any {
        // band below the minimum: no orbits at all, the free bound applies
        b = 0.0;
    }
    let a = b.max(2.0);
    Ok(PeriodBound { period: 2.0 * PI / a, lipschitz: a, hessian_sup: b, grid_spacing: spacing })
}

/// Smallest first-return time to the section xi_0 = 0 (upward crossing)
/// among closed orbits on the energy surface, or None.
pub fn minimal_period_search(pot: &Potential, energy: f64) -> Result<Option<f64>> {
    let n = pot.dim();
    let l = pot.half_width();
    let seeds = energy_surface_seeds(pot, energy);
    if seeds.is_empty() {
        return Ok(None);
    }
    let t_char = characteristic_period(pot, energy, &seeds[0].x);
    let dt = 1e-3 * t_char;
    let t_max = 400.0 * t_char;
    let closure_tol = 1e-3 * (1.0 + energy.abs().sqrt());
    let mut best: Option<f64> = None;
    let mut stepper = Stepper::new(pot);
    for z0 in seeds {
        let mut x = z0.x.clone();
        let mut xi = z0.xi.clone();
        let mut t = 0.0;
        let mut first: Option<(f64, PhasePoint)> = None;
        while t < t_max {
            let (x_prev, xi_prev) = (x.clone(), xi.clone());
            stepper.step(&mut x, &mut xi, None, dt);
            if x.iter().any(|v| v.abs() > l) {
                break;
            }
            if xi_prev[0] < 0.0 && xi[0] >= 0.0 {
                // refine the crossing inside this step by bisection on the sub-step length
                let (mut lo, mut hi) = (0.0, dt);
                let mut cross = PhasePoint { x: x.clone(), xi: xi.clone() };
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let (mut xm, mut xim) = (x_prev.clone(), xi_prev.clone());
                    stepper.step(&mut xm, &mut xim, None, mid);
                    if xim[0] < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                        cross = PhasePoint { x: xm, xi: xim };
                    }
                }
                let tc = t + hi;
                match &first {
                    None => first = Some((tc, cross)),
                    Some((t1, z1)) => {
                        let gap = z1
                            .x
                            .iter()
                            .chain(&z1.xi)
                            .zip(cross.x.iter().chain(&cross.xi))
                            .map(|(a, b)| (a - b).powi(2))
                            .sum::<f64>()
                            .sqrt();
                        if n == 1 || gap < closure_tol {
                            let period = tc - t1;
                            best = Some(best.map_or(period, |b: f64| b.min(period)));
                            break;
                        }
                    }
                }
            }
            t += dt;
        }
    }
    Ok(best)
}

/// Shortest period of the one-dimensional flow over energies in [e_lo, e_hi],
/// from T(e) = ∫ dx / sqrt(e - V) over each well of {V < e}. None when no
/// energy in the band carries a closed orbit.
pub fn shortest_period_1d(pot: &Potential, e_lo: f64, e_hi: f64) -> Result<Option<f64>> {
    if pot.dim() != 1 {
        return err(MOD, ErrorKind::DimensionMismatch { expected: 1, got: pot.dim() });
    }
    if !(e_lo <= e_hi) {
        return err(MOD, ErrorKind::InvalidArgument(format!("empty energy band [{e_lo}, {e_hi}]")));
    }
    let l = pot.half_width();
    if pot.value1(-l).min(pot.value1(l)) <= e_hi {
        return err(
            MOD,
            ErrorKind::Domain(format!("sublevel set {{V <= {e_hi}}} is not bounded inside the box")),
        );
    }
    let grid = 8001;
    let xs: Vec<f64> = (0..grid).map(|i| -l + 2.0 * l * i as f64 / (grid - 1) as f64).collect();
    let vs: Vec<f64> = xs.iter().map(|&x| pot.value1(x)).collect();
    let (gx, gw) = crate::quad::gauss_legendre(64);
    let levels = 41;
    let mut best: Option<f64> = None;
    for i in 0..levels {
        let e = if levels == 1 { e_lo } else { e_lo + (e_hi - e_lo) * i as f64 / (levels - 1) as f64 };
        let mut j = 0;
        while j < grid {
            if vs[j] >= e {
                j += 1;
                continue;
            }
            let start = j;
            while j < grid && vs[j] < e {
                j += 1;
            }
            let a = turning_point(pot, e, xs[start - 1], xs[start]);
            let b = turning_point(pot, e, xs[j], xs[j - 1]);
            if let Some(t) = well_period(pot, e, a, b, &gx, &gw) {
                best = Some(best.map_or(t, |v: f64| v.min(t)));
            }
        }
    }
    Ok(best)
}

/// Root of V = e between `outside` (V >= e) and `inside` (V < e).
fn turning_point(pot: &Potential, e: f64, outside: f64, inside: f64) -> f64 {
    let (mut o, mut i) = (outside, inside);
    for _ in 0..80 {
        let m = 0.5 * (o + i);
        if pot.value1(m) < e {
            i = m;
        } else {
            o = m;
        }
    }
    0.5 * (o + i)
}

/// x = c + r sin θ removes the inverse square-root endpoint singularities.
fn well_period(pot: &Potential, e: f64, a: f64, b: f64, gx: &[f64], gw: &[f64]) -> Option<f64> {
    let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
    if !(r > 0.0) {
        return None;
    }
    let panels = 8;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = -0.5 * PI + PI * p as f64 / panels as f64;
        let hi = lo + PI / panels as f64;
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (x, w) in gx.iter().zip(gw) {
            let th = mid + half * x;
            let gap = e - pot.value1(c + r * th.sin());
            if gap <= 0.0 {
                continue;
            }
            total += w * half * r * th.cos() / gap.sqrt();
        }
    }
    Some(total)
}

fn energy_surface_seeds(pot: &Potential, energy: f64) -> Vec<PhasePoint> {
    let n = pot.dim();
    let per_axis = match n {
        1 => 9,
        2 => 5,
        _ => 3,
    };
    let mut seeds = Vec::new();
    for_each_grid_point(n, per_axis, 0.9 * pot.half_width(), |x| {
        let v = pot.value(x);
        if v < energy {
            let mut xi = vec![0.0; n];
            xi[0] = -(energy - v).sqrt();
            seeds.push(PhasePoint { x: x.to_vec(), xi });
        }
    });
    if seeds.is_empty() && n == 1 {
        // fall back to a fine scan for narrow wells
        let l = pot.half_width();
        for i in 0..2001 {
            let x = -l + 2.0 * l * i as f64 / 2000.0;
            let v = pot.value1(x);
            if v < energy {
                seeds.push(PhasePoint { x: vec![x], xi: vec![-(energy - v).sqrt()] });
                break;
            }
        }
    }
    seeds
}

/// |det(dΦ_t(z0) - I)|^{-1/2} at an equilibrium z0, from the variational flow.
pub fn dgu_density(pot: &Potential, z0: &PhasePoint, t: f64) -> Result<f64> {
    z0.check(pot)?;
    let field = hamiltonian_field(pot, z0)?;
    if field.iter().map(|v| v * v).sum::<f64>().sqrt() > 1e-8 {
        return err(MOD, ErrorKind::InvalidArgument("density requires an equilibrium point".into()));
    }
    let flow = integrate_flow(pot, z0, t, true, &FlowOptions::default())?;
    let m = flow.final_monodromy().expect("monodromy requested");
    let dim = m.nrows();
    let det = (m - DMatrix::identity(dim, dim)).determinant();
    if det.abs() < 1e-12 {
        return err(
            MOD,
            ErrorKind::SingularTime { t, detail: "t is a period of the linearized flow".into() },
        );
    }
    Ok(det.abs().powf(-0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Negative Hessian direction: a sinh factor.
    Hyperbolic,
    /// Positive Hessian direction: a sin factor.
    Elliptic,
}

/// 1 / |Π sinh(α_j t) Π sin(α_j t)|.
pub fn closed_form_density(alphas: &[(f64, Direction)], t: f64) -> Result<f64> {
    let mut prod = 1.0;
    for &(a, d) in alphas {
        let f = match d {
            Direction::Hyperbolic => (a * t).sinh(),
            Direction::Elliptic => (a * t).sin(),
        };
        if f.abs() < 1e-14 {
            return err(MOD, ErrorKind::SingularTime { t, detail: format!("factor with α = {a} vanishes") });
        }
        prod *= f;
    }
    Ok(1.0 / prod.abs())
}

/// Frozen map from the variational density to the product formula:
/// for V = Σ c_j x_j^2 the variational density equals
/// `DENSITY_FACTOR^n` times the product formula with α_j = sqrt|c_j|.
pub const DENSITY_FACTOR: f64 = 0.5;

/// Product-formula parameters for a nondegenerate critical point with the
/// given Hessian eigenvalues μ_j (so c_j = μ_j / 2).
pub fn reparametrize(hessian_eigenvalues: &[f64]) -> Vec<(f64, Direction)> {
    hessian_eigenvalues
        .iter()
        .map(|&mu| {
            let d = if mu < 0.0 { Direction::Hyperbolic } else { Direction::Elliptic };
            ((mu.abs() / 2.0).sqrt(), d)
        })
        .collect()
}

/// Inverse of `reparametrize`: Hessian eigenvalues ±2α².
pub fn hessian_from_alphas(alphas: &[(f64, Direction)]) -> Vec<f64> {
    alphas
        .iter()
        .map(|&(a, d)| match d {
            Direction::Hyperbolic => -2.0 * a * a,
            Direction::Elliptic => 2.0 * a * a,
        })
        .collect()
}

/// Variational density predicted by the frozen reparametrization.
pub fn predicted_density(hessian_eigenvalues: &[f64], t: f64) -> Result<f64> {
    let alphas = reparametrize(hessian_eigenvalues);
    Ok(DENSITY_FACTOR.powi(alphas.len() as i32) * closed_form_density(&alphas, t)?)
}

/// Mehler kernel data for frequencies w: the amplitude
/// (Π w_k / (2iπ sin(w_k t)))^{1/2} and the action S(t, x, y).
pub fn mehler_kernel(w: &[f64], t: f64, x: &[f64], y: &[f64]) -> Result<(Complex64, f64)> {
    if x.len() != w.len() || y.len() != w.len() {
        return err(MOD, ErrorKind::DimensionMismatch { expected: w.len(), got: x.len().max(y.len()) });
    }
    let mut amp = Complex64::new(1.0, 0.0);
    let mut action = 0.0;
    for k in 0..w.len() {
        let s = (w[k] * t).sin();
        if s.abs() < 1e-14 {
            return Err(Error::new(MOD, ErrorKind::SingularTime { t, detail: format!("sin(w t) = 0 for w = {}", w[k]) }));
        }
        amp *= (Complex64::new(w[k], 0.0) / Complex64::new(0.0, 2.0 * PI * s)).sqrt();
        action += w[k] / s * (0.5 * (w[k] * t).cos() * (x[k] * x[k] + y[k] * y[k]) - x[k] * y[k]);
    }
    Ok((amp, action))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic() -> Potential {
        Potential::harmonic(&[1.0]).unwrap()
    }

    #[test]
    fn exact_periods() {
        let t = shortest_period_1d(&harmonic(), 0.5, 2.0).unwrap().unwrap();
        assert!((t - PI).abs() < 1e-6, "{t}");
        let dw = Potential::double_well();
        // near the bottom of either well ω² = 2 V'' = 16
        let t = shortest_period_1d(&dw, 1e-4, 0.05).unwrap().unwrap();
        assert!((t - PI / 2.0).abs() < 1e-2, "{t}");
        assert!(shortest_period_1d(&harmonic(), -2.0, -1.0).unwrap().is_none());
        let q = Potential::pure_power(1, 1.0, 2).unwrap();
        let t1 = shortest_period_1d(&q, 1.0, 1.0).unwrap().unwrap();
        let t2 = shortest_period_1d(&q, 16.0, 16.0).unwrap().unwrap();
        assert!((t1 / t2 - 2.0).abs() < 1e-6);
    }

    #[test]
    fn field_values() {
        let h = harmonic();
        assert_eq!(hamiltonian_field(&h, &PhasePoint::new(vec![1.0], vec![0.0])).unwrap(), vec![0.0, -2.0]);
        assert_eq!(hamiltonian_field(&h, &PhasePoint::new(vec![0.0], vec![1.0])).unwrap(), vec![2.0, 0.0]);
        let dw = Potential::double_well();
        let f = hamiltonian_field(&dw, &PhasePoint::rest(vec![0.0])).unwrap();
        assert!(f.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn harmonic_orbit_closes() {
        let r = integrate_flow(&harmonic(), &PhasePoint::new(vec![1.0], vec![0.0]), PI, false, &FlowOptions::default())
            .unwrap();
        let z = r.final_point();
        assert!((z.x[0] - 1.0).abs() < 1e-6 && z.xi[0].abs() < 1e-6);
    }

    #[test]
    fn quarter_period_monodromy_is_rotation() {
        let r = integrate_flow(&harmonic(), &PhasePoint::new(vec![1.0], vec![0.0]), PI / 4.0, true, &FlowOptions::default())
            .unwrap();
        let m = r.final_monodromy().unwrap();
        let want = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!((m - want).amax() < 1e-8, "{m}");
    }

    #[test]
    fn equilibrium_stays_put() {
        let dw = Potential::double_well();
        let r = integrate_flow(&dw, &PhasePoint::rest(vec![1.0]), 5.0, false, &FlowOptions::default()).unwrap();
        assert!(r.points.iter().all(|p| (p.x[0] - 1.0).abs() < 1e-14 && p.xi[0].abs() < 1e-14));
    }

    #[test]
    fn escape_is_flagged() {
        let p = Potential::harmonic(&[-1.0]).unwrap().with_half_width(2.0).unwrap();
        let r = integrate_flow(&p, &PhasePoint::new(vec![0.5], vec![1.0]), 10.0, false, &FlowOptions::default()).unwrap();
        assert!(r.exited_box);
        assert!(*r.times.last().unwrap() < 10.0);
    }

    #[test]
    fn period_bounds() {
        let b = period_lower_bound(&harmonic(), 0.0, 2.0).unwrap();
        assert!((b.period - PI).abs() < 1e-12);
        let q = Potential::pure_power(1, 1.0, 2).unwrap();
        let b = period_lower_bound(&q, 0.0, 1.0).unwrap();
        assert!((b.hessian_sup - 12.0).abs() < 1e-9);
        assert!((b.period - 2.0 * PI / 12.0).abs() < 1e-9);
    }

    #[test]
    fn periods_found() {
        let t = minimal_period_search(&harmonic(), 1.0).unwrap().unwrap();
        assert!((t - PI).abs() < 1e-6, "{t}");
        assert_eq!(minimal_period_search(&harmonic(), -1.0).unwrap(), None);
        let q = Potential::pure_power(1, 1.0, 2).unwrap();
        let t = minimal_period_search(&q, 1.0).unwrap().unwrap();
        assert!(t >= 2.0 * PI / 12.0);
    }

    #[test]
    fn harmonic_density() {
        let d = dgu_density(&harmonic(), &PhasePoint::rest(vec![0.0]), PI / 4.0).unwrap();
        assert!((d - 0.5f64.sqrt()).abs() < 1e-9);
        let e = dgu_density(&harmonic(), &PhasePoint::rest(vec![0.0]), PI).unwrap_err();
        assert!(matches!(e.kind, ErrorKind::SingularTime { .. }));
    }

    #[test]
    fn barrier_density_decreases() {
        let dw = Potential::double_well();
        let z = PhasePoint::rest(vec![0.0]);
        let vals: Vec<f64> = [0.2, 0.5, 1.0, 1.5].iter().map(|&t| dgu_density(&dw, &z, t).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn closed_forms() {
        assert!((closed_form_density(&[(1.0, Direction::Elliptic)], PI / 2.0).unwrap() - 1.0).abs() < 1e-15);
        let v = closed_form_density(&[(1.0, Direction::Hyperbolic)], 1.0).unwrap();
        assert!((v - 0.850_918_128_239_321_5).abs() < 1e-12);
        let v = closed_form_density(&[(1.0, Direction::Hyperbolic), (1.0, Direction::Elliptic)], 1.0).unwrap();
        assert!((v - 1.0 / (1f64.sinh() * 1f64.sin())).abs() < 1e-12);
        assert!(closed_form_density(&[(1.0, Direction::Elliptic)], PI).is_err());
    }

    #[test]
    fn mehler() {
        let (_, s) = mehler_kernel(&[1.0], PI / 2.0, &[1.0], &[1.0]).unwrap();
        assert!((s + 1.0).abs() < 1e-15);
        let (_, s) = mehler_kernel(&[1.0], 1e-4, &[0.7], &[0.7]).unwrap();
        assert!(s.abs() < 1e-4);
        let (_, s) = mehler_kernel(&[1.0], 1e-3, &[0.7], &[0.2]).unwrap();
        assert!((s - 0.25 / 2e-3).abs() < 1.0);
        assert!(mehler_kernel(&[1.0], PI, &[0.0], &[0.0]).is_err());
    }
}
