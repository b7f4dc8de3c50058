//! Finite-difference discretization of P_h = -h^2 d^2/dx^2 + V on [-L, L]
//! with Dirichlet walls, windowed eigenvalues by Sturm bisection, counting
//! functions and phase-space volumes.

use serde::{Deserialize, Serialize};

use crate::error::{err, Error, ErrorKind, Module, Result};
use crate::potential::Potential;
use crate::quad::gauss_legendre_on;

const MOD: Module = Module::Quantum1d;

/// Minimum grid points per h: the resolution rule dx <= h / 10.
pub const MIN_POINTS_PER_H: f64 = 10.0;

#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub h: f64,
    pub half_width: f64,
    pub n_points: usize,
    pub dx: f64,
    /// 2h^2/dx^2 + V(x_i) at interior nodes.
    pub diag: Vec<f64>,
    /// Constant off-diagonal -h^2/dx^2.
    pub off: f64,
    pot: Potential,
}

/// The spectral window J(eps) = [e1 - eps, e2 + eps].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub e1: f64,
    pub e2: f64,
    pub eps: f64,
}

impl Window {
    pub fn new(e1: f64, e2: f64, eps: f64) -> Result<Self> {
        if !(e1 <= e2) || !(eps >= 0.0) || !e1.is_finite() || !e2.is_finite() || !eps.is_finite() {
            return err(MOD, ErrorKind::InvalidArgument(format!("bad window [{e1}, {e2}] with eps {eps}")));
        }
        Ok(Self { e1, e2, eps })
    }

    /// Window with the default margin eps = 0.1 (e2 - e1).
    pub fn with_default_eps(e1: f64, e2: f64) -> Result<Self> {
        Self::new(e1, e2, 0.1 * (e2 - e1))
    }

    pub fn lo(&self) -> f64 {
        self.e1 - self.eps
    }

    pub fn hi(&self) -> f64 {
        self.e2 + self.eps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    /// Grid points per h at unit momentum; the spacing is
    /// h / (points_per_h * max(1, p_max)) where p_max is the largest
    /// classical momentum in the window.
    pub points_per_h: f64,
    /// Required ratio (V(±L) - min V) / (e2 + 2 eps - min V).
    pub wall_factor: f64,
    pub bisection_tol: f64,
    pub richardson: bool,
    /// Minimum tunneling action ∫ sqrt(V - top)/h dx between the last
    /// turning point and each wall.
    pub agmon_action: f64,
    /// Fixed box half-width instead of the automatic choice.
    pub half_width: Option<f64>,
    /// Fixed number of interior points instead of the automatic choice.
    pub n_points: Option<usize>,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            points_per_h: 10.0,
            wall_factor: 2.0,
            bisection_tol: 1e-12,
            richardson: true,
            agmon_action: 20.0,
            half_width: None,
            n_points: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridInfo {
    pub half_width: f64,
    pub n_points: usize,
    pub dx: f64,
    pub richardson: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    pub h: f64,
    pub window: Window,
    /// Sorted eigenvalues inside the window.
    pub eigenvalues: Vec<f64>,
    /// Global index of each eigenvalue (0 = ground state).
    pub indices: Vec<usize>,
    /// |lambda(N) - lambda(2N)| per eigenvalue, or the bisection width without refinement.
    pub convergence: Vec<f64>,
    /// Number of eigenvalues below the window.
    pub below_window: usize,
    pub grid: GridInfo,
}

impl Spectrum {
    pub fn empty(h: f64, window: Window, grid: GridInfo) -> Self {
        Self {
            h,
            window,
            eigenvalues: Vec::new(),
            indices: Vec::new(),
            convergence: Vec::new(),
            below_window: 0,
            grid,
        }
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// CSV with header `j,lambda,convergence`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("j,lambda,convergence\n");
        for ((j, l), c) in self.indices.iter().zip(&self.eigenvalues).zip(&self.convergence) {
            s.push_str(&format!("{j},{l:.15e},{c:.3e}\n"));
        }
        s
    }
}

/// Builds the tridiagonal operator on N interior nodes of [-L, L].
pub fn discretize(pot: &Potential, h: f64, half_width: f64, n_points: usize) -> Result<DiscretizedOperator> {
    if pot.dim() != 1 {
        return err(MOD, ErrorKind::DimensionMismatch { expected: 1, got: pot.dim() });
    }
    if !(h > 0.0) {
        return err(MOD, ErrorKind::InvalidArgument(format!("h = {h} must be positive")));
    }
    if !(half_width > 0.0) {
        return err(MOD, ErrorKind::InvalidArgument(format!("L = {half_width} must be positive")));
    }
    let needed = 2.0 * half_width / (h / MIN_POINTS_PER_H);
    if (n_points as f64) < needed {
        return err(
            MOD,
            ErrorKind::Resolution(format!("N = {n_points} but dx <= h/10 needs N >= {}", needed.ceil())),
        );
    }
    let dx = 2.0 * half_width / (n_points + 1) as f64;
    let kin = h * h / (dx * dx);
    let diag = (1..=n_points)
        .map(|i| 2.0 * kin + pot.value1(-half_width + i as f64 * dx))
        .collect();
    Ok(DiscretizedOperator { h, half_width, n_points, dx, diag, off: -kin, pot: pot.clone() })
}

impl DiscretizedOperator {
    /// Checks that the walls sit well above the window.
    pub fn check_window(&self, window: &Window) -> Result<()> {
        let wall = self.pot.value1(-self.half_width).min(self.pot.value1(self.half_width));
        let need = window.e2 + 2.0 * window.eps;
        if wall < need {
            return err(
                MOD,
                ErrorKind::Domain(format!(
                    "V(±L) = {wall} is below e2 + 2 eps = {need}; enlarge L = {}",
                    self.half_width
                )),
            );
        }
        Ok(())
    }

    /// Same box with spacing halved.
    pub fn refined(&self) -> DiscretizedOperator {
        discretize(&self.pot, self.h, self.half_width, 2 * self.n_points + 1).expect("refinement keeps the rule")
    }

    /// Number of eigenvalues strictly below `lambda`.
    pub fn count_below(&self, lambda: f64) -> usize {
        sturm_count(&self.diag, self.off * self.off, lambda)
    }

    /// Sturm counts for many shifts at once.
    pub fn count_below_many(&self, lambdas: &[f64]) -> Vec<usize> {
        let off2 = self.off * self.off;
        let run = |chunk: &[f64]| -> Vec<usize> {
            let mut out = Vec::with_capacity(chunk.len());
            for c in chunk.chunks(LANES) {
                let mut lam = [0.0; LANES];
                lam[..c.len()].copy_from_slice(c);
                let counts = sturm_count_lanes(&self.diag, off2, &lam);
                out.extend_from_slice(&counts[..c.len()]);
            }
            out
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if lambdas.len() >= 4 * LANES && rayon::current_num_threads() > 1 {
                let per = lambdas.len().div_ceil(rayon::current_num_threads()).next_multiple_of(LANES);
                return lambdas.par_chunks(per).flat_map_iter(run).collect();
            }
        }
        run(lambdas)
    }

    fn gershgorin(&self) -> (f64, f64) {
        let r = 2.0 * self.off.abs();
        let lo = self.diag.iter().fold(f64::INFINITY, |m, d| m.min(*d)) - r;
        let hi = self.diag.iter().fold(f64::NEG_INFINITY, |m, d| m.max(*d)) + r;
        (lo - 1e-9 * (1.0 + lo.abs()), hi + 1e-9 * (1.0 + hi.abs()))
    }

    /// Eigenvalues with global indices in [first, last), by bisection.
    pub fn eigenvalues_by_index(&self, first: usize, last: usize, tol: f64) -> Vec<f64> {
        let last = last.min(self.n_points);
        if first >= last {
            return Vec::new();
        }
        let (glo, ghi) = self.gershgorin();
        self.bisect(vec![Bracket { a: glo, b: ghi, ca: 0, cb: self.n_points }], first, last, tol)
    }

    /// Refines brackets until every wanted eigenvalue is pinned to `tol`.
    /// All midpoints of a round are counted in one batched pass.
    fn bisect(&self, start: Vec<Bracket>, first: usize, last: usize, tol: f64) -> Vec<f64> {
        let width_ok = |b: &Bracket| b.b - b.a <= tol.max(4.0 * f64::EPSILON * b.a.abs().max(b.b.abs()));
        let mut done: Vec<Bracket> = Vec::new();
        let mut active: Vec<Bracket> = start;
        while !active.is_empty() {
            let mut next = Vec::with_capacity(active.len());
            for br in active.drain(..) {
                if br.ca.max(first) >= br.cb.min(last) {
                    continue;
                }
                if width_ok(&br) {
                    done.push(br);
                } else {
                    next.push(br);
                }
            }
            if next.is_empty() {
                break;
            }
            let mids: Vec<f64> = next.iter().map(|b| 0.5 * (b.a + b.b)).collect();
            let counts = self.count_below_many(&mids);
            for ((br, m), cm) in next.into_iter().zip(mids).zip(counts) {
                let cm = cm.clamp(br.ca, br.cb);
                active.push(Bracket { a: br.a, b: m, ca: br.ca, cb: cm });
                active.push(Bracket { a: m, b: br.b, ca: cm, cb: br.cb });
            }
        }
        done.sort_by(|x, y| x.a.partial_cmp(&y.a).unwrap());
        let mut out = Vec::with_capacity(last - first);
        for br in done {
            let mid = 0.5 * (br.a + br.b);
            for _ in br.ca.max(first)..br.cb.min(last) {
                out.push(mid);
            }
        }
        out
    }

    /// Eigenvalues with indices first.. near the guesses; brackets of half the
    /// local gap are verified by counting and the global search is the fallback.
    fn eigenvalues_near(&self, first: usize, guesses: &[f64], tol: f64) -> Vec<f64> {
        let n = guesses.len();
        if n == 0 {
            return Vec::new();
        }
        let mut ends = Vec::with_capacity(2 * n);
        for i in 0..n {
            let left = if i > 0 { guesses[i] - guesses[i - 1] } else { f64::INFINITY };
            let right = if i + 1 < n { guesses[i + 1] - guesses[i] } else { f64::INFINITY };
            let mut gap = left.min(right);
            if !gap.is_finite() {
                gap = 1e-3 * (1.0 + guesses[i].abs());
            }
            ends.push(guesses[i] - 0.5 * gap);
            ends.push(guesses[i] + 0.5 * gap);
        }
        let counts = self.count_below_many(&ends);
        let mut brackets = Vec::with_capacity(n);
        for i in 0..n {
            let (ca, cb) = (counts[2 * i], counts[2 * i + 1]);
            if ca != first + i || cb != first + i + 1 {
                return self.eigenvalues_by_index(first, first + n, tol);
            }
            brackets.push(Bracket { a: ends[2 * i], b: ends[2 * i + 1], ca, cb });
        }
        self.bisect(brackets, first, first + n, tol)
    }

    /// Eigenvalues of this operator inside [lo, hi] with their global indices.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64, tol: f64) -> (usize, Vec<f64>) {
        let first = self.count_below(lo);
        let last = self.count_below(hi.next_up());
        (first, self.eigenvalues_by_index(first, last, tol))
    }
}

#[derive(Debug, Clone, Copy)]
struct Bracket {
    a: f64,
    b: f64,
    ca: usize,
    cb: usize,
}

const LANES: usize = 8;

fn sturm_count_lanes(diag: &[f64], off2: f64, lambda: &[f64; LANES]) -> [usize; LANES] {
    let pivmin = f64::MIN_POSITIVE.max(off2 * 1e-300);
    let mut q = [0.0; LANES];
    let mut count = [0usize; LANES];
    for k in 0..LANES {
        q[k] = diag[0] - lambda[k];
        if q[k].abs() < pivmin {
            q[k] = -pivmin;
        }
        count[k] += (q[k] < 0.0) as usize;
    }
    for &d in &diag[1..] {
        for k in 0..LANES {
            let mut v = d - lambda[k] - off2 / q[k];
            if v.abs() < pivmin {
                v = -pivmin;
            }
            count[k] += (v < 0.0) as usize;
            q[k] = v;
        }
    }
    count
}

/// Count of negative pivots in the LDL^T factorization of T - lambda I.
pub fn sturm_count(diag: &[f64], off2: f64, lambda: f64) -> usize {
    let pivmin = f64::MIN_POSITIVE.max(off2 * 1e-300);
    let mut count = 0;
    let mut q = diag[0] - lambda;
    if q.abs() < pivmin {
        q = -pivmin;
    }
    if q < 0.0 {
        count += 1;
    }
    for &d in &diag[1..] {
        q = d - lambda - off2 / q;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Eigenvalues in the window, Richardson-combined between N and 2N+1 when enabled.
pub fn eigen_window(op: &DiscretizedOperator, window: &Window, tol: f64, richardson: bool) -> Spectrum {
    let grid = GridInfo { half_width: op.half_width, n_points: op.n_points, dx: op.dx, richardson };
    let (lo, hi) = (window.lo(), window.hi());
    if !richardson {
        let (first, vals) = op.eigenvalues_in(lo, hi, tol);
        let n = vals.len();
        return Spectrum {
            h: op.h,
            window: *window,
            indices: (first..first + n).collect(),
            convergence: vec![tol; n],
            eigenvalues: vals,
            below_window: first,
            grid,
        };
    }
    // Indices near the window edges may cross it under refinement; widen by
    // a few indices and filter after extrapolation.
    let first = op.count_below(lo).saturating_sub(2);
    let last = (op.count_below(hi.next_up()) + 2).min(op.n_points);
    let fine = op.refined();
    let coarse_vals = op.eigenvalues_by_index(first, last, tol);
    let fine_vals = fine.eigenvalues_near(first, &coarse_vals, tol);
    let mut eigenvalues = Vec::new();
    let mut indices = Vec::new();
    let mut convergence = Vec::new();
    let mut below_window = first;
    for (i, (c, f)) in coarse_vals.iter().zip(&fine_vals).enumerate() {
        let x = (4.0 * f - c) / 3.0;
        if x < lo {
            below_window += 1;
        } else if x <= hi {
            eigenvalues.push(x);
            indices.push(first + i);
            convergence.push((f - c).abs());
        }
    }
    Spectrum { h: op.h, window: *window, eigenvalues, indices, convergence, below_window, grid }
}

/// Chooses L and N from the window and computes the spectrum.
pub fn spectrum_for(pot: &Potential, h: f64, window: &Window, params: &SolverParams) -> Result<Spectrum> {
    if pot.dim() != 1 {
        return err(MOD, ErrorKind::DimensionMismatch { expected: 1, got: pot.dim() });
    }
    if !(h > 0.0) {
        return err(MOD, ErrorKind::InvalidArgument(format!("h = {h} must be positive")));
    }
    let vmin = pot.grid_minimum(4001);
    let top = window.e2 + 2.0 * window.eps;
    let l = match params.half_width {
        Some(l) => l,
        None => auto_half_width(pot, h, vmin, top, params)?,
    };
    let n = match params.n_points {
        Some(n) => n,
        None => {
            let pmax = (window.hi() - vmin).max(0.0).sqrt().max(1.0);
            let dx = h / (params.points_per_h.max(MIN_POINTS_PER_H) * pmax);
            (2.0 * l / dx).ceil() as usize
        }
    };
    let op = discretize(pot, h, l, n)?;
    op.check_window(window)?;
    if window.hi() < vmin - 1e-12 {
        let grid = GridInfo { half_width: l, n_points: n, dx: op.dx, richardson: params.richardson };
        return Ok(Spectrum::empty(h, *window, grid));
    }
    Ok(eigen_window(&op, window, params.bisection_tol, params.richardson))
}

fn auto_half_width(pot: &Potential, h: f64, vmin: f64, top: f64, params: &SolverParams) -> Result<f64> {
    let box_l = pot.half_width();
    let need = vmin + params.wall_factor * (top - vmin).max(0.0);
    let steps = 4000;
    let dx = box_l / steps as f64;
    let mut action_right = 0.0;
    let mut action_left = 0.0;
    for i in 1..=steps {
        let l = i as f64 * dx;
        let xm = l - 0.5 * dx;
        action_right += (pot.value1(xm) - top).max(0.0).sqrt() * dx / h;
        action_left += (pot.value1(-xm) - top).max(0.0).sqrt() * dx / h;
        if pot.value1(xm) < top {
            action_right = 0.0;
        }
        if pot.value1(-xm) < top {
            action_left = 0.0;
        }
        let walls = pot.value1(-l).min(pot.value1(l)) >= need;
        let deep = action_right.min(action_left) >= params.agmon_action;
        if walls && deep && l >= 0.5 {
            let tail_ok = (0..50).all(|j| {
                let x = l + (box_l - l) * j as f64 / 50.0;
                pot.value1(x).min(pot.value1(-x)) >= top
            });
            if tail_ok {
                return Ok(l);
            }
        }
    }
    err(
        MOD,
        ErrorKind::Domain(format!(
            "box [-{box_l}, {box_l}] is too small to confine the window top {top} at h = {h}"
        )),
    )
}

/// Number of eigenvalues in [a, b], which must lie in the window.
pub fn count_eigenvalues(spec: &Spectrum, a: f64, b: f64) -> Result<usize> {
    let (lo, hi) = (spec.window.lo(), spec.window.hi());
    if a > b || a < lo - 1e-12 || b > hi + 1e-12 {
        return err(MOD, ErrorKind::WindowMismatch(format!("[{a}, {b}] is not inside [{lo}, {hi}]")));
    }
    Ok(spec.eigenvalues.iter().filter(|&&l| l >= a && l <= b).count())
}

/// Intervals of [-L, L] where V < e, with their endpoints located by bisection.
fn allowed_intervals(pot: &Potential, e: f64) -> Result<Vec<(f64, f64)>> {
    let l = pot.half_width();
    let m = 8000;
    let xs: Vec<f64> = (0..=m).map(|i| -l + 2.0 * l * i as f64 / m as f64).collect();
    let inside: Vec<bool> = xs.iter().map(|&x| pot.value1(x) < e).collect();
    if inside[0] || inside[m] {
        return err(MOD, ErrorKind::NonFinite(format!("sublevel set {{V < {e}}} reaches the box wall")));
    }
    let root = |mut a: f64, mut b: f64| {
        // V(a) - e and V(b) - e have opposite signs
        let fa = pot.value1(a) - e;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if (pot.value1(mid) - e).signum() == fa.signum() {
                a = mid;
            } else {
                b = mid;
            }
            if b - a < 1e-15 * (1.0 + a.abs()) {
                break;
            }
        }
        0.5 * (a + b)
    };
    let mut out = Vec::new();
    let mut start = None;
    for i in 1..=m {
        if inside[i] && !inside[i - 1] {
            start = Some(root(xs[i - 1], xs[i]));
        }
        if !inside[i] && inside[i - 1] {
            let a = start.take().expect("interval opened");
            out.push((a, root(xs[i - 1], xs[i])));
        }
    }
    Ok(out)
}

/// Phase-space volume of {p <= e} in one dimension, ∫ 2 sqrt(e - V)_+ dx.
fn volume_below_1d(pot: &Potential, e: f64) -> Result<f64> {
    let (th, w) = gauss_legendre_on(128, 0.0, std::f64::consts::PI);
    let mut total = 0.0;
    for (a, b) in allowed_intervals(pot, e)? {
        // x = a + (b - a)(1 - cos θ)/2 absorbs the square-root endpoints
        let half = 0.5 * (b - a);
        for (t, wt) in th.iter().zip(&w) {
            let x = a + half * (1.0 - t.cos());
            total += wt * 2.0 * (e - pot.value1(x)).max(0.0).sqrt() * half * t.sin();
        }
    }
    Ok(total)
}

fn volume_below_nd(pot: &Potential, e: f64, per_axis: usize) -> f64 {
    let n = pot.dim();
    let l = pot.half_width();
    let omega = std::f64::consts::PI.powf(n as f64 / 2.0) / statrs::function::gamma::gamma(n as f64 / 2.0 + 1.0);
    let cell = (2.0 * l / per_axis as f64).powi(n as i32);
    let mut total = 0.0;
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0; n];
    loop {
        for i in 0..n {
            x[i] = -l + 2.0 * l * (idx[i] as f64 + 0.5) / per_axis as f64;
        }
        let d = e - pot.value(&x);
        if d > 0.0 {
            total += omega * d.powf(n as f64 / 2.0);
        }
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
    total * cell
}

/// A phase-space volume together with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Volume {
    pub value: f64,
    pub error_estimate: f64,
}

/// Vol{a <= p <= b} for p = |xi|^2 + V.
pub fn liouville_volume(pot: &Potential, a: f64, b: f64) -> Result<Volume> {
    if a > b {
        return err(MOD, ErrorKind::InvalidArgument(format!("empty energy band [{a}, {b}]")));
    }
    if pot.dim() == 1 {
        let v = volume_below_1d(pot, b)? - volume_below_1d(pot, a)?;
        return Ok(Volume { value: v, error_estimate: 1e-10 * (1.0 + v.abs()) });
    }
    let l = pot.half_width();
    if pot.boundary_minimum(l, 64) <= b {
        return err(MOD, ErrorKind::NonFinite(format!("sublevel set {{V <= {b}}} reaches the box wall")));
    }
    let per_axis = match pot.dim() {
        2 => 1600,
        3 => 160,
        _ => 40,
    };
    let fine = volume_below_nd(pot, b, per_axis) - volume_below_nd(pot, a, per_axis);
    let coarse = volume_below_nd(pot, b, per_axis / 2) - volume_below_nd(pot, a, per_axis / 2);
    let v = fine;
    if !v.is_finite() {
        return Err(Error::new(MOD, ErrorKind::NonFinite("phase-space volume".into())));
    }
    Ok(Volume { value: v, error_estimate: (fine - coarse).abs() })
}

/// Liouville measure of the energy surface, d/dE Vol{p <= E}.
pub fn liouville_surface(pot: &Potential, e: f64) -> Result<f64> {
    let d = 1e-4 * e.abs().max(1.0);
    let v = liouville_volume(pot, e - d, e + d)?;
    Ok(v.value / (2.0 * d))
}
