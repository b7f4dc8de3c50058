//! Band-limited test functions: φ̂ is a smooth bump times t^{2j0}, φ is its
//! inverse transform φ(s) = (1/2π) ∫ e^{-its} φ̂(t) dt.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{err, ErrorKind, Module, Result};
use crate::jet::Jet;

const MOD: Module = Module::TestFn;

/// Order N of the certified decay bound |φ(s)| <= C_N |s|^{-N}.
pub const TAIL_ORDER: usize = 8;
/// Default truncation radius in the rescaled variable s = (λ - E)/h.
pub const DEFAULT_S_MAX: f64 = 200.0;
/// Target accuracy of the cubic interpolation, relative to max |φ|.
const INTERP_TOL: f64 = 1e-9;
/// Extra cache range beyond s_max, so moderate shifts stay cached.
const CACHE_MARGIN: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportMode {
    /// φ̂(t) = t^{2j0} (b(t) + b(-t)) / 2, even in t.
    Symmetric,
    /// φ̂(t) = t^{2j0} b(t), supported on one side of the origin or away from it.
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    pub flatness: u32,
    pub t_minus: f64,
    pub t_plus: f64,
    pub mode: SupportMode,
    #[serde(default = "default_s_max")]
    pub s_max: f64,
}

fn default_s_max() -> f64 {
    DEFAULT_S_MAX
}

impl TestFunctionSpec {
    pub fn new(flatness: u32, t_minus: f64, t_plus: f64, mode: SupportMode) -> Self {
        Self { flatness, t_minus, t_plus, mode, s_max: DEFAULT_S_MAX }
    }

    pub fn with_s_max(mut self, s_max: f64) -> Self {
        self.s_max = s_max;
        self
    }

    pub fn build(&self) -> Result<TestFunction> {
        make_test_function(self)
    }
}

/// Evaluated cache of φ and φ' on a uniform grid.
#[derive(Debug)]
struct Cache {
    step: f64,
    half_count: usize,
    phi: Vec<Complex64>,
    dphi: Vec<Complex64>,
}

#[derive(Debug, Clone)]
pub struct TestFunction {
    spec: TestFunctionSpec,
    /// φ(s) = scale * base(sigma * s + shift).
    scale: Complex64,
    sigma: f64,
    shift: f64,
    cache: Arc<Cache>,
    /// Quadrature nodes on the support of the base φ̂.
    nodes: Arc<Vec<(f64, f64)>>,
    tail_constant: f64,
    l1_norm: f64,
}

fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// Builds φ̂ and the evaluation cache for φ.
pub fn make_test_function(spec: &TestFunctionSpec) -> Result<TestFunction> {
    let (a, b) = (spec.t_minus, spec.t_plus);
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return err(MOD, ErrorKind::EmptySupport(format!("support [{a}, {b}] is empty")));
    }
    if spec.mode == SupportMode::OneSided && a < 0.0 && b > 0.0 {
        return err(
            MOD,
            ErrorKind::InvalidArgument(format!("one-sided support [{a}, {b}] must not contain 0 in its interior")),
        );
    }
    if !(spec.s_max > 0.0) {
        return err(MOD, ErrorKind::InvalidArgument("s_max must be positive".into()));
    }
    let proto = TestFunction {
        spec: *spec,
        scale: Complex64::new(1.0, 0.0),
        sigma: 1.0,
        shift: 0.0,
        cache: Arc::new(Cache { step: 1.0, half_count: 0, phi: Vec::new(), dphi: Vec::new() }),
        nodes: Arc::new(Vec::new()),
        tail_constant: 0.0,
        l1_norm: 0.0,
    };
    let (lo, hi) = proto.base_support();
    let width = hi - lo;
    let t_abs = lo.abs().max(hi.abs());

    let m = 4096usize;
    let dt = width / m as f64;
    let nodes: Vec<(f64, f64)> = (1..m).map(|i| (lo + i as f64 * dt, dt)).collect();
    let l1_norm: f64 = nodes.iter().map(|&(t, w)| w * proto.base_hat(t).abs()).sum();

    // cubic Hermite error <= step^4/384 max|φ''''| <= step^4/384 t^4 ||φ̂||_1/(2π)
    let step = (384.0 * INTERP_TOL / t_abs.powi(4).max(1e-12)).powf(0.25).min(0.25);
    let range = spec.s_max + CACHE_MARGIN;
    let half_count = (range / step).ceil() as usize;
    // trapezoid on the support aliases with period 2π/dt; keep it far beyond the cache range
    let dt_fft = dt.min(2.0 * PI / (4.0 * range));
    let fft_len = ((2.0 * PI / (dt_fft * step)).ceil() as usize).max(2 * half_count + 2).next_power_of_two();
    let dt_fft = 2.0 * PI / (fft_len as f64 * step);
    let samples = ((width / dt_fft).floor() as usize).min(fft_len);

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(fft_len);
    let mut buf_phi = vec![Complex64::new(0.0, 0.0); fft_len];
    let mut buf_dphi = vec![Complex64::new(0.0, 0.0); fft_len];
    for i in 0..samples {
        let t = lo + i as f64 * dt_fft;
        let v = proto.base_hat(t);
        buf_phi[i] = Complex64::new(v, 0.0);
        buf_dphi[i] = Complex64::new(0.0, -t * v);
    }
    fft.process(&mut buf_phi);
    fft.process(&mut buf_dphi);
    // φ(s_k) = dt/(2π) e^{-i lo s_k} Σ_m φ̂(t_m) e^{-2πi m k / P}
    let count = 2 * half_count + 1;
    let mut phi = Vec::with_capacity(count);
    let mut dphi = Vec::with_capacity(count);
    for idx in 0..count {
        let k = idx as i64 - half_count as i64;
        let s = k as f64 * step;
        let slot = k.rem_euclid(fft_len as i64) as usize;
        let phase = Complex64::from_polar(dt_fft / (2.0 * PI), -lo * s);
        phi.push(phase * buf_phi[slot]);
        dphi.push(phase * buf_dphi[slot]);
    }

    let tail_constant = nodes
        .iter()
        .map(|&(t, w)| w * proto.base_hat_jet(t, TAIL_ORDER).derivative(TAIL_ORDER).abs())
        .sum::<f64>()
        / (2.0 * PI);

    Ok(TestFunction {
        cache: Arc::new(Cache { step, half_count, phi, dphi }),
        nodes: Arc::new(nodes),
        tail_constant,
        l1_norm,
        ..proto
    })
}

impl TestFunction {
    pub fn spec(&self) -> &TestFunctionSpec {
        &self.spec
    }

    pub fn flatness(&self) -> u32 {
        self.spec.flatness
    }

    pub fn s_max(&self) -> f64 {
        self.spec.s_max
    }

    /// Support of the base φ̂ (before reflection).
    fn base_support(&self) -> (f64, f64) {
        let (a, b) = (self.spec.t_minus, self.spec.t_plus);
        match self.spec.mode {
            SupportMode::OneSided => (a, b),
            SupportMode::Symmetric => {
                let r = a.abs().max(b.abs());
                (-r, r)
            }
        }
    }

    /// Support of φ̂, accounting for reflection.
    pub fn support(&self) -> (f64, f64) {
        let (a, b) = self.base_support();
        if self.sigma > 0.0 {
            (a, b)
        } else {
            (-b, -a)
        }
    }

    fn raw_bump(&self, t: f64) -> f64 {
        let (a, b) = (self.spec.t_minus, self.spec.t_plus);
        let c = 0.5 * (a + b);
        let w = 0.5 * (b - a);
        match self.spec.mode {
            SupportMode::OneSided => bump((t - c) / w),
            SupportMode::Symmetric => 0.5 * (bump((t - c) / w) + bump((-t - c) / w)),
        }
    }

    fn base_hat(&self, t: f64) -> f64 {
        t.powi(2 * self.spec.flatness as i32) * self.raw_bump(t)
    }

    fn bump_jet(&self, t: f64, sign: f64, order: usize) -> Jet {
        let (a, b) = (self.spec.t_minus, self.spec.t_plus);
        let c = 0.5 * (a + b);
        let w = 0.5 * (b - a);
        let u0 = (sign * t - c) / w;
        if 1.0 - u0 * u0 <= 1e-3 {
            return Jet::zero(order);
        }
        let u = Jet::affine(u0, sign / w, order);
        let one_minus = Jet::constant(1.0, order).add(&u.mul(&u).scale(-1.0));
        one_minus.recip().scale(-1.0).exp()
    }

    /// Taylor jet of the base φ̂ at t.
    fn base_hat_jet(&self, t: f64, order: usize) -> Jet {
        let b = match self.spec.mode {
            SupportMode::OneSided => self.bump_jet(t, 1.0, order),
            SupportMode::Symmetric => {
                self.bump_jet(t, 1.0, order).add(&self.bump_jet(t, -1.0, order)).scale(0.5)
            }
        };
        Jet::affine(t, 1.0, order).powi(2 * self.spec.flatness).mul(&b)
    }

    /// φ̂(t) = scale e^{-iσ t c} base(σ t).
    pub fn phi_hat(&self, t: f64) -> Complex64 {
        let st = self.sigma * t;
        self.scale * Complex64::from_polar(1.0, -self.sigma * t * self.shift) * self.base_hat(st)
    }

    /// m-th derivative of φ̂ at t, exact up to rounding.
    pub fn phi_hat_derivative(&self, t: f64, m: usize) -> Complex64 {
        // product rule with the phase factor e^{-i σ c t}
        let jet = self.base_hat_jet(self.sigma * t, m);
        let mut total = Complex64::new(0.0, 0.0);
        let a = Complex64::new(0.0, -self.sigma * self.shift);
        let phase = Complex64::from_polar(1.0, -self.sigma * t * self.shift);
        let mut binom = 1.0;
        for j in 0..=m {
            // d^j base(σt) = σ^j base^{(j)}
            let dj = jet.derivative(j) * self.sigma.powi(j as i32);
            total += binom * dj * a.powi((m - j) as i32);
            binom = binom * (m - j) as f64 / (j + 1) as f64;
        }
        self.scale * phase * total
    }

    fn base_eval(&self, s: f64) -> Complex64 {
        let c = &self.cache;
        let pos = s / c.step + c.half_count as f64;
        if pos >= 0.0 && pos < (c.phi.len() - 1) as f64 {
            let i = pos.floor() as usize;
            let u = pos - i as f64;
            let (p0, p1) = (c.phi[i], c.phi[i + 1]);
            let (d0, d1) = (c.dphi[i] * c.step, c.dphi[i + 1] * c.step);
            let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
            let h10 = u * (1.0 - u) * (1.0 - u);
            let h01 = u * u * (3.0 - 2.0 * u);
            let h11 = u * u * (u - 1.0);
            p0 * h00 + d0 * h10 + p1 * h01 + d1 * h11
        } else {
            self.base_direct(s)
        }
    }

    /// Inverse transform of the base φ̂ by direct quadrature.
    fn base_direct(&self, s: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(t, w) in self.nodes.iter() {
            acc += Complex64::from_polar(w * self.base_hat(t), -t * s);
        }
        acc / (2.0 * PI)
    }

    /// φ(s), interpolated from the cache within range and by quadrature beyond.
    pub fn eval(&self, s: f64) -> Complex64 {
        self.scale * self.base_eval(self.sigma * s + self.shift)
    }

    /// φ(s) by direct quadrature, bypassing the cache.
    pub fn eval_direct(&self, s: f64) -> Complex64 {
        self.scale * self.base_direct(self.sigma * s + self.shift)
    }

    /// Certified bound |φ(s)| <= C_8 |σ s + c|^{-8}.
    pub fn tail_bound(&self, s: f64) -> f64 {
        let arg = (self.sigma * s + self.shift).abs();
        self.scale.norm() * (self.tail_constant / arg.powi(TAIL_ORDER as i32)).min(self.l1_norm / (2.0 * PI))
    }

    /// C_N = (1/2π) ∫ |φ̂^{(N)}| for the unshifted base function.
    pub fn tail_constant(&self) -> f64 {
        self.tail_constant * self.scale.norm()
    }

    /// ∫ |φ̂| dt.
    pub fn l1_norm_hat(&self) -> f64 {
        self.l1_norm * self.scale.norm()
    }

    /// ∫ φ̂ dt = 2π φ(0).
    pub fn integral_of_hat(&self) -> Complex64 {
        self.eval(0.0) * 2.0 * PI
    }

    /// True when every derivative of φ̂ of order below 2 j0 vanishes at 0.
    pub fn weyl_kill_check(&self) -> bool {
        let (a, b) = self.support();
        if !(a < 0.0 && b > 0.0) {
            return true;
        }
        if self.spec.flatness == 0 {
            return self.phi_hat(0.0).norm() <= 1e-9;
        }
        let top = 2 * self.spec.flatness as usize - 1;
        let jet_scale = self.scale.norm();
        let jet = self.base_hat_jet(0.0, top);
        (0..=top).all(|mm| jet_scale * jet.derivative(mm).abs() <= 1e-9)
    }

    /// φ(s + c), i.e. φ̂ multiplied by e^{-itc}.
    pub fn shifted(&self, c: f64) -> TestFunction {
        let mut out = self.clone();
        out.shift += self.sigma * c;
        out
    }

    /// φ(-s), i.e. φ̂(-t).
    pub fn reflected(&self) -> TestFunction {
        let mut out = self.clone();
        out.sigma = -self.sigma;
        out
    }

    /// a φ.
    pub fn scaled(&self, a: Complex64) -> TestFunction {
        let mut out = self.clone();
        out.scale *= a;
        out
    }

    /// Shift currently applied to the argument of the base function.
    pub fn total_shift(&self) -> f64 {
        self.shift
    }

    pub fn is_reflected(&self) -> bool {
        self.sigma < 0.0
    }

    /// Cache grid: spacing and the number of samples.
    pub fn cache_grid(&self) -> (f64, usize) {
        (self.cache.step, self.cache.phi.len())
    }

    /// Samples of φ on the cache grid (s, φ(s)).
    pub fn cached_samples(&self) -> impl Iterator<Item = (f64, Complex64)> + '_ {
        let c = &self.cache;
        c.phi.iter().enumerate().map(move |(i, v)| ((i as f64 - c.half_count as f64) * c.step, *v))
    }

    /// Short text description for provenance records.
    pub fn describe(&self) -> String {
        let (a, b) = self.support();
        format!(
            "j0={} support=[{a},{b}] mode={:?} shift={} reflected={} scale={}",
            self.spec.flatness,
            self.spec.mode,
            self.shift,
            self.is_reflected(),
            self.scale
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym(j0: u32, r: f64) -> TestFunction {
        TestFunctionSpec::new(j0, -r, r, SupportMode::Symmetric).build().unwrap()
    }

    #[test]
    fn rejects_bad_supports() {
        let e = TestFunctionSpec::new(3, 1.0, -1.0, SupportMode::Symmetric).build().unwrap_err();
        assert!(matches!(e.kind, ErrorKind::EmptySupport(_)));
        assert!(TestFunctionSpec::new(0, -1.0, 1.0, SupportMode::OneSided).build().is_err());
    }

    #[test]
    fn real_even_transform_gives_real_even_function() {
        let tf = sym(3, 1.0);
        for s in [0.0, 0.3, 1.7, 5.0, 20.0] {
            let a = tf.eval(s);
            let b = tf.eval(-s);
            assert!(a.im.abs() < 1e-10);
            assert!((a - b).norm() < 1e-10);
        }
        let hat_integral: f64 = (0..20000).map(|i| -1.0 + (i as f64 + 0.5) * 1e-4).map(|t| tf.phi_hat(t).re).sum::<f64>() * 1e-4;
        assert!((tf.eval(0.0).re - hat_integral / (2.0 * PI)).abs() < 1e-8);
    }

    #[test]
    fn one_sided_is_complex() {
        let tf = TestFunctionSpec::new(0, 0.5, 2.0, SupportMode::OneSided).build().unwrap();
        assert!(tf.eval(1.0).im.abs() > 1e-3);
        // φ̂ real gives φ(-s) = conj φ(s)
        for s in [0.4, 3.0, 11.0] {
            assert!((tf.eval(-s) - tf.eval(s).conj()).norm() < 1e-10);
        }
    }

    #[test]
    fn cache_matches_direct_quadrature() {
        for tf in [
            sym(3, 1.0),
            TestFunctionSpec::new(0, 0.1, 1.0, SupportMode::OneSided).build().unwrap(),
            TestFunctionSpec::new(3, 0.2, PI - 0.2, SupportMode::OneSided).build().unwrap(),
        ] {
            let peak = tf.eval(0.0).norm().max(1e-300);
            let mut worst: f64 = 0.0;
            for i in 0..400 {
                let s = -199.0 + i as f64 * 0.9973;
                worst = worst.max((tf.eval(s) - tf.eval_direct(s)).norm());
            }
            assert!(worst < 1e-8 * peak.max(tf.l1_norm_hat() / (2.0 * PI)), "{}: {worst}", tf.describe());
        }
    }

    fn envelope(tf: &TestFunction, s: f64) -> f64 {
        (0..100).map(|i| tf.eval_direct(s + 0.05 * i as f64).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn decay_of_flat_bump() {
        let tf = sym(3, 1.0);
        for s in [10.0, 50.0, 150.0, 300.0] {
            assert!(tf.eval_direct(s).norm() <= tf.tail_bound(s));
        }
        // decay is faster than any power: the envelope slope keeps steepening
        let slope = |a: f64, b: f64| (envelope(&tf, b) / envelope(&tf, a)).ln() / (b / a).ln();
        let early = slope(10.0, 40.0);
        let late = slope(100.0, 300.0);
        assert!(early < 0.0 && late < early, "{early} {late}");
        assert!(late <= -6.0, "{late}");
    }

    #[test]
    fn weyl_kill() {
        assert!(sym(3, 1.0).weyl_kill_check());
        assert!(!sym(0, 1.0).weyl_kill_check());
        let tf = TestFunctionSpec::new(0, 0.5, 2.0, SupportMode::OneSided).build().unwrap();
        assert!(tf.weyl_kill_check());
    }

    #[test]
    fn shift_and_reflection() {
        let tf = TestFunctionSpec::new(1, 0.3, 1.5, SupportMode::OneSided).build().unwrap();
        let sh = tf.shifted(2.5);
        let rf = tf.reflected();
        for s in [-7.0, -1.0, 0.0, 0.6, 4.0] {
            assert!((sh.eval(s) - tf.eval(s + 2.5)).norm() < 1e-12);
            assert!((rf.eval(s) - tf.eval(-s)).norm() < 1e-12);
        }
        let back = sh.shifted(-2.5);
        assert!((back.eval(0.7) - tf.eval(0.7)).norm() < 1e-12);
        // the transforms agree with the direct definitions
        let t = 0.9;
        assert!((sh.phi_hat(t) - Complex64::from_polar(1.0, -2.5 * t) * tf.phi_hat(t)).norm() < 1e-14);
        assert!((rf.phi_hat(-t) - tf.phi_hat(t)).norm() < 1e-14);
        // reflected shifted function: ψ(s) = φ(-s + 2.5)
        let rs = tf.shifted(2.5).reflected();
        let s = 1.3;
        assert!((rs.eval(s) - tf.eval(-s + 2.5)).norm() < 1e-12);
        let direct = rs.eval_direct(s);
        assert!((rs.eval(s) - direct).norm() < 1e-9);
    }

    #[test]
    fn derivatives_by_jets() {
        let tf = TestFunctionSpec::new(1, 0.3, 1.5, SupportMode::OneSided).build().unwrap().shifted(0.8);
        let t = 0.77;
        let d = 1e-4;
        let fd = (tf.phi_hat(t + d) - tf.phi_hat(t - d)) / (2.0 * d);
        assert!((tf.phi_hat_derivative(t, 1) - fd).norm() < 1e-6);
        let fd2 = (tf.phi_hat(t + d) - 2.0 * tf.phi_hat(t) + tf.phi_hat(t - d)) / (d * d);
        assert!((tf.phi_hat_derivative(t, 2) - fd2).norm() < 1e-4);
    }

    #[test]
    fn plancherel() {
        let tf = sym(2, 1.0);
        let (step, _) = tf.cache_grid();
        let lhs: f64 = tf.cached_samples().map(|(_, v)| v.norm_sqr()).sum::<f64>() * step;
        let n = 200000;
        let dt = 2.0 / n as f64;
        let rhs: f64 = (0..n).map(|i| tf.phi_hat(-1.0 + (i as f64 + 0.5) * dt).norm_sqr()).sum::<f64>() * dt / (2.0 * PI);
        assert!((lhs - rhs).abs() < 1e-6 * rhs);
    }
}
