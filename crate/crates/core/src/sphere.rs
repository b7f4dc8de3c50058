//! Quadrature and deterministic sampling on the unit sphere S^{n-1}.

use std::f64::consts::PI;

use crate::quad::gauss_legendre_on;

/// Integrates `f` over S^{n-1} with the standard surface measure.
///
/// n = 1 is the two-point sphere with counting measure. n = 2 uses the
/// periodic trapezoid rule, higher dimensions a product of Gauss-Legendre
/// rules in the polar angles with the trapezoid rule on the last circle.
pub fn integrate<F: Fn(&[f64]) -> f64>(n: usize, resolution: usize, f: F) -> f64 {
    assert!(n >= 1);
    let mut point = vec![0.0; n];
    recurse(n, resolution.max(8), 1.0, 0, &mut point, &f)
}

fn recurse<F: Fn(&[f64]) -> f64>(
    m: usize,
    res: usize,
    radius: f64,
    offset: usize,
    point: &mut Vec<f64>,
    f: &F,
) -> f64 {
    // integrate over the sphere of dimension m-1 with radius `radius`
    // embedded in coordinates offset..offset+m, accumulating surface measure
    match m {
        1 => {
            point[offset] = radius;
            let a = f(point);
            point[offset] = -radius;
            let b = f(point);
            a + b
        }
        2 => {
            let count = 2 * res;
            let mut s = 0.0;
            for i in 0..count {
                let th = 2.0 * PI * i as f64 / count as f64;
                point[offset] = radius * th.cos();
                point[offset + 1] = radius * th.sin();
                s += f(point);
            }
            s * 2.0 * PI / count as f64
        }
        _ => {
            let nodes = res.max(8);
            let (th, w) = gauss_legendre_on(nodes, 0.0, PI);
            let sub_res = (res * 3 / 4).max(8);
            let mut s = 0.0;
            for (t, wt) in th.iter().zip(&w) {
                point[offset] = radius * t.cos();
                let r = t.sin();
                let inner = recurse(m - 1, sub_res, radius * r, offset + 1, point, f);
                s += wt * r.powi(m as i32 - 2) * inner;
            }
            s
        }
    }
}

/// Surface area of S^{n-1}; the two-point sphere has measure 2.
pub fn area(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * PI.powf(half) / statrs::function::gamma::gamma(half)
}

/// Deterministic, roughly uniform points on S^{n-1}.
pub fn sample_points(n: usize, count: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|i| {
                let th = 2.0 * PI * (i as f64 + 0.5) / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            // Halton sequence pushed through Box-Muller, then normalized
            let primes = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
            let need = n.div_ceil(2) * 2;
            assert!(need <= primes.len(), "dimension too large for sampler");
            (1..=count as u64)
                .map(|i| {
                    let mut g = Vec::with_capacity(need);
                    for pair in 0..need / 2 {
                        let u1 = halton(i, primes[2 * pair]).max(1e-12);
                        let u2 = halton(i, primes[2 * pair + 1]);
                        let r = (-2.0 * u1.ln()).sqrt();
                        g.push(r * (2.0 * PI * u2).cos());
                        g.push(r * (2.0 * PI * u2).sin());
                    }
                    g.truncate(n);
                    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                    g.iter().map(|v| v / norm).collect()
                })
                .collect()
        }
    }
}

fn halton(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}
