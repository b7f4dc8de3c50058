//! Sparse multivariate polynomials with real coefficients.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polynomial {
    dim: usize,
    terms: Vec<Term>,
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

impl Polynomial {
    /// Builds a polynomial, merging repeated monomials and dropping zeros.
    /// Panics if a term has the wrong number of exponents.
    pub fn new(dim: usize, terms: Vec<Term>) -> Self {
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for t in terms {
            assert_eq!(t.powers.len(), dim, "monomial arity must equal dimension");
            *map.entry(t.powers).or_insert(0.0) += t.coeff;
        }
        Self::from_map(dim, map)
    }

    fn from_map(dim: usize, map: BTreeMap<Vec<u32>, f64>) -> Self {
        let terms = map
            .into_iter()
            .filter(|(_, c)| *c != 0.0)
            .map(|(powers, coeff)| Term { coeff, powers })
            .collect();
        Self { dim, terms }
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Self::new(dim, vec![Term { coeff: c, powers: vec![0; dim] }])
    }

    /// The coordinate function x_i.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        let mut powers = vec![0; dim];
        powers[i] = 1;
        Self::new(dim, vec![Term { coeff: 1.0, powers }])
    }

    /// One-variable polynomial from ascending coefficients.
    pub fn univariate(coeffs: &[f64]) -> Self {
        Self::new(
            1,
            coeffs
                .iter()
                .enumerate()
                .map(|(p, &c)| Term { coeff: c, powers: vec![p as u32] })
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.powers.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.coeff.abs()))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut s = 0.0;
        for t in &self.terms {
            let mut m = t.coeff;
            for (xi, &p) in x.iter().zip(&t.powers) {
                if p > 0 {
                    m *= xi.powi(p as i32);
                }
            }
            s += m;
        }
        s
    }

    pub fn add(&self, o: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, o.dim);
        let mut terms = self.terms.clone();
        terms.extend(o.terms.iter().cloned());
        Polynomial::new(self.dim, terms)
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        Polynomial::new(
            self.dim,
            self.terms.iter().map(|t| Term { coeff: t.coeff * s, powers: t.powers.clone() }).collect(),
        )
    }

    pub fn mul(&self, o: &Polynomial) -> Polynomial {
        assert_eq!(self.dim, o.dim);
        let mut terms = Vec::with_capacity(self.terms.len() * o.terms.len());
        for a in &self.terms {
            for b in &o.terms {
                terms.push(Term {
                    coeff: a.coeff * b.coeff,
                    powers: a.powers.iter().zip(&b.powers).map(|(p, q)| p + q).collect(),
                });
            }
        }
        Polynomial::new(self.dim, terms)
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut r = Polynomial::constant(self.dim, 1.0);
        for _ in 0..k {
            r = r.mul(self);
        }
        r
    }

    /// Partial derivative with respect to x_i.
    pub fn partial(&self, i: usize) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.powers[i] > 0)
            .map(|t| {
                let mut powers = t.powers.clone();
                powers[i] -= 1;
                Term { coeff: t.coeff * t.powers[i] as f64, powers }
            })
            .collect();
        Polynomial::new(self.dim, terms)
    }

    /// Re-expands the polynomial around `x0`: returns q with q(y) = p(x0 + y).
    pub fn shifted(&self, x0: &[f64]) -> Polynomial {
        assert_eq!(x0.len(), self.dim);
        let mut map: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for t in &self.terms {
            // enumerate all a <= powers
            let mut a = vec![0u32; self.dim];
            loop {
                let mut c = t.coeff;
                for i in 0..self.dim {
                    c *= binomial(t.powers[i], a[i]) * x0[i].powi((t.powers[i] - a[i]) as i32);
                }
                *map.entry(a.clone()).or_insert(0.0) += c;
                let mut i = 0;
                loop {
                    if i == self.dim {
                        break;
                    }
                    if a[i] < t.powers[i] {
                        a[i] += 1;
                        break;
                    }
                    a[i] = 0;
                    i += 1;
                }
                if i == self.dim {
                    break;
                }
            }
        }
        Self::from_map(self.dim, map)
    }

    /// Homogeneous part of total degree `d`.
    pub fn homogeneous_part(&self, d: u32) -> Polynomial {
        Polynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .filter(|t| t.powers.iter().sum::<u32>() == d)
                .cloned()
                .collect(),
        }
    }

    /// Drops coefficients with magnitude at most `tol`.
    pub fn pruned(&self, tol: f64) -> Polynomial {
        Polynomial {
            dim: self.dim,
            terms: self.terms.iter().filter(|t| t.coeff.abs() > tol).cloned().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_reproduces_values() {
        let x = Polynomial::coordinate(2, 0);
        let y = Polynomial::coordinate(2, 1);
        let p = x.pow(3).add(&x.mul(&y).scale(-2.0)).add(&y.pow(4));
        let x0 = [0.3, -1.2];
        let q = p.shifted(&x0);
        for probe in [[0.1, 0.2], [-0.5, 0.7], [1.0, -1.0]] {
            let lhs = q.eval(&probe);
            let rhs = p.eval(&[x0[0] + probe[0], x0[1] + probe[1]]);
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn partials() {
        let p = Polynomial::univariate(&[1.0, 0.0, -2.0, 0.0, 1.0]);
        let d = p.partial(0);
        assert_eq!(d, Polynomial::univariate(&[0.0, -4.0, 0.0, 4.0]));
        assert_eq!(p.degree(), 4);
    }
}
