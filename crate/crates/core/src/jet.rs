//! Truncated Taylor series arithmetic, used for exact derivatives of the
//! compactly supported test-function transforms.

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    /// Taylor coefficients f^(k)(t0) / k!.
    pub c: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = v;
        Self { c }
    }

    /// The affine jet a + b (t - t0).
    pub fn affine(a: f64, b: f64, order: usize) -> Self {
        let mut j = Self::constant(a, order);
        if order >= 1 {
            j.c[1] = b;
        }
        j
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(0.0, order)
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut fact = 1.0;
        for i in 2..=k {
            fact *= i as f64;
        }
        self.c.get(k).copied().unwrap_or(0.0) * fact
    }

    pub fn add(&self, o: &Jet) -> Jet {
        Jet { c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet { c: self.c.iter().map(|a| a * s).collect() }
    }

    pub fn mul(&self, o: &Jet) -> Jet {
        let n = self.c.len();
        let mut c = vec![0.0; n];
        for i in 0..n {
            if self.c[i] == 0.0 {
                continue;
            }
            for j in 0..n - i {
                c[i + j] += self.c[i] * o.c[j];
            }
        }
        Jet { c }
    }

    pub fn recip(&self) -> Jet {
        let n = self.c.len();
        let mut r = vec![0.0; n];
        r[0] = 1.0 / self.c[0];
        for k in 1..n {
            let mut s = 0.0;
            for j in 1..=k {
                s += self.c[j] * r[k - j];
            }
            r[k] = -s * r[0];
        }
        Jet { c: r }
    }

    pub fn exp(&self) -> Jet {
        let n = self.c.len();
        let mut e = vec![0.0; n];
        e[0] = self.c[0].exp();
        for k in 1..n {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * self.c[j] * e[k - j];
            }
            e[k] = s / k as f64;
        }
        Jet { c: e }
    }

    pub fn powi(&self, p: u32) -> Jet {
        let mut r = Jet::constant(1.0, self.order());
        for _ in 0..p {
            r = r.mul(self);
        }
        r
    }
}
