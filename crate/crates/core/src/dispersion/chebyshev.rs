/// Truncated Chebyshev series on an interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chebyshev {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Discrete Chebyshev projection of `f` sampled at `nodes` Chebyshev-Gauss
    /// points, truncated at `order`. For `nodes > order` this is the discrete
    /// least-squares fit on those nodes.
    pub fn fit<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, order: usize, nodes: usize) -> Self {
        assert!(nodes > order, "need more nodes than the series order");
        let n = nodes as f64;
        let samples: Vec<(f64, f64)> = (0..nodes)
            .map(|j| {
                let theta = std::f64::consts::PI * (j as f64 + 0.5) / n;
                let x = theta.cos();
                (theta, f(0.5 * (x + 1.0) * (hi - lo) + lo))
            })
            .collect();
        let coeffs = (0..=order)
            .map(|k| {
                let s: f64 = samples
                    .iter()
                    .map(|(theta, y)| y * (k as f64 * theta).cos())
                    .sum();
                let c = 2.0 * s / n;
                if k == 0 {
                    0.5 * c
                } else {
                    c
                }
            })
            .collect();
        Self { lo, hi, coeffs }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }

    /// Series for d/dx on the same interval.
    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        if n < 2 {
            return Self {
                lo: self.lo,
                hi: self.hi,
                coeffs: vec![0.0],
            };
        }
        let mut d = vec![0.0; n - 1];
        for k in (1..n).rev() {
            let upper = if k + 1 < n - 1 { d[k + 1] } else { 0.0 };
            d[k - 1] = upper + 2.0 * k as f64 * self.coeffs[k];
        }
        d[0] *= 0.5;
        let scale = 2.0 / (self.hi - self.lo);
        d.iter_mut().for_each(|c| *c *= scale);
        Self {
            lo: self.lo,
            hi: self.hi,
            coeffs: d,
        }
    }
}
