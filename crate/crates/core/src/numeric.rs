//! Small numerical helpers shared across modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompSum {
    sum: f64,
    c: f64,
}

impl CompSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.c += (self.sum - t) + x;
        } else {
            self.c += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CompSumC {
    re: CompSum,
    im: CompSum,
}

impl CompSumC {
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

pub fn ln_factorial(p: usize) -> f64 {
    if p < 2 {
        0.0
    } else {
        statrs::function::gamma::ln_gamma(p as f64 + 1.0)
    }
}

pub fn ln_gamma(x: f64) -> f64 {
    statrs::function::gamma::ln_gamma(x)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    linspace(a.ln(), b.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// Distinct integers, roughly log-spaced on `[lo, hi]`.
pub fn log_indices(lo: usize, hi: usize, n: usize) -> Vec<usize> {
    let lo = lo.max(1);
    let mut v: Vec<usize> = logspace(lo as f64, hi as f64, n)
        .into_iter()
        .map(|x| (x.round() as usize).clamp(lo, hi))
        .collect();
    v.dedup();
    v
}

/// Least squares solution of `X c = y` (rows of `X` given). Columns are
/// rescaled before the SVD.
pub fn lstsq(rows: &[Vec<f64>], y: &[f64]) -> Result<Vec<f64>> {
    let m = rows.len();
    if m == 0 || m != y.len() {
        return Err(Error::NumericalFailure("empty regression".into()));
    }
    let k = rows[0].len();
    if m < k {
        return Err(Error::NumericalFailure(format!(
            "regression needs {k} points, got {m}"
        )));
    }
    let mut scale = vec![0.0f64; k];
    for r in rows {
        for (j, v) in r.iter().enumerate() {
            scale[j] = scale[j].max(v.abs());
        }
    }
    for s in scale.iter_mut() {
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let x = DMatrix::from_fn(m, k, |i, j| rows[i][j] / scale[j]);
    let b = DVector::from_column_slice(y);
    let c = x
        .svd(true, true)
        .solve(&b, 1e-13)
        .map_err(|e| Error::NumericalFailure(e.to_string()))?;
    let out: Vec<f64> = c.iter().zip(&scale).map(|(c, s)| c / s).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite regression".into()));
    }
    Ok(out)
}

/// Complex least squares for `X c = y`.
pub fn lstsq_complex(x: DMatrix<Complex64>, y: &[Complex64]) -> Result<Vec<Complex64>> {
    let b = DVector::from_column_slice(y);
    let c = x
        .svd(true, true)
        .solve(&b, 1e-15)
        .map_err(|e| Error::NumericalFailure(e.to_string()))?;
    Ok(c.iter().copied().collect())
}

/// Slope of `y` against `x` by ordinary least squares.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Decides whether a sampled log-ratio profile `y(x)` (x ordered from the
/// interior of the domain towards the edge where blow-up would happen) stays
/// bounded: unbounded means the outer part exceeds the inner part and is
/// still rising at the edge.
pub fn edge_bounded(y: &[f64]) -> bool {
    let n = y.len();
    if n < 8 {
        return y.iter().all(|v| v.is_finite());
    }
    if y.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return false;
    }
    let cut = n - n / 4;
    let inner = y[..cut].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let outer = y[cut..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tail = &y[n - n / 8..];
    let xs: Vec<f64> = (0..tail.len()).map(|i| i as f64).collect();
    let rising = slope(&xs, tail) > 1e-6 * (1.0 + outer.abs());
    !(outer > inner + 1e-9 && rising)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompSum::new();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn lstsq_exact_line() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 1.0]).collect();
        let y: Vec<f64> = (0..10).map(|i| 3.0 * i as f64 - 2.0).collect();
        let c = lstsq(&rows, &y).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-12 && (c[1] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn ln_factorial_small() {
        assert!((ln_factorial(3) - 6f64.ln()).abs() < 1e-13);
        assert!((ln_factorial(20) - 2432902008176640000f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn edge_detection() {
        let up: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let flat: Vec<f64> = (0..40).map(|i| -(i as f64 * 0.1).exp()).collect();
        assert!(!edge_bounded(&up));
        assert!(edge_bounded(&flat));
    }
}
