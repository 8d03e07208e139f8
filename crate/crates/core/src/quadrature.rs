//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

pub trait Scalar:
    Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
    pub initial_panels: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_panels: 4000,
            initial_panels: 8,
        }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Quad<T> {
    pub value: T,
    pub error: f64,
    pub panels: usize,
}

struct Panel<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Panel<T> {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl<T> Eq for Panel<T> {}
impl<T> PartialOrd for Panel<T> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T> Ord for Panel<T> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.total_cmp(&o.error)
    }
}

fn gk15<T: Scalar, F: Fn(f64) -> T>(f: &F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k = k + s * WGK[j];
        if j % 2 == 1 {
            g = g + s * WG[j / 2];
        }
    }
    let k = k * h;
    let g = g * h;
    (k, (k - g).modulus())
}

/// Integrates `f` over `[a, b]`. Stops when the summed Kronrod-Gauss error
/// estimate is below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<T, F>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Quad<T>>
where
    T: Scalar,
    F: Fn(f64) -> T,
{
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::NumericalFailure(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(Quad {
            value: T::zero(),
            error: 0.0,
            panels: 0,
        });
    }
    let n0 = opts.initial_panels.max(1);
    let mut heap = BinaryHeap::new();
    for i in 0..n0 {
        let pa = a + (b - a) * i as f64 / n0 as f64;
        let pb = if i + 1 == n0 {
            b
        } else {
            a + (b - a) * (i + 1) as f64 / n0 as f64
        };
        let (value, error) = gk15(&f, pa, pb);
        heap.push(Panel {
            a: pa,
            b: pb,
            value,
            error,
        });
    }
    let min_width = (b - a) * 1e-13;
    loop {
        let mut total = T::zero();
        let mut err = 0.0;
        for p in heap.iter() {
            total = total + p.value;
            err += p.error;
        }
        if !err.is_finite() || !total.modulus().is_finite() {
            return Err(Error::NumericalFailure("non-finite integrand".into()));
        }
        let target = opts.abs_tol.max(opts.rel_tol * total.modulus());
        if err <= target {
            return Ok(Quad {
                value: total,
                error: err,
                panels: heap.len(),
            });
        }
        if heap.len() >= opts.max_panels {
            return Err(Error::NumericalFailure(format!(
                "quadrature did not converge: error {err:.3e} > target {target:.3e}"
            )));
        }
        let worst = heap.pop().expect("nonempty");
        if worst.b - worst.a < min_width {
            return Err(Error::NumericalFailure(format!(
                "panel width underflow near {}",
                worst.a
            )));
        }
        let m = 0.5 * (worst.a + worst.b);
        for (pa, pb) in [(worst.a, m), (m, worst.b)] {
            let (value, error) = gk15(&f, pa, pb);
            heap.push(Panel {
                a: pa,
                b: pb,
                value,
                error,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(
            |x: f64| x.powi(5) - 2.0 * x,
            0.0,
            2.0,
            QuadOptions::rel(1e-14),
        )
        .unwrap();
        assert!((q.value - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn peaked_integrand() {
        let q = integrate(
            |x: f64| (-(x * x) * 400.0).exp(),
            -3.0,
            3.0,
            QuadOptions::rel(1e-12),
        )
        .unwrap();
        let exact = std::f64::consts::PI.sqrt() / 20.0;
        assert!((q.value - exact).abs() < 1e-13);
    }

    #[test]
    fn complex_exponential() {
        let q = integrate(
            |x: f64| Complex64::new(0.0, x).exp(),
            0.0,
            std::f64::consts::PI,
            QuadOptions::rel(1e-13),
        )
        .unwrap();
        assert!((q.value - Complex64::new(0.0, 2.0)).norm() < 1e-13);
    }
}
