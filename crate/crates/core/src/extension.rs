//! The truncated Laplace operator inverting the asymptotic Borel map, its
//! asymptotic-expansion certificate and numerical coefficient recovery.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{Kernel, MomentTable};
use crate::numeric::{linspace, ln_factorial, lstsq, lstsq_complex, slope, CompSumC};
use crate::par;
use crate::proximate::{PolarPoint, SectorFunction};
use crate::quadrature::{integrate, QuadOptions};
use crate::sequences::Sequence;

/// A finite coefficient sequence `(a_p)`, optionally with a declared type `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSequence {
    pub a: Vec<Complex64>,
    pub declared_a: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CoeffFile {
    coeffs_re: Vec<f64>,
    #[serde(default)]
    coeffs_im: Vec<f64>,
    #[serde(rename = "A", default)]
    a: Option<f64>,
}

impl CoefficientSequence {
    pub fn new(a: Vec<Complex64>) -> Self {
        Self {
            a,
            declared_a: None,
        }
    }

    pub fn from_real(a: &[f64]) -> Self {
        Self::new(a.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn with_type(mut self, a: f64) -> Self {
        self.declared_a = Some(a);
        self
    }

    /// Reads `{"coeffs_re": [...], "coeffs_im": [...], "A": 1.0}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let f: CoeffFile = serde_json::from_str(text)?;
        if !f.coeffs_im.is_empty() && f.coeffs_im.len() != f.coeffs_re.len() {
            return Err(Error::InvalidParameter(
                "coeffs_im must be empty or match coeffs_re".into(),
            ));
        }
        let a = f
            .coeffs_re
            .iter()
            .enumerate()
            .map(|(i, &re)| Complex64::new(re, f.coeffs_im.get(i).copied().unwrap_or(0.0)))
            .collect();
        Ok(Self { a, declared_a: f.a })
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn type_or_one(&self) -> f64 {
        self.declared_a.unwrap_or(1.0)
    }

    pub fn scale_add(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Self {
        let n = self.len().max(other.len());
        let zero = Complex64::new(0.0, 0.0);
        let a = (0..n)
            .map(|p| {
                alpha * self.a.get(p).copied().unwrap_or(zero)
                    + beta * other.a.get(p).copied().unwrap_or(zero)
            })
            .collect();
        Self::new(a)
    }
}

/// `log(A^p p! M_p)`.
fn log_weight(s: &Sequence, big_a: f64, p: usize) -> Result<f64> {
    Ok(p as f64 * big_a.ln() + ln_factorial(p) + s.log_big(p)?)
}

/// `sup_p |a_p| / (A^p p! M_p)` over the available coefficients.
pub fn lambda_norm(a: &CoefficientSequence, s: &Sequence, big_a: f64) -> Result<f64> {
    if !(big_a > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "A must be positive, got {big_a}"
        )));
    }
    let mut best = 0.0f64;
    for (p, ap) in a.a.iter().enumerate() {
        let m = ap.norm();
        if m > 0.0 {
            best = best.max((m.ln() - log_weight(s, big_a, p)?).exp());
        }
    }
    Ok(best)
}

/// Formal Borel transform `sum a_p/(p! m(p)) u^p` with its geometric envelope.
#[derive(Debug, Clone, Serialize)]
pub struct BorelSum {
    pub b: Vec<Complex64>,
    pub c2: f64,
    /// `None` when fewer than two coefficients are nonzero.
    pub d2: Option<f64>,
    pub r0: f64,
    pub eps: f64,
}

impl BorelSum {
    pub fn eval(&self, u: f64) -> Complex64 {
        self.b
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * u + c)
    }

    pub fn is_zero(&self) -> bool {
        self.b.iter().all(|c| c.norm() == 0.0)
    }
}

pub const DEFAULT_EPS: f64 = 0.1;

pub fn formal_borel(a: &CoefficientSequence, t: &MomentTable, eps: f64) -> Result<BorelSum> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0,1), got {eps}"
        )));
    }
    let mut b = Vec::with_capacity(a.len());
    let mut pts = vec![];
    for (p, ap) in a.a.iter().enumerate() {
        let m = ap.norm();
        if m == 0.0 {
            b.push(Complex64::new(0.0, 0.0));
            continue;
        }
        let lb = m.ln() - ln_factorial(p) - t.log_value(p)?;
        b.push(Complex64::from_polar(lb.exp(), ap.arg()));
        pts.push((p, lb));
    }
    if pts.len() < 2 {
        let c2 = pts.first().map(|&(_, lb)| lb.exp()).unwrap_or(0.0);
        return Ok(BorelSum {
            b,
            c2,
            d2: None,
            r0: 1.0,
            eps,
        });
    }
    let fit = |pts: &[(usize, f64)]| -> Result<f64> {
        let rows: Vec<Vec<f64>> = pts.iter().map(|&(p, _)| vec![p as f64, 1.0]).collect();
        let y: Vec<f64> = pts.iter().map(|&(_, v)| v).collect();
        Ok(lstsq(&rows, &y)?[0])
    };
    let ld = fit(&pts)?;
    if pts.len() >= 6 {
        let h = pts.len() / 2;
        let (s1, s2) = (fit(&pts[..h])?, fit(&pts[h..])?);
        if (s2 - s1).abs() > 1.0 {
            return Err(Error::NotInClass(format!(
                "envelope slope drifts from {s1:.3} to {s2:.3}"
            )));
        }
    }
    let lc = pts
        .iter()
        .map(|&(p, v)| v - p as f64 * ld)
        .fold(f64::NEG_INFINITY, f64::max);
    let d2 = ld.exp();
    Ok(BorelSum {
        b,
        c2: lc.exp(),
        d2: Some(d2),
        r0: (1.0 - eps) / d2,
        eps,
    })
}

/// `f(z) = int_0^{R_0} e_V(u/z) g(u) du/u`, evaluated as a function on the
/// sector where the kernel decays.
#[derive(Debug, Clone)]
pub struct Extension {
    pub borel: BorelSum,
    pub kernel: Kernel,
    pub tol: f64,
}

impl Extension {
    pub fn new(borel: BorelSum, kernel: Kernel, tol: f64) -> Self {
        Self { borel, kernel, tol }
    }
}

impl SectorFunction for Extension {
    fn eval(&self, z: PolarPoint) -> Result<Complex64> {
        extend(&self.borel, &self.kernel, z, self.tol)
    }

    fn half_opening(&self) -> f64 {
        self.kernel.half_opening()
    }
}

pub fn extend(borel: &BorelSum, k: &Kernel, z: PolarPoint, tol: f64) -> Result<Complex64> {
    if !(z.r > 0.0) {
        return Err(Error::OutOfDomain(format!(
            "|z| must be positive, got {}",
            z.r
        )));
    }
    if !k.weight.is_sectorial() && z.theta != 0.0 {
        return Err(Error::OutOfSector(format!(
            "{} is real-axis only",
            k.weight.name
        )));
    }
    if z.theta.abs() >= k.half_opening() {
        return Err(Error::OutOfSector(format!(
            "arg z = {} outside |arg| < {}",
            z.theta,
            k.half_opening()
        )));
    }
    if borel.is_zero() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let r0 = borel.r0;
    // u = R0 e^{-y}; du/u = -dy
    let y_max = (r0 / z.r).ln().max(0.0) + 40.0;
    let q = integrate(
        |y: f64| {
            let u = r0 * (-y).exp();
            let w = PolarPoint::new(u / z.r, -z.theta);
            match k.eval(w) {
                Ok(e) => e * borel.eval(u),
                Err(_) => Complex64::new(f64::NAN, f64::NAN),
            }
        },
        0.0,
        y_max,
        QuadOptions {
            rel_tol: tol,
            abs_tol: 1e-300,
            max_panels: 8000,
            initial_panels: 16,
        },
    )?;
    Ok(q.value)
}

/// `|f(z) - sum_{p<N} a_p z^p/p!|` with compensated summation.
pub fn asymptotic_error(f: Complex64, a: &CoefficientSequence, z: PolarPoint, n: usize) -> f64 {
    let mut acc = CompSumC::default();
    acc.add(f);
    let lr = z.r.ln();
    for p in 0..n.min(a.len()) {
        let ap = a.a[p];
        if ap.norm() == 0.0 {
            continue;
        }
        let mag = (p as f64 * lr - ln_factorial(p)).exp();
        acc.add(-(ap * Complex64::from_polar(mag, p as f64 * z.theta)));
    }
    acc.value().norm()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NoiseFloor {
    pub rel: f64,
    pub abs: f64,
    /// Errors below `mult * max(abs, rel*|f|)` are treated as noise.
    pub mult: f64,
}

impl Default for NoiseFloor {
    fn default() -> Self {
        Self {
            rel: 1e-12,
            abs: 1e-15,
            mult: 100.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticCertificate {
    pub c: f64,
    pub a: f64,
    pub n_range: (usize, usize),
    pub points: usize,
    /// `(z, N)` pairs with errors above the noise floor.
    pub used: usize,
    /// `max (log E_N - log(C A^N M_N |z|^N))`; pass iff `<= 0`.
    pub residual_max: f64,
    pub noise: NoiseFloor,
    pub pass: bool,
}

/// Normalized errors rising monotonically like `|z|^-s`, `s > VERTEX_SLOPE`,
/// over the innermost radii of a ray are read as unbounded. A wrong coefficient of
/// order `p < N` shows up as `|z|^{p-N}`, an integer power.
pub const VERTEX_SLOPE: f64 = 0.5;

/// Fits `|f(z) - sum_{p<N} a_p z^p/p!| <= C A^N M_N |z|^N` on the grid for
/// `N` in `n_lo..=n_hi`. Fails when, on some ray, the normalized error keeps
/// rising towards the vertex. The grid has to reach the asymptotic regime: below
/// the Borel radius `R_0` and where the truncated series has settled. Further out,
/// a remainder still converging looks the same as a missing term.
pub fn certify_expansion(
    f: &(dyn Fn(PolarPoint) -> Result<Complex64> + Sync),
    a: &CoefficientSequence,
    s: &Sequence,
    grid: &[PolarPoint],
    n_lo: usize,
    n_hi: usize,
    noise: NoiseFloor,
) -> Result<AsymptoticCertificate> {
    let n_lo = n_lo.max(1);
    if n_hi < n_lo || grid.is_empty() {
        return Err(Error::InvalidParameter("empty certification grid".into()));
    }
    let fz: Vec<Complex64> = par::map_slice(grid, |&z| f(z))
        .into_iter()
        .collect::<Result<_>>()?;
    let lbig = s.log_bigs(n_hi)?;
    // rays, each sorted from large to small modulus
    let mut rays: Vec<(f64, Vec<usize>)> = vec![];
    for (i, z) in grid.iter().enumerate() {
        match rays.iter_mut().find(|(th, _)| *th == z.theta) {
            Some((_, v)) => v.push(i),
            None => rays.push((z.theta, vec![i])),
        }
    }
    for (_, v) in rays.iter_mut() {
        v.sort_by(|&i, &j| grid[j].r.total_cmp(&grid[i].r));
    }
    let mut q: Vec<(usize, f64)> = vec![];
    for (n, &lb_n) in lbig.iter().enumerate().take(n_hi + 1).skip(n_lo) {
        for (_, idx) in &rays {
            let mut ray_q = vec![];
            let mut ray_lr = vec![];
            for &i in idx {
                let z = grid[i];
                let e = asymptotic_error(fz[i], a, z, n);
                let floor = noise.mult * noise.abs.max(noise.rel * fz[i].norm());
                if e <= floor {
                    continue;
                }
                let v = e.ln() - lb_n - n as f64 * z.r.ln();
                ray_q.push(v);
                ray_lr.push(z.r.ln());
                q.push((n, v));
            }
            let m = ray_q.len();
            let tail = (m / 8).max(4);
            // zeros of the remainder produce dips; a real power-law rise is monotone
            let rising = m >= 8 && {
                let (lr, qt) = (&ray_lr[m - tail..], &ray_q[m - tail..]);
                qt.windows(2).all(|w| w[1] > w[0]) && slope(lr, qt) < -VERTEX_SLOPE
            };
            if rising {
                return Err(Error::CertificationFailure(format!(
                    "normalized error unbounded as z -> 0 at N = {n}"
                )));
            }
        }
    }
    let la = q
        .iter()
        .map(|&(n, v)| v / n as f64)
        .fold(f64::NEG_INFINITY, f64::max);
    let (la, lc) = if q.is_empty() {
        (0.0, f64::NEG_INFINITY)
    } else {
        let lc = q
            .iter()
            .map(|&(n, v)| v - n as f64 * la)
            .fold(f64::NEG_INFINITY, f64::max);
        (la, lc)
    };
    let residual_max = q
        .iter()
        .map(|&(n, v)| v - lc - n as f64 * la)
        .fold(f64::NEG_INFINITY, f64::max);
    let finite = la.is_finite() && (lc.is_finite() || q.is_empty());
    Ok(AsymptoticCertificate {
        c: lc.exp(),
        a: la.exp(),
        n_range: (n_lo, n_hi),
        points: grid.len(),
        used: q.len(),
        residual_max: if q.is_empty() { 0.0 } else { residual_max },
        noise,
        pass: finite && (q.is_empty() || residual_max <= 1e-12),
    })
}

/// Fit region for coefficient recovery: `n_angles` rays over `fraction` of
/// the sector, on each ray `n_radii` Chebyshev radii in `(0, h cos(k theta)^{1/k})`
/// with `k = pi/(2 * half-opening)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RecoveryGrid {
    pub h: f64,
    pub n_angles: usize,
    pub n_radii: usize,
    pub fraction: f64,
}

impl RecoveryGrid {
    /// Defaults tuned for a flat sector of half-opening `pi/(2k)`.
    pub fn for_order(k: f64) -> Self {
        Self {
            h: 0.3 * 0.1f64.powf(1.0 / k),
            n_angles: 15,
            n_radii: 15,
            fraction: 0.9,
        }
    }

    pub fn points(&self, half_opening: f64) -> Vec<PolarPoint> {
        let k = PI / (2.0 * half_opening);
        let thetas = if self.n_angles > 1 {
            let e = self.fraction * half_opening;
            linspace(-e, e, self.n_angles)
        } else {
            vec![0.0]
        };
        let mut out = vec![];
        for th in thetas {
            let hh = self.h * (k * th).cos().powf(1.0 / k);
            for j in 0..self.n_radii {
                let c = (PI * (j as f64 + 0.5) / self.n_radii as f64).cos();
                out.push(PolarPoint::new(hh * (1.0 + c) / 2.0, th));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Recovered {
    pub a: Vec<Complex64>,
    /// Difference between fits of degree `N` and `N+1`.
    pub err: Vec<f64>,
    pub grid: RecoveryGrid,
}

pub const MAX_RECOVERY_ORDER: usize = 15;

fn fit_degree(z: &[PolarPoint], fz: &[Complex64], h: f64, d: usize) -> Result<Vec<Complex64>> {
    let x = DMatrix::from_fn(z.len(), d + 1, |i, p| {
        let w = z[i];
        Complex64::from_polar((w.r / h).powi(p as i32), p as f64 * w.theta)
    });
    let c = lstsq_complex(x, fz)?;
    Ok(c.iter()
        .enumerate()
        .map(|(p, c)| c * (ln_factorial(p) - p as f64 * h.ln()).exp())
        .collect())
}

/// Recovers `a_p ~ f^{(p)}(0)` for `p <= n_max` by a least-squares polynomial
/// fit of degree `n_max` over a fan of rays near the vertex.
pub fn borel_recover(
    f: &dyn SectorFunction,
    n_max: usize,
    grid: RecoveryGrid,
) -> Result<Recovered> {
    if n_max > MAX_RECOVERY_ORDER {
        return Err(Error::InvalidParameter(format!(
            "recovery limited to order {MAX_RECOVERY_ORDER} in double precision"
        )));
    }
    let pts = grid.points(f.half_opening().min(PI));
    if pts.len() < n_max + 2 {
        return Err(Error::InvalidParameter("recovery grid too small".into()));
    }
    let fz: Vec<Complex64> = par::map_slice(&pts, |&z| f.eval(z))
        .into_iter()
        .collect::<Result<_>>()?;
    let a = fit_degree(&pts, &fz, grid.h, n_max)?;
    let a2 = fit_degree(&pts, &fz, grid.h, n_max + 1)?;
    let err: Vec<f64> = (0..=n_max).map(|p| (a[p] - a2[p]).norm()).collect();
    if let Some(p) = (0..=n_max).find(|&p| !(a[p].re.is_finite() && a[p].im.is_finite())) {
        return Err(Error::RecoveryFailure {
            order: p,
            reason: "non-finite coefficient".into(),
        });
    }
    Ok(Recovered { a, err, grid })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RoundTripConfig {
    pub eps: f64,
    pub n_max: usize,
    pub grid: RecoveryGrid,
    pub tol: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundTrip {
    pub r0: f64,
    pub type_a: f64,
    /// `|a^_p - a_p| / (A^p p! M_p)`.
    pub weighted: Vec<f64>,
    pub max_weighted: f64,
    pub recovered: Recovered,
}

/// Extends `a`, recovers its coefficients, and reports the weighted distance
/// for `p <= min(n_max, len(a) - 1)`.
pub fn right_inverse_check(
    a: &CoefficientSequence,
    k: &Kernel,
    t: &MomentTable,
    s: &Sequence,
    cfg: RoundTripConfig,
) -> Result<RoundTrip> {
    if a.is_empty() {
        return Err(Error::InvalidParameter("empty coefficient sequence".into()));
    }
    let d = cfg.n_max.min(a.len() - 1);
    let borel = formal_borel(a, t, cfg.eps)?;
    let r0 = borel.r0;
    let ext = Extension::new(borel, k.clone(), cfg.tol);
    let rec = borel_recover(&ext, d, cfg.grid)?;
    let big_a = a.type_or_one();
    let weighted: Vec<f64> = (0..=d)
        .map(|p| Ok(((rec.a[p] - a.a[p]).norm().ln() - log_weight(s, big_a, p)?).exp()))
        .collect::<Result<_>>()?;
    let max_weighted = weighted.iter().cloned().fold(0.0, f64::max);
    Ok(RoundTrip {
        r0,
        type_a: big_a,
        weighted,
        max_weighted,
        recovered: rec,
    })
}
