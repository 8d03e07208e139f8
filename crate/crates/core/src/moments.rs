//! Kernels `e_V`, moment sequences, the entire function `F_V` and related
//! growth certificates.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::growth::GrowthProfile;
use crate::numeric::{edge_bounded, linspace, logspace, lstsq, CompSumC};
use crate::par;
use crate::proximate::{PolarPoint, Weight};
use crate::quadrature::{integrate, QuadOptions};
use crate::sequences::Sequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `e_V(z) = z exp(-V(z))`.
    Ev,
    /// `e_k(z) = k z^k exp(-z^k)`, only for `V = z^k`.
    Classical,
}

#[derive(Debug, Clone)]
pub struct Kernel {
    pub weight: Weight,
    pub variant: Variant,
}

pub fn kernel(w: &Weight, variant: Variant) -> Result<Kernel> {
    if variant == Variant::Classical && w.monomial_order().is_none() {
        return Err(Error::InvalidVariant(format!(
            "classical kernel needs V = z^k, got {}",
            w.name
        )));
    }
    Ok(Kernel {
        weight: w.clone(),
        variant,
    })
}

impl Kernel {
    /// `ev` (with the given weight) or `classical:<k>`.
    pub fn parse(spec: &str, weight: Option<&Weight>) -> Result<Self> {
        let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
        match head {
            "ev" => {
                let w = match (rest.is_empty(), weight) {
                    (false, _) => Weight::gevrey(rest.parse::<f64>().map_err(|_| {
                        Error::InvalidParameter(format!("bad kernel order '{rest}'"))
                    })?)?,
                    (true, Some(w)) => w.clone(),
                    (true, None) => {
                        return Err(Error::InvalidParameter("ev kernel needs a weight".into()))
                    }
                };
                kernel(&w, Variant::Ev)
            }
            "classical" => {
                let k = rest
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad kernel order '{rest}'")))?;
                kernel(&Weight::gevrey(k)?, Variant::Classical)
            }
            _ => Err(Error::InvalidVariant(format!("unknown kernel '{head}'"))),
        }
    }

    pub fn name(&self) -> String {
        match self.variant {
            Variant::Ev => format!("z*exp(-V(z)), V = {}", self.weight.name),
            Variant::Classical => format!("k z^k exp(-z^k), V = {}", self.weight.name),
        }
    }

    /// Half-opening of the sector on which the kernel decays.
    pub fn half_opening(&self) -> f64 {
        self.weight.flat_half_opening()
    }

    pub fn eval(&self, z: PolarPoint) -> Result<Complex64> {
        match self.variant {
            Variant::Ev => Ok(z.to_complex() * (-self.weight.eval(z)?).exp()),
            Variant::Classical => {
                let k = self
                    .weight
                    .monomial_order()
                    .expect("checked at construction");
                let zk = self.weight.eval(z)?;
                Ok(zk * k * (-zk).exp())
            }
        }
    }

    /// `log |e(z)|`, without under/overflow.
    pub fn log_modulus(&self, z: PolarPoint) -> Result<f64> {
        let v = self.weight.eval(z)?;
        Ok(match self.variant {
            Variant::Ev => z.r.ln() - v.re,
            Variant::Classical => {
                let k = self
                    .weight
                    .monomial_order()
                    .expect("checked at construction");
                k.ln() + v.norm().ln() - v.re
            }
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MomentValue {
    pub log_value: f64,
    pub rel_err: f64,
}

impl MomentValue {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }
}

const DROP: f64 = 40.0;
const SCAN_STEP: f64 = 0.25;
const SCAN_LIMIT: f64 = 400.0;

/// `m(lambda) = int_0^inf t^{lambda-1} e(t) dt`, computed in `x = log t`
/// between the points where the log-integrand has fallen 40 below its peak.
pub fn moment(k: &Kernel, lambda: f64, tol: f64) -> Result<MomentValue> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "order must be >= 0, got {lambda}"
        )));
    }
    let lphi =
        |x: f64| -> Result<f64> { Ok(lambda * x + k.log_modulus(PolarPoint::real(x.exp()))?) };
    // walk right from 0 until the integrand has dropped and keeps dropping
    let mut peak = lphi(0.0)?;
    let mut hi = 0.0;
    loop {
        hi += SCAN_STEP;
        if hi > SCAN_LIMIT {
            return Err(Error::DivergenceDetected(format!(
                "t^(lambda-1) e(t) not decaying at t = e^{SCAN_LIMIT}"
            )));
        }
        let v = lphi(hi)?;
        if v > peak {
            peak = v;
        } else if v < peak - DROP {
            break;
        }
    }
    let mut lo = 0.0;
    loop {
        lo -= SCAN_STEP;
        if lo < -SCAN_LIMIT {
            return Err(Error::DivergenceDetected(
                "integrand not decaying at the origin".into(),
            ));
        }
        let v = lphi(lo)?;
        if v > peak {
            peak = v;
        } else if v < peak - DROP {
            break;
        }
    }
    let q = integrate(
        |x: f64| lphi(x).map(|v| (v - peak).exp()).unwrap_or(f64::NAN),
        lo,
        hi,
        QuadOptions {
            rel_tol: tol,
            initial_panels: 16,
            ..QuadOptions::default()
        },
    )?;
    if !(q.value > 0.0) {
        return Err(Error::NumericalFailure("non-positive moment".into()));
    }
    Ok(MomentValue {
        log_value: peak + q.value.ln(),
        rel_err: q.error / q.value,
    })
}

/// Largest order accepted by [`moment_table`].
pub const MAX_TABLE: usize = 200;

#[derive(Debug, Clone, Serialize)]
pub struct MomentTable {
    pub kernel: String,
    pub log_values: Vec<f64>,
    pub rel_err: Vec<f64>,
    pub tol: f64,
}

impl MomentTable {
    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }

    pub fn log_value(&self, p: usize) -> Result<f64> {
        self.log_values.get(p).copied().ok_or_else(|| {
            Error::TableExhausted(format!("moment {p} not in table of {}", self.len()))
        })
    }

    pub fn value(&self, p: usize) -> Result<f64> {
        Ok(self.log_value(p)?.exp())
    }

    /// First index where `log m(p)` fails to be convex, if any.
    pub fn log_convexity_violation(&self) -> Option<usize> {
        let v = &self.log_values;
        (1..v.len().saturating_sub(1)).find(|&p| {
            let d2 = v[p + 1] - 2.0 * v[p] + v[p - 1];
            d2 < -1e-8 * v[p].abs().max(1.0)
        })
    }
}

/// Moments `m(0..=n)`, computed in parallel.
pub fn moment_table(k: &Kernel, n: usize, tol: f64) -> Result<MomentTable> {
    if n > MAX_TABLE {
        return Err(Error::InvalidParameter(format!(
            "moment tables are limited to order {MAX_TABLE}, got {n}"
        )));
    }
    let vals: Vec<MomentValue> = par::map_range(n + 1, |p| moment(k, p as f64, tol))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(MomentTable {
        kernel: k.name(),
        log_values: vals.iter().map(|v| v.log_value).collect(),
        rel_err: vals.iter().map(|v| v.rel_err).collect(),
        tol,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KernelGrid {
    /// Opening in units of pi.
    pub alpha: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelBound {
    pub c: f64,
    pub k_const: f64,
    pub grid: KernelGrid,
}

fn constant_grid() -> Vec<f64> {
    logspace(1e-3, 1e3, 64)
}

/// Fits `|e_V(z)| <= C h_M(K/|z|)` on the subsector grid: smallest `K` on the
/// constant grid with a ratio bounded towards `r_max`.
pub fn kernel_bound_certificate(
    k: &Kernel,
    profile: &GrowthProfile,
    grid: KernelGrid,
) -> Result<KernelBound> {
    let edge = 0.98 * grid.alpha * FRAC_PI_2;
    if !(grid.alpha > 0.0) || grid.alpha * FRAC_PI_2 >= k.half_opening() {
        return Err(Error::OutOfSector(format!(
            "opening {} not strictly inside the kernel sector",
            grid.alpha
        )));
    }
    let rs = logspace(grid.r_min, grid.r_max, grid.n_r);
    let thetas = linspace(-edge, edge, grid.n_theta.max(1));
    let le: Vec<f64> = rs
        .iter()
        .map(|&r| {
            thetas
                .iter()
                .map(|&th| k.log_modulus(PolarPoint::new(r, th)))
                .try_fold(f64::NEG_INFINITY, |a, v| v.map(|v| a.max(v)))
        })
        .collect::<Result<_>>()?;
    for kc in constant_grid() {
        let m: Result<Vec<f64>> = rs.iter().map(|&r| profile.big_m(r / kc)).collect();
        let Ok(m) = m else { continue };
        let y: Vec<f64> = le.iter().zip(&m).map(|(a, b)| a + b).collect();
        if edge_bounded(&y) {
            let c = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp();
            return Ok(KernelBound {
                c,
                k_const: kc,
                grid,
            });
        }
    }
    Err(Error::CertificationFailure(
        "|e_V(z)|/h_M(K/|z|) unbounded for every K on the grid".into(),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentEquivalence {
    pub l: f64,
    pub h: f64,
    pub drift: f64,
    pub plausible: bool,
    pub range: (usize, usize),
}

/// `L, H` = min/max of `(m(p)/M_p)^{1/p}` over `p` in `lo..=hi`; plausible
/// iff the ratio does not drift by more than 0.05 in log over the last half.
pub fn equivalence_certificate(
    t: &MomentTable,
    s: &Sequence,
    lo: usize,
    hi: usize,
) -> Result<MomentEquivalence> {
    let lo = lo.max(1);
    if hi <= lo {
        return Err(Error::InvalidParameter(format!("empty range {lo}..={hi}")));
    }
    let lr: Vec<f64> = (lo..=hi)
        .map(|p| Ok((t.log_value(p)? - s.log_big(p)?) / p as f64))
        .collect::<Result<_>>()?;
    let l = lr.iter().cloned().fold(f64::INFINITY, f64::min).exp();
    let h = lr.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp();
    let drift = lr[lr.len() - 1] - lr[(lr.len() - 1) / 2];
    Ok(MomentEquivalence {
        l,
        h,
        drift,
        plausible: drift.abs() <= 0.05,
        range: (lo, hi),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FvValue {
    pub value: Complex64,
    pub terms: usize,
    pub tail_bound: f64,
}

/// `F_V(z) = sum z^n / m(n)`; stops once the ratio-test tail bound is below
/// `tol * sum |z|^n/m(n)`.
pub fn fv_eval(t: &MomentTable, z: Complex64, tol: f64) -> Result<FvValue> {
    let lz = z.norm().ln();
    let th = z.arg();
    let mut acc = CompSumC::default();
    let mut abs_sum = 0.0;
    let n_tab = t.len();
    for n in 0..n_tab {
        let lt = if n == 0 {
            -t.log_values[0]
        } else {
            n as f64 * lz - t.log_values[n]
        };
        let mag = lt.exp();
        acc.add(Complex64::from_polar(mag, n as f64 * th));
        abs_sum += mag;
        if n + 1 < n_tab {
            let lq = lz + t.log_values[n] - t.log_values[n + 1];
            if lq < 0.0 {
                let next = (n as f64 + 1.0) * lz - t.log_values[n + 1];
                let tail = next.exp() / (1.0 - lq.exp());
                if tail <= tol * abs_sum || (mag == 0.0 && n > 0) {
                    return Ok(FvValue {
                        value: acc.value(),
                        terms: n + 1,
                        tail_bound: tail,
                    });
                }
            }
        }
    }
    Err(Error::TableExhausted(format!(
        "{n_tab} moments do not bound the tail of F_V at |z| = {}",
        z.norm()
    )))
}

#[derive(Debug, Clone, Serialize)]
pub struct KomatsuFit {
    pub c_tilde: f64,
    pub k_tilde: f64,
    /// Coefficient side: `1/m(n) <= c k^n / M_n`.
    pub coeff_c: f64,
    pub coeff_k: f64,
    pub grid: (f64, f64, usize),
}

/// Fits `|F_V(r)| <= C exp(M(K r))` on `r` in `[r_min, r_max]` (the maximum
/// modulus on `|z| = r` is attained on the positive axis).
pub fn komatsu_growth_check(
    t: &MomentTable,
    s: &Sequence,
    profile: &GrowthProfile,
    r_min: f64,
    r_max: f64,
    n: usize,
) -> Result<KomatsuFit> {
    let rs = logspace(r_min, r_max, n);
    let lf: Vec<f64> = rs
        .iter()
        .map(|&r| Ok(fv_eval(t, Complex64::new(r, 0.0), 1e-12)?.value.re.ln()))
        .collect::<Result<_>>()?;
    let mut fit = None;
    for kc in constant_grid() {
        let m: Result<Vec<f64>> = rs.iter().map(|&r| profile.big_m(kc * r)).collect();
        let Ok(m) = m else { continue };
        let y: Vec<f64> = lf.iter().zip(&m).map(|(a, b)| a - b).collect();
        if edge_bounded(&y) {
            fit = Some((
                y.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp(),
                kc,
            ));
            break;
        }
    }
    let (c_tilde, k_tilde) = fit.ok_or_else(|| {
        Error::CertificationFailure("|F_V(r)| exp(-M(K r)) unbounded for every K".into())
    })?;
    let n_tab = t.len() - 1;
    let mut lk = f64::NEG_INFINITY;
    for p in 1..=n_tab {
        lk = lk.max((s.log_big(p)? - t.log_values[p]) / p as f64);
    }
    let mut lc = f64::NEG_INFINITY;
    for p in 0..=n_tab {
        lc = lc.max(s.log_big(p)? - t.log_values[p] - p as f64 * lk);
    }
    Ok(KomatsuFit {
        c_tilde,
        k_tilde,
        coeff_c: lc.exp(),
        coeff_k: lk.exp(),
        grid: (r_min, r_max, n),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct IntegralBound {
    pub c: f64,
    pub d: f64,
    /// `log int_0^inf t^{p-1} h_M(K/t) dt` for each `p` in range.
    pub log_integrals: Vec<f64>,
    pub range: (usize, usize),
    pub drift: f64,
    pub bounded: bool,
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `log int_0^inf t^{p-1} h_M(K/t) dt`, summed exactly over the segments
/// where `h_M` is a monomial.
pub fn log_hm_integral(profile: &GrowthProfile, k: f64, p: usize) -> Result<f64> {
    if p == 0 || !(k > 0.0) {
        return Err(Error::InvalidParameter("need p >= 1 and K > 0".into()));
    }
    let lm = profile.log_quotients();
    let lb = profile.log_bigs();
    let lk = k.ln();
    let pf = p as f64;
    let mut total = pf * (lk + lm[0]) - pf.ln();
    let mut prev = f64::INFINITY;
    for j in 1..lm.len() {
        let l1 = lk + lm[j - 1];
        let l2 = lk + lm[j];
        let delta = l2 - l1;
        if delta <= 0.0 {
            continue;
        }
        let a = pf - j as f64;
        let body = if a == 0.0 {
            delta.ln()
        } else if a > 0.0 {
            a * l1 + (a * delta).exp_m1().ln() - a.ln()
        } else {
            a * l1 + (-(a * delta).exp_m1()).ln() - (-a).ln()
        };
        let term = lb[j] + j as f64 * lk + body;
        total = log_add(total, term);
        if j > p + 2 && term < total - 45.0 && term < prev {
            return Ok(total);
        }
        prev = term;
    }
    Err(Error::RangeExceeded(format!(
        "prefix of {} quotients too short for the order-{p} integral",
        lm.len()
    )))
}

/// Envelope `int_0^inf t^{p-1} h_M(K/t) dt <= C D^p M_p` on `lo..=hi`.
pub fn hm_integral_bound(
    profile: &GrowthProfile,
    k: f64,
    lo: usize,
    hi: usize,
) -> Result<IntegralBound> {
    let lo = lo.max(1);
    if hi <= lo + 1 {
        return Err(Error::InvalidParameter(format!(
            "range {lo}..={hi} too short"
        )));
    }
    let li: Vec<f64> = (lo..=hi)
        .map(|p| log_hm_integral(profile, k, p))
        .collect::<Result<_>>()?;
    let lb = profile.log_bigs();
    let y: Vec<f64> = (lo..=hi).map(|p| li[p - lo] - lb[p]).collect();
    let rows: Vec<Vec<f64>> = (lo..=hi).map(|p| vec![p as f64, 1.0]).collect();
    let ld = lstsq(&rows, &y)?[0];
    let lc = (lo..=hi)
        .map(|p| y[p - lo] - p as f64 * ld)
        .fold(f64::NEG_INFINITY, f64::max);
    let lr: Vec<f64> = (lo..=hi).map(|p| y[p - lo] / p as f64).collect();
    let drift = lr[lr.len() - 1] - lr[(lr.len() - 1) / 2];
    Ok(IntegralBound {
        c: lc.exp(),
        d: ld.exp(),
        log_integrals: li,
        range: (lo, hi),
        drift,
        bounded: drift.abs() <= 0.05,
    })
}
