//! Proximate-order weights `V`, flat functions `exp(-V(1/z))` and their
//! flatness certificates.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::growth::{omega, GrowthProfile};
use crate::numeric::{edge_bounded, linspace, logspace, slope};
use crate::par;

/// A point `(r, theta)` of the Riemann surface of the logarithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    pub fn new(r: f64, theta: f64) -> Self {
        Self { r, theta }
    }

    pub fn real(r: f64) -> Self {
        Self { r, theta: 0.0 }
    }

    pub fn inv(self) -> Self {
        Self::new(1.0 / self.r, -self.theta)
    }

    pub fn conj(self) -> Self {
        Self::new(self.r, -self.theta)
    }

    pub fn scale(self, c: f64) -> Self {
        Self::new(self.r * c, self.theta)
    }

    /// `z^s` on the Riemann surface.
    pub fn powf(self, s: f64) -> Self {
        Self::new(self.r.powf(s), self.theta * s)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::from_polar(self.r, self.theta)
    }
}

/// Closed-form weight expressions accepted from users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WeightExpr {
    /// `coeff * z^k`.
    Monomial {
        k: f64,
        #[serde(default = "one")]
        coeff: f64,
    },
    /// `coeff * z^k / (1+z)^m` with the principal branch of `log(1+z)`.
    Ratio {
        k: f64,
        m: f64,
        #[serde(default = "one")]
        coeff: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl WeightExpr {
    fn eval(&self, z: PolarPoint) -> Complex64 {
        let lz = Complex64::new(z.r.ln(), z.theta);
        match *self {
            WeightExpr::Monomial { k, coeff } => (lz * k).exp() * coeff,
            WeightExpr::Ratio { k, m, coeff } => {
                let one_plus = Complex64::new(1.0, 0.0) + z.to_complex();
                (lz * k - one_plus.ln() * m).exp() * coeff
            }
        }
    }

    /// Growth order at infinity on the positive axis.
    pub fn order(&self) -> f64 {
        match *self {
            WeightExpr::Monomial { k, .. } => k,
            WeightExpr::Ratio { k, m, .. } => k - m,
        }
    }

    /// Parses `z`, `z^k`, `c*z^k` and `z^k/(1+z)^m`.
    pub fn parse(text: &str) -> Result<Self> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::WeightEvaluation(format!("cannot parse weight expression '{text}'"));
        let (num, den) = match s.split_once('/') {
            Some((n, d)) => (n, Some(d)),
            None => (s.as_str(), None),
        };
        let (coeff, mono) = match num.split_once('*') {
            Some((c, m)) => (c.parse::<f64>().map_err(|_| bad())?, m),
            None => (1.0, num),
        };
        let k = match mono.strip_prefix('z') {
            Some("") => 1.0,
            Some(rest) => rest
                .strip_prefix('^')
                .ok_or_else(bad)?
                .trim_matches(|c| c == '(' || c == ')')
                .parse::<f64>()
                .map_err(|_| bad())?,
            None => return Err(bad()),
        };
        match den {
            None => Ok(WeightExpr::Monomial { k, coeff }),
            Some(d) => {
                let m = match d.strip_prefix("(1+z)") {
                    Some("") => 1.0,
                    Some(rest) => rest
                        .strip_prefix('^')
                        .ok_or_else(bad)?
                        .trim_matches(|c| c == '(' || c == ')')
                        .parse::<f64>()
                        .map_err(|_| bad())?,
                    None => return Err(bad()),
                };
                Ok(WeightExpr::Ratio { k, m, coeff })
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum WeightKind {
    /// Analytic on `S_gamma`, i.e. for `|arg z| < gamma*pi/2`.
    Sectorial { expr: WeightExpr, gamma: f64 },
    /// `V(t) = M(t)` on the positive axis only.
    RealAxis(Box<GrowthProfile>),
}

#[derive(Debug, Clone)]
pub struct Weight {
    pub name: String,
    pub kind: WeightKind,
    /// Intended limit of the proximate order.
    pub rho_target: f64,
}

/// JSON weight record: a [`WeightExpr`] plus optional sector data.
#[derive(Debug, Clone, Deserialize)]
struct WeightRecord {
    #[serde(flatten)]
    expr: WeightExpr,
    gamma: Option<f64>,
    rho: Option<f64>,
}

impl Weight {
    /// `V(z) = z^k`, analytic in `S_{2/k}`.
    pub fn gevrey(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "k must be positive, got {k}"
            )));
        }
        Ok(Self {
            name: format!("z^{k}"),
            kind: WeightKind::Sectorial {
                expr: WeightExpr::Monomial { k, coeff: 1.0 },
                gamma: 2.0 / k,
            },
            rho_target: k,
        })
    }

    /// Real-axis oracle `V(t) = M(t)`, so `exp(-V(t)) = h_M(1/t)`.
    pub fn from_profile(profile: &GrowthProfile) -> Self {
        let n = profile.prefix() - 1;
        let rho_target = if n >= 100 {
            omega(profile, n).map(|o| 1.0 / o.value).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        Self {
            name: format!("M[{}]", profile.name()),
            kind: WeightKind::RealAxis(Box::new(profile.clone())),
            rho_target,
        }
    }

    /// Wraps a user expression; nothing is validated here.
    pub fn user(expr: WeightExpr, gamma: f64, rho_target: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "sector parameter must lie in (0, 2], got {gamma}"
            )));
        }
        if !(rho_target > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "target order must be positive, got {rho_target}"
            )));
        }
        let name = match &expr {
            WeightExpr::Monomial { k, coeff } => format!("{coeff}*z^{k}"),
            WeightExpr::Ratio { k, m, coeff } => format!("{coeff}*z^{k}/(1+z)^{m}"),
        };
        Ok(Self {
            name,
            kind: WeightKind::Sectorial { expr, gamma },
            rho_target,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: WeightRecord = serde_json::from_str(text)?;
        let rho = rec.rho.unwrap_or_else(|| rec.expr.order());
        let gamma = rec.gamma.unwrap_or((2.0 / rho).min(2.0));
        Self::user(rec.expr, gamma, rho)
    }

    /// Parses `gevrey:<k>`, `powz:<k>`, `fromM`, `expr:<expression>[@gamma]`
    /// or `file:<json>`. `fromM` needs a profile.
    pub fn parse(spec: &str, profile: Option<&GrowthProfile>) -> Result<Self> {
        let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
        match head {
            "gevrey" | "powz" => {
                let k = rest
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("bad weight order '{rest}'")))?;
                Self::gevrey(k)
            }
            "fromM" => profile
                .map(Self::from_profile)
                .ok_or_else(|| Error::InvalidParameter("fromM needs a sequence".into())),
            "expr" => {
                let (e, g) = match rest.split_once('@') {
                    Some((e, g)) => (
                        e,
                        Some(g.parse::<f64>().map_err(|_| {
                            Error::InvalidParameter(format!("bad sector parameter '{g}'"))
                        })?),
                    ),
                    None => (rest, None),
                };
                let expr = WeightExpr::parse(e)?;
                let rho = expr.order();
                Self::user(expr, g.unwrap_or((2.0 / rho).min(2.0)), rho)
            }
            "file" => Self::from_json(&std::fs::read_to_string(Path::new(rest))?),
            _ => Err(Error::InvalidParameter(format!(
                "unknown weight kind '{head}'"
            ))),
        }
    }

    pub fn is_sectorial(&self) -> bool {
        matches!(self.kind, WeightKind::Sectorial { .. })
    }

    /// Half-opening (radians) of the sector where `V` is defined.
    pub fn half_opening(&self) -> f64 {
        match &self.kind {
            WeightKind::Sectorial { gamma, .. } => gamma * FRAC_PI_2,
            WeightKind::RealAxis(_) => 0.0,
        }
    }

    /// Half-opening `pi/(2 rho)` of the sector where `exp(-V(1/z))` is flat.
    pub fn flat_half_opening(&self) -> f64 {
        FRAC_PI_2 / self.rho_target
    }

    /// Exponent `k` when the weight is exactly `z^k`.
    pub fn monomial_order(&self) -> Option<f64> {
        match &self.kind {
            WeightKind::Sectorial {
                expr: WeightExpr::Monomial { k, coeff },
                ..
            } if *coeff == 1.0 => Some(*k),
            _ => None,
        }
    }

    pub fn eval(&self, z: PolarPoint) -> Result<Complex64> {
        if !(z.r > 0.0) {
            return Err(Error::WeightEvaluation(format!(
                "modulus must be positive, got {}",
                z.r
            )));
        }
        let v = match &self.kind {
            WeightKind::Sectorial { expr, .. } => {
                if z.theta.abs() >= self.half_opening() {
                    return Err(Error::OutOfSector(format!(
                        "arg {} outside |arg| < {}",
                        z.theta,
                        self.half_opening()
                    )));
                }
                expr.eval(z)
            }
            WeightKind::RealAxis(p) => {
                if z.theta != 0.0 {
                    return Err(Error::OutOfSector(format!(
                        "{} is defined on the positive axis only",
                        self.name
                    )));
                }
                Complex64::new(p.big_m(z.r)?, 0.0)
            }
        };
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::WeightEvaluation(format!(
                "V({}, {}) not finite",
                z.r, z.theta
            )));
        }
        Ok(v)
    }

    pub fn eval_real(&self, r: f64) -> Result<f64> {
        Ok(self.eval(PolarPoint::real(r))?.re)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ValidationGrid {
    pub r_min: f64,
    pub r_max: f64,
    pub n_r: usize,
    pub n_theta: usize,
}

impl Default for ValidationGrid {
    fn default() -> Self {
        Self {
            r_min: 1e-3,
            r_max: 1e3,
            n_r: 121,
            n_theta: 17,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightValidation {
    pub weight: String,
    pub grid: ValidationGrid,
    /// (iii)
    pub positive: bool,
    pub increasing: bool,
    pub value_at_r_min: f64,
    /// (iv) second differences of `V(e^t)`.
    pub convex_in_log: bool,
    /// (v) second divided differences of `log V(r)`.
    pub log_concave: bool,
    /// Grid points where strictness fails within tolerance.
    pub strictness_warnings: usize,
    /// (i) `max |V(zr)/V(r) - z^rho|` at the two largest radii.
    pub homogeneity_residual: Option<(f64, f64)>,
    pub homogeneity: Option<bool>,
    /// (ii)
    pub conjugate_residual: Option<f64>,
    pub conjugate: Option<bool>,
    pub angular_checks_skipped: bool,
    /// (vi) `sup |log V(r) - log M(r)|` on the grid.
    pub equivalence_residual: f64,
    /// Slope of `log V - log M` against `log r` on the upper half.
    pub equivalence_slope: f64,
    pub equivalence_bounded: bool,
    pub equivalence_to_zero: bool,
    pub sector_bound: Option<SectorBound>,
    pub pass: bool,
}

const CONVEX_TOL: f64 = 1e-9;

/// Numerical check of the weight properties on radial and angular grids.
pub fn validate_weight(
    w: &Weight,
    profile: &GrowthProfile,
    grid: ValidationGrid,
) -> Result<WeightValidation> {
    let rs = logspace(grid.r_min, grid.r_max, grid.n_r);
    let v: Vec<f64> = rs.iter().map(|&r| w.eval_real(r)).collect::<Result<_>>()?;
    let positive = v.iter().all(|&x| x > 0.0);
    let increasing = v.windows(2).all(|p| p[1] >= p[0]);

    let mut warnings = 0;
    let mut convex_in_log = true;
    for i in 1..v.len() - 1 {
        let d2 = v[i + 1] - 2.0 * v[i] + v[i - 1];
        let scale = v[i].abs().max(1.0);
        if d2 < -CONVEX_TOL * scale {
            convex_in_log = false;
        } else if d2 <= 0.0 {
            warnings += 1;
        }
    }
    let mut log_concave = positive;
    if positive {
        let lv: Vec<f64> = v.iter().map(|x| x.ln()).collect();
        for i in 1..v.len() - 1 {
            let s1 = (lv[i] - lv[i - 1]) / (rs[i] - rs[i - 1]);
            let s2 = (lv[i + 1] - lv[i]) / (rs[i + 1] - rs[i]);
            let d2 = s2 - s1;
            if d2 > CONVEX_TOL * s1.abs().max(1.0) {
                log_concave = false;
            } else if d2 >= 0.0 {
                warnings += 1;
            }
        }
    }

    let (homogeneity_residual, homogeneity, conjugate_residual, conjugate, skipped, sector_bound) =
        if w.is_sectorial() {
            let h = w.half_opening();
            let thetas = linspace(-0.9 * h, 0.9 * h, grid.n_theta);
            let rho = w.rho_target;
            let resid_at = |r: f64| -> Result<f64> {
                let vr = w.eval_real(r)?;
                let mut worst = 0.0f64;
                for &th in &thetas {
                    for s in [0.5, 2.0] {
                        let z = PolarPoint::new(s, th);
                        let got = w.eval(z.scale(r))? / vr;
                        let want = Complex64::from_polar(s.powf(rho), rho * th);
                        worst = worst.max((got - want).norm() / want.norm());
                    }
                }
                Ok(worst)
            };
            let r_hi = grid.r_max / 2.0;
            let hr = (resid_at(r_hi / 10.0)?, resid_at(r_hi)?);
            let hom = hr.1 <= 1e-2 || hr.1 < 0.5 * hr.0;
            let mut conj = 0.0f64;
            for &r in rs.iter().step_by(4) {
                for &th in &thetas {
                    let z = PolarPoint::new(r, th);
                    let a = w.eval(z.conj())?;
                    let b = w.eval(z)?.conj();
                    conj = conj.max((a - b).norm() / b.norm().max(f64::MIN_POSITIVE));
                }
            }
            let alpha = 0.9 / rho;
            let sb = sector_lower_bound(w, alpha, ValidationGrid { r_min: 1.0, ..grid }).ok();
            (
                Some(hr),
                Some(hom),
                Some(conj),
                Some(conj <= 1e-12),
                false,
                sb,
            )
        } else {
            (None, None, None, None, true, None)
        };

    let floor = profile.m0().max(std::f64::consts::E) * 1.0001;
    let cap = profile.max_argument();
    let mut lr = vec![];
    let mut e = vec![];
    for (i, &r) in rs.iter().enumerate() {
        if r > floor && r < cap && v[i] > 0.0 {
            let m = profile.big_m(r)?;
            if m > 0.0 {
                lr.push(r.ln());
                e.push(v[i].ln() - m.ln());
            }
        }
    }
    let (equivalence_residual, equivalence_slope) = if e.len() >= 4 {
        let half = e.len() / 2;
        (
            e.iter().fold(0.0f64, |a, x| a.max(x.abs())),
            slope(&lr[half..], &e[half..]),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    let equivalence_bounded = equivalence_slope.abs() <= 0.05;
    let equivalence_to_zero =
        equivalence_bounded && e.last().map(|x| x.abs() <= 0.05).unwrap_or(false);

    let pass = positive
        && increasing
        && convex_in_log
        && log_concave
        && homogeneity.unwrap_or(true)
        && conjugate.unwrap_or(true)
        && equivalence_bounded;
    Ok(WeightValidation {
        weight: w.name.clone(),
        grid,
        positive,
        increasing,
        value_at_r_min: v[0],
        convex_in_log,
        log_concave,
        strictness_warnings: warnings,
        homogeneity_residual,
        homogeneity,
        conjugate_residual,
        conjugate,
        angular_checks_skipped: skipped,
        equivalence_residual,
        equivalence_slope,
        equivalence_bounded,
        equivalence_to_zero,
        sector_bound,
        pass,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SectorBound {
    pub alpha: f64,
    pub b: f64,
    pub r0: f64,
}

/// `b = min Re V(z)/V(|z|)` over `|arg z| <= alpha*pi/2`, `|z| >= R_0`, with
/// `R_0` the smallest grid radius giving `b > 0`. The angular grid includes
/// both boundary rays.
pub fn sector_lower_bound(w: &Weight, alpha: f64, grid: ValidationGrid) -> Result<SectorBound> {
    if !w.is_sectorial() {
        return Err(Error::LowerBoundFailure(format!(
            "{} is not sectorial",
            w.name
        )));
    }
    let edge = alpha * FRAC_PI_2;
    if !(alpha > 0.0) || edge >= w.half_opening() {
        return Err(Error::OutOfSector(format!(
            "S_{alpha} not inside the domain of {}",
            w.name
        )));
    }
    let rs = logspace(grid.r_min, grid.r_max, grid.n_r);
    let thetas = linspace(-edge, edge, grid.n_theta.max(2));
    let per_r: Vec<f64> = rs
        .iter()
        .map(|&r| {
            let vr = w.eval_real(r)?;
            let mut b = f64::INFINITY;
            for &th in &thetas {
                b = b.min(w.eval(PolarPoint::new(r, th))?.re / vr);
            }
            Ok(b)
        })
        .collect::<Result<_>>()?;
    let mut suffix_min = f64::INFINITY;
    let mut best = None;
    for i in (0..rs.len()).rev() {
        suffix_min = suffix_min.min(per_r[i]);
        if suffix_min > 0.0 {
            best = Some((suffix_min, rs[i]));
        } else {
            break;
        }
    }
    match best {
        Some((b, r0)) => Ok(SectorBound { alpha, b, r0 }),
        None => Err(Error::LowerBoundFailure(format!(
            "Re V(z) <= 0 somewhere on S_{alpha} at every grid radius"
        ))),
    }
}

/// A holomorphic function on a sector of the Riemann surface.
pub trait SectorFunction: Sync {
    fn eval(&self, z: PolarPoint) -> Result<Complex64>;

    fn log_modulus(&self, z: PolarPoint) -> Result<f64> {
        Ok(self.eval(z)?.norm().ln())
    }

    /// Half-opening of the sector where the function is meant to be used.
    fn half_opening(&self) -> f64;
}

/// `G(z) = exp(-V(1/z))`.
#[derive(Debug, Clone)]
pub struct FlatFunction {
    pub weight: Weight,
}

pub fn flat_function(w: &Weight) -> Result<FlatFunction> {
    if !w.is_sectorial() {
        return Err(Error::WeightEvaluation(format!(
            "{} is real-axis only; flat functions need a sectorial weight",
            w.name
        )));
    }
    Ok(FlatFunction { weight: w.clone() })
}

impl SectorFunction for FlatFunction {
    fn eval(&self, z: PolarPoint) -> Result<Complex64> {
        Ok((-self.weight.eval(z.inv())?).exp())
    }

    fn log_modulus(&self, z: PolarPoint) -> Result<f64> {
        Ok(-self.weight.eval(z.inv())?.re)
    }

    fn half_opening(&self) -> f64 {
        self.weight.flat_half_opening()
    }
}

/// `G(z) = G0(z^s)`.
pub struct Lifted<'a> {
    pub inner: &'a dyn SectorFunction,
    pub s: f64,
}

pub fn lift_flat(inner: &dyn SectorFunction, s: f64) -> Result<Lifted<'_>> {
    if !(s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "s must be positive, got {s}"
        )));
    }
    Ok(Lifted { inner, s })
}

impl Lifted<'_> {
    fn inner_point(&self, z: PolarPoint) -> Result<PolarPoint> {
        let w = z.powf(self.s);
        if w.theta.abs() >= self.inner.half_opening() {
            return Err(Error::OutOfSector(format!(
                "arg z^s = {} outside |arg| < {}",
                w.theta,
                self.inner.half_opening()
            )));
        }
        Ok(w)
    }
}

impl SectorFunction for Lifted<'_> {
    fn eval(&self, z: PolarPoint) -> Result<Complex64> {
        self.inner.eval(self.inner_point(z)?)
    }

    fn log_modulus(&self, z: PolarPoint) -> Result<f64> {
        self.inner.log_modulus(self.inner_point(z)?)
    }

    fn half_opening(&self) -> f64 {
        self.inner.half_opening() / self.s
    }
}

/// A constant function, defined everywhere.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub Complex64);

impl SectorFunction for Constant {
    fn eval(&self, _z: PolarPoint) -> Result<Complex64> {
        Ok(self.0)
    }

    fn half_opening(&self) -> f64 {
        f64::INFINITY
    }
}

/// Adapter for closures.
pub struct FnSector<F> {
    pub f: F,
    pub half_opening: f64,
}

impl<F> SectorFunction for FnSector<F>
where
    F: Fn(PolarPoint) -> Result<Complex64> + Sync,
{
    fn eval(&self, z: PolarPoint) -> Result<Complex64> {
        (self.f)(z)
    }

    fn half_opening(&self) -> f64 {
        self.half_opening
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Subsector {
    /// Opening in units of pi: `|arg z| < alpha*pi/2`.
    pub alpha: f64,
    pub r0: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FlatnessSamples {
    pub n_r: usize,
    pub n_theta: usize,
    /// Decades below `r0` covered by the radial grid.
    pub decades: f64,
}

impl Default for FlatnessSamples {
    fn default() -> Self {
        Self {
            n_r: 100,
            n_theta: 9,
            decades: 3.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlatnessCertificate {
    pub c1: f64,
    pub c2: f64,
    /// `max (log|G| - log c1 - log h_M(c2|z|))`; pass iff `<= 0`.
    pub residual: f64,
    pub subsector: Subsector,
    pub samples: usize,
    pub pass: bool,
}

const MIN_DROP: f64 = 20.0;

/// Searches the smallest `c2` in 64 log-spaced values on `[1e-3, 1e3]` for
/// which `|G(z)|/h_M(c2|z|)` stays bounded as `z -> 0` in the subsector.
/// Values of `c2` for which `h_M` is not evaluable on the grid, or does not
/// fall below `e^-20` at the innermost radius, are skipped.
pub fn flatness_certificate(
    g: &dyn SectorFunction,
    profile: &GrowthProfile,
    sub: Subsector,
    samples: FlatnessSamples,
) -> Result<FlatnessCertificate> {
    let edge = 0.98 * sub.alpha * FRAC_PI_2;
    if !(sub.alpha > 0.0) || sub.alpha * FRAC_PI_2 >= g.half_opening() {
        return Err(Error::OutOfSector(format!(
            "subsector opening {} not strictly inside the flat sector",
            sub.alpha
        )));
    }
    let rs: Vec<f64> = logspace(sub.r0, sub.r0 * 10f64.powf(-samples.decades), samples.n_r);
    let thetas = linspace(-edge, edge, samples.n_theta.max(1));
    let lg: Vec<Vec<f64>> = par::map_slice(&rs, |&r| {
        thetas
            .iter()
            .map(|&th| g.log_modulus(PolarPoint::new(r, th)))
            .collect::<Result<Vec<f64>>>()
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let lg_max: Vec<f64> = lg
        .iter()
        .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    for c2 in logspace(1e-3, 1e3, 64) {
        let lh: Result<Vec<f64>> = rs.iter().map(|&r| profile.log_hm(c2 * r)).collect();
        let Ok(lh) = lh else { continue };
        // c2 too large: h_M(c2|z|) never leaves 1 on the grid, nothing is tested
        if lh[lh.len() - 1] > -MIN_DROP {
            continue;
        }
        let y: Vec<f64> = lg_max.iter().zip(&lh).map(|(a, b)| a - b).collect();
        if !edge_bounded(&y) {
            continue;
        }
        let lc1 = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if !lc1.is_finite() {
            continue;
        }
        let residual = y.iter().map(|v| v - lc1).fold(f64::NEG_INFINITY, f64::max);
        return Ok(FlatnessCertificate {
            c1: lc1.exp(),
            c2,
            residual,
            subsector: sub,
            samples: rs.len() * thetas.len(),
            pass: residual <= 0.0,
        });
    }
    Err(Error::CertificationFailure(
        "|f(z)|/h_M(c2|z|) unbounded for every c2 on the grid".into(),
    ))
}

/// Convenience: `exp(-1/z)` style flat function of `z^k`.
pub fn gevrey_flat(k: f64) -> Result<FlatFunction> {
    flat_function(&Weight::gevrey(k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::Sequence;
    use std::f64::consts::PI;

    fn prof(s: &str, n: usize) -> GrowthProfile {
        GrowthProfile::new(&Sequence::parse(s).unwrap(), n).unwrap()
    }

    #[test]
    fn weight_values() {
        let w = Weight::gevrey(1.0).unwrap();
        assert_eq!(
            w.eval(PolarPoint::real(0.5)).unwrap(),
            Complex64::new(0.5, 0.0)
        );
        let w2 = Weight::gevrey(2.0).unwrap();
        let v = w2.eval(PolarPoint::new(1.0, PI / 8.0)).unwrap();
        assert!((v.re - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn expression_parsing() {
        assert_eq!(
            WeightExpr::parse("z^1").unwrap(),
            WeightExpr::Monomial { k: 1.0, coeff: 1.0 }
        );
        assert_eq!(
            WeightExpr::parse("z^2/(1+z)^0").unwrap(),
            WeightExpr::Ratio {
                k: 2.0,
                m: 0.0,
                coeff: 1.0
            }
        );
        assert_eq!(
            WeightExpr::parse("-1*z").unwrap(),
            WeightExpr::Monomial {
                k: 1.0,
                coeff: -1.0
            }
        );
        assert!(WeightExpr::parse("sin(z)").is_err());
        let w = Weight::from_json(r#"{"kind":"monomial","k":2.0}"#).unwrap();
        assert_eq!(w.monomial_order(), Some(2.0));
    }

    #[test]
    fn real_weight_identity() {
        let p = prof("gevrey:1", 2000);
        let w = Weight::from_profile(&p);
        assert!((w.eval_real(3.0).unwrap() - 1.504_077_396_776_274).abs() < 1e-12);
        assert_eq!(w.eval_real(0.5).unwrap(), 0.0);
        for t in logspace(0.01, 100.0, 50) {
            let lhs = (-w.eval_real(t).unwrap()).exp();
            assert!((lhs - p.hm(1.0 / t).unwrap()).abs() < 1e-12);
        }
        assert!(w.eval(PolarPoint::new(1.0, 0.1)).is_err());
    }

    #[test]
    fn lower_bounds() {
        let g = ValidationGrid::default();
        let b = sector_lower_bound(&Weight::gevrey(1.0).unwrap(), 0.5, g).unwrap();
        assert!((b.b - (PI / 4.0).cos()).abs() < 1e-12);
        assert!((b.r0 - g.r_min).abs() < 1e-15);
        let b = sector_lower_bound(&Weight::gevrey(2.0).unwrap(), 0.4, g).unwrap();
        assert!((b.b - (0.4 * PI).cos()).abs() < 1e-12);
        assert!(matches!(
            sector_lower_bound(&Weight::gevrey(2.0).unwrap(), 0.6, g),
            Err(Error::LowerBoundFailure(_))
        ));
    }

    #[test]
    fn flat_values() {
        let g = gevrey_flat(1.0).unwrap();
        assert!((g.eval(PolarPoint::real(0.1)).unwrap().re - (-10f64).exp()).abs() < 1e-18);
        assert!(
            (g.eval(PolarPoint::real(10.0)).unwrap().re - 0.904_837_418_035_959_6).abs() < 1e-15
        );
        let lifted = lift_flat(&g, 0.5).unwrap();
        let direct = gevrey_flat(0.5).unwrap();
        for x in linspace(0.05, 2.0, 10) {
            let a = lifted.eval(PolarPoint::real(x)).unwrap();
            let b = direct.eval(PolarPoint::real(x)).unwrap();
            assert!((a - b).norm() <= 1e-14 * b.norm());
        }
        let l2 = lift_flat(&g, 2.0).unwrap();
        assert!(matches!(
            l2.eval(PolarPoint::new(1.0, 0.6 * PI)),
            Err(Error::OutOfSector(_))
        ));
        let id = lift_flat(&g, 1.0).unwrap();
        let z = PolarPoint::new(0.3, 0.2);
        assert_eq!(id.eval(z).unwrap(), g.eval(z).unwrap());
    }

    #[test]
    fn validation_examples() {
        let p1 = prof("gevrey:1", 5000);
        let v = validate_weight(
            &Weight::gevrey(1.0).unwrap(),
            &p1,
            ValidationGrid::default(),
        )
        .unwrap();
        assert!(v.pass, "{v:?}");
        let p2 = prof("gevrey:2", 5000);
        let v = validate_weight(
            &Weight::gevrey(1.0).unwrap(),
            &p2,
            ValidationGrid::default(),
        )
        .unwrap();
        assert!(!v.equivalence_bounded && !v.pass);
        let neg = Weight::user(
            WeightExpr::Monomial {
                k: 1.0,
                coeff: -1.0,
            },
            2.0,
            1.0,
        )
        .unwrap();
        let v = validate_weight(&neg, &p1, ValidationGrid::default()).unwrap();
        assert!(!v.positive && !v.pass);
    }

    #[test]
    fn flatness_examples() {
        let g = gevrey_flat(1.0).unwrap();
        let sub = Subsector {
            alpha: 0.8,
            r0: 1.0,
        };
        let c = flatness_certificate(
            &g,
            &prof("gevrey:1", 200_000),
            sub,
            FlatnessSamples::default(),
        )
        .unwrap();
        assert!(c.pass && c.residual <= 0.0);
        let c = flatness_certificate(
            &g,
            &prof("gevrey:2", 200_000),
            sub,
            FlatnessSamples::default(),
        )
        .unwrap();
        assert!(c.pass);
        let one = Constant(Complex64::new(1.0, 0.0));
        assert!(matches!(
            flatness_certificate(
                &one,
                &prof("gevrey:1", 200_000),
                sub,
                FlatnessSamples::default()
            ),
            Err(Error::CertificationFailure(_))
        ));
    }
}
