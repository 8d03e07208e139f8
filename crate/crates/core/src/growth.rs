//! Associated functions `h_M`, `M(t)`, `nu(r)`, `d(r)`, index estimators and
//! quasianalyticity verdicts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::{log_indices, lstsq, CompSum};
use crate::sequences::Sequence;

/// Piecewise evaluators built on a finite prefix of quotients.
#[derive(Debug, Clone)]
pub struct GrowthProfile {
    name: String,
    /// `log m_0 .. log m_{N-1}`, nondecreasing for log-convex input.
    log_m: Vec<f64>,
    /// `log M_0 .. log M_N`.
    log_big: Vec<f64>,
}

impl GrowthProfile {
    pub fn new(seq: &Sequence, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(
                "profile prefix must be at least 2".into(),
            ));
        }
        Ok(Self {
            name: seq.name().to_string(),
            log_m: seq.log_quotients(n)?,
            log_big: seq.log_bigs(n)?,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn prefix(&self) -> usize {
        self.log_m.len()
    }

    pub fn log_quotients(&self) -> &[f64] {
        &self.log_m
    }

    pub fn log_bigs(&self) -> &[f64] {
        &self.log_big
    }

    pub fn m0(&self) -> f64 {
        self.log_m[0].exp()
    }

    /// Largest argument at which `M` and `nu` are determined by the prefix.
    pub fn max_argument(&self) -> f64 {
        self.log_m[self.log_m.len() - 1].exp()
    }

    fn count_log(&self, lr: f64) -> Result<usize> {
        let k = self.log_m.partition_point(|&v| v <= lr);
        if k == self.log_m.len() {
            return Err(Error::RangeExceeded(format!(
                "{}: argument e^{lr:.4} beyond last quotient m_{} = e^{:.4}",
                self.name,
                k - 1,
                self.log_m[k - 1]
            )));
        }
        Ok(k)
    }

    /// `nu(r) = #{j : m_j <= r}`.
    pub fn nu(&self, r: f64) -> Result<usize> {
        if r.is_nan() || r <= 0.0 {
            return Err(Error::OutOfDomain(format!("nu needs r > 0, got {r}")));
        }
        self.count_log(r.ln())
    }

    /// `M(t)` for `t = e^{lt}`.
    pub fn big_m_log(&self, lt: f64) -> Result<f64> {
        let p = self.count_log(lt)?;
        if p == 0 {
            return Ok(0.0);
        }
        Ok(p as f64 * lt - self.log_big[p])
    }

    /// `M(t) = sup_p log(t^p / M_p)`.
    pub fn big_m(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::OutOfDomain(format!("M needs t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        self.big_m_log(t.ln())
    }

    /// `log h_M(t) = -M(1/t)`.
    pub fn log_hm(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::OutOfDomain(format!("h_M needs t >= 0, got {t}")));
        }
        if t == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(-self.big_m_log(-t.ln())?)
    }

    /// `h_M(t) = inf_p M_p t^p`.
    pub fn hm(&self, t: f64) -> Result<f64> {
        Ok(self.log_hm(t)?.exp())
    }

    /// `|int_0^t nu(r)/r dr - M(t)|`, the integral summed exactly over the
    /// steps of `nu`.
    pub fn verify_m_integral(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::OutOfDomain(format!("t must be positive, got {t}")));
        }
        let lt = t.ln();
        let p = self.count_log(lt)?;
        let mut acc = CompSum::new();
        for j in 1..p {
            acc.add(j as f64 * (self.log_m[j] - self.log_m[j - 1]));
        }
        if p > 0 {
            acc.add(p as f64 * (lt - self.log_m[p - 1]));
        }
        Ok((acc.value() - self.big_m_log(lt)?).abs())
    }

    /// `d(r) = log M(r) / log r`.
    pub fn d_of(&self, r: f64) -> Result<f64> {
        let floor = self.m0().max(1.0) * (1.0 + 1e-9);
        if !(r > floor) {
            return Err(Error::OutOfDomain(format!(
                "d(r) needs r > {floor}, got {r}"
            )));
        }
        let m = self.big_m(r)?;
        if m <= 0.0 {
            return Err(Error::OutOfDomain(format!("M({r}) = 0")));
        }
        Ok(m.ln() / r.ln())
    }

    /// `M(m_p) = p log m_p - log M_p`.
    pub fn big_m_at_quotient(&self, p: usize) -> Result<f64> {
        if p >= self.log_m.len() {
            return Err(Error::RangeExceeded(format!("quotient index {p}")));
        }
        Ok(p as f64 * self.log_m[p] - self.log_big[p])
    }

    /// Right-hand value `b(m_p^+) = (p+1)/M(m_p) - d(m_p)` and the jump
    /// `1/M(m_p)` of `r M'(r)/M(r)` at `m_p`.
    pub fn b_jump(&self, p: usize) -> Result<(f64, f64)> {
        let mm = self.big_m_at_quotient(p)?;
        if !(mm > 0.0) || self.log_m[p] <= 0.0 {
            return Err(Error::OutOfDomain(format!("M(m_{p}) = {mm}")));
        }
        let d = mm.ln() / self.log_m[p];
        Ok(((p as f64 + 1.0) / mm - d, 1.0 / mm))
    }

    /// Smallest grid `rho >= 1` with `h_M(t) <= h_M(rho t)^s` at every grid
    /// point, searched over `rho = 1.01^k` up to `cap`.
    pub fn check_hm_power(&self, s: f64, t_grid: &[f64], cap: f64) -> Result<f64> {
        if !(s >= 1.0) {
            return Err(Error::InvalidParameter(format!("s must be >= 1, got {s}")));
        }
        let lh: Vec<f64> = t_grid
            .iter()
            .map(|&t| self.log_hm(t))
            .collect::<Result<_>>()?;
        let mut rho = 1.0f64;
        while rho <= cap {
            let mut ok = true;
            for (i, &t) in t_grid.iter().enumerate() {
                let rhs = s * self.log_hm(rho * t)?;
                if lh[i] > rhs + 1e-12 * lh[i].abs().max(1.0) {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(rho);
            }
            rho *= 1.01;
        }
        Err(Error::CertificationFailure(format!(
            "no rho <= {cap} satisfies h_M(t) <= h_M(rho t)^{s} on the grid"
        )))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexEstimate {
    pub value: f64,
    /// Coefficient of the `log log` regressor.
    pub loglog_coef: f64,
    pub intercept: f64,
    /// Raw `min log m_n / log n` over the window.
    pub raw_proxy: f64,
    pub window: (usize, usize),
    pub points: usize,
}

fn window(n: usize) -> (usize, usize) {
    ((n / 10).max(2), n)
}

/// Order of quasianalyticity: regression of `log m_n` on `log(n+1)`,
/// `log log(n+1+e)` and 1 over `[N/10, N]`.
pub fn omega(profile: &GrowthProfile, n: usize) -> Result<IndexEstimate> {
    if n < 100 {
        return Err(Error::InvalidParameter("omega needs N >= 100".into()));
    }
    if n >= profile.prefix() {
        return Err(Error::RangeExceeded(format!(
            "omega window {n} beyond prefix"
        )));
    }
    let (lo, hi) = window(n);
    let idx = log_indices(lo, hi, 256);
    let lm = profile.log_quotients();
    let rows: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| {
            let x = i as f64 + 1.0;
            vec![x.ln(), (x + std::f64::consts::E).ln().ln(), 1.0]
        })
        .collect();
    let y: Vec<f64> = idx.iter().map(|&i| lm[i]).collect();
    let c = lstsq(&rows, &y)?;
    let raw = (lo..=hi)
        .map(|i| lm[i] / (i as f64).ln())
        .fold(f64::INFINITY, f64::min);
    Ok(IndexEstimate {
        value: c[0],
        loglog_coef: c[1],
        intercept: c[2],
        raw_proxy: raw,
        window: (lo, hi),
        points: idx.len(),
    })
}

/// Regression estimate of `limsup log n / log c_n` from `log c_n` values;
/// the log-log regressor absorbs slowly varying corrections.
pub fn exponent_of_convergence(log_c: &[f64], n: usize) -> Result<IndexEstimate> {
    if n >= log_c.len() || n < 20 {
        return Err(Error::InvalidParameter(format!(
            "need 20 <= N < {}, got {n}",
            log_c.len()
        )));
    }
    if let Some(i) = (1..=n).find(|&i| log_c[i] < log_c[i - 1]) {
        return Err(Error::InvalidSequence(format!(
            "not nondecreasing at index {i}"
        )));
    }
    let (lo, hi) = window(n);
    let idx: Vec<usize> = log_indices(lo, hi, 256)
        .into_iter()
        .filter(|&i| log_c[i] > 1.0)
        .collect();
    if idx.len() < 8 {
        return Err(Error::NumericalFailure(
            "too few points with c_n > e".into(),
        ));
    }
    let rows: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| vec![log_c[i], log_c[i].ln(), 1.0])
        .collect();
    let y: Vec<f64> = idx.iter().map(|&i| (i as f64 + 1.0).ln()).collect();
    let c = lstsq(&rows, &y)?;
    let raw = idx
        .iter()
        .map(|&i| (i as f64).ln() / log_c[i])
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(IndexEstimate {
        value: c[0],
        loglog_coef: c[1],
        intercept: c[2],
        raw_proxy: raw,
        window: (lo, hi),
        points: idx.len(),
    })
}

/// Order `rho[M]` of `M(r)`, the exponent of convergence of `(m_n)`.
pub fn rho_order(profile: &GrowthProfile, n: usize) -> Result<IndexEstimate> {
    if n >= profile.prefix() {
        return Err(Error::RangeExceeded(format!(
            "rho window {n} beyond prefix"
        )));
    }
    exponent_of_convergence(profile.log_quotients(), n)
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaEstimate {
    pub value: f64,
    /// Supremum allowed by almost-monotonicity on the prefix alone.
    pub prefix_sup: f64,
    /// Log-corrected tail slope capping the prefix value.
    pub tail_slope: f64,
    pub slack: f64,
    pub sweep: Vec<(f64, f64)>,
}

fn almost_increasing(lm: &[f64], gamma: f64, slack: f64) -> bool {
    let tol = 2.0 * slack.ln();
    let mut run = f64::NEG_INFINITY;
    for (p, v) in lm.iter().enumerate() {
        let x = v - gamma * (p as f64 + 1.0).ln();
        run = run.max(x);
        if x < run - tol - 1e-12 {
            return false;
        }
    }
    true
}

fn gamma_sup(lm: &[f64], slack: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 20.0f64);
    if !almost_increasing(lm, lo, slack) {
        return 0.0;
    }
    if almost_increasing(lm, hi, slack) {
        return hi;
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if almost_increasing(lm, mid, slack) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Growth index: sup of `gamma` such that `(p+1)^{-gamma} m_p` is
/// `a`-almost increasing on `[0, N]`, capped by the tail slope.
pub fn gamma_index(profile: &GrowthProfile, n: usize, slack: f64) -> Result<GammaEstimate> {
    if !(slack >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "slack must be >= 1, got {slack}"
        )));
    }
    let om = omega(profile, n)?;
    let lm = &profile.log_quotients()[..=n];
    let prefix_sup = gamma_sup(lm, slack);
    let sweep = [1.0, 2.0, 4.0]
        .iter()
        .map(|&a| (a, gamma_sup(lm, a).min(om.value)))
        .collect();
    Ok(GammaEstimate {
        value: prefix_sup.min(om.value),
        prefix_sup,
        tail_slope: om.value,
        slack,
        sweep,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    Diverges,
    Converges,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesVerdict {
    pub classification: Classification,
    /// Fitted `(s, u)` of `term_n ~ c n^{-s} (log n)^{-u}`.
    pub fitted_exponents: (f64, f64),
    pub window: (usize, usize),
}

pub const TOL_S: f64 = 0.02;
pub const TOL_U: f64 = 0.1;
const SNAP: f64 = 1e-3;

/// Bertrand-model classification of `sum term_n` from `log term_n`.
pub fn classify_series<F: Fn(usize) -> f64>(log_term: F, n: usize) -> Result<SeriesVerdict> {
    if n < 100 {
        return Err(Error::InvalidParameter(
            "series window needs N >= 100".into(),
        ));
    }
    let (lo, hi) = window(n);
    let idx = log_indices(lo, hi, 256);
    let rows: Vec<Vec<f64>> = idx
        .iter()
        .map(|&i| {
            let x = i as f64 + 1.0;
            vec![-x.ln(), -(x + std::f64::consts::E).ln().ln(), 1.0]
        })
        .collect();
    let y: Vec<f64> = idx.iter().map(|&i| log_term(i)).collect();
    let c = lstsq(&rows, &y)?;
    let (s, u) = (c[0], c[1]);
    let classification = if (s - 1.0).abs() <= SNAP && (u - 1.0).abs() <= SNAP {
        // sum 1/(n log n) diverges
        Classification::Diverges
    } else if s < 1.0 - TOL_S || ((s - 1.0).abs() <= TOL_S && u <= 1.0 - TOL_U) {
        Classification::Diverges
    } else if s > 1.0 + TOL_S || ((s - 1.0).abs() <= TOL_S && u >= 1.0 + TOL_U) {
        Classification::Converges
    } else {
        Classification::Inconclusive
    };
    Ok(SeriesVerdict {
        classification,
        fitted_exponents: (s, u),
        window: (lo, hi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Quasianalyticity {
    Quasianalytic,
    NotQuasianalytic,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct KorenbljumVerdict {
    pub gamma: f64,
    pub verdict: Quasianalyticity,
    pub series: SeriesVerdict,
}

/// `A_M(S_gamma)` is quasianalytic iff `sum ((n+1) m_n)^{-1/(gamma+1)}` diverges.
pub fn korenbljum_verdict(
    profile: &GrowthProfile,
    gamma: f64,
    n: usize,
) -> Result<KorenbljumVerdict> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if n >= profile.prefix() {
        return Err(Error::RangeExceeded(format!(
            "series window {n} beyond prefix"
        )));
    }
    let lm = profile.log_quotients();
    let e = 1.0 / (gamma + 1.0);
    let series = classify_series(|i| -e * ((i as f64 + 1.0).ln() + lm[i]), n)?;
    let verdict = match series.classification {
        Classification::Diverges => Quasianalyticity::Quasianalytic,
        Classification::Converges => Quasianalyticity::NotQuasianalytic,
        Classification::Inconclusive => Quasianalyticity::Inconclusive,
    };
    Ok(KorenbljumVerdict {
        gamma,
        verdict,
        series,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct WatsonVerdict {
    pub gamma: f64,
    pub omega: f64,
    pub quasianalytic: bool,
    /// `|gamma - omega| < tol`; the class at `gamma = omega` holds flat
    /// functions, so it is reported as not quasianalytic.
    pub boundary: bool,
    pub proximate_order_ok: bool,
}

/// `A~_M(S_gamma)` is quasianalytic iff `gamma > omega(M)`.
pub fn watson_verdict(
    profile: &GrowthProfile,
    gamma: f64,
    n: usize,
    tol: f64,
) -> Result<WatsonVerdict> {
    let om = omega(profile, n)?.value;
    let pc = proximate_order_check(profile, n, 0.02)?;
    let boundary = (gamma - om).abs() < tol;
    Ok(WatsonVerdict {
        gamma,
        omega: om,
        quasianalytic: !boundary && gamma > om,
        boundary,
        proximate_order_ok: pc.pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProximateOrderCheck {
    /// Extrapolated `lim (p+1)/M(m_p)`.
    pub limit: f64,
    pub target: f64,
    pub relative_error: f64,
    /// Extrapolated `lim p log(m_{p}/m_{p-1})`.
    pub stolz_limit: f64,
    pub last_ratio: f64,
    pub omega: f64,
    pub window: (usize, usize),
    pub pass: bool,
}

/// Checks `lim (p+1)/M(m_p) = 1/omega`. `M(m_p)` is regressed on cumulative
/// sums of `1`, `1/log(j+1)` and `1/j` over the last decade; the limit is the
/// reciprocal of the linear coefficient.
pub fn proximate_order_check(
    profile: &GrowthProfile,
    n: usize,
    tol: f64,
) -> Result<ProximateOrderCheck> {
    if n < 1000 {
        return Err(Error::InvalidParameter(
            "proximate-order check needs N >= 1000".into(),
        ));
    }
    let om = omega(profile, n)?;
    let lm = profile.log_quotients();
    let mut cum_l = vec![0.0; n + 1];
    let mut cum_h = vec![0.0; n + 1];
    let (mut sl, mut sh) = (CompSum::new(), CompSum::new());
    for j in 1..=n {
        sl.add(1.0 / (j as f64 + 1.0).ln());
        sh.add(1.0 / j as f64);
        cum_l[j] = sl.value();
        cum_h[j] = sh.value();
    }
    let (lo, hi) = window(n);
    let idx = log_indices(lo, hi, 200);
    let rows: Vec<Vec<f64>> = idx
        .iter()
        .map(|&p| vec![p as f64, cum_l[p], cum_h[p], 1.0])
        .collect();
    let y: Vec<f64> = idx
        .iter()
        .map(|&p| profile.big_m_at_quotient(p))
        .collect::<Result<_>>()?;
    let c = lstsq(&rows, &y)?;
    let limit = 1.0 / c[0];

    let rows2: Vec<Vec<f64>> = idx
        .iter()
        .map(|&j| vec![1.0, 1.0 / (j as f64 + 1.0).ln(), 1.0 / j as f64])
        .collect();
    let y2: Vec<f64> = idx
        .iter()
        .map(|&j| j as f64 * (lm[j] - lm[j - 1]))
        .collect();
    let stolz = lstsq(&rows2, &y2)?[0];

    let target = 1.0 / om.value;
    let relative_error = (limit - target).abs() / target;
    Ok(ProximateOrderCheck {
        limit,
        target,
        relative_error,
        stolz_limit: stolz,
        last_ratio: (n as f64 + 1.0) / profile.big_m_at_quotient(n)?,
        omega: om.value,
        window: (lo, hi),
        pass: relative_error <= tol,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SurjectivityConditions {
    pub omega: f64,
    /// `sum ((n+1) m_n)^{-1/(omega+1)} = infinity`.
    pub condition_b: SeriesVerdict,
    /// `sum m_n^{-1/omega} = infinity`.
    pub condition_c: SeriesVerdict,
}

pub fn surjectivity_conditions(
    profile: &GrowthProfile,
    n: usize,
) -> Result<SurjectivityConditions> {
    let om = omega(profile, n)?.value;
    if !(om > 0.0) {
        return Err(Error::NumericalFailure(format!(
            "omega estimate {om} not positive"
        )));
    }
    let lm = profile.log_quotients();
    let b = classify_series(|i| -((i as f64 + 1.0).ln() + lm[i]) / (om + 1.0), n)?;
    let c = classify_series(|i| -lm[i] / om, n)?;
    Ok(SurjectivityConditions {
        omega: om,
        condition_b: b,
        condition_c: c,
    })
}
