//! Sequences of positive reals held in log-space, with regularity witnesses.

use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{slope, CompSum};
use crate::par;

/// Largest prefix the cache will grow to.
pub const MAX_PREFIX: usize = 20_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum Kind {
    Gevrey {
        alpha: f64,
    },
    GevreyScaled {
        a: f64,
        alpha: f64,
    },
    AlphaBeta {
        alpha: f64,
        beta: f64,
    },
    QPower {
        q: f64,
    },
    /// Explicit table of `log M_p`.
    User {
        log_big: Arc<Vec<f64>>,
    },
    Power {
        base: Box<Kind>,
        s: f64,
    },
}

impl Kind {
    fn log_quotient(&self, p: usize) -> Option<f64> {
        let x = p as f64;
        match self {
            Kind::Gevrey { alpha } => Some(alpha * (x + 1.0).ln()),
            Kind::GevreyScaled { a, alpha } => Some(a.ln() + alpha * (x + 1.0).ln()),
            Kind::AlphaBeta { alpha, beta } => {
                Some(alpha * (x + 1.0).ln() + beta * (std::f64::consts::E + x + 1.0).ln().ln())
            }
            Kind::QPower { q } => Some((2.0 * x + 1.0) * q.ln()),
            Kind::User { log_big } => {
                if p + 1 < log_big.len() {
                    Some(log_big[p + 1] - log_big[p])
                } else {
                    None
                }
            }
            Kind::Power { base, s } => base.log_quotient(p).map(|v| s * v),
        }
    }

    fn max_index(&self) -> usize {
        match self {
            Kind::User { log_big } => log_big.len() - 1,
            Kind::Power { base, .. } => base.max_index(),
            _ => MAX_PREFIX,
        }
    }

    fn user_table(&self) -> Option<&Arc<Vec<f64>>> {
        match self {
            Kind::User { log_big } => Some(log_big),
            _ => None,
        }
    }
}

#[derive(Debug, Default, Clone)]
struct Cache {
    log_m: Vec<f64>,
    log_big: Vec<f64>,
    acc: CompSum,
}

/// A positive sequence `M = (M_p)` with `M_0 = 1`, stored as `log M_p`.
#[derive(Debug)]
pub struct Sequence {
    name: String,
    kind: Kind,
    cache: RwLock<Cache>,
}

impl Clone for Sequence {
    fn clone(&self) -> Self {
        let cache = self.cache.read().expect("cache lock").clone();
        Self {
            name: self.name.clone(),
            kind: self.kind.clone(),
            cache: RwLock::new(cache),
        }
    }
}

#[derive(Debug, Deserialize)]
struct UserFile {
    #[serde(rename = "logM")]
    log_m: Vec<f64>,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

impl Sequence {
    fn from_kind(name: String, kind: Kind) -> Self {
        let cache = Cache {
            log_big: vec![0.0],
            ..Cache::default()
        };
        Self {
            name,
            kind,
            cache: RwLock::new(cache),
        }
    }

    /// `M_p = p!^alpha`.
    pub fn gevrey(alpha: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        Ok(Self::from_kind(
            format!("gevrey({alpha})"),
            Kind::Gevrey { alpha },
        ))
    }

    /// `M_p = a^p p!^alpha`.
    pub fn gevrey_scaled(a: f64, alpha: f64) -> Result<Self> {
        positive("a", a)?;
        positive("alpha", alpha)?;
        Ok(Self::from_kind(
            format!("gevrey_scaled({a},{alpha})"),
            Kind::GevreyScaled { a, alpha },
        ))
    }

    /// `M_p = p!^alpha prod_{m=0}^p log^beta(e+m)`.
    pub fn alpha_beta(alpha: f64, beta: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        if !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be finite, got {beta}"
            )));
        }
        Ok(Self::from_kind(
            format!("alphabeta({alpha},{beta})"),
            Kind::AlphaBeta { alpha, beta },
        ))
    }

    /// `M_p = q^(p^2)`.
    pub fn qpower(q: f64) -> Result<Self> {
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!("q must exceed 1, got {q}")));
        }
        Ok(Self::from_kind(format!("qpower({q})"), Kind::QPower { q }))
    }

    /// Explicit `log M_p` table; `log M_0` must be 0.
    pub fn from_log_table(name: &str, log_big: Vec<f64>) -> Result<Self> {
        if log_big.len() < 2 {
            return Err(Error::InvalidSequence("need at least two entries".into()));
        }
        if log_big[0] != 0.0 {
            return Err(Error::InvalidSequence(format!(
                "log M_0 must be 0, got {}",
                log_big[0]
            )));
        }
        if let Some(i) = log_big.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSequence(format!("non-finite log M_{i}")));
        }
        Ok(Self::from_kind(
            name.to_string(),
            Kind::User {
                log_big: Arc::new(log_big),
            },
        ))
    }

    /// Reads `{"logM": [0.0, ...]}`.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let f: UserFile = serde_json::from_str(&text)?;
        Self::from_log_table(&format!("file({})", path.display()), f.log_m)
    }

    /// Parses `gevrey:<alpha>`, `gevrey-scaled:<a>:<alpha>`,
    /// `alphabeta:<alpha>:<beta>`, `qpower:<q>` or `file:<path>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
        if head == "file" {
            return Self::from_json_file(Path::new(rest));
        }
        let nums: Vec<f64> = if rest.is_empty() {
            vec![]
        } else {
            rest.split(':')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| {
                        Error::InvalidParameter(format!("bad number '{s}' in '{spec}'"))
                    })
                })
                .collect::<Result<_>>()?
        };
        let want = |n: usize| -> Result<()> {
            if nums.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "'{head}' takes {n} parameter(s), got {}",
                    nums.len()
                )))
            }
        };
        match head {
            "gevrey" => {
                want(1)?;
                Self::gevrey(nums[0])
            }
            "gevrey-scaled" | "gevrey_scaled" => {
                want(2)?;
                Self::gevrey_scaled(nums[0], nums[1])
            }
            "alphabeta" => {
                want(2)?;
                Self::alpha_beta(nums[0], nums[1])
            }
            "qpower" => {
                want(1)?;
                Self::qpower(nums[0])
            }
            _ => Err(Error::InvalidParameter(format!(
                "unknown sequence kind '{head}'"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    /// Largest index `p` for which `log M_p` is available.
    pub fn max_index(&self) -> usize {
        self.kind.max_index()
    }

    fn ensure(&self, n: usize) -> Result<()> {
        if self.cache.read().expect("cache lock").log_big.len() > n {
            return Ok(());
        }
        if n > self.max_index() {
            return Err(Error::RangeExceeded(format!(
                "{}: index {n} beyond available prefix {}",
                self.name,
                self.max_index()
            )));
        }
        let mut c = self.cache.write().expect("cache lock");
        let user = self.kind.user_table();
        while c.log_big.len() <= n {
            let p = c.log_m.len();
            let lm = self
                .kind
                .log_quotient(p)
                .ok_or_else(|| Error::RangeExceeded(format!("quotient {p} unavailable")))?;
            c.log_m.push(lm);
            let next = match user {
                Some(t) => t[p + 1],
                None => {
                    c.acc.add(lm);
                    c.acc.value()
                }
            };
            c.log_big.push(next);
        }
        Ok(())
    }

    /// `log M_p`.
    pub fn log_big(&self, p: usize) -> Result<f64> {
        self.ensure(p)?;
        Ok(self.cache.read().expect("cache lock").log_big[p])
    }

    /// `log m_p = log M_{p+1} - log M_p`.
    pub fn log_quotient(&self, p: usize) -> Result<f64> {
        self.ensure(p + 1)?;
        Ok(self.cache.read().expect("cache lock").log_m[p])
    }

    /// `m_p = M_{p+1} / M_p`.
    pub fn quotient(&self, p: usize) -> Result<f64> {
        Ok(self.log_quotient(p)?.exp())
    }

    /// `log M_0, ..., log M_n`.
    pub fn log_bigs(&self, n: usize) -> Result<Vec<f64>> {
        self.ensure(n)?;
        Ok(self.cache.read().expect("cache lock").log_big[..=n].to_vec())
    }

    /// `log m_0, ..., log m_{n-1}`.
    pub fn log_quotients(&self, n: usize) -> Result<Vec<f64>> {
        self.ensure(n)?;
        Ok(self.cache.read().expect("cache lock").log_m[..n].to_vec())
    }
}

/// `M^(s) = (M_p^s)`.
pub fn power_sequence(seq: &Sequence, s: f64) -> Result<Sequence> {
    positive("s", s)?;
    if s == 1.0 {
        return Ok(seq.clone());
    }
    let (base, s_total, base_name) = match &seq.kind {
        Kind::Power { base, s: s0 } => {
            let base_name = seq
                .name
                .rsplit_once('^')
                .map(|(n, _)| n.to_string())
                .unwrap_or_else(|| seq.name.clone());
            ((**base).clone(), s0 * s, base_name)
        }
        k => (k.clone(), s, seq.name.clone()),
    };
    if (s_total - 1.0).abs() < 4.0 * f64::EPSILON {
        return Ok(Sequence::from_kind(base_name, base));
    }
    Ok(Sequence::from_kind(
        format!("{base_name}^{s_total}"),
        Kind::Power {
            base: Box::new(base),
            s: s_total,
        },
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct LogConvexity {
    pub pass: bool,
    pub first_violation: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModerateWitness {
    /// `max_{p+l<=N} (M_{p+l}/(M_p M_l))^{1/(p+l)}`.
    pub witness: f64,
    /// Same maximum over `p+l <= N/2`.
    pub witness_half: f64,
    pub growing: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SnqWitness {
    pub witness: f64,
    pub witness_half: f64,
    pub tail_window: usize,
    /// Power-law exponent fitted to the last decade of series terms.
    pub tail_exponent: f64,
    pub tail_estimate: f64,
    pub heuristic: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct E107Witness {
    /// Smallest `A` with `m_p <= A^2 M_p^{1/p} <= A^2 m_p` for `2p <= N`.
    pub witness: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub sequence: String,
    pub prefix: usize,
    pub log_convex: LogConvexity,
    pub moderate: ModerateWitness,
    pub snq: SnqWitness,
    pub e107: E107Witness,
    pub strongly_regular: bool,
}

fn moderate_max(lbig: &[f64], n: usize) -> f64 {
    let best = par::max_range(n + 1, |k| {
        if k < 2 {
            return 0.0;
        }
        let mut m = 0.0f64;
        for p in 1..k {
            m = m.max((lbig[k] - lbig[p] - lbig[k - p]) / k as f64);
        }
        m
    });
    best.max(0.0).exp()
}

fn snq_max(lm: &[f64], suffix: &[f64], n: usize) -> f64 {
    (0..=n)
        .map(|p| (lm[p] + suffix[p].ln()).exp())
        .fold(0.0, f64::max)
}

/// Witnesses for log-convexity, moderate growth and strong
/// non-quasianalyticity on a prefix. The last verdict is heuristic.
pub fn certify_regularity(seq: &Sequence, n: usize, n_tail: usize) -> Result<RegularityReport> {
    if n < 3 {
        return Err(Error::InvalidParameter("prefix must be at least 3".into()));
    }
    if n_tail < 4 * n {
        return Err(Error::InvalidParameter(format!(
            "tail window {n_tail} must be at least 4N = {}",
            4 * n
        )));
    }
    let lbig = seq.log_bigs(n + 1)?;
    let lm = seq.log_quotients(n_tail + 1)?;

    let first_violation = (1..=n).find(|&p| lm[p] < lm[p - 1] - 1e-12 * lm[p - 1].abs().max(1.0));
    let log_convex = LogConvexity {
        pass: first_violation.is_none(),
        first_violation,
    };

    let witness = moderate_max(&lbig, n);
    let witness_half = moderate_max(&lbig, n / 2);
    let growing = witness.ln() - witness_half.ln() > 0.1;
    let moderate = ModerateWitness {
        witness,
        witness_half,
        growing,
        pass: witness.is_finite() && !growing,
    };

    // terms 1/((l+1) m_l), summed from the far end
    let log_t: Vec<f64> = (0..=n_tail)
        .map(|l| -((l as f64 + 1.0).ln() + lm[l]))
        .collect();
    let lo = (n_tail / 10).max(1);
    let xs: Vec<f64> = (lo..=n_tail).map(|l| (l as f64 + 1.0).ln()).collect();
    let tail_exponent = -slope(&xs, &log_t[lo..=n_tail]);
    let tail_estimate = if tail_exponent > 1.0 {
        log_t[n_tail].exp() * (n_tail as f64 + 1.0) / (tail_exponent - 1.0)
    } else {
        f64::INFINITY
    };
    let mut suffix = vec![0.0; n_tail + 2];
    let mut acc = CompSum::new();
    acc.add(tail_estimate);
    for l in (0..=n_tail).rev() {
        acc.add(log_t[l].exp());
        suffix[l] = acc.value();
    }
    let snq_w = snq_max(&lm, &suffix, n);
    let snq_half = snq_max(&lm, &suffix, n / 2);
    let snq = SnqWitness {
        witness: snq_w,
        witness_half: snq_half,
        tail_window: n_tail,
        tail_exponent,
        tail_estimate,
        heuristic: true,
        pass: snq_w.is_finite() && snq_w.ln() - snq_half.ln() <= 0.1,
    };

    let e107_sq = (1..=n / 2)
        .map(|p| (lm[p] - lbig[p] / p as f64).exp())
        .fold(1.0, f64::max);
    let e107_w = e107_sq.sqrt();
    let e107 = E107Witness {
        witness: e107_w,
        pass: e107_w <= witness * (1.0 + 1e-12),
    };

    let strongly_regular = log_convex.pass && moderate.pass && snq.pass;
    Ok(RegularityReport {
        sequence: seq.name.clone(),
        prefix: n,
        log_convex,
        moderate,
        snq,
        e107,
        strongly_regular,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub l: f64,
    pub h: f64,
    /// `log r_N - log r_{0.9N}` with `r_p = (M'_p/M_p)^{1/p}`.
    pub drift: f64,
    pub plausible: bool,
    pub prefix: usize,
}

/// Constants `L, H` with `L^p M_p <= M'_p <= H^p M_p` on `1 <= p <= N`.
pub fn equivalence_constants(s1: &Sequence, s2: &Sequence, n: usize) -> Result<EquivalenceReport> {
    if n < 1 {
        return Err(Error::InvalidParameter("prefix must be positive".into()));
    }
    let a = s1.log_bigs(n)?;
    let b = s2.log_bigs(n)?;
    let lr: Vec<f64> = (1..=n).map(|p| (b[p] - a[p]) / p as f64).collect();
    let l = lr.iter().cloned().fold(f64::INFINITY, f64::min).exp();
    let h = lr.iter().cloned().fold(f64::NEG_INFINITY, f64::max).exp();
    let mid = ((9 * n) / 10).max(1);
    let drift = lr[n - 1] - lr[mid - 1];
    Ok(EquivalenceReport {
        l,
        h,
        drift,
        plausible: drift.abs() <= 0.05,
        prefix: n,
    })
}
