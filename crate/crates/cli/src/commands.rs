use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::Path;

use carleman::error::{Error, Result};
use carleman::extension::{
    certify_expansion, extend, formal_borel, right_inverse_check, CoefficientSequence, Extension,
    NoiseFloor, RecoveryGrid, RoundTripConfig, DEFAULT_EPS,
};
use carleman::growth::{
    gamma_index, korenbljum_verdict, omega, proximate_order_check, rho_order,
    surjectivity_conditions, watson_verdict, GrowthProfile,
};
use carleman::moments::{equivalence_certificate, moment_table, Kernel, MAX_TABLE};
use carleman::numeric::{linspace, logspace};
use carleman::proximate::{
    flat_function, flatness_certificate, FlatnessSamples, PolarPoint, SectorFunction, Subsector,
    Weight,
};
use carleman::sequences::{certify_regularity, Sequence};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Cli, Command, Common, RunConfig, Target};

pub enum Outcome {
    Pass,
    Fail,
}

pub fn exit_code(e: &Error) -> u8 {
    if e.is_certificate() {
        1
    } else if e.is_input() {
        2
    } else {
        3
    }
}

#[derive(Serialize)]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a RunConfig,
    result: Value,
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let cfg = RunConfig {
        command: cli.command,
        common: cli.common.clone(),
    };
    let c = &cfg.common;
    let (result, outcome) = match cli.command {
        Command::Analyze => analyze(c)?,
        Command::Quasi => quasi(c)?,
        Command::Moments => moments(c)?,
        Command::Flat => flatness(c)?,
        Command::Extend => extend_cmd(c)?,
        Command::Certify => certify(c)?,
    };
    let report = Report {
        tool: "carleman",
        version: env!("CARGO_PKG_VERSION"),
        config: &cfg,
        result,
    };
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match &c.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(outcome)
}

fn section<T: Serialize>(r: Result<T>) -> Result<Value> {
    match r {
        Ok(v) => Ok(serde_json::to_value(v)?),
        Err(e) if e.is_input() => Err(e),
        Err(e) => Ok(json!({ "error": e.to_string() })),
    }
}

fn need<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| Error::InvalidParameter(format!("--{flag} is required")))
}

fn sequence(c: &Common) -> Result<Sequence> {
    Sequence::parse(need(&c.seq, "seq")?)
}

fn weight(c: &Common, profile: Option<&GrowthProfile>) -> Result<Weight> {
    Weight::parse(c.weight.as_deref().unwrap_or("gevrey:1"), profile)
}

/// `--seq`, or the Gevrey sequence matching a monomial weight.
fn sequence_for(c: &Common, w: &Weight) -> Result<Sequence> {
    match (&c.seq, w.monomial_order()) {
        (Some(s), _) => Sequence::parse(s),
        (None, Some(k)) => Sequence::gevrey(1.0 / k),
        (None, None) => Err(Error::InvalidParameter(
            "--seq is required for non-monomial weights".into(),
        )),
    }
}

fn kernel(c: &Common, w: &Weight) -> Result<Kernel> {
    Kernel::parse(c.kernel.as_deref().unwrap_or("ev"), Some(w))
}

fn subsector(c: &Common, default: Subsector) -> Result<Subsector> {
    let Some(s) = &c.subsector else {
        return Ok(default);
    };
    let bad = || Error::InvalidParameter(format!("bad subsector '{s}', expected <alpha>:<r0>"));
    let (a, r) = s.split_once(':').ok_or_else(bad)?;
    let alpha: f64 = a.parse().map_err(|_| bad())?;
    let r0: f64 = r.parse().map_err(|_| bad())?;
    if !(alpha > 0.0 && r0 > 0.0) {
        return Err(bad());
    }
    Ok(Subsector { alpha, r0 })
}

fn eval_points(c: &Common) -> Result<Vec<PolarPoint>> {
    let spec = need(&c.eval, "eval")?;
    spec.split(',')
        .map(|p| {
            let bad = || Error::InvalidParameter(format!("bad evaluation point '{p}'"));
            let (r, th) = p.split_once('@').unwrap_or((p, "0"));
            Ok(PolarPoint::new(
                r.trim().parse().map_err(|_| bad())?,
                th.trim().parse().map_err(|_| bad())?,
            ))
        })
        .collect()
}

fn coefficients(c: &Common) -> Result<CoefficientSequence> {
    CoefficientSequence::from_json_file(need(&c.coeffs, "coeffs")?)
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<Option<f64>>]) -> Result<()> {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|v| v.map(|x| format!("{x:e}")).unwrap_or_default())
            .collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    std::fs::write(path, s)?;
    Ok(())
}

fn analyze(c: &Common) -> Result<(Value, Outcome)> {
    let s = sequence(c)?;
    let n = c.prefix.unwrap_or(10_000);
    if n < 1000 {
        return Err(Error::InvalidParameter(
            "--prefix must be at least 1000".into(),
        ));
    }
    let profile = GrowthProfile::new(&s, n + 1)?;
    let n_reg = n.min(2000);
    let result = json!({
        "sequence": s.name(),
        "prefix": n,
        "regularity": section(certify_regularity(&s, n_reg, 4 * n_reg))?,
        "omega": section(omega(&profile, n))?,
        "rho": section(rho_order(&profile, n))?,
        "gamma": section(gamma_index(&profile, n, 1.0))?,
        "proximate_order": section(proximate_order_check(&profile, n, 0.02))?,
        "surjectivity": section(surjectivity_conditions(&profile, n))?,
    });
    if let Some(path) = &c.csv {
        let lo = profile.m0().max(1e-3).ln();
        let hi = profile.log_quotients()[n].min(690.0) - 1e-6;
        let rows: Vec<Vec<Option<f64>>> = linspace(lo, hi, 200)
            .into_iter()
            .map(|lt| {
                let t = lt.exp();
                vec![
                    Some(t),
                    profile.hm(t).ok(),
                    profile.big_m_log(lt).ok(),
                    profile.d_of(t).ok(),
                ]
            })
            .collect();
        write_csv(path, "t,hM,M,d", &rows)?;
    }
    Ok((result, Outcome::Pass))
}

fn quasi(c: &Common) -> Result<(Value, Outcome)> {
    let s = sequence(c)?;
    let gamma = *need(&c.gamma, "gamma")?;
    let n = c.prefix.unwrap_or(100_000);
    if n < 1000 {
        return Err(Error::InvalidParameter(
            "--prefix must be at least 1000".into(),
        ));
    }
    let profile = GrowthProfile::new(&s, n + 1)?;
    let result = json!({
        "sequence": s.name(),
        "gamma": gamma,
        "korenbljum": section(korenbljum_verdict(&profile, gamma, n))?,
        "watson": section(watson_verdict(&profile, gamma, n.min(10_000), 0.02))?,
    });
    Ok((result, Outcome::Pass))
}

fn moments(c: &Common) -> Result<(Value, Outcome)> {
    let w = weight(c, None)?;
    let k = kernel(c, &w)?;
    let count = c.count.unwrap_or(40);
    if count == 0 || count > MAX_TABLE {
        return Err(Error::InvalidParameter(format!(
            "--count must lie in 1..={MAX_TABLE}"
        )));
    }
    let t = moment_table(&k, count, c.tol)?;
    let equivalence = match &c.seq {
        Some(spec) if count > 2 => section(equivalence_certificate(
            &t,
            &Sequence::parse(spec)?,
            1,
            count - 1,
        ))?,
        _ => Value::Null,
    };
    if let Some(path) = &c.csv {
        let rows: Vec<Vec<Option<f64>>> = (0..count)
            .map(|p| {
                let lm = t.log_values[p];
                vec![Some(p as f64), Some(lm.exp()), Some(lm), Some(t.rel_err[p])]
            })
            .collect();
        write_csv(path, "p,m,logm,relerr", &rows)?;
    }
    let result = json!({
        "kernel": k.name(),
        "log_moments": t.log_values,
        "rel_err": t.rel_err,
        "log_convexity_violation": t.log_convexity_violation(),
        "equivalence": equivalence,
    });
    Ok((result, Outcome::Pass))
}

fn default_subsector(g: &dyn SectorFunction, r0: f64) -> Subsector {
    Subsector {
        alpha: 0.8 * g.half_opening().min(FRAC_PI_2 * 2.0) / FRAC_PI_2,
        r0,
    }
}

fn flatness(c: &Common) -> Result<(Value, Outcome)> {
    let s0 = c.seq.as_deref().map(Sequence::parse).transpose()?;
    let n = c.prefix.unwrap_or(200_000);
    let p0 = s0.as_ref().map(|s| GrowthProfile::new(s, n)).transpose()?;
    let w = weight(c, p0.as_ref())?;
    let profile = match p0 {
        Some(p) => p,
        None => GrowthProfile::new(&sequence_for(c, &w)?, n)?,
    };
    let g = flat_function(&w)?;
    let sub = subsector(c, default_subsector(&g, 1.0))?;
    let (value, pass) = match flatness_certificate(&g, &profile, sub, FlatnessSamples::default()) {
        Ok(cert) => {
            let pass = cert.pass;
            (serde_json::to_value(cert)?, pass)
        }
        Err(e) if e.is_certificate() => (json!({ "pass": false, "reason": e.to_string() }), false),
        Err(e) => return Err(e),
    };
    let result = json!({ "weight": w.name, "sequence": profile.name(), "certificate": value });
    Ok((result, if pass { Outcome::Pass } else { Outcome::Fail }))
}

fn extend_cmd(c: &Common) -> Result<(Value, Outcome)> {
    let a = coefficients(c)?;
    let w = weight(c, None)?;
    let k = kernel(c, &w)?;
    let t = moment_table(&k, a.len().max(2), c.tol.max(1e-13))?;
    let borel = formal_borel(&a, &t, DEFAULT_EPS)?;
    let values: Vec<Value> = eval_points(c)?
        .into_iter()
        .map(|z| {
            let f = extend(&borel, &k, z, c.tol)?;
            Ok(json!({ "r": z.r, "theta": z.theta, "re": f.re, "im": f.im }))
        })
        .collect::<Result<_>>()?;
    let result = json!({
        "kernel": k.name(),
        "r0": borel.r0,
        "c2": borel.c2,
        "d2": borel.d2,
        "values": values,
    });
    Ok((result, Outcome::Pass))
}

fn certify(c: &Common) -> Result<(Value, Outcome)> {
    match c.target {
        Target::Flatness => flatness(c),
        Target::Regularity => {
            let s = sequence(c)?;
            let n = c.prefix.unwrap_or(2000);
            let r = certify_regularity(&s, n, 4 * n)?;
            let pass = r.log_convex.pass && r.moderate.pass && r.snq.pass;
            Ok((
                serde_json::to_value(r)?,
                if pass { Outcome::Pass } else { Outcome::Fail },
            ))
        }
        Target::Expansion => {
            let a = coefficients(c)?;
            let w = weight(c, None)?;
            let k = kernel(c, &w)?;
            let s = sequence_for(c, &w)?;
            let t = moment_table(&k, a.len().max(2), c.tol.max(1e-13))?;
            let ext = Extension::new(formal_borel(&a, &t, DEFAULT_EPS)?, k, c.tol);
            let sub = subsector(c, default_subsector(&ext, 0.3))?;
            let edge = 0.98 * sub.alpha * FRAC_PI_2;
            let grid: Vec<PolarPoint> = linspace(-edge, edge, 5)
                .into_iter()
                .flat_map(|th| {
                    logspace(sub.r0 / 30.0, sub.r0, 60)
                        .into_iter()
                        .map(move |r| PolarPoint::new(r, th))
                })
                .collect();
            let f = |z: PolarPoint| ext.eval(z);
            let n_max = c.count.unwrap_or(15);
            match certify_expansion(&f, &a, &s, &grid, 1, n_max, NoiseFloor::default()) {
                Ok(cert) => {
                    let pass = cert.pass;
                    let v = json!({ "subsector": sub, "certificate": cert });
                    Ok((v, if pass { Outcome::Pass } else { Outcome::Fail }))
                }
                Err(e) if e.is_certificate() => Ok((
                    json!({ "subsector": sub, "certificate": { "pass": false, "reason": e.to_string() } }),
                    Outcome::Fail,
                )),
                Err(e) => Err(e),
            }
        }
        Target::Roundtrip => {
            const THRESHOLD: f64 = 1e-3;
            let a = coefficients(c)?;
            let w = weight(c, None)?;
            let k = kernel(c, &w)?;
            let s = sequence_for(c, &w)?;
            let t = moment_table(&k, a.len().max(2), c.tol.max(1e-13))?;
            let order = w.monomial_order().unwrap_or(1.0);
            let cfg = RoundTripConfig {
                eps: DEFAULT_EPS,
                n_max: c.count.unwrap_or(8),
                grid: RecoveryGrid::for_order(order),
                tol: c.tol.max(1e-13),
            };
            let r = right_inverse_check(&a, &k, &t, &s, cfg)?;
            let pass = r.max_weighted <= THRESHOLD;
            let v = json!({ "threshold": THRESHOLD, "pass": pass, "report": r });
            Ok((v, if pass { Outcome::Pass } else { Outcome::Fail }))
        }
    }
}
