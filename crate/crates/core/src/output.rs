//! CSV / JSON writers. Every float goes out with 9 significant digits so
//! files are stable and diffable.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::beamformers::BeamformerKind;
use crate::error::Result;
use crate::evaluation::{BeamPattern, SinrReport, SweepPoint};

/// `%.9g`: 9 significant digits, trailing zeros dropped, exponent form
/// outside `1e-4 ≤ |x| < 1e9`.
pub fn fmt_g9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').unwrap_or((&sci, "0"));
    let exp: i32 = exp.parse().unwrap_or(0);
    if !(-4..9).contains(&exp) {
        return format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `x` rounded to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if x.is_finite() {
        fmt_g9(x).parse().unwrap_or(x)
    } else {
        x
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().and_then(|x| serde_json::Number::from_f64(round9(x))) {
                *n = r;
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(o) => o.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with floats rounded to 9 significant digits and a trailing
/// newline. Non-finite floats become `null`.
pub fn to_json<S: Serialize>(value: &S) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

pub fn pattern_csv(pattern: &BeamPattern<f64>) -> String {
    let mut out = String::from("angle_deg,gain_db,gain_re,gain_im\n");
    for ((angle, db), g) in pattern
        .angles_deg
        .iter()
        .zip(pattern.power_db_floored())
        .zip(&pattern.gains)
    {
        let _ = writeln!(out, "{},{},{},{}", fmt_g9(*angle), fmt_g9(db), fmt_g9(g.re), fmt_g9(g.im));
    }
    out
}

#[derive(Serialize)]
struct ReportMethod<'a> {
    #[serde(flatten)]
    kind: &'a BeamformerKind,
    mean_sinr_db: f64,
    std_db: f64,
    min_db: f64,
    max_db: f64,
    trials: usize,
    failures: usize,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    methods: Vec<ReportMethod<'a>>,
    mismatch_deg: f64,
    seed: u64,
}

/// Monte Carlo report without the per-trial values.
pub fn report_json(report: &SinrReport) -> Result<String> {
    to_json(&ReportFile {
        methods: report
            .methods
            .iter()
            .map(|m| ReportMethod {
                kind: &m.kind,
                mean_sinr_db: m.mean_sinr_db,
                std_db: m.std_db,
                min_db: m.min_db,
                max_db: m.max_db,
                trials: m.trials,
                failures: m.failures,
            })
            .collect(),
        mismatch_deg: report.mismatch_deg,
        seed: report.seed,
    })
}

/// One row per (method, mismatch).
pub fn summary_csv(reports: &[SinrReport]) -> String {
    let mut out = String::from("method,gamma,mismatch_deg,mean_sinr_db,std_db,trials,failures\n");
    for r in reports {
        for m in &r.methods {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                m.kind.kind,
                fmt_g9(m.kind.gamma),
                fmt_g9(r.mismatch_deg),
                fmt_g9(m.mean_sinr_db),
                fmt_g9(m.std_db),
                m.trials,
                m.failures
            );
        }
    }
    out
}

/// Sweep table; `selected` is 1 on the best-SINR row of each method.
pub fn sweep_csv(rows: &[(BeamformerKind, Vec<SweepPoint>, Option<usize>)]) -> String {
    let mut out = String::from("method,gamma,sinr_db,sidelobe_mean_db,mspr,failures,selected\n");
    for (kind, points, best) in rows {
        for (i, p) in points.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                kind.kind,
                fmt_g9(p.gamma),
                fmt_g9(p.sinr_db),
                fmt_g9(p.sidelobe_mean_db),
                fmt_g9(p.mspr),
                p.failures,
                u8::from(*best == Some(i))
            );
        }
    }
    out
}
