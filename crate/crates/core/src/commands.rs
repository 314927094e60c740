//! The three things the `beamshape` program does: single-draw beam
//! patterns, γ sweeps and Monte Carlo SINR benchmarks. Each command is a
//! deterministic function of its [`RunConfig`] and writes its artifacts
//! under `output_dir`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::array::Scenario;
use crate::beamformers::{design, BeamformerKind};
use crate::config::{RunConfig, Tuned};
use crate::error::{Error, Result};
use crate::evaluation::{
    beam_pattern, best_sweep_index, gamma_sweep, monte_carlo, mspr, sinr, Draw, SinrReport,
    SweepPoint,
};
use crate::output::{fmt_g9, pattern_csv, report_json, summary_csv, sweep_csv, to_json};
use crate::solver::{SolverOptions, SolverStatus};

/// Files written by a command, in write order, plus any warnings.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub reports: Vec<SinrReport>,
}

impl Outcome {
    fn write(&mut self, dir: &Path, name: &str, contents: &str) -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, contents)?;
        self.files.push(path);
        Ok(())
    }
}

fn prepare(cfg: &RunConfig) -> Result<()> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    Ok(())
}

/// File stems `pattern_<kind>`, with a numeric suffix when a kind repeats.
fn stems(kinds: &[BeamformerKind]) -> Vec<String> {
    kinds
        .iter()
        .enumerate()
        .map(|(i, k)| {
            let base = k.kind.name().to_lowercase();
            let repeat = kinds[..i].iter().filter(|o| o.kind == k.kind).count();
            if repeat == 0 {
                base
            } else {
                format!("{base}_{}", repeat + 1)
            }
        })
        .collect()
}

fn write_tuning(out: &mut Outcome, dir: &Path, tuned: &[Tuned]) -> Result<()> {
    let rows: Vec<_> = tuned
        .iter()
        .filter_map(|t| {
            let pts = t.sweep.clone()?;
            let best = pts.iter().position(|p| p.gamma == t.kind.gamma);
            Some((t.kind, pts, best))
        })
        .collect();
    if !rows.is_empty() {
        out.write(dir, "tuning.csv", &sweep_csv(&rows))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PatternEntry {
    #[serde(flatten)]
    kind: BeamformerKind,
    file: String,
    sinr_db: f64,
    mspr: f64,
    iterations: usize,
    status: SolverStatus,
    constraint_residual: f64,
    ridge_applied: bool,
}

#[derive(Serialize)]
struct PatternManifest<'a> {
    command: &'static str,
    scenario: &'a Scenario,
    mismatch_deg: f64,
    methods: Vec<PatternEntry>,
}

/// One snapshot draw (seed = scenario seed, mismatch = first list entry),
/// one design per method, one pattern CSV each plus `manifest.json`.
pub fn run_pattern(cfg: &RunConfig, opts: &SolverOptions<f64>) -> Result<Outcome> {
    prepare(cfg)?;
    let dir = &cfg.output_dir;
    let mut out = Outcome::default();
    let tuned = cfg.tune(opts)?;
    let kinds: Vec<BeamformerKind> = tuned.iter().map(|t| t.kind).collect();

    let mismatch = cfg.mismatch_list[0];
    let scenario = cfg.scenario.with_mismatch(mismatch)?;
    let draw = Draw::new(&scenario)?;
    let manifold = cfg.manifold.build::<f64>(&scenario)?;
    let inputs = draw.inputs(&manifold);

    let mut entries = Vec::with_capacity(kinds.len());
    for (kind, stem) in kinds.iter().zip(stems(&kinds)) {
        let w = design(kind, &inputs, opts)?;
        let pattern = beam_pattern(&w.w, &manifold)?;
        let split = inputs.split_for(kind.mainlobe_half_width())?;
        let file = format!("pattern_{stem}.csv");
        out.write(dir, &file, &pattern_csv(&pattern))?;
        entries.push(PatternEntry {
            kind: *kind,
            file,
            sinr_db: sinr(&w.w, &draw.scenario)?,
            mspr: mspr(&w.w, &split)?,
            iterations: w.iterations,
            status: w.status,
            constraint_residual: w.constraint_residual,
            ridge_applied: w.ridge_applied,
        });
    }
    write_tuning(&mut out, dir, &tuned)?;
    let manifest = PatternManifest {
        command: "pattern",
        scenario: &cfg.scenario,
        mismatch_deg: mismatch,
        methods: entries,
    };
    out.write(dir, "manifest.json", &to_json(&manifest)?)?;
    Ok(out)
}

/// Monte Carlo over every mismatch in the list with weights frozen after
/// tuning. Writes `sinr_mismatch_<deg>.json` per mismatch and
/// `summary.csv`. A method that fails on every trial is reported as a
/// numerical error after the files are written.
pub fn run_montecarlo(cfg: &RunConfig, opts: &SolverOptions<f64>) -> Result<Outcome> {
    prepare(cfg)?;
    let dir = &cfg.output_dir;
    let mut out = Outcome::default();
    let tuned = cfg.tune(opts)?;
    let kinds: Vec<BeamformerKind> = tuned.iter().map(|t| t.kind).collect();
    write_tuning(&mut out, dir, &tuned)?;

    for &m in &cfg.mismatch_list {
        let report = monte_carlo(
            &cfg.scenario,
            &kinds,
            cfg.trials,
            cfg.scenario.seed,
            m,
            &cfg.manifold,
            opts,
        )?;
        out.write(dir, &format!("sinr_mismatch_{}.json", fmt_g9(m)), &report_json(&report)?)?;
        out.reports.push(report);
    }
    out.write(dir, "summary.csv", &summary_csv(&out.reports))?;

    let dead: Vec<String> = out
        .reports
        .iter()
        .flat_map(|r| r.methods.iter().filter(|m| m.trials == 0).map(move |m| {
            format!("{} at mismatch {}", m.kind.kind, r.mismatch_deg)
        }))
        .collect();
    if !dead.is_empty() {
        return Err(Error::Numerical(format!(
            "every trial failed for {}",
            dead.join(", ")
        )));
    }
    Ok(out)
}

/// γ sweep of every configured method on the held-out draws at the first
/// mismatch in the list. Writes `sweep.csv` with the best row per method
/// marked; warns when the best γ sits on the edge of the grid.
pub fn run_sweep(cfg: &RunConfig, gammas: &[f64], opts: &SolverOptions<f64>) -> Result<Outcome> {
    prepare(cfg)?;
    if gammas.is_empty() {
        return Err(Error::Config("gamma grid is empty".into()));
    }
    let dir = &cfg.output_dir;
    let mut out = Outcome::default();
    let draws = cfg.validation_set(cfg.mismatch_list[0])?;
    let manifold = cfg.manifold.build::<f64>(&draws[0].scenario)?;

    let mut rows: Vec<(BeamformerKind, Vec<SweepPoint>, Option<usize>)> = Vec::new();
    let mut interior = false;
    for m in &cfg.methods {
        let kind = m.kind_with(0.0);
        let points = gamma_sweep(&kind, gammas, &draws, &manifold, opts)?;
        let best = best_sweep_index(&points);
        if kind.kind.is_shaped() && gammas.len() > 2 {
            match best {
                Some(i) if i > 0 && i + 1 < points.len() => interior = true,
                Some(i) => out.warnings.push(format!(
                    "{}: best gamma {} is at the edge of the grid",
                    kind.kind,
                    fmt_g9(points[i].gamma)
                )),
                None => out.warnings.push(format!("{}: every sweep point failed", kind.kind)),
            }
        }
        rows.push((kind, points, best));
    }
    let shaped = cfg.methods.iter().any(|m| m.kind.is_shaped());
    if shaped && gammas.len() > 2 && !interior {
        out.warnings
            .push("no method has an interior optimum; the grid may be too narrow".into());
    }
    out.write(dir, "sweep.csv", &sweep_csv(&rows))?;
    Ok(out)
}
