//! Run configuration for the command line program.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::array::Scenario;
use crate::beamformers::{BeamformerKind, Method};
use crate::error::{Error, Result};
use crate::evaluation::{best_sweep_index, gamma_sweep, log_gamma_grid, Draw, GridSpec, SweepPoint};
use crate::solver::SolverOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

/// Penalty weight: a fixed value, or `"auto"` to pick it by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Gamma {
    Fixed(f64),
    Auto(AutoTag),
}

impl Default for Gamma {
    fn default() -> Self {
        Gamma::Fixed(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub kind: Method,
    #[serde(default)]
    pub gamma: Gamma,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv_orders: Option<usize>,
}

impl MethodConfig {
    pub fn new(kind: Method, gamma: Gamma) -> Self {
        Self {
            kind,
            gamma,
            b: None,
            tv_orders: None,
        }
    }

    /// The beamformer with `gamma` in place of the configured weight.
    pub fn kind_with(&self, gamma: f64) -> BeamformerKind {
        BeamformerKind {
            kind: self.kind,
            gamma,
            b: self.b,
            tv_orders: self.tv_orders,
        }
    }

    /// Capon has no weight to tune, so `"auto"` is only honoured for the
    /// shaped methods.
    pub fn needs_tuning(&self) -> bool {
        matches!(self.gamma, Gamma::Auto(_)) && self.kind.is_shaped()
    }
}

/// γ candidates for sweeps: a log grid or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaGrid {
    Log { lo: f64, hi: f64, per_decade: usize },
    List(Vec<f64>),
}

impl Default for GammaGrid {
    fn default() -> Self {
        GammaGrid::Log {
            lo: 1e-3,
            hi: 10.0,
            per_decade: 10,
        }
    }
}

impl GammaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            GammaGrid::Log { lo, hi, per_decade } => log_gamma_grid(*lo, *hi, *per_decade)
                .map_err(|e| Error::Config(format!("gamma_grid: {e}")))?,
            GammaGrid::List(v) => v.clone(),
        };
        if v.is_empty() {
            return Err(Error::Config("gamma_grid is empty".into()));
        }
        if let Some(g) = v.iter().find(|g| !(**g >= 0.0) || !g.is_finite()) {
            return Err(Error::Config(format!("gamma_grid: invalid value {g}")));
        }
        Ok(v)
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_trials() -> usize {
    1000
}
fn default_mismatch() -> Vec<f64> {
    vec![0.0, 3.0]
}
fn default_validation_draws() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub manifold: GridSpec,
    pub methods: Vec<MethodConfig>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_mismatch")]
    pub mismatch_list: Vec<f64>,
    #[serde(default)]
    pub gamma_grid: GammaGrid,
    /// Held-out draws used to select `"auto"` weights.
    #[serde(default = "default_validation_draws")]
    pub validation_draws: usize,
}

/// Command line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub trials: Option<usize>,
    pub mismatch_list: Option<Vec<f64>>,
    pub seed: Option<u64>,
}

/// γ chosen for one configured method, with the sweep behind it if any.
#[derive(Debug, Clone)]
pub struct Tuned {
    pub kind: BeamformerKind,
    pub sweep: Option<Vec<SweepPoint>>,
}

impl RunConfig {
    /// The reference experiment with every method on an automatic weight.
    pub fn reference() -> Self {
        Self {
            scenario: Scenario::reference(),
            manifold: GridSpec::default(),
            methods: Method::ALL
                .iter()
                .map(|&k| {
                    let g = if k == Method::Capon {
                        Gamma::Fixed(0.0)
                    } else {
                        Gamma::Auto(AutoTag::Auto)
                    };
                    MethodConfig::new(k, g)
                })
                .collect(),
            output_dir: default_output_dir(),
            trials: default_trials(),
            mismatch_list: default_mismatch(),
            gamma_grid: GammaGrid::default(),
            validation_draws: default_validation_draws(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        if let Some(t) = o.trials {
            self.trials = t;
        }
        if let Some(m) = &o.mismatch_list {
            self.mismatch_list = m.clone();
        }
        if let Some(s) = o.seed {
            self.scenario.seed = s;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        self.scenario.validate().map_err(cfg)?;
        self.manifold.build::<f64>(&self.scenario).map_err(cfg)?;
        if self.methods.is_empty() {
            return Err(Error::Config("methods must not be empty".into()));
        }
        for m in &self.methods {
            let g = match m.gamma {
                Gamma::Fixed(g) => g,
                Gamma::Auto(_) => 0.0,
            };
            m.kind_with(g).validate().map_err(cfg)?;
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.mismatch_list.is_empty() {
            return Err(Error::Config("mismatch_list must not be empty".into()));
        }
        for &m in &self.mismatch_list {
            self.scenario.with_mismatch(m).map_err(cfg)?;
        }
        if self.validation_draws == 0 {
            return Err(Error::Config("validation_draws must be at least 1".into()));
        }
        self.gamma_grid.values()?;
        Ok(())
    }

    /// Seeds of the held-out draws, counting down from just below the Monte
    /// Carlo base seed so they never coincide with a trial seed.
    pub fn validation_seeds(&self) -> Vec<u64> {
        (1..=self.validation_draws as u64)
            .map(|i| self.scenario.seed.wrapping_sub(i))
            .collect()
    }

    /// Held-out draws at the given mismatch.
    pub fn validation_set(&self, mismatch_deg: f64) -> Result<Vec<Draw>> {
        let s = self.scenario.with_mismatch(mismatch_deg)?;
        self.validation_seeds()
            .into_iter()
            .map(|seed| Draw::new(&s.with_seed(seed)))
            .collect()
    }

    /// Resolves `"auto"` weights by maximising mean SINR on the held-out
    /// draws at zero mismatch; fixed weights pass through.
    pub fn tune(&self, opts: &SolverOptions<f64>) -> Result<Vec<Tuned>> {
        let gammas = self.gamma_grid.values()?;
        let draws = if self.methods.iter().any(MethodConfig::needs_tuning) {
            self.validation_set(0.0)?
        } else {
            Vec::new()
        };
        let mut out = Vec::with_capacity(self.methods.len());
        for m in &self.methods {
            if !m.needs_tuning() {
                let g = match m.gamma {
                    Gamma::Fixed(g) => g,
                    Gamma::Auto(_) => 0.0,
                };
                out.push(Tuned {
                    kind: m.kind_with(g),
                    sweep: None,
                });
                continue;
            }
            let manifold = self.manifold.build::<f64>(&self.scenario)?;
            let points = gamma_sweep(&m.kind_with(0.0), &gammas, &draws, &manifold, opts)?;
            let best = best_sweep_index(&points).ok_or_else(|| {
                Error::Numerical(format!("{}: every sweep point failed", m.kind))
            })?;
            out.push(Tuned {
                kind: m.kind_with(points[best].gamma),
                sweep: Some(points),
            });
        }
        Ok(out)
    }
}
