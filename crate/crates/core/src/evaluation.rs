//! Beam patterns, output SINR, the mainlobe-to-sidelobe power ratio, γ
//! sweeps and the Monte Carlo SINR benchmark.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{
    build_manifold, sample_covariance, split_manifold, synthesize_snapshots, ArrayManifold,
    ManifoldSplit, Scenario,
};
use crate::beamformers::{design, BeamformerKind, DesignInputs};
use crate::error::{domain, Error, Result};
use crate::linalg::{cast_vec, dot, norm2, norm_sqr};
use crate::scalar::{Real, C};
use crate::solver::SolverOptions;

/// Floor used wherever a dB value would be `-∞`.
pub const DB_FLOOR: f64 = -300.0;

pub fn to_db_power(x: f64) -> f64 {
    if x > 0.0 {
        (10.0 * x.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Angle grid specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min_deg: f64,
    pub max_deg: f64,
    pub step_deg: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            min_deg: -90.0,
            max_deg: 90.0,
            step_deg: 1.0,
        }
    }
}

impl GridSpec {
    pub fn build<T: Real>(&self, scenario: &Scenario) -> Result<ArrayManifold<T>> {
        build_manifold(&scenario.geometry, self.min_deg, self.max_deg, self.step_deg)
    }
}

/// Array gains over the grid, normalised to unit Euclidean norm.
#[derive(Debug, Clone)]
pub struct BeamPattern<T: Real> {
    pub angles_deg: Vec<f64>,
    /// Raw gains `g_n = w^H a(α_n)`.
    pub gains: Vec<C<T>>,
    /// `20 log10(|g_n| / ‖g‖₂)`; `-∞` at exact zeros.
    pub power_db: Vec<f64>,
}

impl<T: Real> BeamPattern<T> {
    pub fn normalized_gains(&self) -> Vec<C<T>> {
        let n = norm2(&self.gains);
        if n > T::zero() {
            self.gains.iter().map(|&g| g / n).collect()
        } else {
            self.gains.clone()
        }
    }

    /// Power in dB with `-∞` replaced by [`DB_FLOOR`].
    pub fn power_db_floored(&self) -> Vec<f64> {
        self.power_db.iter().map(|&p| p.max(DB_FLOOR)).collect()
    }

    /// Mean normalised power over the given grid indices, in dB.
    pub fn mean_power_db(&self, indices: &[usize]) -> f64 {
        if indices.is_empty() {
            return DB_FLOOR;
        }
        let total = norm_sqr(&self.gains).to_f64_lossy();
        if total <= 0.0 {
            return DB_FLOOR;
        }
        let mean = indices
            .iter()
            .map(|&i| self.gains[i].norm_sqr().to_f64_lossy())
            .sum::<f64>()
            / (indices.len() as f64 * total);
        to_db_power(mean)
    }

    /// Grid indices that are strict local minima of the gain modulus.
    pub fn local_minima(&self) -> Vec<usize> {
        let g: Vec<f64> = self.gains.iter().map(|v| v.norm().to_f64_lossy()).collect();
        (1..g.len().saturating_sub(1))
            .filter(|&i| g[i] < g[i - 1] && g[i] <= g[i + 1])
            .collect()
    }

    pub fn peak_db(&self) -> f64 {
        self.power_db.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn beam_pattern<T: Real>(w: &[C<T>], manifold: &ArrayManifold<T>) -> Result<BeamPattern<T>> {
    if w.len() != manifold.num_sensors() {
        return Err(domain(format!(
            "weights have length {}, array has {} sensors",
            w.len(),
            manifold.num_sensors()
        )));
    }
    let gains = manifold.gains(w);
    let norm = norm2(&gains).to_f64_lossy();
    let power_db = gains
        .iter()
        .map(|g| {
            let m = g.norm().to_f64_lossy();
            if m > 0.0 && norm > 0.0 {
                20.0 * (m / norm).log10()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    Ok(BeamPattern {
        angles_deg: manifold.angles_deg.clone(),
        gains,
        power_db,
    })
}

/// Linear output SINR against the true scenario:
/// `σ_s² |w^H a(θ_0)|² / w^H (Σ_j σ_j² a(θ_j) a(θ_j)^H + σ_n² I) w`.
pub fn sinr_linear<T: Real>(w: &[C<T>], scenario: &Scenario) -> Result<f64> {
    if w.len() != scenario.geometry.num_sensors {
        return Err(domain("weight length differs from the sensor count"));
    }
    let w: Vec<C<f64>> = cast_vec(w);
    if norm_sqr(&w) <= 0.0 {
        return Err(domain("SINR of a zero weight vector"));
    }
    let a0 = scenario.soi_steering::<f64>()?;
    let signal = scenario.soi.power * dot(&w, &a0).norm_sqr();
    let mut denom = scenario.noise_power * norm_sqr(&w);
    for src in &scenario.interferers {
        let a = crate::array::steering_vector::<f64>(&scenario.geometry, src.doa_deg)?;
        denom += src.power * dot(&w, &a).norm_sqr();
    }
    Ok(signal / denom)
}

/// Output SINR in dB, floored at [`DB_FLOOR`].
pub fn sinr<T: Real>(w: &[C<T>], scenario: &Scenario) -> Result<f64> {
    Ok(to_db_power(sinr_linear(w, scenario)?))
}

/// Optimal SINR `σ_s² a^H R_{i+n}⁻¹ a` for known interference-plus-noise
/// covariance, in dB.
pub fn optimal_sinr(scenario: &Scenario) -> Result<f64> {
    let r = scenario.interference_noise_covariance::<f64>()?;
    let a = scenario.soi_steering::<f64>()?;
    let chol = crate::linalg::Cholesky::new(&r)
        .ok_or_else(|| Error::Numerical("interference covariance not positive definite".into()))?;
    let x = chol.solve(&a);
    Ok(to_db_power(scenario.soi.power * dot(&a, &x).re))
}

/// Mainlobe-to-sidelobe power ratio `‖A_M^H w‖² / ‖A_S^H w‖²`; `+∞` when the
/// sidelobe power vanishes.
pub fn mspr<T: Real>(w: &[C<T>], split: &ManifoldSplit<T>) -> Result<f64> {
    if w.len() != split.mainlobe.rows() {
        return Err(domain("weight length differs from the sensor count"));
    }
    let main = norm_sqr(&split.mainlobe.adjoint_mul_vec(w)).to_f64_lossy();
    let side = norm_sqr(&split.sidelobe.adjoint_mul_vec(w)).to_f64_lossy();
    Ok(if side > 0.0 { main / side } else { f64::INFINITY })
}

/// One snapshot draw and everything derived from it.
pub struct Draw {
    pub scenario: Scenario,
    pub snapshots: crate::array::SnapshotMatrix<f64>,
    pub covariance: crate::array::CovarianceEstimate<f64>,
    pub steering: Vec<C<f64>>,
}

impl Draw {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        let snapshots = synthesize_snapshots::<f64>(scenario)?;
        let covariance = sample_covariance(&snapshots.data)?;
        Ok(Self {
            steering: scenario.presumed_steering()?,
            scenario: scenario.clone(),
            snapshots,
            covariance,
        })
    }

    pub fn inputs<'a>(&'a self, manifold: &'a ArrayManifold<f64>) -> DesignInputs<'a, f64> {
        DesignInputs {
            covariance: &self.covariance,
            manifold,
            snapshots: &self.snapshots.data,
            steering: &self.steering,
            presumed_doa_deg: self.scenario.presumed_doa_deg,
        }
    }
}

/// Log-spaced grid `lo … hi` with `per_decade` points per decade, endpoints
/// included.
pub fn log_gamma_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && per_decade > 0) {
        return Err(domain("gamma grid needs 0 < lo <= hi and per_decade > 0"));
    }
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64).round() as usize;
    if steps == 0 {
        return Ok(vec![lo]);
    }
    Ok((0..=steps)
        .map(|i| lo * 10f64.powf(decades * i as f64 / steps as f64))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub gamma: f64,
    /// Mean SINR over the evaluation draws.
    pub sinr_db: f64,
    pub sidelobe_mean_db: f64,
    pub mspr: f64,
    /// Draws on which the solver failed (excluded from the means).
    pub failures: usize,
}

/// Evaluates one method over a γ grid on fixed draws.
pub fn gamma_sweep(
    kind: &BeamformerKind,
    gammas: &[f64],
    draws: &[Draw],
    manifold: &ArrayManifold<f64>,
    opts: &SolverOptions<f64>,
) -> Result<Vec<SweepPoint>> {
    if gammas.is_empty() {
        return Err(domain("empty gamma grid"));
    }
    if draws.is_empty() {
        return Err(domain("gamma sweep needs at least one draw"));
    }
    let split = split_manifold(manifold, draws[0].scenario.presumed_doa_deg, kind.mainlobe_half_width())?;
    gammas
        .par_iter()
        .map(|&gamma| {
            let k = kind.with_gamma(gamma);
            let mut sinr_sum = 0.0;
            let mut side_sum = 0.0;
            let mut mspr_sum = 0.0;
            let mut ok = 0usize;
            for d in draws {
                match design(&k, &d.inputs(manifold), opts) {
                    Ok(w) => {
                        let pattern = beam_pattern(&w.w, manifold)?;
                        sinr_sum += sinr(&w.w, &d.scenario)?;
                        side_sum += pattern.mean_power_db(&split.sidelobe_indices);
                        mspr_sum += mspr(&w.w, &split)?;
                        ok += 1;
                    }
                    Err(Error::Numerical(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            let n = ok.max(1) as f64;
            Ok(SweepPoint {
                gamma,
                sinr_db: if ok > 0 { sinr_sum / n } else { f64::NAN },
                sidelobe_mean_db: if ok > 0 { side_sum / n } else { f64::NAN },
                mspr: if ok > 0 { mspr_sum / n } else { f64::NAN },
                failures: draws.len() - ok,
            })
        })
        .collect()
}

/// Index of the best SINR point; ties go to the smaller γ.
pub fn best_sweep_index(points: &[SweepPoint]) -> Option<usize> {
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.sinr_db.is_finite())
        .fold(None, |best: Option<(usize, f64)>, (i, p)| match best {
            Some((_, s)) if s >= p.sinr_db => best,
            _ => Some((i, p.sinr_db)),
        })
        .map(|(i, _)| i)
}

/// Per-method Monte Carlo statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSinr {
    #[serde(flatten)]
    pub kind: BeamformerKind,
    pub mean_sinr_db: f64,
    pub std_db: f64,
    pub min_db: f64,
    pub max_db: f64,
    pub trials: usize,
    pub failures: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub per_trial_db: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinrReport {
    pub methods: Vec<MethodSinr>,
    pub mismatch_deg: f64,
    pub seed: u64,
}

impl SinrReport {
    pub fn method(&self, kind: crate::beamformers::Method) -> Option<&MethodSinr> {
        self.methods.iter().find(|m| m.kind.kind == kind)
    }
}

fn summarize(kind: BeamformerKind, values: Vec<f64>, failures: usize) -> MethodSinr {
    let n = values.len();
    let mean = if n > 0 {
        values.iter().sum::<f64>() / n as f64
    } else {
        f64::NAN
    };
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    MethodSinr {
        kind,
        mean_sinr_db: mean,
        std_db: std,
        min_db: values.iter().copied().fold(f64::INFINITY, f64::min),
        max_db: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        trials: n,
        failures,
        per_trial_db: values,
    }
}

/// Runs `trials` independent draws (seed `base_seed + t`) with the true SOI
/// at `presumed + mismatch_deg`, designs every method against the presumed
/// DOA and scores it against the true scenario.
///
/// Per-trial results are reduced in trial order, so the report does not
/// depend on how many threads ran the trials.
pub fn monte_carlo(
    template: &Scenario,
    methods: &[BeamformerKind],
    trials: usize,
    base_seed: u64,
    mismatch_deg: f64,
    grid: &GridSpec,
    opts: &SolverOptions<f64>,
) -> Result<SinrReport> {
    if trials == 0 {
        return Err(domain("monte carlo needs at least one trial"));
    }
    if methods.is_empty() {
        return Err(domain("no methods to evaluate"));
    }
    for m in methods {
        m.validate()?;
    }
    let scenario = template.with_mismatch(mismatch_deg)?;
    let manifold = grid.build::<f64>(&scenario)?;

    let per_trial: Vec<Vec<Option<f64>>> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<Option<f64>>> {
            let draw = Draw::new(&scenario.with_seed(base_seed.wrapping_add(t as u64)))?;
            let inputs = draw.inputs(&manifold);
            methods
                .iter()
                .map(|k| match design(k, &inputs, opts) {
                    Ok(w) => Ok(Some(sinr(&w.w, &draw.scenario)?)),
                    Err(Error::Numerical(_)) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let methods = methods
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let values: Vec<f64> = per_trial.iter().filter_map(|t| t[i]).collect();
            let failures = trials - values.len();
            summarize(k, values, failures)
        })
        .collect();
    Ok(SinrReport {
        methods,
        mismatch_deg,
        seed: base_seed,
    })
}
