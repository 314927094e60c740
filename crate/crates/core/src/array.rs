//! Uniform linear array model: steering vectors, the angle-grid manifold and
//! its mainlobe/sidelobe partition, finite-difference operators, snapshot
//! synthesis and the second-order statistics estimated from snapshots.

use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::linalg::CMat;
use crate::scalar::{unit_phasor, Real, C};

/// Geometry of a uniform linear array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub num_sensors: usize,
    /// Sensor spacing divided by the carrier wavelength.
    pub spacing_ratio: f64,
}

impl ArrayGeometry {
    pub fn new(num_sensors: usize, spacing_ratio: f64) -> Result<Self> {
        let g = Self {
            num_sensors,
            spacing_ratio,
        };
        g.validate()?;
        Ok(g)
    }

    /// Half-wavelength spaced array.
    pub fn half_wavelength(num_sensors: usize) -> Result<Self> {
        Self::new(num_sensors, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_sensors < 2 {
            return Err(domain(format!(
                "array needs at least 2 sensors, got {}",
                self.num_sensors
            )));
        }
        if !(self.spacing_ratio > 0.0) || !self.spacing_ratio.is_finite() {
            return Err(domain(format!(
                "spacing ratio must be positive, got {}",
                self.spacing_ratio
            )));
        }
        Ok(())
    }
}

/// A narrowband point source: direction and linear power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceSpec {
    pub doa_deg: f64,
    pub power: f64,
}

impl SourceSpec {
    pub fn new(doa_deg: f64, power: f64) -> Result<Self> {
        check_doa(doa_deg)?;
        if !(power > 0.0) || !power.is_finite() {
            return Err(domain(format!("source power must be positive, got {power}")));
        }
        Ok(Self { doa_deg, power })
    }

    pub fn from_db(doa_deg: f64, power_db: f64) -> Result<Self> {
        Self::new(doa_deg, db_to_linear(power_db))
    }

    pub fn power_db(&self) -> f64 {
        10.0 * self.power.log10()
    }
}

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn check_doa(doa_deg: f64) -> Result<()> {
    if !(doa_deg.abs() <= 90.0) {
        return Err(domain(format!("DOA {doa_deg} deg outside [-90, 90]")));
    }
    Ok(())
}

/// Everything needed to synthesise a snapshot record: array, sources,
/// noise level, snapshot count, the DOA the beamformer believes in, and the
/// RNG seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct Scenario {
    pub geometry: ArrayGeometry,
    pub soi: SourceSpec,
    pub interferers: Vec<SourceSpec>,
    /// Per-sensor noise power; the noise covariance is `noise_power · I`.
    pub noise_power: f64,
    pub num_snapshots: usize,
    pub presumed_doa_deg: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        SourceSpec::new(self.soi.doa_deg, self.soi.power)?;
        for (i, s) in self.interferers.iter().enumerate() {
            SourceSpec::new(s.doa_deg, s.power)?;
            if self.interferers[..i].iter().any(|o| o.doa_deg == s.doa_deg) {
                return Err(domain(format!("duplicate interferer DOA {} deg", s.doa_deg)));
            }
        }
        if !(self.noise_power > 0.0) || !self.noise_power.is_finite() {
            return Err(domain(format!(
                "noise power must be positive, got {}",
                self.noise_power
            )));
        }
        if self.num_snapshots == 0 {
            return Err(domain("at least one snapshot is required"));
        }
        check_doa(self.presumed_doa_deg)?;
        Ok(())
    }

    /// The default experiment: 8-element half-wavelength ULA, SOI at 0 deg
    /// with 10 dB SNR, interferers at -30/30/70 deg with 20/20/40 dB INR,
    /// unit noise, 100 snapshots.
    pub fn reference() -> Self {
        Self {
            geometry: ArrayGeometry {
                num_sensors: 8,
                spacing_ratio: 0.5,
            },
            soi: SourceSpec {
                doa_deg: 0.0,
                power: db_to_linear(10.0),
            },
            interferers: vec![
                SourceSpec {
                    doa_deg: -30.0,
                    power: db_to_linear(20.0),
                },
                SourceSpec {
                    doa_deg: 30.0,
                    power: db_to_linear(20.0),
                },
                SourceSpec {
                    doa_deg: 70.0,
                    power: db_to_linear(40.0),
                },
            ],
            noise_power: 1.0,
            num_snapshots: 100,
            presumed_doa_deg: 0.0,
            seed: 1,
        }
    }

    /// Same scenario with the true SOI direction moved to
    /// `presumed_doa_deg + mismatch_deg`.
    pub fn with_mismatch(&self, mismatch_deg: f64) -> Result<Self> {
        let mut s = self.clone();
        s.soi.doa_deg = self.presumed_doa_deg + mismatch_deg;
        check_doa(s.soi.doa_deg)?;
        Ok(s)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// True interference-plus-noise covariance
    /// `Σ_j σ_j² a(θ_j) a(θ_j)^H + noise_power · I`.
    pub fn interference_noise_covariance<T: Real>(&self) -> Result<CMat<T>> {
        let m = self.geometry.num_sensors;
        let mut r = CMat::identity(m).scale(C::new(T::lit(self.noise_power), T::zero()));
        for src in &self.interferers {
            let a = steering_vector::<T>(&self.geometry, src.doa_deg)?;
            let p = T::lit(src.power);
            for i in 0..m {
                for j in 0..m {
                    r[(i, j)] += a[i] * a[j].conj() * p;
                }
            }
        }
        Ok(r)
    }

    /// Steering vector of the true SOI direction.
    pub fn soi_steering<T: Real>(&self) -> Result<Vec<C<T>>> {
        steering_vector(&self.geometry, self.soi.doa_deg)
    }

    /// Steering vector of the presumed SOI direction.
    pub fn presumed_steering<T: Real>(&self) -> Result<Vec<C<T>>> {
        steering_vector(&self.geometry, self.presumed_doa_deg)
    }
}

#[derive(Serialize, Deserialize)]
struct SourceFile {
    doa_deg: f64,
    power_db: f64,
}

/// On-disk form of [`Scenario`]; powers in dB.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    geometry: ArrayGeometry,
    soi: SourceFile,
    #[serde(default)]
    interferers: Vec<SourceFile>,
    noise_power_db: f64,
    num_snapshots: usize,
    presumed_doa_deg: f64,
    #[serde(default)]
    seed: u64,
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = Error;

    fn try_from(f: ScenarioFile) -> Result<Self> {
        let s = Scenario {
            geometry: f.geometry,
            soi: SourceSpec::from_db(f.soi.doa_deg, f.soi.power_db)?,
            interferers: f
                .interferers
                .iter()
                .map(|i| SourceSpec::from_db(i.doa_deg, i.power_db))
                .collect::<Result<_>>()?,
            noise_power: db_to_linear(f.noise_power_db),
            num_snapshots: f.num_snapshots,
            presumed_doa_deg: f.presumed_doa_deg,
            seed: f.seed,
        };
        s.validate()?;
        Ok(s)
    }
}

impl From<Scenario> for ScenarioFile {
    fn from(s: Scenario) -> Self {
        let src = |x: &SourceSpec| SourceFile {
            doa_deg: x.doa_deg,
            power_db: x.power_db(),
        };
        ScenarioFile {
            geometry: s.geometry,
            soi: src(&s.soi),
            interferers: s.interferers.iter().map(src).collect(),
            noise_power_db: 10.0 * s.noise_power.log10(),
            num_snapshots: s.num_snapshots,
            presumed_doa_deg: s.presumed_doa_deg,
            seed: s.seed,
        }
    }
}

/// ULA response to a plane wave from `doa_deg`:
/// element `m` is `exp(i·m·2π·(d/λ)·sin θ)`, `m = 0..M`.
pub fn steering_vector<T: Real>(geometry: &ArrayGeometry, doa_deg: f64) -> Result<Vec<C<T>>> {
    check_doa(doa_deg)?;
    Ok(steering_unchecked(geometry, doa_deg))
}

fn steering_unchecked<T: Real>(geometry: &ArrayGeometry, doa_deg: f64) -> Vec<C<T>> {
    // Phase increment computed in f64 so the manifold is identical up to
    // rounding for every scalar type.
    let step = 2.0 * std::f64::consts::PI * geometry.spacing_ratio * doa_deg.to_radians().sin();
    (0..geometry.num_sensors)
        .map(|m| unit_phasor(T::lit(m as f64 * step)))
        .collect()
}

/// Steering vectors sampled on a uniform angle grid.
#[derive(Debug, Clone)]
pub struct ArrayManifold<T: Real> {
    pub angles_deg: Vec<f64>,
    /// `M × N`, column `n` is `a(angles_deg[n])`.
    pub matrix: CMat<T>,
    pub grid_step_deg: f64,
}

impl<T: Real> ArrayManifold<T> {
    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }

    pub fn num_sensors(&self) -> usize {
        self.matrix.rows()
    }

    /// Index of the grid angle closest to `deg` (ties go to the lower index).
    pub fn nearest_index(&self, deg: f64) -> usize {
        let min = self.angles_deg[0];
        let raw = ((deg - min) / self.grid_step_deg).round();
        raw.clamp(0.0, (self.len() - 1) as f64) as usize
    }

    /// Array gains `A^H w` over the grid.
    pub fn gains(&self, w: &[C<T>]) -> Vec<C<T>> {
        self.matrix.adjoint_mul_vec(w)
    }
}

pub fn build_manifold<T: Real>(
    geometry: &ArrayGeometry,
    min_deg: f64,
    max_deg: f64,
    step_deg: f64,
) -> Result<ArrayManifold<T>> {
    geometry.validate()?;
    if !(step_deg > 0.0) || !step_deg.is_finite() {
        return Err(domain(format!("grid step must be positive, got {step_deg}")));
    }
    if !(min_deg < max_deg) {
        return Err(domain(format!("empty grid range [{min_deg}, {max_deg}]")));
    }
    check_doa(min_deg)?;
    check_doa(max_deg)?;
    let intervals = (max_deg - min_deg) / step_deg;
    let rounded = intervals.round();
    if (intervals - rounded).abs() > 1e-9 * intervals.max(1.0) {
        return Err(domain(format!(
            "step {step_deg} does not divide the span [{min_deg}, {max_deg}]"
        )));
    }
    let n = rounded as usize + 1;
    let angles_deg: Vec<f64> = (0..n)
        .map(|i| {
            if i + 1 == n {
                max_deg
            } else {
                min_deg + i as f64 * step_deg
            }
        })
        .collect();
    let columns: Vec<Vec<C<T>>> = angles_deg
        .iter()
        .map(|&a| steering_unchecked(geometry, a))
        .collect();
    Ok(ArrayManifold {
        angles_deg,
        matrix: CMat::from_columns(&columns),
        grid_step_deg: step_deg,
    })
}

/// Column partition of the manifold into a mainlobe window of `2b+1` grid
/// angles around the presumed DOA and the remaining sidelobe directions.
#[derive(Debug, Clone)]
pub struct ManifoldSplit<T: Real> {
    pub mainlobe_indices: Vec<usize>,
    pub sidelobe_indices: Vec<usize>,
    pub b: usize,
    pub center_index: usize,
    /// Set when the window was cut short by a grid edge.
    pub truncated: bool,
    /// `A_M`, `M × |mainlobe|`.
    pub mainlobe: CMat<T>,
    /// `A_S`, `M × |sidelobe|`.
    pub sidelobe: CMat<T>,
}

pub fn split_manifold<T: Real>(
    manifold: &ArrayManifold<T>,
    presumed_doa_deg: f64,
    b: usize,
) -> Result<ManifoldSplit<T>> {
    let n = manifold.len();
    if 2 * b + 1 > n {
        return Err(domain(format!(
            "mainlobe half-width {b} needs {} grid angles, grid has {n}",
            2 * b + 1
        )));
    }
    check_doa(presumed_doa_deg)?;
    let center = manifold.nearest_index(presumed_doa_deg);
    let lo = center.saturating_sub(b);
    let hi = (center + b).min(n - 1);
    let truncated = center < b || center + b > n - 1;
    let mainlobe_indices: Vec<usize> = (lo..=hi).collect();
    let sidelobe_indices: Vec<usize> = (0..lo).chain(hi + 1..n).collect();
    Ok(ManifoldSplit {
        mainlobe: manifold.matrix.select_columns(&mainlobe_indices),
        sidelobe: manifold.matrix.select_columns(&sidelobe_indices),
        mainlobe_indices,
        sidelobe_indices,
        b,
        center_index: center,
        truncated,
    })
}

/// `M × K` snapshot record plus the SOI amplitudes that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix<T: Real> {
    pub data: CMat<T>,
    pub soi_amplitudes: Vec<C<T>>,
}

fn circular_gaussian(rng: &mut ChaCha8Rng, power: f64) -> (f64, f64) {
    let s = (power / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    (s * re, s * im)
}

/// Draws `x(k) = s(k)a(θ_0) + Σ_j β_j(k)a(θ_j) + n(k)` for `k = 1..K`, with
/// all amplitudes and noise circular complex Gaussian. Deterministic in the
/// scenario seed.
pub fn synthesize_snapshots<T: Real>(scenario: &Scenario) -> Result<SnapshotMatrix<T>> {
    scenario.validate()?;
    let m = scenario.geometry.num_sensors;
    let k = scenario.num_snapshots;
    let soi = steering_unchecked::<f64>(&scenario.geometry, scenario.soi.doa_deg);
    let interferers: Vec<(Vec<C<f64>>, f64)> = scenario
        .interferers
        .iter()
        .map(|s| (steering_unchecked::<f64>(&scenario.geometry, s.doa_deg), s.power))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut data = CMat::<T>::zeros(m, k);
    let mut amplitudes = Vec::with_capacity(k);
    let mut column = vec![C::<f64>::zero(); m];
    for snap in 0..k {
        let (re, im) = circular_gaussian(&mut rng, scenario.soi.power);
        let s = C::new(re, im);
        amplitudes.push(C::new(T::lit(re), T::lit(im)));
        for (x, &a) in column.iter_mut().zip(&soi) {
            *x = s * a;
        }
        for (a, power) in &interferers {
            let (re, im) = circular_gaussian(&mut rng, *power);
            let beta = C::new(re, im);
            for (x, &ai) in column.iter_mut().zip(a) {
                *x += beta * ai;
            }
        }
        for (row, x) in column.iter().enumerate() {
            let (re, im) = circular_gaussian(&mut rng, scenario.noise_power);
            data[(row, snap)] = C::new(T::lit(x.re + re), T::lit(x.im + im));
        }
    }
    Ok(SnapshotMatrix {
        data,
        soi_amplitudes: amplitudes,
    })
}

/// Sample covariance `R_x = (1/K) X X^H`, symmetrised.
#[derive(Debug, Clone)]
pub struct CovarianceEstimate<T: Real> {
    pub matrix: CMat<T>,
    pub snapshot_count: usize,
}

impl<T: Real> CovarianceEstimate<T> {
    /// Wraps an externally known covariance (e.g. the true interference
    /// plus noise covariance).
    pub fn known(matrix: CMat<T>) -> Result<Self> {
        if matrix.rows() != matrix.cols() || matrix.rows() == 0 {
            return Err(domain("covariance must be a non-empty square matrix"));
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
            snapshot_count: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

pub fn sample_covariance<T: Real>(x: &CMat<T>) -> Result<CovarianceEstimate<T>> {
    let k = x.cols();
    if k == 0 || x.rows() == 0 {
        return Err(domain("sample covariance of an empty snapshot set"));
    }
    let r = x.gram_outer().scale(C::new(T::one() / T::lit(k as f64), T::zero()));
    Ok(CovarianceEstimate {
        matrix: r.hermitian_part(),
        snapshot_count: k,
    })
}

/// Squared-normalised-mean weights: for each row of `A^H X` take the modulus
/// of its mean over snapshots, divide by the largest such modulus, square.
/// Returns the diagonal of `Q`.
pub fn snm_weighting<T: Real>(manifold: &ArrayManifold<T>, x: &CMat<T>) -> Result<Vec<T>> {
    if manifold.num_sensors() != x.rows() {
        return Err(domain(format!(
            "manifold has {} sensors, data has {} rows",
            manifold.num_sensors(),
            x.rows()
        )));
    }
    if x.cols() == 0 {
        return Err(domain("no snapshots"));
    }
    let mean: Vec<C<T>> = {
        let mut acc = vec![C::zero(); x.rows()];
        for r in 0..x.rows() {
            acc[r] = x.row(r).iter().copied().sum::<C<T>>() / T::lit(x.cols() as f64);
        }
        acc
    };
    // Row means of A^H X are A^H applied to the column mean of X.
    let moduli: Vec<T> = manifold
        .matrix
        .adjoint_mul_vec(&mean)
        .iter()
        .map(|v| v.norm())
        .collect();
    let peak = moduli.iter().copied().fold(T::zero(), T::max);
    if !(peak > T::zero()) || !peak.is_finite() {
        return Err(domain("SNM weighting undefined for all-zero data"));
    }
    Ok(moduli
        .into_iter()
        .map(|m| {
            let q = m / peak;
            q * q
        })
        .collect())
}

/// Stacked forward and backward `i`-th order difference matrix, real,
/// `2(N-i) × N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceOperator<T: Real> {
    pub order: usize,
    pub n: usize,
    /// Row-major entries; the first `N-i` rows are the forward block.
    pub matrix: Vec<T>,
}

impl<T: Real> DifferenceOperator<T> {
    pub fn rows(&self) -> usize {
        2 * (self.n - self.order)
    }

    pub fn entry(&self, r: usize, c: usize) -> T {
        self.matrix[r * self.n + c]
    }

    pub fn forward_block(&self) -> &[T] {
        &self.matrix[..(self.n - self.order) * self.n]
    }

    pub fn backward_block(&self) -> &[T] {
        &self.matrix[(self.n - self.order) * self.n..]
    }

    pub fn apply_real(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.n);
        (0..self.rows())
            .map(|r| {
                self.matrix[r * self.n..(r + 1) * self.n]
                    .iter()
                    .zip(v)
                    .map(|(&d, &x)| d * x)
                    .sum()
            })
            .collect()
    }

    pub fn apply(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(v.len(), self.n);
        (0..self.rows())
            .map(|r| {
                self.matrix[r * self.n..(r + 1) * self.n]
                    .iter()
                    .zip(v)
                    .filter(|(d, _)| !d.is_zero())
                    .map(|(&d, &x)| x * d)
                    .sum()
            })
            .collect()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

/// Forward rows `(D_F v)_r = Σ_t (-1)^t C(i,t) v_{r+i-t}`; backward rows
/// apply the same stencil anchored at the right end and walking left,
/// `(D_B v)_r = Σ_t (-1)^t C(i,t) v_{N-1-r-t}`.
pub fn difference_operator<T: Real>(order: usize, n: usize) -> Result<DifferenceOperator<T>> {
    if order == 0 || order >= n {
        return Err(domain(format!(
            "difference order must satisfy 1 <= order < N, got order {order}, N {n}"
        )));
    }
    let rows = n - order;
    let mut matrix = vec![T::zero(); 2 * rows * n];
    for t in 0..=order {
        let coeff = T::lit(if t % 2 == 0 { 1.0 } else { -1.0 } * binomial(order, t));
        for r in 0..rows {
            matrix[r * n + (r + order - t)] = coeff;
            matrix[(rows + r) * n + (n - 1 - r - t)] = coeff;
        }
    }
    Ok(DifferenceOperator { order, n, matrix })
}
