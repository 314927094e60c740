//! The six Capon-family beamformers.
//!
//! Every shaped variant adds a penalty on the array gains `A^H w` to the
//! minimum-variance objective and keeps the distortionless constraint at the
//! presumed DOA:
//!
//! | method            | penalty                                                    |
//! |-------------------|------------------------------------------------------------|
//! | `SPARSE`          | `γ‖A^H w‖₁`                                                |
//! | `WEIGHTED_SPARSE` | `γ‖Q A^H w‖₁`, `Q` the SNM weighting                       |
//! | `MIXED_NORM`      | `γ(‖A_M^H w‖∞ + ‖A_S^H w‖₁)`                               |
//! | `TVM_SPARSE`      | `γ(Σ_i ‖D_i A^H w‖₂ + ‖A_S^H w‖₁)`                         |
//! | `MSPR_RELAXED`    | `γ((‖A_M^H w‖² − 1)² + ‖A_S^H w‖²)`                        |

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::array::{difference_operator, snm_weighting, ArrayManifold, CovarianceEstimate, ManifoldSplit};
use crate::error::{domain, Error, Result};
use crate::linalg::{dot, CMat, Cholesky};
use crate::scalar::{Real, C};
use crate::solver::{
    admm_solve, smooth_solve, PenaltyKind, PenaltyTerm, ProblemSpec, SolverOptions, SolverResult,
    SolverStatus,
};

pub const DEFAULT_MAINLOBE_HALF_WIDTH: usize = 15;
pub const DEFAULT_TV_ORDERS: usize = 2;
pub const MAX_TV_ORDERS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Method {
    Capon,
    Sparse,
    WeightedSparse,
    MixedNorm,
    TvmSparse,
    MsprRelaxed,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Capon,
        Method::Sparse,
        Method::WeightedSparse,
        Method::MixedNorm,
        Method::TvmSparse,
        Method::MsprRelaxed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Capon => "CAPON",
            Method::Sparse => "SPARSE",
            Method::WeightedSparse => "WEIGHTED_SPARSE",
            Method::MixedNorm => "MIXED_NORM",
            Method::TvmSparse => "TVM_SPARSE",
            Method::MsprRelaxed => "MSPR_RELAXED",
        }
    }

    pub fn uses_split(self) -> bool {
        matches!(self, Method::MixedNorm | Method::TvmSparse | Method::MsprRelaxed)
    }

    pub fn is_shaped(self) -> bool {
        self != Method::Capon
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A method together with its parameters, serialised as
/// `{kind, gamma, b?, tv_orders?}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamformerKind {
    pub kind: Method,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tv_orders: Option<usize>,
}

impl BeamformerKind {
    pub fn new(kind: Method, gamma: f64) -> Self {
        Self {
            kind,
            gamma,
            b: None,
            tv_orders: None,
        }
    }

    pub fn capon() -> Self {
        Self::new(Method::Capon, 0.0)
    }

    pub fn with_b(mut self, b: usize) -> Self {
        self.b = Some(b);
        self
    }

    pub fn with_tv_orders(mut self, orders: usize) -> Self {
        self.tv_orders = Some(orders);
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn mainlobe_half_width(&self) -> usize {
        self.b.unwrap_or(DEFAULT_MAINLOBE_HALF_WIDTH)
    }

    pub fn tv_order_count(&self) -> usize {
        self.tv_orders.unwrap_or(DEFAULT_TV_ORDERS)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(domain(format!(
                "{}: gamma must be a finite value >= 0, got {}",
                self.kind, self.gamma
            )));
        }
        if self.b.is_some() && !self.kind.uses_split() {
            return Err(domain(format!("{}: parameter b does not apply", self.kind)));
        }
        match (self.kind, self.tv_orders) {
            (Method::TvmSparse, Some(i)) if !(1..=MAX_TV_ORDERS).contains(&i) => Err(domain(
                format!("TVM_SPARSE: tv_orders must be in 1..={MAX_TV_ORDERS}, got {i}"),
            )),
            (Method::TvmSparse, _) | (_, None) => Ok(()),
            (k, Some(_)) => Err(domain(format!("{k}: parameter tv_orders does not apply"))),
        }
    }
}

impl fmt::Display for BeamformerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(gamma={})", self.kind, self.gamma)
    }
}

/// Beamformer weights plus how they were obtained.
#[derive(Debug, Clone)]
pub struct WeightVector<T: Real> {
    pub w: Vec<C<T>>,
    /// `|w^H a − 1|`.
    pub constraint_residual: T,
    pub objective: T,
    pub iterations: usize,
    pub status: SolverStatus,
    /// The covariance needed a ridge before it could be inverted.
    pub ridge_applied: bool,
}

impl<T: Real> WeightVector<T> {
    fn from_solver(res: SolverResult<T>) -> Result<Self> {
        if res.status == SolverStatus::NumericalFailure {
            return Err(Error::Numerical(format!(
                "solver failed after {} iterations",
                res.iterations
            )));
        }
        Ok(Self {
            w: res.w,
            constraint_residual: res.constraint_residual,
            objective: res.objective,
            iterations: res.iterations,
            status: res.status,
            ridge_applied: false,
        })
    }
}

fn check_dims<T: Real>(r: &CovarianceEstimate<T>, a: &[C<T>]) -> Result<()> {
    if r.dim() != a.len() {
        return Err(domain(format!(
            "covariance is {}x{}, steering vector has length {}",
            r.dim(),
            r.dim(),
            a.len()
        )));
    }
    Ok(())
}

fn check_gamma<T: Real>(gamma: T) -> Result<()> {
    if !(gamma >= T::zero()) || !gamma.is_finite() {
        return Err(domain(format!("gamma must be >= 0, got {gamma}")));
    }
    Ok(())
}

/// Closed-form MVDR weights `R⁻¹a / (a^H R⁻¹ a)`.
///
/// A singular `R` gets a `1e-12·trace(R)/M` ridge and the result is flagged.
pub fn capon_closed_form<T: Real>(r: &CovarianceEstimate<T>, a: &[C<T>]) -> Result<WeightVector<T>> {
    check_dims(r, a)?;
    let mut ridge_applied = false;
    let chol = match Cholesky::new(&r.matrix) {
        Some(c) => c,
        None => {
            ridge_applied = true;
            let m = T::lit(r.dim() as f64);
            let mut loaded = r.matrix.clone();
            loaded.add_scaled_identity(T::lit(1e-12) * r.matrix.trace().re.abs() / m);
            Cholesky::new(&loaded)
                .ok_or_else(|| Error::Numerical("covariance is singular beyond ridge rescue".into()))?
        }
    };
    let x = chol.solve(a);
    let denom = dot(a, &x);
    if !(denom.re > T::zero()) || !denom.re.is_finite() {
        return Err(Error::Numerical("a^H R^-1 a is not positive".into()));
    }
    let w: Vec<C<T>> = x.iter().map(|&v| v / denom.conj()).collect();
    let residual = (dot(&w, a) - C::new(T::one(), T::zero())).norm();
    Ok(WeightVector {
        objective: r.matrix.quadratic_form(&w),
        constraint_residual: residual,
        w,
        iterations: 0,
        status: SolverStatus::Converged,
        ridge_applied,
    })
}

fn admm_weights<T: Real>(
    r: &CovarianceEstimate<T>,
    a: &[C<T>],
    penalties: Vec<PenaltyTerm<T>>,
    opts: &SolverOptions<T>,
) -> Result<WeightVector<T>> {
    let spec = ProblemSpec::new(r.matrix.clone(), a.to_vec(), penalties)?;
    WeightVector::from_solver(admm_solve(&spec, opts)?)
}

/// `min w^H R w + γ‖A^H w‖₁  s.t. w^H a = 1`.
pub fn sparse_capon<T: Real>(
    r: &CovarianceEstimate<T>,
    manifold: &ArrayManifold<T>,
    a: &[C<T>],
    gamma: T,
    opts: &SolverOptions<T>,
) -> Result<WeightVector<T>> {
    check_dims(r, a)?;
    check_gamma(gamma)?;
    if gamma.is_zero() {
        return capon_closed_form(r, a);
    }
    let term = PenaltyTerm::new(manifold.matrix.clone(), PenaltyKind::L1, gamma)?;
    admm_weights(r, a, vec![term], opts)
}

/// `min w^H R w + γ‖Q A^H w‖₁  s.t. w^H a = 1` for an explicit diagonal `Q`.
pub fn weighted_sparse_capon_with_weights<T: Real>(
    r: &CovarianceEstimate<T>,
    manifold: &ArrayManifold<T>,
    weights: &[T],
    a: &[C<T>],
    gamma: T,
    opts: &SolverOptions<T>,
) -> Result<WeightVector<T>> {
    check_dims(r, a)?;
    check_gamma(gamma)?;
    if weights.len() != manifold.len() {
        return Err(domain("weighting length differs from the grid"));
    }
    if weights.iter().all(|q| q.is_zero()) {
        return Err(domain("weighting matrix is all zero"));
    }
    if gamma.is_zero() {
        return capon_closed_form(r, a);
    }
    // G = A Q, so G^H w = Q A^H w for real diagonal Q.
    let term = PenaltyTerm::new(manifold.matrix.scale_columns(weights), PenaltyKind::L1, gamma)?;
    admm_weights(r, a, vec![term], opts)
}

/// Weighted sparse Capon with the SNM weighting estimated from snapshots.
pub fn weighted_sparse_capon<T: Real>(
    r: &CovarianceEstimate<T>,
    manifold: &ArrayManifold<T>,
    snapshots: &CMat<T>,
    a: &[C<T>],
    gamma: T,
    opts: &SolverOptions<T>,
) -> Result<WeightVector<T>> {
    let q = snm_weighting(manifold, snapshots)?;
    weighted_sparse_capon_with_weights(r, manifold, &q, a, gamma, opts)
}

/// `min w^H R w + γ(‖A_M^H w‖∞ + ‖A_S^H w‖₁)  s.t. w^H a = 1`.
pub fn mixed_norm_capon<T: Real>(
    r: &CovarianceEstimate<T>,
    split: &ManifoldSplit<T>,
    a: &[C<T>],
    gamma: T,
    opts: &SolverOptions<T>,
) -> Result<WeightVector<T>> {
    check_dims(r, a)?;
    check_gamma(gamma)?;
    if gamma.is_zero() {
        return capon_closed_form(r, a);
    }
    let mut terms = vec![PenaltyTerm::new(split.mainlobe.clone(), PenaltyKind::Linf, gamma)?];
    if split.sidelobe.cols() > 0 {
        terms.push(PenaltyTerm::new(split.sidelobe.clone(), PenaltyKind::L1, gamma)?);
    }
    admm_weights(r, a, terms, opts)
}

/// Operator `G = A D_i^T` whose adjoint maps `w` to the stacked forward and
/// backward differences of the array gains, `G^H w = D_i A^H w`.
pub fn tv_operator<T: Real>(manifold: &ArrayManifold<T>, order: usize) -> Result<CMat<T>> {
    let d = difference_operator::<T>(order, manifold.len())?;
    let n = manifold.len();
    let a = &manifold.matrix;
    let mut g = CMat::zeros(a.rows(), d.rows());
    for row in 0..d.rows() {
        for col in 0..n {
            let coeff = d.entry(row, col);
            if coeff.is_zero() {
                continue;
            }
            for m in 0..a.rows() {
                g[(m, row)] += a[(m, col)] * coeff;
            }
        }
    }
    Ok(g)
}

/// `min w^H R w + γ(Σ_{i=1}^{I} ‖D_i A^H w‖₂ + ‖A_S^H w‖₁)  s.t. w^H a = 1`,
/// each order's stacked difference vector forming a single L2 group.
pub fn tvm_capon<T: Real>(
    r: &CovarianceEstimate<T>,
    manifold: &ArrayManifold<T>,
    split: &ManifoldSplit<T>,
    a: &[C<T>],
    gamma: T,
    orders: usize,
    opts: &SolverOptions<T>,
) -> Result<WeightVector<T>> {
    check_dims(r, a)?;
    check_gamma(gamma)?;
    if !(1..=MAX_TV_ORDERS).contains(&orders) {
        return Err(domain(format!(
            "number of difference orders must be in 1..={MAX_TV_ORDERS}, got {orders}"
        )));
    }
    if gamma.is_zero() {
        return capon_closed_form(r, a);
    }
    let mut terms = Vec::with_capacity(orders + 1);
    for i in 1..=orders {
        let g = tv_operator(manifold, i)?;
        let kind = PenaltyKind::single_group(g.cols());
        terms.push(PenaltyTerm::new(g, kind, gamma)?);
    }
    if split.sidelobe.cols() > 0 {
        terms.push(PenaltyTerm::new(split.sidelobe.clone(), PenaltyKind::L1, gamma)?);
    }
    admm_weights(r, a, terms, opts)
}

/// `min w^H R w + γ((‖A_M^H w‖² − 1)² + ‖A_S^H w‖²)  s.t. w^H a = 1`,
/// started from the closed-form Capon weights. The objective is nonconvex;
/// the result is a stationary point.
pub fn mspr_capon<T: Real>(
    r: &CovarianceEstimate<T>,
    split: &ManifoldSplit<T>,
    a: &[C<T>],
    gamma: T,
    opts: &SolverOptions<T>,
) -> Result<WeightVector<T>> {
    check_dims(r, a)?;
    check_gamma(gamma)?;
    let start = capon_closed_form(r, a)?;
    if gamma.is_zero() {
        return Ok(start);
    }
    let mut terms = vec![PenaltyTerm::new(split.mainlobe.clone(), PenaltyKind::QuarticUnit, gamma)?];
    if split.sidelobe.cols() > 0 {
        terms.push(PenaltyTerm::new(split.sidelobe.clone(), PenaltyKind::SquaredL2, gamma)?);
    }
    let spec = ProblemSpec::new(r.matrix.clone(), a.to_vec(), terms)?;
    WeightVector::from_solver(smooth_solve(&spec, opts, &start.w)?)
}

/// Everything a beamformer may need. `split` must have been built with the
/// method's `b` (see [`DesignInputs::split_for`]).
pub struct DesignInputs<'a, T: Real> {
    pub covariance: &'a CovarianceEstimate<T>,
    pub manifold: &'a ArrayManifold<T>,
    pub snapshots: &'a CMat<T>,
    /// Steering vector at the presumed DOA.
    pub steering: &'a [C<T>],
    pub presumed_doa_deg: f64,
}

impl<T: Real> DesignInputs<'_, T> {
    pub fn split_for(&self, b: usize) -> Result<ManifoldSplit<T>> {
        crate::array::split_manifold(self.manifold, self.presumed_doa_deg, b)
    }
}

/// Dispatches to the beamformer selected by `kind`.
pub fn design<T: Real>(
    kind: &BeamformerKind,
    inputs: &DesignInputs<'_, T>,
    opts: &SolverOptions<T>,
) -> Result<WeightVector<T>> {
    kind.validate()?;
    let gamma = T::lit(kind.gamma);
    let r = inputs.covariance;
    let a = inputs.steering;
    match kind.kind {
        Method::Capon => capon_closed_form(r, a),
        Method::Sparse => sparse_capon(r, inputs.manifold, a, gamma, opts),
        Method::WeightedSparse => {
            weighted_sparse_capon(r, inputs.manifold, inputs.snapshots, a, gamma, opts)
        }
        Method::MixedNorm => {
            let split = inputs.split_for(kind.mainlobe_half_width())?;
            mixed_norm_capon(r, &split, a, gamma, opts)
        }
        Method::TvmSparse => {
            let split = inputs.split_for(kind.mainlobe_half_width())?;
            tvm_capon(r, inputs.manifold, &split, a, gamma, kind.tv_order_count(), opts)
        }
        Method::MsprRelaxed => {
            let split = inputs.split_for(kind.mainlobe_half_width())?;
            mspr_capon(r, &split, a, gamma, opts)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    #[test]
    fn closed_form_identity_and_diag() {
        let a = vec![cplx::<f64>(1.0, 0.0), cplx(0.0, 1.0), cplx(-1.0, 0.0)];
        let r = CovarianceEstimate::known(CMat::identity(3)).unwrap();
        let w = capon_closed_form(&r, &a).unwrap();
        for (wi, ai) in w.w.iter().zip(&a) {
            assert!((wi - ai / 3.0).norm() < 1e-15);
        }

        let r = CovarianceEstimate::known(CMat::<f64>::diagonal(&[cplx(1.0, 0.0), cplx(2.0, 0.0)])).unwrap();
        let w = capon_closed_form(&r, &[cplx(1.0, 0.0), cplx(1.0, 0.0)]).unwrap();
        assert!((w.w[0] - cplx(2.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!((w.w[1] - cplx(1.0 / 3.0, 0.0)).norm() < 1e-15);
        assert!(w.constraint_residual < 1e-12);
        assert!(!w.ridge_applied);
    }

    #[test]
    fn closed_form_ridge_rescue() {
        // rank one covariance: singular, rescued by the ridge
        let a = vec![cplx::<f64>(1.0, 0.0), cplx(1.0, 0.0)];
        let x = CMat::from_columns(&[vec![cplx(1.0, 0.0), cplx(0.0, 1.0)]]);
        let r = crate::array::sample_covariance(&x).unwrap();
        let w = capon_closed_form(&r, &a).unwrap();
        assert!(w.ridge_applied);
        assert!(w.constraint_residual < 1e-9);

        let zero = CovarianceEstimate::known(CMat::<f64>::zeros(2, 2)).unwrap();
        assert!(matches!(capon_closed_form(&zero, &a), Err(Error::Numerical(_))));
    }

    #[test]
    fn kind_validation_and_json() {
        let k: BeamformerKind =
            serde_json::from_str(r#"{"kind": "TVM_SPARSE", "gamma": 0.5, "tv_orders": 2}"#).unwrap();
        assert_eq!(k.kind, Method::TvmSparse);
        assert!(k.validate().is_ok());
        assert_eq!(k.mainlobe_half_width(), 15);
        let s = serde_json::to_string(&BeamformerKind::new(Method::MixedNorm, 1.0).with_b(10)).unwrap();
        assert_eq!(s, r#"{"kind":"MIXED_NORM","gamma":1.0,"b":10}"#);

        assert!(BeamformerKind::new(Method::Sparse, -1.0).validate().is_err());
        assert!(BeamformerKind::new(Method::Sparse, 1.0).with_b(3).validate().is_err());
        assert!(BeamformerKind::new(Method::MixedNorm, 1.0).with_tv_orders(2).validate().is_err());
        assert!(BeamformerKind::new(Method::TvmSparse, 1.0).with_tv_orders(4).validate().is_err());
        assert!(serde_json::from_str::<BeamformerKind>(r#"{"kind": "LASSO", "gamma": 1}"#).is_err());
    }

    #[test]
    fn tv_operator_adjoint_is_difference_of_gains() {
        let g = crate::array::ArrayGeometry::half_wavelength(4).unwrap();
        let m = crate::array::build_manifold::<f64>(&g, -90.0, 90.0, 5.0).unwrap();
        let w = vec![cplx(0.3, 0.1), cplx(-0.2, 0.5), cplx(0.7, 0.0), cplx(0.1, -0.4)];
        for order in 1..=3 {
            let op = tv_operator(&m, order).unwrap();
            let d = difference_operator::<f64>(order, m.len()).unwrap();
            let direct = d.apply(&m.gains(&w));
            let via = op.adjoint_mul_vec(&w);
            for (x, y) in direct.iter().zip(&via) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }
}
