//! Solver for distortionless-constrained penalised quadratic programs
//!
//! ```text
//! minimise   w^H R w + Σ_j γ_j h_j(G_j^H w)   subject to   w^H a = 1
//! ```
//!
//! The affine constraint is eliminated by writing `w = w0 + B z` with `B` an
//! orthonormal basis of `a^⊥`. Nonsmooth convex penalties are handled by
//! scaled ADMM on `z` ([`admm_solve`]); the relaxed mainlobe-power term
//! `(‖G^H w‖² − 1)²` is smooth but nonconvex and goes through a
//! preconditioned quasi-Newton descent ([`smooth_solve`]).
//!
//! Gradients use the complex encoding of the real gradient,
//! `g = ∂f/∂Re z + i ∂f/∂Im z = 2 ∂f/∂z̄`.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{domain, Result};
use crate::linalg::{
    add_vec, dot, norm1, norm2, norm_inf, norm_sqr, real_dot, scale_vec, CMat, Cholesky,
};
use crate::prox::{prox_group_l2, prox_l1, prox_linf};
use crate::scalar::{Real, C};

#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyKind {
    /// `‖v‖₁` (sum of moduli).
    L1,
    /// `‖v‖∞` (largest modulus).
    Linf,
    /// `Σ_g ‖v_g‖₂` over a partition of the entries.
    GroupL2 { groups: Vec<Vec<usize>> },
    /// `‖v‖₂²`, folded into the quadratic.
    SquaredL2,
    /// `(‖v‖₂² − 1)²`.
    QuarticUnit,
}

impl PenaltyKind {
    /// Single group spanning `len` entries.
    pub fn single_group(len: usize) -> Self {
        PenaltyKind::GroupL2 {
            groups: vec![(0..len).collect()],
        }
    }

    fn is_smooth(&self) -> bool {
        matches!(self, PenaltyKind::SquaredL2 | PenaltyKind::QuarticUnit)
    }
}

/// `γ·h(G^H w)` with `G` of shape `M × q`.
#[derive(Debug, Clone)]
pub struct PenaltyTerm<T: Real> {
    pub operator: CMat<T>,
    pub kind: PenaltyKind,
    pub weight: T,
}

impl<T: Real> PenaltyTerm<T> {
    pub fn new(operator: CMat<T>, kind: PenaltyKind, weight: T) -> Result<Self> {
        if !(weight >= T::zero()) || !weight.is_finite() {
            return Err(domain(format!("penalty weight must be >= 0, got {weight}")));
        }
        if let PenaltyKind::GroupL2 { groups } = &kind {
            let q = operator.cols();
            let mut seen = vec![false; q];
            for &i in groups.iter().flatten() {
                if i >= q || seen[i] {
                    return Err(domain("group indices must partition the penalty output"));
                }
                seen[i] = true;
            }
            if seen.iter().any(|s| !s) {
                return Err(domain("group indices must partition the penalty output"));
            }
        }
        Ok(Self {
            operator,
            kind,
            weight,
        })
    }

    /// Unweighted `h(v)`.
    pub fn function_value(&self, v: &[C<T>]) -> T {
        match &self.kind {
            PenaltyKind::L1 => norm1(v),
            PenaltyKind::Linf => norm_inf(v),
            PenaltyKind::GroupL2 { groups } => groups
                .iter()
                .map(|g| g.iter().map(|&i| v[i].norm_sqr()).sum::<T>().sqrt())
                .sum(),
            PenaltyKind::SquaredL2 => norm_sqr(v),
            PenaltyKind::QuarticUnit => {
                let e = norm_sqr(v) - T::one();
                e * e
            }
        }
    }

    /// `γ·h(G^H w)`.
    pub fn value_at(&self, w: &[C<T>]) -> T {
        self.weight * self.function_value(&self.operator.adjoint_mul_vec(w))
    }

    fn prox(&self, v: &[C<T>], t: T) -> Vec<C<T>> {
        match &self.kind {
            PenaltyKind::L1 => prox_l1(v, t),
            PenaltyKind::Linf => prox_linf(v, t),
            PenaltyKind::GroupL2 { groups } => prox_group_l2(v, groups, t),
            PenaltyKind::SquaredL2 | PenaltyKind::QuarticUnit => {
                unreachable!("smooth penalties are never split")
            }
        }
    }
}

/// Hermitian quadratic, distortionless constraint vector and penalties.
#[derive(Debug, Clone)]
pub struct ProblemSpec<T: Real> {
    pub quadratic: CMat<T>,
    pub constraint_vector: Vec<C<T>>,
    pub penalties: Vec<PenaltyTerm<T>>,
}

impl<T: Real> ProblemSpec<T> {
    pub fn new(
        quadratic: CMat<T>,
        constraint_vector: Vec<C<T>>,
        penalties: Vec<PenaltyTerm<T>>,
    ) -> Result<Self> {
        let m = constraint_vector.len();
        if quadratic.rows() != m || quadratic.cols() != m {
            return Err(domain(format!(
                "quadratic is {}x{}, constraint vector has length {m}",
                quadratic.rows(),
                quadratic.cols()
            )));
        }
        if norm_sqr(&constraint_vector) <= T::zero() {
            return Err(domain("constraint vector must be nonzero"));
        }
        for p in &penalties {
            if p.operator.rows() != m {
                return Err(domain(format!(
                    "penalty operator has {} rows, expected {m}",
                    p.operator.rows()
                )));
            }
        }
        Ok(Self {
            quadratic: quadratic.hermitian_part(),
            constraint_vector,
            penalties,
        })
    }

    pub fn dim(&self) -> usize {
        self.constraint_vector.len()
    }

    pub fn is_smooth_nonconvex(&self) -> bool {
        self.penalties
            .iter()
            .any(|p| p.kind == PenaltyKind::QuarticUnit)
    }

    /// `w^H R w + Σ γ_j h_j(G_j^H w)`.
    pub fn objective(&self, w: &[C<T>]) -> T {
        self.quadratic.quadratic_form(w) + self.penalties.iter().map(|p| p.value_at(w)).sum::<T>()
    }

    /// `|w^H a − 1|`.
    pub fn constraint_residual(&self, w: &[C<T>]) -> T {
        (dot(w, &self.constraint_vector) - C::one()).norm()
    }

    /// Quadratic with every squared-L2 penalty folded in:
    /// `R + Σ γ G G^H`.
    fn folded_quadratic(&self) -> CMat<T> {
        let mut r = self.quadratic.clone();
        for p in &self.penalties {
            if p.kind == PenaltyKind::SquaredL2 && p.weight > T::zero() {
                r = r.add(&p.operator.gram_outer().scale(C::new(p.weight, T::zero())));
            }
        }
        r
    }

    fn default_ridge(&self) -> T {
        T::lit(1e-10) * self.quadratic.trace().re.abs() / T::lit(self.dim() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T: Real> {
    /// Splitting penalty parameter.
    pub rho: T,
    pub max_iters: usize,
    pub tol_primal: T,
    pub tol_dual: T,
    /// Ridge added to the reduced quadratic; `None` means
    /// `1e-10 · trace(R) / M`.
    pub ridge: Option<T>,
    pub smooth_max_iters: usize,
    pub smooth_grad_tol: T,
    /// Keep a per-iteration log in the result.
    pub record_trace: bool,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            rho: T::one(),
            max_iters: 5000,
            tol_primal: T::lit(1e-7),
            tol_dual: T::lit(1e-7),
            ridge: None,
            smooth_max_iters: 2000,
            smooth_grad_tol: T::lit(1e-8),
            record_trace: false,
        }
    }
}

impl<T: Real> SolverOptions<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: T| x > T::zero() && x.is_finite();
        if !positive(self.rho) {
            return Err(domain("rho must be positive"));
        }
        if !positive(self.tol_primal) || !positive(self.tol_dual) || !positive(self.smooth_grad_tol)
        {
            return Err(domain("solver tolerances must be positive"));
        }
        if let Some(r) = self.ridge {
            if !(r >= T::zero()) {
                return Err(domain("ridge must be nonnegative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolverStatus {
    Converged,
    MaxIters,
    NumericalFailure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationLog<T: Real> {
    pub iteration: usize,
    pub objective: T,
    pub primal_residual: T,
    pub dual_residual: T,
}

#[derive(Debug, Clone)]
pub struct SolverResult<T: Real> {
    pub w: Vec<C<T>>,
    /// Total objective at `w` (penalties included, no ridge).
    pub objective: T,
    pub iterations: usize,
    /// ADMM: stacked `‖K z + c − u‖`. Smooth path: 0.
    pub primal_residual: T,
    /// ADMM: `2ρ‖Σ K^H Δu‖`. Smooth path: gradient norm.
    pub dual_residual: T,
    /// Norm of the stationarity residual `∇q(z) + Σ K_j^H λ_j` built from the
    /// dual variables (ADMM) or of the gradient (smooth path).
    pub optimality_residual: T,
    pub constraint_residual: T,
    pub status: SolverStatus,
    pub trace: Option<Vec<IterationLog<T>>>,
}

/// Parametrisation `w = offset + basis · z` of `{w : w^H a = 1}`.
#[derive(Debug, Clone)]
pub struct AffineParam<T: Real> {
    /// `a / ‖a‖²`.
    pub offset: Vec<C<T>>,
    /// `M × (M−1)` with orthonormal columns spanning `a^⊥`.
    pub basis: CMat<T>,
}

impl<T: Real> AffineParam<T> {
    pub fn point(&self, z: &[C<T>]) -> Vec<C<T>> {
        add_vec(&self.offset, &self.basis.mul_vec(z))
    }

    /// Coordinates of a feasible point.
    pub fn coordinates(&self, w: &[C<T>]) -> Vec<C<T>> {
        self.basis.adjoint_mul_vec(w)
    }
}

/// Householder construction of the feasible-set parametrisation.
pub fn eliminate_constraint<T: Real>(a: &[C<T>]) -> Result<AffineParam<T>> {
    let m = a.len();
    let nsq = norm_sqr(a);
    if m == 0 || !(nsq > T::zero()) || !nsq.is_finite() {
        return Err(domain("constraint vector must be nonzero"));
    }
    let norm = nsq.sqrt();
    let offset = scale_vec(C::new(T::one() / nsq, T::zero()), a);
    // H = I − 2 v v^H / (v^H v), v = a + e^{iφ}‖a‖ e_1, maps a onto e_1; its
    // remaining columns are an orthonormal basis of a^⊥.
    let phase = if a[0].norm() > T::zero() {
        a[0] / a[0].norm()
    } else {
        C::one()
    };
    let mut v = a.to_vec();
    v[0] += phase * norm;
    let vv = norm_sqr(&v);
    let two = T::lit(2.0);
    let basis = CMat::from_fn(m, m - 1, |r, c| {
        let col = c + 1;
        let id: C<T> = if r == col { C::one() } else { C::zero() };
        id - v[r] * v[col].conj() * (two / vv)
    });
    Ok(AffineParam { offset, basis })
}

/// Pulls `w` back onto `w^H a = 1` along `a`; removes round-off drift.
fn restore_feasibility<T: Real>(w: &mut [C<T>], a: &[C<T>]) {
    let gap = C::<T>::one() - dot(w, a);
    let c = gap.conj() / norm_sqr(a);
    for (wi, &ai) in w.iter_mut().zip(a) {
        *wi += ai * c;
    }
}

/// Reduced quadratic `q(z) = z^H P z + 2 Re(r^H z) + const`.
struct ReducedQuadratic<T: Real> {
    p: CMat<T>,
    r: Vec<C<T>>,
    constant: T,
}

impl<T: Real> ReducedQuadratic<T> {
    fn new(quadratic: &CMat<T>, param: &AffineParam<T>) -> Self {
        let rb = quadratic.matmul(&param.basis);
        let p = param.basis.adjoint_matmul(&rb).hermitian_part();
        let r = param.basis.adjoint_mul_vec(&quadratic.mul_vec(&param.offset));
        let constant = quadratic.quadratic_form(&param.offset);
        Self { p, r, constant }
    }

    fn value(&self, z: &[C<T>]) -> T {
        self.p.quadratic_form(z) + T::lit(2.0) * dot(&self.r, z).re + self.constant
    }

    /// `P z + r` (half the gradient).
    fn half_gradient(&self, z: &[C<T>]) -> Vec<C<T>> {
        add_vec(&self.p.mul_vec(z), &self.r)
    }
}

struct SplitBlock<'a, T: Real> {
    term: &'a PenaltyTerm<T>,
    k: CMat<T>,
    c: Vec<C<T>>,
    u: Vec<C<T>>,
    y: Vec<C<T>>,
}

fn failure<T: Real>(spec: &ProblemSpec<T>, w: Vec<C<T>>, iterations: usize) -> SolverResult<T> {
    SolverResult {
        objective: spec.objective(&w),
        constraint_residual: spec.constraint_residual(&w),
        w,
        iterations,
        primal_residual: T::infinity(),
        dual_residual: T::infinity(),
        optimality_residual: T::infinity(),
        status: SolverStatus::NumericalFailure,
        trace: None,
    }
}

/// Scaled ADMM for convex specs (L1 / L∞ / group-L2, plus squared-L2 terms
/// folded into the quadratic).
pub fn admm_solve<T: Real>(spec: &ProblemSpec<T>, opts: &SolverOptions<T>) -> Result<SolverResult<T>> {
    opts.validate()?;
    if spec.is_smooth_nonconvex() {
        return Err(domain("quartic penalties need smooth_solve"));
    }
    let a = &spec.constraint_vector;
    let param = eliminate_constraint(a)?;
    let quad = ReducedQuadratic::new(&spec.folded_quadratic(), &param);
    let n = quad.p.rows();
    let ridge = opts.ridge.unwrap_or_else(|| spec.default_ridge());
    let rho = opts.rho;
    let two = T::lit(2.0);

    let mut blocks: Vec<SplitBlock<T>> = spec
        .penalties
        .iter()
        .filter(|p| !p.kind.is_smooth() && p.weight > T::zero())
        .map(|term| {
            let k = term.operator.adjoint_matmul(&param.basis);
            let c = term.operator.adjoint_mul_vec(&param.offset);
            SplitBlock {
                term,
                u: Vec::new(),
                y: vec![C::zero(); c.len()],
                k,
                c,
            }
        })
        .collect();

    let mut base = quad.p.clone();
    base.add_scaled_identity(ridge);
    let neg_r: Vec<C<T>> = quad.r.iter().map(|&v| -v).collect();
    let Some(base_chol) = Cholesky::new(&base) else {
        return Ok(failure(spec, param.offset.clone(), 0));
    };
    let mut z = base_chol.solve(&neg_r);

    let finish = |z: &[C<T>],
                  iterations: usize,
                  primal: T,
                  dual: T,
                  optimality: T,
                  status: SolverStatus,
                  trace: Option<Vec<IterationLog<T>>>| {
        let mut w = param.point(z);
        restore_feasibility(&mut w, a);
        SolverResult {
            objective: spec.objective(&w),
            constraint_residual: spec.constraint_residual(&w),
            w,
            iterations,
            primal_residual: primal,
            dual_residual: dual,
            optimality_residual: optimality,
            status,
            trace,
        }
    };

    if blocks.is_empty() {
        let g = quad.half_gradient(&z);
        let opt = two * norm2(&add_vec(&g, &scale_vec(C::new(ridge, T::zero()), &z)));
        return Ok(finish(&z, 0, T::zero(), T::zero(), opt, SolverStatus::Converged, None));
    }

    let mut gram = CMat::zeros(n, n);
    let mut kh_c: Vec<C<T>> = vec![C::zero(); n];
    for b in &blocks {
        gram = gram.add(&b.k.adjoint_matmul(&b.k));
        kh_c = add_vec(&kh_c, &b.k.adjoint_mul_vec(&b.c));
    }
    let system = base.add(&gram.scale(C::new(rho, T::zero()))).hermitian_part();
    let Some(chol) = Cholesky::new(&system) else {
        return Ok(failure(spec, param.point(&z), 0));
    };

    for b in blocks.iter_mut() {
        b.u = add_vec(&b.k.mul_vec(&z), &b.c);
    }
    // Running sums Σ Kᴴu and Σ Kᴴy: one adjoint product per block and
    // iteration instead of two.
    let mut kh_u = add_vec(&gram.mul_vec(&z), &kh_c);
    let mut kh_y: Vec<C<T>> = vec![C::zero(); n];

    let eval = |z: &[C<T>], blocks: &[SplitBlock<T>], kz: &[Vec<C<T>>]| -> T {
        quad.value(z)
            + blocks
                .iter()
                .zip(kz)
                .map(|(b, v)| b.term.weight * b.term.function_value(v))
                .sum::<T>()
    };

    let mut trace = opts.record_trace.then(Vec::new);
    let mut best_z = z.clone();
    let mut best_obj = T::infinity();
    let mut primal = T::infinity();
    let mut dual = T::infinity();
    let mut kz: Vec<Vec<C<T>>> = vec![Vec::new(); blocks.len()];

    for iter in 1..=opts.max_iters {
        let rhs: Vec<C<T>> = neg_r
            .iter()
            .zip(&kh_u)
            .zip(&kh_c)
            .zip(&kh_y)
            .map(|(((&r, &u), &c), &y)| r + (u - c - y) * rho)
            .collect();
        z = chol.solve(&rhs);

        let mut primal_sq = T::zero();
        let mut kh_u_new: Vec<C<T>> = vec![C::zero(); n];
        for (b, kz_b) in blocks.iter_mut().zip(kz.iter_mut()) {
            *kz_b = add_vec(&b.k.mul_vec(&z), &b.c);
            let arg = add_vec(kz_b, &b.y);
            b.u = b.term.prox(&arg, b.term.weight / (two * rho));
            for ((y, &k), &u) in b.y.iter_mut().zip(kz_b.iter()).zip(&b.u) {
                let r = k - u;
                primal_sq += r.norm_sqr();
                *y += r;
            }
            for (acc, v) in kh_u_new.iter_mut().zip(b.k.adjoint_mul_vec(&b.u)) {
                *acc += v;
            }
        }
        let gz = gram.mul_vec(&z);
        let mut delta_sq = T::zero();
        for i in 0..n {
            delta_sq += (kh_u_new[i] - kh_u[i]).norm_sqr();
            kh_y[i] += gz[i] + kh_c[i] - kh_u_new[i];
        }
        kh_u = kh_u_new;
        primal = primal_sq.sqrt();
        dual = two * rho * delta_sq.sqrt();

        let obj = eval(&z, &blocks, &kz);
        if obj < best_obj {
            best_obj = obj;
            best_z.clone_from(&z);
        }
        if let Some(t) = trace.as_mut() {
            t.push(IterationLog {
                iteration: iter,
                objective: obj,
                primal_residual: primal,
                dual_residual: dual,
            });
        }
        if !obj.is_finite() || !primal.is_finite() {
            return Ok(failure(spec, param.point(&best_z), iter));
        }
        if primal < opts.tol_primal && dual < opts.tol_dual {
            let opt = stationarity(&quad, ridge, rho, &blocks, &z);
            return Ok(finish(&z, iter, primal, dual, opt, SolverStatus::Converged, trace));
        }
    }
    let opt = stationarity(&quad, ridge, rho, &blocks, &best_z);
    Ok(finish(
        &best_z,
        opts.max_iters,
        primal,
        dual,
        opt,
        SolverStatus::MaxIters,
        trace,
    ))
}

/// `‖2((P + ridge·I) z + r) + Σ_j K_j^H λ_j‖` with `λ_j = 2ρ y_j`.
fn stationarity<T: Real>(
    quad: &ReducedQuadratic<T>,
    ridge: T,
    rho: T,
    blocks: &[SplitBlock<T>],
    z: &[C<T>],
) -> T {
    let two = T::lit(2.0);
    let mut g: Vec<C<T>> = quad
        .half_gradient(z)
        .iter()
        .zip(z)
        .map(|(&h, &zi)| (h + zi * ridge) * two)
        .collect();
    for b in blocks {
        let lambda = scale_vec(C::new(two * rho, T::zero()), &b.y);
        for (gi, v) in g.iter_mut().zip(b.k.adjoint_mul_vec(&lambda)) {
            *gi += v;
        }
    }
    norm2(&g)
}

/// Smooth objective `q(z) + Σ_j γ_j (p_j(z) − 1)²` in reduced coordinates,
/// where `p_j(z) = ‖G_j^H w‖²` is itself a quadratic in `z`.
pub struct SmoothProblem<T: Real> {
    param: AffineParam<T>,
    quad: ReducedQuadratic<T>,
    quartic: Vec<(T, ReducedQuadratic<T>)>,
}

impl<T: Real> SmoothProblem<T> {
    pub fn new(spec: &ProblemSpec<T>) -> Result<Self> {
        if let Some(p) = spec.penalties.iter().find(|p| !p.kind.is_smooth()) {
            return Err(domain(format!(
                "smooth path only accepts squared-L2 and quartic penalties, got {:?}",
                p.kind
            )));
        }
        let param = eliminate_constraint(&spec.constraint_vector)?;
        let quad = ReducedQuadratic::new(&spec.folded_quadratic(), &param);
        let quartic = spec
            .penalties
            .iter()
            .filter(|p| p.kind == PenaltyKind::QuarticUnit && p.weight > T::zero())
            .map(|p| (p.weight, ReducedQuadratic::new(&p.operator.gram_outer(), &param)))
            .collect();
        Ok(Self {
            param,
            quad,
            quartic,
        })
    }

    pub fn param(&self) -> &AffineParam<T> {
        &self.param
    }

    /// Number of complex reduced coordinates (`M − 1`).
    pub fn dim(&self) -> usize {
        self.quad.p.rows()
    }

    pub fn objective(&self, z: &[C<T>]) -> T {
        let mut f = self.quad.value(z);
        for (gamma, q) in &self.quartic {
            let e = q.value(z) - T::one();
            f += *gamma * e * e;
        }
        f
    }

    /// `g = B^H [2 R w + Σ γ 4 (‖G^H w‖² − 1) G G^H w]`.
    pub fn gradient(&self, z: &[C<T>]) -> Vec<C<T>> {
        let two = T::lit(2.0);
        let mut g = scale_vec(C::new(two, T::zero()), &self.quad.half_gradient(z));
        for (gamma, q) in &self.quartic {
            let coeff = T::lit(4.0) * *gamma * (q.value(z) - T::one());
            for (gi, v) in g.iter_mut().zip(q.half_gradient(z)) {
                *gi += v * coeff;
            }
        }
        g
    }

    /// `f(z + s) − f(z)` evaluated without cancellation against `f(z)`.
    pub fn objective_change(&self, z: &[C<T>], s: &[C<T>]) -> T {
        let two = T::lit(2.0);
        let quad_change = |q: &ReducedQuadratic<T>| {
            two * dot(s, &q.half_gradient(z)).re + q.p.quadratic_form(s)
        };
        let mut df = quad_change(&self.quad);
        for (gamma, q) in &self.quartic {
            let e = q.value(z) - T::one();
            let dp = quad_change(q);
            df += *gamma * dp * (two * e + dp);
        }
        df
    }
}

const LBFGS_MEMORY: usize = 8;
const ARMIJO_C1: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Minimises the smooth (possibly nonconvex) objective from a feasible start.
///
/// Limited-memory BFGS with the reduced quadratic's Hessian as the initial
/// inverse-Hessian model, Armijo backtracking from a unit step with halving.
/// Returns a stationary point.
pub fn smooth_solve<T: Real>(
    spec: &ProblemSpec<T>,
    opts: &SolverOptions<T>,
    w_init: &[C<T>],
) -> Result<SolverResult<T>> {
    opts.validate()?;
    let problem = SmoothProblem::new(spec)?;
    let a = &spec.constraint_vector;
    if w_init.len() != a.len() {
        return Err(domain("initial point has the wrong dimension"));
    }
    if spec.constraint_residual(w_init) > T::lit(1e-6) {
        return Err(domain("initial point violates the distortionless constraint"));
    }
    let ridge = opts.ridge.unwrap_or_else(|| spec.default_ridge());
    let mut h0 = problem.quad.p.scale(C::new(T::lit(2.0), T::zero()));
    h0.add_scaled_identity(T::lit(2.0) * ridge);
    let precond = Cholesky::new(&h0);

    let apply_h0 = |v: &[C<T>]| match &precond {
        Some(c) => c.solve(v),
        None => v.to_vec(),
    };

    let mut z = problem.param.coordinates(w_init);
    let mut f = problem.objective(&z);
    let mut g = problem.gradient(&z);
    let mut history: Vec<(Vec<C<T>>, Vec<C<T>>, T)> = Vec::with_capacity(LBFGS_MEMORY);
    let mut trace = opts.record_trace.then(Vec::new);
    let mut status = SolverStatus::MaxIters;
    let mut iterations = 0;

    let log = |trace: &mut Option<Vec<IterationLog<T>>>, it: usize, f: T, gn: T| {
        if let Some(t) = trace.as_mut() {
            t.push(IterationLog {
                iteration: it,
                objective: f,
                primal_residual: T::zero(),
                dual_residual: gn,
            });
        }
    };
    log(&mut trace, 0, f, norm2(&g));

    for it in 1..=opts.smooth_max_iters {
        if norm2(&g) < opts.smooth_grad_tol {
            status = SolverStatus::Converged;
            break;
        }
        iterations = it;
        let mut d = two_loop(&g, &history, &apply_h0);
        let mut slope = real_dot(&g, &d);
        if !(slope < T::zero()) {
            history.clear();
            d = apply_h0(&g).into_iter().map(|v| -v).collect();
            slope = real_dot(&g, &d);
        }
        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let s = scale_vec(C::new(step, T::zero()), &d);
            let df = problem.objective_change(&z, &s);
            if df <= T::lit(ARMIJO_C1) * step * slope {
                accepted = Some((s, df));
                break;
            }
            step = step * T::lit(0.5);
        }
        let Some((s, df)) = accepted else {
            status = SolverStatus::NumericalFailure;
            break;
        };
        let z_new = add_vec(&z, &s);
        let g_new = problem.gradient(&z_new);
        let yv: Vec<C<T>> = g_new.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        let sy = real_dot(&s, &yv);
        if sy > T::epsilon() * norm2(&s) * norm2(&yv) {
            if history.len() == LBFGS_MEMORY {
                history.remove(0);
            }
            history.push((s, yv, T::one() / sy));
        }
        z = z_new;
        g = g_new;
        f += df;
        log(&mut trace, it, f, norm2(&g));
    }
    if status == SolverStatus::MaxIters && norm2(&g) < opts.smooth_grad_tol {
        status = SolverStatus::Converged;
    }

    let mut w = problem.param.point(&z);
    restore_feasibility(&mut w, a);
    let gn = norm2(&g);
    Ok(SolverResult {
        objective: spec.objective(&w),
        constraint_residual: spec.constraint_residual(&w),
        w,
        iterations,
        primal_residual: T::zero(),
        dual_residual: gn,
        optimality_residual: gn,
        status,
        trace,
    })
}

fn two_loop<T: Real>(
    g: &[C<T>],
    history: &[(Vec<C<T>>, Vec<C<T>>, T)],
    apply_h0: &impl Fn(&[C<T>]) -> Vec<C<T>>,
) -> Vec<C<T>> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let alpha = *rho * real_dot(s, &q);
        for (qi, &yi) in q.iter_mut().zip(y) {
            *qi -= yi * alpha;
        }
        alphas.push(alpha);
    }
    let mut r = apply_h0(&q);
    for ((s, y, rho), alpha) in history.iter().zip(alphas.into_iter().rev()) {
        let beta = *rho * real_dot(y, &r);
        for (ri, &si) in r.iter_mut().zip(s) {
            *ri += si * (alpha - beta);
        }
    }
    r.into_iter().map(|v| -v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_psd(m: usize, rng: &mut ChaCha8Rng) -> CMat<f64> {
        let x = CMat::from_fn(m, m + 2, |_, _| {
            C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let mut r = x.gram_outer();
        r.add_scaled_identity(0.1);
        r
    }

    fn random_vec(m: usize, rng: &mut ChaCha8Rng) -> Vec<C<f64>> {
        (0..m)
            .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    /// `R⁻¹a / (a^H R⁻¹ a)` computed independently of the solver paths.
    fn closed_form(r: &CMat<f64>, a: &[C<f64>]) -> Vec<C<f64>> {
        let x = Cholesky::new(r).unwrap().solve(a);
        let d = dot(a, &x);
        x.iter().map(|v| v / d.conj()).collect()
    }

    fn rel_err(a: &[C<f64>], b: &[C<f64>]) -> f64 {
        norm2(&crate::linalg::sub_vec(a, b)) / norm2(b)
    }

    #[test]
    fn elimination_basis_example() {
        let e1 = vec![cplx(1.0, 0.0), cplx(0.0, 0.0), cplx(0.0, 0.0)];
        let p = eliminate_constraint::<f64>(&e1).unwrap();
        assert!(rel_err(&p.offset, &e1) < 1e-15);
        for c in 0..2 {
            let col = p.basis.column(c);
            assert!(col[0].norm() < 1e-15);
            assert!((norm2(&col) - 1.0).abs() < 1e-15);
        }

        let ones = vec![cplx(1.0, 0.0), cplx(1.0, 0.0)];
        let p = eliminate_constraint::<f64>(&ones).unwrap();
        assert!(rel_err(&p.offset, &[cplx(0.5, 0.0), cplx(0.5, 0.0)]) < 1e-15);
        let col = p.basis.column(0);
        let s = 1.0 / 2f64.sqrt();
        // B ∝ [1, −1]/√2 up to a unit-modulus factor
        let phase = col[0] / s;
        assert!((phase.norm() - 1.0).abs() < 1e-14);
        assert!((col[1] + phase * s).norm() < 1e-14);

        assert!(eliminate_constraint::<f64>(&[cplx(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn elimination_orthogonality_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for m in 2..10 {
            let mut a = random_vec(m, &mut rng);
            if m % 3 == 0 {
                a[0] = C::zero();
            }
            let p = eliminate_constraint(&a).unwrap();
            assert!(norm_inf(&p.basis.adjoint_mul_vec(&a)) <= 1e-12);
            let gram = p.basis.adjoint_matmul(&p.basis);
            assert!(gram.max_abs_diff(&CMat::identity(m - 1)) < 1e-12);
            assert!((dot(&p.offset, &a) - C::one()).norm() < 1e-14);
        }
    }

    #[test]
    fn admm_without_penalties_is_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = random_psd(6, &mut rng);
        let a = random_vec(6, &mut rng);
        let spec = ProblemSpec::new(r.clone(), a.clone(), vec![]).unwrap();
        let res = admm_solve(&spec, &SolverOptions::default()).unwrap();
        assert_eq!(res.status, SolverStatus::Converged);
        assert!(rel_err(&res.w, &closed_form(&r, &a)) < 1e-6);
        assert!(res.constraint_residual <= 1e-9);
    }

    #[test]
    fn identity_quadratic_gives_minimum_norm_point() {
        let a = vec![cplx(1.0, 0.0), cplx(0.0, 1.0), cplx(-1.0, 0.0), cplx(0.5, -0.5)];
        let spec = ProblemSpec::new(CMat::identity(4), a.clone(), vec![]).unwrap();
        let res = admm_solve(&spec, &SolverOptions::default()).unwrap();
        let expected = scale_vec(C::new(1.0 / norm_sqr(&a), 0.0), &a);
        assert!(rel_err(&res.w, &expected) < 1e-9);
    }

    #[test]
    fn admm_l1_satisfies_certificate_and_dominance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = random_psd(4, &mut rng);
        let a = random_vec(4, &mut rng);
        let g = CMat::from_fn(4, 6, |_, _| C::new(rng.random_range(-1.0..1.0), 0.0));
        let term = PenaltyTerm::new(g, PenaltyKind::L1, 0.3).unwrap();
        let spec = ProblemSpec::new(r.clone(), a.clone(), vec![term]).unwrap();
        let opts = SolverOptions::default();
        let res = admm_solve(&spec, &opts).unwrap();
        assert_eq!(res.status, SolverStatus::Converged);
        assert!(res.optimality_residual <= 10.0 * opts.tol_dual);
        assert!(res.constraint_residual <= 1e-9);
        let capon = closed_form(&r, &a);
        assert!(res.objective <= spec.objective(&capon) + 1e-12);
    }

    #[test]
    fn admm_rejects_quartic_and_smooth_rejects_l1() {
        let a = vec![cplx(1.0, 0.0), cplx(1.0, 0.0)];
        let g = CMat::identity(2);
        let quartic = PenaltyTerm::new(g.clone(), PenaltyKind::QuarticUnit, 1.0).unwrap();
        let spec = ProblemSpec::new(CMat::identity(2), a.clone(), vec![quartic]).unwrap();
        assert!(admm_solve(&spec, &SolverOptions::default()).is_err());
        let l1 = PenaltyTerm::new(g, PenaltyKind::L1, 1.0).unwrap();
        let spec = ProblemSpec::new(CMat::identity(2), a.clone(), vec![l1]).unwrap();
        let w0 = vec![cplx(0.5, 0.0), cplx(0.5, 0.0)];
        assert!(smooth_solve(&spec, &SolverOptions::default(), &w0).is_err());
    }

    #[test]
    fn smooth_rejects_infeasible_start() {
        let a: Vec<C<f64>> = vec![cplx(1.0, 0.0), cplx(1.0, 0.0)];
        let spec = ProblemSpec::new(CMat::identity(2), a, vec![]).unwrap();
        let bad = vec![cplx(1.0, 0.0), cplx(1.0, 0.0)];
        assert!(smooth_solve(&spec, &SolverOptions::default(), &bad).is_err());
    }

    #[test]
    fn penalty_validation() {
        let g = CMat::<f64>::identity(3);
        assert!(PenaltyTerm::new(g.clone(), PenaltyKind::L1, -1.0).is_err());
        let overlapping = PenaltyKind::GroupL2 {
            groups: vec![vec![0, 1], vec![1, 2]],
        };
        assert!(PenaltyTerm::new(g.clone(), overlapping, 1.0).is_err());
        let gap = PenaltyKind::GroupL2 {
            groups: vec![vec![0, 1]],
        };
        assert!(PenaltyTerm::new(g.clone(), gap, 1.0).is_err());
        let a = vec![cplx(1.0, 0.0); 2];
        let term = PenaltyTerm::new(g, PenaltyKind::L1, 1.0).unwrap();
        assert!(ProblemSpec::new(CMat::identity(2), a, vec![term]).is_err());
        let bad_opts = SolverOptions {
            rho: 0.0,
            ..SolverOptions::default()
        };
        assert!(bad_opts.validate().is_err());
    }

    #[test]
    fn smooth_objective_change_matches_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let r = random_psd(5, &mut rng);
        let a = random_vec(5, &mut rng);
        let gm = CMat::from_fn(5, 3, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let gs = CMat::from_fn(5, 4, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let spec = ProblemSpec::new(
            r,
            a,
            vec![
                PenaltyTerm::new(gm, PenaltyKind::QuarticUnit, 0.7).unwrap(),
                PenaltyTerm::new(gs, PenaltyKind::SquaredL2, 0.7).unwrap(),
            ],
        )
        .unwrap();
        let p = SmoothProblem::new(&spec).unwrap();
        let z = random_vec(4, &mut rng);
        let s = random_vec(4, &mut rng);
        let direct = p.objective(&add_vec(&z, &s)) - p.objective(&z);
        assert!((p.objective_change(&z, &s) - direct).abs() < 1e-10 * direct.abs().max(1.0));
        // objective in reduced coordinates agrees with the full objective
        let w = p.param().point(&z);
        assert!((p.objective(&z) - spec.objective(&w)).abs() < 1e-10 * spec.objective(&w));
    }
}
