//! Dense convex solvers.
//!
//! [`solve_sdp`] handles linear matrix inequality programs
//!
//! ```text
//! minimize  c . y   subject to   F0_b + sum_k y_k F_kb  >= 0   for every block b
//! ```
//!
//! with complex Hermitian blocks. Each block is embedded into real symmetric
//! form `A + iB -> [[A, -B], [B, A]]` at the boundary, and the real problem is
//! solved by an infeasible-start primal-dual interior-point method (HKM search
//! direction with Mehrotra predictor-corrector). The dual iterate certifies a
//! lower bound, so every report carries an honest gap.
//!
//! [`minimize_spectral`] specializes this to `min_{||C|| <= 1} lambda_max(D(C))`
//! for an affine Hermitian family `D(C) = base - 2 Herm(sum_ij C_ij G_ij)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::matrix::{clip_to_contraction, herm_eig, op_norm, CMat, C64};

/// Default absolute tolerance on the duality gap.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Gap accepted for convergence at tolerance `tol`: absolute while both the
/// optimal value and the data scale (largest eigenvalue magnitude of the
/// constant term) are at most 1, relative to the larger of the two beyond.
pub fn gap_tolerance(tol: f64, value: f64, scale: f64) -> f64 {
    tol * value.abs().max(scale.abs()).max(1.0)
}

/// Default iteration budget.
pub const MAX_ITERATIONS: usize = 10_000;

/// One Hermitian LMI block `F0 + sum_k y_k F_k >= 0`.
#[derive(Debug, Clone)]
pub struct LmiBlock {
    constant: CMat,
    terms: Vec<(usize, CMat)>,
}

impl LmiBlock {
    pub fn new(constant: CMat) -> Self {
        LmiBlock {
            constant,
            terms: Vec::new(),
        }
    }

    /// Adds `y_var * coefficient` to the block. Zero coefficients are skipped.
    pub fn add_term(&mut self, var: usize, coefficient: CMat) {
        if coefficient.max_abs() > 0.0 {
            self.terms.push((var, coefficient));
        }
    }

    pub fn dim(&self) -> usize {
        self.constant.rows()
    }

    pub fn constant(&self) -> &CMat {
        &self.constant
    }

    pub fn terms(&self) -> &[(usize, CMat)] {
        &self.terms
    }

    /// `F0 + sum_k y_k F_k`.
    pub fn evaluate(&self, y: &[f64]) -> CMat {
        let mut out = self.constant.clone();
        for (var, f) in &self.terms {
            out += &f.scale_re(y[*var]);
        }
        out
    }
}

/// Linear objective over real variables with Hermitian LMI constraints.
/// Equality constraints are expected to be eliminated by parametrization.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    num_vars: usize,
    objective: Vec<f64>,
    blocks: Vec<LmiBlock>,
}

impl SdpProblem {
    pub fn new(num_vars: usize, objective: Vec<f64>, blocks: Vec<LmiBlock>) -> Result<Self> {
        if objective.len() != num_vars {
            return Err(Error::DimensionMismatch(format!(
                "objective has {} entries for {num_vars} variables",
                objective.len()
            )));
        }
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        for (b, block) in blocks.iter().enumerate() {
            let d = block.dim();
            let check = |m: &CMat| -> Result<()> {
                if m.shape() != (d, d) {
                    return Err(Error::DimensionMismatch(format!(
                        "block {b}: coefficient {}x{} in a {d}x{d} block",
                        m.rows(),
                        m.cols()
                    )));
                }
                if !m.is_finite() {
                    return Err(Error::NonFinite);
                }
                let res = m.hermiticity_residual();
                if res > 1e-10 * m.frobenius_norm().max(1.0) {
                    return Err(Error::NonHermitian(res));
                }
                Ok(())
            };
            check(&block.constant)?;
            for (var, f) in &block.terms {
                if *var >= num_vars {
                    return Err(Error::DimensionMismatch(format!(
                        "block {b} references variable {var} of {num_vars}"
                    )));
                }
                check(f)?;
            }
        }
        Ok(SdpProblem {
            num_vars,
            objective,
            blocks,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn blocks(&self) -> &[LmiBlock] {
        &self.blocks
    }

    /// Smallest eigenvalue over all blocks at `y`.
    pub fn min_slack(&self, y: &[f64]) -> Result<f64> {
        let mut best = f64::INFINITY;
        for b in &self.blocks {
            best = best.min(herm_eig(&b.evaluate(y).hermitian_part())?.min());
        }
        Ok(best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    IterLimit,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Objective value at the returned point (an upper bound for minimizations).
    pub value: f64,
    /// Certified lower bound from the dual iterate.
    pub lower_bound: f64,
    pub variables: Vec<f64>,
    pub gap: f64,
    pub iterations: usize,
    pub status: SolveStatus,
}

/// Solver knobs.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: DEFAULT_TOL,
            max_iterations: MAX_ITERATIONS,
        }
    }
}

type Triplets = Vec<(usize, usize, f64)>;

/// The real form `min <C, X> s.t. <A_k, X> = b_k, X >= 0` and its dual
/// `max b.y s.t. C - sum_k y_k A_k = S >= 0`, with `A_k = -F_k`, `C = F0`,
/// `b = -c`.
struct RealSdp {
    dims: Vec<usize>,
    c: Vec<DMatrix<f64>>,
    /// `a[k][b]`: full (both triangles) entries of `A_k` in block `b`.
    a: Vec<Vec<Triplets>>,
    b: DVector<f64>,
}

fn embed(h: &CMat) -> DMatrix<f64> {
    let n = h.rows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            out[(i, j)] = z.re;
            out[(i + n, j + n)] = z.re;
            out[(i + n, j)] = z.im;
            out[(i, j + n)] = -z.im;
        }
    }
    out
}

fn embed_triplets(h: &CMat, sign: f64) -> Triplets {
    let n = h.rows();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            if z.re != 0.0 {
                out.push((i, j, sign * z.re));
                out.push((i + n, j + n, sign * z.re));
            }
            if z.im != 0.0 {
                out.push((i + n, j, sign * z.im));
                out.push((i, j + n, -sign * z.im));
            }
        }
    }
    out
}

impl RealSdp {
    fn from_problem(p: &SdpProblem) -> Self {
        let dims: Vec<usize> = p.blocks.iter().map(|b| 2 * b.dim()).collect();
        let c = p.blocks.iter().map(|b| embed(&b.constant)).collect();
        let mut a = vec![vec![Vec::new(); p.blocks.len()]; p.num_vars];
        for (bi, block) in p.blocks.iter().enumerate() {
            for (var, f) in &block.terms {
                a[*var][bi].extend(embed_triplets(f, -1.0));
            }
        }
        let b = DVector::from_iterator(p.num_vars, p.objective.iter().map(|c| -c));
        RealSdp { dims, c, a, b }
    }

    fn num_vars(&self) -> usize {
        self.b.len()
    }

    fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    /// `A(Z)_k = sum_ij (A_k)_ij Z_ij`, valid for nonsymmetric `Z`.
    fn op_a(&self, z: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_iterator(
            self.num_vars(),
            self.a.iter().map(|blocks| {
                blocks
                    .iter()
                    .zip(z)
                    .map(|(t, zb)| t.iter().map(|&(i, j, v)| v * zb[(i, j)]).sum::<f64>())
                    .sum::<f64>()
            }),
        )
    }

    /// `sum_k y_k A_k`.
    fn op_at(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.dims.iter().map(|&d| DMatrix::zeros(d, d)).collect();
        for (k, blocks) in self.a.iter().enumerate() {
            let yk = y[k];
            if yk == 0.0 {
                continue;
            }
            for (t, ob) in blocks.iter().zip(out.iter_mut()) {
                for &(i, j, v) in t {
                    ob[(i, j)] += yk * v;
                }
            }
        }
        out
    }

    /// HKM Schur complement `M_ij = tr(A_i X A_j S^-1)`.
    fn schur(&self, x: &[DMatrix<f64>], sinv: &[DMatrix<f64>]) -> DMatrix<f64> {
        let p = self.num_vars();
        let mut m = DMatrix::zeros(p, p);
        for bi in 0..self.dims.len() {
            let active: Vec<usize> = (0..p).filter(|&k| !self.a[k][bi].is_empty()).collect();
            let xb = &x[bi];
            let sb = &sinv[bi];
            for (ai, &i) in active.iter().enumerate() {
                let ti = &self.a[i][bi];
                for &j in &active[ai..] {
                    let tj = &self.a[j][bi];
                    let mut acc = 0.0;
                    for &(a, b, v) in ti {
                        for &(c, d, w) in tj {
                            acc += v * w * xb[(b, c)] * sb[(d, a)];
                        }
                    }
                    m[(i, j)] += acc;
                    if i != j {
                        m[(j, i)] += acc;
                    }
                }
            }
        }
        m
    }
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest `alpha` with `X + alpha dX >= 0`, or `None` if `X` is not positive definite.
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> Option<f64> {
    let chol = x.clone().cholesky()?;
    let l = chol.l();
    let p = l.solve_lower_triangular(dx)?;
    let w = l.solve_lower_triangular(&p.transpose())?;
    let w = sym(&w);
    let lmin = SymmetricEigen::new(w)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    Some(if lmin >= 0.0 { f64::INFINITY } else { -1.0 / lmin })
}

fn block_step(x: &[DMatrix<f64>], dx: &[DMatrix<f64>]) -> Option<f64> {
    let mut alpha = f64::INFINITY;
    for (xb, db) in x.iter().zip(dx) {
        alpha = alpha.min(max_step(xb, db)?);
    }
    Some(alpha)
}

enum SchurFactor {
    Chol(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurFactor {
    fn new(m: &DMatrix<f64>) -> Self {
        if let Some(ch) = m.clone().cholesky() {
            return SchurFactor::Chol(ch);
        }
        let scale = m.diagonal().iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
        let mut reg = m.clone();
        for i in 0..reg.nrows() {
            reg[(i, i)] += 1e-13 * scale;
        }
        SchurFactor::Lu(reg.lu())
    }

    fn solve(&self, rhs: &DVector<f64>) -> Option<DVector<f64>> {
        let sol = match self {
            SchurFactor::Chol(ch) => ch.solve(rhs),
            SchurFactor::Lu(lu) => lu.solve(rhs)?,
        };
        sol.iter().all(|v| v.is_finite()).then_some(sol)
    }
}

struct IpmOutcome {
    y: DVector<f64>,
    upper: f64,
    lower: f64,
    iterations: usize,
    converged: bool,
}

fn frob(blocks: &[DMatrix<f64>]) -> f64 {
    blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
}

fn interior_point(sdp: &RealSdp, opts: &SolverOptions) -> IpmOutcome {
    let p = sdp.num_vars();
    let n_total = sdp.total_dim() as f64;
    let feas_tol = opts.tol.min(1e-8);

    let norm_c = frob(&sdp.c);
    let scale = sdp
        .c
        .iter()
        .map(|c| c.clone().symmetric_eigenvalues().amax())
        .fold(0.0, f64::max);
    let norm_b = sdp.b.norm();
    let a_norms: Vec<f64> = sdp
        .a
        .iter()
        .map(|blocks| {
            blocks
                .iter()
                .map(|t| t.iter().map(|e| e.2 * e.2).sum::<f64>())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let mut xi: f64 = 10.0_f64.max(n_total.sqrt());
    let mut eta: f64 = 10.0_f64.max(n_total.sqrt()).max(norm_c);
    for k in 0..p {
        xi = xi.max(n_total * (1.0 + sdp.b[k].abs()) / (1.0 + a_norms[k]));
        eta = eta.max(a_norms[k]);
    }
    let mut x: Vec<DMatrix<f64>> = sdp.dims.iter().map(|&d| DMatrix::identity(d, d) * xi).collect();
    let mut s: Vec<DMatrix<f64>> = sdp.dims.iter().map(|&d| DMatrix::identity(d, d) * eta).collect();
    let mut y = DVector::zeros(p);

    let mut best = IpmOutcome {
        y: y.clone(),
        upper: f64::INFINITY,
        lower: f64::NEG_INFINITY,
        iterations: 0,
        converged: false,
    };
    let mut stalls = 0;
    let mut best_merit = f64::INFINITY;
    let mut last_improvement = 0;

    for iter in 0..opts.max_iterations {
        let rp = &sdp.b - sdp.op_a(&x);
        let aty = sdp.op_at(&y);
        let rd: Vec<DMatrix<f64>> = sdp
            .c
            .iter()
            .zip(&s)
            .zip(&aty)
            .map(|((c, s), a)| c - s - a)
            .collect();
        let pobj = inner(&sdp.c, &x);
        let dobj = sdp.b.dot(&y);
        let xs = inner(&x, &s);
        let mu = xs / n_total;
        let pinf = rp.norm() / (1.0 + norm_b);
        let dinf = frob(&rd) / (1.0 + norm_c);
        // upper bound on the original minimization is -dobj, lower bound -pobj
        let gap = (pobj - dobj).abs().max(xs);
        if !(gap.is_finite() && pinf.is_finite() && dinf.is_finite()) {
            break;
        }
        let gap_tol = gap_tolerance(opts.tol, dobj, scale);
        let merit = (gap / gap_tol).max(pinf / feas_tol).max(dinf / feas_tol);
        if merit < 0.5 * best_merit {
            best_merit = merit;
            last_improvement = iter;
        } else if iter - last_improvement > 50 {
            break;
        }
        if dinf <= feas_tol && pinf <= feas_tol && (-dobj) - (-pobj) < best.upper - best.lower {
            best = IpmOutcome {
                y: y.clone(),
                upper: -dobj,
                lower: -pobj,
                iterations: iter,
                converged: false,
            };
        }
        if pinf <= feas_tol && dinf <= feas_tol && gap <= gap_tol {
            best = IpmOutcome {
                y: y.clone(),
                upper: -dobj,
                lower: -pobj,
                iterations: iter,
                converged: true,
            };
            return best;
        }

        let sinv: Option<Vec<DMatrix<f64>>> = s
            .iter()
            .map(|sb| sb.clone().cholesky().map(|c| c.inverse()))
            .collect();
        let Some(sinv) = sinv else { break };
        let m = sdp.schur(&x, &sinv);

        let x_rd_sinv: Vec<DMatrix<f64>> = x
            .iter()
            .zip(&rd)
            .zip(&sinv)
            .map(|((x, r), si)| x * r * si)
            .collect();
        let a_x_rd_sinv = sdp.op_a(&x_rd_sinv);

        let factor = SchurFactor::new(&m);
        let direction = |rc: &[DMatrix<f64>]| -> Option<(Vec<DMatrix<f64>>, DVector<f64>, Vec<DMatrix<f64>>)> {
            let rc_sinv: Vec<DMatrix<f64>> = rc.iter().zip(&sinv).map(|(r, si)| r * si).collect();
            let rhs = &rp - sdp.op_a(&rc_sinv) + &a_x_rd_sinv;
            let mut dy = factor.solve(&rhs)?;
            let complete = |dy: &DVector<f64>| {
                let at_dy = sdp.op_at(dy);
                let ds: Vec<DMatrix<f64>> = rd.iter().zip(&at_dy).map(|(r, a)| r - a).collect();
                let dx: Vec<DMatrix<f64>> = rc
                    .iter()
                    .zip(&x)
                    .zip(&ds)
                    .zip(&sinv)
                    .map(|(((rc, x), ds), si)| sym(&((rc - x * ds) * si)))
                    .collect();
                (dx, ds)
            };
            let (mut dx, mut ds) = complete(&dy);
            // iterative refinement on the primal equations A(dX) = Rp
            for _ in 0..3 {
                let r = &rp - sdp.op_a(&dx);
                if r.norm() <= 1e-15 * (1.0 + rp.norm() + norm_b) {
                    break;
                }
                dy += factor.solve(&r)?;
                (dx, ds) = complete(&dy);
            }
            Some((dx, dy, ds))
        };

        // predictor
        let rc_aff: Vec<DMatrix<f64>> = x.iter().zip(&s).map(|(x, s)| -(x * s)).collect();
        let Some((dx_a, _dy_a, ds_a)) = direction(&rc_aff) else { break };
        let (Some(ap), Some(ad)) = (block_step(&x, &dx_a), block_step(&s, &ds_a)) else {
            break;
        };
        let ap = ap.min(1.0);
        let ad = ad.min(1.0);
        let x_aff: Vec<DMatrix<f64>> = x.iter().zip(&dx_a).map(|(x, d)| x + d * ap).collect();
        let s_aff: Vec<DMatrix<f64>> = s.iter().zip(&ds_a).map(|(s, d)| s + d * ad).collect();
        let mu_aff = inner(&x_aff, &s_aff) / n_total;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let rc: Vec<DMatrix<f64>> = x
            .iter()
            .zip(&s)
            .zip(dx_a.iter().zip(&ds_a))
            .map(|((x, s), (dx, ds))| {
                let d = x.nrows();
                DMatrix::identity(d, d) * (sigma * mu) - x * s - dx * ds
            })
            .collect();
        let Some((dx, dy, ds)) = direction(&rc) else { break };
        let (Some(ap), Some(ad)) = (block_step(&x, &dx), block_step(&s, &ds)) else {
            break;
        };
        let gamma = 0.9 + 0.09 * ap.min(ad).min(1.0);
        let ap = (gamma * ap).min(1.0);
        let ad = (gamma * ad).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            stalls += 1;
            if stalls > 5 {
                break;
            }
        } else {
            stalls = 0;
        }
        for (xb, d) in x.iter_mut().zip(&dx) {
            *xb += d * ap;
            *xb = sym(xb);
        }
        for (sb, d) in s.iter_mut().zip(&ds) {
            *sb += d * ad;
            *sb = sym(sb);
        }
        y += dy * ad;
        best.iterations = iter + 1;
    }
    best
}

/// Solves `min c.y s.t. F(y) >= 0`.
///
/// Returns a report with status `Converged` when the duality gap is within
/// [`gap_tolerance`], `Infeasible` when no `y` makes every block PSD, and
/// `IterLimit` otherwise (with the best bound pair found).
pub fn solve_sdp(problem: &SdpProblem, tol: f64) -> Result<SolveReport> {
    solve_sdp_with(
        problem,
        &SolverOptions {
            tol,
            ..SolverOptions::default()
        },
    )
}

pub fn solve_sdp_with(problem: &SdpProblem, opts: &SolverOptions) -> Result<SolveReport> {
    if !(opts.tol > 0.0 && opts.tol.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if problem.num_vars == 0 || problem.blocks.iter().all(|b| b.terms.is_empty()) {
        let y = vec![0.0; problem.num_vars];
        if problem.objective.iter().any(|&c| c != 0.0) {
            return Err(Error::SolverFailure("objective is unbounded below".into()));
        }
        let slack = problem.min_slack(&y)?;
        let status = if slack >= -opts.tol {
            SolveStatus::Converged
        } else {
            SolveStatus::Infeasible
        };
        return Ok(SolveReport {
            value: 0.0,
            lower_bound: 0.0,
            variables: y,
            gap: 0.0,
            iterations: 0,
            status,
        });
    }

    let sdp = RealSdp::from_problem(problem);
    let out = interior_point(&sdp, opts);
    if out.converged {
        return Ok(SolveReport {
            value: out.upper,
            lower_bound: out.lower,
            variables: out.y.iter().copied().collect(),
            gap: (out.upper - out.lower).max(0.0),
            iterations: out.iterations,
            status: SolveStatus::Converged,
        });
    }
    if phase_one_infeasible(problem, opts)? {
        return Ok(SolveReport {
            value: f64::INFINITY,
            lower_bound: f64::INFINITY,
            variables: vec![0.0; problem.num_vars],
            gap: f64::INFINITY,
            iterations: out.iterations,
            status: SolveStatus::Infeasible,
        });
    }
    Ok(SolveReport {
        value: out.upper,
        lower_bound: out.lower,
        variables: out.y.iter().copied().collect(),
        gap: (out.upper - out.lower).max(0.0),
        iterations: out.iterations,
        status: SolveStatus::IterLimit,
    })
}

/// `min s s.t. F(y) + s I >= 0, s >= -1`; infeasible iff the optimum is positive.
fn phase_one_infeasible(problem: &SdpProblem, opts: &SolverOptions) -> Result<bool> {
    let p = problem.num_vars;
    let s_var = p;
    let mut blocks: Vec<LmiBlock> = problem.blocks.clone();
    for b in blocks.iter_mut() {
        let d = b.dim();
        b.add_term(s_var, CMat::identity(d));
    }
    let mut floor = LmiBlock::new(CMat::identity(1));
    floor.add_term(s_var, CMat::identity(1));
    blocks.push(floor);
    let mut objective = vec![0.0; p + 1];
    objective[s_var] = 1.0;
    let aux = SdpProblem::new(p + 1, objective, blocks)?;
    let out = interior_point(&RealSdp::from_problem(&aux), opts);
    Ok(out.lower > opts.tol)
}

/// `min_{||C|| <= 1} lambda_max(base - 2 Herm(sum_ij C_ij G_ij))` over complex
/// `C` of size `r1 x r2`.
#[derive(Debug, Clone)]
pub struct AffineSpectralProblem {
    base: CMat,
    /// Row-major `G_ij`, `i < r1`, `j < r2`.
    generators: Vec<CMat>,
    r1: usize,
    r2: usize,
}

impl AffineSpectralProblem {
    pub fn new(base: CMat, generators: Vec<CMat>, r1: usize, r2: usize) -> Result<Self> {
        if !base.is_square() {
            return Err(Error::NonSquare(base.rows(), base.cols()));
        }
        let res = base.hermiticity_residual();
        if res > 1e-10 * base.frobenius_norm().max(1.0) {
            return Err(Error::NonHermitian(res));
        }
        if generators.len() != r1 * r2 {
            return Err(Error::DimensionMismatch(format!(
                "{} generators for a {r1}x{r2} ball",
                generators.len()
            )));
        }
        for g in &generators {
            if g.shape() != base.shape() {
                return Err(Error::DimensionMismatch(format!(
                    "generator is {}x{}, base is {}x{}",
                    g.rows(),
                    g.cols(),
                    base.rows(),
                    base.cols()
                )));
            }
        }
        Ok(AffineSpectralProblem {
            base: base.hermitian_part(),
            generators,
            r1,
            r2,
        })
    }

    pub fn base(&self) -> &CMat {
        &self.base
    }

    pub fn generator(&self, i: usize, j: usize) -> &CMat {
        &self.generators[i * self.r2 + j]
    }

    pub fn ball_dims(&self) -> (usize, usize) {
        (self.r1, self.r2)
    }

    /// `sum_ij C_ij G_ij`.
    pub fn pairing(&self, c: &CMat) -> CMat {
        let mut out = CMat::zeros(self.base.rows(), self.base.cols());
        for i in 0..self.r1 {
            for j in 0..self.r2 {
                let cij = c[(i, j)];
                if cij != C64::new(0.0, 0.0) {
                    out += &self.generator(i, j).scale(cij);
                }
            }
        }
        out
    }

    /// `D(C) = base - 2 Herm(sum_ij C_ij G_ij)`.
    pub fn objective_matrix(&self, c: &CMat) -> CMat {
        let m = self.pairing(c);
        (&self.base - &(&m + &m.adjoint())).hermitian_part()
    }

    /// `lambda_max(D(C))`.
    pub fn value_at(&self, c: &CMat) -> f64 {
        herm_eig(&self.objective_matrix(c))
            .map(|e| e.max())
            .unwrap_or(f64::NAN)
    }

    /// `tr(G_ij)` arranged as an `r2 x r1` matrix, so that
    /// `tr(sum C_ij G_ij) = tr(C M)`.
    pub fn trace_matrix(&self) -> CMat {
        CMat::from_fn(self.r2, self.r1, |j, i| self.generator(i, j).trace())
    }

    fn is_trivial(&self) -> bool {
        self.generators.iter().all(|g| g.max_abs() == 0.0)
    }
}

/// Solution of [`minimize_spectral`]: the report's `value` is
/// `lambda_max(D(witness))` at a feasible contraction.
#[derive(Debug, Clone)]
pub struct SpectralSolution {
    pub report: SolveReport,
    pub witness: CMat,
}

pub fn minimize_spectral(p: &AffineSpectralProblem, tol: f64) -> Result<SpectralSolution> {
    minimize_spectral_with_hints(p, tol, &[])
}

/// As [`minimize_spectral`], additionally evaluating caller-supplied feasible
/// points. The point `C = 0` and the trace-maximizing contraction are always tried.
pub fn minimize_spectral_with_hints(
    p: &AffineSpectralProblem,
    tol: f64,
    hints: &[CMat],
) -> Result<SpectralSolution> {
    let (r1, r2) = (p.r1, p.r2);
    let zero = CMat::zeros(r1, r2);
    if p.is_trivial() {
        let value = p.value_at(&zero);
        return Ok(SpectralSolution {
            report: SolveReport {
                value,
                lower_bound: value,
                variables: vec![value],
                gap: 0.0,
                iterations: 0,
                status: SolveStatus::Converged,
            },
            witness: zero,
        });
    }

    let mut candidates = vec![zero, crate::matrix::trace_maximizing_contraction(&p.trace_matrix())];
    for h in hints {
        if h.shape() != (r1, r2) {
            return Err(Error::DimensionMismatch(format!(
                "hint is {}x{}, ball is {r1}x{r2}",
                h.rows(),
                h.cols()
            )));
        }
        candidates.push(clip_to_contraction(h));
    }

    // Variables: t, then (Re C_ij, Im C_ij) in row-major order.
    let m = p.base.rows();
    let nv = 1 + 2 * r1 * r2;
    let mut lmi = LmiBlock::new(p.base.scale_re(-1.0));
    lmi.add_term(0, CMat::identity(m));
    let mut ball = LmiBlock::new(CMat::identity(r1 + r2));
    let i_unit = C64::new(0.0, 1.0);
    for i in 0..r1 {
        for j in 0..r2 {
            let g = p.generator(i, j);
            let var = 1 + 2 * (i * r2 + j);
            lmi.add_term(var, g + &g.adjoint());
            lmi.add_term(var + 1, (&g.scale(i_unit) - &g.adjoint().scale(i_unit)).hermitian_part());
            let mut re = CMat::zeros(r1 + r2, r1 + r2);
            re[(i, r1 + j)] = C64::new(1.0, 0.0);
            re[(r1 + j, i)] = C64::new(1.0, 0.0);
            ball.add_term(var, re);
            let mut im = CMat::zeros(r1 + r2, r1 + r2);
            im[(i, r1 + j)] = i_unit;
            im[(r1 + j, i)] = -i_unit;
            ball.add_term(var + 1, im);
        }
    }
    let mut objective = vec![0.0; nv];
    objective[0] = 1.0;
    let sdp = SdpProblem::new(nv, objective, vec![lmi, ball])?;
    let report = solve_sdp(&sdp, tol)?;
    if report.status == SolveStatus::Infeasible {
        return Err(Error::SolverFailure(
            "spectral problem reported infeasible".into(),
        ));
    }
    let y = &report.variables;
    let from_solver = CMat::from_fn(r1, r2, |i, j| {
        let var = 1 + 2 * (i * r2 + j);
        C64::new(y[var], y[var + 1])
    });
    candidates.push(clip_to_contraction(&from_solver));

    let (witness, value) = candidates
        .into_iter()
        .map(|c| {
            let v = p.value_at(&c);
            (c, v)
        })
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::SolverFailure("no finite candidate value".into()))?;

    let lower = report.lower_bound.min(value);
    let gap = value - lower;
    let gap_ok = gap <= gap_tolerance(tol, value, op_norm(&p.base));
    let status = if report.status == SolveStatus::Converged || gap_ok {
        if gap_ok {
            SolveStatus::Converged
        } else {
            SolveStatus::IterLimit
        }
    } else {
        report.status
    };
    Ok(SpectralSolution {
        report: SolveReport {
            value,
            lower_bound: lower,
            variables: y.clone(),
            gap,
            iterations: report.iterations,
            status,
        },
        witness,
    })
}

/// `min t s.t. [[t I, A], [A^*, t I]] >= 0`, i.e. the operator norm of `A` as an SDP.
pub fn op_norm_sdp(a: &CMat, tol: f64) -> Result<SolveReport> {
    let (r, c) = a.shape();
    let mut constant = CMat::zeros(r + c, r + c);
    constant.set_block(0, r, a);
    constant.set_block(r, 0, &a.adjoint());
    let mut block = LmiBlock::new(constant);
    block.add_term(0, CMat::identity(r + c));
    solve_sdp(&SdpProblem::new(1, vec![1.0], vec![block])?, tol)
}

/// Cheap check used by tests and callers: `op_norm(C) <= 1 + slack`.
pub fn in_ball(c: &CMat, slack: f64) -> bool {
    op_norm(c) <= 1.0 + slack
}
