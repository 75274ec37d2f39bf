//! Bures distance between CP maps.
//!
//! Two independent routes are provided:
//!
//! * [`bures_intertwiner`]: `beta^2 = min_{||C|| <= 1} ||phi_1(1) + phi_2(1) - 2 Re <x_1, (C (x) id) x_2>||`
//!   over contractions between the minimal Kraus stacks.
//! * [`bures_extension`]: `beta^2 = min ||phi_1(1) + phi_2(1) - 2 Re phi_12(1)||` over
//!   off-diagonal corners `phi_12` of CP maps on `M_2(M_n)` whose diagonal
//!   corners are `phi_1` and `phi_2`, parametrized through the Choi matrices.
//!
//! Closed forms for classical states and for unitary conjugations, a sampling
//! upper bound, cb-norm bound reports and the rigidity decomposition live here too.

use rand::Rng;

use crate::convex::{
    self, minimize_spectral, LmiBlock, SdpProblem, SolveReport, SolveStatus,
};
use crate::cpmap::{cb_norm, choi_from_kraus, op_norm_sampled, CpMap, KrausSet, KRAUS_RANK_TOL};
use crate::error::{Error, Result};
use crate::gns::{build_gns, pairing, GnsModule, Intertwiner};
use crate::matrix::{
    clip_to_contraction, herm_eig, max_eigenvalue, op_norm, svd, trace_maximizing_contraction,
    CMat, C64,
};
use crate::random::{random_contraction, random_matrix, random_unitary, seeded};

/// How a distance value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Intertwiner,
    Extension,
    ClosedFormStates,
    ClosedFormUnitary,
    BruteForceUpper,
}

impl Formulation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Formulation::Intertwiner => "intertwiner",
            Formulation::Extension => "extension",
            Formulation::ClosedFormStates => "closed-form-states",
            Formulation::ClosedFormUnitary => "closed-form-unitary",
            Formulation::BruteForceUpper => "brute-force-upper",
        }
    }
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Optimizer certificate.
#[derive(Debug, Clone)]
pub enum Witness {
    /// Contraction `C` between the minimal Kraus stacks (`r_1 x r_2`).
    Intertwiner(CMat),
    /// Off-diagonal Choi block `J_12` of the CP extension (`nm x nm`).
    Extension(CMat),
}

#[derive(Debug, Clone)]
pub struct BuresResult {
    /// `beta`, the square root of the optimal spectral value.
    pub value: f64,
    pub formulation: Formulation,
    pub witness: Option<Witness>,
    /// Solver report on the squared distance.
    pub report: SolveReport,
}

fn check_pair(phi1: &CpMap, phi2: &CpMap) -> Result<()> {
    if (phi1.dim_in(), phi1.dim_out()) != (phi2.dim_in(), phi2.dim_out()) {
        return Err(Error::DimensionMismatch(format!(
            "M_{} -> M_{} vs M_{} -> M_{}",
            phi1.dim_in(),
            phi1.dim_out(),
            phi2.dim_in(),
            phi2.dim_out()
        )));
    }
    Ok(())
}

fn converged_or_fail(report: &SolveReport, what: &str) -> Result<()> {
    match report.status {
        SolveStatus::Converged => Ok(()),
        other => Err(Error::SolverFailure(format!(
            "{what}: status {other:?}, gap {:.3e} after {} iterations",
            report.gap, report.iterations
        ))),
    }
}

/// The spectral problem `D(C) = <x_1,x_1> + <x_2,x_2> - 2 Herm(sum C_ij x_1i^* x_2j)`.
pub fn spectral_problem(g1: &GnsModule, g2: &GnsModule) -> Result<convex::AffineSpectralProblem> {
    if (g1.dim_in(), g1.dim_out()) != (g2.dim_in(), g2.dim_out()) {
        return Err(Error::DimensionMismatch("modules over different algebras".into()));
    }
    let x1 = g1.cyclic_vector();
    let x2 = g2.cyclic_vector();
    let base = (&x1.inner(x1)? + &x2.inner(x2)?).hermitian_part();
    let mut generators = Vec::with_capacity(x1.len() * x2.len());
    for k1 in x1.blocks() {
        for k2 in x2.blocks() {
            generators.push(k1.adjoint_mul(k2));
        }
    }
    convex::AffineSpectralProblem::new(base, generators, x1.len(), x2.len())
}

/// Bures distance computed on given (possibly non-minimal) GNS realizations.
pub fn bures_from_modules(g1: &GnsModule, g2: &GnsModule, tol: f64) -> Result<BuresResult> {
    let problem = spectral_problem(g1, g2)?;
    let sol = minimize_spectral(&problem, tol)?;
    converged_or_fail(&sol.report, "intertwiner formulation")?;
    Ok(BuresResult {
        value: sol.report.value.max(0.0).sqrt(),
        formulation: Formulation::Intertwiner,
        witness: Some(Witness::Intertwiner(sol.witness)),
        report: sol.report,
    })
}

/// Bures distance through contractions between the minimal GNS modules.
pub fn bures_intertwiner(phi1: &CpMap, phi2: &CpMap, tol: f64) -> Result<BuresResult> {
    check_pair(phi1, phi2)?;
    bures_from_modules(&build_gns(phi1), &build_gns(phi2), tol)
}

/// Range of a PSD Choi matrix: `J = Q diag(lambda) Q^*` with positive `lambda`.
fn choi_range(j: &CMat) -> Result<(CMat, Vec<f64>)> {
    let e = herm_eig(j)?;
    let lmax = e.max();
    let keep: Vec<usize> = (0..e.values.len())
        .rev()
        .filter(|&k| e.values[k] > KRAUS_RANK_TOL * lmax)
        .collect();
    let q = CMat::from_fn(j.rows(), keep.len(), |i, c| e.vectors[(i, keep[c])]);
    Ok((q, keep.iter().map(|&k| e.values[k]).collect()))
}

/// `sum_i` of the diagonal `m x m` blocks of an `nm x nm` matrix.
fn block_trace(j: &CMat, n: usize, m: usize) -> CMat {
    let mut out = CMat::zeros(m, m);
    for i in 0..n {
        out += &j.block(i * m, i * m, m, m);
    }
    out
}

/// Bures distance through CP extensions to `M_2(M_n)`.
///
/// A Hermitian matrix `[[J_1, J_12], [J_12^*, J_2]]` is PSD exactly when
/// `J_12 = Q_1 Y Q_2^*` with `[[L_1, Y], [Y^*, L_2]] >= 0`, where
/// `J_s = Q_s L_s Q_s^*` are the range decompositions. The program is posed
/// in `Y`, which keeps it strictly feasible.
pub fn bures_extension(phi1: &CpMap, phi2: &CpMap, tol: f64) -> Result<BuresResult> {
    check_pair(phi1, phi2)?;
    let (n, m) = (phi1.dim_in(), phi1.dim_out());
    let (q1, l1) = choi_range(phi1.choi())?;
    let (q2, l2) = choi_range(phi2.choi())?;
    let (r1, r2) = (l1.len(), l2.len());
    let base = (&block_trace(phi1.choi(), n, m) + &block_trace(phi2.choi(), n, m)).hermitian_part();

    // phi_12(1) = sum_ab Y_ab M_ab
    let mut mats = Vec::with_capacity(r1 * r2);
    for a in 0..r1 {
        for b in 0..r2 {
            mats.push(CMat::from_fn(m, m, |k, l| {
                (0..n)
                    .map(|i| q1[(i * m + k, a)] * q2[(i * m + l, b)].conj())
                    .sum()
            }));
        }
    }
    let corner_unit = |y: &CMat| -> CMat {
        let mut out = CMat::zeros(m, m);
        for a in 0..r1 {
            for b in 0..r2 {
                out += &mats[a * r2 + b].scale(y[(a, b)]);
            }
        }
        out
    };
    let objective_at = |y: &CMat| -> f64 {
        let p = corner_unit(y);
        max_eigenvalue(&(&base - &(&p + &p.adjoint())).hermitian_part()).unwrap_or(f64::NAN)
    };

    let nv = 1 + 2 * r1 * r2;
    let i_unit = C64::new(0.0, 1.0);
    let mut lmi = LmiBlock::new(base.scale_re(-1.0));
    lmi.add_term(0, CMat::identity(m));
    let mut lambda = CMat::zeros(r1 + r2, r1 + r2);
    for (a, &v) in l1.iter().enumerate() {
        lambda[(a, a)] = C64::new(v, 0.0);
    }
    for (b, &v) in l2.iter().enumerate() {
        lambda[(r1 + b, r1 + b)] = C64::new(v, 0.0);
    }
    let mut ext = LmiBlock::new(lambda);
    for a in 0..r1 {
        for b in 0..r2 {
            let mm = &mats[a * r2 + b];
            let var = 1 + 2 * (a * r2 + b);
            lmi.add_term(var, mm + &mm.adjoint());
            lmi.add_term(var + 1, (&mm.scale(i_unit) - &mm.adjoint().scale(i_unit)).hermitian_part());
            let mut re = CMat::zeros(r1 + r2, r1 + r2);
            re[(a, r1 + b)] = C64::new(1.0, 0.0);
            re[(r1 + b, a)] = C64::new(1.0, 0.0);
            ext.add_term(var, re);
            let mut im = CMat::zeros(r1 + r2, r1 + r2);
            im[(a, r1 + b)] = i_unit;
            im[(r1 + b, a)] = -i_unit;
            ext.add_term(var + 1, im);
        }
    }
    let mut objective = vec![0.0; nv];
    objective[0] = 1.0;
    let sdp = SdpProblem::new(nv, objective, vec![lmi, ext])?;
    let report = convex::solve_sdp(&sdp, tol)?;

    // Feasible candidates: the solver's corner pulled back into the feasible
    // set, the zero corner, and the trace-maximizing one.
    let s1: Vec<f64> = l1.iter().map(|v| v.sqrt()).collect();
    let s2: Vec<f64> = l2.iter().map(|v| v.sqrt()).collect();
    let to_y = |c: &CMat| CMat::from_fn(r1, r2, |a, b| c[(a, b)] * (s1[a] * s2[b]));
    let y_solver = CMat::from_fn(r1, r2, |a, b| {
        let var = 1 + 2 * (a * r2 + b);
        C64::new(report.variables[var], report.variables[var + 1])
    });
    let c_solver = CMat::from_fn(r1, r2, |a, b| y_solver[(a, b)] / (s1[a] * s2[b]));
    let traces = CMat::from_fn(r2, r1, |b, a| mats[a * r2 + b].trace() * (s1[a] * s2[b]));
    let candidates = [
        to_y(&clip_to_contraction(&c_solver)),
        CMat::zeros(r1, r2),
        to_y(&trace_maximizing_contraction(&traces)),
    ];
    let (y, value) = candidates
        .into_iter()
        .map(|y| {
            let v = objective_at(&y);
            (y, v)
        })
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::SolverFailure("extension: no finite candidate".into()))?;

    let lower = report.lower_bound.min(value);
    let gap = value - lower;
    let status = if report.status == SolveStatus::Infeasible {
        SolveStatus::Infeasible
    } else if gap <= convex::gap_tolerance(tol, value, op_norm(&base)) {
        SolveStatus::Converged
    } else {
        SolveStatus::IterLimit
    };
    let report = SolveReport {
        value,
        lower_bound: lower,
        variables: report.variables,
        gap,
        iterations: report.iterations,
        status,
    };
    converged_or_fail(&report, "extension formulation")?;
    let j12 = q1.matmul(&y).matmul(&q2.adjoint());
    Ok(BuresResult {
        value: value.max(0.0).sqrt(),
        formulation: Formulation::Extension,
        witness: Some(Witness::Extension(j12)),
        report,
    })
}

fn check_probability(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(Error::NotProbability("empty vector".into()));
    }
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::NotProbability(format!("entry {x} is not a nonnegative number")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(Error::NotProbability(format!("entries sum to {s}")));
    }
    Ok(())
}

/// The state `a -> sum_i p_i a_ii` on `M_n` as a CP map `M_n -> M_1`, with
/// Kraus blocks `sqrt(p_i) e_i`.
pub fn classical_state_map(p: &[f64]) -> Result<CpMap> {
    check_probability(p)?;
    let n = p.len();
    let blocks = p
        .iter()
        .enumerate()
        .filter(|(_, &x)| x > 0.0)
        .map(|(i, &x)| {
            let mut k = CMat::zeros(n, 1);
            k[(i, 0)] = C64::new(x.sqrt(), 0.0);
            k
        })
        .collect();
    CpMap::from_kraus_blocks(n, 1, blocks)
}

/// `sqrt(2) (1 - sum_i sqrt(p_i q_i))^(1/2)`.
pub fn bures_states_classical(p: &[f64], q: &[f64]) -> Result<f64> {
    check_probability(p)?;
    check_probability(q)?;
    if p.len() != q.len() {
        return Err(Error::NotProbability(format!(
            "lengths {} and {} differ",
            p.len(),
            q.len()
        )));
    }
    let overlap: f64 = p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum();
    Ok(std::f64::consts::SQRT_2 * (1.0 - overlap).max(0.0).sqrt())
}

/// Minimizes a function of an angle: grid scan, then ternary refinement in
/// the bracket around the best grid point.
fn minimize_on_circle(g: impl Fn(f64) -> f64) -> f64 {
    const GRID: usize = 720;
    let step = 2.0 * std::f64::consts::PI / GRID as f64;
    let (mut best_a, mut best) = (0.0, g(0.0));
    for k in 1..GRID {
        let a = k as f64 * step;
        let v = g(a);
        if v < best {
            (best_a, best) = (a, v);
        }
    }
    let (mut lo, mut hi) = (best_a - step, best_a + step);
    while hi - lo > 1e-13 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if g(a) <= g(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    best.min(g(0.5 * (lo + hi)))
}

/// `beta(id, Ad_u)` for a unitary `u`: `sqrt(2) min_{|l| <= 1} ||1 - Re(l u)||^(1/2)`.
///
/// The multiplier runs over the complex unit disk. For `l = r e^{ia}` the norm
/// is `max_k (1 - r cos(a + theta_k))` over the eigenphases of `u`, linear in
/// `r`, so the minimum is either 1 (at `l = 0`) or attained on the circle.
pub fn bures_id_unitary(u: &CMat) -> Result<f64> {
    if !u.is_square() {
        return Err(Error::NonSquare(u.rows(), u.cols()));
    }
    let n = u.rows();
    let res = (u.adjoint_mul(u) - CMat::identity(n)).max_abs();
    if !(res <= 1e-9) {
        return Err(Error::NotUnitary(res));
    }
    let re_u = u.hermitian_part();
    let im_u = (&u.scale(C64::new(0.0, -1.0)) + &u.adjoint().scale(C64::new(0.0, 1.0))).scale_re(0.5);
    let id = CMat::identity(n);
    // Re(e^{ia} u) = cos(a) Re(u) - sin(a) Im(u)
    let g = |a: f64| -> f64 {
        let m = &id - &(&re_u.scale_re(a.cos()) - &im_u.scale_re(a.sin()));
        max_eigenvalue(&m.hermitian_part()).unwrap_or(f64::NAN)
    };
    let v = minimize_on_circle(g).min(1.0);
    Ok(std::f64::consts::SQRT_2 * v.max(0.0).sqrt())
}

/// Minimum of `sqrt(lambda_max(D(C)))` over sampled contractions.
///
/// The first sample is `C = 0`, the second the trace-maximizing contraction;
/// the rest are random Gaussian matrices projected into the ball, alternating
/// between singular-value clipping and polar (partial isometry) projection.
pub fn brute_force_upper(phi1: &CpMap, phi2: &CpMap, samples: usize, seed: u64) -> Result<f64> {
    check_pair(phi1, phi2)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("at least one sample is required".into()));
    }
    let problem = spectral_problem(&build_gns(phi1), &build_gns(phi2))?;
    let (r1, r2) = problem.ball_dims();
    let mut rng = seeded(seed);
    let mut best = problem.value_at(&CMat::zeros(r1, r2));
    if samples >= 2 {
        best = best.min(problem.value_at(&trace_maximizing_contraction(&problem.trace_matrix())));
    }
    for k in 2..samples {
        let c = match k % 3 {
            0 => random_contraction(&mut rng, r1, r2),
            1 => trace_maximizing_contraction(&random_matrix(&mut rng, r2, r1)),
            _ => {
                let u = random_unitary(&mut rng, r1.max(r2));
                let scale: f64 = rng.random();
                CMat::from_fn(r1, r2, |i, j| u[(i, j)] * scale.sqrt())
            }
        };
        best = best.min(problem.value_at(&c));
    }
    Ok(best.max(0.0).sqrt())
}

/// Comparison of `beta` with the completely bounded norm of the difference.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub beta: f64,
    pub cb: f64,
    /// Level-1 norm `||phi_1 - phi_2||`, estimated by sampling unitaries.
    pub op_norm: f64,
    pub lower: f64,
    pub upper: f64,
    pub ok: bool,
}

/// Samples used for the level-1 norm estimate in [`bound_report`].
pub const BOUND_OP_SAMPLES: usize = 2000;

/// `cb / (||phi_1||^(1/2) + ||phi_2||^(1/2)) <= beta <= cb^(1/2)`.
pub fn bound_report(phi1: &CpMap, phi2: &CpMap, tol: f64) -> Result<BoundReport> {
    check_pair(phi1, phi2)?;
    let beta = bures_intertwiner(phi1, phi2, tol)?.value;
    let diff = phi1.difference(phi2)?;
    let cb = cb_norm(&diff, tol)?;
    let op = op_norm_sampled(&diff, BOUND_OP_SAMPLES, &mut seeded(0))?;
    let lower = cb / (phi1.cp_norm().sqrt() + phi2.cp_norm().sqrt());
    let upper = cb.max(0.0).sqrt();
    Ok(BoundReport {
        beta,
        cb,
        op_norm: op,
        lower,
        upper,
        ok: lower - 1e-6 <= beta && beta <= upper + 1e-6,
    })
}

/// `phi(b) = c^* b c + psi(b)` extracted from an optimal contraction for `beta(id, phi)`.
#[derive(Debug, Clone)]
pub struct RigidityDecomposition {
    pub c: CMat,
    /// `None` when the residual map vanishes.
    pub psi: Option<CpMap>,
    pub beta_id: f64,
    pub smallest_singular_value: f64,
    pub c_invertible: bool,
    /// Smallest eigenvalue of the residual Choi matrix before clamping.
    pub residual_min_eigenvalue: f64,
}

impl RigidityDecomposition {
    /// Choi matrix of the residual map (zero when `psi` is `None`).
    pub fn residual_choi(&self) -> CMat {
        match &self.psi {
            Some(p) => p.choi().clone(),
            None => CMat::zeros(self.c.rows() * self.c.rows(), self.c.rows() * self.c.rows()),
        }
    }
}

pub fn rigidity_decompose(phi: &CpMap, tol: f64) -> Result<RigidityDecomposition> {
    match rigidity_attempt(phi, tol) {
        Err(Error::ResidualNotCp(_)) => rigidity_attempt(phi, tol / 10.0),
        other => other,
    }
}

fn rigidity_attempt(phi: &CpMap, tol: f64) -> Result<RigidityDecomposition> {
    let n = phi.dim_in();
    if phi.dim_out() != n {
        return Err(Error::NotSquareMap(n, phi.dim_out()));
    }
    let id = CpMap::identity(n);
    let res = bures_intertwiner(&id, phi, tol)?;
    let Some(Witness::Intertwiner(w)) = &res.witness else {
        return Err(Error::SolverFailure("missing intertwiner witness".into()));
    };
    let g_id = build_gns(&id);
    let g_phi = build_gns(phi);
    let c = pairing(&g_id, &g_phi, &Intertwiner::new(clip_to_contraction(w))?)?;

    let cc = choi_from_kraus(&KrausSet::new(n, n, vec![c.clone()])?);
    let residual = (phi.choi() - &cc).hermitian_part();
    let eig = herm_eig(&residual)?;
    let scale = phi.choi().max_abs().max(1.0);
    let min_eig = eig.min();
    if min_eig < -tol * scale {
        return Err(Error::ResidualNotCp(min_eig));
    }
    let psi = if eig.max() <= 1e-12 * scale {
        None
    } else {
        let clamped = if min_eig < 0.0 {
            eig.map_values(|v| v.max(0.0)).hermitian_part()
        } else {
            residual
        };
        Some(CpMap::from_choi(n, n, clamped)?)
    };
    let smin = svd(&c).values.last().copied().unwrap_or(0.0);
    Ok(RigidityDecomposition {
        c,
        psi,
        beta_id: res.value,
        smallest_singular_value: smin,
        c_invertible: smin > tol,
        residual_min_eigenvalue: min_eig,
    })
}

/// `||I - c||` for a decomposition; below 1 whenever `beta_id < 1`.
pub fn identity_defect(d: &RigidityDecomposition) -> f64 {
    op_norm(&(&CMat::identity(d.c.rows()) - &d.c))
}
