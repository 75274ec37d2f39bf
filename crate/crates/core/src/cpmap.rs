//! Completely positive maps `M_n -> M_m`.
//!
//! Conventions used throughout the crate:
//!
//! * Kraus form: `phi(a) = sum_k K_k^* a K_k` with each `K_k` an `n x m` matrix.
//! * Choi matrix: `J(phi) = sum_{i,j} E_ij (x) phi(E_ij)`, an `nm x nm` matrix whose
//!   row index is `i * m + k` for `i < n`, `k < m`. `phi` is CP iff `J` is PSD,
//!   and `rank J` is the minimal number of Kraus blocks.
//! * Ampliation `phi_k` acts entrywise on `M_k(M_n)`; the `M_k` index is the outer
//!   tensor factor, so its Kraus blocks are `I_k (x) K_i`.

use crate::convex::{self, LmiBlock, SdpProblem};
use crate::error::{Error, Result};
use crate::matrix::{herm_eig, op_norm, CMat, C64};

/// Relative eigenvalue cutoff used when extracting a minimal Kraus set.
pub const KRAUS_RANK_TOL: f64 = 1e-10;

/// Relative tolerance of the PSD test at construction.
pub const CHOI_PSD_TOL: f64 = 1e-8;

/// Ordered list of Kraus blocks, each `dim_in x dim_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    dim_in: usize,
    dim_out: usize,
    blocks: Vec<CMat>,
}

impl KrausSet {
    pub fn new(dim_in: usize, dim_out: usize, blocks: Vec<CMat>) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::InvalidArgument("dimensions must be positive".into()));
        }
        for (k, b) in blocks.iter().enumerate() {
            if b.shape() != (dim_in, dim_out) {
                return Err(Error::DimensionMismatch(format!(
                    "Kraus block {k} is {}x{}, expected {dim_in}x{dim_out}",
                    b.rows(),
                    b.cols()
                )));
            }
            if !b.is_finite() {
                return Err(Error::NonFinite);
            }
        }
        Ok(KrausSet {
            dim_in,
            dim_out,
            blocks,
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `sum_k K_k^* a K_k`.
    pub fn apply(&self, a: &CMat) -> Result<CMat> {
        if a.shape() != (self.dim_in, self.dim_in) {
            return Err(Error::DimensionMismatch(format!(
                "argument is {}x{}, map expects {n}x{n}",
                a.rows(),
                a.cols(),
                n = self.dim_in
            )));
        }
        let mut out = CMat::zeros(self.dim_out, self.dim_out);
        for k in &self.blocks {
            out += &k.adjoint_mul(&a.matmul(k));
        }
        Ok(out)
    }

    /// Gram matrix `tr(K_k^* K_l)` of the vectorized blocks.
    pub fn gram(&self) -> CMat {
        let r = self.blocks.len();
        CMat::from_fn(r, r, |k, l| self.blocks[k].inner(&self.blocks[l]))
    }

    /// True when the blocks are linearly independent at relative tolerance `tol`.
    pub fn is_independent(&self, tol: f64) -> bool {
        if self.blocks.is_empty() {
            return true;
        }
        match herm_eig(&self.gram().hermitian_part()) {
            Ok(e) => e.max() > 0.0 && e.min() > tol * e.max(),
            Err(_) => false,
        }
    }
}

/// Choi matrix of a Kraus set: `J = sum_k w_k w_k^*` where the `i`-th length-`m`
/// block of `w_k` is the `i`-th column of `K_k^*`.
pub fn choi_from_kraus(ks: &KrausSet) -> CMat {
    let (n, m) = (ks.dim_in, ks.dim_out);
    let mut j = CMat::zeros(n * m, n * m);
    for k in &ks.blocks {
        let w: Vec<C64> = (0..n * m).map(|idx| k[(idx / m, idx % m)].conj()).collect();
        for a in 0..n * m {
            if w[a] == C64::new(0.0, 0.0) {
                continue;
            }
            for b in 0..n * m {
                j[(a, b)] += w[a] * w[b].conj();
            }
        }
    }
    j
}

/// Minimal Kraus set of a PSD Choi matrix, ordered by descending eigenvalue.
/// Eigenvalues at or below `tol * lambda_max` are dropped.
pub fn kraus_from_choi(j: &CMat, dim_in: usize, dim_out: usize, tol: f64) -> Result<KrausSet> {
    let (n, m) = (dim_in, dim_out);
    if j.shape() != (n * m, n * m) {
        return Err(Error::DimensionMismatch(format!(
            "Choi matrix is {}x{}, expected {s}x{s}",
            j.rows(),
            j.cols(),
            s = n * m
        )));
    }
    let e = herm_eig(j)?;
    let lmax = e.max();
    if lmax <= 0.0 || e.values.iter().all(|v| v.abs() <= f64::MIN_POSITIVE) {
        return Err(if e.min() < 0.0 {
            Error::NotPsd(e.min())
        } else {
            Error::ZeroMap
        });
    }
    if e.min() < -CHOI_PSD_TOL * lmax.max(1.0) {
        return Err(Error::NotPsd(e.min()));
    }
    let mut blocks = Vec::new();
    for idx in (0..e.values.len()).rev() {
        let lambda = e.values[idx];
        if lambda <= tol * lmax {
            break;
        }
        let s = lambda.sqrt();
        blocks.push(CMat::from_fn(n, m, |i, k| {
            (e.vectors[(i * m + k, idx)] * s).conj()
        }));
    }
    KrausSet::new(n, m, blocks)
}

/// Choi matrix `sum_ij E_ij (x) f(E_ij)` of an arbitrary linear map given as a closure.
pub fn choi_from_fn(dim_in: usize, dim_out: usize, f: impl Fn(&CMat) -> CMat) -> CMat {
    let (n, m) = (dim_in, dim_out);
    let mut j = CMat::zeros(n * m, n * m);
    for i in 0..n {
        for l in 0..n {
            let img = f(&CMat::unit(n, n, i, l));
            assert_eq!(img.shape(), (m, m));
            j.set_block(i * m, l * m, &img);
        }
    }
    j
}

/// `phi(a) = sum_ij a_ij J_(i,j)` for a Choi matrix `J` with `m x m` blocks.
fn apply_choi(j: &CMat, n: usize, m: usize, a: &CMat) -> Result<CMat> {
    if a.shape() != (n, n) {
        return Err(Error::DimensionMismatch(format!(
            "argument is {}x{}, map expects {n}x{n}",
            a.rows(),
            a.cols()
        )));
    }
    let mut out = CMat::zeros(m, m);
    for i in 0..n {
        for l in 0..n {
            let coef = a[(i, l)];
            if coef == C64::new(0.0, 0.0) {
                continue;
            }
            for p in 0..m {
                for q in 0..m {
                    out[(p, q)] += coef * j[(i * m + p, l * m + q)];
                }
            }
        }
    }
    Ok(out)
}

/// Nonzero completely positive map `M_n -> M_m`, validated at construction.
#[derive(Debug, Clone)]
pub struct CpMap {
    dim_in: usize,
    dim_out: usize,
    choi: CMat,
    kraus: KrausSet,
}

impl CpMap {
    /// Validates a Choi matrix and extracts its minimal Kraus set.
    pub fn from_choi(dim_in: usize, dim_out: usize, choi: CMat) -> Result<Self> {
        Self::from_choi_with_tol(dim_in, dim_out, choi, KRAUS_RANK_TOL)
    }

    pub fn from_choi_with_tol(
        dim_in: usize,
        dim_out: usize,
        choi: CMat,
        rank_tol: f64,
    ) -> Result<Self> {
        if dim_in == 0 || dim_out == 0 {
            return Err(Error::InvalidArgument("dimensions must be positive".into()));
        }
        let s = dim_in * dim_out;
        if choi.shape() != (s, s) {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix is {}x{}, expected {s}x{s}",
                choi.rows(),
                choi.cols()
            )));
        }
        if !choi.is_finite() {
            return Err(Error::NonFinite);
        }
        let res = choi.hermiticity_residual();
        if res > CHOI_PSD_TOL * choi.frobenius_norm().max(1.0) {
            return Err(Error::NonHermitian(res));
        }
        let choi = choi.hermitian_part();
        let kraus = kraus_from_choi(&choi, dim_in, dim_out, rank_tol)?;
        Ok(CpMap {
            dim_in,
            dim_out,
            choi,
            kraus,
        })
    }

    /// Builds a map from Kraus blocks. Linearly independent blocks (zero blocks
    /// dropped) are kept verbatim; otherwise the set is re-minimized through
    /// the Choi matrix.
    pub fn from_kraus(ks: KrausSet) -> Result<Self> {
        let (n, m) = (ks.dim_in, ks.dim_out);
        let nonzero: Vec<CMat> = ks
            .blocks
            .into_iter()
            .filter(|b| b.max_abs() > 0.0)
            .collect();
        if nonzero.is_empty() {
            return Err(Error::ZeroMap);
        }
        let ks = KrausSet::new(n, m, nonzero)?;
        let choi = choi_from_kraus(&ks);
        if ks.len() <= n * m && ks.is_independent(KRAUS_RANK_TOL) {
            return Ok(CpMap {
                dim_in: n,
                dim_out: m,
                choi,
                kraus: ks,
            });
        }
        Self::from_choi(n, m, choi)
    }

    pub fn from_kraus_blocks(dim_in: usize, dim_out: usize, blocks: Vec<CMat>) -> Result<Self> {
        Self::from_kraus(KrausSet::new(dim_in, dim_out, blocks)?)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_kraus_blocks(n, n, vec![CMat::identity(n)]).expect("identity map is CP")
    }

    /// `a -> v^* a v`.
    pub fn conjugation(v: &CMat) -> Result<Self> {
        Self::from_kraus_blocks(v.rows(), v.cols(), vec![v.clone()])
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    pub fn kraus(&self) -> &KrausSet {
        &self.kraus
    }

    pub fn kraus_rank(&self) -> usize {
        self.kraus.len()
    }

    pub fn apply(&self, a: &CMat) -> Result<CMat> {
        self.kraus.apply(a)
    }

    /// `phi(1)`.
    pub fn unit_image(&self) -> CMat {
        let mut out = CMat::zeros(self.dim_out, self.dim_out);
        for k in self.kraus.blocks() {
            out += &k.adjoint_mul(k);
        }
        out.hermitian_part()
    }

    /// `||phi|| = ||phi(1)||`.
    pub fn cp_norm(&self) -> f64 {
        op_norm(&self.unit_image())
    }

    /// `psi o phi` for `phi = self: M_n -> M_m` and `psi: M_m -> M_p`.
    pub fn then(&self, psi: &CpMap) -> Result<CpMap> {
        compose(psi, self)
    }

    pub fn amplify(&self, k: usize) -> Result<CpMap> {
        amplify(self, k)
    }

    pub fn scale(&self, s: f64) -> Result<CpMap> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "scale factor must be positive, got {s}"
            )));
        }
        let r = s.sqrt();
        Self::from_kraus_blocks(
            self.dim_in,
            self.dim_out,
            self.kraus.blocks().iter().map(|k| k.scale_re(r)).collect(),
        )
    }

    pub fn add(&self, other: &CpMap) -> Result<CpMap> {
        self.check_same_dims(other)?;
        Self::from_choi(self.dim_in, self.dim_out, &self.choi + &other.choi)
    }

    /// The Hermiticity-preserving difference `self - other`.
    pub fn difference(&self, other: &CpMap) -> Result<HermitianMap> {
        self.check_same_dims(other)?;
        HermitianMap::from_choi(self.dim_in, self.dim_out, &self.choi - &other.choi)
    }

    pub fn as_hermitian(&self) -> HermitianMap {
        HermitianMap {
            dim_in: self.dim_in,
            dim_out: self.dim_out,
            choi: self.choi.clone(),
        }
    }

    pub fn cb_norm(&self, tol: f64) -> Result<f64> {
        cb_norm(&self.as_hermitian(), tol)
    }

    pub(crate) fn check_same_dims(&self, other: &CpMap) -> Result<()> {
        if (self.dim_in, self.dim_out) != (other.dim_in, other.dim_out) {
            return Err(Error::DimensionMismatch(format!(
                "M_{} -> M_{} vs M_{} -> M_{}",
                self.dim_in, self.dim_out, other.dim_in, other.dim_out
            )));
        }
        Ok(())
    }
}

/// `psi o phi`, re-minimized through the Choi matrix.
pub fn compose(psi: &CpMap, phi: &CpMap) -> Result<CpMap> {
    if phi.dim_out != psi.dim_in {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose M_{} -> M_{} after M_{} -> M_{}",
            psi.dim_in, psi.dim_out, phi.dim_in, phi.dim_out
        )));
    }
    let mut blocks = Vec::with_capacity(phi.kraus_rank() * psi.kraus_rank());
    for k in phi.kraus.blocks() {
        for l in psi.kraus.blocks() {
            blocks.push(k.matmul(l));
        }
    }
    let ks = KrausSet::new(phi.dim_in, psi.dim_out, blocks)?;
    CpMap::from_choi(phi.dim_in, psi.dim_out, choi_from_kraus(&ks))
}

/// `phi_k: M_k(M_n) -> M_k(M_m)` with Kraus blocks `I_k (x) K_i`.
pub fn amplify(phi: &CpMap, k: usize) -> Result<CpMap> {
    if k == 0 {
        return Err(Error::InvalidArgument("ampliation order must be >= 1".into()));
    }
    if k == 1 {
        return Ok(phi.clone());
    }
    let id = CMat::identity(k);
    CpMap::from_kraus_blocks(
        k * phi.dim_in,
        k * phi.dim_out,
        phi.kraus.blocks().iter().map(|b| id.kron(b)).collect(),
    )
}

/// Hermiticity-preserving linear map held only by its (Hermitian) Choi matrix.
/// Differences of CP maps live here.
#[derive(Debug, Clone)]
pub struct HermitianMap {
    dim_in: usize,
    dim_out: usize,
    choi: CMat,
}

impl HermitianMap {
    pub fn from_choi(dim_in: usize, dim_out: usize, choi: CMat) -> Result<Self> {
        let s = dim_in * dim_out;
        if choi.shape() != (s, s) {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix is {}x{}, expected {s}x{s}",
                choi.rows(),
                choi.cols()
            )));
        }
        if !choi.is_finite() {
            return Err(Error::NonFinite);
        }
        let res = choi.hermiticity_residual();
        if res > CHOI_PSD_TOL * choi.frobenius_norm().max(1.0) {
            return Err(Error::NonHermitian(res));
        }
        Ok(HermitianMap {
            dim_in,
            dim_out,
            choi: choi.hermitian_part(),
        })
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    pub fn apply(&self, a: &CMat) -> Result<CMat> {
        apply_choi(&self.choi, self.dim_in, self.dim_out, a)
    }

    pub fn amplify(&self, k: usize) -> Result<HermitianMap> {
        if k == 0 {
            return Err(Error::InvalidArgument("ampliation order must be >= 1".into()));
        }
        let (n, m) = (self.dim_in, self.dim_out);
        let choi = choi_from_fn(k * n, k * m, |a| {
            let mut out = CMat::zeros(k * m, k * m);
            for s in 0..k {
                for t in 0..k {
                    let img = self
                        .apply(&a.block(s * n, t * n, n, n))
                        .expect("block has map dimensions");
                    out.set_block(s * m, t * m, &img);
                }
            }
            out
        });
        HermitianMap::from_choi(k * n, k * m, choi)
    }

    pub fn cb_norm(&self, tol: f64) -> Result<f64> {
        cb_norm(self, tol)
    }
}

/// Completely bounded norm of a Hermiticity-preserving map.
///
/// Solved as the semidefinite program
/// `min t  s.t.  Z >= J,  Z >= -J,  tr_1(Z) <= t I_m`
/// over Hermitian `Z` on `C^n (x) C^m`, where `tr_1` traces out the input
/// factor. This is the diamond norm of the trace-dual map written in terms of
/// `J(phi)`; for CP maps the optimum is `||phi(1)||` at `Z = J`.
pub fn cb_norm(map: &HermitianMap, tol: f64) -> Result<f64> {
    let (n, m) = (map.dim_in, map.dim_out);
    let s = n * m;
    let j = &map.choi;
    let scale = j.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }

    // Variables: t, then the real parameters of Hermitian Z:
    // diagonal entries (real), and Re/Im of each strictly upper entry.
    let mut params: Vec<(usize, usize, bool)> = Vec::with_capacity(s * s);
    for a in 0..s {
        params.push((a, a, false));
        for b in (a + 1)..s {
            params.push((a, b, false));
            params.push((a, b, true));
        }
    }
    let num_vars = 1 + params.len();

    let mut pos = LmiBlock::new(j.scale_re(-1.0));
    let mut neg = LmiBlock::new(j.clone());
    let mut trace = LmiBlock::new(CMat::zeros(m, m));
    trace.add_term(0, CMat::identity(m));

    for (v, &(a, b, imag)) in params.iter().enumerate() {
        let var = v + 1;
        let mut z = CMat::zeros(s, s);
        if a == b {
            z[(a, a)] = C64::new(1.0, 0.0);
        } else if imag {
            z[(a, b)] = C64::new(0.0, 1.0);
            z[(b, a)] = C64::new(0.0, -1.0);
        } else {
            z[(a, b)] = C64::new(1.0, 0.0);
            z[(b, a)] = C64::new(1.0, 0.0);
        }
        // tr_1(Z)_{kl} = sum_i Z_{(i,k),(i,l)}
        let (ia, ka) = (a / m, a % m);
        let (ib, kb) = (b / m, b % m);
        if ia == ib {
            let mut t = CMat::zeros(m, m);
            t[(ka, kb)] = -z[(a, b)];
            if a != b {
                t[(kb, ka)] = -z[(b, a)];
            }
            trace.add_term(var, t);
        }
        pos.add_term(var, z.clone());
        neg.add_term(var, z);
    }

    let mut objective = vec![0.0; num_vars];
    objective[0] = 1.0;
    let problem = SdpProblem::new(num_vars, objective, vec![pos, neg, trace])?;
    let report = convex::solve_sdp(&problem, tol)
        .map_err(|e| Error::SolverFailure(format!("cb-norm: {e}")))?;
    match report.status {
        convex::SolveStatus::Converged => Ok(report.value),
        other => Err(Error::SolverFailure(format!("cb-norm: status {other:?}"))),
    }
}

/// Lower estimate of the plain operator norm `sup_{||a|| <= 1} ||Phi(a)||` by
/// sampling unitaries (extreme points of the unit ball) and matrix units.
pub fn op_norm_sampled(
    map: &HermitianMap,
    samples: usize,
    rng: &mut impl rand::Rng,
) -> Result<f64> {
    let n = map.dim_in;
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            best = best.max(op_norm(&map.apply(&CMat::unit(n, n, i, j))?));
        }
    }
    best = best.max(op_norm(&map.apply(&CMat::identity(n))?));
    for _ in 0..samples {
        let u = crate::random::random_unitary(rng, n);
        best = best.max(op_norm(&map.apply(&u)?));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_cp_map, seeded};

    fn e(n: usize, i: usize, j: usize) -> CMat {
        CMat::unit(n, n, i, j)
    }

    /// phi_1 and phi_2 of the transpose-gap fixture.
    pub(crate) fn transpose_gap_pair() -> (CpMap, CpMap) {
        let s = (1.5f64).sqrt();
        let h = 1.0 / 2f64.sqrt();
        let x1 = CMat::from_real(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let x2 = CMat::from_real(&[&[0.0, 0.0], &[0.0, 1.0]]);
        let x3 = CMat::from_real(&[&[0.0, s], &[s, 0.0]]);
        let x4 = CMat::from_real(&[&[0.0, h], &[-h, 0.0]]);
        let y3 = CMat::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let y4 = CMat::from_real(&[&[0.0, 1.0], &[-1.0, 0.0]]);
        (
            CpMap::from_kraus_blocks(2, 2, vec![x1, x2, x3, x4]).unwrap(),
            CpMap::from_kraus_blocks(2, 2, vec![y3, y4]).unwrap(),
        )
    }

    #[test]
    fn choi_of_identity_channel() {
        let ks = KrausSet::new(3, 3, vec![CMat::identity(3)]).unwrap();
        let j = choi_from_kraus(&ks);
        let expected = choi_from_fn(3, 3, |a| a.clone());
        assert_eq!(j, expected);
        assert!((j.trace().re - 3.0).abs() < 1e-15);
        let eig = herm_eig(&j).unwrap();
        assert_eq!(eig.values.iter().filter(|v| v.abs() > 1e-12).count(), 1);
    }

    #[test]
    fn choi_of_matrix_units() {
        let ks = KrausSet::new(2, 2, vec![e(2, 0, 0)]).unwrap();
        let j = choi_from_kraus(&ks);
        assert_eq!(j, CMat::unit(4, 4, 0, 0));

        // e12: phi(E_ij) = delta_i1 delta_j1 e22, so J = E_11 (x) E_22.
        let ks = KrausSet::new(2, 2, vec![e(2, 0, 1)]).unwrap();
        let j = choi_from_kraus(&ks);
        assert_eq!(j, e(2, 0, 0).kron(&e(2, 1, 1)));
    }

    #[test]
    fn kraus_extraction() {
        let j = choi_from_kraus(&KrausSet::new(2, 2, vec![CMat::identity(2)]).unwrap());
        let ks = kraus_from_choi(&j, 2, 2, KRAUS_RANK_TOL).unwrap();
        assert_eq!(ks.len(), 1);
        let k = &ks.blocks()[0];
        // identity up to a global phase
        let phase = k[(0, 0)];
        assert!((phase.norm() - 1.0).abs() < 1e-12);
        assert!((k - &CMat::identity(2).scale(phase)).max_abs() < 1e-12);

        let j = e(2, 0, 0).kron(&e(2, 0, 0)) + e(2, 0, 0).kron(&e(2, 1, 1));
        let ks = kraus_from_choi(&j, 2, 2, KRAUS_RANK_TOL).unwrap();
        assert_eq!(ks.len(), 2);
        assert!((choi_from_kraus(&ks) - &j).max_abs() < 1e-14);

        let mut rng = seeded(11);
        let phi = random_cp_map(&mut rng, 2, 3, 3);
        let ks = kraus_from_choi(phi.choi(), 2, 3, KRAUS_RANK_TOL).unwrap();
        assert_eq!(ks.len(), 3);
    }

    #[test]
    fn kraus_extraction_errors() {
        assert_eq!(
            kraus_from_choi(&CMat::zeros(4, 4), 2, 2, KRAUS_RANK_TOL),
            Err(Error::ZeroMap)
        );
        let j = CMat::diag_real(&[1.0, -0.5, 0.0, 0.0]);
        assert!(matches!(
            kraus_from_choi(&j, 2, 2, KRAUS_RANK_TOL),
            Err(Error::NotPsd(_))
        ));
    }

    #[test]
    fn transpose_gap_maps_act_as_stated() {
        let (phi1, phi2) = transpose_gap_pair();
        let a = CMat::from_complex(&[&[(1.0, 0.5), (2.0, -1.0)], &[(0.3, 0.0), (-1.0, 2.0)]]);
        let img = phi2.apply(&a).unwrap();
        let expected = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => a[(1, 1)] * 2.0,
            (1, 1) => a[(0, 0)] * 2.0,
            _ => C64::new(0.0, 0.0),
        });
        assert!((img - expected).max_abs() < 1e-14);

        let img = phi1.apply(&e(2, 0, 0)).unwrap();
        assert!((img - CMat::diag_real(&[1.0, 2.0])).max_abs() < 1e-14);
        let img = phi1.apply(&a).unwrap();
        let expected = CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => a[(0, 0)] + a[(1, 1)] * 2.0,
            (1, 1) => a[(1, 1)] + a[(0, 0)] * 2.0,
            (0, 1) => a[(1, 0)],
            _ => a[(0, 1)],
        });
        assert!((img - expected).max_abs() < 1e-14);
        assert!((phi1.cp_norm() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn identity_and_scaled_norms() {
        let id = CpMap::identity(3);
        let a = CMat::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64));
        assert_eq!(id.apply(&a).unwrap(), a);
        assert!((id.cp_norm() - 1.0).abs() < 1e-15);

        let mut rng = seeded(3);
        let u = crate::random::random_unitary(&mut rng, 3);
        let phi = CpMap::conjugation(&u).unwrap().scale(2.0).unwrap();
        assert!((phi.cp_norm() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn composition_rules() {
        let mut rng = seeded(5);
        let phi = random_cp_map(&mut rng, 2, 3, 2);
        let id_in = CpMap::identity(2);
        let id_out = CpMap::identity(3);
        assert!((compose(&id_out, &phi).unwrap().choi() - phi.choi()).max_abs() < 1e-10);
        assert!((compose(&phi, &id_in).unwrap().choi() - phi.choi()).max_abs() < 1e-10);

        let u = crate::random::random_unitary(&mut rng, 2);
        let v = crate::random::random_unitary(&mut rng, 2);
        let ad_u = CpMap::conjugation(&u).unwrap();
        let ad_v = CpMap::conjugation(&v).unwrap();
        let composed = compose(&ad_v, &ad_u).unwrap();
        let direct = CpMap::conjugation(&u.matmul(&v)).unwrap();
        assert!((composed.choi() - direct.choi()).max_abs() < 1e-12);

        assert!(matches!(
            compose(&phi, &phi),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn ampliation() {
        let mut rng = seeded(7);
        let phi = random_cp_map(&mut rng, 2, 2, 3);
        assert!((amplify(&phi, 1).unwrap().choi() - phi.choi()).max_abs() == 0.0);
        let id2 = amplify(&CpMap::identity(2), 2).unwrap();
        assert!((id2.choi() - CpMap::identity(4).choi()).max_abs() < 1e-15);

        let phi2 = amplify(&phi, 2).unwrap();
        assert!((phi2.cp_norm() - phi.cp_norm()).abs() < 1e-12);
        // blocks are I (x) K_i verbatim
        for (b2, b) in phi2.kraus().blocks().iter().zip(phi.kraus().blocks()) {
            assert_eq!(b2, &CMat::identity(2).kron(b));
        }
        // entrywise action on a block matrix
        let a = crate::random::random_matrix(&mut rng, 4, 4);
        let img = phi2.apply(&a).unwrap();
        for s in 0..2 {
            for t in 0..2 {
                let blk = phi.apply(&a.block(2 * s, 2 * t, 2, 2)).unwrap();
                assert!((img.block(2 * s, 2 * t, 2, 2) - blk).max_abs() < 1e-12);
            }
        }
        // the Choi-level ampliation agrees with the Kraus-level one
        let h2 = phi.as_hermitian().amplify(2).unwrap();
        assert!((h2.choi() - phi2.choi()).max_abs() < 1e-12);
    }

    #[test]
    fn zero_maps_rejected() {
        assert_eq!(
            CpMap::from_kraus_blocks(2, 2, vec![CMat::zeros(2, 2)]).unwrap_err(),
            Error::ZeroMap
        );
        assert_eq!(
            CpMap::from_choi(2, 2, CMat::zeros(4, 4)).unwrap_err(),
            Error::ZeroMap
        );
    }

    #[test]
    fn dependent_kraus_blocks_are_reminimized() {
        let k = CMat::from_real(&[&[1.0, 2.0], &[0.0, 1.0]]);
        let phi = CpMap::from_kraus_blocks(2, 2, vec![k.clone(), k.scale_re(2.0)]).unwrap();
        assert_eq!(phi.kraus_rank(), 1);
        let a = CMat::from_real(&[&[0.3, 1.0], &[1.0, -2.0]]);
        let expected = k.adjoint_mul(&a.matmul(&k)).scale_re(5.0);
        assert!((phi.apply(&a).unwrap() - expected).max_abs() < 1e-12);
    }

    #[test]
    fn cb_norm_examples() {
        assert!((CpMap::identity(2).cb_norm(1e-9).unwrap() - 1.0).abs() < 1e-7);
        let (phi1, phi2) = transpose_gap_pair();
        let diff = phi1.difference(&phi2).unwrap();
        // the difference is the transpose map
        let a = CMat::from_complex(&[&[(1.0, 0.5), (2.0, -1.0)], &[(0.3, 0.0), (-1.0, 2.0)]]);
        assert!((diff.apply(&a).unwrap() - a.transpose()).max_abs() < 1e-14);
        let cb = diff.cb_norm(1e-9).unwrap();
        assert!((cb - 2.0).abs() < 1e-7, "cb = {cb}");
        let mut rng = seeded(1);
        let op = op_norm_sampled(&diff, 200, &mut rng).unwrap();
        assert!((op - 1.0).abs() < 1e-12);
        assert!(cb >= op);
    }

    #[test]
    fn cb_norm_of_cp_map_is_norm_of_unit_image() {
        let mut rng = seeded(19);
        for _ in 0..3 {
            let phi = random_cp_map(&mut rng, 2, 3, 2);
            let cb = phi.cb_norm(1e-9).unwrap();
            assert!((cb - phi.cp_norm()).abs() < 1e-6 * phi.cp_norm().max(1.0));
        }
    }
}
