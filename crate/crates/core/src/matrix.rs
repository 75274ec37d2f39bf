//! Dense complex matrices and the Hermitian kernel built on them.
//!
//! Everything downstream (Choi matrices, Kraus blocks, module Gram matrices,
//! solver witnesses) is a [`CMat`]. The eigensolver is a cyclic complex Jacobi
//! sweep, and singular values come from one-sided Jacobi, which keeps small
//! singular values accurate enough for null-space extraction.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative tolerance for the Hermiticity check in [`herm_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Matrix unit `E_ij` of shape `rows x cols`.
    pub fn unit(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        let mut m = CMat::zeros(rows, cols);
        m[(i, j)] = ONE;
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMat { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(CMat { rows, cols, data })
    }

    /// Builds a real matrix from rows. Panics on ragged input.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        CMat::from_fn(r, c, |i, j| C64::new(rows[i][j], 0.0))
    }

    /// Builds a complex matrix from rows of `(re, im)` pairs. Panics on ragged input.
    pub fn from_complex(rows: &[&[(f64, f64)]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        CMat::from_fn(r, c, |i, j| C64::new(rows[i][j].0, rows[i][j].1))
    }

    pub fn diag_real(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = CMat::zeros(n, n);
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> CMat {
        CMat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> CMat {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: f64) -> CMat {
        self.scale(C64::new(s, 0.0))
    }

    pub fn matmul(&self, rhs: &CMat) -> CMat {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul shape mismatch: {:?} * {:?}",
            self.shape(),
            rhs.shape()
        );
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `self^* rhs` without materializing the adjoint.
    pub fn adjoint_mul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.rows, rhs.rows, "adjoint_mul shape mismatch");
        let mut out = CMat::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            for i in 0..self.cols {
                let a = self.data[k * self.cols + i].conj();
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }

    pub fn kron(&self, rhs: &CMat) -> CMat {
        let (r1, c1) = self.shape();
        let (r2, c2) = rhs.shape();
        CMat::from_fn(r1 * r2, c1 * c2, |i, j| {
            self[(i / r2, j / c2)] * rhs[(i % r2, j % c2)]
        })
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius inner product `tr(self^* rhs)`.
    pub fn inner(&self, rhs: &CMat) -> C64 {
        assert_eq!(self.shape(), rhs.shape());
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `(A + A^*) / 2`.
    pub fn hermitian_part(&self) -> CMat {
        assert!(self.is_square());
        CMat::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()) * 0.5
        })
    }

    /// Frobenius norm of `A - A^*`.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> CMat {
        CMat::from_fn(rows, cols, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &CMat) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `A^* A` is Hermitian up to rounding; this returns the exactly Hermitian version.
    pub fn gram(&self) -> CMat {
        self.adjoint_mul(self).hermitian_part()
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>10.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

macro_rules! elementwise {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&CMat> for &CMat {
            type Output = CMat;
            fn $method(self, rhs: &CMat) -> CMat {
                assert_eq!(self.shape(), rhs.shape(), "shape mismatch");
                CMat {
                    rows: self.rows,
                    cols: self.cols,
                    data: self.data.iter().zip(&rhs.data).map(|(a, b)| a $op b).collect(),
                }
            }
        }
        impl $tr<CMat> for CMat {
            type Output = CMat;
            fn $method(self, rhs: CMat) -> CMat {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&CMat> for CMat {
            type Output = CMat;
            fn $method(self, rhs: &CMat) -> CMat {
                (&self).$method(rhs)
            }
        }
    };
}

elementwise!(Add, add, +);
elementwise!(Sub, sub, -);

impl AddAssign<&CMat> for CMat {
    fn add_assign(&mut self, rhs: &CMat) {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&CMat> for CMat {
    fn sub_assign(&mut self, rhs: &CMat) {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Mul<&CMat> for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs)
    }
}

impl Mul<CMat> for CMat {
    type Output = CMat;
    fn mul(self, rhs: CMat) -> CMat {
        self.matmul(&rhs)
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.scale_re(-1.0)
    }
}

/// Eigendecomposition `H = U diag(values) U^*` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unitary; column `k` is the eigenvector for `values[k]`.
    pub vectors: CMat,
}

impl HermEig {
    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `U f(diag) U^*`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> CMat {
        let n = self.values.len();
        let u = &self.vectors;
        let fv: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let mut out = CMat::zeros(n, n);
        for (k, &w) in fv.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let a = u[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += a * u[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Applies the unitary Jacobi rotation that annihilates a Hermitian `(p, q)`
/// entry with diagonal pair `(app, aqq)` and off-diagonal `apq`. Returns
/// `(c, s, omega)` describing `V = [[c, s], [-s conj(omega), c conj(omega)]]`.
fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> (f64, f64, C64) {
    let g = apq.norm();
    let omega = apq / g;
    let theta = (aqq - app) / (2.0 * g);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    (c, t * c, omega)
}

/// `M <- M V` restricted to columns `p, q`.
fn rotate_columns(m: &mut CMat, p: usize, q: usize, c: f64, s: f64, omega: C64) {
    let wc = omega.conj();
    for k in 0..m.rows {
        let mp = m[(k, p)];
        let mq = m[(k, q)];
        m[(k, p)] = mp * c - mq * wc * s;
        m[(k, q)] = mp * s + mq * wc * c;
    }
}

/// `M <- V^* M` restricted to rows `p, q`.
fn rotate_rows(m: &mut CMat, p: usize, q: usize, c: f64, s: f64, omega: C64) {
    for k in 0..m.cols {
        let mp = m[(p, k)];
        let mq = m[(q, k)];
        m[(p, k)] = mp * c - mq * omega * s;
        m[(q, k)] = mp * s + mq * omega * c;
    }
}

fn check_hermitian(h: &CMat) -> Result<()> {
    if !h.is_square() {
        return Err(Error::NonSquare(h.rows, h.cols));
    }
    if !h.is_finite() {
        return Err(Error::NonFinite);
    }
    let res = h.hermiticity_residual();
    if res > HERMITIAN_TOL * h.frobenius_norm().max(1.0) {
        return Err(Error::NonHermitian(res));
    }
    Ok(())
}

/// Scales each column so its largest-modulus entry is real and positive.
fn fix_phases(u: &mut CMat) {
    for j in 0..u.cols {
        let col = u.column(j);
        let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            continue;
        }
        let pivot = col
            .iter()
            .position(|z| z.norm() >= max * (1.0 - 1e-12))
            .unwrap_or(0);
        let phase = col[pivot].conj() / col[pivot].norm();
        for i in 0..u.rows {
            u[(i, j)] *= phase;
        }
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi sweeps.
///
/// The input is symmetrized before decomposition; eigenvalues are ascending and
/// each eigenvector has its largest-modulus entry real and positive.
pub fn herm_eig(h: &CMat) -> Result<HermEig> {
    check_hermitian(h)?;
    let n = h.rows;
    let mut a = h.hermitian_part();
    let mut v = CMat::identity(n);
    let scale = a.frobenius_norm();
    if n > 1 && scale > 0.0 {
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)].norm_sqr();
                }
            }
            if off.sqrt() <= 1e-17 * scale {
                break;
            }
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    let g = apq.norm();
                    if g <= 1e-300 || g <= 1e-18 * scale {
                        continue;
                    }
                    let (c, s, omega) = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, apq);
                    rotate_columns(&mut a, p, q, c, s, omega);
                    rotate_rows(&mut a, p, q, c, s, omega);
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                    rotate_columns(&mut v, p, q, c, s, omega);
                    rotated = true;
                }
            }
            if !rotated {
                break;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMat::from_fn(n, n, |i, j| v[(i, order[j])]);
    fix_phases(&mut vectors);
    Ok(HermEig { values, vectors })
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn max_eigenvalue(h: &CMat) -> Result<f64> {
    Ok(herm_eig(h)?.max())
}

/// Operator (spectral) norm: the largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    if m.rows == 0 || m.cols == 0 {
        return 0.0;
    }
    let g = if m.cols <= m.rows {
        m.gram()
    } else {
        m.adjoint().gram()
    };
    match herm_eig(&g) {
        Ok(e) => e.max().max(0.0).sqrt(),
        Err(_) => f64::NAN,
    }
}

/// `lambda_min(H) >= -tol * max(1, ||H||)`.
pub fn is_psd(h: &CMat, tol: f64) -> Result<bool> {
    let e = herm_eig(h)?;
    let norm = e.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    Ok(e.min() >= -tol * norm.max(1.0))
}

/// Tolerance below which negative eigenvalues are clamped in [`psd_sqrt`].
pub const PSD_SQRT_TOL: f64 = 1e-8;

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(h: &CMat) -> Result<CMat> {
    let e = herm_eig(h)?;
    let norm = e.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if e.min() < -PSD_SQRT_TOL * norm.max(1.0) {
        return Err(Error::NotPsd(e.min()));
    }
    Ok(e.map_values(|v| v.max(0.0).sqrt()))
}

/// Singular value decomposition `A = U diag(s) V^*` (thin, `k = min(rows, cols)`).
#[derive(Debug, Clone)]
pub struct Svd {
    /// Descending.
    pub values: Vec<f64>,
    /// `rows x k`; columns for zero singular values are zero.
    pub u: CMat,
    /// `cols x k`.
    pub v: CMat,
}

/// One-sided Jacobi on the columns of a matrix with `rows >= cols`.
/// Returns the rotated columns `W = A V` and the accumulated `V`.
fn one_sided_jacobi(a: &CMat) -> (CMat, CMat) {
    let n = a.cols;
    let mut w = a.clone();
    let mut v = CMat::identity(n);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = ZERO;
                for k in 0..w.rows {
                    let wp = w[(k, p)];
                    let wq = w[(k, q)];
                    alpha += wp.norm_sqr();
                    beta += wq.norm_sqr();
                    gamma += wp.conj() * wq;
                }
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                let (c, s, omega) = jacobi_rotation(alpha, beta, gamma);
                rotate_columns(&mut w, p, q, c, s, omega);
                rotate_columns(&mut v, p, q, c, s, omega);
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

/// Thin SVD by one-sided Jacobi.
pub fn svd(a: &CMat) -> Svd {
    if a.rows < a.cols {
        let t = svd(&a.adjoint());
        return Svd {
            values: t.values,
            u: t.v,
            v: t.u,
        };
    }
    let (w, v) = one_sided_jacobi(a);
    let n = a.cols;
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..w.rows).map(|i| w[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let u = CMat::from_fn(a.rows, n, |i, k| {
        let j = order[k];
        if norms[j] > 0.0 {
            w[(i, j)] / norms[j]
        } else {
            ZERO
        }
    });
    let v = CMat::from_fn(n, n, |i, k| v[(i, order[k])]);
    Svd { values, u, v }
}

/// Orthonormal basis (as columns) of the null space of `a`, keeping directions
/// whose singular value is at most `cutoff * max(1, sigma_max)`.
pub fn null_space(a: &CMat, cutoff: f64) -> CMat {
    let n = a.cols;
    let padded;
    let a = if a.rows < n {
        let mut p = CMat::zeros(n, n);
        p.set_block(0, 0, a);
        padded = p;
        &padded
    } else {
        a
    };
    let (w, v) = one_sided_jacobi(a);
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..w.rows).map(|i| w[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let smax = norms.iter().copied().fold(0.0, f64::max);
    let thresh = cutoff * smax.max(1.0);
    let mut keep: Vec<usize> = (0..n).filter(|&j| norms[j] <= thresh).collect();
    keep.sort_by(|&i, &j| norms[i].total_cmp(&norms[j]));
    CMat::from_fn(n, keep.len(), |i, k| v[(i, keep[k])])
}

/// Projects onto the closed operator-norm unit ball by clipping singular values at 1.
pub fn clip_to_contraction(c: &CMat) -> CMat {
    let s = svd(c);
    if s.values.first().copied().unwrap_or(0.0) <= 1.0 {
        return c.clone();
    }
    let k = s.values.len();
    CMat::from_fn(c.rows, c.cols, |i, j| {
        (0..k)
            .map(|l| s.u[(i, l)] * s.values[l].min(1.0) * s.v[(j, l)].conj())
            .sum()
    })
}

/// A contraction `C` maximizing `Re tr(C M)`: for `M = U S V^*` this is `V U^*`
/// restricted to the nonzero singular directions.
pub fn trace_maximizing_contraction(m: &CMat) -> CMat {
    let s = svd(m);
    let smax = s.values.first().copied().unwrap_or(0.0);
    let k = s.values.len();
    CMat::from_fn(m.cols, m.rows, |i, j| {
        (0..k)
            .filter(|&l| s.values[l] > 1e-14 * smax.max(1e-300))
            .map(|l| s.v[(i, l)] * s.u[(j, l)].conj())
            .sum()
    })
}
