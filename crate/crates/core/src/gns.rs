//! Finite-dimensional GNS modules.
//!
//! A CP map `phi: M_n -> M_m` with Kraus blocks `K_1, ..., K_r` is represented
//! on the module `E = C^r (x) M_{n x m}` of stacks `x = (x_1, ..., x_r)` with
//! inner product `<x, y> = sum_i x_i^* y_i`, left action `a x = (a x_i)` and
//! right action `x b = (x_i b)`. The Kraus stack is the cyclic vector:
//! `<x, a x> = phi(a)`. Bilinear adjointable maps between two such modules
//! are `C (x) id` for a matrix `C`, which acts on the stack index.

use crate::cpmap::CpMap;
use crate::error::{Error, Result};
use crate::matrix::{null_space, op_norm, psd_sqrt, CMat, C64};

/// Drop tolerance for Gram-Schmidt on generator stacks.
pub const BASIS_DROP_TOL: f64 = 1e-10;

/// Singular-value cutoff for the center system.
pub const CENTER_CUTOFF: f64 = 1e-9;

/// Tolerance on the scalar Gram matrix of a central vector.
pub const CENTER_GRAM_TOL: f64 = 1e-8;

/// Element of `C^r (x) M_{n x m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stack {
    blocks: Vec<CMat>,
}

impl Stack {
    pub fn new(blocks: Vec<CMat>) -> Result<Self> {
        if let Some(first) = blocks.first() {
            if blocks.iter().any(|b| b.shape() != first.shape()) {
                return Err(Error::DimensionMismatch(
                    "stack blocks must share a shape".into(),
                ));
            }
        }
        Ok(Stack { blocks })
    }

    pub fn zeros(len: usize, n: usize, m: usize) -> Self {
        Stack {
            blocks: vec![CMat::zeros(n, m); len],
        }
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

    fn shape(&self) -> (usize, usize) {
        self.blocks.first().map(|b| b.shape()).unwrap_or((0, 0))
    }

    /// Module inner product `sum_i x_i^* y_i`.
    pub fn inner(&self, other: &Stack) -> Result<CMat> {
        if self.len() != other.len() || self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "stacks of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        let m = self.shape().1;
        let mut out = CMat::zeros(m, m);
        for (x, y) in self.blocks.iter().zip(&other.blocks) {
            out += &x.adjoint_mul(y);
        }
        Ok(out)
    }

    /// Module norm `||<x, x>||^(1/2)`.
    pub fn norm(&self) -> f64 {
        self.inner(self).map(|g| op_norm(&g).sqrt()).unwrap_or(0.0)
    }

    /// `a x b`.
    pub fn act(&self, a: &CMat, b: &CMat) -> Stack {
        Stack {
            blocks: self.blocks.iter().map(|x| a.matmul(x).matmul(b)).collect(),
        }
    }

    /// `(sum_j t_ij x_j)_i` for a matrix `t` acting on the stack index.
    pub fn mix(&self, t: &CMat) -> Result<Stack> {
        if t.cols() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} coefficient matrix on a stack of length {}",
                t.rows(),
                t.cols(),
                self.len()
            )));
        }
        let (n, m) = self.shape();
        let blocks = (0..t.rows())
            .map(|i| {
                let mut acc = CMat::zeros(n, m);
                for (j, x) in self.blocks.iter().enumerate() {
                    let c = t[(i, j)];
                    if c != C64::new(0.0, 0.0) {
                        acc += &x.scale(c);
                    }
                }
                acc
            })
            .collect();
        Ok(Stack { blocks })
    }

    /// Direct sum `(x_1, ..., x_r, y_1, ..., y_s)`.
    pub fn concat(&self, other: &Stack) -> Stack {
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        Stack { blocks }
    }

    pub fn sub(&self, other: &Stack) -> Result<Stack> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch("stack lengths differ".into()));
        }
        Ok(Stack {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn scale(&self, s: C64) -> Stack {
        Stack {
            blocks: self.blocks.iter().map(|b| b.scale(s)).collect(),
        }
    }

    fn to_vec(&self) -> Vec<C64> {
        self.blocks.iter().flat_map(|b| b.data().iter().copied()).collect()
    }

    fn from_vec(v: &[C64], len: usize, n: usize, m: usize) -> Stack {
        Stack {
            blocks: (0..len)
                .map(|i| CMat::from_vec(n, m, v[i * n * m..(i + 1) * n * m].to_vec()).expect("sized"))
                .collect(),
        }
    }
}

/// Realization of the GNS module of a CP map.
#[derive(Debug, Clone)]
pub struct GnsModule {
    n: usize,
    m: usize,
    cyclic: Stack,
    basis: Option<Vec<Stack>>,
}

impl GnsModule {
    /// Module over a given Kraus stack (not necessarily minimal, zero blocks allowed).
    pub fn from_stack(n: usize, m: usize, cyclic: Stack) -> Result<Self> {
        if cyclic.is_empty() {
            return Err(Error::ZeroMap);
        }
        if cyclic.shape() != (n, m) {
            return Err(Error::DimensionMismatch(format!(
                "stack blocks are {}x{}, expected {n}x{m}",
                cyclic.shape().0,
                cyclic.shape().1
            )));
        }
        Ok(GnsModule {
            n,
            m,
            cyclic,
            basis: None,
        })
    }

    pub fn dim_in(&self) -> usize {
        self.n
    }

    pub fn dim_out(&self) -> usize {
        self.m
    }

    /// Length `r` of the cyclic stack.
    pub fn rank(&self) -> usize {
        self.cyclic.len()
    }

    pub fn cyclic_vector(&self) -> &Stack {
        &self.cyclic
    }

    pub fn is_minimal(&self) -> bool {
        self.basis.is_some()
    }

    pub fn basis(&self) -> Option<&[Stack]> {
        self.basis.as_deref()
    }

    /// `<x, a x>`.
    pub fn represent(&self, a: &CMat) -> Result<CMat> {
        if a.shape() != (self.n, self.n) {
            return Err(Error::DimensionMismatch(format!(
                "argument is {}x{}, module is over M_{}",
                a.rows(),
                a.cols(),
                self.n
            )));
        }
        self.cyclic
            .inner(&self.cyclic.act(a, &CMat::identity(self.m)))
    }

    /// Same module with `extra` zero blocks appended to the cyclic stack.
    pub fn padded(&self, extra: usize) -> GnsModule {
        GnsModule {
            n: self.n,
            m: self.m,
            cyclic: self.cyclic.concat(&Stack::zeros(extra, self.n, self.m)),
            basis: None,
        }
    }
}

/// Full module `C^r (x) M_{n x m}` with the minimal Kraus stack as cyclic vector.
pub fn build_gns(phi: &CpMap) -> GnsModule {
    GnsModule {
        n: phi.dim_in(),
        m: phi.dim_out(),
        cyclic: Stack {
            blocks: phi.kraus().blocks().to_vec(),
        },
        basis: None,
    }
}

/// Contraction `C (x) id` from the stack module of `G2` to that of `G1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Intertwiner {
    c: CMat,
}

impl Intertwiner {
    pub fn new(c: CMat) -> Result<Self> {
        let norm = op_norm(&c);
        if !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if norm > 1.0 + 1e-9 {
            return Err(Error::NotContraction(norm));
        }
        Ok(Intertwiner { c })
    }

    pub fn matrix(&self) -> &CMat {
        &self.c
    }
}

fn check_pair(g1: &GnsModule, g2: &GnsModule, c: &CMat) -> Result<()> {
    if (g1.n, g1.m) != (g2.n, g2.m) {
        return Err(Error::DimensionMismatch(format!(
            "modules over M_{} -> M_{} and M_{} -> M_{}",
            g1.n, g1.m, g2.n, g2.m
        )));
    }
    if c.shape() != (g1.rank(), g2.rank()) {
        return Err(Error::DimensionMismatch(format!(
            "intertwiner is {}x{}, modules have ranks {} and {}",
            c.rows(),
            c.cols(),
            g1.rank(),
            g2.rank()
        )));
    }
    Ok(())
}

/// `<x_1, (C (x) id) x_2> = sum_ij C_ij K_i^(1)* K_j^(2)`.
pub fn pairing(g1: &GnsModule, g2: &GnsModule, c: &Intertwiner) -> Result<CMat> {
    check_pair(g1, g2, &c.c)?;
    g1.cyclic.inner(&g2.cyclic.mix(&c.c)?)
}

/// Representatives of both maps in `E_1 (+) E_2`: `z_1 = x_1 (+) 0` and
/// `z_2 = C x_2 (+) sqrt(I - C^* C) x_2`.
pub fn defect_embed(g1: &GnsModule, g2: &GnsModule, c: &Intertwiner) -> Result<(Stack, Stack)> {
    check_pair(g1, g2, &c.c)?;
    let r2 = g2.rank();
    let defect = psd_sqrt(&(&CMat::identity(r2) - &c.c.adjoint_mul(&c.c)).hermitian_part())
        .map_err(|_| Error::NotContraction(op_norm(&c.c)))?;
    let z1 = g1.cyclic.concat(&Stack::zeros(r2, g1.n, g1.m));
    let z2 = g2.cyclic.mix(&c.c)?.concat(&g2.cyclic.mix(&defect)?);

    // <z2, a z2> must reproduce phi_2 on the matrix units
    let scale = op_norm(&g2.cyclic.inner(&g2.cyclic)?).max(1.0);
    for p in 0..g2.n {
        for q in 0..g2.n {
            let a = CMat::unit(g2.n, g2.n, p, q);
            let lhs = z2.inner(&z2.act(&a, &CMat::identity(g2.m)))?;
            let rhs = g2.represent(&a)?;
            let err = (lhs - rhs).max_abs();
            if err > 1e-9 * scale {
                return Err(Error::NotContraction(op_norm(&c.c)));
            }
        }
    }
    Ok((z1, z2))
}

/// Orthonormal basis of `span{E_pq x E_st}`, by Gram-Schmidt over the
/// generators in lexicographic `(p, q, s, t)` order.
pub fn minimal_basis(g: &GnsModule) -> GnsModule {
    let (n, m, r) = (g.n, g.m, g.rank());
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for p in 0..n {
        for q in 0..n {
            for s in 0..m {
                for t in 0..m {
                    let gen = g
                        .cyclic
                        .act(&CMat::unit(n, n, p, q), &CMat::unit(m, m, s, t))
                        .to_vec();
                    let norm0 = vec_norm(&gen);
                    if norm0 == 0.0 {
                        continue;
                    }
                    let mut v = gen;
                    for _ in 0..2 {
                        for e in &basis {
                            let proj = vec_dot(e, &v);
                            for (vi, ei) in v.iter_mut().zip(e) {
                                *vi -= proj * ei;
                            }
                        }
                    }
                    let norm = vec_norm(&v);
                    if norm > BASIS_DROP_TOL * norm0.max(1.0) {
                        v.iter_mut().for_each(|z| *z /= norm);
                        basis.push(v);
                    }
                }
            }
        }
    }
    GnsModule {
        n,
        m,
        cyclic: g.cyclic.clone(),
        basis: Some(basis.iter().map(|v| Stack::from_vec(v, r, n, m)).collect()),
    }
}

fn vec_dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn vec_norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// A vector `y` of the minimal module with `b y = y b` for every `b` in `M_n`,
/// normalized so that `<y, y> = I`. Returns `None` if the center is trivial.
pub fn center_unit_vector(g: &GnsModule) -> Result<Option<Stack>> {
    if g.n != g.m {
        return Err(Error::NotSquareMap(g.n, g.m));
    }
    let owned;
    let g = if g.is_minimal() {
        g
    } else {
        owned = minimal_basis(g);
        &owned
    };
    let basis = g.basis().expect("minimal basis computed");
    let n = g.n;
    if basis.is_empty() {
        return Ok(None);
    }
    let id = CMat::identity(n);

    // Columns: coordinates of [E_pq, e_k] stacked over (p, q).
    let d = basis.len();
    let len = g.rank() * n * n;
    let mut system = CMat::zeros(n * n * len, d);
    for (k, e) in basis.iter().enumerate() {
        for p in 0..n {
            for q in 0..n {
                let u = CMat::unit(n, n, p, q);
                let comm = e.act(&u, &id).sub(&e.act(&id, &u))?.to_vec();
                let row0 = (p * n + q) * len;
                for (idx, z) in comm.into_iter().enumerate() {
                    system[(row0 + idx, k)] = z;
                }
            }
        }
    }
    let kernel = null_space(&system, CENTER_CUTOFF);
    if kernel.cols() == 0 {
        return Ok(None);
    }
    let mut y = Stack::zeros(g.rank(), n, n);
    for (k, e) in basis.iter().enumerate() {
        let coef = kernel[(k, 0)];
        for (yb, eb) in y.blocks.iter_mut().zip(&e.blocks) {
            *yb += &eb.scale(coef);
        }
    }
    let gram = y.inner(&y)?;
    let lambda = gram.trace().re / n as f64;
    let dev = (&gram - &CMat::identity(n).scale_re(lambda)).max_abs();
    if !(lambda > 0.0) || dev > CENTER_GRAM_TOL * lambda.max(1.0) {
        return Err(Error::CenterNotScalarGram(dev));
    }
    Ok(Some(y.scale(C64::new(1.0 / lambda.sqrt(), 0.0))))
}
