//! Seeded generators for random matrices, CP maps, states and probability vectors.
//!
//! All generators draw from a caller-provided RNG so that every suite is
//! reproducible from a single `u64` seed. Complex Gaussian entries have
//! independent real and imaginary parts with variance 1/2 each.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::cpmap::{CpMap, KrausSet};
use crate::matrix::{clip_to_contraction, CMat, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre matrix with complex unit-normal entries.
pub fn random_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| random_complex(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    random_matrix(rng, n, n).hermitian_part()
}

/// Haar-random unitary: Gram-Schmidt on a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    loop {
        let g = random_matrix(rng, n, n);
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
        let mut ok = true;
        for j in 0..n {
            let mut v = g.column(j);
            for _ in 0..2 {
                for q in &cols {
                    let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= proj * qi;
                    }
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-8 {
                ok = false;
                break;
            }
            v.iter_mut().for_each(|z| *z /= norm);
            cols.push(v);
        }
        if ok {
            return CMat::from_fn(n, n, |i, j| cols[j][i]);
        }
    }
}

/// Random contraction: a Ginibre matrix pulled into the unit ball and scaled
/// by a uniform radius in `[0, 1]`.
pub fn random_contraction<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let c = clip_to_contraction(&random_matrix(rng, rows, cols));
    let radius: f64 = rng.random();
    c.scale_re(radius)
}

pub fn random_kraus_set<R: Rng + ?Sized>(
    rng: &mut R,
    dim_in: usize,
    dim_out: usize,
    rank: usize,
) -> KrausSet {
    let blocks = (0..rank)
        .map(|_| random_matrix(rng, dim_in, dim_out))
        .collect();
    KrausSet::new(dim_in, dim_out, blocks).expect("generated blocks have the declared shape")
}

/// CP map with `rank` independent complex Gaussian Kraus blocks.
pub fn random_cp_map<R: Rng + ?Sized>(
    rng: &mut R,
    dim_in: usize,
    dim_out: usize,
    rank: usize,
) -> CpMap {
    loop {
        if let Ok(phi) = CpMap::from_kraus(random_kraus_set(rng, dim_in, dim_out, rank.max(1))) {
            return phi;
        }
    }
}

/// Density matrix `a a^* / tr(a a^*)` for a Ginibre `a`.
pub fn random_state<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let a = random_matrix(rng, n, n);
    let rho = a.matmul(&a.adjoint()).hermitian_part();
    let t = rho.trace().re;
    rho.scale_re(1.0 / t)
}

/// Uniform point of the probability simplex of the given length.
pub fn random_probability<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}
