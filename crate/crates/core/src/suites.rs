//! Randomized property suites for a Bures-distance implementation.
//!
//! Every suite draws its own reproducible stream from the run seed, evaluates
//! an inequality or identity with explicit slack on each trial, and records the
//! worst margin (slack minus violation; negative means failure). The distance
//! is injected as a hook so the harness can be pointed at a corrupted
//! implementation to check that it actually detects errors.

use crate::bures::{bures_id_unitary, bures_intertwiner, bures_states_classical, classical_state_map, rigidity_decompose, spectral_problem, Witness};
use crate::cpmap::{cb_norm, compose, CpMap};
use crate::error::Result;
use crate::gns::{build_gns, center_unit_vector};
use crate::matrix::{herm_eig, op_norm, CMat};
use crate::random::{
    random_cp_map, random_hermitian, random_probability, random_state, random_unitary, seeded,
    SeededRng,
};
use rand::Rng;

/// Distance under test.
pub type Distance<'a> = dyn Fn(&CpMap, &CpMap) -> Result<f64> + 'a;

#[derive(Debug, Clone, Copy)]
pub struct SuiteConfig {
    /// Matrix size `n` of `M_n -> M_n` maps.
    pub dim: usize,
    /// Kraus ranks are drawn uniformly from `1..=max_rank`.
    pub max_rank: usize,
    /// Solver tolerance for the reference computations.
    pub tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            dim: 2,
            max_rank: 3,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Smallest slack-minus-violation seen; `+inf` when no trial ran.
    pub worst_margin: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub seed: u64,
    pub trials: usize,
    pub suites: Vec<SuiteOutcome>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn suite(&self, name: &str) -> Option<&SuiteOutcome> {
        self.suites.iter().find(|s| s.name == name)
    }
}

struct Tally {
    name: &'static str,
    trials: usize,
    failures: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            trials: 0,
            failures: 0,
            worst: f64::INFINITY,
        }
    }

    /// Records one trial; errors and NaN count as failures.
    fn record(&mut self, margin: Result<f64>) {
        self.trials += 1;
        let m = match margin {
            Ok(m) if !m.is_nan() => m,
            _ => f64::NEG_INFINITY,
        };
        if m < 0.0 {
            self.failures += 1;
        }
        self.worst = self.worst.min(m);
    }

    fn finish(self) -> SuiteOutcome {
        SuiteOutcome {
            name: self.name,
            trials: self.trials,
            failures: self.failures,
            worst_margin: self.worst,
            passed: self.failures == 0,
        }
    }
}

/// Names of the suites in report order.
pub const SUITE_NAMES: [&str; 14] = [
    "identity",
    "symmetry",
    "triangle",
    "ampliation",
    "composition",
    "perturbation-sum",
    "perturbation-mixture",
    "perturbation-norm",
    "cb-bounds",
    "state-compression",
    "closed-form-states",
    "closed-form-unitary",
    "witness",
    "rigidity",
];

fn stream(seed: u64, suite: usize) -> SeededRng {
    seeded(seed ^ (0x9E37_79B9_7F4A_7C15u64.wrapping_mul(suite as u64 + 1)))
}

fn random_map(rng: &mut SeededRng, cfg: &SuiteConfig) -> CpMap {
    let rank = rng.random_range(1..=cfg.max_rank.max(1));
    random_cp_map(rng, cfg.dim, cfg.dim, rank)
}

/// The state `a -> tr(rho a)` as a CP map `M_k -> M_1`.
pub fn state_map(rho: &CMat) -> Result<CpMap> {
    let e = herm_eig(rho)?;
    let k = rho.rows();
    let blocks = (0..k)
        .filter(|&i| e.values[i] > 0.0)
        .map(|i| CMat::from_fn(k, 1, |r, _| e.vectors[(r, i)] * e.values[i].sqrt()))
        .collect();
    CpMap::from_kraus_blocks(k, 1, blocks)
}

/// Runs all suites against the intertwiner solver.
pub fn property_suites(seed: u64, trials: usize) -> SuiteReport {
    let cfg = SuiteConfig::default();
    let tol = cfg.tol;
    property_suites_with(seed, trials, &cfg, &|a, b| {
        bures_intertwiner(a, b, tol).map(|r| r.value)
    })
}

pub fn property_suites_with(
    seed: u64,
    trials: usize,
    cfg: &SuiteConfig,
    beta: &Distance<'_>,
) -> SuiteReport {
    let mut tallies: Vec<Tally> = SUITE_NAMES.iter().map(|n| Tally::new(n)).collect();
    let mut rngs: Vec<SeededRng> = (0..SUITE_NAMES.len()).map(|i| stream(seed, i)).collect();

    for _ in 0..trials {
        for (idx, (tally, rng)) in tallies.iter_mut().zip(rngs.iter_mut()).enumerate() {
            tally.record(run_trial(idx, rng, cfg, beta));
        }
    }

    let suites: Vec<SuiteOutcome> = tallies.into_iter().map(Tally::finish).collect();
    let passed = suites.iter().all(|s| s.passed);
    SuiteReport {
        seed,
        trials,
        suites,
        passed,
    }
}

fn run_trial(idx: usize, rng: &mut SeededRng, cfg: &SuiteConfig, beta: &Distance<'_>) -> Result<f64> {
    match SUITE_NAMES[idx] {
        "identity" => {
            let phi = random_map(rng, cfg);
            Ok(1e-6 - beta(&phi, &phi)?)
        }
        "symmetry" => {
            let (phi, psi) = (random_map(rng, cfg), random_map(rng, cfg));
            Ok(1e-6 - (beta(&phi, &psi)? - beta(&psi, &phi)?).abs())
        }
        "triangle" => {
            let (phi, chi) = (random_map(rng, cfg), random_map(rng, cfg));
            let psi = random_map(rng, cfg);
            let mid = phi.add(&chi)?.scale(0.5)?;
            let d = beta(&phi, &chi)?;
            let via_random = beta(&phi, &psi)? + beta(&psi, &chi)? + 1e-5 - d;
            let via_mid = beta(&phi, &mid)? + beta(&mid, &chi)? + 1e-5 - d;
            Ok(via_random.min(via_mid))
        }
        "ampliation" => {
            let (phi, psi) = (random_map(rng, cfg), random_map(rng, cfg));
            let d1 = beta(&phi, &psi)?;
            let d2 = beta(&phi.amplify(2)?, &psi.amplify(2)?)?;
            Ok(1e-4 - (d1 - d2).abs())
        }
        "composition" => {
            let (phi1, phi2) = (random_map(rng, cfg), random_map(rng, cfg));
            let (psi1, psi2) = (random_map(rng, cfg), random_map(rng, cfg));
            let lhs = beta(&compose(&psi1, &phi1)?, &compose(&psi2, &phi2)?)?;
            let rhs = phi1.cp_norm().sqrt() * beta(&psi1, &psi2)?
                + psi2.cp_norm().sqrt() * beta(&phi1, &phi2)?;
            Ok(rhs + 1e-5 - lhs)
        }
        "perturbation-sum" => {
            let (phi1, phi2) = (random_map(rng, cfg), random_map(rng, cfg));
            Ok(phi2.cp_norm().sqrt() + 1e-6 - beta(&phi1, &phi1.add(&phi2)?)?)
        }
        "perturbation-mixture" => {
            let (phi1, phi2) = (random_map(rng, cfg), random_map(rng, cfg));
            let eps: f64 = rng.random_range(0.01..0.99);
            let mix = phi1.scale(eps)?.add(&phi2.scale(1.0 - eps)?)?;
            let lhs = (beta(&phi1, &phi2)? - beta(&phi1, &mix)?).abs();
            let rhs = eps.sqrt() * (phi1.cp_norm().sqrt() + phi2.cp_norm().sqrt());
            Ok(rhs + 1e-6 - lhs)
        }
        "perturbation-norm" => {
            // normalize so that phi_i(1) <= 1
            let sub = |rng: &mut SeededRng| -> Result<CpMap> {
                let phi = random_map(rng, cfg);
                let f: f64 = rng.random_range(0.3..1.0);
                phi.scale(f / phi.cp_norm())
            };
            let phi1 = sub(rng)?;
            let phi2 = sub(rng)?;
            let lhs = (phi1.cp_norm() - phi2.cp_norm()).abs();
            Ok(2.0 * beta(&phi1, &phi2)? + 1e-6 - lhs)
        }
        "cb-bounds" => {
            let (phi1, phi2) = (random_map(rng, cfg), random_map(rng, cfg));
            let b = beta(&phi1, &phi2)?;
            let cb = cb_norm(&phi1.difference(&phi2)?, cfg.tol)?;
            let lower = cb / (phi1.cp_norm().sqrt() + phi2.cp_norm().sqrt());
            let upper = cb.sqrt();
            Ok((b - lower + 1e-6).min(upper + 1e-6 - b))
        }
        "state-compression" => {
            let (phi, psi) = (random_map(rng, cfg), random_map(rng, cfg));
            let k = rng.random_range(1..=2usize);
            let sigma = state_map(&random_state(rng, k * cfg.dim))?;
            let lhs = beta(
                &compose(&sigma, &phi.amplify(k)?)?,
                &compose(&sigma, &psi.amplify(k)?)?,
            )?;
            Ok(beta(&phi, &psi)? + 1e-5 - lhs)
        }
        "closed-form-states" => {
            let len = rng.random_range(1..=4usize);
            let p = random_probability(rng, len);
            let q = random_probability(rng, len);
            let exact = bures_states_classical(&p, &q)?;
            let got = beta(&classical_state_map(&p)?, &classical_state_map(&q)?)?;
            Ok(1e-5 - (got - exact).abs())
        }
        "closed-form-unitary" => {
            let u = random_unitary(rng, cfg.dim);
            let exact = bures_id_unitary(&u)?;
            let got = beta(&CpMap::identity(cfg.dim), &CpMap::conjugation(&u)?)?;
            Ok(1e-5 - (got - exact).abs())
        }
        "witness" => {
            let (phi, psi) = (random_map(rng, cfg), random_map(rng, cfg));
            let r = bures_intertwiner(&phi, &psi, cfg.tol)?;
            let Some(Witness::Intertwiner(c)) = &r.witness else {
                return Ok(f64::NEG_INFINITY);
            };
            let p = spectral_problem(&build_gns(&phi), &build_gns(&psi))?;
            let at_witness = p.value_at(c).max(0.0).sqrt();
            let ball = 1e-8 - (op_norm(c) - 1.0).max(0.0);
            Ok((r.report.gap + 1e-12 - (at_witness - r.value).abs()).min(ball))
        }
        "rigidity" => rigidity_trial(rng, cfg),
        _ => unreachable!("unknown suite"),
    }
}

/// `phi(b) = c0^* b c0 + psi0(b)` near the identity; when the decomposition
/// reports `beta_id < 1`, it must reconstruct `phi` and the minimal module
/// must contain a central unit vector.
fn rigidity_trial(rng: &mut SeededRng, cfg: &SuiteConfig) -> Result<f64> {
    let n = cfg.dim;
    let h = random_hermitian(rng, n);
    let c0 = &CMat::identity(n).scale_re(0.9) + &h.scale_re(0.05 / op_norm(&h));
    let small = random_cp_map(rng, n, n, 2);
    let psi0 = small.scale(0.01 / small.cp_norm())?;
    let phi = CpMap::conjugation(&c0)?.add(&psi0)?;
    let d = rigidity_decompose(&phi, cfg.tol)?;
    if d.beta_id >= 1.0 - 1e-3 {
        return Ok(0.0);
    }
    let mut worst = f64::INFINITY;
    for p in 0..n {
        for q in 0..n {
            let b = CMat::unit(n, n, p, q);
            let mut rebuilt = d.c.adjoint_mul(&b.matmul(&d.c));
            if let Some(psi) = &d.psi {
                rebuilt += &psi.apply(&b)?;
            }
            worst = worst.min(1e-8 - (rebuilt - phi.apply(&b)?).max_abs());
        }
    }
    worst = worst.min(d.residual_min_eigenvalue + 1e-7);
    worst = worst.min(if d.c_invertible { 1.0 } else { -1.0 });
    let center = center_unit_vector(&build_gns(&phi))?;
    worst = worst.min(if center.is_some() { 1.0 } else { -1.0 });
    Ok(worst)
}
