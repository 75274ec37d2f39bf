//! Acceptance checks. Runs without the libtest harness so that every
//! criterion prints exactly one PASS/FAIL line; the process exits non-zero
//! if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use cp_bures::gns::{build_gns, center_unit_vector};
use cp_bures::random::{random_cp_map, random_hermitian, random_probability, random_unitary, seeded};
use cp_bures::suites::property_suites;
use cp_bures::{
    bound_report, brute_force_upper, bures_extension, bures_id_unitary, bures_intertwiner,
    bures_states_classical, rigidity_decompose, CMat, CpMap, C64,
};
use cp_bures::bures::classical_state_map;
use cp_bures::matrix::op_norm;

const TOL: f64 = 1e-8;
const SEED: u64 = 20_240_601;

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn transpose_gap_pair() -> (CpMap, CpMap) {
    let s = 1.5f64.sqrt();
    let h = 0.5f64.sqrt();
    let x = vec![
        CMat::from_real(&[&[1.0, 0.0], &[0.0, 0.0]]),
        CMat::from_real(&[&[0.0, 0.0], &[0.0, 1.0]]),
        CMat::from_real(&[&[0.0, s], &[s, 0.0]]),
        CMat::from_real(&[&[0.0, h], &[-h, 0.0]]),
    ];
    let y = vec![
        CMat::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]),
        CMat::from_real(&[&[0.0, 1.0], &[-1.0, 0.0]]),
    ];
    (
        CpMap::from_kraus_blocks(2, 2, x).unwrap(),
        CpMap::from_kraus_blocks(2, 2, y).unwrap(),
    )
}

fn corner(i: usize, j: usize) -> CpMap {
    CpMap::conjugation(&CMat::unit(2, 2, i, j)).unwrap()
}

fn transpose_gap() -> Outcome {
    let (phi1, phi2) = transpose_gap_pair();
    let expected = 5.0 - 2f64.sqrt() - 6f64.sqrt();
    let beta = bures_intertwiner(&phi1, &phi2, TOL).map_err(|e| e.to_string())?.value;
    let b = bound_report(&phi1, &phi2, TOL).map_err(|e| e.to_string())?;
    let detail = format!(
        "beta^2 = {:.10} (expected {expected:.10}), cb = {:.8}, level-1 norm = {:.6}",
        beta * beta,
        b.cb,
        b.op_norm
    );
    ensure(
        (beta * beta - expected).abs() <= 1e-4
            && (b.cb - 2.0).abs() <= 1e-4
            && (b.op_norm - 1.0).abs() <= 1e-3
            && b.op_norm < beta * beta
            && beta * beta < b.cb,
        detail,
    )
}

fn classical_states() -> Outcome {
    let mut rng = seeded(SEED);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let len = 1 + k % 4;
        let p = random_probability(&mut rng, len);
        let q = random_probability(&mut rng, len);
        let phi1 = classical_state_map(&p).map_err(|e| e.to_string())?;
        let phi2 = classical_state_map(&q).map_err(|e| e.to_string())?;
        let beta = bures_intertwiner(&phi1, &phi2, TOL).map_err(|e| e.to_string())?.value;
        // closed form written out independently of the library helper
        let overlap: f64 = p.iter().zip(&q).map(|(a, b)| (a * b).sqrt()).sum();
        let closed = (2.0 * (1.0 - overlap).max(0.0)).sqrt();
        let helper = bures_states_classical(&p, &q).map_err(|e| e.to_string())?;
        worst = worst.max((beta - closed).abs()).max((helper - closed).abs());
    }
    ensure(worst <= 1e-5, format!("20 pairs, worst deviation {worst:.2e}"))
}

/// `lambda_max` of a 2x2 Hermitian matrix `[[a, z], [conj z, d]]`.
fn lambda_max_2x2(a: f64, d: f64, z: C64) -> f64 {
    0.5 * (a + d) + (0.25 * (a - d) * (a - d) + z.norm_sqr()).sqrt()
}

fn infimum_not_attained() -> Outcome {
    let (phi1, phi2) = (corner(0, 0), corner(0, 1));

    // Both minimal modules have rank one, so the ball is the unit disk and
    // D(c) = E_11 + E_22 - (c E_12 + conj(c) E_21).
    let steps = 201;
    let mut grid = f64::INFINITY;
    for i in 0..steps {
        for j in 0..steps {
            let c = C64::new(
                -1.0 + 2.0 * i as f64 / (steps - 1) as f64,
                -1.0 + 2.0 * j as f64 / (steps - 1) as f64,
            );
            if c.norm() <= 1.0 {
                grid = grid.min(lambda_max_2x2(1.0, 1.0, -c));
            }
        }
    }
    let grid_beta = grid.sqrt();

    let beta = bures_intertwiner(&phi1, &phi2, TOL).map_err(|e| e.to_string())?.value;

    // Inside the module M_2 itself the unit vectors representing phi_i are
    // x_i = l_i e_1i with |l_i| = 1, and |x_1 - x_2|^2 = |l_1|^2 + |l_2|^2.
    let mut restricted = f64::INFINITY;
    let phases = 64;
    for s in 0..phases {
        for t in 0..phases {
            let l1 = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * s as f64 / phases as f64);
            let l2 = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * t as f64 / phases as f64);
            // d = x_1 - x_2 has first row (l1, -l2), second row zero
            let (d11, d12) = (l1, -l2);
            let gram = lambda_max_2x2(d11.norm_sqr(), d12.norm_sqr(), d11.conj() * d12);
            restricted = restricted.min(gram.sqrt());
        }
    }

    ensure(
        (grid_beta - 1.0).abs() <= 5e-3
            && (beta - 1.0).abs() <= 1e-5
            && (restricted - 2f64.sqrt()).abs() <= 1e-12
            && beta < restricted,
        format!("beta = {beta:.10}, grid oracle {grid_beta:.6}, restricted module {restricted:.12}"),
    )
}

fn unitary_closed_form() -> Outcome {
    let mut rng = seeded(SEED + 1);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let n = 2 + k % 2;
        let u = random_unitary(&mut rng, n);
        let ad = CpMap::conjugation(&u).map_err(|e| e.to_string())?;
        let beta = bures_intertwiner(&CpMap::identity(n), &ad, TOL)
            .map_err(|e| e.to_string())?
            .value;
        let closed = bures_id_unitary(&u).map_err(|e| e.to_string())?;
        worst = worst.max((beta - closed).abs());
    }
    ensure(worst <= 1e-5, format!("20 unitaries on M_2 and M_3, worst deviation {worst:.2e}"))
}

fn formulations_agree() -> Outcome {
    let mut rng = seeded(SEED + 2);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let phi1 = random_cp_map(&mut rng, 2, 2, 1 + k % 3);
        let phi2 = random_cp_map(&mut rng, 2, 2, 1 + (k / 3) % 3);
        let a = bures_intertwiner(&phi1, &phi2, TOL).map_err(|e| e.to_string())?.value;
        let b = bures_extension(&phi1, &phi2, TOL).map_err(|e| e.to_string())?.value;
        worst = worst.max((a - b).abs());
    }
    ensure(worst <= 1e-5, format!("20 pairs, worst difference {worst:.2e}"))
}

fn cb_bounds() -> Outcome {
    let mut rng = seeded(SEED + 3);
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for k in 0..50 {
        let n = 2 + k % 2;
        let phi1 = random_cp_map(&mut rng, n, n, 1 + k % 3);
        let phi2 = random_cp_map(&mut rng, n, n, 1 + (k / 3) % 3);
        let b = bound_report(&phi1, &phi2, TOL).map_err(|e| e.to_string())?;
        let lower = b.cb / (phi1.cp_norm().sqrt() + phi2.cp_norm().sqrt());
        let upper = b.cb.sqrt();
        let margin = (b.beta - (lower - 1e-6)).min(upper + 1e-6 - b.beta);
        worst = worst.min(margin);
        if margin < 0.0 {
            violations += 1;
        }
    }
    ensure(
        violations == 0,
        format!("50 pairs, {violations} violations, smallest margin {worst:.2e}"),
    )
}

fn metric_suites() -> Outcome {
    let report = property_suites(SEED, 50);
    let failed: Vec<String> = report
        .suites
        .iter()
        .filter(|s| !s.passed)
        .map(|s| format!("{} ({} failures, margin {:.2e})", s.name, s.failures, s.worst_margin))
        .collect();
    ensure(
        report.passed,
        if failed.is_empty() {
            format!("{} suites x 50 trials", report.suites.len())
        } else {
            format!("failed: {}", failed.join(", "))
        },
    )
}

fn rigidity() -> Outcome {
    let mut rng = seeded(SEED + 4);
    let mut lines = Vec::new();
    for n in [2, 3] {
        let h = random_hermitian(&mut rng, n);
        let h = h.scale_re(1.0 / op_norm(&h));
        let c0 = &CMat::identity(n).scale_re(0.9) + &h.scale_re(0.05);
        let psi0 = random_cp_map(&mut rng, n, n, 2);
        let psi0 = psi0.scale(0.01 / psi0.cp_norm()).map_err(|e| e.to_string())?;
        let phi = CpMap::conjugation(&c0)
            .and_then(|m| m.add(&psi0))
            .map_err(|e| e.to_string())?;
        let d = rigidity_decompose(&phi, TOL).map_err(|e| e.to_string())?;
        let y = center_unit_vector(&build_gns(&phi)).map_err(|e| e.to_string())?;
        let central_ok = match &y {
            Some(y) => {
                let gram = y.inner(y).map_err(|e| e.to_string())?;
                (gram - CMat::identity(n)).max_abs() <= 1e-8
            }
            None => false,
        };
        if !(d.beta_id < 1.0
            && d.c_invertible
            && d.smallest_singular_value > 1e-3
            && d.residual_min_eigenvalue >= -1e-7
            && central_ok)
        {
            return Err(format!(
                "n = {n}: beta_id {:.4}, smin {:.2e}, residual min eig {:.2e}, central vector {}",
                d.beta_id,
                d.smallest_singular_value,
                d.residual_min_eigenvalue,
                if central_ok { "ok" } else { "missing" }
            ));
        }
        lines.push(format!(
            "n = {n}: beta_id {:.4}, smin {:.3}, residual min eig {:.1e}",
            d.beta_id, d.smallest_singular_value, d.residual_min_eigenvalue
        ));
    }
    let corner_result = rigidity_decompose(&corner(0, 1), TOL);
    let corner_ok = match &corner_result {
        Ok(d) => !(d.c_invertible && d.smallest_singular_value > 1e-3),
        Err(_) => true,
    };
    let corner_detail = match &corner_result {
        Ok(d) => format!("corner map: beta_id {:.4}, smin {:.1e}", d.beta_id, d.smallest_singular_value),
        Err(e) => format!("corner map: {e}"),
    };
    lines.push(corner_detail);
    ensure(corner_ok, lines.join("; "))
}

fn oracle_floor() -> Outcome {
    let mut rng = seeded(SEED + 5);
    let mut worst = f64::INFINITY;
    for k in 0..20 {
        let n = 2 + k % 2;
        let phi1 = random_cp_map(&mut rng, n, n, 1 + k % 3);
        let phi2 = random_cp_map(&mut rng, n, n, 1 + (k / 3) % 3);
        let beta = bures_intertwiner(&phi1, &phi2, TOL).map_err(|e| e.to_string())?.value;
        let upper = brute_force_upper(&phi1, &phi2, 10_000, SEED + k as u64)
            .map_err(|e| e.to_string())?;
        worst = worst.min(upper - beta);
    }
    ensure(
        worst >= -1e-6,
        format!("20 pairs x 10000 samples, smallest (sampled - solver) {worst:.2e}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("transpose gap", transpose_gap),
        ("classical states closed form", classical_states),
        ("infimum not attained in a fixed module", infimum_not_attained),
        ("unitary conjugation closed form", unitary_closed_form),
        ("intertwiner vs extension", formulations_agree),
        ("cb-norm bounds", cb_bounds),
        ("metric and perturbation suites", metric_suites),
        ("rigidity", rigidity),
        ("brute-force oracle floor", oracle_floor),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} [{secs:.1}s] {detail}", k + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {}: FAIL  {name} [{secs:.1}s] {detail}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
