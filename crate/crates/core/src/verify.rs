//! Instance-wise verification sweeps.
//!
//! These routines exercise the deterministic inequalities (perturbation ball
//! containment and alignment, the localized-eigenvalue cap with exhaustive
//! submatrix radii, interlacing, the row-norm chain, moment and Bernoulli
//! bounds) on randomized instances. They are shared by the acceptance suite
//! and the `verify` CLI subcommand.

use rand::Rng;
use rayon::prelude::*;

use crate::dense::DenseMatrix;
use crate::error::Result;
use crate::heavy_tail::{SlowlyVarying, TailLaw};
use crate::localization::{best_tail, localized_eigenvalue_bound};
use crate::perturbation::{
    check_eigenvector_alignment, check_perturbed_eigenvalue, row_norm_chain_check,
};
use crate::rng::{derive_rng, salt};
use crate::spectral::{dense_eigenvalues, dense_eigh, submatrix_rho_dense, SubmatrixMode};

#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

fn random_symmetric(n: usize, rng: &mut impl Rng) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let v = rng.gen::<f64>() * 2.0 - 1.0;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Ball containment and eigenvector alignment on random gapped instances of
/// size up to `max_n`. Each trial perturbs an exact eigenvector, retrying
/// with a smaller perturbation (or a different eigenvector) until the gap
/// precondition holds, so essentially every trial checks both statements.
pub fn perturbation_sweep(trials: usize, max_n: usize, seed: u64) -> CheckOutcome {
    let results: Vec<(bool, bool, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = derive_rng(seed, t, salt::GENERIC);
            let n = 2 + (rng.gen::<u64>() as usize) % (max_n - 1);
            let h = random_symmetric(n, &mut rng);
            let s = match dense_eigh(&h) {
                Ok(s) => s,
                Err(_) => return (false, false, false),
            };
            let mut delta = 10f64.powf(-(1.0 + 3.0 * rng.gen::<f64>()));
            for _attempt in 0..12 {
                let j = (rng.gen::<u64>() as usize) % n;
                let base = s.eigenvector(j).unwrap();
                let mut v: Vec<f64> = base
                    .iter()
                    .map(|x| x + delta * (rng.gen::<f64>() - 0.5))
                    .collect();
                let nv: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.iter_mut().for_each(|x| *x /= nv);
                let out = match check_perturbed_eigenvalue(&h, &v) {
                    Ok(o) => o,
                    Err(_) => return (true, false, false), // containment failure
                };
                if out.unique_in_ball && out.outside_gap > 1.5 * out.epsilon + 1e-12 {
                    return match check_eigenvector_alignment(&h, &v, out.outside_gap * (1.0 - 1e-12))
                    {
                        Ok(_) => (true, true, true),
                        Err(crate::error::Error::Precondition(_)) => (true, true, false),
                        Err(_) => (true, false, true), // alignment inequality failure
                    };
                }
                delta *= 0.1; // too close to a cluster; perturb less
            }
            (true, true, false)
        })
        .collect();
    let containment_failures = results.iter().filter(|r| !r.0).count();
    let alignment_failures = results.iter().filter(|r| r.0 && !r.1).count();
    let alignments_checked = results.iter().filter(|r| r.2).count();
    CheckOutcome::new(
        "perturbation_sweep",
        containment_failures == 0
            && alignment_failures == 0
            && alignments_checked * 100 >= trials * 99,
        format!(
            "{trials} trials, {alignments_checked} gapped alignments checked, \
             {containment_failures} containment failures, {alignment_failures} alignment failures"
        ),
    )
}

/// The localized-eigenvalue cap with exhaustive submatrix radii: for every
/// eigenpair of every test matrix and every support size L, with eta taken as
/// the pair's own best tail, |lambda| <= (rho_L + sqrt(eta) rho)/sqrt(1-eta)
/// up to 1e-9 slack.
pub fn localized_bound_exhaustive(matrices: usize, max_n: usize, seed: u64) -> CheckOutcome {
    let worst: f64 = (0..matrices as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = derive_rng(seed, t, salt::GENERIC);
            let n = 4 + (rng.gen::<u64>() as usize) % (max_n - 3);
            let h = random_symmetric(n, &mut rng);
            let s = dense_eigh(&h).unwrap();
            let rho = s.spectral_radius_estimate;
            let mut worst_slack = f64::INFINITY;
            for l in 1..=n {
                let rho_l = submatrix_rho_dense(&h, l, SubmatrixMode::Exhaustive).unwrap();
                for k in 0..n {
                    let v = s.eigenvector(k).unwrap();
                    let eta = best_tail(v, l).unwrap().tail_mass.min(1.0 - 1e-15);
                    let bound = localized_eigenvalue_bound(rho_l.min(rho), rho, eta).unwrap();
                    worst_slack = worst_slack.min(bound - s.eigenvalues[k].abs());
                }
            }
            worst_slack
        })
        .reduce(|| f64::INFINITY, f64::min);
    CheckOutcome::new(
        "localized_bound_exhaustive",
        worst >= -1e-9,
        format!("{matrices} matrices (n <= {max_n}), worst slack {worst:.3e}"),
    )
}

/// Interlacing after row/column removal, checked exactly on n <= 20.
pub fn interlacing_check(matrices: usize, seed: u64) -> CheckOutcome {
    let mut failures = 0usize;
    let mut checked = 0usize;
    for t in 0..matrices as u64 {
        let mut rng = derive_rng(seed, t, salt::GENERIC);
        let n = 6 + (rng.gen::<u64>() as usize) % 15;
        let h = random_symmetric(n, &mut rng);
        let s = dense_eigenvalues(&h).unwrap();
        let rho = s[0].abs().max(s[n - 1].abs());
        for k in 2..=4usize.min(n) {
            let mut remove: Vec<usize> = (0..n).collect();
            for _ in 0..(n - (k - 1)) {
                let idx = (rng.gen::<u64>() as usize) % remove.len();
                remove.swap_remove(idx);
            }
            remove.sort_unstable();
            let sub = h.remove_rows_cols(&remove);
            let top = dense_eigenvalues(&sub).unwrap()[0];
            checked += 1;
            if s[k - 1] > top + 1e-9 * rho.max(1.0) {
                failures += 1;
            }
        }
    }
    CheckOutcome::new(
        "interlacing",
        failures == 0 && checked > 0,
        format!("{checked} removals checked, {failures} failures"),
    )
}

/// Exact row-norm chain on matrices with isolated large entries.
pub fn row_norm_chain_sweep(matrices: usize, seed: u64) -> CheckOutcome {
    let mut checked = 0usize;
    let mut failures = 0usize;
    for t in 0..matrices as u64 {
        let mut rng = derive_rng(seed, t, salt::GENERIC);
        let n = 8 + (rng.gen::<u64>() as usize) % 13;
        let mut h = random_symmetric(n, &mut rng);
        // shrink the background and plant distinct isolated spikes
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] *= 0.01;
            }
        }
        let spikes = 1 + (rng.gen::<u64>() as usize) % 3;
        for s in 0..spikes {
            let i = (2 * s) % n;
            let j = (2 * s + n / 2) % n;
            if i != j {
                let v = 10.0 + rng.gen::<f64>() * 40.0;
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        match row_norm_chain_check(&h, 1.0) {
            Ok(_) => checked += 1,
            Err(crate::error::Error::Precondition(_)) => {}
            Err(_) => failures += 1,
        }
    }
    CheckOutcome::new(
        "row_norm_chain",
        failures == 0 && checked > 0,
        format!("{checked} matrices checked, {failures} chain failures"),
    )
}

/// Truncated-moment bound over the (k, x) grid for a spread of laws.
pub fn truncated_moment_grid() -> CheckOutcome {
    let laws: Vec<TailLaw> = vec![
        TailLaw::new(0.8, 1.0, SlowlyVarying::Constant(1.0), false, false),
        TailLaw::new(1.0, 1.0, SlowlyVarying::Constant(1.0), false, false),
        TailLaw::new(2.0, 1.0, SlowlyVarying::Constant(2.0), false, false),
        TailLaw::new(3.0, 1.0, SlowlyVarying::Constant(1.0), false, false),
        TailLaw::new(5.0, 1.0, SlowlyVarying::Constant(1.0), true, true),
        TailLaw::new(1.5, 1.0, SlowlyVarying::LogPower(1.5), false, false),
        TailLaw::new(2.5, 1.0, SlowlyVarying::LogPower(-1.0), false, false),
    ]
    .into_iter()
    .collect::<Result<_>>()
    .unwrap();
    let mut worst_margin = f64::INFINITY;
    let mut violations = 0usize;
    for law in &laws {
        for k in 1..=8u32 {
            for j in 0..=20u32 {
                let x = law.scale() * 2f64.powi(j as i32);
                let (bound, empirical) = law.truncated_moment_bound(k, x).unwrap();
                let margin = bound - empirical;
                worst_margin = worst_margin.min(margin / bound.max(1e-300));
                if empirical > bound * (1.0 + 1e-10) {
                    violations += 1;
                }
            }
        }
    }
    CheckOutcome::new(
        "truncated_moment_grid",
        violations == 0,
        format!(
            "{} laws x 8 orders x 21 levels, {violations} violations, worst relative margin {worst_margin:.3e}",
            laws.len()
        ),
    )
}

/// Empirical Bernoulli deviation frequencies never beat the Bennett-style
/// bound.
pub fn bennett_sweep(trials: usize, seed: u64) -> CheckOutcome {
    let configs = [(200u64, 0.3f64, 0.5f64), (1000, 0.5, 0.2), (500, 0.1, 1.0)];
    let mut detail = String::new();
    let mut ok = true;
    for (m, p, eta) in configs {
        let bound = crate::truncation::bennett_bound(m, p, eta).unwrap();
        let violations: u64 = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = derive_rng(seed ^ m, t, salt::GENERIC);
                let mut sum = 0u64;
                for _ in 0..m {
                    if rng.gen::<f64>() < p {
                        sum += 1;
                    }
                }
                u64::from((sum as f64 / m as f64 - p).abs() > eta * p)
            })
            .sum();
        let freq = violations as f64 / trials as f64;
        if freq > bound {
            ok = false;
        }
        detail.push_str(&format!("(m={m}, p={p}, eta={eta}): freq {freq:.2e} vs bound {bound:.2e}; "));
    }
    CheckOutcome::new("bennett_empirical", ok, detail)
}

/// The fast deterministic suite behind `verify` (no Monte Carlo studies).
pub fn quick_suite(seed: u64) -> Vec<CheckOutcome> {
    vec![
        perturbation_sweep(500, 30, seed),
        localized_bound_exhaustive(10, 10, seed.wrapping_add(1)),
        interlacing_check(20, seed.wrapping_add(2)),
        row_norm_chain_sweep(50, seed.wrapping_add(3)),
        truncated_moment_grid(),
        bennett_sweep(20_000, seed.wrapping_add(4)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_suite_passes() {
        for out in quick_suite(12345) {
            assert!(out.passed, "{}: {}", out.name, out.detail);
        }
    }
}
