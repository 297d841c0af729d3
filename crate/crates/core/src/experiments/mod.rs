//! Config-driven Monte Carlo harness.
//!
//! Each study samples replicas in parallel (one derived generator per
//! replica, so results are bit-identical at any thread count), aggregates
//! order-independently, and evaluates its pass/fail checks at the tolerance
//! bands fixed here. Summaries echo their full config; nothing is reported
//! without provenance.

pub mod config_file;
pub mod persist;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{largest_entries, row_tail_sum, sample_matrix, BandPattern, PatternKind};
use crate::error::{Error, Result};
use crate::extremes::{poisson_count_test, transformed_spacings_test, PointProcessSample};
use crate::heavy_tail::{
    truncated_sum_concentration, Regime, RegimeParams, SlowlyVarying, SumWindow, TailLaw,
};
use crate::localization::delocalization_scan;
use crate::perturbation::entry_eigen_records;
use crate::spectral::{
    dense_eigenvalues, lanczos_both_ends, lanczos_topk, semicircle_ks, WhichEnd,
};
use crate::truncation::{
    chebyshev_tail, moment_bound_rhs, trace_power_moment, truncate_matrix, TruncationSpec,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Subcritical,
    Supercritical,
    Semicircle,
    Poisson,
    Moments,
    TailSums,
    Perturbation,
}

impl StudyKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "subcritical" => Ok(Self::Subcritical),
            "supercritical" => Ok(Self::Supercritical),
            "semicircle" => Ok(Self::Semicircle),
            "poisson" => Ok(Self::Poisson),
            "moments" => Ok(Self::Moments),
            "tailsums" => Ok(Self::TailSums),
            "perturbation" => Ok(Self::Perturbation),
            other => Err(Error::Config(format!("unknown study kind '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Subcritical => "subcritical",
            Self::Supercritical => "supercritical",
            Self::Semicircle => "semicircle",
            Self::Poisson => "poisson",
            Self::Moments => "moments",
            Self::TailSums => "tailsums",
            Self::Perturbation => "perturbation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalizationParams {
    /// Support-size exponent: L = floor(N^c).
    pub c: f64,
    /// Upper limit of the localization masses scanned, below 1/2.
    pub eta0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    pub gamma: f64,
    pub gamma_prime: f64,
    pub gamma_double_prime: f64,
    pub kappa: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowParams {
    pub low: Option<f64>,
    pub high: f64,
    pub epsilon: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: StudyKind,
    pub n: usize,
    pub mu: f64,
    pub alpha: f64,
    pub scale: f64,
    pub slowly_varying: SlowlyVarying,
    pub symmetrized: bool,
    pub variance_normalized: bool,
    pub pattern: PatternKind,
    pub replicas: usize,
    pub top_k: usize,
    /// Root seed; mandatory, no ambient entropy anywhere.
    pub seed: u64,
    pub out_dir: Option<String>,
    pub tol: f64,
    pub max_iter: usize,
    pub dense_limit: usize,
    /// Count threshold t for the point-process test.
    pub threshold: f64,
    /// Number of top points feeding the transformed-spacings test.
    pub spacings_k: usize,
    pub localization: Option<LocalizationParams>,
    pub truncation: Option<TruncationParams>,
    pub n_grid: Vec<usize>,
    pub s_grid: Vec<u32>,
    pub window: Option<WindowParams>,
}

impl ExperimentConfig {
    pub fn new(kind: StudyKind, n: usize, mu: f64, alpha: f64, replicas: usize, seed: u64) -> Self {
        Self {
            kind,
            n,
            mu,
            alpha,
            scale: 1.0,
            slowly_varying: SlowlyVarying::Constant(1.0),
            symmetrized: true,
            variance_normalized: false,
            pattern: PatternKind::CyclicBand,
            replicas,
            top_k: 5,
            seed,
            out_dir: None,
            tol: 1e-8,
            max_iter: 500,
            dense_limit: crate::ensemble::DEFAULT_DENSE_LIMIT,
            threshold: 1.0,
            spacings_k: 5,
            localization: None,
            truncation: None,
            n_grid: Vec::new(),
            s_grid: Vec::new(),
            window: None,
        }
    }

    pub fn law(&self) -> Result<TailLaw> {
        TailLaw::new(
            self.alpha,
            self.scale,
            self.slowly_varying,
            self.symmetrized,
            self.variance_normalized,
        )
    }

    pub fn band_pattern(&self) -> Result<BandPattern> {
        BandPattern::build(self.n, self.mu, self.pattern)
    }

    fn validate_common(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::Config("replicas must be >= 1".into()));
        }
        // symmetric distribution is part of the model hypotheses once the
        // tail admits a first moment relative to the band
        if self.alpha >= 1.0 + 1.0 / self.mu && !self.symmetrized {
            return Err(Error::Config(format!(
                "alpha = {} >= 1 + 1/mu requires a symmetrized law",
                self.alpha
            )));
        }
        Ok(())
    }

    fn require_regime(&self, want: Regime) -> Result<RegimeParams> {
        let params = RegimeParams::new(self.mu, self.alpha)?;
        if params.regime != want {
            return Err(Error::Config(format!(
                "study needs the {want:?} regime but alpha = {} vs threshold {} puts it in {:?}",
                self.alpha, params.threshold, params.regime
            )));
        }
        Ok(params)
    }
}

// ---------------------------------------------------------------------------
// Records, aggregates, checks
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubcriticalRecord {
    pub replica: u64,
    /// lambda_k / |a_{i_k j_k}| for the top entries, rank-aligned.
    pub ratios: Vec<f64>,
    /// Two-coordinate overlaps; None when the ranked entry is diagonal
    /// (the two-coordinate prediction needs distinct coordinates).
    pub overlaps: Vec<Option<f64>>,
    /// Positive eigenvalues rescaled by b_N, descending.
    pub eig_points: Vec<f64>,
    /// Ranked entry moduli rescaled by b_N, descending.
    pub entry_points: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupercriticalRecord {
    pub replica: u64,
    /// lambda_1 / N^{mu/2}; None when the solver failed on this replica.
    pub top_edge: Option<f64>,
    /// |lambda_min| / N^{mu/2}.
    pub bottom_edge: Option<f64>,
    pub flagged_localized: bool,
    pub flagged_successive: bool,
    pub min_best_tail: Option<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemicircleRecord {
    pub replica: u64,
    pub ks: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoissonRecord {
    pub replica: u64,
    pub eig_points: Vec<f64>,
    pub entry_points: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCell {
    pub n: usize,
    pub s: u32,
    pub gamma: f64,
    pub gamma_prime: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// log RHS at fitted constant 1.
    pub rhs_log: f64,
    /// estimate / RHS(constant = 1).
    pub ratio: f64,
    pub s_within_budget: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormExceedanceRecord {
    pub replica: u64,
    pub norm: Option<f64>,
    pub exceeded: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSumRecord {
    pub n: usize,
    pub part: String,
    pub predicted_exponent: f64,
    pub exceedance_frequency: f64,
    pub mean_sum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationRecord {
    pub replica: u64,
    pub ratios: Vec<f64>,
    pub vector_distances: Vec<f64>,
    pub predicted_residual_over_scale: Vec<f64>,
    pub row_norm_gap: Option<f64>,
    pub isolated_rows: bool,
    pub small_diagonal: bool,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StudyRecords {
    Subcritical { rows: Vec<SubcriticalRecord> },
    Supercritical { rows: Vec<SupercriticalRecord> },
    Semicircle { rows: Vec<SemicircleRecord> },
    Poisson { rows: Vec<PoissonRecord> },
    Moments { cells: Vec<MomentCell>, exceedance: Vec<NormExceedanceRecord> },
    TailSums { rows: Vec<TailSumRecord> },
    Perturbation { rows: Vec<PerturbationRecord> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub name: String,
    pub value: f64,
}

/// One configured assertion with its tolerance band, evaluated at run time.
/// `observed` is None when the statistic could not be computed (which fails
/// the check); open band sides are None.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyCheck {
    pub name: String,
    pub observed: Option<f64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub passed: bool,
}

impl StudyCheck {
    fn make(name: &str, observed: f64, lo: Option<f64>, hi: Option<f64>) -> Self {
        let obs = observed.is_finite().then_some(observed);
        let passed = match obs {
            Some(v) => lo.map_or(true, |l| v >= l) && hi.map_or(true, |h| v <= h),
            None => false,
        };
        Self { name: name.to_string(), observed: obs, lo, hi, passed }
    }

    fn band(name: &str, observed: f64, lo: f64, hi: f64) -> Self {
        Self::make(name, observed, Some(lo), Some(hi))
    }

    fn at_most(name: &str, observed: f64, hi: f64) -> Self {
        Self::make(name, observed, None, Some(hi))
    }

    fn at_least(name: &str, observed: f64, lo: f64) -> Self {
        Self::make(name, observed, Some(lo), None)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySummary {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub records: StudyRecords,
    pub aggregates: Vec<Aggregate>,
    pub checks: Vec<StudyCheck>,
    pub wall_ms: u64,
    pub solver_iterations: u64,
}

impl StudySummary {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn aggregate(&self, name: &str) -> Option<f64> {
        self.aggregates.iter().find(|a| a.name == name).map(|a| a.value)
    }

    pub fn check(&self, name: &str) -> Option<&StudyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn median_finite(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        f64::NAN
    } else {
        crate::stats::median(&v)
    }
}

/// Record an aggregate, skipping statistics that could not be computed
/// (JSON has no encoding for non-finite values).
fn push_aggregate(aggregates: &mut Vec<Aggregate>, name: &str, value: f64) {
    if value.is_finite() {
        aggregates.push(Aggregate { name: name.to_string(), value });
    }
}

fn run_parallel<T: Send>(replicas: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..replicas as u64).into_par_iter().map(f).collect()
}

/// Dispatch on the configured study kind.
pub fn run_study(config: &ExperimentConfig) -> Result<StudySummary> {
    match config.kind {
        StudyKind::Subcritical => run_subcritical_study(config),
        StudyKind::Supercritical => run_supercritical_study(config),
        StudyKind::Semicircle => run_semicircle_study(config),
        StudyKind::Poisson => run_poisson_study(config),
        StudyKind::Moments => run_moment_study(config),
        StudyKind::TailSums => run_tailsum_study(config),
        StudyKind::Perturbation => run_perturbation_study(config),
    }
}

// ---------------------------------------------------------------------------
// Subcritical: eigenvalue/entry coupling and two-coordinate eigenvectors
// ---------------------------------------------------------------------------

struct SolveOutcome {
    record: SubcriticalRecord,
    iterations: u64,
}

fn subcritical_replica(
    config: &ExperimentConfig,
    pattern: &BandPattern,
    law: &TailLaw,
    b_n: f64,
    replica: u64,
) -> SolveOutcome {
    let m = sample_matrix(pattern, law, config.seed, replica);
    let k = config.top_k;
    let failed = |why: &str| {
        let _ = why;
        SolveOutcome {
            record: SubcriticalRecord {
                replica,
                ratios: vec![],
                overlaps: vec![],
                eig_points: vec![],
                entry_points: vec![],
                converged: false,
            },
            iterations: 0,
        }
    };
    let ranked = match largest_entries(&m, k) {
        Ok(r) => r,
        Err(_) => return failed("ranking"),
    };
    let summary = match lanczos_topk(&m, k, WhichEnd::LargestAlgebraic, config.tol, config.max_iter)
    {
        Ok(s) => s,
        Err(_) => return failed("solver"),
    };
    let mut ratios = Vec::with_capacity(k);
    let mut overlaps = Vec::with_capacity(k);
    for t in 0..k.min(summary.eigenvalues.len()) {
        let e = &ranked[t];
        ratios.push(summary.eigenvalues[t] / e.modulus);
        let overlap = if e.i == e.j {
            None
        } else {
            summary.eigenvector(t).and_then(|v| {
                crate::localization::two_coord_overlap(v, e.i as usize, e.j as usize, e.sign).ok()
            })
        };
        overlaps.push(overlap);
    }
    let eig_points: Vec<f64> = summary
        .eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|l| l / b_n)
        .collect();
    let entry_points: Vec<f64> = ranked.iter().map(|e| e.modulus / b_n).collect();
    SolveOutcome {
        record: SubcriticalRecord {
            replica,
            ratios,
            overlaps,
            eig_points,
            entry_points,
            converged: summary.converged,
        },
        iterations: summary.iterations as u64,
    }
}

pub fn run_subcritical_study(config: &ExperimentConfig) -> Result<StudySummary> {
    let started = std::time::Instant::now();
    config.validate_common()?;
    config.require_regime(Regime::Subcritical)?;
    let law = config.law()?;
    let pattern = config.band_pattern()?;
    let b_n = law.norming_constant(pattern.independent_entry_count())?;

    let outcomes = run_parallel(config.replicas, |r| {
        subcritical_replica(config, &pattern, &law, b_n, r)
    });
    let solver_iterations: u64 = outcomes.iter().map(|o| o.iterations).sum();
    let rows: Vec<SubcriticalRecord> = outcomes.into_iter().map(|o| o.record).collect();

    let mut aggregates = Vec::new();
    let mut checks = Vec::new();
    let k_report = config.top_k.min(3);
    for t in 0..k_report {
        let med = median_finite(rows.iter().filter_map(|r| r.ratios.get(t).copied()));
        push_aggregate(&mut aggregates, &format!("median_ratio_k{}", t + 1), med);
        let (lo, hi) = if t == 0 { (0.9, 1.1) } else { (0.85, 1.15) };
        checks.push(StudyCheck::band(
            &format!("median_ratio_k{}", t + 1),
            med,
            lo,
            hi,
        ));
    }
    let overlap_hits = rows
        .iter()
        .filter_map(|r| r.overlaps.first().copied().flatten())
        .filter(|o| *o >= 0.9)
        .count() as f64;
    let overlap_freq = overlap_hits / rows.len() as f64;
    push_aggregate(&mut aggregates, "overlap_k1_ge_0.9_freq", overlap_freq);
    checks.push(StudyCheck::at_least("overlap_k1_ge_0.9_freq", overlap_freq, 0.8));

    append_point_process_stats(
        &mut aggregates,
        &mut checks,
        config,
        law.alpha(),
        rows.iter().map(|r| r.eig_points.clone()),
        "eig",
        false,
    );

    Ok(StudySummary {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        records: StudyRecords::Subcritical { rows },
        aggregates,
        checks,
        wall_ms: started.elapsed().as_millis() as u64,
        solver_iterations,
    })
}

/// Count/dispersion and pooled-spacings statistics for a stream of per-replica
/// rescaled point lists. When `checked` is set, the acceptance bands are
/// attached as checks; otherwise the numbers are reported as aggregates only.
fn append_point_process_stats(
    aggregates: &mut Vec<Aggregate>,
    checks: &mut Vec<StudyCheck>,
    config: &ExperimentConfig,
    alpha: f64,
    points: impl Iterator<Item = Vec<f64>>,
    tag: &str,
    checked: bool,
) {
    let samples: Vec<PointProcessSample> = points
        .filter_map(|p| PointProcessSample::new(p, alpha).ok())
        .collect();
    if samples.len() >= 30 {
        if let Ok(ct) = poisson_count_test(&samples, config.threshold) {
            push_aggregate(aggregates, &format!("{tag}_mean_count"), ct.mean_count);
            push_aggregate(aggregates, &format!("{tag}_dispersion"), ct.dispersion);
            push_aggregate(aggregates, &format!("{tag}_chi_square"), ct.chi_square);
            if checked {
                checks.push(StudyCheck::band(&format!("{tag}_mean_count"), ct.mean_count, 0.8, 1.2));
                checks.push(StudyCheck::band(&format!("{tag}_dispersion"), ct.dispersion, 0.8, 1.2));
            }
        }
        let enough: Vec<PointProcessSample> = samples
            .iter()
            .filter(|s| s.points().len() >= config.spacings_k + 1)
            .cloned()
            .collect();
        if enough.len() >= 30 {
            if let Ok(ks) = transformed_spacings_test(&enough, config.spacings_k) {
                push_aggregate(aggregates, &format!("{tag}_spacings_ks"), ks);
                if checked {
                    checks.push(StudyCheck::at_most(&format!("{tag}_spacings_ks"), ks, 0.1));
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Supercritical: edge scaling and the delocalization scan
// ---------------------------------------------------------------------------

pub fn run_supercritical_study(config: &ExperimentConfig) -> Result<StudySummary> {
    let started = std::time::Instant::now();
    config.validate_common()?;
    config.require_regime(Regime::Supercritical)?;
    if !config.variance_normalized {
        return Err(Error::Config(
            "the supercritical study needs a variance-normalized law (unit second moment)".into(),
        ));
    }
    let law = config.law()?;
    let pattern = config.band_pattern()?;
    let edge_scale = (config.n as f64).powf(config.mu / 2.0);

    let outcomes: Vec<(SupercriticalRecord, u64)> = run_parallel(config.replicas, |replica| {
        let m = sample_matrix(&pattern, &law, config.seed, replica);
        let failed = SupercriticalRecord {
            replica,
            top_edge: None,
            bottom_edge: None,
            flagged_localized: false,
            flagged_successive: false,
            min_best_tail: None,
            converged: false,
        };
        let summary =
            match lanczos_both_ends(&m, config.top_k, config.top_k, config.tol, config.max_iter) {
                Ok(s) => s,
                Err(_) => return (failed, 0),
            };
        let mut rec = SupercriticalRecord {
            replica,
            top_edge: summary.eigenvalues.first().map(|t| t / edge_scale),
            bottom_edge: summary.eigenvalues.last().map(|b| b.abs() / edge_scale),
            flagged_localized: false,
            flagged_successive: false,
            min_best_tail: None,
            converged: summary.converged,
        };
        let iters = summary.iterations as u64;
        if let Some(loc) = config.localization {
            if let Ok(report) = delocalization_scan(&summary, &m, loc.c, loc.eta0) {
                rec.flagged_localized = report.any_flagged_localized;
                rec.flagged_successive = report.any_flagged_successive;
                rec.min_best_tail = report
                    .records
                    .iter()
                    .map(|r| r.best_tail)
                    .fold(None, |acc: Option<f64>, x| {
                        Some(acc.map_or(x, |a| a.min(x)))
                    });
            }
        }
        (rec, iters)
    });
    let solver_iterations = outcomes.iter().map(|o| o.1).sum();
    let rows: Vec<SupercriticalRecord> = outcomes.into_iter().map(|o| o.0).collect();

    let mut aggregates = Vec::new();
    let mut checks = Vec::new();
    let med_top = median_finite(rows.iter().filter_map(|r| r.top_edge));
    let med_bottom = median_finite(rows.iter().filter_map(|r| r.bottom_edge));
    push_aggregate(&mut aggregates, "median_top_edge", med_top);
    push_aggregate(&mut aggregates, "median_bottom_edge", med_bottom);
    checks.push(StudyCheck::band("median_top_edge", med_top, 1.8, 2.3));
    if config.localization.is_some() {
        let freq = rows.iter().filter(|r| r.flagged_localized || r.flagged_successive).count()
            as f64
            / rows.len() as f64;
        push_aggregate(&mut aggregates, "flagged_event_freq", freq);
        checks.push(StudyCheck::at_most("flagged_event_freq", freq, 0.05));
    }

    Ok(StudySummary {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        records: StudyRecords::Supercritical { rows },
        aggregates,
        checks,
        wall_ms: started.elapsed().as_millis() as u64,
        solver_iterations,
    })
}

// ---------------------------------------------------------------------------
// Semicircle: empirical spectral distribution at scale N^{mu/2}
// ---------------------------------------------------------------------------

pub fn run_semicircle_study(config: &ExperimentConfig) -> Result<StudySummary> {
    let started = std::time::Instant::now();
    config.validate_common()?;
    if config.alpha <= 2.0 {
        return Err(Error::Config("the semicircle study needs alpha > 2".into()));
    }
    if !config.variance_normalized || !config.symmetrized {
        return Err(Error::Config(
            "the semicircle study needs a symmetrized, variance-normalized law \
             (mean zero, second moment one)"
                .into(),
        ));
    }
    if config.n > config.dense_limit {
        return Err(Error::Config(format!(
            "semicircle study runs the dense full-spectrum path; n = {} exceeds the dense limit {}",
            config.n, config.dense_limit
        )));
    }
    let law = config.law()?;
    let pattern = config.band_pattern()?;
    let scale = (config.n as f64).powf(config.mu / 2.0);

    let rows: Vec<SemicircleRecord> = run_parallel(config.replicas, |replica| {
        let m = sample_matrix(&pattern, &law, config.seed, replica);
        let ks = m
            .to_dense_limited(config.dense_limit)
            .and_then(|d| dense_eigenvalues(&d))
            .and_then(|vals| semicircle_ks(&vals, scale))
            .ok();
        SemicircleRecord { replica, ks }
    });

    let mean_ks = {
        let v: Vec<f64> = rows.iter().filter_map(|r| r.ks).collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    let band = if config.mu >= 1.0 { 0.05 } else { 0.08 };
    let mut aggregates = Vec::new();
    push_aggregate(&mut aggregates, "mean_ks", mean_ks);
    let checks = vec![StudyCheck::at_most("mean_ks", mean_ks, band)];

    Ok(StudySummary {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        records: StudyRecords::Semicircle { rows },
        aggregates,
        checks,
        wall_ms: started.elapsed().as_millis() as u64,
        solver_iterations: 0,
    })
}

// ---------------------------------------------------------------------------
// Poisson: rescaled extremes as a point process
// ---------------------------------------------------------------------------

pub fn run_poisson_study(config: &ExperimentConfig) -> Result<StudySummary> {
    let started = std::time::Instant::now();
    config.validate_common()?;
    config.require_regime(Regime::Subcritical)?;
    if config.replicas < 30 {
        return Err(Error::Config("the point-process study needs at least 30 replicas".into()));
    }
    let law = config.law()?;
    let pattern = config.band_pattern()?;
    let b_n = law.norming_constant(pattern.independent_entry_count())?;

    let outcomes: Vec<(PoissonRecord, u64)> = run_parallel(config.replicas, |replica| {
        let m = sample_matrix(&pattern, &law, config.seed, replica);
        let entry_points: Vec<f64> = largest_entries(&m, config.top_k)
            .map(|r| r.iter().map(|e| e.modulus / b_n).collect())
            .unwrap_or_default();
        match lanczos_topk(&m, config.top_k, WhichEnd::LargestAlgebraic, config.tol, config.max_iter)
        {
            Ok(summary) => {
                let eig_points: Vec<f64> = summary
                    .eigenvalues
                    .iter()
                    .filter(|&&l| l > 0.0)
                    .map(|l| l / b_n)
                    .collect();
                (
                    PoissonRecord {
                        replica,
                        eig_points,
                        entry_points,
                        converged: summary.converged,
                    },
                    summary.iterations as u64,
                )
            }
            Err(_) => (
                PoissonRecord { replica, eig_points: vec![], entry_points, converged: false },
                0,
            ),
        }
    });
    let solver_iterations = outcomes.iter().map(|o| o.1).sum();
    let rows: Vec<PoissonRecord> = outcomes.into_iter().map(|o| o.0).collect();

    let mut aggregates = Vec::new();
    let mut checks = Vec::new();
    append_point_process_stats(
        &mut aggregates,
        &mut checks,
        config,
        law.alpha(),
        rows.iter().map(|r| r.eig_points.clone()),
        "eig",
        true,
    );
    // the entry-modulus process obeys the same limit and the same bands
    append_point_process_stats(
        &mut aggregates,
        &mut checks,
        config,
        law.alpha(),
        rows.iter().map(|r| r.entry_points.clone()),
        "entry",
        true,
    );

    Ok(StudySummary {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        records: StudyRecords::Poisson { rows },
        aggregates,
        checks,
        wall_ms: started.elapsed().as_millis() as u64,
        solver_iterations,
    })
}

// ---------------------------------------------------------------------------
// Moments: trace powers against the bound shape
// ---------------------------------------------------------------------------

pub fn run_moment_study(config: &ExperimentConfig) -> Result<StudySummary> {
    let started = std::time::Instant::now();
    config.validate_common()?;
    let tr = config.truncation.ok_or_else(|| {
        Error::Config("the moment study needs [truncation] exponents".into())
    })?;
    if config.n_grid.is_empty() || config.s_grid.is_empty() {
        return Err(Error::Config("the moment study needs n_values and s_values grids".into()));
    }
    if config.alpha <= 2.0 || !config.variance_normalized {
        return Err(Error::Config(
            "the moment study needs alpha > 2 and a variance-normalized law".into(),
        ));
    }
    let law = config.law()?;
    // window checked once upfront so violations name the failed inequality
    TruncationSpec {
        gamma: tr.gamma,
        gamma_prime: tr.gamma_prime,
        gamma_double_prime: tr.gamma_double_prime,
        s: 1,
    }
    .check_window(config.mu)?;

    let mut cells = Vec::new();
    for &n in &config.n_grid {
        let pattern = BandPattern::build(n, config.mu, config.pattern)?;
        for &s in &config.s_grid {
            let spec = TruncationSpec {
                gamma: tr.gamma,
                gamma_prime: tr.gamma_prime,
                gamma_double_prime: tr.gamma_double_prime,
                s,
            };
            let est = trace_power_moment(&pattern, &law, tr.gamma, s, config.replicas, config.seed)?;
            let rhs = moment_bound_rhs(n, &spec, config.mu, 1.0)?;
            let ratio = (est.estimate.ln() - rhs.log_value).exp();
            cells.push(MomentCell {
                n,
                s,
                gamma: tr.gamma,
                gamma_prime: tr.gamma_prime,
                estimate: est.estimate,
                std_error: est.std_error,
                rhs_log: rhs.log_value,
                ratio,
                s_within_budget: spec.s_within_budget(n),
            });
        }
    }
    // single fitted constant, minimax over the grid: the geometric midpoint
    // of the extreme ratios minimizes the worst multiplicative deviation
    let r_max = cells.iter().map(|c| c.ratio).fold(f64::MIN, f64::max);
    let r_min = cells.iter().map(|c| c.ratio).fold(f64::MAX, f64::min);
    let fitted = (r_max * r_min).sqrt();
    let worst_factor = cells
        .iter()
        .map(|c| (c.ratio / fitted).max(fitted / c.ratio))
        .fold(1.0, f64::max);

    // empirical norm exceedance at the largest grid size
    let n_max = *config.n_grid.iter().max().unwrap();
    let s_max = *config.s_grid.iter().max().unwrap();
    let pattern = BandPattern::build(n_max, config.mu, config.pattern)?;
    let kappa = tr.kappa;
    let norm_threshold = kappa * 2.0 * (n_max as f64).powf(tr.gamma_prime);
    let exceedance: Vec<NormExceedanceRecord> = run_parallel(config.replicas, |replica| {
        let m = sample_matrix(&pattern, &law, config.seed.wrapping_add(1), replica);
        let norm = truncate_matrix(&m, tr.gamma)
            .and_then(|(hat, _)| hat.to_dense_limited(512))
            .and_then(|d| dense_eigenvalues(&d))
            .map(|vals| vals[0].abs().max(vals.last().unwrap().abs()))
            .ok();
        let exceeded = norm.map_or(false, |n| n >= norm_threshold);
        NormExceedanceRecord { replica, norm, exceeded }
    });
    let exceed_freq =
        exceedance.iter().filter(|r| r.exceeded).count() as f64 / exceedance.len() as f64;
    let spec_max = TruncationSpec {
        gamma: tr.gamma,
        gamma_prime: tr.gamma_prime,
        gamma_double_prime: tr.gamma_double_prime,
        s: s_max,
    };
    let cheb = chebyshev_tail(n_max, &spec_max, config.mu, kappa, fitted)?;
    let cheb_linear = cheb.linear.unwrap_or(f64::INFINITY).min(1.0);
    let exceed_cap = (5.0 * cheb_linear).max(3.0 / config.replicas as f64);

    let aggregates = vec![
        Aggregate { name: "fitted_constant".into(), value: fitted },
        Aggregate { name: "worst_ratio_factor".into(), value: worst_factor },
        Aggregate { name: "norm_exceedance_freq".into(), value: exceed_freq },
        Aggregate { name: "chebyshev_bound".into(), value: cheb_linear },
    ];
    let checks = vec![
        StudyCheck::at_most("worst_ratio_factor", worst_factor, 2.0),
        StudyCheck::at_most("norm_exceedance_freq", exceed_freq, exceed_cap),
    ];

    Ok(StudySummary {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        records: StudyRecords::Moments { cells, exceedance },
        aggregates,
        checks,
        wall_ms: started.elapsed().as_millis() as u64,
        solver_iterations: 0,
    })
}

// ---------------------------------------------------------------------------
// Tail sums: windowed-sum concentration over an n-grid
// ---------------------------------------------------------------------------

pub fn run_tailsum_study(config: &ExperimentConfig) -> Result<StudySummary> {
    let started = std::time::Instant::now();
    config.validate_common()?;
    let w = config
        .window
        .ok_or_else(|| Error::Config("the tail-sum study needs a [tailsum] window".into()))?;
    let grid: Vec<usize> = if config.n_grid.is_empty() {
        vec![config.n]
    } else {
        let mut g = config.n_grid.clone();
        g.sort_unstable();
        g
    };
    let law = config.law()?;
    let window = SumWindow { low_exponent: w.low, high_exponent: w.high };

    let mut rows = Vec::new();
    for &n in &grid {
        let out = truncated_sum_concentration(
            &law,
            config.mu,
            n,
            window,
            w.epsilon,
            config.replicas,
            config.seed,
        )?;
        rows.push(TailSumRecord {
            n,
            part: format!("{:?}", out.part),
            predicted_exponent: out.predicted_exponent,
            exceedance_frequency: out.exceedance_frequency,
            mean_sum: out.mean_sum,
        });
    }

    let final_exceedance = rows.last().map(|r| r.exceedance_frequency).unwrap_or(f64::NAN);
    let monotone = rows
        .windows(2)
        .all(|p| p[1].exceedance_frequency <= p[0].exceedance_frequency + 1e-12);
    let aggregates = vec![
        Aggregate { name: "final_exceedance".into(), value: final_exceedance },
        Aggregate { name: "decay_monotone".into(), value: if monotone { 1.0 } else { 0.0 } },
    ];
    let checks = vec![
        StudyCheck::at_most("final_exceedance", final_exceedance, 0.02),
        StudyCheck::at_least("decay_monotone", if monotone { 1.0 } else { 0.0 }, 1.0),
    ];

    Ok(StudySummary {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        records: StudyRecords::TailSums { rows },
        aggregates,
        checks,
        wall_ms: started.elapsed().as_millis() as u64,
        solver_iterations: 0,
    })
}

// ---------------------------------------------------------------------------
// Perturbation: eigenvalue vs largest entry, with row-dominance diagnostics
// ---------------------------------------------------------------------------

pub fn run_perturbation_study(config: &ExperimentConfig) -> Result<StudySummary> {
    let started = std::time::Instant::now();
    config.validate_common()?;
    config.require_regime(Regime::Subcritical)?;
    let law = config.law()?;
    let pattern = config.band_pattern()?;
    let b_n = law.norming_constant(pattern.independent_entry_count())?;
    let k = config.top_k;

    let outcomes: Vec<(PerturbationRecord, u64)> = run_parallel(config.replicas, |replica| {
        let m = sample_matrix(&pattern, &law, config.seed, replica);
        let failed = PerturbationRecord {
            replica,
            ratios: vec![],
            vector_distances: vec![],
            predicted_residual_over_scale: vec![],
            row_norm_gap: None,
            isolated_rows: false,
            small_diagonal: false,
            converged: false,
        };
        let ranked = match largest_entries(&m, k + 1) {
            Ok(r) => r,
            Err(_) => return (failed, 0),
        };
        let summary = match lanczos_topk(
            &m,
            k,
            WhichEnd::LargestAlgebraic,
            config.tol,
            config.max_iter,
        ) {
            Ok(s) => s,
            Err(_) => return (failed, 0),
        };
        let row_sums = row_tail_sum(&m, 0.0);
        let report = match entry_eigen_records(&summary, &ranked, &m, row_sums.max, k) {
            Ok(r) => r,
            Err(_) => return (failed, 0),
        };
        let diagnostics = crate::ensemble::outlier_row_diagnostics(&m, 0.05).ok();
        (
            PerturbationRecord {
                replica,
                ratios: report.records.iter().map(|r| r.ratio).collect(),
                vector_distances: report.records.iter().map(|r| r.vector_distance).collect(),
                predicted_residual_over_scale: report
                    .records
                    .iter()
                    .map(|r| r.predicted_vector_residual / b_n)
                    .collect(),
                row_norm_gap: report.row_norm_gap.is_finite().then_some(report.row_norm_gap),
                isolated_rows: diagnostics.as_ref().map(|d| !d.two_large_in_row).unwrap_or(false),
                small_diagonal: diagnostics.as_ref().map(|d| !d.large_diagonal).unwrap_or(false),
                converged: summary.converged,
            },
            summary.iterations as u64,
        )
    });
    let solver_iterations = outcomes.iter().map(|o| o.1).sum();
    let rows: Vec<PerturbationRecord> = outcomes.into_iter().map(|o| o.0).collect();

    let med_ratio = median_finite(rows.iter().filter_map(|r| r.ratios.first().copied()));
    let med_distance =
        median_finite(rows.iter().filter_map(|r| r.vector_distances.first().copied()));
    let isolated_freq =
        rows.iter().filter(|r| r.isolated_rows).count() as f64 / rows.len() as f64;
    let mut aggregates = Vec::new();
    push_aggregate(&mut aggregates, "median_ratio_k1", med_ratio);
    push_aggregate(&mut aggregates, "median_vector_distance_k1", med_distance);
    push_aggregate(&mut aggregates, "isolated_rows_freq", isolated_freq);
    let checks = vec![StudyCheck::band("median_ratio_k1", med_ratio, 0.9, 1.1)];

    Ok(StudySummary {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        records: StudyRecords::Perturbation { rows },
        aggregates,
        checks,
        wall_ms: started.elapsed().as_millis() as u64,
        solver_iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_subcritical() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(StudyKind::Subcritical, 100, 1.0, 1.5, 16, 7);
        c.top_k = 3;
        c
    }

    #[test]
    fn subcritical_regime_guard() {
        let mut c = tiny_subcritical();
        c.alpha = 6.0; // supercritical at mu = 1
        assert!(run_subcritical_study(&c).is_err());
    }

    #[test]
    fn supercritical_needs_unit_variance() {
        let mut c = ExperimentConfig::new(StudyKind::Supercritical, 100, 1.0, 6.0, 4, 7);
        c.variance_normalized = false;
        assert!(run_supercritical_study(&c).is_err());
        c.variance_normalized = true;
        let s = run_supercritical_study(&c).unwrap();
        assert_eq!(s.records_len(), 4);
    }

    impl StudySummary {
        fn records_len(&self) -> usize {
            match &self.records {
                StudyRecords::Subcritical { rows } => rows.len(),
                StudyRecords::Supercritical { rows } => rows.len(),
                StudyRecords::Semicircle { rows } => rows.len(),
                StudyRecords::Poisson { rows } => rows.len(),
                StudyRecords::Moments { cells, .. } => cells.len(),
                StudyRecords::TailSums { rows } => rows.len(),
                StudyRecords::Perturbation { rows } => rows.len(),
            }
        }
    }

    #[test]
    fn subcritical_small_run_produces_sane_ratios() {
        let c = tiny_subcritical();
        let s = run_subcritical_study(&c).unwrap();
        assert_eq!(s.records_len(), 16);
        let med = s.aggregate("median_ratio_k1").unwrap();
        assert!(med > 0.5 && med < 2.0, "median ratio {med}");
        assert!(s.wall_ms < 60_000);
    }

    #[test]
    fn determinism_across_thread_counts() {
        let c = tiny_subcritical();
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let s1 = pool1.install(|| run_subcritical_study(&c)).unwrap();
        let s4 = pool4.install(|| run_subcritical_study(&c)).unwrap();
        assert_eq!(s1.records, s4.records);
        assert_eq!(
            serde_json::to_string(&s1.records).unwrap(),
            serde_json::to_string(&s4.records).unwrap()
        );
    }

    #[test]
    fn semicircle_study_small() {
        let mut c = ExperimentConfig::new(StudyKind::Semicircle, 300, 1.0, 5.0, 3, 11);
        c.variance_normalized = true;
        let s = run_semicircle_study(&c).unwrap();
        let ks = s.aggregate("mean_ks").unwrap();
        assert!(ks < 0.2, "mean KS {ks} implausibly large at n = 300");
        // dense limit honored
        c.dense_limit = 100;
        assert!(run_semicircle_study(&c).is_err());
    }

    #[test]
    fn tailsum_study_decay_table() {
        let mut c = ExperimentConfig::new(StudyKind::TailSums, 1000, 1.0, 3.0, 100, 5);
        c.window = Some(WindowParams { low: Some(0.2), high: 0.22, epsilon: 0.1 });
        c.n_grid = vec![1000, 3000];
        let s = run_tailsum_study(&c).unwrap();
        match &s.records {
            StudyRecords::TailSums { rows } => {
                assert_eq!(rows.len(), 2);
                assert!(rows[0].n < rows[1].n);
            }
            _ => panic!("wrong record kind"),
        }
        // single-n degenerate grid
        c.n_grid = vec![];
        let s = run_tailsum_study(&c).unwrap();
        match &s.records {
            StudyRecords::TailSums { rows } => assert_eq!(rows.len(), 1),
            _ => panic!(),
        }
        // straddling window with insufficient epsilon rejected
        c.window = Some(WindowParams { low: Some(0.3), high: 0.4, epsilon: 0.01 });
        assert!(run_tailsum_study(&c).is_err());
    }

    #[test]
    fn moment_study_requires_window() {
        let mut c = ExperimentConfig::new(StudyKind::Moments, 32, 1.0, 5.0, 50, 3);
        c.variance_normalized = true;
        c.n_grid = vec![32];
        c.s_grid = vec![1];
        c.truncation = Some(TruncationParams {
            gamma: 0.3,
            gamma_prime: 0.4,
            gamma_double_prime: 0.1,
            kappa: 0.9,
        });
        let err = run_moment_study(&c).unwrap_err();
        assert!(format!("{err}").contains("mu/2"));
    }
}
