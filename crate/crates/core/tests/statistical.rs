//! Statistical integration tests: fixed-seed Monte Carlo checks of the
//! distributional claims that the unit tests only exercise structurally.

use heavyband::dense::DenseMatrix;
use heavyband::ensemble::{
    largest_entries, outlier_row_diagnostics, row_tail_sum, sample_matrix, BandPattern,
    Entry, PatternKind, SampledMatrix,
};
use heavyband::experiments::{run_study, ExperimentConfig, StudyKind};
use heavyband::heavy_tail::{SlowlyVarying, TailLaw};
use heavyband::localization::delocalization_scan;
use heavyband::perturbation::{dominance_check, entry_eigen_records, DominanceExponents};
use heavyband::rng::{derive_rng, salt};
use heavyband::spectral::{lanczos_both_ends, lanczos_topk_seeded, WhichEnd};
use heavyband::stats::ks_statistic;
use rand::Rng;

fn law(alpha: f64, variance_normalized: bool) -> TailLaw {
    TailLaw::new(alpha, 1.0, SlowlyVarying::Constant(1.0), true, variance_normalized).unwrap()
}

/// The rescaled top entry modulus follows the Frechet law exp(-x^{-alpha}).
#[test]
fn top_modulus_matches_frechet() {
    let alpha = 1.0;
    let pattern = BandPattern::build(2000, 1.0, PatternKind::CyclicBand).unwrap();
    let l = law(alpha, false);
    let b_n = l.norming_constant(pattern.independent_entry_count()).unwrap();
    let replicas = 500;
    let mut tops: Vec<f64> = (0..replicas)
        .map(|r| {
            let m = sample_matrix(&pattern, &l, 424242, r);
            largest_entries(&m, 1).unwrap()[0].modulus / b_n
        })
        .collect();
    tops.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ks = ks_statistic(&tops, |x| if x > 0.0 { (-x.powf(-alpha)).exp() } else { 0.0 });
    println!("top-modulus Frechet KS = {ks:.4} over {replicas} replicas");
    assert!(ks <= 0.08, "KS {ks}");
}

/// Row sums of entries above N^gamma stay below N^{mu/2 - eta} for some
/// visible eta > 0 in nearly all replicas (supercritical parameters).
#[test]
fn row_tail_sums_stay_below_edge_scale() {
    let n = 2000usize;
    let pattern = BandPattern::build(n, 1.0, PatternKind::CyclicBand).unwrap();
    let l = law(6.0, true);
    let gamma = 0.2; // above mu / (2 (alpha - 1)) = 0.1
    let threshold = (n as f64).powf(gamma);
    let replicas = 100;
    let mut ok = 0usize;
    let mut etas = Vec::new();
    for r in 0..replicas {
        let m = sample_matrix(&pattern, &l, 515151, r);
        let max = row_tail_sum(&m, threshold).max;
        // observed margin below N^{1/2}: max = N^{1/2 - eta}
        let eta = 0.5 - max.max(1e-300).ln() / (n as f64).ln();
        etas.push(eta);
        if eta > 0.0 {
            ok += 1;
        }
    }
    let freq = ok as f64 / replicas as f64;
    let min_eta = etas.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("row-tail-sum margin positive in {freq:.2} of replicas (min eta {min_eta:.3})");
    assert!(freq >= 0.95, "frequency {freq}");
}

/// No row carries two entries above the pair threshold and no diagonal entry
/// beats its threshold, in most replicas. The exponent offset is taken large
/// enough (0.3) that the union bounds are actually small at this size; the
/// guarantee is asymptotic and only logarithmic in N for small offsets.
#[test]
fn isolated_outlier_rows_dominate() {
    let pattern = BandPattern::build(5000, 0.5, PatternKind::CyclicBand).unwrap();
    let l = TailLaw::new(1.5, 1.0, SlowlyVarying::Constant(1.0), false, false).unwrap();
    let replicas = 100;
    let mut clean = 0usize;
    for r in 0..replicas {
        let m = sample_matrix(&pattern, &l, 616161, r);
        let d = outlier_row_diagnostics(&m, 0.3).unwrap();
        if !d.two_large_in_row && !d.large_diagonal {
            clean += 1;
        }
    }
    let freq = clean as f64 / replicas as f64;
    println!("isolated-row diagnostics clean in {freq:.2} of replicas");
    assert!(freq >= 0.9, "clean frequency {freq}");
}

/// Planted well-separated large entries over a small uniform background at
/// n = 2000: eigenvalues track the planted moduli within 5% and the
/// eigenvectors sit within 0.2 of the two-coordinate prediction.
#[test]
fn planted_dominance_construction_at_scale() {
    let n = 2000usize;
    let c_n = (n as f64).powf(0.7);
    let mut rng = derive_rng(717171, 0, salt::GENERIC);
    let mut h = DenseMatrix::zeros(n);
    let bg = c_n.powf(0.3) / n as f64;
    for i in 0..n {
        for j in 0..=i {
            let x = (rng.gen::<f64>() * 2.0 - 1.0) * bg;
            h[(i, j)] = x;
            h[(j, i)] = x;
        }
    }
    let planted = 4usize;
    for k in 0..planted {
        let (i, j) = (5 * k, 5 * k + 1000 + 7 * k);
        let v = c_n * (2.0 - k as f64 / 10.0);
        h[(i, j)] = v;
        h[(j, i)] = v;
    }
    let report = dominance_check(
        &[(&h, c_n)],
        DominanceExponents { kappa: 0.5, tau: 0.3, nu: 0.8 },
        3,
    )
    .unwrap();
    assert!(report.all_pass);

    let mut start_rng = derive_rng(717171, 1, salt::LANCZOS_START);
    let summary =
        lanczos_topk_seeded(&h, 3, WhichEnd::LargestAlgebraic, 1e-9, 300, &mut start_rng).unwrap();
    // rank entries of the dense construction by hand
    let mut ranked = Vec::new();
    for i in 0..n {
        for j in i..n {
            if h[(i, j)].abs() > c_n * 0.5 {
                ranked.push(heavyband::ensemble::RankedEntry {
                    i: i as u32,
                    j: j as u32,
                    value: h[(i, j)],
                    modulus: h[(i, j)].abs(),
                    sign: if h[(i, j)] < 0.0 { -1 } else { 1 },
                });
            }
        }
    }
    ranked.sort_by(|a, b| b.modulus.partial_cmp(&a.modulus).unwrap());
    let out = entry_eigen_records(&summary, &ranked, &h, h.max_abs_row_sum(), 3).unwrap();
    for rec in &out.records {
        println!(
            "rank {}: ratio {:.4}, vector distance {:.4}",
            rec.k, rec.ratio, rec.vector_distance
        );
        assert!((rec.ratio - 1.0).abs() <= 0.05, "ratio {}", rec.ratio);
        assert!(rec.vector_distance <= 0.2, "distance {}", rec.vector_distance);
    }
}

/// Negative control: a huge planted entry inside an otherwise supercritical
/// matrix must be flagged as a localized outlier by the scan.
#[test]
fn scan_flags_planted_outlier() {
    let n = 500usize;
    let pattern = BandPattern::build(n, 1.0, PatternKind::CyclicBand).unwrap();
    let l = law(6.0, true);
    let m = sample_matrix(&pattern, &l, 818181, 0);
    let huge = 50.0 * (n as f64).sqrt();
    let entries: Vec<Entry> = m
        .entries()
        .iter()
        .map(|e| {
            if e.i == 3 && e.j == 200 {
                Entry { value: huge, ..*e }
            } else {
                *e
            }
        })
        .collect();
    let planted = SampledMatrix::from_entries(pattern, l, entries, 818181, 0).unwrap();
    let summary = lanczos_both_ends(&planted, 3, 3, 1e-8, 400).unwrap();
    assert!((summary.eigenvalues[0] - huge).abs() < 0.05 * huge);
    let report = delocalization_scan(&summary, &planted, 0.25, 0.4).unwrap();
    assert!(report.any_flagged_localized, "planted outlier not flagged: {report:?}");
    // window arithmetic: alpha = 6, mu = 1 caps the general-support variant
    // at c < 0.32, the cyclic variant at c < 1
    assert!(delocalization_scan(&summary, &planted, 0.33, 0.4)
        .map(|r| !r.localized_variant_valid && r.successive_variant_valid)
        .unwrap());
    assert!(delocalization_scan(&summary, &planted, 1.2, 0.4).is_err());
}

/// The eigenvalue/largest-entry study at a subcritical configuration keeps
/// its median ratio inside [0.9, 1.1].
#[test]
fn perturbation_study_median_ratio() {
    let mut config = ExperimentConfig::new(StudyKind::Perturbation, 500, 1.0, 1.5, 100, 919191);
    config.top_k = 3;
    let summary = run_study(&config).unwrap();
    let med = summary.aggregate("median_ratio_k1").unwrap();
    println!("perturbation study median ratio {med:.4}");
    assert!(summary.check("median_ratio_k1").unwrap().passed, "median {med}");
    let gap = summary.aggregate("isolated_rows_freq").unwrap();
    assert!(gap >= 0.5, "isolated-row frequency {gap}");
}
