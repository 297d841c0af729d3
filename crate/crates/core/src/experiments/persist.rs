//! Persistence for study summaries.
//!
//! The JSON summary is authoritative and round-trips all numeric fields at
//! full binary precision (serde_json emits shortest round-trip decimals).
//! The per-replica CSV table is a tidy view of the same records; a checksum
//! of its bytes is stored in the JSON so tampering is detected on load.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::fnv1a64;

use super::{StudyRecords, StudySummary};

const CSV_HEADER: &str = "# heavyband csv v1";

#[derive(Serialize, Deserialize)]
struct PersistedSummary {
    records_checksum: String,
    #[serde(flatten)]
    summary: StudySummary,
}

fn records_csv(records: &StudyRecords) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    match records {
        StudyRecords::Subcritical { rows } => {
            let _ = writeln!(out, "replica,k,ratio,overlap,eig_point,entry_point,converged");
            for r in rows {
                let kmax = r
                    .ratios
                    .len()
                    .max(r.overlaps.len())
                    .max(r.eig_points.len())
                    .max(r.entry_points.len());
                for k in 0..kmax {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        r.replica,
                        k + 1,
                        fmt_opt(r.ratios.get(k)),
                        fmt_opt(r.overlaps.get(k).and_then(|o| o.as_ref())),
                        fmt_opt(r.eig_points.get(k)),
                        fmt_opt(r.entry_points.get(k)),
                        u8::from(r.converged),
                    );
                }
            }
        }
        StudyRecords::Supercritical { rows } => {
            let _ = writeln!(
                out,
                "replica,top_edge,bottom_edge,flagged_localized,flagged_successive,min_best_tail,converged"
            );
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    r.replica,
                    fmt_opt(r.top_edge.as_ref()),
                    fmt_opt(r.bottom_edge.as_ref()),
                    u8::from(r.flagged_localized),
                    u8::from(r.flagged_successive),
                    fmt_opt(r.min_best_tail.as_ref()),
                    u8::from(r.converged),
                );
            }
        }
        StudyRecords::Semicircle { rows } => {
            let _ = writeln!(out, "replica,ks");
            for r in rows {
                let _ = writeln!(out, "{},{}", r.replica, fmt_opt(r.ks.as_ref()));
            }
        }
        StudyRecords::Poisson { rows } => {
            let _ = writeln!(out, "replica,k,eig_point,entry_point,converged");
            for r in rows {
                let kmax = r.eig_points.len().max(r.entry_points.len());
                for k in 0..kmax {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{}",
                        r.replica,
                        k + 1,
                        fmt_opt(r.eig_points.get(k)),
                        fmt_opt(r.entry_points.get(k)),
                        u8::from(r.converged),
                    );
                }
            }
        }
        StudyRecords::Moments { cells, exceedance } => {
            let _ = writeln!(
                out,
                "n,s,gamma,gamma_prime,estimate,std_error,rhs_log,ratio,s_within_budget"
            );
            for c in cells {
                let _ = writeln!(
                    out,
                    "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{}",
                    c.n,
                    c.s,
                    c.gamma,
                    c.gamma_prime,
                    c.estimate,
                    c.std_error,
                    c.rhs_log,
                    c.ratio,
                    u8::from(c.s_within_budget),
                );
            }
            let _ = writeln!(out, "# exceedance");
            let _ = writeln!(out, "replica,norm,exceeded");
            for r in exceedance {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    r.replica,
                    fmt_opt(r.norm.as_ref()),
                    u8::from(r.exceeded)
                );
            }
        }
        StudyRecords::TailSums { rows } => {
            let _ = writeln!(out, "n,part,predicted_exponent,exceedance_frequency,mean_sum");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{:e},{:e},{:e}",
                    r.n, r.part, r.predicted_exponent, r.exceedance_frequency, r.mean_sum
                );
            }
        }
        StudyRecords::Perturbation { rows } => {
            let _ = writeln!(
                out,
                "replica,k,ratio,vector_distance,predicted_residual_over_scale,row_norm_gap,converged"
            );
            for r in rows {
                let kmax = r.ratios.len().max(r.vector_distances.len());
                for k in 0..kmax {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{}",
                        r.replica,
                        k + 1,
                        fmt_opt(r.ratios.get(k)),
                        fmt_opt(r.vector_distances.get(k)),
                        fmt_opt(r.predicted_residual_over_scale.get(k)),
                        fmt_opt(r.row_norm_gap.as_ref()),
                        u8::from(r.converged),
                    );
                }
            }
        }
    }
    out
}

fn fmt_opt(v: Option<&f64>) -> String {
    match v {
        Some(x) => format!("{x:e}"),
        None => String::new(),
    }
}

/// Two-column gnuplot-ready histogram (bin center, count).
pub fn write_histogram(path: &Path, values: &[f64], bins: usize) -> Result<()> {
    let finite: Vec<f64> = values.iter().cloned().filter(|x| x.is_finite()).collect();
    let mut out = String::new();
    if !finite.is_empty() {
        let lo = finite.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let width = ((hi - lo) / bins as f64).max(1e-300);
        let mut counts = vec![0usize; bins];
        for &x in &finite {
            let b = (((x - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        for (b, c) in counts.iter().enumerate() {
            let center = lo + (b as f64 + 0.5) * width;
            let _ = writeln!(out, "{center:e} {c}");
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn headline_values(records: &StudyRecords) -> (&'static str, Vec<f64>) {
    match records {
        StudyRecords::Subcritical { rows } => (
            "hist_ratio_k1.dat",
            rows.iter().filter_map(|r| r.ratios.first().copied()).collect(),
        ),
        StudyRecords::Supercritical { rows } => {
            ("hist_top_edge.dat", rows.iter().filter_map(|r| r.top_edge).collect())
        }
        StudyRecords::Semicircle { rows } => {
            ("hist_ks.dat", rows.iter().filter_map(|r| r.ks).collect())
        }
        StudyRecords::Poisson { rows } => (
            "hist_top_point.dat",
            rows.iter().filter_map(|r| r.eig_points.first().copied()).collect(),
        ),
        StudyRecords::Moments { cells, .. } => {
            ("hist_ratio.dat", cells.iter().map(|c| c.ratio).collect())
        }
        StudyRecords::TailSums { rows } => (
            "decay.dat",
            rows.iter()
                .flat_map(|r| [r.n as f64, r.exceedance_frequency])
                .collect(),
        ),
        StudyRecords::Perturbation { rows } => (
            "hist_ratio_k1.dat",
            rows.iter().filter_map(|r| r.ratios.first().copied()).collect(),
        ),
    }
}

/// Write summary.json, records.csv and a gnuplot-ready histogram into `dir`.
pub fn persist_summary(summary: &StudySummary, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let csv = records_csv(&summary.records);
    std::fs::write(dir.join("records.csv"), &csv)?;
    let persisted = PersistedSummary {
        records_checksum: format!("{:016x}", fnv1a64(csv.as_bytes())),
        summary: summary.clone(),
    };
    let json = serde_json::to_string_pretty(&persisted)?;
    std::fs::write(dir.join("summary.json"), json)?;
    let (name, values) = headline_values(&summary.records);
    if name == "decay.dat" {
        // already two-column (n, exceedance) pairs
        let mut out = String::new();
        for pair in values.chunks(2) {
            let _ = writeln!(out, "{} {:e}", pair[0], pair[1]);
        }
        std::fs::write(dir.join(name), out)?;
    } else {
        write_histogram(&dir.join(name), &values, 24)?;
    }
    Ok(())
}

/// Load a persisted summary, verifying the schema version and the CSV
/// checksum.
pub fn load_summary(dir: &Path) -> Result<StudySummary> {
    let json = std::fs::read_to_string(dir.join("summary.json"))?;
    let persisted: PersistedSummary = serde_json::from_str(&json)?;
    if persisted.summary.schema_version != super::SCHEMA_VERSION {
        return Err(Error::Format(format!(
            "summary schema version {} does not match {}",
            persisted.summary.schema_version,
            super::SCHEMA_VERSION
        )));
    }
    let csv = std::fs::read(dir.join("records.csv"))?;
    let checksum = format!("{:016x}", fnv1a64(&csv));
    if checksum != persisted.records_checksum {
        return Err(Error::Integrity(format!(
            "records.csv checksum {checksum} does not match recorded {}",
            persisted.records_checksum
        )));
    }
    let rebuilt = records_csv(&persisted.summary.records);
    if format!("{:016x}", fnv1a64(rebuilt.as_bytes())) != persisted.records_checksum {
        return Err(Error::Integrity(
            "summary records do not reproduce the recorded checksum".into(),
        ));
    }
    Ok(persisted.summary)
}

fn shard_path(dir: &Path, replica: u64) -> PathBuf {
    dir.join(format!("replica_{replica:08}.json"))
}

/// Write one replica record to its own file; safe to call concurrently for
/// distinct replicas.
pub fn write_shard<T: Serialize>(dir: &Path, replica: u64, record: &T) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(shard_path(dir, replica), serde_json::to_string(record)?)?;
    Ok(())
}

/// Read replica shards 0..replicas back in order.
pub fn read_shards<T: DeserializeOwned>(dir: &Path, replicas: u64) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(replicas as usize);
    for r in 0..replicas {
        let s = std::fs::read_to_string(shard_path(dir, r))?;
        out.push(serde_json::from_str(&s)?);
    }
    Ok(out)
}

/// CSV export of a computed spectrum: rank, eigenvalue, residual.
pub fn write_spectrum_csv(summary: &crate::spectral::SpectralSummary, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    let _ = writeln!(out, "rank,eigenvalue,residual");
    for (k, l) in summary.eigenvalues.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{:e},{}",
            k + 1,
            l,
            summary.residuals.get(k).and_then(|r| r.as_ref()).map(|r| format!("{r:e}")).unwrap_or_default()
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// CSV export of eigenvectors (one column per kept pair), on request.
pub fn write_eigenvectors_csv(
    summary: &crate::spectral::SpectralSummary,
    path: &Path,
) -> Result<()> {
    let vectors: Vec<&Vec<f64>> = summary.eigenvectors.iter().flatten().collect();
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    if let Some(first) = vectors.first() {
        for row in 0..first.len() {
            let line: Vec<String> = vectors.iter().map(|v| format!("{:e}", v[row])).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// CSV export of a localization scan: k, lambda, L, tails, participation.
pub fn write_localization_csv(
    report: &crate::localization::DelocalizationReport,
    path: &Path,
) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{CSV_HEADER}");
    let _ = writeln!(out, "k,eigenvalue,L,best_tail,successive_tail,participation_ratio");
    for r in &report.records {
        let _ = writeln!(
            out,
            "{},{:e},{},{:e},{:e},{:e}",
            r.k + 1,
            r.eigenvalue,
            report.l,
            r.best_tail,
            r.successive_tail,
            r.participation_ratio
        );
    }
    std::fs::write(path, out)?;
    Ok(())
}
