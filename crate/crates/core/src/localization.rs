//! Eigenvector localization diagnostics.
//!
//! A unit vector is (L, eta)-localized when some L coordinates carry all but
//! eta of its squared mass; the successive variant restricts the support to a
//! cyclic interval. The top-L coordinate set is provably optimal among all
//! size-L sets, which turns the existential definition into a computation.

use serde::{Deserialize, Serialize};

use crate::ensemble::SampledMatrix;
use crate::error::{Error, Result};
use crate::spectral::SpectralSummary;

fn check_unit(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Domain("empty vector".into()));
    }
    let norm_sq: f64 = v.iter().map(|x| x * x).sum();
    if (norm_sq.sqrt() - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!(
            "vector norm {} differs from 1 beyond 1e-10",
            norm_sq.sqrt()
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailMass {
    pub tail_mass: f64,
    pub support: Vec<usize>,
}

/// Minimal tail mass over all supports of size L: take the L largest |v_j|^2
/// (ties resolved toward lower indices) and report the leftover mass.
pub fn best_tail(v: &[f64], l: usize) -> Result<TailMass> {
    check_unit(v)?;
    let n = v.len();
    if l == 0 || l > n {
        return Err(Error::Bounds(format!("support size {l} out of range 1..={n}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| {
        (v[b] * v[b])
            .partial_cmp(&(v[a] * v[a]))
            .unwrap()
            .then(a.cmp(&b))
    });
    let support: Vec<usize> = idx[..l].to_vec();
    let mass: f64 = support.iter().map(|&j| v[j] * v[j]).sum();
    Ok(TailMass { tail_mass: (1.0 - mass).max(0.0), support })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct WindowTail {
    pub tail_mass: f64,
    pub window_start: usize,
}

/// Minimal tail mass over the N cyclic windows of length L, by a sliding sum.
pub fn successive_best_tail(v: &[f64], l: usize) -> Result<WindowTail> {
    check_unit(v)?;
    let n = v.len();
    if l == 0 || l > n {
        return Err(Error::Bounds(format!("window length {l} out of range 1..={n}")));
    }
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    let mut window: f64 = sq[..l].iter().sum();
    let mut best = window;
    let mut best_start = 0usize;
    for start in 1..n {
        window -= sq[start - 1];
        window += sq[(start + l - 1) % n];
        if window > best {
            best = window;
            best_start = start;
        }
    }
    Ok(WindowTail { tail_mass: (1.0 - best).max(0.0), window_start: best_start })
}

/// Participation ratio (sum of fourth powers)^{-1}: N for the uniform vector,
/// 1 for a basis vector.
pub fn participation_ratio(v: &[f64]) -> Result<f64> {
    check_unit(v)?;
    let p4: f64 = v.iter().map(|x| x.powi(4)).sum();
    Ok(1.0 / p4)
}

/// Overlap |<v, (e_i + sign e_j)/sqrt(2)>|; taking the modulus realizes the
/// phase convention that makes the overlap non-negative.
pub fn two_coord_overlap(v: &[f64], i: usize, j: usize, sign: i8) -> Result<f64> {
    if i == j {
        return Err(Error::Domain("two_coord_overlap needs distinct coordinates".into()));
    }
    if i >= v.len() || j >= v.len() {
        return Err(Error::Bounds(format!("coordinates ({i}, {j}) out of range")));
    }
    Ok((v[i] + sign as f64 * v[j]).abs() / std::f64::consts::SQRT_2)
}

/// Eigenvalue cap for (L, eta)-localized eigenvectors:
/// (rho_L + sqrt(eta) rho) / sqrt(1 - eta). An eigenvalue above the cap rules
/// the localization out.
pub fn localized_eigenvalue_bound(rho_l: f64, rho: f64, eta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::Domain(format!("eta must be in [0, 1), got {eta}")));
    }
    if rho_l > rho * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "rho_L = {rho_l} cannot exceed rho = {rho}"
        )));
    }
    Ok((rho_l + eta.sqrt() * rho) / (1.0 - eta).sqrt())
}

/// Per-eigenpair record of the delocalization scan.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanRecord {
    pub k: usize,
    pub eigenvalue: f64,
    pub best_tail: f64,
    /// The optimal size-L support (top-L coordinates).
    pub best_support: Vec<usize>,
    pub successive_tail: f64,
    /// Start of the best cyclic window of length L.
    pub window_start: usize,
    pub participation_ratio: f64,
    /// |lambda| > sqrt(2 eta) rho with eta the vector's own best tail < eta0.
    pub flagged_localized: bool,
    pub flagged_successive: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DelocalizationReport {
    pub l: usize,
    pub c: f64,
    pub eta0: f64,
    pub rho: f64,
    /// c admissible for the general-support variant.
    pub localized_variant_valid: bool,
    /// c admissible for the cyclic-interval variant (c < mu).
    pub successive_variant_valid: bool,
    pub records: Vec<ScanRecord>,
    pub any_flagged_localized: bool,
    pub any_flagged_successive: bool,
    /// Number of eigenpairs examined (only computed pairs enter the scan).
    pub pairs_examined: usize,
}

/// Scan computed eigenpairs for localized outliers: an eigenpair is flagged
/// when, for eta equal to its own best tail at support size L = floor(N^c)
/// (the smallest admissible eta, realizing the union over eta < eta0), the
/// trigger |lambda| > sqrt(2 eta) rho(A) fires.
pub fn delocalization_scan(
    summary: &SpectralSummary,
    m: &SampledMatrix,
    c: f64,
    eta0: f64,
) -> Result<DelocalizationReport> {
    let alpha = m.law().alpha();
    let mu = m.pattern().mu();
    if !(eta0 > 0.0 && eta0 < 0.5) {
        return Err(Error::Config(format!("eta0 must be in (0, 1/2), got {eta0}")));
    }
    let localized_window = 0.4 * mu * (alpha - 2.0) / (alpha - 1.0);
    let localized_variant_valid = c > 0.0 && c < localized_window;
    let successive_variant_valid = c > 0.0 && c < mu;
    if !localized_variant_valid && !successive_variant_valid {
        return Err(Error::Config(format!(
            "support exponent c = {c} admissible for neither variant \
             (general-support window c < {localized_window}, cyclic window c < {mu})"
        )));
    }
    let n = m.n();
    let l = ((n as f64).powf(c).floor() as usize).clamp(1, n);
    let rho = summary.spectral_radius_estimate;
    let mut records = Vec::new();
    for (k, lambda) in summary.eigenvalues.iter().enumerate() {
        let v = match summary.eigenvector(k) {
            Some(v) => v,
            None => continue,
        };
        let bt = best_tail(v, l)?;
        let st = successive_best_tail(v, l)?;
        let pr = participation_ratio(v)?;
        let trigger = |eta: f64| eta < eta0 && lambda.abs() > (2.0 * eta).sqrt() * rho;
        records.push(ScanRecord {
            k,
            eigenvalue: *lambda,
            best_tail: bt.tail_mass,
            successive_tail: st.tail_mass,
            participation_ratio: pr,
            flagged_localized: localized_variant_valid && trigger(bt.tail_mass),
            flagged_successive: successive_variant_valid && trigger(st.tail_mass),
        });
    }
    let any_flagged_localized = records.iter().any(|r| r.flagged_localized);
    let any_flagged_successive = records.iter().any(|r| r.flagged_successive);
    let pairs_examined = records.len();
    Ok(DelocalizationReport {
        l,
        c,
        eta0,
        rho,
        localized_variant_valid,
        successive_variant_valid,
        records,
        any_flagged_localized,
        any_flagged_successive,
        pairs_examined,
    })
}
