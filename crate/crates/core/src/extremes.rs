//! Point-process statistics for rescaled extremes.
//!
//! Rescaled top eigenvalues (or entry moduli) should behave like a Poisson
//! point process with intensity alpha x^{-alpha-1} dx on (0, inf): the number
//! of points above t is Poisson(t^{-alpha}), and mapping points through
//! x -> x^{-alpha} turns them into unit-rate arrivals with Exp(1) gaps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{ks_statistic, mean_and_variance};

/// Rescaled extreme points of one replica, sorted descending, all positive.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointProcessSample {
    points: Vec<f64>,
    alpha: f64,
}

impl PointProcessSample {
    pub fn new(mut points: Vec<f64>, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        if points.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::Domain("all points must be positive".into()));
        }
        points.sort_by(|a, b| b.partial_cmp(a).unwrap());
        Ok(Self { points, alpha })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Expected number of points above t under the limiting intensity:
/// integral of alpha x^{-alpha-1} over (t, inf) = t^{-alpha}.
pub fn expected_count_above(alpha: f64, t: f64) -> f64 {
    assert!(t > 0.0 && alpha > 0.0);
    t.powf(-alpha)
}

fn poisson_pmf(lambda: f64, k: u32) -> f64 {
    let mut log_p = -lambda + k as f64 * lambda.ln();
    for i in 1..=k {
        log_p -= (i as f64).ln();
    }
    log_p.exp()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CountTest {
    pub threshold: f64,
    pub expected_rate: f64,
    pub mean_count: f64,
    pub var_count: f64,
    /// variance / mean; tends to 1 under a Poisson limit.
    pub dispersion: f64,
    /// Chi-square statistic of the count histogram on bins {0, 1, 2, >=3}
    /// against Poisson(t^{-alpha}); a plain statistic, no p-value theory.
    pub chi_square: f64,
    /// All counts zero: the test carries no information at this threshold.
    pub degenerate: bool,
}

/// Per-replica counts of points above `t`, with dispersion and a chi-square
/// comparison against the Poisson prediction.
pub fn poisson_count_test(samples: &[PointProcessSample], t: f64) -> Result<CountTest> {
    if samples.len() < 30 {
        return Err(Error::Precondition(format!(
            "need at least 30 replicas, got {}",
            samples.len()
        )));
    }
    if !(t > 0.0) {
        return Err(Error::Domain(format!("threshold must be positive, got {t}")));
    }
    let alpha = samples[0].alpha;
    if samples.iter().any(|s| (s.alpha - alpha).abs() > 1e-12) {
        return Err(Error::Domain("samples carry inconsistent tail exponents".into()));
    }
    let counts: Vec<f64> = samples
        .iter()
        .map(|s| s.points.iter().filter(|&&p| p > t).count() as f64)
        .collect();
    let (mean_count, var_count) = mean_and_variance(&counts);
    let degenerate = mean_count == 0.0;
    let dispersion = if degenerate { f64::NAN } else { var_count / mean_count };
    let lambda = expected_count_above(alpha, t);
    // observed histogram over {0, 1, 2, >= 3}
    let mut observed = [0.0f64; 4];
    for &c in &counts {
        let bin = (c as usize).min(3);
        observed[bin] += 1.0;
    }
    let r = samples.len() as f64;
    let p0 = poisson_pmf(lambda, 0);
    let p1 = poisson_pmf(lambda, 1);
    let p2 = poisson_pmf(lambda, 2);
    let expected = [r * p0, r * p1, r * p2, r * (1.0 - p0 - p1 - p2).max(1e-12)];
    let chi_square = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    Ok(CountTest {
        threshold: t,
        expected_rate: lambda,
        mean_count,
        var_count,
        dispersion,
        chi_square,
        degenerate,
    })
}

/// KS distance of the pooled transformed gaps from Exponential(1).
///
/// For each replica the top-K points map through x -> x^{-alpha} into
/// ascending arrival times u_1 <= ... <= u_K whose successive differences are
/// asymptotically i.i.d. Exp(1); the K-1 gaps per replica are pooled. Needs
/// K >= 2 (one point yields no gap) and at least K+1 points per replica.
pub fn transformed_spacings_test(samples: &[PointProcessSample], k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain(format!(
            "spacings need k >= 2 top points (k = {k} yields no gaps)"
        )));
    }
    if samples.is_empty() {
        return Err(Error::Domain("no samples".into()));
    }
    let mut gaps: Vec<f64> = Vec::with_capacity(samples.len() * (k - 1));
    for s in samples {
        if s.points.len() < k + 1 {
            return Err(Error::Precondition(format!(
                "replica holds {} points, need at least {}",
                s.points.len(),
                k + 1
            )));
        }
        let us: Vec<f64> = s.points[..k].iter().map(|p| p.powf(-s.alpha)).collect();
        // the transform reverses the descending order; confirm monotonicity
        for w in us.windows(2) {
            if w[1] < w[0] {
                return Err(Error::Domain(
                    "transformed points not ascending; input was not sorted descending".into(),
                ));
            }
        }
        for w in us.windows(2) {
            gaps.push(w[1] - w[0]);
        }
    }
    gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ks_statistic(&gaps, |x| 1.0 - (-x).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_rng, salt};
    use rand::Rng;

    #[test]
    fn expected_count_closed_form() {
        assert!((expected_count_above(2.0, 2.0) - 0.25).abs() < 1e-15);
        assert!((expected_count_above(1.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((expected_count_above(3.5, 1.0) - 1.0).abs() < 1e-15);
        assert!(expected_count_above(2.0, 1e12) < 1e-20);
        // quadrature of the intensity matches the closed form; substitute
        // x = e^y so the integrand alpha e^{-alpha y} is smooth on the grid
        let alpha = 1.7f64;
        let t = 1.3f64;
        let mut acc = 0.0;
        let steps = 200_000;
        let y_lo = t.ln();
        let y_hi = y_lo + 60.0 / alpha;
        let h = (y_hi - y_lo) / steps as f64;
        let f = |y: f64| alpha * (-alpha * y).exp();
        for i in 0..steps {
            let y0 = y_lo + i as f64 * h;
            acc += h / 6.0 * (f(y0) + 4.0 * f(y0 + 0.5 * h) + f(y0 + h));
        }
        assert!(
            (acc - expected_count_above(alpha, t)).abs() < 1e-10,
            "{acc} vs {}",
            expected_count_above(alpha, t)
        );
    }

    fn poisson_draw(rng: &mut impl Rng, lambda: f64) -> u32 {
        // Knuth's product method; fine for lambda ~ 1
        let l = (-lambda).exp();
        let mut k = 0u32;
        let mut p = 1.0;
        loop {
            p *= rng.gen::<f64>();
            if p <= l {
                return k;
            }
            k += 1;
        }
    }

    #[test]
    fn count_test_on_exact_poisson_counts() {
        // synthetic replicas whose counts above t = 1 are exactly Poisson(1):
        // place `c` points above 1 and pad below with K+1 fillers
        let mut count_rng = derive_rng(0, 0, salt::GENERIC);
        let mut value_rng = derive_rng(0, 1, salt::GENERIC);
        let mut samples = Vec::new();
        for _ in 0..500 {
            let c = poisson_draw(&mut count_rng, 1.0);
            let mut pts: Vec<f64> = (0..c).map(|_| 1.0 + value_rng.gen::<f64>()).collect();
            for _ in 0..8 {
                pts.push(0.05 + 0.9 * value_rng.gen::<f64>());
            }
            samples.push(PointProcessSample::new(pts, 1.0).unwrap());
        }
        let out = poisson_count_test(&samples, 1.0).unwrap();
        assert!(!out.degenerate);
        assert!((out.dispersion - 1.0).abs() < 0.15, "dispersion {}", out.dispersion);
        assert!((out.mean_count - 1.0).abs() < 0.15, "mean {}", out.mean_count);
        // a huge threshold degenerates the test
        let deg = poisson_count_test(&samples, 1e9).unwrap();
        assert!(deg.degenerate);
        // too few replicas rejected
        assert!(poisson_count_test(&samples[..10], 1.0).is_err());
    }

    #[test]
    fn spacings_on_exact_arrival_construction() {
        // points = (unit-rate arrivals)^{-1/alpha} make the transformed gaps
        // exactly Exp(1)
        let alpha = 2.0;
        let k = 5;
        let mut rng = derive_rng(6, 0, salt::GENERIC);
        let mut samples = Vec::new();
        for _ in 0..2500 {
            let mut t = 0.0;
            let mut pts = Vec::with_capacity(k + 1);
            for _ in 0..(k + 1) {
                t += -(1.0 - rng.gen::<f64>()).ln();
                pts.push(t.powf(-1.0 / alpha));
            }
            samples.push(PointProcessSample::new(pts, alpha).unwrap());
        }
        let ks = transformed_spacings_test(&samples, k).unwrap();
        assert!(ks <= 0.05, "pooled-gap KS {ks} at {} gaps", 2500 * (k - 1));
        // k = 1 yields no gaps
        assert!(transformed_spacings_test(&samples, 1).is_err());
        // insufficient points
        let short = vec![PointProcessSample::new(vec![2.0, 1.0], 2.0).unwrap()];
        assert!(transformed_spacings_test(&short, 2).is_err());
    }
}
