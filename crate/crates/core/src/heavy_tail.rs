//! The entry distribution and its analytic utilities.
//!
//! Entries have modulus tail G(x) = P(|X| >= x) = L(x) x^{-alpha} beyond an
//! effective scale, with L either a constant or a power of the logarithm.
//! Everything downstream (norming constants, truncated moments, concentration
//! of truncated sums) is computed from the exact tail, not from fits.

use rand::distributions::OpenClosed01;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_rng, salt};

/// The slowly varying factor L in the tail G(x) = L(x) x^{-alpha}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SlowlyVarying {
    /// L(x) = c.
    Constant(f64),
    /// L(x) = (ln x)^beta.
    LogPower(f64),
}

/// Effective (post-normalization) form of the law.
#[derive(Clone, Copy, Debug)]
enum EffLaw {
    Constant { c: f64, c_pow: f64 },
    LogPower { beta: f64 },
}

/// Entry distribution: modulus tail L(x) x^{-alpha}, optional symmetric sign,
/// optional rescale to unit second moment.
///
/// The modulus is supported on [x0, inf) where x0 is the effective scale: the
/// smallest point at or beyond `scale` where L(x) x^{-alpha} is a valid
/// (<= 1, non-increasing) tail. If L(x0) x0^{-alpha} < 1 the law carries a
/// point mass at x0 making up the difference; the natural parameterizations
/// (e.g. c = scale^alpha) are atom-free.
#[derive(Clone, Debug)]
pub struct TailLaw {
    alpha: f64,
    scale: f64,
    slowly_varying: SlowlyVarying,
    symmetrized: bool,
    variance_normalized: bool,
    eff: EffLaw,
    x0: f64,
    atom_mass: f64,
    /// Deterministic factor applied by variance normalization (1.0 if none).
    rescale: f64,
}

impl TailLaw {
    pub fn new(
        alpha: f64,
        scale: f64,
        slowly_varying: SlowlyVarying,
        symmetrized: bool,
        variance_normalized: bool,
    ) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::Config(format!("tail exponent alpha must be positive, got {alpha}")));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Config(format!("scale must be positive, got {scale}")));
        }
        if let SlowlyVarying::Constant(c) = slowly_varying {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::Config(format!("constant slowly varying factor must be positive, got {c}")));
            }
        }
        if variance_normalized {
            if alpha <= 2.0 {
                return Err(Error::Config(format!(
                    "variance normalization requires alpha > 2 (variance is infinite at alpha = {alpha})"
                )));
            }
            if matches!(slowly_varying, SlowlyVarying::LogPower(_)) {
                return Err(Error::Config(
                    "variance normalization is a deterministic rescale of the constant-L law; \
                     a rescaled log-power law leaves the declared L family"
                        .into(),
                ));
            }
        }

        let mut law = Self::build(alpha, scale, slowly_varying, symmetrized, variance_normalized, 1.0)?;
        if variance_normalized {
            let m2 = law.moment(2)?;
            let factor = 1.0 / m2.sqrt();
            let (new_scale, new_sv) = match slowly_varying {
                SlowlyVarying::Constant(c) => {
                    (scale * factor, SlowlyVarying::Constant(c * factor.powf(alpha)))
                }
                SlowlyVarying::LogPower(_) => unreachable!(),
            };
            law = Self::build(alpha, new_scale, new_sv, symmetrized, variance_normalized, factor)?;
        }
        Ok(law)
    }

    fn build(
        alpha: f64,
        scale: f64,
        slowly_varying: SlowlyVarying,
        symmetrized: bool,
        variance_normalized: bool,
        rescale: f64,
    ) -> Result<Self> {
        let (eff, x0) = match slowly_varying {
            SlowlyVarying::Constant(c) => {
                let natural = c.powf(1.0 / alpha);
                (EffLaw::Constant { c, c_pow: natural }, scale.max(natural))
            }
            SlowlyVarying::LogPower(beta) if beta == 0.0 => {
                (EffLaw::Constant { c: 1.0, c_pow: 1.0 }, scale.max(1.0))
            }
            SlowlyVarying::LogPower(beta) => {
                let x0 = log_power_effective_scale(alpha, beta, scale)?;
                (EffLaw::LogPower { beta }, x0)
            }
        };
        let g_x0 = match eff {
            EffLaw::Constant { c, .. } => (c * x0.powf(-alpha)).min(1.0),
            EffLaw::LogPower { beta } => log_power_tail(alpha, beta, x0).min(1.0),
        };
        Ok(Self {
            alpha,
            scale,
            slowly_varying,
            symmetrized,
            variance_normalized,
            eff,
            x0,
            atom_mass: (1.0 - g_x0).max(0.0),
            rescale,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn scale(&self) -> f64 {
        self.scale
    }
    pub fn slowly_varying(&self) -> SlowlyVarying {
        self.slowly_varying
    }
    pub fn symmetrized(&self) -> bool {
        self.symmetrized
    }
    pub fn variance_normalized(&self) -> bool {
        self.variance_normalized
    }
    /// Effective scale x0: the modulus is >= x0 almost surely.
    pub fn effective_scale(&self) -> f64 {
        self.x0
    }
    /// Point mass sitting at the effective scale (0 for natural parameterizations).
    pub fn atom_mass(&self) -> f64 {
        self.atom_mass
    }
    /// Rescale factor applied by variance normalization (1.0 when not normalized).
    pub fn normalization_factor(&self) -> f64 {
        self.rescale
    }

    /// G(x) = P(|X| >= x): exact closed form, right-continuous, 1 below the
    /// effective scale.
    pub fn tail_probability(&self, x: f64) -> f64 {
        assert!(x >= 0.0, "tail_probability needs x >= 0");
        if x < self.x0 {
            return 1.0;
        }
        match self.eff {
            EffLaw::Constant { c, .. } => (c * x.powf(-self.alpha)).min(1.0),
            EffLaw::LogPower { beta } => log_power_tail(self.alpha, beta, x).min(1.0),
        }
    }

    /// CDF of the modulus, P(|X| <= x).
    pub fn modulus_cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            1.0 - self.tail_probability(x)
        }
    }

    /// Inverse tail: smallest x with G(x) <= p. Exact for constant L; solved
    /// to ~1e-15 relative accuracy (Newton in log-space) otherwise.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Domain(format!("quantile needs p in (0, 1], got {p}")));
        }
        Ok(match self.eff {
            EffLaw::Constant { c, c_pow } => {
                let x = if self.alpha == 1.0 {
                    c / p
                } else if self.alpha == 2.0 {
                    c_pow / p.sqrt()
                } else {
                    c_pow * p.powf(-1.0 / self.alpha)
                };
                x.max(self.x0)
            }
            EffLaw::LogPower { beta } => {
                if p >= log_power_tail(self.alpha, beta, self.x0) {
                    self.x0
                } else {
                    log_power_inverse_tail(self.alpha, beta, self.x0, p)
                }
            }
        })
    }

    /// One draw of the modulus, by inverse-CDF on a (0, 1] uniform.
    pub fn sample_modulus<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(OpenClosed01);
        self.quantile(u).expect("u in (0,1]")
    }

    /// One signed draw. Sign is an independent fair flip when symmetrized,
    /// otherwise the entry equals its modulus.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let m = self.sample_modulus(rng);
        if self.symmetrized {
            if rng.gen::<bool>() {
                m
            } else {
                -m
            }
        } else {
            m
        }
    }

    /// Norming constant for the maximum of `count` independent entries:
    /// the tail-formula solution of G(x) = 1/count, clamped at the effective
    /// scale (closed form for constant L, bisection/Newton otherwise, well
    /// within 2^-40 relative tolerance).
    pub fn norming_constant(&self, count: u64) -> Result<f64> {
        if count == 0 {
            return Err(Error::Domain("norming_constant needs count >= 1".into()));
        }
        self.quantile(1.0 / count as f64)
    }

    /// Full k-th modulus moment E[|X|^k]; finite only for k < alpha.
    pub fn moment(&self, k: u32) -> Result<f64> {
        let kf = k as f64;
        if kf >= self.alpha {
            return Err(Error::Domain(format!(
                "moment of order {k} diverges for tail exponent {}",
                self.alpha
            )));
        }
        let tail_part = match self.eff {
            EffLaw::Constant { c, .. } => {
                self.alpha * c * self.x0.powf(kf - self.alpha) / (self.alpha - kf)
            }
            EffLaw::LogPower { beta } => {
                let y0 = self.x0.ln();
                let y_max = y0 + 760.0 / (self.alpha - kf);
                simpson_adaptive(
                    |y| moment_integrand(self.alpha, beta, kf, y),
                    y0,
                    y_max,
                    1e-13,
                )
            }
        };
        Ok(self.atom_mass * self.x0.powi(k as i32) + tail_part)
    }

    /// Truncated moment E[|X|^k 1_{|X| <= x}], exact for constant L and by
    /// adaptive quadrature otherwise.
    pub fn truncated_moment(&self, k: u32, x: f64) -> f64 {
        if x < self.x0 {
            return 0.0;
        }
        let kf = k as f64;
        let atom = self.atom_mass * self.x0.powi(k as i32);
        let tail_part = match self.eff {
            EffLaw::Constant { c, .. } => {
                if kf == self.alpha {
                    self.alpha * c * (x / self.x0).ln()
                } else {
                    self.alpha * c * (x.powf(kf - self.alpha) - self.x0.powf(kf - self.alpha))
                        / (kf - self.alpha)
                }
            }
            EffLaw::LogPower { beta } => simpson_adaptive(
                |y| moment_integrand(self.alpha, beta, kf, y),
                self.x0.ln(),
                x.ln(),
                1e-13,
            ),
        };
        atom + tail_part
    }

    /// Uniform-in-(k, x) truncated moment bound, paired with the exact value.
    ///
    /// Returns (bound, empirical) with empirical <= bound guaranteed for every
    /// positive integer k and every x >= scale. The bound is
    ///   L0(x)                         for k < alpha,
    ///   L0(x) * alpha-log term        for k = alpha,
    ///   L0(x) * k/(k-alpha) x^{k-a}   for k > alpha,
    /// with the fitted factor L0 built from sup L, the full moments below
    /// alpha, and the effective-scale mass.
    pub fn truncated_moment_bound(&self, k: u32, x: f64) -> Result<(f64, f64)> {
        if k == 0 {
            return Err(Error::Domain("truncated_moment_bound needs k >= 1".into()));
        }
        if x < self.scale {
            return Err(Error::Domain(format!(
                "truncation level {x} below scale {}",
                self.scale
            )));
        }
        let empirical = self.truncated_moment(k, x);
        let kf = k as f64;
        let x_eff = x.max(self.x0);
        let l_sup = match self.eff {
            EffLaw::Constant { c, .. } => c,
            EffLaw::LogPower { beta } => {
                if beta > 0.0 {
                    x_eff.ln().powf(beta)
                } else {
                    self.x0.ln().powf(beta)
                }
            }
        };
        let scale_mass = self.x0.max(1.0).powf(self.alpha);
        let bound = if kf < self.alpha {
            // max over integer orders below alpha of the full moment
            let mut m_star: f64 = 0.0;
            let mut j = 1u32;
            while (j as f64) < self.alpha && j <= 64 {
                m_star = m_star.max(self.moment(j)?);
                j += 1;
            }
            scale_mass + m_star
        } else if kf == self.alpha {
            scale_mass
                + l_sup * self.alpha * (x_eff.ln().max(0.0) + (-self.x0.ln()).max(0.0))
        } else {
            (scale_mass + l_sup) * kf / (kf - self.alpha) * x_eff.powf(kf - self.alpha)
        };
        debug_assert!(
            empirical <= bound * (1.0 + 1e-12) + 1e-300,
            "truncated moment {empirical} exceeded bound {bound} (k={k}, x={x})"
        );
        Ok((bound, empirical))
    }
}

fn log_power_tail(alpha: f64, beta: f64, x: f64) -> f64 {
    x.ln().powf(beta) * x.powf(-alpha)
}

/// Smallest x >= scale where (ln x)^beta x^{-alpha} is <= 1 and non-increasing.
fn log_power_effective_scale(alpha: f64, beta: f64, scale: f64) -> Result<f64> {
    // g is decreasing once ln x > beta/alpha (trivially so for beta < 0).
    let turn = if beta > 0.0 { (beta / alpha).exp() } else { 1.0 + f64::EPSILON };
    let mut lo = scale.max(turn);
    if log_power_tail(alpha, beta, lo) <= 1.0 {
        return Ok(lo);
    }
    // Walk right until the tail drops below 1, then bisect g(x) = 1.
    let mut hi = lo * 2.0;
    let mut guard = 0;
    while log_power_tail(alpha, beta, hi) > 1.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 4000 {
            return Err(Error::Config(format!(
                "log-power tail (alpha={alpha}, beta={beta}) never drops below 1"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if log_power_tail(alpha, beta, mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= hi * 1e-15 {
            break;
        }
    }
    Ok(hi)
}

/// Solve (ln x)^beta x^{-alpha} = p on the decreasing branch, in y = ln x space.
fn log_power_inverse_tail(alpha: f64, beta: f64, x0: f64, p: f64) -> f64 {
    let target = p.ln();
    let f = |y: f64| beta * y.ln() - alpha * y - target;
    let y0 = x0.ln();
    let mut lo = y0;
    let mut hi = (y0 + 1.0).max((beta * y0.ln().max(0.0) - target) / alpha + 1.0);
    let mut guard = 0;
    while f(hi) > 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            break;
        }
    }
    // f(lo) >= 0 >= f(hi) on the decreasing branch; bisect then polish.
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..4 {
        let fp = beta / y - alpha;
        if fp.abs() < 1e-300 {
            break;
        }
        let step = f(y) / fp;
        let y_new = y - step;
        if y_new > y0 && y_new.is_finite() {
            y = y_new;
        } else {
            break;
        }
    }
    y.exp().max(x0)
}

/// Integrand of E[|X|^k 1] after t = e^y: e^{(k-alpha)y} y^{beta-1} (alpha y - beta).
fn moment_integrand(alpha: f64, beta: f64, k: f64, y: f64) -> f64 {
    ((k - alpha) * y).exp() * y.powf(beta - 1.0) * (alpha * y - beta)
}

fn simpson_adaptive(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn recurse(
        f: impl Fn(f64) -> f64 + Copy,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, left, tol * 0.5, depth - 1)
                + recurse(f, m, b, right, tol * 0.5, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    // Split into a few panels first: the integrand decays exponentially and a
    // single panel would under-resolve the head.
    let panels = 16;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + i as f64 * h;
        let hi = lo + h;
        let whole = simpson(f, lo, hi);
        total += recurse(f, lo, hi, whole, rel_tol * whole.abs().max(1e-30), 40);
    }
    total
}

/// Phase of the ensemble relative to the localization/delocalization
/// threshold alpha = 2(1 + 1/mu).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Subcritical,
    Supercritical,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RegimeParams {
    pub mu: f64,
    pub alpha: f64,
    pub regime: Regime,
    pub threshold: f64,
}

impl RegimeParams {
    pub fn new(mu: f64, alpha: f64) -> Result<Self> {
        if !(mu > 0.0 && mu <= 1.0) {
            return Err(Error::Config(format!("bandwidth exponent mu must be in (0, 1], got {mu}")));
        }
        if !(alpha > 0.0) {
            return Err(Error::Config(format!("alpha must be positive, got {alpha}")));
        }
        let threshold = 2.0 * (1.0 + 1.0 / mu);
        if (alpha - threshold).abs() <= 1e-12 * threshold {
            return Err(Error::Config(format!(
                "alpha = {alpha} sits exactly at the threshold 2(1 + 1/mu) = {threshold}; \
                 no claim is made there"
            )));
        }
        let regime = if alpha < threshold {
            Regime::Subcritical
        } else {
            Regime::Supercritical
        };
        Ok(Self { mu, alpha, regime, threshold })
    }
}

/// Exponent window for a truncated sum: keep terms with
/// n^low < Y <= n^high (no lower cut when `low_exponent` is None).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SumWindow {
    pub low_exponent: Option<f64>,
    pub high_exponent: f64,
}

/// Position of the window relative to the critical exponent mu/alpha (the
/// order of the largest of n^mu i.i.d. draws).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowPart {
    /// No lower cut, upper exponent at most mu/alpha.
    UpToCritical,
    /// Interior window strictly below mu/alpha (needs alpha >= 1).
    BelowCritical,
    /// Window containing mu/alpha (possibly touching it at an endpoint).
    AroundCritical,
    /// Lower exponent strictly above mu/alpha.
    AboveCritical,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TruncatedSumOutcome {
    pub part: WindowPart,
    pub predicted_exponent: f64,
    pub exceedance_frequency: f64,
    pub mean_sum: f64,
    pub draws_per_replica: usize,
    pub replicas: usize,
}

/// Classify a window against the critical exponent mu/alpha and return the
/// concentration exponent predicted for it. Endpoints exactly at mu/alpha
/// classify as AroundCritical (the straddling part allows zero widths).
pub fn classify_window(
    alpha: f64,
    mu: f64,
    window: SumWindow,
    epsilon: f64,
) -> Result<(WindowPart, f64)> {
    if !(mu > 0.0) {
        return Err(Error::Config(format!("mu must be positive, got {mu}")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    let critical = mu / alpha;
    let b = window.high_exponent;
    match window.low_exponent {
        None => {
            if !(0.0..=critical).contains(&b) {
                return Err(Error::Config(format!(
                    "uncut window needs high exponent in [0, mu/alpha] = [0, {critical}], got {b}"
                )));
            }
            let pred = mu + b * (1.0 - alpha).max(0.0) + epsilon;
            Ok((WindowPart::UpToCritical, pred))
        }
        Some(a) => {
            if a >= b {
                return Err(Error::Config(format!(
                    "window needs low exponent {a} < high exponent {b}"
                )));
            }
            if a > critical {
                Ok((WindowPart::AboveCritical, b + epsilon))
            } else if b < critical {
                if alpha < 1.0 {
                    return Err(Error::Config(format!(
                        "interior window below mu/alpha needs alpha >= 1, got {alpha}"
                    )));
                }
                if a < 0.0 {
                    return Err(Error::Config(format!(
                        "interior window needs low exponent >= 0, got {a}"
                    )));
                }
                Ok((WindowPart::BelowCritical, mu - a * (alpha - 1.0) + epsilon))
            } else {
                // a <= critical <= b
                let eta = critical - a;
                let eta_prime = b - critical;
                if epsilon <= alpha * eta + eta_prime {
                    return Err(Error::Config(format!(
                        "window around mu/alpha needs epsilon > alpha*eta + eta' = {}",
                        alpha * eta + eta_prime
                    )));
                }
                Ok((WindowPart::AroundCritical, critical + epsilon))
            }
        }
    }
}

/// Monte Carlo check of the concentration of windowed sums of heavy-tailed
/// draws: per replica, sum the moduli among floor(n^mu) draws that land in
/// the window, and report how often the sum exceeds n^predicted_exponent.
pub fn truncated_sum_concentration(
    law: &TailLaw,
    mu: f64,
    n: usize,
    window: SumWindow,
    epsilon: f64,
    replicas: usize,
    root_seed: u64,
) -> Result<TruncatedSumOutcome> {
    if n < 2 {
        return Err(Error::Config(format!("n must be >= 2, got {n}")));
    }
    if replicas == 0 {
        return Err(Error::Config("need at least one replica".into()));
    }
    let (part, predicted_exponent) = classify_window(law.alpha(), mu, window, epsilon)?;
    let nf = n as f64;
    let d_n = nf.powf(mu).floor().max(1.0) as usize;
    let low = window.low_exponent.map(|a| nf.powf(a));
    let high = nf.powf(window.high_exponent);
    let threshold = nf.powf(predicted_exponent);

    let sums: Vec<f64> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut rng = derive_rng(root_seed, r as u64, salt::TAIL_SUM);
            let mut sum = 0.0;
            for _ in 0..d_n {
                let m = law.sample_modulus(&mut rng);
                let above_low = low.map_or(true, |lo| m > lo);
                if above_low && m <= high {
                    sum += m;
                }
            }
            sum
        })
        .collect();

    let exceed = sums.iter().filter(|&&s| s > threshold).count();
    Ok(TruncatedSumOutcome {
        part,
        predicted_exponent,
        exceedance_frequency: exceed as f64 / replicas as f64,
        mean_sum: sums.iter().sum::<f64>() / replicas as f64,
        draws_per_replica: d_n,
        replicas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::dkw_band;
    use proptest::prelude::*;

    fn pareto(alpha: f64) -> TailLaw {
        TailLaw::new(alpha, 1.0, SlowlyVarying::Constant(1.0), false, false).unwrap()
    }

    #[test]
    fn quantile_inverts_tail() {
        let law = pareto(2.0);
        assert!((law.quantile(0.25).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn tail_closed_form() {
        let law = pareto(2.0);
        assert!((law.tail_probability(10.0) - 0.01).abs() < 1e-17);
        assert_eq!(law.tail_probability(0.0), 1.0);
        assert_eq!(law.tail_probability(0.5), 1.0);
    }

    #[test]
    fn variance_normalized_tail_constant() {
        let law = TailLaw::new(3.0, 1.0, SlowlyVarying::Constant(1.0), true, true).unwrap();
        // Pareto(3) has second moment 3; rescaling by 1/sqrt(3) pushes the
        // tail constant to (1/3)^{3/2}.
        let c_expected = (1.0f64 / 3.0).powf(1.5);
        let x = 2.5;
        assert!((law.tail_probability(x) - c_expected * x.powf(-3.0)).abs() < 1e-15);
        assert!((law.normalization_factor() - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((law.moment(2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn variance_normalized_monte_carlo_second_moment() {
        let law = TailLaw::new(3.0, 1.0, SlowlyVarying::Constant(1.0), true, true).unwrap();
        let mut rng = derive_rng(7, 0, salt::GENERIC);
        let n = 1_000_000;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let x = law.sample(&mut rng);
            sum_sq += x * x;
        }
        let m2 = sum_sq / n as f64;
        assert!((m2 - 1.0).abs() < 0.01, "empirical second moment {m2}");
    }

    #[test]
    fn symmetrized_mean_sign_vanishes() {
        let law = TailLaw::new(2.0, 1.0, SlowlyVarying::Constant(1.0), true, false).unwrap();
        let mut rng = derive_rng(11, 0, salt::GENERIC);
        let n = 1_000_000;
        let mut signs = 0i64;
        for _ in 0..n {
            signs += law.sample(&mut rng).signum() as i64;
        }
        let mean_sign = signs as f64 / n as f64;
        assert!(mean_sign.abs() < 0.004, "mean sign {mean_sign}");
    }

    #[test]
    fn variance_normalization_rejected_below_two() {
        assert!(TailLaw::new(2.0, 1.0, SlowlyVarying::Constant(1.0), true, true).is_err());
        assert!(TailLaw::new(3.0, 1.0, SlowlyVarying::LogPower(1.0), true, true).is_err());
    }

    #[test]
    fn norming_constant_closed_form_and_edge() {
        let law = pareto(2.0);
        assert!((law.norming_constant(10_000).unwrap() - 100.0).abs() < 1e-10);
        assert!((law.norming_constant(1).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn norming_constant_log_power_solves_tail() {
        let law = TailLaw::new(1.5, 1.0, SlowlyVarying::LogPower(2.0), false, false).unwrap();
        for &m in &[100u64, 10_000, 1_000_000] {
            let b = law.norming_constant(m).unwrap();
            let g = law.tail_probability(b);
            assert!(
                (g - 1.0 / m as f64).abs() <= 1e-9 / m as f64,
                "G(b_{m}) = {g}"
            );
        }
    }

    #[test]
    fn truncated_moment_examples() {
        let law = pareto(3.0);
        // E[A^4 1_{A<=10}] = 3(10-1)
        let (bound, emp) = law.truncated_moment_bound(4, 10.0).unwrap();
        assert!((emp - 27.0).abs() < 1e-12, "empirical {emp}");
        assert!(emp <= bound);
        // k = 1 < alpha: below the full mean 3/2, bound independent of x
        let (b1, e1) = law.truncated_moment_bound(1, 10.0).unwrap();
        let (b2, e2) = law.truncated_moment_bound(1, 1e6).unwrap();
        assert!(e1 <= 1.5 + 1e-12 && e2 <= 1.5 + 1e-12);
        assert_eq!(b1, b2);
        // empty truncation range
        let (b0, e0) = law.truncated_moment_bound(5, 1.0).unwrap();
        assert_eq!(e0, 0.0);
        assert!(b0 >= 0.0);
        // below scale -> domain error
        assert!(law.truncated_moment_bound(2, 0.5).is_err());
    }

    #[test]
    fn truncated_moment_bound_grid() {
        let laws = vec![
            pareto(0.8),
            pareto(1.0),
            pareto(2.5),
            pareto(3.0),
            TailLaw::new(3.0, 1.0, SlowlyVarying::Constant(1.0), true, true).unwrap(),
            TailLaw::new(2.0, 1.5, SlowlyVarying::Constant(4.0), false, false).unwrap(),
            TailLaw::new(1.5, 1.0, SlowlyVarying::LogPower(1.5), false, false).unwrap(),
            TailLaw::new(2.5, 1.0, SlowlyVarying::LogPower(-1.0), false, false).unwrap(),
        ];
        for law in &laws {
            for k in 1..=8u32 {
                for j in 0..=20 {
                    let x = law.scale() * (1u64 << j) as f64;
                    let (bound, emp) = law.truncated_moment_bound(k, x).unwrap();
                    assert!(
                        emp <= bound * (1.0 + 1e-10),
                        "k={k} x={x} emp={emp} bound={bound} alpha={}",
                        law.alpha()
                    );
                }
            }
        }
    }

    #[test]
    fn truncated_moment_quadrature_matches_constant_case() {
        // beta = 0 log-power must agree with the closed-form constant law.
        let a = TailLaw::new(2.5, 1.0, SlowlyVarying::Constant(1.0), false, false).unwrap();
        let b = TailLaw::new(2.5, 1.0, SlowlyVarying::LogPower(1e-12), false, false).unwrap();
        for k in 1..=4u32 {
            for &x in &[1.5, 4.0, 64.0] {
                let ea = a.truncated_moment(k, x);
                let eb = b.truncated_moment(k, x);
                assert!((ea - eb).abs() <= 1e-8 * ea.max(1.0), "k={k} x={x}: {ea} vs {eb}");
            }
        }
    }

    #[test]
    fn window_part_formulas() {
        // interior window below critical: mu - a(alpha-1) + eps
        let (part, pred) = classify_window(
            3.0,
            1.0,
            SumWindow { low_exponent: Some(0.2), high_exponent: 0.3 },
            0.05,
        )
        .unwrap();
        assert_eq!(part, WindowPart::BelowCritical);
        assert!((pred - 0.65).abs() < 1e-14);
        // degenerate straddle at the critical point: mu/alpha + eps
        let (part, pred) = classify_window(
            2.0,
            1.0,
            SumWindow { low_exponent: Some(0.5 - 1e-13), high_exponent: 0.5 + 1e-13 },
            0.1,
        )
        .unwrap();
        assert_eq!(part, WindowPart::AroundCritical);
        assert!((pred - 0.6).abs() < 1e-10);
        // endpoint exactly at critical classifies as straddling
        let (part, _) = classify_window(
            2.0,
            1.0,
            SumWindow { low_exponent: Some(0.2), high_exponent: 0.5 },
            1.2,
        )
        .unwrap();
        assert_eq!(part, WindowPart::AroundCritical);
        // no-lower-cut with positive-part exponent
        let (part, pred) = classify_window(
            0.5,
            1.0,
            SumWindow { low_exponent: None, high_exponent: 1.0 },
            0.1,
        )
        .unwrap();
        assert_eq!(part, WindowPart::UpToCritical);
        assert!((pred - (1.0 + 0.5 + 0.1)).abs() < 1e-14);
        // above critical: any gamma > b
        let (part, pred) = classify_window(
            2.0,
            1.0,
            SumWindow { low_exponent: Some(0.6), high_exponent: 0.8 },
            0.1,
        )
        .unwrap();
        assert_eq!(part, WindowPart::AboveCritical);
        assert!((pred - 0.9).abs() < 1e-14);
    }

    #[test]
    fn window_mismatches_rejected() {
        // uncut window reaching above critical
        assert!(classify_window(
            2.0,
            1.0,
            SumWindow { low_exponent: None, high_exponent: 0.7 },
            0.1
        )
        .is_err());
        // interior window below critical with alpha < 1
        assert!(classify_window(
            0.8,
            1.0,
            SumWindow { low_exponent: Some(0.1), high_exponent: 0.2 },
            0.1
        )
        .is_err());
        // straddling window with too small epsilon
        assert!(classify_window(
            2.0,
            1.0,
            SumWindow { low_exponent: Some(0.4), high_exponent: 0.6 },
            0.05
        )
        .is_err());
    }

    #[test]
    fn truncated_sum_exceedance_small() {
        let law = pareto(3.0);
        let out = truncated_sum_concentration(
            &law,
            1.0,
            10_000,
            SumWindow { low_exponent: Some(0.2), high_exponent: 0.22 },
            0.05,
            200,
            1234,
        )
        .unwrap();
        assert_eq!(out.part, WindowPart::BelowCritical);
        assert!(
            out.exceedance_frequency <= 0.02,
            "exceedance {}",
            out.exceedance_frequency
        );
    }

    #[test]
    fn regime_classification() {
        assert_eq!(RegimeParams::new(1.0, 1.5).unwrap().regime, Regime::Subcritical);
        assert_eq!(RegimeParams::new(1.0, 6.0).unwrap().regime, Regime::Supercritical);
        assert!(RegimeParams::new(1.0, 4.0).is_err()); // exactly critical
        assert!(RegimeParams::new(0.0, 3.0).is_err());
    }

    #[test]
    fn empirical_tail_within_dkw_band() {
        let law = TailLaw::new(1.5, 1.0, SlowlyVarying::Constant(1.0), false, false).unwrap();
        let mut rng = derive_rng(3, 0, salt::GENERIC);
        let n = 1_000_000;
        let mut xs: Vec<f64> = (0..n).map(|_| law.sample_modulus(&mut rng)).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let d = crate::stats::ks_statistic(&xs, |x| law.modulus_cdf(x));
        let band = dkw_band(n, 0.001);
        assert!(d <= band, "KS {d} vs DKW band {band}");
    }

    proptest! {
        #[test]
        fn inverse_cdf_round_trip_constant(
            alpha in 0.3f64..6.0,
            c in 0.2f64..5.0,
            p in 1e-9f64..1.0,
        ) {
            let law = TailLaw::new(alpha, 1.0, SlowlyVarying::Constant(c), false, false).unwrap();
            let x = law.quantile(p).unwrap();
            if x > law.effective_scale() {
                let g = law.tail_probability(x);
                prop_assert!((g - p).abs() <= 1e-12 * p, "p={p} g={g}");
            } else {
                // clamped at the effective scale: x is still the smallest
                // point with G(x) <= p (G jumps across any atom there)
                prop_assert!(law.tail_probability(x) <= p * (1.0 + 1e-12));
                let below = x * (1.0 - 1e-9);
                prop_assert!(law.tail_probability(below.max(0.0)) >= p);
            }
        }

        #[test]
        fn norming_constant_monotone(
            alpha in 0.5f64..5.0,
            m1 in 1u64..100_000,
            m2 in 1u64..100_000,
        ) {
            let law = TailLaw::new(alpha, 1.0, SlowlyVarying::Constant(1.0), false, false).unwrap();
            let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
            let b_lo = law.norming_constant(lo).unwrap();
            let b_hi = law.norming_constant(hi).unwrap();
            prop_assert!(b_lo <= b_hi * (1.0 + 1e-12));
            // G(b_M) * M <= 1 with equality away from the clamp
            let g = law.tail_probability(b_hi);
            prop_assert!(g * hi as f64 <= 1.0 + 1e-9);
        }
    }
}
