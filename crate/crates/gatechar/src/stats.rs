//! Model-quality statistics: analytical absolute-deviation moments, the
//! Chebyshev model-violation test, likelihood-ratio discrimination error,
//! and confidence-region membership.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::estimation::{Dataset, EstimationError};
use crate::model::{CompiledModel, GatesetModel, ModelError};
use crate::protocols::CircuitSet;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("shot count must be at least 1")]
    ZeroShots,

    #[error("likelihood ratio {0} is below 1; pass the larger likelihood on top")]
    RatioBelowOne(f64),

    #[error("epsilon {0} outside (0, 1)")]
    InvalidEpsilon(f64),

    #[error(transparent)]
    Estimation(#[from] EstimationError),

    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Mean and standard deviation of the absolute deviation `|p̂ - p|` of a
/// binomial frequency estimate with `n` shots.
///
/// The mean is the de Moivre closed form
/// `E|X - np| = 2·(1-p)^(n-⌊np⌋)·p^(⌊np⌋+1)·(⌊np⌋+1)·C(n, ⌊np⌋+1)`
/// divided by n, evaluated in log space so it stays finite up to n ~ 10^6.
/// (The exponent on (1-p) is sometimes misprinted as `1-⌊np⌋`; the form
/// here is the one that matches exhaustive enumeration.)
pub fn absdev_moments(n: u64, p: f64) -> Result<(f64, f64), StatsError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(StatsError::InvalidProbability(p));
    }
    if n == 0 {
        return Err(StatsError::ZeroShots);
    }
    let nf = n as f64;
    let mu = if p == 0.0 || p == 1.0 {
        0.0
    } else {
        let t = nf * p;
        // Guard the floor against representation dust when n·p is an
        // exact integer (e.g. 0.3 * 10 = 2.9999999999999996).
        let j = if (t - t.round()).abs() < 1e-9 { t.round() } else { t.floor() };
        if j + 1.0 > nf {
            // floor(np) = n can only happen at p = 1, handled above, but
            // keep the binomial coefficient from going negative.
            0.0
        } else {
            let ln_choose =
                ln_gamma(nf + 1.0) - ln_gamma(j + 2.0) - ln_gamma(nf - j - 1.0 + 1.0);
            let ln_mu = (2.0f64).ln()
                + (nf - j) * (1.0 - p).ln()
                + (j + 1.0) * p.ln()
                + (j + 1.0).ln()
                + ln_choose
                - nf.ln();
            ln_mu.exp()
        }
    };
    let variance = (p * (1.0 - p) / nf - mu * mu).max(0.0);
    Ok((mu, variance.sqrt()))
}

/// Summed-absolute-deviation model test: `k̂ = |δ̂ - μ|/σ` with the
/// Chebyshev tail guarantee `Pr[k̂ ≥ k] ≤ 1/k²` under the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    /// Observed summed absolute deviation Σ|p̂_i - p_i|.
    pub delta_hat: f64,
    /// Model mean of the statistic.
    pub mu: f64,
    /// Model standard deviation of the statistic.
    pub sigma: f64,
    /// Standardized deviation |δ̂ - μ|/σ.
    pub k_hat: f64,
    /// Chebyshev tail bound 1/k̂², capped at 1.
    pub bound: f64,
    /// True when `bound` falls below the 0.05 rejection threshold.
    pub rejected: bool,
}

pub const REJECTION_THRESHOLD: f64 = 0.05;

/// Evaluates the model-violation statistic of `model` against `dataset`.
/// Two-qubit records are coarse-grained to their all-zeros success
/// outcome so every circuit contributes one binomial term.
pub fn model_violation(
    model: &GatesetModel,
    circuits: &CircuitSet,
    dataset: &Dataset,
) -> Result<ViolationReport, StatsError> {
    let compiled = CompiledModel::new(model)?;
    let mut delta_hat = 0.0;
    let mut mu = 0.0;
    let mut var = 0.0;
    for record in &dataset.records {
        let family = circuits
            .get(&record.id)
            .ok_or_else(|| EstimationError::UnknownCircuit { id: record.id.clone() })?;
        let p = compiled.circuit_probability(&family.circuit)?;
        delta_hat += (record.freq_zeros() - p).abs();
        let (m, s) = absdev_moments(record.n, p)?;
        mu += m;
        var += s * s;
    }
    let sigma = var.sqrt();
    let k_hat = if sigma > 0.0 {
        (delta_hat - mu).abs() / sigma
    } else if delta_hat == mu {
        0.0
    } else {
        f64::INFINITY
    };
    let bound = if k_hat > 0.0 { (1.0 / (k_hat * k_hat)).min(1.0) } else { 1.0 };
    Ok(ViolationReport {
        delta_hat,
        mu,
        sigma,
        k_hat,
        bound,
        rejected: bound < REJECTION_THRESHOLD,
    })
}

/// Probability that maximum-likelihood discrimination picks the wrong one
/// of two models given the observed likelihood ratio `L ≥ 1`:
/// `1/(1 + L)`.
pub fn discrimination_error(l_ratio: f64) -> Result<f64, StatsError> {
    if !(l_ratio >= 1.0) {
        return Err(StatsError::RatioBelowOne(l_ratio));
    }
    Ok(1.0 / (1.0 + l_ratio))
}

/// Membership in the deviation-based confidence region: true iff the
/// model's Chebyshev bound exceeds `eps`.
pub fn confidence_region_member(
    model: &GatesetModel,
    circuits: &CircuitSet,
    dataset: &Dataset,
    eps: f64,
) -> Result<bool, StatsError> {
    if !(0.0 < eps && eps < 1.0) {
        return Err(StatsError::InvalidEpsilon(eps));
    }
    Ok(model_violation(model, circuits, dataset)?.bound > eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::ShotRecord;
    use crate::protocols::readout_circuits;

    /// Exhaustive enumeration oracle for the absolute-deviation moments.
    fn enumerate_moments(n: u64, p: f64) -> (f64, f64) {
        let nf = n as f64;
        let mut mean = 0.0;
        let mut second = 0.0;
        for k in 0..=n {
            let kf = k as f64;
            let ln_choose =
                ln_gamma(nf + 1.0) - ln_gamma(kf + 1.0) - ln_gamma(nf - kf + 1.0);
            let prob = if p == 0.0 {
                if k == 0 { 1.0 } else { 0.0 }
            } else if p == 1.0 {
                if k == n { 1.0 } else { 0.0 }
            } else {
                (ln_choose + kf * p.ln() + (nf - kf) * (1.0 - p).ln()).exp()
            };
            let dev = (kf / nf - p).abs();
            mean += prob * dev;
            second += prob * dev * dev;
        }
        (mean, (second - mean * mean).max(0.0).sqrt())
    }

    #[test]
    fn moments_match_enumeration_for_small_n() {
        for n in 1..=12u64 {
            for step in 0..=20 {
                let p = step as f64 * 0.05;
                let (mu, sigma) = absdev_moments(n, p).unwrap();
                let (mu_ref, sigma_ref) = enumerate_moments(n, p);
                assert!(
                    (mu - mu_ref).abs() < 1e-12,
                    "n={n} p={p}: mu {mu} vs {mu_ref}"
                );
                assert!(
                    (sigma - sigma_ref).abs() < 1e-12,
                    "n={n} p={p}: sigma {sigma} vs {sigma_ref}"
                );
            }
        }
    }

    #[test]
    fn hand_checked_values() {
        let (mu, sigma) = absdev_moments(1, 0.5).unwrap();
        assert!((mu - 0.5).abs() < 1e-15);
        assert!(sigma.abs() < 1e-15);

        let (mu, sigma) = absdev_moments(2, 0.5).unwrap();
        assert!((mu - 0.25).abs() < 1e-15);
        assert!((sigma - 0.25).abs() < 1e-15);

        let (mu, sigma) = absdev_moments(300, 0.0).unwrap();
        assert_eq!((mu, sigma), (0.0, 0.0));
    }

    #[test]
    fn moments_stay_finite_at_large_n() {
        let (mu, sigma) = absdev_moments(1_000_000, 0.3).unwrap();
        // Asymptotically E|p̂-p| → σ_bin·√(2/π).
        let sigma_bin = (0.3f64 * 0.7 / 1e6).sqrt();
        assert!((mu / (sigma_bin * (2.0 / std::f64::consts::PI).sqrt()) - 1.0).abs() < 0.01);
        assert!(sigma > 0.0 && sigma < sigma_bin);
    }

    #[test]
    fn discrimination_error_values() {
        assert_eq!(discrimination_error(1.0).unwrap(), 0.5);
        assert_eq!(discrimination_error(19.0).unwrap(), 0.05);
        assert!((discrimination_error(999.0).unwrap() - 0.001).abs() < 1e-15);
        assert!(discrimination_error(0.5).is_err());
    }

    #[test]
    fn exact_match_still_has_nonzero_khat() {
        // A model that reproduces the empirical frequency exactly sits
        // μ/σ away from the mean of the statistic, not at zero.
        let set = CircuitSet::new(readout_circuits());
        let model = GatesetModel { r_01: 0.1, ..GatesetModel::ideal() };
        let ds = Dataset::new(vec![
            ShotRecord::single("readout_zero/0/+1", 300, 270),
            ShotRecord::single("readout_pi/0/+1", 300, 0),
        ])
        .unwrap();
        let report = model_violation(&model, &set, &ds).unwrap();
        assert!(report.delta_hat < 1e-12);
        assert!(report.k_hat > 0.0);
        assert!((report.k_hat - report.mu / report.sigma).abs() < 1e-9);
        assert!(!report.rejected);
    }

    #[test]
    fn borderline_bound_arithmetic() {
        // k̂ = 4.4722 → 1/k̂² ≈ 0.05.
        let k: f64 = 4.4722;
        assert!(((1.0 / (k * k)) - 0.05).abs() < 1e-4);
    }

    #[test]
    fn far_off_model_is_rejected() {
        let set = CircuitSet::new(readout_circuits());
        let truth = GatesetModel { r_01: 0.05, ..GatesetModel::ideal() };
        let wrong = GatesetModel { r_01: 0.4, ..GatesetModel::ideal() };
        let ds = Dataset::new(vec![
            ShotRecord::single("readout_zero/0/+1", 10_000, 9_500),
            ShotRecord::single("readout_pi/0/+1", 10_000, 10),
        ])
        .unwrap();
        let ok = model_violation(&truth, &set, &ds).unwrap();
        let bad = model_violation(&wrong, &set, &ds).unwrap();
        assert!(!ok.rejected);
        assert!(bad.rejected);
        assert!(bad.k_hat > ok.k_hat);
        assert!(!confidence_region_member(&wrong, &set, &ds, 0.05).unwrap());
        assert!(confidence_region_member(&truth, &set, &ds, 0.05).unwrap());
    }

    #[test]
    fn eps_limits() {
        let set = CircuitSet::new(readout_circuits());
        let model = GatesetModel::ideal();
        let ds = Dataset::new(vec![
            ShotRecord::single("readout_zero/0/+1", 100, 100),
            ShotRecord::single("readout_pi/0/+1", 100, 0),
        ])
        .unwrap();
        // Tiny eps admits any model with finite k̂.
        assert!(confidence_region_member(&model, &set, &ds, 1e-12).unwrap());
        assert!(confidence_region_member(&model, &set, &ds, 0.0).is_err());
        assert!(confidence_region_member(&model, &set, &ds, 1.0).is_err());
    }
}
