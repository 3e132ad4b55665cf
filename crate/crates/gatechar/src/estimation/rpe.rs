//! Iterative phase refinement and the extractors built on it: the
//! amplitude/axis families for (ε, θ) and the CZ phase families for
//! (α, β).

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use super::fit::{fit_exponential, FitResult, SignalPoint};
use super::{Dataset, EstimationError};
use crate::circuit::Sign;
use crate::protocols::FamilyKind;

/// Two-quadrature measurement at one depth: `cos_est ≈ cos(depth·φ)` and
/// `sin_est ≈ sin(depth·φ)`, with `sigma` the larger of the two binomial
/// standard errors (zero for exact data).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSample {
    pub depth: u64,
    pub cos_est: f64,
    pub sin_est: f64,
    pub sigma: f64,
}

/// A refined phase with its half-width window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseEstimate {
    /// Phase in (-π, π].
    pub phase: f64,
    /// Half-width of the final consistency window, `π / (2·depth)` at the
    /// deepest depth used.
    pub half_width: f64,
    /// Number of depths incorporated before stopping.
    pub depths_used: usize,
    /// True when a quadrature amplitude fell below the statistical floor
    /// and refinement stopped early with a widened window.
    pub aborted: bool,
}

fn wrap_angle(x: f64) -> f64 {
    let mut y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Bit-by-bit phase refinement. At each depth `d` the pair
/// `(cos_est, sin_est)` pins `d·φ` modulo 2π; among the lattice of
/// compatible φ values the one closest (circularly) to the running
/// estimate is kept, shrinking the window to `π/(2d)`.
///
/// `initial` and `initial_half_width` encode the prior: use `(0, π)` when
/// the smallest depth is 1 (any phase), or `(0, π/2)` when depths start at
/// 2 and the phase is known to be small.
pub fn refine_phase(
    samples: &[QuadratureSample],
    initial: f64,
    initial_half_width: f64,
) -> PhaseEstimate {
    let mut ordered: Vec<&QuadratureSample> = samples.iter().collect();
    ordered.sort_by_key(|s| s.depth);

    let mut phase = initial;
    let mut half_width = initial_half_width;
    let mut used = 0;
    let mut aborted = false;

    for s in ordered {
        let amplitude = s.cos_est.hypot(s.sin_est);
        let floor = (3.0 * s.sigma).max(1e-12);
        if amplitude < floor {
            aborted = true;
            break;
        }
        let measured = s.sin_est.atan2(s.cos_est); // d·φ mod 2π
        let d = s.depth as f64;
        // Candidate closest to the current estimate on the circle.
        let base = measured / d;
        let spacing = 2.0 * PI / d;
        let offset = wrap_angle(phase - base);
        let k = (offset / spacing).round();
        phase = wrap_angle(base + k * spacing);
        half_width = PI / (2.0 * d);
        used += 1;
    }

    PhaseEstimate { phase, half_width, depths_used: used, aborted }
}

/// RPE output: the coherent gate parameters with reported uncertainties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpeEstimate {
    pub epsilon: f64,
    pub theta: f64,
    pub epsilon_uncertainty: f64,
    pub theta_uncertainty: f64,
    pub amplitude: PhaseEstimate,
    pub axis: PhaseEstimate,
}

fn family_id(kind: FamilyKind, depth: u64, sign: Sign) -> String {
    format!("{}/{}/{}", kind.as_str(), depth, sign.label())
}

fn quadrature_sigma(n_cos: u64, k_cos: u64, n_sin: u64, k_sin: u64) -> f64 {
    let sig = |n: u64, k: u64| {
        let nf = n as f64;
        let p = (k as f64 + 1.0) / (nf + 2.0);
        2.0 * (p * (1.0 - p) / nf).sqrt()
    };
    sig(n_cos, k_cos).max(sig(n_sin, k_sin))
}

/// Collects the depths 2^0, 2^1, ... present for a kind; errors if a
/// depth in the contiguous ladder is half-present.
fn quadrature_samples(
    dataset: &Dataset,
    kind: FamilyKind,
    flip_sin: bool,
) -> Result<Vec<QuadratureSample>, EstimationError> {
    let mut samples = Vec::new();
    let mut depth = 1u64;
    loop {
        let cos_id = family_id(kind, depth, Sign::Plus);
        let sin_id = family_id(kind, depth, Sign::Minus);
        let (cos_rec, sin_rec) = match (dataset.get(&cos_id), dataset.get(&sin_id)) {
            (Some(c), Some(s)) => (c, s),
            (None, None) => break,
            (Some(_), None) => return Err(EstimationError::MissingRecord { id: sin_id }),
            (None, Some(_)) => return Err(EstimationError::MissingRecord { id: cos_id }),
        };
        let c = 2.0 * cos_rec.freq_zeros() - 1.0;
        let mut s = 2.0 * sin_rec.freq_zeros() - 1.0;
        if flip_sin {
            s = -s;
        }
        samples.push(QuadratureSample {
            depth,
            cos_est: c,
            sin_est: s,
            sigma: quadrature_sigma(cos_rec.n, cos_rec.k.zeros(), sin_rec.n, sin_rec.k.zeros()),
        });
        depth *= 2;
    }
    if samples.is_empty() {
        return Err(EstimationError::MissingRecord {
            id: family_id(kind, 1, Sign::Plus),
        });
    }
    Ok(samples)
}

/// Extracts (ε̂, θ̂) from the RPE circuit records.
///
/// The amplitude family refines the per-gate rotation angle φ, giving
/// `ε̂ = 2φ̂/π - 1`. The axis family refines the per-period angle Ψ of the
/// `X90·X90·Z180` echo, which satisfies `cos(Ψ/2) = -sin(γ)·sin(θ)`;
/// writing `Ψ = π + ω` gives `θ̂ = asin(sin(ω̂/2)/sin(γ̂))`.
pub fn rpe_extract(dataset: &Dataset) -> Result<RpeEstimate, EstimationError> {
    let amp_samples = quadrature_samples(dataset, FamilyKind::RpeAmplitude, false)?;
    let amplitude = refine_phase(&amp_samples, 0.0, PI);
    let gamma = amplitude.phase;
    let epsilon = 2.0 * gamma / PI - 1.0;
    let epsilon_uncertainty = amplitude.half_width * 2.0 / PI;

    let axis_samples = quadrature_samples(dataset, FamilyKind::RpeAxis, false)?;
    let axis = refine_phase(&axis_samples, PI, PI);
    let omega = wrap_angle(axis.phase - PI);
    let sin_gamma = gamma.sin().max(1e-6);
    let theta = ((omega / 2.0).sin() / sin_gamma).clamp(-1.0, 1.0).asin();
    // dθ/dΨ = cos(ω/2) / (2·sinγ·cosθ), evaluated at the estimate.
    let dtheta = (omega / 2.0).cos().abs() / (2.0 * sin_gamma * theta.cos().max(1e-6));
    let theta_uncertainty = axis.half_width * dtheta;

    Ok(RpeEstimate {
        epsilon,
        theta,
        epsilon_uncertainty,
        theta_uncertainty,
        amplitude,
        axis,
    })
}

/// One fitted CZ decay family: the exponential fit in the number of echoed
/// depths and the implied per-CZ Pauli-rate sum `(1 - √λ)/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzDecayEstimate {
    pub fit: FitResult,
    pub rate_sum: f64,
    pub rate_sum_err: f64,
}

/// CZ characterization output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CzEstimate {
    pub alpha: f64,
    pub beta: f64,
    pub alpha_uncertainty: f64,
    pub beta_uncertainty: f64,
    /// Bell-family decay: estimates `p_IZ + p_ZI`.
    pub bell: CzDecayEstimate,
    /// Plus-family decay: estimates `p_ZI + p_ZZ`.
    pub plus: CzDecayEstimate,
}

fn cz_quadrature_samples(
    dataset: &Dataset,
    cos_kind: FamilyKind,
    cos_sign: Sign,
    sin_kind: FamilyKind,
    sin_sign: Sign,
) -> Result<Vec<QuadratureSample>, EstimationError> {
    let mut samples = Vec::new();
    let mut depth = 2u64;
    loop {
        let cos_id = family_id(cos_kind, depth, cos_sign);
        let sin_id = family_id(sin_kind, depth, sin_sign);
        let (cos_rec, sin_rec) = match (dataset.get(&cos_id), dataset.get(&sin_id)) {
            (Some(c), Some(s)) => (c, s),
            (None, None) => break,
            (Some(_), None) => return Err(EstimationError::MissingRecord { id: sin_id }),
            (None, Some(_)) => return Err(EstimationError::MissingRecord { id: cos_id }),
        };
        // Success probabilities: c = 2p̂ - 1 from the cosine circuit,
        // s = 1 - 2p̂ from the phase-shifted one.
        samples.push(QuadratureSample {
            depth,
            cos_est: 2.0 * cos_rec.freq_zeros() - 1.0,
            sin_est: 1.0 - 2.0 * sin_rec.freq_zeros(),
            sigma: quadrature_sigma(cos_rec.n, cos_rec.k.zeros(), sin_rec.n, sin_rec.k.zeros()),
        });
        depth *= 2;
    }
    if samples.is_empty() {
        return Err(EstimationError::MissingRecord {
            id: family_id(cos_kind, 2, cos_sign),
        });
    }
    Ok(samples)
}

fn cz_decay_points(
    dataset: &Dataset,
    kind: FamilyKind,
) -> Result<Vec<SignalPoint>, EstimationError> {
    let prefix = format!("{}/", kind.as_str());
    let mut points: Vec<SignalPoint> = dataset
        .records
        .iter()
        .filter(|r| r.id.starts_with(&prefix))
        .filter_map(|r| {
            let depth: f64 = r.id.strip_prefix(&prefix)?.split('/').next()?.parse().ok()?;
            Some(SignalPoint {
                depth,
                value: r.freq_zeros(),
                sigma: r.freq_variance().sqrt(),
            })
        })
        .collect();
    points.sort_by(|a, b| a.depth.partial_cmp(&b.depth).unwrap());
    if points.is_empty() {
        return Err(EstimationError::MissingRecord {
            id: format!("{prefix}<depth>/+1"),
        });
    }
    Ok(points)
}

fn decay_estimate(points: &[SignalPoint]) -> Result<CzDecayEstimate, EstimationError> {
    let fit = fit_exponential(points)?;
    // Success = A·λ^d + b with λ = (1 - 2·rate_sum)² per echoed pair.
    let sqrt_rate = fit.rate.sqrt();
    let rate_sum = (1.0 - sqrt_rate) / 2.0;
    let rate_sum_err = fit.rate_err / (4.0 * sqrt_rate.max(1e-12));
    Ok(CzDecayEstimate { fit, rate_sum, rate_sum_err })
}

/// Extracts CZ phase and decay parameters: α from the control-|0⟩ phase
/// families, β from the control-|1⟩ ones (which accumulate β - α per
/// gate), and the two Pauli-rate sums from the echoed decay circuits.
pub fn cz_extract(dataset: &Dataset) -> Result<CzEstimate, EstimationError> {
    let alpha_samples = cz_quadrature_samples(
        dataset,
        FamilyKind::CzPhaseA,
        Sign::Plus,
        FamilyKind::CzPhaseB,
        Sign::Minus,
    )?;
    // Depths start at 2: prior window of π/2 assumes |α| < π/2.
    let alpha_est = refine_phase(&alpha_samples, 0.0, FRAC_PI_2);

    let beta_samples = cz_quadrature_samples(
        dataset,
        FamilyKind::CzBeta,
        Sign::Plus,
        FamilyKind::CzBeta,
        Sign::Minus,
    )?;
    let beta_rel = refine_phase(&beta_samples, 0.0, FRAC_PI_2);

    let bell = decay_estimate(&cz_decay_points(dataset, FamilyKind::CzDecayBell)?)?;
    let plus = decay_estimate(&cz_decay_points(dataset, FamilyKind::CzDecayPlus)?)?;

    Ok(CzEstimate {
        alpha: alpha_est.phase,
        beta: wrap_angle(beta_rel.phase + alpha_est.phase),
        alpha_uncertainty: alpha_est.half_width,
        beta_uncertainty: beta_rel.half_width + alpha_est.half_width,
        bell,
        plus,
    })
}
