//! Weighted nonlinear least squares for the decay form `A·λ^m + b`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::EstimationError;

/// One fit input point: depth, signal value, and its (binomial) standard
/// error. A zero sigma means "exact"; weights are floored internally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalPoint {
    pub depth: f64,
    pub value: f64,
    pub sigma: f64,
}

/// Result of an exponential decay fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub amplitude: f64,
    pub rate: f64,
    pub offset: f64,
    pub amplitude_err: f64,
    pub rate_err: f64,
    pub offset_err: f64,
    pub residual_sum_squares: f64,
    pub iterations: usize,
}

impl FitResult {
    pub fn predict(&self, depth: f64) -> f64 {
        self.amplitude * self.rate.powf(depth) + self.offset
    }
}

const MAX_ITERATIONS: usize = 200;
const STEP_TOL: f64 = 1e-10;
const RATE_MIN: f64 = 1e-9;
const RATE_MAX: f64 = 1.0;
const SIGMA_FLOOR: f64 = 1e-12;

fn weighted_cost(points: &[SignalPoint], params: &Vector3<f64>) -> f64 {
    let (a, l, b) = (params[0], params[1], params[2]);
    points
        .iter()
        .map(|p| {
            let w = 1.0 / p.sigma.max(SIGMA_FLOOR).powi(2);
            let r = p.value - (a * l.powf(p.depth) + b);
            w * r * r
        })
        .sum()
}

fn clamp_params(params: &mut Vector3<f64>) {
    params[1] = params[1].clamp(RATE_MIN, RATE_MAX);
}

/// One Levenberg-Marquardt run from a given start. Returns the final
/// parameters, weighted cost, iteration count, and whether the step-size
/// tolerance was reached.
fn levenberg_marquardt(
    points: &[SignalPoint],
    start: Vector3<f64>,
) -> (Vector3<f64>, f64, usize, bool) {
    let mut params = start;
    clamp_params(&mut params);
    let mut cost = weighted_cost(points, &params);
    let mut mu = 1e-3;
    for iter in 1..=MAX_ITERATIONS {
        let (a, l, b) = (params[0], params[1], params[2]);
        let mut jtj = Matrix3::<f64>::zeros();
        let mut jtr = Vector3::<f64>::zeros();
        for p in points {
            let w = 1.0 / p.sigma.max(SIGMA_FLOOR).powi(2);
            let lm = l.powf(p.depth);
            let jac = Vector3::new(lm, a * p.depth * l.powf(p.depth - 1.0), 1.0);
            let r = p.value - (a * lm + b);
            jtj += w * jac * jac.transpose();
            jtr += w * r * jac;
        }
        // Damped normal equations: (JᵀWJ + μ·diag) δ = JᵀWr.
        let mut accepted = false;
        for _ in 0..20 {
            let mut damped = jtj;
            for d in 0..3 {
                damped[(d, d)] += mu * jtj[(d, d)].max(1e-300);
            }
            let Some(inv) = damped.try_inverse() else {
                mu *= 10.0;
                continue;
            };
            let delta = inv * jtr;
            let mut candidate = params + delta;
            clamp_params(&mut candidate);
            let new_cost = weighted_cost(points, &candidate);
            if new_cost <= cost + 1e-18 {
                let step = (candidate - params).amax();
                params = candidate;
                cost = new_cost;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                if step < STEP_TOL {
                    return (params, cost, iter, true);
                }
                break;
            }
            mu *= 3.0;
        }
        if !accepted {
            // Damping blew up without finding a descent direction: we are
            // at a (possibly constrained) minimum.
            return (params, cost, iter, true);
        }
    }
    (params, cost, MAX_ITERATIONS, false)
}

/// Detrended log-linear regression used to seed the solver: subtract a
/// trial offset, regress `ln(S - b0)` on depth.
fn log_linear_start(points: &[SignalPoint], b0: f64) -> Option<Vector3<f64>> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| {
            let y = p.value - b0;
            (y > 1e-12).then(|| (p.depth, y.ln()))
        })
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let n = usable.len() as f64;
    let sx: f64 = usable.iter().map(|(x, _)| x).sum();
    let sy: f64 = usable.iter().map(|(_, y)| y).sum();
    let sxx: f64 = usable.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = usable.iter().map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let rate = slope.exp().clamp(RATE_MIN, RATE_MAX);
    Some(Vector3::new(intercept.exp(), rate, b0))
}

/// Weighted nonlinear least squares of `A·λ^m + b` over the points.
///
/// Needs at least 4 distinct positive depths. Flat data (signal range
/// below three times the mean standard error) is rejected as
/// unidentifiable rather than fit.
pub fn fit_exponential(points: &[SignalPoint]) -> Result<FitResult, EstimationError> {
    let mut depths: Vec<f64> = points.iter().map(|p| p.depth).collect();
    depths.sort_by(|a, b| a.partial_cmp(b).unwrap());
    depths.dedup();
    if depths.len() < 4 {
        return Err(EstimationError::TooFewDepths { needed: 4, got: depths.len() });
    }
    if depths[0] <= 0.0 {
        return Err(EstimationError::DomainError { name: "depth", value: depths[0] });
    }

    let max = points.iter().map(|p| p.value).fold(f64::NEG_INFINITY, f64::max);
    let min = points.iter().map(|p| p.value).fold(f64::INFINITY, f64::min);
    let range = max - min;
    let mean_sigma = points.iter().map(|p| p.sigma).sum::<f64>() / points.len() as f64;
    if range == 0.0 || range < 3.0 * mean_sigma {
        return Err(EstimationError::Identifiability { range, floor: 3.0 * mean_sigma });
    }

    let last = points
        .iter()
        .max_by(|a, b| a.depth.partial_cmp(&b.depth).unwrap())
        .unwrap();
    let mut starts: Vec<Vector3<f64>> = Vec::new();
    for b0 in [0.0, min - 0.05 * range, last.value] {
        if let Some(s) = log_linear_start(points, b0) {
            starts.push(s);
        }
    }
    starts.push(Vector3::new(range, 0.9, min));
    starts.push(Vector3::new(max, 0.99, 0.0));

    let mut best: Option<(Vector3<f64>, f64, usize, bool)> = None;
    for start in starts {
        let run = levenberg_marquardt(points, start);
        if best.as_ref().is_none_or(|b| run.1 < b.1) {
            best = Some(run);
        }
    }
    let (params, _, iterations, converged) = best.expect("at least one start");
    if !converged {
        return Err(EstimationError::NonConvergence { iterations });
    }

    let (a, l, b) = (params[0], params[1], params[2]);
    // Covariance from the weighted normal matrix at the optimum.
    let mut jtj = Matrix3::<f64>::zeros();
    for p in points {
        let w = 1.0 / p.sigma.max(SIGMA_FLOOR).powi(2);
        let jac = Vector3::new(
            l.powf(p.depth),
            a * p.depth * l.powf(p.depth - 1.0),
            1.0,
        );
        jtj += w * jac * jac.transpose();
    }
    let errs = jtj
        .try_inverse()
        .map(|cov| [cov[(0, 0)], cov[(1, 1)], cov[(2, 2)]].map(|v| v.max(0.0).sqrt()))
        .unwrap_or([f64::INFINITY; 3]);

    let ssr: f64 = points
        .iter()
        .map(|p| {
            let r = p.value - (a * l.powf(p.depth) + b);
            r * r
        })
        .sum();

    Ok(FitResult {
        amplitude: a,
        rate: l,
        offset: b,
        amplitude_err: errs[0],
        rate_err: errs[1],
        offset_err: errs[2],
        residual_sum_squares: ssr,
        iterations,
    })
}

/// Weighted linear least squares helper used by robustness analyses:
/// slope and intercept of `y = slope·x + intercept`.
pub fn linear_regression(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let x = DVector::from_iterator(points.len(), points.iter().map(|p| p.0));
    let y = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let mut design = DMatrix::zeros(points.len(), 2);
    design.column_mut(0).copy_from(&x);
    design.column_mut(1).fill(1.0);
    let normal = design.transpose() * &design;
    let rhs = design.transpose() * y;
    normal.try_inverse().map(|inv| {
        let sol = inv * rhs;
        (sol[0], sol[1])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact_points(a: f64, l: f64, b: f64, depths: &[f64]) -> Vec<SignalPoint> {
        depths
            .iter()
            .map(|&m| SignalPoint { depth: m, value: a * l.powf(m) + b, sigma: 0.0 })
            .collect()
    }

    #[test]
    fn noiseless_round_trip_tight() {
        let points = exact_points(1.0, 0.9604, 0.0, &[20.0, 40.0, 60.0, 80.0, 100.0, 120.0]);
        let fit = fit_exponential(&points).unwrap();
        assert!((fit.rate - 0.9604).abs() < 1e-9, "rate {}", fit.rate);
        assert!((fit.amplitude - 1.0).abs() < 1e-7);
        assert!(fit.offset.abs() < 1e-8);
    }

    #[test]
    fn spam_shifted_round_trip() {
        let points = exact_points(0.9, 0.976044, 0.01, &[20.0, 40.0, 60.0, 80.0, 100.0, 120.0]);
        let fit = fit_exponential(&points).unwrap();
        assert!((fit.amplitude - 0.9).abs() < 1e-8);
        assert!((fit.rate - 0.976044).abs() < 1e-8);
        assert!((fit.offset - 0.01).abs() < 1e-8);
    }

    #[test]
    fn flat_data_is_unidentifiable() {
        let points: Vec<SignalPoint> = [20.0, 40.0, 60.0, 80.0]
            .iter()
            .map(|&m| SignalPoint { depth: m, value: 0.37, sigma: 0.01 })
            .collect();
        assert!(matches!(
            fit_exponential(&points),
            Err(EstimationError::Identifiability { .. })
        ));
    }

    #[test]
    fn too_few_depths_rejected() {
        let points = exact_points(1.0, 0.9, 0.0, &[2.0, 4.0, 6.0]);
        assert!(matches!(
            fit_exponential(&points),
            Err(EstimationError::TooFewDepths { .. })
        ));
    }

    #[test]
    fn noisy_fit_recovers_roughly() {
        // Deterministic pseudo-noise; the point is robustness of the
        // machinery, not statistics.
        let mut points = exact_points(1.0, 0.96, 0.02, &[10.0, 20.0, 30.0, 40.0, 60.0, 80.0]);
        for (i, p) in points.iter_mut().enumerate() {
            let wiggle = ((i as f64 + 1.0) * 12.9898).sin() * 0.01;
            p.value += wiggle;
            p.sigma = 0.01;
        }
        let fit = fit_exponential(&points).unwrap();
        assert!((fit.rate - 0.96).abs() < 0.02, "rate {}", fit.rate);
        assert!(fit.rate_err > 0.0);
    }

    #[test]
    fn unequal_depth_spacing_supported() {
        let points = exact_points(0.5, 0.9604, 0.5, &[2.0, 4.0, 6.0, 8.0, 12.0, 16.0]);
        let fit = fit_exponential(&points).unwrap();
        assert!((fit.rate - 0.9604).abs() < 1e-8);
        assert!((fit.offset - 0.5).abs() < 1e-8);
    }
}
