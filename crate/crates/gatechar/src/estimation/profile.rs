//! One-dimensional likelihood profiles with threshold intervals.
//!
//! A profile varies a single parameter with the other five held at the
//! reference model (a profile slice, not a re-optimized profile
//! likelihood). The interval is the connected region around the maximum
//! where the likelihood stays above `L* = L_max / (1/p* - 1)` — at the
//! default `p* = 0.05` that ratio is 19 — with endpoints interpolated
//! between grid points at the threshold crossing.

use serde::{Deserialize, Serialize};

use super::mle::log_likelihood;
use super::{Dataset, EstimationError};
use crate::model::GatesetModel;
use crate::protocols::CircuitSet;

/// The six profiled parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelParameter {
    Epsilon,
    Theta,
    PX,
    PZ,
    R01,
    R10,
}

impl ModelParameter {
    pub const ALL: [ModelParameter; 6] = [
        ModelParameter::Epsilon,
        ModelParameter::Theta,
        ModelParameter::PX,
        ModelParameter::PZ,
        ModelParameter::R01,
        ModelParameter::R10,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelParameter::Epsilon => "epsilon",
            ModelParameter::Theta => "theta",
            ModelParameter::PX => "p_x",
            ModelParameter::PZ => "p_z",
            ModelParameter::R01 => "r_01",
            ModelParameter::R10 => "r_10",
        }
    }

    pub fn get(self, model: &GatesetModel) -> f64 {
        match self {
            ModelParameter::Epsilon => model.epsilon,
            ModelParameter::Theta => model.theta,
            ModelParameter::PX => model.p_x,
            ModelParameter::PZ => model.p_z,
            ModelParameter::R01 => model.r_01,
            ModelParameter::R10 => model.r_10,
        }
    }

    pub fn set(self, model: &mut GatesetModel, value: f64) {
        match self {
            ModelParameter::Epsilon => model.epsilon = value,
            ModelParameter::Theta => model.theta = value,
            ModelParameter::PX => model.p_x = value,
            ModelParameter::PZ => model.p_z = value,
            ModelParameter::R01 => model.r_01 = value,
            ModelParameter::R10 => model.r_10 = value,
        }
    }

    /// Grid bounds, matching the likelihood-maximization box.
    pub fn bounds(self) -> (f64, f64) {
        match self {
            ModelParameter::Epsilon | ModelParameter::Theta => (-0.5, 0.5),
            _ => (0.0, 0.5),
        }
    }
}

/// A computed profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodProfile {
    pub parameter: String,
    pub grid: Vec<f64>,
    pub log_likelihood: Vec<f64>,
    /// `ln L*`: the interval threshold.
    pub threshold: f64,
    pub max_log_likelihood: f64,
    /// Endpoints of the connected above-threshold run around the maximum.
    pub interval: (f64, f64),
}

impl LikelihoodProfile {
    pub fn contains(&self, value: f64) -> bool {
        self.interval.0 <= value && value <= self.interval.1
    }
}

/// Profile of `parameter` over `grid` (strictly increasing, covering the
/// model's value). Grid points that make the model invalid score
/// `-infinity` and fall outside any interval.
pub fn likelihood_profile(
    model: &GatesetModel,
    circuits: &CircuitSet,
    dataset: &Dataset,
    parameter: ModelParameter,
    grid: &[f64],
    p_star: f64,
) -> Result<LikelihoodProfile, EstimationError> {
    if grid.len() < 2 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EstimationError::DomainError {
            name: "grid",
            value: grid.len() as f64,
        });
    }
    if !(0.0..1.0).contains(&p_star) || p_star == 0.0 {
        return Err(EstimationError::DomainError { name: "p_star", value: p_star });
    }
    let value = parameter.get(model);
    let (lo, hi) = (grid[0], *grid.last().unwrap());
    if value < lo || value > hi {
        return Err(EstimationError::GridExcludesValue {
            parameter: parameter.name(),
            value,
            lo,
            hi,
        });
    }

    let mut lls = Vec::with_capacity(grid.len());
    for &g in grid {
        let mut candidate = model.clone();
        parameter.set(&mut candidate, g);
        let ll = match candidate.validate() {
            Ok(()) => log_likelihood(&candidate, circuits, dataset)?,
            Err(_) => f64::NEG_INFINITY,
        };
        lls.push(ll);
    }

    let center_ll = log_likelihood(model, circuits, dataset)?;
    let max_ll = lls
        .iter()
        .copied()
        .fold(center_ll, f64::max);
    let threshold = max_ll - (1.0 / p_star - 1.0).ln();

    let argmax = lls
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let mut left = argmax;
    while left > 0 && lls[left - 1] >= threshold {
        left -= 1;
    }
    let mut right = argmax;
    while right + 1 < lls.len() && lls[right + 1] >= threshold {
        right += 1;
    }
    // Interpolate the exact threshold crossing into the first
    // below-threshold neighbor, so intervals narrower than a grid step
    // keep their true width.
    let lo = if left > 0 && lls[left - 1].is_finite() {
        let t = (threshold - lls[left - 1]) / (lls[left] - lls[left - 1]);
        grid[left - 1] + t * (grid[left] - grid[left - 1])
    } else {
        grid[left]
    };
    let hi = if right + 1 < lls.len() && lls[right + 1].is_finite() {
        let t = (threshold - lls[right + 1]) / (lls[right] - lls[right + 1]);
        grid[right + 1] + t * (grid[right] - grid[right + 1])
    } else {
        grid[right]
    };

    Ok(LikelihoodProfile {
        parameter: parameter.name().to_string(),
        grid: grid.to_vec(),
        log_likelihood: lls,
        threshold,
        max_log_likelihood: max_ll,
        interval: (lo, hi),
    })
}

/// Default grid: `points` values spanning the model value ±
/// `max(5·SE, 0.01)`, where SE comes from the numerical curvature of the
/// log-likelihood along the parameter, clipped to the parameter box.
pub fn default_profile_grid(
    model: &GatesetModel,
    circuits: &CircuitSet,
    dataset: &Dataset,
    parameter: ModelParameter,
    points: usize,
) -> Result<Vec<f64>, EstimationError> {
    let value = parameter.get(model);
    let (lo_bound, hi_bound) = parameter.bounds();
    let h = 2e-4;

    let eval = |v: f64| -> Result<f64, EstimationError> {
        let mut candidate = model.clone();
        parameter.set(&mut candidate, v.clamp(lo_bound, hi_bound));
        if candidate.validate().is_err() {
            return Ok(f64::NEG_INFINITY);
        }
        log_likelihood(&candidate, circuits, dataset)
    };

    // Second difference, one-sided at the box edges.
    let (a, b, c) = if value - h < lo_bound {
        (eval(value)?, eval(value + h)?, eval(value + 2.0 * h)?)
    } else if value + h > hi_bound {
        (eval(value - 2.0 * h)?, eval(value - h)?, eval(value)?)
    } else {
        (eval(value - h)?, eval(value)?, eval(value + h)?)
    };
    let d2 = (a - 2.0 * b + c) / (h * h);
    let se = if d2.is_finite() && d2 < -1e-9 {
        (-1.0 / d2).sqrt()
    } else {
        f64::INFINITY
    };
    let half_width = (5.0 * se).max(0.01).min(1.0);

    let lo = (value - half_width).max(lo_bound);
    let hi = (value + half_width).min(hi_bound);
    let n = points.max(3);
    // The grid always contains the reference value exactly, so an
    // arbitrarily sharp peak still registers at its own point.
    let n_left = (((value - lo) / (hi - lo)) * (n - 1) as f64).round() as usize;
    let n_right = n - 1 - n_left;
    let mut grid = Vec::with_capacity(n);
    for i in 0..n_left {
        grid.push(lo + (value - lo) * i as f64 / n_left as f64);
    }
    grid.push(value);
    for j in 1..=n_right {
        grid.push(value + (hi - value) * j as f64 / n_right.max(1) as f64);
    }
    Ok(grid)
}
