//! Binomial log-likelihood over a dataset and its maximization in the
//! six-parameter model space.

use serde::{Deserialize, Serialize};

use super::{Counts, Dataset, EstimationError};
use crate::model::{CompiledModel, GatesetModel, OutcomeDistribution};
use crate::protocols::CircuitSet;

const LOG_CLAMP: f64 = 1e-12;

/// Sum of `k·ln p + (n-k)·ln(1-p)` over all records, with model
/// probabilities clamped to `[1e-12, 1-1e-12]`. Joint two-qubit records
/// contribute the full multinomial term.
pub fn log_likelihood(
    model: &GatesetModel,
    circuits: &CircuitSet,
    dataset: &Dataset,
) -> Result<f64, EstimationError> {
    let compiled = CompiledModel::new(model)?;
    log_likelihood_compiled(&compiled, circuits, dataset)
}

/// As [`log_likelihood`] but reusing an already-compiled model.
pub fn log_likelihood_compiled(
    compiled: &CompiledModel,
    circuits: &CircuitSet,
    dataset: &Dataset,
) -> Result<f64, EstimationError> {
    let clamp = |p: f64| p.clamp(LOG_CLAMP, 1.0 - LOG_CLAMP);
    let mut total = 0.0;
    for record in &dataset.records {
        let family = circuits
            .get(&record.id)
            .ok_or_else(|| EstimationError::UnknownCircuit { id: record.id.clone() })?;
        let outcomes = compiled.circuit_outcomes(&family.circuit)?;
        match (&record.k, &outcomes) {
            (Counts::Single(k), _) => {
                let p = clamp(outcomes.all_zeros());
                let k = *k as f64;
                let n = record.n as f64;
                total += k * p.ln() + (n - k) * (1.0 - p).ln();
            }
            (Counts::Joint(ks), OutcomeDistribution::Two { joint }) => {
                for (k, p) in ks.iter().zip(joint.iter()) {
                    if *k > 0 {
                        total += *k as f64 * clamp(*p).ln();
                    }
                }
            }
            (Counts::Joint(_), OutcomeDistribution::One { .. }) => {
                return Err(EstimationError::InvalidRecord {
                    id: record.id.clone(),
                    reason: "joint counts recorded for a one-qubit circuit".into(),
                });
            }
        }
    }
    Ok(total)
}

/// Search-space box for the six parameters, in the order
/// (epsilon, theta, p_x, p_z, r_01, r_10).
const BOUNDS: [(f64, f64); 6] = [
    (-0.5, 0.5),
    (-0.5, 0.5),
    (0.0, 0.5),
    (0.0, 0.5),
    (0.0, 0.5),
    (0.0, 0.5),
];

const PARAM_NAMES: [&str; 6] = ["epsilon", "theta", "p_x", "p_z", "r_01", "r_10"];

fn to_vector(model: &GatesetModel) -> [f64; 6] {
    [
        model.epsilon,
        model.theta,
        model.p_x,
        model.p_z,
        model.r_01,
        model.r_10,
    ]
}

fn from_vector(x: &[f64; 6], template: &GatesetModel) -> GatesetModel {
    GatesetModel {
        epsilon: x[0],
        theta: x[1],
        p_x: x[2],
        p_z: x[3],
        r_01: x[4],
        r_10: x[5],
        cz: template.cz,
    }
}

fn clamp_to_box(x: &mut [f64; 6]) {
    for (v, (lo, hi)) in x.iter_mut().zip(BOUNDS.iter()) {
        *v = v.clamp(*lo, *hi);
    }
    // Keep the decoherence pair jointly feasible.
    let sum = x[2] + x[3];
    if sum > 1.0 {
        x[2] *= 1.0 / sum;
        x[3] *= 1.0 / sum;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub max_iterations: usize,
    pub f_tolerance: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { max_iterations: 600, f_tolerance: 1e-10 }
    }
}

/// Result of likelihood maximization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    pub model: GatesetModel,
    pub log_likelihood: f64,
    pub initial_log_likelihood: f64,
    /// Parameters that ended on a search-box boundary.
    pub boundary_flags: Vec<String>,
    pub evaluations: usize,
}

struct Simplex {
    vertices: Vec<([f64; 6], f64)>,
}

/// One Nelder-Mead run, minimizing `f` inside the box by projection.
fn nelder_mead<F: FnMut(&[f64; 6]) -> f64>(
    f: &mut F,
    start: [f64; 6],
    step: f64,
    options: &MleOptions,
) -> ([f64; 6], f64) {
    let mut init = start;
    clamp_to_box(&mut init);
    let mut simplex = Simplex { vertices: Vec::with_capacity(7) };
    simplex.vertices.push((init, f(&init)));
    for d in 0..6 {
        let mut v = init;
        let (lo, hi) = BOUNDS[d];
        let delta = step * (hi - lo);
        v[d] = if v[d] + delta <= hi { v[d] + delta } else { v[d] - delta };
        clamp_to_box(&mut v);
        simplex.vertices.push((v, f(&v)));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    for _ in 0..options.max_iterations {
        simplex
            .vertices
            .sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let best = simplex.vertices[0].1;
        let worst = simplex.vertices[6].1;
        if (worst - best).abs() < options.f_tolerance {
            break;
        }

        let mut centroid = [0.0; 6];
        for (v, _) in &simplex.vertices[..6] {
            for d in 0..6 {
                centroid[d] += v[d] / 6.0;
            }
        }
        let worst_x = simplex.vertices[6].0;
        let blend = |t: f64| {
            let mut x = [0.0; 6];
            for d in 0..6 {
                x[d] = centroid[d] + t * (centroid[d] - worst_x[d]);
            }
            clamp_to_box(&mut x);
            x
        };

        let reflected = blend(alpha);
        let fr = f(&reflected);
        if fr < simplex.vertices[0].1 {
            let expanded = blend(gamma);
            let fe = f(&expanded);
            simplex.vertices[6] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex.vertices[5].1 {
            simplex.vertices[6] = (reflected, fr);
            continue;
        }
        let contracted = blend(-rho);
        let fc = f(&contracted);
        if fc < simplex.vertices[6].1 {
            simplex.vertices[6] = (contracted, fc);
            continue;
        }
        // Shrink toward the best vertex.
        let best_x = simplex.vertices[0].0;
        for i in 1..7 {
            let mut v = [0.0; 6];
            for d in 0..6 {
                v[d] = best_x[d] + sigma * (simplex.vertices[i].0[d] - best_x[d]);
            }
            clamp_to_box(&mut v);
            simplex.vertices[i] = (v, f(&v));
        }
    }
    simplex
        .vertices
        .sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    simplex.vertices[0]
}

/// Derivative-free likelihood maximization over the six-parameter box,
/// restarted once from the best point. Never returns a model with lower
/// log-likelihood than `init`; on non-improvement, returns `init`.
pub fn maximize_likelihood(
    init: &GatesetModel,
    circuits: &CircuitSet,
    dataset: &Dataset,
    options: &MleOptions,
) -> Result<MleResult, EstimationError> {
    init.validate()?;
    let initial_ll = log_likelihood(init, circuits, dataset)?;

    let mut evaluations = 0usize;
    let mut objective = |x: &[f64; 6]| -> f64 {
        evaluations += 1;
        let model = from_vector(x, init);
        match log_likelihood(&model, circuits, dataset) {
            Ok(ll) => -ll,
            Err(_) => f64::INFINITY,
        }
    };

    let start = {
        let mut x = to_vector(init);
        clamp_to_box(&mut x);
        x
    };
    let (x1, f1) = nelder_mead(&mut objective, start, 0.04, options);
    let (x2, f2) = nelder_mead(&mut objective, x1, 0.01, options);
    let (best_x, best_f) = if f2 <= f1 { (x2, f2) } else { (x1, f1) };

    let (model, log_lik) = if -best_f >= initial_ll {
        (from_vector(&best_x, init), -best_f)
    } else {
        (init.clone(), initial_ll)
    };

    let x = to_vector(&model);
    let boundary_flags = x
        .iter()
        .zip(BOUNDS.iter())
        .zip(PARAM_NAMES.iter())
        .filter(|((v, (lo, hi)), _)| (**v - lo).abs() < 1e-9 || (**v - hi).abs() < 1e-9)
        .map(|((_, _), name)| (*name).to_string())
        .collect();

    Ok(MleResult {
        model,
        log_likelihood: log_lik,
        initial_log_likelihood: initial_ll,
        boundary_flags,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::ShotRecord;
    use crate::protocols::{decoherence_circuits, readout_circuits, rpe_circuits, CircuitSet};

    fn tiny_set() -> CircuitSet {
        CircuitSet::new(readout_circuits())
    }

    #[test]
    fn analytic_loglik_values() {
        let set = tiny_set();
        // Certain outcome: n = 1, k = 1, p_model = 1.
        let ds = Dataset::new(vec![ShotRecord::single("readout_zero/0/+1", 1, 1)]).unwrap();
        let ll = log_likelihood(&GatesetModel::ideal(), &set, &ds).unwrap();
        assert!(ll.abs() < 1e-9, "{ll}");

        // Fair coin: n = 2, k = 1, p = 0.5 via r_01 = 0.5 on the zero circuit.
        let model = GatesetModel { r_01: 0.5, ..GatesetModel::ideal() };
        let ds = Dataset::new(vec![ShotRecord::single("readout_zero/0/+1", 2, 1)]).unwrap();
        let ll = log_likelihood(&model, &set, &ds).unwrap();
        assert!((ll - 2.0 * 0.5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn unknown_circuit_id_errors() {
        let set = tiny_set();
        let ds = Dataset::new(vec![ShotRecord::single("mystery/1/+1", 5, 3)]).unwrap();
        assert!(matches!(
            log_likelihood(&GatesetModel::ideal(), &set, &ds),
            Err(EstimationError::UnknownCircuit { .. })
        ));
    }

    fn fig1_model() -> GatesetModel {
        GatesetModel {
            epsilon: 0.06,
            theta: 0.01,
            p_x: 0.002,
            p_z: 0.02,
            r_01: 0.08,
            r_10: 0.05,
            cz: None,
        }
    }

    fn one_qubit_set() -> CircuitSet {
        let mut set = CircuitSet::new(decoherence_circuits(&[4, 8, 16, 32]).unwrap());
        set.extend(rpe_circuits(3));
        set.extend(readout_circuits());
        set
    }

    fn expected_count_dataset(model: &GatesetModel, set: &CircuitSet, n: u64) -> Dataset {
        let compiled = CompiledModel::new(model).unwrap();
        let records = set
            .families()
            .iter()
            .map(|f| {
                let p = compiled.circuit_probability(&f.circuit).unwrap();
                ShotRecord::single(f.id.clone(), n, (p * n as f64).round() as u64)
            })
            .collect();
        Dataset::new(records).unwrap()
    }

    #[test]
    fn generating_model_beats_perturbed_model() {
        let set = one_qubit_set();
        let truth = fig1_model();
        let ds = expected_count_dataset(&truth, &set, 100_000);
        let ll_truth = log_likelihood(&truth, &set, &ds).unwrap();
        let perturbed = GatesetModel { epsilon: 0.11, ..truth.clone() };
        let ll_pert = log_likelihood(&perturbed, &set, &ds).unwrap();
        assert!(ll_truth > ll_pert);
    }

    #[test]
    fn stationary_at_truth_on_exact_data() {
        let set = one_qubit_set();
        let truth = fig1_model();
        let ds = expected_count_dataset(&truth, &set, 1_000_000_000_000);
        let result =
            maximize_likelihood(&truth, &set, &ds, &MleOptions::default()).unwrap();
        assert!(result.log_likelihood >= result.initial_log_likelihood - 1e-9);
        // The optimizer may wiggle within flatness, but should stay close.
        assert!((result.model.p_z - truth.p_z).abs() < 2e-4, "{:?}", result.model);
        assert!((result.model.epsilon - truth.epsilon).abs() < 2e-3);
    }

    #[test]
    fn gross_initialization_recovers() {
        let set = one_qubit_set();
        let truth = fig1_model();
        let ds = expected_count_dataset(&truth, &set, 1_000_000);
        let init = GatesetModel { p_x: 0.3, ..truth.clone() };
        let result = maximize_likelihood(&init, &set, &ds, &MleOptions::default()).unwrap();
        assert!(result.log_likelihood >= result.initial_log_likelihood);
        assert!(result.model.p_x < 0.05, "p_x stayed at {}", result.model.p_x);
    }
}
