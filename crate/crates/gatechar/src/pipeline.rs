//! End-to-end orchestration: a run configuration, dataset simulation,
//! the characterization chain (independent estimates → likelihood
//! refinement → profiles → violation), and report files.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::estimation::{
    decoherence_params, decoherence_signals, default_profile_grid, fit_exponential,
    likelihood_profile, maximize_likelihood, readout_extract, rpe_extract,
    Counts, Dataset, DecoherenceBasis, DecoherenceEstimate, EstimationError, FitResult,
    LikelihoodProfile, MleOptions, MleResult, ModelParameter, Provenance, ReadoutEstimate,
    RpeEstimate, ShotRecord, SignalPoint,
};
use crate::estimation::{cz_extract, CzEstimate};
use crate::model::{CompiledModel, GatesetModel, ModelError, OutcomeDistribution};
use crate::protocols::{
    cz_decay_circuits, cz_phase_circuits, decoherence_circuits, readout_circuits, rpe_circuits,
    CircuitSet, FamilyKind, ProtocolError,
};
use crate::sampling::{sample_multinomial, sample_shots, SamplingError, ShotStream};
use crate::stats::{model_violation, StatsError, ViolationReport};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Protocol(#[from] ProtocolError),

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Estimation(#[from] EstimationError),

    #[error(transparent)]
    Sampling(#[from] SamplingError),

    #[error(transparent)]
    Stats(#[from] StatsError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

fn default_decoherence_depths() -> Vec<u64> {
    vec![20, 40, 60, 80, 100, 120]
}

fn default_rpe_exponent() -> u32 {
    3
}

fn default_shots_small() -> u64 {
    30
}

fn default_shots_readout() -> u64 {
    300
}

fn default_cz_phase_exponent() -> u32 {
    4
}

fn default_cz_decay_depths() -> Vec<u64> {
    vec![2, 4, 6, 8, 12, 16]
}

fn default_cz_shots() -> u64 {
    1000
}

/// CZ section of the run configuration; its presence enables the CZ
/// circuit families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CzRunConfig {
    #[serde(default = "default_cz_phase_exponent")]
    pub phase_max_exponent: u32,
    #[serde(default = "default_cz_decay_depths")]
    pub decay_depths: Vec<u64>,
    #[serde(default = "default_cz_shots")]
    pub shots: u64,
}

impl Default for CzRunConfig {
    fn default() -> Self {
        Self {
            phase_max_exponent: default_cz_phase_exponent(),
            decay_depths: default_cz_decay_depths(),
            shots: default_cz_shots(),
        }
    }
}

/// Full experiment configuration. Defaults reproduce the reference
/// single-qubit experiment: depths 20..120, phase estimation to depth 8,
/// 30 shots per circuit, 300 readout shots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: GatesetModel,
    #[serde(default = "default_decoherence_depths")]
    pub decoherence_depths: Vec<u64>,
    #[serde(default = "default_rpe_exponent")]
    pub rpe_max_exponent: u32,
    #[serde(default = "default_shots_small")]
    pub shots_decoherence: u64,
    #[serde(default = "default_shots_small")]
    pub shots_rpe: u64,
    #[serde(default = "default_shots_readout")]
    pub shots_readout: u64,
    #[serde(default)]
    pub seed: u64,
    /// Replace sampled counts with rounded expected counts (an
    /// infinite-statistics surrogate).
    #[serde(default)]
    pub expected_counts: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub cz: Option<CzRunConfig>,
}

impl RunConfig {
    pub fn new(model: GatesetModel) -> Self {
        Self {
            model,
            decoherence_depths: default_decoherence_depths(),
            rpe_max_exponent: default_rpe_exponent(),
            shots_decoherence: default_shots_small(),
            shots_rpe: default_shots_small(),
            shots_readout: default_shots_readout(),
            seed: 0,
            expected_counts: false,
            output_dir: None,
            cz: None,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.model.validate()?;
        for shots in [self.shots_decoherence, self.shots_rpe, self.shots_readout] {
            if shots == 0 {
                return Err(PipelineError::Config("shot counts must be at least 1".into()));
            }
        }
        if self.cz.is_some() && self.model.cz.is_none() {
            return Err(PipelineError::Config(
                "cz circuits requested but the model has no cz parameters".into(),
            ));
        }
        if let Some(cz) = &self.cz {
            if cz.shots == 0 {
                return Err(PipelineError::Config("cz shots must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// All circuit families this configuration enables.
    pub fn circuit_set(&self) -> Result<CircuitSet, PipelineError> {
        let mut set = CircuitSet::new(decoherence_circuits(&self.decoherence_depths)?);
        set.extend(rpe_circuits(self.rpe_max_exponent));
        set.extend(readout_circuits());
        if let Some(cz) = &self.cz {
            set.extend(cz_phase_circuits(cz.phase_max_exponent)?);
            set.extend(cz_decay_circuits(&cz.decay_depths)?);
        }
        Ok(set)
    }

    fn shots_for(&self, kind: FamilyKind) -> u64 {
        match kind {
            FamilyKind::DecoherenceX | FamilyKind::DecoherenceZ => self.shots_decoherence,
            FamilyKind::RpeAmplitude | FamilyKind::RpeAxis => self.shots_rpe,
            FamilyKind::ReadoutZero | FamilyKind::ReadoutPi => self.shots_readout,
            _ => self.cz.as_ref().map_or(default_cz_shots(), |c| c.shots),
        }
    }
}

/// Simulates every enabled circuit under the configured model and samples
/// seeded shots (or writes expected counts). Deterministic in
/// `(config, seed)` regardless of evaluation order.
pub fn simulate(config: &RunConfig) -> Result<Dataset, PipelineError> {
    config.validate()?;
    let set = config.circuit_set()?;
    let compiled = CompiledModel::new(&config.model)?;
    let mut records = Vec::with_capacity(set.families().len());
    for family in set.families() {
        let n = config.shots_for(family.kind);
        let outcomes = compiled.circuit_outcomes(&family.circuit)?;
        let k = match outcomes {
            OutcomeDistribution::One { p_zero } => {
                if config.expected_counts {
                    Counts::Single((p_zero * n as f64).round() as u64)
                } else {
                    let mut stream = ShotStream::new(config.seed, &family.id);
                    Counts::Single(sample_shots(p_zero, n, &mut stream)?)
                }
            }
            OutcomeDistribution::Two { joint } => {
                if config.expected_counts {
                    let mut ks = [0u64; 4];
                    for (slot, p) in ks.iter_mut().zip(joint.iter()) {
                        *slot = (p * n as f64).round() as u64;
                    }
                    let total: u64 = ks.iter().sum();
                    // Rounding drift lands on the dominant outcome.
                    ks[0] = ks[0] + n - total.min(n);
                    Counts::Joint(ks)
                } else {
                    let mut stream = ShotStream::new(config.seed, &family.id);
                    let sum: f64 = joint.iter().sum();
                    let normalized = [
                        joint[0] / sum,
                        joint[1] / sum,
                        joint[2] / sum,
                        joint[3] / sum,
                    ];
                    let counts = sample_multinomial(&normalized, n, &mut stream)?;
                    Counts::Joint([counts[0], counts[1], counts[2], counts[3]])
                }
            }
        };
        records.push(ShotRecord { id: family.id.clone(), n, k });
    }
    let mut dataset = Dataset::new(records)?;
    dataset.provenance = Some(Provenance {
        seed: config.seed,
        model: config.model.clone(),
    });
    Ok(dataset)
}

/// Decoherence-detection analysis bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceReport {
    pub fit_x: Option<FitResult>,
    pub fit_z: Option<FitResult>,
    pub lambda_x: f64,
    pub lambda_z: f64,
    pub params: DecoherenceEstimate,
}

/// Point estimates from the independent protocols, assembled into a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependentEstimates {
    pub model: GatesetModel,
    pub readout: Option<ReadoutEstimate>,
    pub decoherence: Option<DecoherenceReport>,
    pub rpe: Option<RpeEstimate>,
    /// Family groups absent from the dataset.
    pub missing: Vec<String>,
    /// Fallbacks and clamps applied while assembling the model.
    pub flags: Vec<String>,
}

/// Everything `characterize` produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationReport {
    pub independent: IndependentEstimates,
    pub mle: Option<MleResult>,
    pub profiles: Vec<LikelihoodProfile>,
    pub violation_independent: Option<ViolationReport>,
    pub violation_mle: Option<ViolationReport>,
    pub cz: Option<CzEstimate>,
    /// Non-fatal analysis problems (e.g. a CZ decay too flat to fit).
    pub notes: Vec<String>,
    pub p_star: f64,
}

impl CharacterizationReport {
    pub fn profile(&self, name: &str) -> Option<&LikelihoodProfile> {
        self.profiles.iter().find(|p| p.parameter == name)
    }
}

/// Last-ditch rate estimate from the outermost positive signals; used when
/// the weighted fit rejects the data as flat or fails to converge.
fn fallback_lambda(points: &[SignalPoint]) -> Option<f64> {
    let positive: Vec<&SignalPoint> = points.iter().filter(|p| p.value > 1e-9).collect();
    let (first, last) = (positive.first()?, positive.last()?);
    if last.depth <= first.depth {
        return None;
    }
    let ratio = last.value / first.value;
    Some(ratio.powf(1.0 / (last.depth - first.depth)).clamp(1e-6, 1.0))
}

fn clamp_with_flag(value: f64, lo: f64, hi: f64, name: &str, flags: &mut Vec<String>) -> f64 {
    if value < lo || value > hi {
        flags.push(format!("{name} estimate {value:.4} clamped to [{lo}, {hi}]"));
        value.clamp(lo, hi)
    } else {
        value
    }
}

/// Runs the available independent extractors and assembles their point
/// estimates into a model (zeros where data is missing).
pub fn independent_estimates(
    config: &RunConfig,
    dataset: &Dataset,
) -> Result<IndependentEstimates, PipelineError> {
    let mut missing = Vec::new();
    let mut flags = Vec::new();
    let mut model = GatesetModel {
        cz: config.model.cz.map(|_| crate::model::CzParams::ideal()),
        ..GatesetModel::ideal()
    };

    let readout = if dataset.has_kind(FamilyKind::ReadoutZero)
        && dataset.has_kind(FamilyKind::ReadoutPi)
    {
        let est = readout_extract(dataset)?;
        model.r_01 = clamp_with_flag(est.r_01, 0.0, 0.5, "r_01", &mut flags);
        model.r_10 = clamp_with_flag(est.r_10, 0.0, 0.5, "r_10", &mut flags);
        Some(est)
    } else {
        missing.push("readout".to_string());
        None
    };

    let decoherence = if dataset.has_kind(FamilyKind::DecoherenceX)
        && dataset.has_kind(FamilyKind::DecoherenceZ)
    {
        let mut lambda = [1.0f64; 2];
        let mut fits: [Option<FitResult>; 2] = [None, None];
        for (slot, basis) in [DecoherenceBasis::X, DecoherenceBasis::Z].iter().enumerate() {
            let points = decoherence_signals(dataset, *basis)?;
            match fit_exponential(&points) {
                Ok(fit) => {
                    lambda[slot] = fit.rate;
                    fits[slot] = Some(fit);
                }
                Err(e @ (EstimationError::Identifiability { .. }
                | EstimationError::NonConvergence { .. })) => {
                    let fb = fallback_lambda(&points).unwrap_or(1.0);
                    flags.push(format!(
                        "decoherence fit ({basis:?}) fell back to two-point rate {fb:.4}: {e}"
                    ));
                    lambda[slot] = fb;
                }
                Err(e) => return Err(e.into()),
            }
        }
        for l in lambda.iter_mut() {
            if *l > 1.0 {
                flags.push(format!("decay rate {l:.6} clamped to 1"));
                *l = 1.0;
            }
        }
        let params = decoherence_params(lambda[0].max(1e-6), lambda[1].max(1e-6))?;
        if params.clamped {
            flags.push("p_x clamped to 0 (lambda_z exceeded 1 - p_z)".to_string());
        }
        model.p_z = clamp_with_flag(params.p_z, 0.0, 0.5, "p_z", &mut flags);
        model.p_x = clamp_with_flag(params.p_x, 0.0, 0.5, "p_x", &mut flags);
        Some(DecoherenceReport {
            fit_x: fits[0].clone(),
            fit_z: fits[1].clone(),
            lambda_x: lambda[0],
            lambda_z: lambda[1],
            params,
        })
    } else {
        missing.push("decoherence".to_string());
        None
    };

    let rpe = if dataset.has_kind(FamilyKind::RpeAmplitude) && dataset.has_kind(FamilyKind::RpeAxis)
    {
        let est = rpe_extract(dataset)?;
        model.epsilon = clamp_with_flag(est.epsilon, -0.5, 0.5, "epsilon", &mut flags);
        model.theta = clamp_with_flag(est.theta, -0.5, 0.5, "theta", &mut flags);
        Some(est)
    } else {
        missing.push("rpe".to_string());
        None
    };

    Ok(IndependentEstimates {
        model,
        readout,
        decoherence,
        rpe,
        missing,
        flags,
    })
}

/// The full characterization chain. Likelihood refinement and profiles
/// run when all three single-qubit families are present; CZ extraction
/// runs when CZ records are present; whatever is missing is reported as a
/// gap rather than an error.
pub fn characterize(
    config: &RunConfig,
    dataset: &Dataset,
    p_star: f64,
) -> Result<CharacterizationReport, PipelineError> {
    config.validate()?;
    dataset.validate()?;
    let circuits = config.circuit_set()?;
    let independent = independent_estimates(config, dataset)?;

    let (mle, profiles) = if independent.missing.is_empty() {
        let result = maximize_likelihood(
            &independent.model,
            &circuits,
            dataset,
            &MleOptions::default(),
        )?;
        let mut profiles = Vec::with_capacity(6);
        for param in ModelParameter::ALL {
            let grid = default_profile_grid(&result.model, &circuits, dataset, param, 41)?;
            profiles.push(likelihood_profile(
                &result.model,
                &circuits,
                dataset,
                param,
                &grid,
                p_star,
            )?);
        }
        (Some(result), profiles)
    } else {
        (None, Vec::new())
    };

    let violation_independent = Some(model_violation(&independent.model, &circuits, dataset)?);
    let violation_mle = mle
        .as_ref()
        .map(|m| model_violation(&m.model, &circuits, dataset))
        .transpose()?;

    let cz = if dataset.has_kind(FamilyKind::CzPhaseA) {
        Some(cz_extract(dataset)?)
    } else {
        None
    };

    Ok(CharacterizationReport {
        independent,
        mle,
        profiles,
        violation_independent,
        violation_mle,
        cz,
        p_star,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), PipelineError> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}

/// Runs [`simulate`] and writes `dataset.jsonl`, `circuits.json`, and
/// `truth.json` under `out_dir`. Returns the dataset path.
pub fn run_simulate(config: &RunConfig, out_dir: &Path) -> Result<PathBuf, PipelineError> {
    std::fs::create_dir_all(out_dir)?;
    let dataset = simulate(config)?;
    let dataset_path = out_dir.join("dataset.jsonl");
    dataset.write_jsonl(&dataset_path)?;
    let set = config.circuit_set()?;
    write_json(&out_dir.join("circuits.json"), &set.families())?;
    write_json(
        &out_dir.join("truth.json"),
        &Provenance { seed: config.seed, model: config.model.clone() },
    )?;
    Ok(dataset_path)
}

/// Runs [`characterize`] and writes `report.json`, per-parameter profile
/// CSVs, and a human-readable `summary.txt`. Returns the written paths.
pub fn run_characterize(
    config: &RunConfig,
    dataset: &Dataset,
    out_dir: &Path,
    p_star: f64,
) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(out_dir)?;
    let report = characterize(config, dataset, p_star)?;
    let mut written = Vec::new();

    let report_path = out_dir.join("report.json");
    write_json(&report_path, &report)?;
    written.push(report_path);

    if !report.profiles.is_empty() {
        let profile_dir = out_dir.join("profiles");
        std::fs::create_dir_all(&profile_dir)?;
        for profile in &report.profiles {
            let path = profile_dir.join(format!("{}.csv", profile.parameter));
            written.push(write_profile_csv(profile, &path)?);
        }
    }

    let summary_path = out_dir.join("summary.txt");
    std::fs::write(&summary_path, summary_text(&report))?;
    written.push(summary_path);
    Ok(written)
}

/// CSV export: `param_value,log_likelihood,above_threshold`.
pub fn write_profile_csv(
    profile: &LikelihoodProfile,
    path: &Path,
) -> Result<PathBuf, PipelineError> {
    let mut out = String::from("param_value,log_likelihood,above_threshold\n");
    for (v, ll) in profile.grid.iter().zip(profile.log_likelihood.iter()) {
        let above = *ll >= profile.threshold;
        out.push_str(&format!("{v},{ll},{above}\n"));
    }
    std::fs::write(path, out)?;
    Ok(path.to_path_buf())
}

/// Human-readable run summary.
pub fn summary_text(report: &CharacterizationReport) -> String {
    let mut out = String::new();
    let ind = &report.independent;
    out.push_str("gateset characterization summary\n");
    out.push_str("================================\n\n");
    out.push_str("independent estimates:\n");
    let m = &ind.model;
    out.push_str(&format!(
        "  epsilon = {:+.5}   theta = {:+.5}\n  p_x = {:.5}   p_z = {:.5}\n  r_01 = {:.5}   r_10 = {:.5}\n",
        m.epsilon, m.theta, m.p_x, m.p_z, m.r_01, m.r_10
    ));
    if !ind.missing.is_empty() {
        out.push_str(&format!("  missing families: {}\n", ind.missing.join(", ")));
    }
    for flag in &ind.flags {
        out.push_str(&format!("  note: {flag}\n"));
    }
    if let Some(mle) = &report.mle {
        let m = &mle.model;
        out.push_str("\nlikelihood-refined estimates:\n");
        out.push_str(&format!(
            "  epsilon = {:+.5}   theta = {:+.5}\n  p_x = {:.5}   p_z = {:.5}\n  r_01 = {:.5}   r_10 = {:.5}\n",
            m.epsilon, m.theta, m.p_x, m.p_z, m.r_01, m.r_10
        ));
        out.push_str(&format!(
            "  log-likelihood {:.3} -> {:.3} (increase {:.3})\n",
            mle.initial_log_likelihood,
            mle.log_likelihood,
            mle.log_likelihood - mle.initial_log_likelihood
        ));
        if !mle.boundary_flags.is_empty() {
            out.push_str(&format!(
                "  parameters on search bounds: {}\n",
                mle.boundary_flags.join(", ")
            ));
        }
    }
    if !report.profiles.is_empty() {
        out.push_str(&format!(
            "\nlikelihood intervals (p* = {}):\n",
            report.p_star
        ));
        for p in &report.profiles {
            let zero_note = if p.interval.0 <= 0.0 && 0.0 <= p.interval.1 {
                "consistent with zero"
            } else {
                "separated from zero"
            };
            out.push_str(&format!(
                "  {:8} in [{:+.5}, {:+.5}]  ({zero_note})\n",
                p.parameter, p.interval.0, p.interval.1
            ));
        }
    }
    for (label, v) in [
        ("independent", &report.violation_independent),
        ("refined", &report.violation_mle),
    ] {
        if let Some(v) = v {
            out.push_str(&format!(
                "\nmodel violation ({label}): k_hat = {:.3}, bound = {:.3}, {}\n",
                v.k_hat,
                v.bound,
                if v.rejected { "REJECTED" } else { "not rejected" }
            ));
        }
    }
    if let Some(cz) = &report.cz {
        out.push_str(&format!(
            "\ncz estimates: alpha = {:+.5} ± {:.5}, beta = {:+.5} ± {:.5}\n  p_iz+p_zi = {:.5} ± {:.5}, p_zi+p_zz = {:.5} ± {:.5}\n",
            cz.alpha,
            cz.alpha_uncertainty,
            cz.beta,
            cz.beta_uncertainty,
            cz.bell.rate_sum,
            cz.bell.rate_sum_err,
            cz.plus.rate_sum,
            cz.plus.rate_sum_err
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn fig1_model() -> GatesetModel {
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

    #[test]
    fn simulate_is_deterministic_and_complete() {
        let mut config = RunConfig::new(fig1_model());
        config.seed = 7;
        let a = simulate(&config).unwrap();
        let b = simulate(&config).unwrap();
        assert_eq!(a.records, b.records);
        // 24 decoherence + 16 rpe + 2 readout.
        assert_eq!(a.records.len(), 42);
        assert!(a.provenance.is_some());

        config.seed = 8;
        let c = simulate(&config).unwrap();
        assert_ne!(a.records, c.records);
    }

    #[test]
    fn zero_noise_simulation_is_deterministic_counts() {
        let config = RunConfig::new(GatesetModel::ideal());
        let ds = simulate(&config).unwrap();
        for r in ds.records.iter().filter(|r| r.id.starts_with("decoherence")) {
            let k = r.k.zeros();
            assert!(k == 0 || k == r.n, "{}: {k}/{}", r.id, r.n);
        }
    }

    #[test]
    fn expected_counts_road() {
        let mut config = RunConfig::new(fig1_model());
        config.expected_counts = true;
        config.shots_decoherence = 1_000_000;
        let ds = simulate(&config).unwrap();
        let r = ds.get("decoherence_z/20/+1").unwrap();
        // Expected counts are reproducible and non-random.
        let ds2 = simulate(&config).unwrap();
        assert_eq!(r, ds2.get("decoherence_z/20/+1").unwrap());
    }

    #[test]
    fn characterize_full_pipeline_on_exact_data() {
        let mut config = RunConfig::new(fig1_model());
        config.expected_counts = true;
        config.shots_decoherence = 1_000_000_000;
        config.shots_rpe = 1_000_000_000;
        config.shots_readout = 1_000_000_000;
        let ds = simulate(&config).unwrap();
        let report = characterize(&config, &ds, 0.05).unwrap();

        let truth = fig1_model();
        let ind = &report.independent.model;
        assert!((ind.r_01 - truth.r_01).abs() < 1e-6);
        // The r_10 circuit runs two noisy X90s, so its independent
        // estimate absorbs their over-rotation and decoherence leakage
        // (≈ 0.018 at these parameters); refinement is the MLE's job.
        assert!((ind.r_10 - truth.r_10).abs() < 0.03);
        assert!((ind.p_z - truth.p_z).abs() < 1e-4);
        // p_x carries the documented second-order inversion bias.
        assert!((ind.p_x - truth.p_x).abs() < 1e-4);

        let mle = report.mle.as_ref().unwrap();
        assert!(mle.log_likelihood >= mle.initial_log_likelihood - 1e-9);
        assert_eq!(report.profiles.len(), 6);
        for (profile, param) in report.profiles.iter().zip(ModelParameter::ALL) {
            assert!(
                profile.contains(param.get(&truth)),
                "{}: {:?} vs truth {}",
                profile.parameter,
                profile.interval,
                param.get(&truth)
            );
        }
        // Expected-count data has no sampling noise, so δ̂ sits far below
        // the binomial mean μ — the statistic flags that honestly. The
        // not-rejected path on sampled data is covered elsewhere.
        let violation = report.violation_mle.as_ref().unwrap();
        assert!(violation.delta_hat < violation.mu);
    }

    #[test]
    fn partial_dataset_reports_gaps() {
        let config = RunConfig::new(fig1_model());
        let full = simulate(&config).unwrap();
        let only_decoherence = Dataset::new(
            full.records
                .iter()
                .filter(|r| r.id.starts_with("decoherence"))
                .cloned()
                .collect(),
        )
        .unwrap();
        let report = characterize(&config, &only_decoherence, 0.05).unwrap();
        assert!(report.mle.is_none());
        assert!(report.profiles.is_empty());
        assert!(report.independent.decoherence.is_some());
        assert!(report.independent.missing.contains(&"readout".to_string()));
        assert!(report.independent.missing.contains(&"rpe".to_string()));
    }

    #[test]
    fn report_files_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = RunConfig::new(fig1_model());
        config.seed = 3;
        let dataset_path = run_simulate(&config, dir.path()).unwrap();
        assert!(dataset_path.exists());
        assert!(dir.path().join("circuits.json").exists());
        assert!(dir.path().join("truth.json").exists());

        let ds = Dataset::read_jsonl(&dataset_path).unwrap();
        let written = run_characterize(&config, &ds, dir.path(), 0.05).unwrap();
        assert!(dir.path().join("report.json").exists());
        assert!(dir.path().join("summary.txt").exists());
        assert!(dir.path().join("profiles/epsilon.csv").exists());
        assert_eq!(written.len(), 8);

        let csv = std::fs::read_to_string(dir.path().join("profiles/p_z.csv")).unwrap();
        assert!(csv.starts_with("param_value,log_likelihood,above_threshold\n"));

        let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
        assert!(summary.contains("likelihood intervals"));
    }

    #[test]
    fn config_validation_errors() {
        let mut config = RunConfig::new(fig1_model());
        config.shots_rpe = 0;
        assert!(config.validate().is_err());

        let mut config = RunConfig::new(fig1_model());
        config.cz = Some(CzRunConfig::default());
        assert!(matches!(config.validate(), Err(PipelineError::Config(_))));
    }
}
