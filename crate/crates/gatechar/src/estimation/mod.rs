//! Estimation: from shot-count datasets back to gateset parameters.
//!
//! The pieces are deliberately small and composable: Pauli survival
//! signals and weighted exponential fits ([`fit`]), the closed-form
//! decoherence inversion, iterative phase refinement for the coherent
//! parameters ([`rpe`]), readout frequencies, and likelihood machinery
//! ([`mle`], [`profile`]).

pub mod fit;
pub mod mle;
pub mod profile;
pub mod rpe;

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use thiserror::Error;

use crate::circuit::Sign;
use crate::model::{GatesetModel, ModelError};
use crate::protocols::FamilyKind;

pub use fit::{fit_exponential, FitResult, SignalPoint};
pub use mle::{log_likelihood, maximize_likelihood, MleOptions, MleResult};
pub use profile::{default_profile_grid, likelihood_profile, LikelihoodProfile, ModelParameter};
pub use rpe::{cz_extract, refine_phase, rpe_extract, CzEstimate, PhaseEstimate, QuadratureSample, RpeEstimate};

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("dataset record {id} is invalid: {reason}")]
    InvalidRecord { id: String, reason: String },

    #[error("dataset is missing record {id}")]
    MissingRecord { id: String },

    #[error("unknown circuit id {id}")]
    UnknownCircuit { id: String },

    #[error("signal range {range:.3e} is below the identifiability floor {floor:.3e}; decay rate is not identifiable from flat data")]
    Identifiability { range: f64, floor: f64 },

    #[error("fit did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },

    #[error("{name} = {value} outside its valid domain")]
    DomainError { name: &'static str, value: f64 },

    #[error("fit needs at least {needed} distinct depths, got {got}")]
    TooFewDepths { needed: usize, got: usize },

    #[error("grid [{lo}, {hi}] does not cover the model value {value} of {parameter}")]
    GridExcludesValue {
        parameter: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("dataset parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

/// Shot counts for one circuit: a plain zero-count for one qubit, or the
/// four joint-outcome counts (00, 01, 10, 11) for two.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Counts {
    Single(u64),
    Joint([u64; 4]),
}

impl Counts {
    /// Count of the all-zeros outcome.
    pub fn zeros(&self) -> u64 {
        match self {
            Counts::Single(k) => *k,
            Counts::Joint(k) => k[0],
        }
    }
}

/// One dataset line: `{id, n, k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub id: String,
    pub n: u64,
    pub k: Counts,
}

impl ShotRecord {
    pub fn single(id: impl Into<String>, n: u64, k: u64) -> Self {
        Self { id: id.into(), n, k: Counts::Single(k) }
    }

    /// Empirical frequency of the all-zeros outcome.
    pub fn freq_zeros(&self) -> f64 {
        self.k.zeros() as f64 / self.n as f64
    }

    /// Laplace-smoothed binomial variance of the all-zeros frequency;
    /// stays positive at k = 0 or k = n so it can serve as a fit weight.
    pub fn freq_variance(&self) -> f64 {
        let n = self.n as f64;
        let p = (self.k.zeros() as f64 + 1.0) / (n + 2.0);
        p * (1.0 - p) / n
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        let bad = |reason: String| EstimationError::InvalidRecord {
            id: self.id.clone(),
            reason,
        };
        if self.n == 0 {
            return Err(bad("shot count is zero".into()));
        }
        match &self.k {
            Counts::Single(k) => {
                if *k > self.n {
                    return Err(bad(format!("count {k} exceeds shots {}", self.n)));
                }
            }
            Counts::Joint(k) => {
                let total: u64 = k.iter().sum();
                if total != self.n {
                    return Err(bad(format!(
                        "joint counts sum to {total}, expected {}",
                        self.n
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Synthetic-data provenance: the seed and model that generated a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub model: GatesetModel,
}

/// Per-circuit shot counts, addressable by circuit id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub records: Vec<ShotRecord>,
    pub provenance: Option<Provenance>,
}

impl Dataset {
    pub fn new(records: Vec<ShotRecord>) -> Result<Self, EstimationError> {
        let ds = Self { records, provenance: None };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<(), EstimationError> {
        for r in &self.records {
            r.validate()?;
        }
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&ShotRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    fn require(&self, id: &str) -> Result<&ShotRecord, EstimationError> {
        self.get(id).ok_or_else(|| EstimationError::MissingRecord { id: id.into() })
    }

    pub fn has_kind(&self, kind: FamilyKind) -> bool {
        let prefix = format!("{}/", kind.as_str());
        self.records.iter().any(|r| r.id.starts_with(&prefix))
    }

    /// Writes the records as JSON lines, one `{id, n, k}` object per line.
    pub fn write_jsonl(&self, path: &Path) -> Result<(), EstimationError> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        for r in &self.records {
            serde_json::to_writer(&mut file, r)?;
            file.write_all(b"\n")?;
        }
        file.flush()?;
        Ok(())
    }

    pub fn read_jsonl(path: &Path) -> Result<Self, EstimationError> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut records = Vec::new();
        for line in file.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(&line)?);
        }
        Dataset::new(records)
    }
}

/// Which decoherence-detection basis a signal belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoherenceBasis {
    X,
    Z,
}

impl DecoherenceBasis {
    pub fn kind(self) -> FamilyKind {
        match self {
            DecoherenceBasis::X => FamilyKind::DecoherenceX,
            DecoherenceBasis::Z => FamilyKind::DecoherenceZ,
        }
    }
}

fn decoherence_id(basis: DecoherenceBasis, m: u64, sign: Sign) -> String {
    format!("{}/{}/{}", basis.kind().as_str(), m, sign.label())
}

/// The survival signal `S_P(m) = Pr̂(P,+1,m) + Pr̂(P,-1,m) - 1`, where
/// `Pr̂(P,s,m)` is the empirical frequency of outcome `s` on the circuit
/// prepared in the `s` eigenstate. Outcome +1 is the zeros count; outcome
/// -1 its complement.
pub fn pauli_signal(
    dataset: &Dataset,
    basis: DecoherenceBasis,
    m: u64,
) -> Result<SignalPoint, EstimationError> {
    let plus = dataset.require(&decoherence_id(basis, m, Sign::Plus))?;
    let minus = dataset.require(&decoherence_id(basis, m, Sign::Minus))?;
    plus.validate()?;
    minus.validate()?;
    let value = plus.freq_zeros() + (1.0 - minus.freq_zeros()) - 1.0;
    let sigma = (plus.freq_variance() + minus.freq_variance()).sqrt();
    Ok(SignalPoint { depth: m as f64, value, sigma })
}

/// All available survival signals for one basis, sorted by depth.
pub fn decoherence_signals(
    dataset: &Dataset,
    basis: DecoherenceBasis,
) -> Result<Vec<SignalPoint>, EstimationError> {
    let prefix = format!("{}/", basis.kind().as_str());
    let mut depths: BTreeMap<u64, ()> = BTreeMap::new();
    for r in &dataset.records {
        if let Some(rest) = r.id.strip_prefix(&prefix) {
            if let Some(m_str) = rest.split('/').next() {
                if let Ok(m) = m_str.parse::<u64>() {
                    depths.insert(m, ());
                }
            }
        }
    }
    depths
        .keys()
        .map(|&m| pauli_signal(dataset, basis, m))
        .collect()
}

/// Decoherence parameters from the two fitted decay rates:
/// `p̂_z = 1 - √λ_X` and `p̂_x = 1 - √(λ_Z / (1 - p̂_z))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceEstimate {
    pub p_z: f64,
    pub p_x: f64,
    /// Set when `λ_Z / (1 - p̂_z)` exceeded 1 and `p̂_x` was clamped to 0.
    pub clamped: bool,
}

pub fn decoherence_params(
    lambda_x: f64,
    lambda_z: f64,
) -> Result<DecoherenceEstimate, EstimationError> {
    if !(lambda_x > 0.0 && lambda_x <= 1.0) {
        return Err(EstimationError::DomainError { name: "lambda_x", value: lambda_x });
    }
    if !(lambda_z > 0.0 && lambda_z <= 1.0) {
        return Err(EstimationError::DomainError { name: "lambda_z", value: lambda_z });
    }
    let p_z = 1.0 - lambda_x.sqrt();
    let ratio = lambda_z / (1.0 - p_z);
    if ratio > 1.0 {
        return Ok(DecoherenceEstimate { p_z, p_x: 0.0, clamped: true });
    }
    Ok(DecoherenceEstimate {
        p_z,
        p_x: 1.0 - ratio.sqrt(),
        clamped: false,
    })
}

/// Readout error estimates from the two dedicated circuits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutEstimate {
    pub r_01: f64,
    pub r_10: f64,
}

pub fn readout_extract(dataset: &Dataset) -> Result<ReadoutEstimate, EstimationError> {
    let zero = dataset.require("readout_zero/0/+1")?;
    let pi = dataset.require("readout_pi/0/+1")?;
    Ok(ReadoutEstimate {
        r_01: 1.0 - zero.freq_zeros(),
        r_10: pi.freq_zeros(),
    })
}
