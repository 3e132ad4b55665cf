//! Circuits over the gateset alphabet: X90, virtual Z rotations, CZ, and
//! prep/measure annotations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("circuit is empty")]
    Empty,

    #[error("qubit index {0} out of range for a {1}-qubit circuit")]
    QubitOutOfRange(usize, usize),

    #[error("qubit {0} must have exactly one prep label, before all gates")]
    BadPrep(usize),

    #[error("qubit {0} must have exactly one measure label, after all gates")]
    BadMeasure(usize),

    #[error("CZ requires a two-qubit circuit")]
    CzOnOneQubit,
}

/// Eigenvalue sign selecting which basis eigenstate to prepare, or which
/// outcome counts as "the prepared state came back".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        }
    }
}

/// One element of the gateset alphabet. `PrepX`/`MeasX` are compiled onto
/// `PrepZ(+1)`/`MeasZ` plus gateset rotations at evaluation time, using the
/// noisy X90 itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum GateLabel {
    PrepZ { qubit: usize, sign: Sign },
    PrepX { qubit: usize, sign: Sign },
    X90 { qubit: usize },
    Zrot { qubit: usize, angle: f64 },
    Cz,
    MeasZ { qubit: usize },
    MeasX { qubit: usize },
}

impl GateLabel {
    fn qubit(&self) -> Option<usize> {
        match self {
            GateLabel::PrepZ { qubit, .. }
            | GateLabel::PrepX { qubit, .. }
            | GateLabel::X90 { qubit }
            | GateLabel::Zrot { qubit, .. }
            | GateLabel::MeasZ { qubit }
            | GateLabel::MeasX { qubit } => Some(*qubit),
            GateLabel::Cz => None,
        }
    }

    pub fn is_prep(&self) -> bool {
        matches!(self, GateLabel::PrepZ { .. } | GateLabel::PrepX { .. })
    }

    pub fn is_measure(&self) -> bool {
        matches!(self, GateLabel::MeasZ { .. } | GateLabel::MeasX { .. })
    }
}

/// An ordered list of gate labels with one prep (first) and one measure
/// (last) per qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub qubit_count: usize,
    pub labels: Vec<GateLabel>,
}

impl Circuit {
    pub fn new(qubit_count: usize, labels: Vec<GateLabel>) -> Result<Self, CircuitError> {
        let c = Self { qubit_count, labels };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.labels.is_empty() {
            return Err(CircuitError::Empty);
        }
        for label in &self.labels {
            if let Some(q) = label.qubit() {
                if q >= self.qubit_count {
                    return Err(CircuitError::QubitOutOfRange(q, self.qubit_count));
                }
            } else if self.qubit_count != 2 {
                return Err(CircuitError::CzOnOneQubit);
            }
        }
        for q in 0..self.qubit_count {
            let mut preps = 0usize;
            let mut measures = 0usize;
            let mut seen_gate = false;
            let mut seen_measure = false;
            for label in &self.labels {
                let touches = label.qubit() == Some(q) || label.qubit().is_none();
                if !touches {
                    continue;
                }
                if label.is_prep() {
                    preps += 1;
                    if seen_gate || seen_measure {
                        return Err(CircuitError::BadPrep(q));
                    }
                } else if label.is_measure() {
                    measures += 1;
                    seen_measure = true;
                } else {
                    if seen_measure {
                        return Err(CircuitError::BadMeasure(q));
                    }
                    seen_gate = true;
                }
            }
            if preps != 1 {
                return Err(CircuitError::BadPrep(q));
            }
            if measures != 1 {
                return Err(CircuitError::BadMeasure(q));
            }
        }
        Ok(())
    }

    /// Number of X90 gates, a rough cost proxy.
    pub fn x90_count(&self) -> usize {
        self.labels
            .iter()
            .filter(|l| matches!(l, GateLabel::X90 { .. }))
            .count()
    }
}
