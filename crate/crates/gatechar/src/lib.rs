//! Simulation and estimation toolkit for characterizing a small noisy
//! gateset: a single-qubit X90 with coherent (over-rotation, axis tilt)
//! and stochastic (X/Z decoherence) errors, confusion-matrix readout, and
//! an optional noisy CZ.
//!
//! The crate covers the full loop:
//!
//! 1. [`model`] builds the parameterized gateset as Pauli-transfer-matrix
//!    channels and evaluates exact circuit outcome probabilities.
//! 2. [`protocols`] generates the characterization circuit families
//!    (decoherence-detection echoes, robust phase estimation, readout,
//!    CZ phase and decay).
//! 3. [`sampling`] draws reproducible per-circuit binomial shots.
//! 4. [`estimation`] turns shot data back into parameter estimates:
//!    exponential decay fits, closed-form inversion, phase estimation,
//!    likelihood maximization, and likelihood profiles.
//! 5. [`stats`] quantifies model quality: absolute-deviation moments, the
//!    Chebyshev model-violation statistic, and likelihood-ratio
//!    discrimination error.
//! 6. [`pipeline`] wires everything into simulate/characterize runs with
//!    JSON/CSV reports.
//!
//! Everything is an immutable value type; all evaluation is pure, so any
//! operation may be called concurrently.

pub mod circuit;
pub mod estimation;
pub mod model;
pub mod pipeline;
pub mod protocols;
pub mod ptm;
pub mod sampling;
pub mod stats;

pub use circuit::{Circuit, CircuitError, GateLabel, Sign};
pub use estimation::{Dataset, EstimationError, ShotRecord};
pub use model::{
    circuit_probability, cz_ptm, decoherence_channel, stochastic_pauli_ptm, x90_ptm,
    CompiledModel, CzParams, GatesetModel, ModelError, OutcomeDistribution,
};
pub use pipeline::{characterize, simulate, CharacterizationReport, PipelineError, RunConfig};
pub use protocols::{CircuitFamily, CircuitSet, FamilyKind};
pub use ptm::{
    compose_sequence, outcome_probability, pauli_matrix, ptm_from_unitary, PauliTransferMatrix,
    PauliVector, Povm, PtmError,
};
pub use sampling::{sample_multinomial, sample_shots, SamplingError, ShotStream};
pub use stats::{
    absdev_moments, confidence_region_member, discrimination_error, model_violation, StatsError,
    ViolationReport,
};
