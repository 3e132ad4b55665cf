//! The parameterized gateset: noisy X90, noiseless virtual Z rotations,
//! readout POVM, optional noisy CZ, and exact circuit evaluation.
//!
//! The X90 is a rotation by `(1 + ε)·π/2` about the axis
//! `(cos θ, 0, sin θ)` (tilted toward +z), followed by the stochastic
//! channel that applies X with probability `p_x/2` and Z with probability
//! `p_z/2`. State preparation is the ideal |0⟩; measurement is the
//! confusion-matrix POVM with rates `r_01` and `r_10`.
//!
//! X-basis preparations and measurements have no native gate: they are
//! compiled onto the noisy X90 plus virtual Z rotations. The compiled
//! sequences are pinned by tests against ideal-model probabilities:
//! `PrepX(s) = PrepZ(+1), X90, Zrot(s·π/2)`, `MeasX = Zrot(π/2), X90,
//! MeasZ` and `PrepZ(-1) = PrepZ(+1), X90, X90`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, GateLabel, Sign};
use crate::ptm::{
    compose_sequence, outcome_probability, ptm_from_unitary, PauliTransferMatrix, PauliVector,
    Povm, PtmError,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter {name} = {value} is invalid: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("model has no CZ parameters but the circuit uses CZ")]
    MissingCz,

    #[error(transparent)]
    Circuit(#[from] CircuitError),

    #[error(transparent)]
    Ptm(#[from] PtmError),
}

/// Pauli basis indices in the crate ordering (identity is 0).
pub mod pauli_index {
    pub const X: usize = 1;
    pub const Y: usize = 2;
    pub const Z: usize = 3;

    /// Two-qubit index of `P_a ⊗ P_b`.
    pub const fn pair(a: usize, b: usize) -> usize {
        4 * a + b
    }

    pub const IZ: usize = pair(0, Z);
    pub const ZI: usize = pair(Z, 0);
    pub const ZZ: usize = pair(Z, Z);
}

/// CZ error parameters: phases of the diagonal unitary
/// `diag(1, e^{iα}, e^{iα}, e^{i(π+β)})` plus Z-basis stochastic Pauli
/// rates applied after it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CzParams {
    pub alpha: f64,
    pub beta: f64,
    pub p_iz: f64,
    pub p_zi: f64,
    pub p_zz: f64,
}

impl CzParams {
    pub fn ideal() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            p_iz: 0.0,
            p_zi: 0.0,
            p_zz: 0.0,
        }
    }
}

/// The six single-qubit error parameters, plus optional CZ parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GatesetModel {
    /// Over-rotation fraction: the X90 rotation angle is `(1 + ε)·π/2`.
    pub epsilon: f64,
    /// Rotation-axis tilt above the equator, in radians.
    pub theta: f64,
    /// X-decoherence probability per X90.
    pub p_x: f64,
    /// Z-decoherence probability per X90.
    pub p_z: f64,
    /// Pr(read 0 as 1).
    pub r_01: f64,
    /// Pr(read 1 as 0).
    pub r_10: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cz: Option<CzParams>,
}

impl GatesetModel {
    pub fn ideal() -> Self {
        Self {
            epsilon: 0.0,
            theta: 0.0,
            p_x: 0.0,
            p_z: 0.0,
            r_01: 0.0,
            r_10: 0.0,
            cz: None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let prob = |name: &'static str, value: f64| -> Result<(), ModelError> {
            if !(0.0..=1.0).contains(&value) {
                return Err(ModelError::InvalidParameter {
                    name,
                    value,
                    reason: "must lie in [0, 1]",
                });
            }
            Ok(())
        };
        prob("p_x", self.p_x)?;
        prob("p_z", self.p_z)?;
        prob("r_01", self.r_01)?;
        prob("r_10", self.r_10)?;
        if self.p_x + self.p_z > 1.0 {
            return Err(ModelError::InvalidParameter {
                name: "p_x + p_z",
                value: self.p_x + self.p_z,
                reason: "must not exceed 1",
            });
        }
        if self.epsilon.abs() >= 1.0 {
            return Err(ModelError::InvalidParameter {
                name: "epsilon",
                value: self.epsilon,
                reason: "must satisfy |epsilon| < 1",
            });
        }
        if self.theta.abs() >= FRAC_PI_2 {
            return Err(ModelError::InvalidParameter {
                name: "theta",
                value: self.theta,
                reason: "must satisfy |theta| < pi/2",
            });
        }
        if let Some(cz) = &self.cz {
            prob("p_iz", cz.p_iz)?;
            prob("p_zi", cz.p_zi)?;
            prob("p_zz", cz.p_zz)?;
            let sum = cz.p_iz + cz.p_zi + cz.p_zz;
            if sum > 1.0 {
                return Err(ModelError::InvalidParameter {
                    name: "p_iz + p_zi + p_zz",
                    value: sum,
                    reason: "must not exceed 1",
                });
            }
        }
        Ok(())
    }
}

fn anticommutes(i: usize, j: usize, qubit_count: usize) -> bool {
    let mut count = 0;
    let (mut a, mut b) = (i, j);
    for _ in 0..qubit_count {
        let (fa, fb) = (a % 4, b % 4);
        if fa != 0 && fb != 0 && fa != fb {
            count += 1;
        }
        a /= 4;
        b /= 4;
    }
    count % 2 == 1
}

/// Stochastic Pauli channel: applies the Pauli with basis index `k` with
/// probability `p_k` (indices from [`pauli_index`], identity excluded).
/// Diagonal in the Pauli basis with entries
/// `1 - 2·Σ_{P anticommuting with Q} p_P`.
pub fn stochastic_pauli_ptm(
    probabilities: &[(usize, f64)],
    qubit_count: usize,
) -> Result<PauliTransferMatrix, ModelError> {
    let dim = 4usize.pow(qubit_count as u32);
    let mut total = 0.0;
    for &(k, p) in probabilities {
        if k == 0 || k >= dim {
            return Err(ModelError::InvalidParameter {
                name: "pauli index",
                value: k as f64,
                reason: "must be a non-identity basis index",
            });
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(ModelError::InvalidParameter {
                name: "pauli probability",
                value: p,
                reason: "must lie in [0, 1]",
            });
        }
        total += p;
    }
    if total > 1.0 + 1e-12 {
        return Err(ModelError::InvalidParameter {
            name: "pauli probability sum",
            value: total,
            reason: "must not exceed 1",
        });
    }
    let mut diag = vec![1.0; dim];
    for (q, entry) in diag.iter_mut().enumerate() {
        let flipped: f64 = probabilities
            .iter()
            .filter(|&&(k, _)| anticommutes(k, q, qubit_count))
            .map(|&(_, p)| p)
            .sum();
        *entry = 1.0 - 2.0 * flipped;
    }
    Ok(PauliTransferMatrix::from_diagonal(&diag)?)
}

/// The decoherence channel of the noisy X90: X applied with probability
/// `p_x/2` and Z with probability `p_z/2`, giving the diagonal
/// `(1, 1-p_z, 1-p_x-p_z, 1-p_x)`.
pub fn decoherence_channel(p_x: f64, p_z: f64) -> Result<PauliTransferMatrix, ModelError> {
    stochastic_pauli_ptm(
        &[(pauli_index::X, p_x / 2.0), (pauli_index::Z, p_z / 2.0)],
        1,
    )
}

/// Unitary rotation by `angle` about the Bloch axis
/// `(cos tilt, 0, sin tilt)`.
fn tilted_x_rotation(angle: f64, tilt: f64) -> DMatrix<Complex64> {
    let c = (angle / 2.0).cos();
    let s = (angle / 2.0).sin();
    let (nx, nz) = (tilt.cos(), tilt.sin());
    // cos(a/2) I - i sin(a/2) (nx X + nz Z)
    DMatrix::from_row_slice(
        2,
        2,
        &[
            Complex64::new(c, -s * nz),
            Complex64::new(0.0, -s * nx),
            Complex64::new(0.0, -s * nx),
            Complex64::new(c, s * nz),
        ],
    )
}

fn zrot_unitary(angle: f64) -> DMatrix<Complex64> {
    let half = angle / 2.0;
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        Complex64::from_polar(1.0, -half),
        Complex64::from_polar(1.0, half),
    ]))
}

/// PTM of the model's noisy X90: decoherence after the tilted rotation.
pub fn x90_ptm(model: &GatesetModel) -> Result<PauliTransferMatrix, ModelError> {
    model.validate()?;
    let unitary = tilted_x_rotation((1.0 + model.epsilon) * FRAC_PI_2, model.theta);
    let rotation = ptm_from_unitary(&unitary)?;
    let noise = decoherence_channel(model.p_x, model.p_z)?;
    Ok(compose_sequence(&[rotation, noise])?)
}

/// PTM of the noiseless virtual Z rotation.
pub fn zrot_ptm(angle: f64) -> PauliTransferMatrix {
    ptm_from_unitary(&zrot_unitary(angle)).expect("z rotations are unitary")
}

/// PTM of the model's noisy CZ: the diagonal unitary
/// `diag(1, e^{iα}, e^{iα}, e^{i(π+β)})` followed by the Z-basis
/// stochastic Pauli channel.
pub fn cz_ptm(model: &GatesetModel) -> Result<PauliTransferMatrix, ModelError> {
    model.validate()?;
    let cz = model.cz.as_ref().ok_or(ModelError::MissingCz)?;
    let phases = [0.0, cz.alpha, cz.alpha, PI + cz.beta];
    let unitary = DMatrix::from_fn(4, 4, |r, c| {
        if r == c {
            Complex64::from_polar(1.0, phases[r])
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let rotation = ptm_from_unitary(&unitary)?;
    let noise = stochastic_pauli_ptm(
        &[
            (pauli_index::IZ, cz.p_iz),
            (pauli_index::ZI, cz.p_zi),
            (pauli_index::ZZ, cz.p_zz),
        ],
        2,
    )?;
    Ok(compose_sequence(&[rotation, noise])?)
}

/// Joint outcome distribution of a circuit: `Pr(0)` for one qubit, or the
/// four joint probabilities in the order 00, 01, 10, 11 for two.
#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeDistribution {
    One { p_zero: f64 },
    Two { joint: [f64; 4] },
}

impl OutcomeDistribution {
    /// Probability that every qubit reads 0.
    pub fn all_zeros(&self) -> f64 {
        match self {
            OutcomeDistribution::One { p_zero } => *p_zero,
            OutcomeDistribution::Two { joint } => joint[0],
        }
    }
}

/// A model with its gate PTMs and POVM built once, ready to evaluate many
/// circuits. Immutable after construction.
#[derive(Debug, Clone)]
pub struct CompiledModel {
    x90: PauliTransferMatrix,
    cz: Option<PauliTransferMatrix>,
    povm: Povm,
}

enum Op {
    OneQubit { qubit: usize, ptm: PauliTransferMatrix },
    TwoQubit { ptm: PauliTransferMatrix },
}

impl CompiledModel {
    pub fn new(model: &GatesetModel) -> Result<Self, ModelError> {
        model.validate()?;
        let cz = if model.cz.is_some() {
            Some(cz_ptm(model)?)
        } else {
            None
        };
        Ok(Self {
            x90: x90_ptm(model)?,
            cz,
            povm: Povm::z_readout(model.r_01, model.r_10),
        })
    }

    pub fn x90(&self) -> &PauliTransferMatrix {
        &self.x90
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    /// Lowers a label to the gate ops it compiles to, excluding the base
    /// |0⟩ preparation and the final Z measurement.
    fn lower(&self, label: &GateLabel, ops: &mut Vec<Op>) -> Result<(), ModelError> {
        match label {
            GateLabel::PrepZ { sign: Sign::Plus, .. } => {}
            GateLabel::PrepZ { qubit, sign: Sign::Minus } => {
                ops.push(Op::OneQubit { qubit: *qubit, ptm: self.x90.clone() });
                ops.push(Op::OneQubit { qubit: *qubit, ptm: self.x90.clone() });
            }
            GateLabel::PrepX { qubit, sign } => {
                ops.push(Op::OneQubit { qubit: *qubit, ptm: self.x90.clone() });
                ops.push(Op::OneQubit {
                    qubit: *qubit,
                    ptm: zrot_ptm(sign.value() * FRAC_PI_2),
                });
            }
            GateLabel::X90 { qubit } => {
                ops.push(Op::OneQubit { qubit: *qubit, ptm: self.x90.clone() });
            }
            GateLabel::Zrot { qubit, angle } => {
                ops.push(Op::OneQubit { qubit: *qubit, ptm: zrot_ptm(*angle) });
            }
            GateLabel::Cz => {
                let cz = self.cz.as_ref().ok_or(ModelError::MissingCz)?;
                ops.push(Op::TwoQubit { ptm: cz.clone() });
            }
            GateLabel::MeasZ { .. } => {}
            GateLabel::MeasX { qubit } => {
                ops.push(Op::OneQubit { qubit: *qubit, ptm: zrot_ptm(FRAC_PI_2) });
                ops.push(Op::OneQubit { qubit: *qubit, ptm: self.x90.clone() });
            }
        }
        Ok(())
    }

    fn embed(&self, op: &Op, qubit_count: usize) -> PauliTransferMatrix {
        match op {
            Op::OneQubit { qubit, ptm } => {
                if qubit_count == 1 {
                    ptm.clone()
                } else if *qubit == 0 {
                    ptm.kron(&PauliTransferMatrix::identity(1))
                } else {
                    PauliTransferMatrix::identity(1).kron(ptm)
                }
            }
            Op::TwoQubit { ptm } => ptm.clone(),
        }
    }

    /// Exact outcome distribution of `circuit` under this model.
    pub fn circuit_outcomes(&self, circuit: &Circuit) -> Result<OutcomeDistribution, ModelError> {
        circuit.validate()?;
        let mut ops = Vec::new();
        for label in &circuit.labels {
            self.lower(label, &mut ops)?;
        }
        let mut state = PauliVector::state_zero();
        for _ in 1..circuit.qubit_count {
            state = state.kron(&PauliVector::state_zero());
        }
        let channel = if ops.is_empty() {
            PauliTransferMatrix::identity(circuit.qubit_count)
        } else {
            let ptms: Vec<PauliTransferMatrix> =
                ops.iter().map(|op| self.embed(op, circuit.qubit_count)).collect();
            compose_sequence(&ptms)?
        };
        match circuit.qubit_count {
            1 => {
                let p_zero = outcome_probability(&channel, &state, &self.povm.effect_zero)?;
                Ok(OutcomeDistribution::One { p_zero })
            }
            2 => {
                let effects = [
                    self.povm.effect_zero.kron(&self.povm.effect_zero),
                    self.povm.effect_zero.kron(&self.povm.effect_one),
                    self.povm.effect_one.kron(&self.povm.effect_zero),
                    self.povm.effect_one.kron(&self.povm.effect_one),
                ];
                let mut joint = [0.0; 4];
                for (slot, effect) in joint.iter_mut().zip(effects.iter()) {
                    *slot = outcome_probability(&channel, &state, effect)?;
                }
                Ok(OutcomeDistribution::Two { joint })
            }
            q => Err(ModelError::Circuit(CircuitError::QubitOutOfRange(q, 2))),
        }
    }

    /// Probability that every qubit reads 0.
    pub fn circuit_probability(&self, circuit: &Circuit) -> Result<f64, ModelError> {
        Ok(self.circuit_outcomes(circuit)?.all_zeros())
    }
}

/// One-shot convenience around [`CompiledModel`].
pub fn circuit_probability(model: &GatesetModel, circuit: &Circuit) -> Result<f64, ModelError> {
    CompiledModel::new(model)?.circuit_probability(circuit)
}
