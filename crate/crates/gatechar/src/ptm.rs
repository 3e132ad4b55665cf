//! Dense Pauli-transfer-matrix representation of states, channels, and
//! measurement effects, plus exact outcome probabilities.
//!
//! Conventions used throughout the crate:
//!
//! * Pauli ordering is `I, X, Y, Z` for one qubit and lexicographic
//!   `II, IX, IY, IZ, XI, ..., ZZ` for two (index `4a + b`, first qubit on
//!   the left tensor factor).
//! * A state is stored as the coefficient vector `c_j = Tr(P_j ρ)`, so
//!   `c_0 = 1` for a normalized density operator and `(c_x, c_y, c_z)` is
//!   the ordinary Bloch vector on one qubit.
//! * A measurement effect is stored as `e_j = Tr(P_j M) / d`. With these
//!   two choices the outcome probability `Tr(M ρ)` is the plain dot
//!   product of the effect and state vectors, with no extra factors.
//! * A channel `E` is the real matrix `R[i][j] = Tr(P_i E(P_j)) / d`, and
//!   `E` acts on state vectors by ordinary matrix multiplication.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Tolerance used to reject non-unitary inputs to [`ptm_from_unitary`].
pub const UNITARITY_TOL: f64 = 1e-10;

/// Slack allowed before an out-of-range probability is treated as a model
/// construction bug rather than floating-point dust.
pub const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PtmError {
    #[error("input matrix is not unitary (max |UU† - I| = {max_dev:.3e})")]
    NotUnitary { max_dev: f64 },

    #[error("matrix dimension {dim} is not a supported Pauli-space size (4 or 16)")]
    UnsupportedDimension { dim: usize },

    #[error("operands act on different qubit counts ({left} vs {right})")]
    QubitCountMismatch { left: usize, right: usize },

    #[error("channel sequence is empty")]
    EmptySequence,

    #[error("probability {value} lies outside [0, 1] beyond tolerance; the model is inconsistent")]
    InvalidProbability { value: f64 },

    #[error("vector of length {len} is not a valid state: {reason}")]
    InvalidState { len: usize, reason: String },
}

/// Coefficients of an operator in the Pauli basis; used for both density
/// operators (states) and POVM effects, with the normalizations described
/// in the module docs.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliVector {
    coeffs: DVector<f64>,
    qubit_count: usize,
}

impl PauliVector {
    /// Wraps raw coefficients. The length must be 4 (one qubit) or 16 (two).
    pub fn from_coeffs(coeffs: Vec<f64>) -> Result<Self, PtmError> {
        let qubit_count = match coeffs.len() {
            4 => 1,
            16 => 2,
            dim => return Err(PtmError::UnsupportedDimension { dim }),
        };
        Ok(Self {
            coeffs: DVector::from_vec(coeffs),
            qubit_count,
        })
    }

    /// The state |0⟩⟨0| on one qubit: Bloch vector (0, 0, 1).
    pub fn state_zero() -> Self {
        Self {
            coeffs: DVector::from_vec(vec![1.0, 0.0, 0.0, 1.0]),
            qubit_count: 1,
        }
    }

    /// Identity effect (accepts every outcome).
    pub fn effect_identity(qubit_count: usize) -> Self {
        let dim = 4usize.pow(qubit_count as u32);
        let mut coeffs = DVector::zeros(dim);
        coeffs[0] = 1.0;
        Self { coeffs, qubit_count }
    }

    /// Tensor product; `self` is the first (left) qubit.
    pub fn kron(&self, other: &Self) -> Self {
        let n = self.coeffs.len();
        let m = other.coeffs.len();
        let mut out = DVector::zeros(n * m);
        for i in 0..n {
            for j in 0..m {
                out[i * m + j] = self.coeffs[i] * other.coeffs[j];
            }
        }
        Self {
            coeffs: out,
            qubit_count: self.qubit_count + other.qubit_count,
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    /// Checks the state invariants: unit trace component and purity
    /// `Σ c_j² ≤ 2^q · c_0²` (equality for pure states).
    pub fn validate_state(&self) -> Result<(), PtmError> {
        let c0 = self.coeffs[0];
        if (c0 - 1.0).abs() > 1e-9 {
            return Err(PtmError::InvalidState {
                len: self.coeffs.len(),
                reason: format!("trace component is {c0}, expected 1"),
            });
        }
        let purity: f64 = self.coeffs.iter().map(|c| c * c).sum();
        let bound = 2f64.powi(self.qubit_count as i32) * c0 * c0;
        if purity > bound + 1e-9 {
            return Err(PtmError::InvalidState {
                len: self.coeffs.len(),
                reason: format!("purity sum {purity} exceeds bound {bound}"),
            });
        }
        Ok(())
    }
}

/// A quantum channel in the normalized Pauli basis: a real `d² × d²` matrix
/// with `d = 2` (one qubit) or `d = 4` (two qubits).
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTransferMatrix {
    entries: DMatrix<f64>,
    qubit_count: usize,
}

impl PauliTransferMatrix {
    pub fn from_entries(entries: DMatrix<f64>) -> Result<Self, PtmError> {
        if entries.nrows() != entries.ncols() {
            return Err(PtmError::UnsupportedDimension { dim: entries.nrows() });
        }
        let qubit_count = match entries.nrows() {
            4 => 1,
            16 => 2,
            dim => return Err(PtmError::UnsupportedDimension { dim }),
        };
        Ok(Self { entries, qubit_count })
    }

    pub fn identity(qubit_count: usize) -> Self {
        let dim = 4usize.pow(qubit_count as u32);
        Self {
            entries: DMatrix::identity(dim, dim),
            qubit_count,
        }
    }

    /// Diagonal channel (stochastic Pauli channels are of this form).
    pub fn from_diagonal(diag: &[f64]) -> Result<Self, PtmError> {
        let qubit_count = match diag.len() {
            4 => 1,
            16 => 2,
            dim => return Err(PtmError::UnsupportedDimension { dim }),
        };
        Ok(Self {
            entries: DMatrix::from_diagonal(&DVector::from_row_slice(diag)),
            qubit_count,
        })
    }

    /// Tensor product; `self` acts on the first (left) qubit.
    pub fn kron(&self, other: &Self) -> Self {
        Self {
            entries: self.entries.kronecker(&other.entries),
            qubit_count: self.qubit_count + other.qubit_count,
        }
    }

    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Applies the channel to a state vector.
    pub fn apply(&self, state: &PauliVector) -> Result<PauliVector, PtmError> {
        if self.qubit_count != state.qubit_count {
            return Err(PtmError::QubitCountMismatch {
                left: self.qubit_count,
                right: state.qubit_count,
            });
        }
        Ok(PauliVector {
            coeffs: &self.entries * &state.coeffs,
            qubit_count: state.qubit_count,
        })
    }
}

/// A two-outcome Z-basis measurement, stored as its two effects.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    pub effect_zero: PauliVector,
    pub effect_one: PauliVector,
}

impl Povm {
    /// Single-qubit readout POVM with confusion rates `r_01 = Pr(read 0 as 1)`
    /// and `r_10 = Pr(read 1 as 0)`:
    /// `M_0 = (1 - r_01)|0⟩⟨0| + r_10 |1⟩⟨1|` and `M_1 = 1 - M_0`.
    pub fn z_readout(r_01: f64, r_10: f64) -> Self {
        // e_j = Tr(P_j M_0) / 2 over I, X, Y, Z.
        let e_i = (1.0 - r_01 + r_10) / 2.0;
        let e_z = (1.0 - r_01 - r_10) / 2.0;
        let effect_zero = PauliVector::from_coeffs(vec![e_i, 0.0, 0.0, e_z]).unwrap();
        let effect_one = PauliVector::from_coeffs(vec![1.0 - e_i, 0.0, 0.0, -e_z]).unwrap();
        Self {
            effect_zero,
            effect_one,
        }
    }

    /// Checks completeness and, for one qubit, that both effects have
    /// eigenvalues in [0, 1] (closed form `e_0 ± |e_vec|` for a 2×2
    /// Hermitian operator `Σ e_j P_j`).
    pub fn validate(&self) -> Result<(), PtmError> {
        let id = PauliVector::effect_identity(self.effect_zero.qubit_count);
        for j in 0..id.coeffs.len() {
            let sum = self.effect_zero.coeffs[j] + self.effect_one.coeffs[j];
            if (sum - id.coeffs[j]).abs() > 1e-12 {
                return Err(PtmError::InvalidState {
                    len: id.coeffs.len(),
                    reason: format!("effects do not sum to identity at component {j}"),
                });
            }
        }
        if self.effect_zero.qubit_count == 1 {
            for effect in [&self.effect_zero, &self.effect_one] {
                let c = &effect.coeffs;
                let norm = (c[1] * c[1] + c[2] * c[2] + c[3] * c[3]).sqrt();
                let (lo, hi) = (c[0] - norm, c[0] + norm);
                if lo < -1e-12 || hi > 1.0 + 1e-12 {
                    return Err(PtmError::InvalidState {
                        len: 4,
                        reason: format!("effect eigenvalues [{lo}, {hi}] outside [0, 1]"),
                    });
                }
            }
        }
        Ok(())
    }
}

const PAULI_1Q: [[[Complex64; 2]; 2]; 4] = {
    const O: Complex64 = Complex64::new(0.0, 0.0);
    const L: Complex64 = Complex64::new(1.0, 0.0);
    const MI: Complex64 = Complex64::new(0.0, -1.0);
    const PI: Complex64 = Complex64::new(0.0, 1.0);
    const ML: Complex64 = Complex64::new(-1.0, 0.0);
    [
        [[L, O], [O, L]],   // I
        [[O, L], [L, O]],   // X
        [[O, MI], [PI, O]], // Y
        [[L, O], [O, ML]],  // Z
    ]
};

/// The `k`-th Pauli operator as a dense complex matrix; `k < 4` for one
/// qubit (I, X, Y, Z) and `k < 16` for two (lexicographic tensor order).
pub fn pauli_matrix(qubit_count: usize, k: usize) -> DMatrix<Complex64> {
    match qubit_count {
        1 => DMatrix::from_fn(2, 2, |r, c| PAULI_1Q[k][r][c]),
        2 => {
            let (a, b) = (k / 4, k % 4);
            DMatrix::from_fn(4, 4, |r, c| {
                PAULI_1Q[a][r / 2][c / 2] * PAULI_1Q[b][r % 2][c % 2]
            })
        }
        _ => panic!("unsupported qubit count {qubit_count}"),
    }
}

fn check_unitary(u: &DMatrix<Complex64>) -> Result<(), PtmError> {
    let d = u.nrows();
    let mut max_dev: f64 = 0.0;
    for r in 0..d {
        for c in 0..d {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..d {
                acc += u[(r, k)] * u[(c, k)].conj();
            }
            let expected = if r == c { 1.0 } else { 0.0 };
            max_dev = max_dev.max((acc - expected).norm());
        }
    }
    if max_dev > UNITARITY_TOL {
        return Err(PtmError::NotUnitary { max_dev });
    }
    Ok(())
}

/// Builds the PTM of the unitary channel `ρ ↦ UρU†`:
/// `R[i][j] = Tr(P_i U P_j U†) / d`.
///
/// Trace preservation makes row 0 equal to `(1, 0, ..., 0)` exactly; after
/// the unitarity check passes, that row is stored exactly rather than with
/// floating-point residue.
pub fn ptm_from_unitary(u: &DMatrix<Complex64>) -> Result<PauliTransferMatrix, PtmError> {
    let d = u.nrows();
    let qubit_count = match d {
        2 => 1,
        4 => 2,
        _ => return Err(PtmError::UnsupportedDimension { dim: d * d }),
    };
    check_unitary(u)?;
    let dim = d * d;
    let mut entries = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let pj = pauli_matrix(qubit_count, j);
        // E(P_j) = U P_j U†
        let conj = u * pj * u.adjoint();
        for i in 0..dim {
            let pi = pauli_matrix(qubit_count, i);
            let mut tr = Complex64::new(0.0, 0.0);
            for r in 0..d {
                for c in 0..d {
                    tr += pi[(r, c)] * conj[(c, r)];
                }
            }
            entries[(i, j)] = tr.re / d as f64;
        }
    }
    for j in 0..dim {
        entries[(0, j)] = if j == 0 { 1.0 } else { 0.0 };
    }
    Ok(PauliTransferMatrix {
        entries,
        qubit_count,
    })
}

/// Composes channels listed in application order (first applied is first in
/// the slice), i.e. the matrix product with the first-applied factor
/// rightmost.
pub fn compose_sequence(
    channels: &[PauliTransferMatrix],
) -> Result<PauliTransferMatrix, PtmError> {
    let first = channels.first().ok_or(PtmError::EmptySequence)?;
    let mut acc = first.clone();
    for ch in &channels[1..] {
        if ch.qubit_count != acc.qubit_count {
            return Err(PtmError::QubitCountMismatch {
                left: acc.qubit_count,
                right: ch.qubit_count,
            });
        }
        acc = PauliTransferMatrix {
            entries: &ch.entries * &acc.entries,
            qubit_count: acc.qubit_count,
        };
    }
    Ok(acc)
}

/// Probability of the outcome associated with `effect` when `prep` is sent
/// through `channel`. Values within [`PROBABILITY_TOL`] outside [0, 1] are
/// clamped; anything further out is an error in the caller's model.
pub fn outcome_probability(
    channel: &PauliTransferMatrix,
    prep: &PauliVector,
    effect: &PauliVector,
) -> Result<f64, PtmError> {
    if prep.qubit_count != effect.qubit_count {
        return Err(PtmError::QubitCountMismatch {
            left: prep.qubit_count,
            right: effect.qubit_count,
        });
    }
    prep.validate_state()?;
    let out = channel.apply(prep)?;
    let p = effect.coeffs.dot(&out.coeffs);
    if p < -PROBABILITY_TOL || p > 1.0 + PROBABILITY_TOL {
        return Err(PtmError::InvalidProbability { value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn z180_unitary() -> DMatrix<Complex64> {
        DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(-1.0, 0.0),
            ],
        )
    }

    /// Rotation by `angle` about the x axis.
    fn x_rotation(angle: f64) -> DMatrix<Complex64> {
        let c = Complex64::new((angle / 2.0).cos(), 0.0);
        let s = Complex64::new(0.0, -(angle / 2.0).sin());
        DMatrix::from_row_slice(2, 2, &[c, s, s, c])
    }

    #[test]
    fn identity_unitary_gives_identity_ptm() {
        let u = DMatrix::identity(2, 2);
        let ptm = ptm_from_unitary(&u).unwrap();
        assert_eq!(ptm.entries(), PauliTransferMatrix::identity(1).entries());
    }

    #[test]
    fn z180_ptm_is_diag_1_m1_m1_1() {
        let ptm = ptm_from_unitary(&z180_unitary()).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0, -1.0, 1.0]));
        assert_relative_eq!(ptm.entries(), &expected, epsilon = 1e-14);
    }

    #[test]
    fn over_rotated_x90_matches_block_form() {
        // Rotation by π/2 + ε about x has lower-right block
        // [[-sin ε, -cos ε], [cos ε, -sin ε]] in the (Y, Z) sector.
        let eps = 0.06f64;
        let ptm = ptm_from_unitary(&x_rotation(std::f64::consts::FRAC_PI_2 + eps)).unwrap();
        let e = ptm.entries();
        assert_relative_eq!(e[(2, 2)], -eps.sin(), epsilon = 1e-12);
        assert_relative_eq!(e[(2, 3)], -eps.cos(), epsilon = 1e-12);
        assert_relative_eq!(e[(3, 2)], eps.cos(), epsilon = 1e-12);
        assert_relative_eq!(e[(3, 3)], -eps.sin(), epsilon = 1e-12);
        assert_relative_eq!(e[(1, 1)], 1.0, epsilon = 1e-12);
        // Unitary PTMs are orthogonal.
        let prod = e * e.transpose();
        assert_relative_eq!(&prod, &DMatrix::identity(4, 4), epsilon = 1e-10);
    }

    #[test]
    fn non_unitary_input_rejected() {
        let mut u = DMatrix::identity(2, 2);
        u[(0, 0)] = Complex64::new(1.1, 0.0);
        assert!(matches!(
            ptm_from_unitary(&u),
            Err(PtmError::NotUnitary { .. })
        ));
    }

    #[test]
    fn z180_squares_to_identity() {
        let z = ptm_from_unitary(&z180_unitary()).unwrap();
        let sq = compose_sequence(&[z.clone(), z]).unwrap();
        assert_relative_eq!(
            sq.entries(),
            PauliTransferMatrix::identity(1).entries(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn compose_empty_errors() {
        assert!(matches!(
            compose_sequence(&[]),
            Err(PtmError::EmptySequence)
        ));
    }

    /// N_1 = Z180 ∘ X̃90 ∘ Z180 ∘ X̃90 built from hand-written 4×4 factors,
    /// applied to the X and Z Pauli components. Cross-checks the closed
    /// forms (1-p_z)^2 and (1-p_x)(1-p_x-p_z).
    #[test]
    fn echoed_pair_action_on_x_and_z() {
        let (p_x, p_z) = (0.002, 0.02);
        let lambda = PauliTransferMatrix::from_diagonal(&[
            1.0,
            1.0 - p_z,
            1.0 - p_x - p_z,
            1.0 - p_x,
        ])
        .unwrap();
        let x90 = ptm_from_unitary(&x_rotation(std::f64::consts::FRAC_PI_2)).unwrap();
        let noisy = compose_sequence(&[x90, lambda]).unwrap();
        let z180 = ptm_from_unitary(&z180_unitary()).unwrap();
        let n1 = compose_sequence(&[noisy.clone(), z180.clone(), noisy, z180]).unwrap();

        let x_in = PauliVector::from_coeffs(vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let x_out = n1.apply(&x_in).unwrap();
        assert_relative_eq!(x_out.coeffs()[1], (1.0 - p_z) * (1.0 - p_z), epsilon = 1e-12);
        assert_relative_eq!(x_out.coeffs()[1], 0.9604, epsilon = 1e-12);

        let z_in = PauliVector::from_coeffs(vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let z_out = n1.apply(&z_in).unwrap();
        assert_relative_eq!(
            z_out.coeffs()[3],
            (1.0 - p_x) * (1.0 - p_x - p_z),
            epsilon = 1e-12
        );
        assert_relative_eq!(z_out.coeffs()[3], 0.976044, epsilon = 1e-12);
    }

    #[test]
    fn two_ideal_x90s_flip_the_state() {
        let x90 = ptm_from_unitary(&x_rotation(std::f64::consts::FRAC_PI_2)).unwrap();
        let chan = compose_sequence(&[x90.clone(), x90]).unwrap();
        let povm = Povm::z_readout(0.0, 0.0);
        let p1 = outcome_probability(&chan, &PauliVector::state_zero(), &povm.effect_one).unwrap();
        assert_relative_eq!(p1, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn readout_errors_enter_probabilities() {
        // |1⟩ measured with M_0 when r_10 = 0.05.
        let x90 = ptm_from_unitary(&x_rotation(std::f64::consts::FRAC_PI_2)).unwrap();
        let chan = compose_sequence(&[x90.clone(), x90]).unwrap();
        let povm = Povm::z_readout(0.0, 0.05);
        let p = outcome_probability(&chan, &PauliVector::state_zero(), &povm.effect_zero).unwrap();
        assert_relative_eq!(p, 0.05, epsilon = 1e-12);

        // |0⟩ through the identity with r_01 = 0.08.
        let povm = Povm::z_readout(0.08, 0.0);
        let p = outcome_probability(
            &PauliTransferMatrix::identity(1),
            &PauliVector::state_zero(),
            &povm.effect_zero,
        )
        .unwrap();
        assert_relative_eq!(p, 0.92, epsilon = 1e-12);
    }

    #[test]
    fn povm_validation_accepts_physical_and_rejects_unphysical() {
        Povm::z_readout(0.08, 0.05).validate().unwrap();
        let bad = Povm {
            effect_zero: PauliVector::from_coeffs(vec![0.5, 0.0, 0.0, 0.8]).unwrap(),
            effect_one: PauliVector::from_coeffs(vec![0.5, 0.0, 0.0, -0.8]).unwrap(),
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn invalid_probability_is_rejected_not_clamped() {
        // An "effect" far outside the physical range drives the inner
        // product above 1 + tol.
        let effect = PauliVector::from_coeffs(vec![1.5, 0.0, 0.0, 0.0]).unwrap();
        let err = outcome_probability(
            &PauliTransferMatrix::identity(1),
            &PauliVector::state_zero(),
            &effect,
        )
        .unwrap_err();
        assert!(matches!(err, PtmError::InvalidProbability { .. }));
    }

    #[test]
    fn trace_row_is_exact() {
        let ptm = ptm_from_unitary(&x_rotation(0.7345)).unwrap();
        assert_eq!(ptm.entries()[(0, 0)], 1.0);
        for j in 1..4 {
            assert_eq!(ptm.entries()[(0, j)], 0.0);
        }
    }
}
