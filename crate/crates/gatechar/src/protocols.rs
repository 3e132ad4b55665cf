//! Generators for the characterization circuit families.
//!
//! Every generated circuit carries a stable id of the form
//! `<kind>/<index>/<sign>`, where `index` is the family's depth parameter
//! (echo half-depth `m`, phase-estimation depth `2^k`, or CZ decay depth)
//! and `sign` is the prepared eigenvalue or the quadrature tag
//! (`+1` cosine, `-1` sine). Ids are pure functions of those parameters,
//! so datasets can be joined back to regenerated circuit lists.

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

use crate::circuit::{Circuit, GateLabel, Sign};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("decoherence depth {0} must be even and positive")]
    BadDecoherenceDepth(u64),

    #[error("CZ phase estimation needs max exponent >= 1, got {0}")]
    BadPhaseExponent(u32),

    #[error("CZ decay depth {0} must be positive")]
    BadDecayDepth(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    DecoherenceX,
    DecoherenceZ,
    RpeAmplitude,
    RpeAxis,
    ReadoutZero,
    ReadoutPi,
    CzPhaseA,
    CzPhaseB,
    CzBeta,
    CzDecayBell,
    CzDecayPlus,
}

impl FamilyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyKind::DecoherenceX => "decoherence_x",
            FamilyKind::DecoherenceZ => "decoherence_z",
            FamilyKind::RpeAmplitude => "rpe_amplitude",
            FamilyKind::RpeAxis => "rpe_axis",
            FamilyKind::ReadoutZero => "readout_zero",
            FamilyKind::ReadoutPi => "readout_pi",
            FamilyKind::CzPhaseA => "cz_phase_a",
            FamilyKind::CzPhaseB => "cz_phase_b",
            FamilyKind::CzBeta => "cz_beta",
            FamilyKind::CzDecayBell => "cz_decay_bell",
            FamilyKind::CzDecayPlus => "cz_decay_plus",
        }
    }
}

/// One generated circuit with its family coordinates and stable id.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitFamily {
    pub kind: FamilyKind,
    pub index: u64,
    pub sign: Sign,
    pub circuit: Circuit,
    pub id: String,
}

impl CircuitFamily {
    fn new(kind: FamilyKind, index: u64, sign: Sign, circuit: Circuit) -> Self {
        let id = format!("{}/{}/{}", kind.as_str(), index, sign.label());
        Self { kind, index, sign, circuit, id }
    }
}

impl Serialize for CircuitFamily {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Params {
            index: u64,
            sign: Sign,
        }
        let mut map = serializer.serialize_map(Some(4))?;
        map.serialize_entry("id", &self.id)?;
        map.serialize_entry("kind", &self.kind)?;
        map.serialize_entry(
            "params",
            &Params { index: self.index, sign: self.sign },
        )?;
        map.serialize_entry("gates", &self.circuit.labels)?;
        map.end()
    }
}

/// A circuit list with id lookup.
#[derive(Debug, Clone, Default)]
pub struct CircuitSet {
    families: Vec<CircuitFamily>,
    by_id: HashMap<String, usize>,
}

impl CircuitSet {
    pub fn new(families: Vec<CircuitFamily>) -> Self {
        let by_id = families
            .iter()
            .enumerate()
            .map(|(i, f)| (f.id.clone(), i))
            .collect();
        Self { families, by_id }
    }

    pub fn extend(&mut self, more: Vec<CircuitFamily>) {
        for f in more {
            self.by_id.insert(f.id.clone(), self.families.len());
            self.families.push(f);
        }
    }

    pub fn get(&self, id: &str) -> Option<&CircuitFamily> {
        self.by_id.get(id).map(|&i| &self.families[i])
    }

    pub fn families(&self) -> &[CircuitFamily] {
        &self.families
    }

    pub fn iter_kind(&self, kind: FamilyKind) -> impl Iterator<Item = &CircuitFamily> {
        self.families.iter().filter(move |f| f.kind == kind)
    }

    pub fn has_kind(&self, kind: FamilyKind) -> bool {
        self.families.iter().any(|f| f.kind == kind)
    }
}

fn x90(qubit: usize) -> GateLabel {
    GateLabel::X90 { qubit }
}

fn zrot(qubit: usize, angle: f64) -> GateLabel {
    GateLabel::Zrot { qubit, angle }
}

/// Hadamard compiled onto the gateset (up to global phase).
fn hadamard(qubit: usize) -> [GateLabel; 3] {
    [zrot(qubit, FRAC_PI_2), x90(qubit), zrot(qubit, FRAC_PI_2)]
}

fn x180(qubit: usize) -> [GateLabel; 2] {
    [x90(qubit), x90(qubit)]
}

/// Decoherence-detection echo circuits: for each basis P ∈ {X, Z}, depth
/// `m`, and eigenvalue sign `s`, prepare the s eigenstate of P, apply
/// `X90^m, Z180, X90^m, Z180`, and measure in the P basis.
pub fn decoherence_circuits(ms: &[u64]) -> Result<Vec<CircuitFamily>, ProtocolError> {
    for &m in ms {
        if m == 0 || m % 2 != 0 {
            return Err(ProtocolError::BadDecoherenceDepth(m));
        }
    }
    let mut out = Vec::with_capacity(4 * ms.len());
    for (kind, x_basis) in [(FamilyKind::DecoherenceX, true), (FamilyKind::DecoherenceZ, false)] {
        for &m in ms {
            for sign in [Sign::Plus, Sign::Minus] {
                let mut labels = Vec::with_capacity(2 * m as usize + 5);
                labels.push(if x_basis {
                    GateLabel::PrepX { qubit: 0, sign }
                } else {
                    GateLabel::PrepZ { qubit: 0, sign }
                });
                for _ in 0..2 {
                    labels.extend(std::iter::repeat_n(x90(0), m as usize));
                    labels.push(zrot(0, PI));
                }
                labels.push(if x_basis {
                    GateLabel::MeasX { qubit: 0 }
                } else {
                    GateLabel::MeasZ { qubit: 0 }
                });
                let circuit = Circuit::new(1, labels).expect("generated circuit is well-formed");
                out.push(CircuitFamily::new(kind, m, sign, circuit));
            }
        }
    }
    Ok(out)
}

/// Robust-phase-estimation circuits at depths `2^0 .. 2^K`.
///
/// The amplitude family probes the per-gate rotation angle: the cosine
/// circuit is `X90^L` measured in Z, the sine circuit appends the
/// `Zrot(π), X90` quadrature mapping. The axis family repeats the
/// `X90, X90, Zrot(π)` echo period L times, which turns an axis tilt θ
/// into a first-order phase accumulation about an equatorial axis; its
/// quadratures are the Z- and X-basis measurements.
pub fn rpe_circuits(max_depth_exponent: u32) -> Vec<CircuitFamily> {
    let mut out = Vec::new();
    for k in 0..=max_depth_exponent {
        let depth = 1u64 << k;
        let prep = GateLabel::PrepZ { qubit: 0, sign: Sign::Plus };

        let mut cos_labels = vec![prep.clone()];
        cos_labels.extend(std::iter::repeat_n(x90(0), depth as usize));
        cos_labels.push(GateLabel::MeasZ { qubit: 0 });
        out.push(CircuitFamily::new(
            FamilyKind::RpeAmplitude,
            depth,
            Sign::Plus,
            Circuit::new(1, cos_labels).expect("well-formed"),
        ));

        let mut sin_labels = vec![prep.clone()];
        sin_labels.extend(std::iter::repeat_n(x90(0), depth as usize));
        sin_labels.push(zrot(0, PI));
        sin_labels.push(x90(0));
        sin_labels.push(GateLabel::MeasZ { qubit: 0 });
        out.push(CircuitFamily::new(
            FamilyKind::RpeAmplitude,
            depth,
            Sign::Minus,
            Circuit::new(1, sin_labels).expect("well-formed"),
        ));

        let mut axis_cos = vec![prep.clone()];
        for _ in 0..depth {
            axis_cos.extend(x180(0));
            axis_cos.push(zrot(0, PI));
        }
        axis_cos.push(GateLabel::MeasZ { qubit: 0 });
        out.push(CircuitFamily::new(
            FamilyKind::RpeAxis,
            depth,
            Sign::Plus,
            Circuit::new(1, axis_cos).expect("well-formed"),
        ));

        let mut axis_sin = vec![prep];
        for _ in 0..depth {
            axis_sin.extend(x180(0));
            axis_sin.push(zrot(0, PI));
        }
        axis_sin.push(GateLabel::MeasX { qubit: 0 });
        out.push(CircuitFamily::new(
            FamilyKind::RpeAxis,
            depth,
            Sign::Minus,
            Circuit::new(1, axis_sin).expect("well-formed"),
        ));
    }
    out
}

/// The two readout circuits: prepare-and-measure, and prepare, X90 twice,
/// measure.
pub fn readout_circuits() -> Vec<CircuitFamily> {
    let prep = GateLabel::PrepZ { qubit: 0, sign: Sign::Plus };
    let zero = Circuit::new(1, vec![prep.clone(), GateLabel::MeasZ { qubit: 0 }])
        .expect("well-formed");
    let mut pi_labels = vec![prep];
    pi_labels.extend(x180(0));
    pi_labels.push(GateLabel::MeasZ { qubit: 0 });
    let pi = Circuit::new(1, pi_labels).expect("well-formed");
    vec![
        CircuitFamily::new(FamilyKind::ReadoutZero, 0, Sign::Plus, zero),
        CircuitFamily::new(FamilyKind::ReadoutPi, 0, Sign::Plus, pi),
    ]
}

fn cz_phase_circuit(depth: u64, quadrature_shift: bool, control_one: bool) -> Circuit {
    let mut labels = vec![
        GateLabel::PrepZ { qubit: 0, sign: Sign::Plus },
        GateLabel::PrepZ { qubit: 1, sign: Sign::Plus },
    ];
    if control_one {
        labels.extend(x180(0));
    }
    labels.extend(hadamard(1));
    if quadrature_shift {
        labels.push(zrot(1, FRAC_PI_2));
    }
    labels.extend(std::iter::repeat_n(GateLabel::Cz, depth as usize));
    labels.extend(hadamard(1));
    if control_one {
        labels.extend(x180(0));
    }
    labels.push(GateLabel::MeasZ { qubit: 0 });
    labels.push(GateLabel::MeasZ { qubit: 1 });
    Circuit::new(2, labels).expect("well-formed")
}

/// CZ phase-estimation circuits at depths `2^k`, `k = 1..=K`: family A
/// (target in |+⟩, cosine), family B (extra Z90 on the target, sine), and
/// the control-|1⟩ "beta" variants of both. Beta circuits unflip the
/// control before measurement so that success is always the all-zeros
/// outcome.
pub fn cz_phase_circuits(max_exponent: u32) -> Result<Vec<CircuitFamily>, ProtocolError> {
    if max_exponent < 1 {
        return Err(ProtocolError::BadPhaseExponent(max_exponent));
    }
    let mut out = Vec::new();
    for k in 1..=max_exponent {
        let depth = 1u64 << k;
        out.push(CircuitFamily::new(
            FamilyKind::CzPhaseA,
            depth,
            Sign::Plus,
            cz_phase_circuit(depth, false, false),
        ));
        out.push(CircuitFamily::new(
            FamilyKind::CzPhaseB,
            depth,
            Sign::Minus,
            cz_phase_circuit(depth, true, false),
        ));
        out.push(CircuitFamily::new(
            FamilyKind::CzBeta,
            depth,
            Sign::Plus,
            cz_phase_circuit(depth, false, true),
        ));
        out.push(CircuitFamily::new(
            FamilyKind::CzBeta,
            depth,
            Sign::Minus,
            cz_phase_circuit(depth, true, true),
        ));
    }
    Ok(out)
}

/// CZ decay circuits: `depth` CZ gates, a Pauli echo, and `depth` more.
///
/// The Bell family sandwiches the echo block in a Bell-pair prep/unprep
/// (one extra CZ on each side from the compiled CNOT); its success decays
/// at the per-CZ rate `p_IZ + p_ZI`. The Plus family uses `|+0⟩` with an
/// X echo on the first qubit and decays at `p_ZI + p_ZZ`.
pub fn cz_decay_circuits(depths: &[u64]) -> Result<Vec<CircuitFamily>, ProtocolError> {
    for &d in depths {
        if d == 0 {
            return Err(ProtocolError::BadDecayDepth(d));
        }
    }
    let mut out = Vec::new();
    for &depth in depths {
        // Bell: H(q0), CNOT(q0→q1) = H(q1) CZ H(q1); echo X⊗X; inverse prep.
        let mut bell = vec![
            GateLabel::PrepZ { qubit: 0, sign: Sign::Plus },
            GateLabel::PrepZ { qubit: 1, sign: Sign::Plus },
        ];
        bell.extend(hadamard(0));
        bell.extend(hadamard(1));
        bell.push(GateLabel::Cz);
        bell.extend(hadamard(1));
        bell.extend(std::iter::repeat_n(GateLabel::Cz, depth as usize));
        bell.extend(x180(0));
        bell.extend(x180(1));
        bell.extend(std::iter::repeat_n(GateLabel::Cz, depth as usize));
        bell.extend(hadamard(1));
        bell.push(GateLabel::Cz);
        bell.extend(hadamard(1));
        bell.extend(hadamard(0));
        bell.push(GateLabel::MeasZ { qubit: 0 });
        bell.push(GateLabel::MeasZ { qubit: 1 });
        out.push(CircuitFamily::new(
            FamilyKind::CzDecayBell,
            depth,
            Sign::Plus,
            Circuit::new(2, bell).expect("well-formed"),
        ));

        let mut plus = vec![
            GateLabel::PrepZ { qubit: 0, sign: Sign::Plus },
            GateLabel::PrepZ { qubit: 1, sign: Sign::Plus },
        ];
        plus.extend(hadamard(0));
        plus.extend(std::iter::repeat_n(GateLabel::Cz, depth as usize));
        plus.extend(x180(0));
        plus.extend(std::iter::repeat_n(GateLabel::Cz, depth as usize));
        plus.extend(hadamard(0));
        plus.push(GateLabel::MeasZ { qubit: 0 });
        plus.push(GateLabel::MeasZ { qubit: 1 });
        out.push(CircuitFamily::new(
            FamilyKind::CzDecayPlus,
            depth,
            Sign::Plus,
            Circuit::new(2, plus).expect("well-formed"),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{circuit_probability, CompiledModel, CzParams, GatesetModel};
    use approx::assert_relative_eq;

    #[test]
    fn decoherence_circuit_structure_matches_algorithm() {
        let fams = decoherence_circuits(&[2]).unwrap();
        assert_eq!(fams.len(), 4);
        let zp = fams
            .iter()
            .find(|f| f.kind == FamilyKind::DecoherenceZ && f.sign == Sign::Plus)
            .unwrap();
        assert_eq!(zp.id, "decoherence_z/2/+1");
        let expected = vec![
            GateLabel::PrepZ { qubit: 0, sign: Sign::Plus },
            GateLabel::X90 { qubit: 0 },
            GateLabel::X90 { qubit: 0 },
            GateLabel::Zrot { qubit: 0, angle: PI },
            GateLabel::X90 { qubit: 0 },
            GateLabel::X90 { qubit: 0 },
            GateLabel::Zrot { qubit: 0, angle: PI },
            GateLabel::MeasZ { qubit: 0 },
        ];
        assert_eq!(zp.circuit.labels, expected);
    }

    #[test]
    fn decoherence_counts_and_edge_cases() {
        assert_eq!(decoherence_circuits(&[20, 40, 60, 80, 100, 120]).unwrap().len(), 24);
        assert!(decoherence_circuits(&[]).unwrap().is_empty());
        assert!(decoherence_circuits(&[3]).is_err());
        assert!(decoherence_circuits(&[0]).is_err());
    }

    #[test]
    fn rpe_depths_and_counts() {
        let fams = rpe_circuits(3);
        assert_eq!(fams.len(), 16);
        let depths: Vec<u64> = fams
            .iter()
            .filter(|f| f.kind == FamilyKind::RpeAmplitude && f.sign == Sign::Plus)
            .map(|f| f.index)
            .collect();
        assert_eq!(depths, vec![1, 2, 4, 8]);

        let single = rpe_circuits(0);
        let cos = single
            .iter()
            .find(|f| f.kind == FamilyKind::RpeAmplitude && f.sign == Sign::Plus)
            .unwrap();
        assert_eq!(
            cos.circuit.labels,
            vec![
                GateLabel::PrepZ { qubit: 0, sign: Sign::Plus },
                GateLabel::X90 { qubit: 0 },
                GateLabel::MeasZ { qubit: 0 },
            ]
        );
    }

    #[test]
    fn ideal_depth_two_cosine_flips() {
        let fams = rpe_circuits(1);
        let cos2 = fams
            .iter()
            .find(|f| f.kind == FamilyKind::RpeAmplitude && f.sign == Sign::Plus && f.index == 2)
            .unwrap();
        let p = circuit_probability(&GatesetModel::ideal(), &cos2.circuit).unwrap();
        assert_relative_eq!(p, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn readout_circuits_probe_the_two_rates() {
        let fams = readout_circuits();
        assert_eq!(fams.len(), 2);
        assert_eq!(fams[0].id, "readout_zero/0/+1");

        let ideal = circuit_probability(&GatesetModel::ideal(), &fams[0].circuit).unwrap();
        assert_relative_eq!(ideal, 1.0, epsilon = 1e-12);

        let m01 = GatesetModel { r_01: 0.08, ..GatesetModel::ideal() };
        let p = circuit_probability(&m01, &fams[0].circuit).unwrap();
        assert_relative_eq!(p, 0.92, epsilon = 1e-12);

        let m10 = GatesetModel { r_10: 0.05, ..GatesetModel::ideal() };
        let p = circuit_probability(&m10, &fams[1].circuit).unwrap();
        assert_relative_eq!(p, 0.05, epsilon = 1e-12);
    }

    #[test]
    fn cz_phase_family_a_structure() {
        let fams = cz_phase_circuits(1).unwrap();
        assert_eq!(fams.len(), 4);
        let a = &fams[0];
        assert_eq!(a.id, "cz_phase_a/2/+1");
        let cz_count = a
            .circuit
            .labels
            .iter()
            .filter(|l| matches!(l, GateLabel::Cz))
            .count();
        assert_eq!(cz_count, 2);
        assert!(cz_phase_circuits(0).is_err());
    }

    #[test]
    fn ideal_cz_phase_circuits_return_home() {
        let model = GatesetModel { cz: Some(CzParams::ideal()), ..GatesetModel::ideal() };
        for k in 1..=3 {
            let fams = cz_phase_circuits(k).unwrap();
            for f in fams.iter().filter(|f| f.sign == Sign::Plus) {
                let p = circuit_probability(&model, &f.circuit).unwrap();
                assert_relative_eq!(p, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cz_alpha_moves_family_a_success() {
        let alpha = 0.05;
        let model = GatesetModel {
            cz: Some(CzParams { alpha, ..CzParams::ideal() }),
            ..GatesetModel::ideal()
        };
        let fams = cz_phase_circuits(1).unwrap();
        let a = fams.iter().find(|f| f.kind == FamilyKind::CzPhaseA).unwrap();
        let p = circuit_probability(&model, &a.circuit).unwrap();
        // depth 2 accumulates 2α of relative phase.
        assert_relative_eq!(p, (2.0 * alpha / 2.0).cos().powi(2), epsilon = 1e-12);
    }

    #[test]
    fn ideal_decay_circuits_are_identities() {
        let model = GatesetModel { cz: Some(CzParams::ideal()), ..GatesetModel::ideal() };
        for f in cz_decay_circuits(&[1, 2, 5]).unwrap() {
            let p = circuit_probability(&model, &f.circuit).unwrap();
            assert_relative_eq!(p, 1.0, epsilon = 1e-12, max_relative = 1e-12);
        }
        assert!(cz_decay_circuits(&[0]).is_err());
    }

    #[test]
    fn plus_decay_follows_closed_form() {
        // Success = (1 + λ^{2d})/2 with λ = 1 - 2(p_ZI + p_ZZ): the XI and
        // XZ Pauli components each shrink by λ per CZ while II and IZ ride
        // along unchanged.
        let model = GatesetModel {
            cz: Some(CzParams {
                p_iz: 0.01,
                p_zi: 0.01,
                p_zz: 0.0,
                ..CzParams::ideal()
            }),
            ..GatesetModel::ideal()
        };
        let compiled = CompiledModel::new(&model).unwrap();
        for f in cz_decay_circuits(&[1, 3, 6]).unwrap() {
            if f.kind != FamilyKind::CzDecayPlus {
                continue;
            }
            let lambda: f64 = 1.0 - 2.0 * 0.01;
            let expected = (1.0 + lambda.powi(2 * f.index as i32)) / 2.0;
            let p = compiled.circuit_probability(&f.circuit).unwrap();
            assert_relative_eq!(p, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let a = decoherence_circuits(&[20, 40]).unwrap();
        let b = decoherence_circuits(&[20, 40]).unwrap();
        assert_eq!(a, b);
        assert_eq!(rpe_circuits(2), rpe_circuits(2));
    }

    #[test]
    fn ideal_outcomes_are_deterministic_except_quadratures() {
        let model = GatesetModel { cz: Some(CzParams::ideal()), ..GatesetModel::ideal() };
        let compiled = CompiledModel::new(&model).unwrap();
        let mut all = decoherence_circuits(&[2, 4]).unwrap();
        all.extend(rpe_circuits(2));
        all.extend(readout_circuits());
        all.extend(cz_phase_circuits(2).unwrap());
        all.extend(cz_decay_circuits(&[1, 2]).unwrap());
        for f in &all {
            let p = compiled.circuit_probability(&f.circuit).unwrap();
            let near = |x: f64| (p - x).abs() < 1e-9;
            let is_quadrature = matches!(
                f.kind,
                FamilyKind::RpeAmplitude | FamilyKind::RpeAxis | FamilyKind::CzPhaseB
            ) || (f.kind == FamilyKind::CzBeta && f.sign == Sign::Minus);
            if is_quadrature {
                assert!(near(0.0) || near(0.5) || near(1.0), "{}: {p}", f.id);
            } else {
                assert!(near(0.0) || near(1.0), "{}: {p}", f.id);
            }
        }
    }

    #[test]
    fn circuit_set_lookup_and_json_shape() {
        let set = CircuitSet::new(readout_circuits());
        assert!(set.get("readout_zero/0/+1").is_some());
        assert!(set.get("nope").is_none());

        let json = serde_json::to_value(set.families()).unwrap();
        let first = &json[0];
        assert!(first.get("id").is_some());
        assert!(first.get("kind").is_some());
        assert!(first.get("params").is_some());
        assert!(first.get("gates").unwrap().is_array());
    }
}
