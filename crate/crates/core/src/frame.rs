//! Pauli-frame propagation through circuits containing controlled-H gates.
//!
//! The frame is a pair `(G, Q)` describing the actual state as
//! `G · C(Q) |ideal⟩`, where `C(Q) = |0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ Q` is controlled
//! on the single wire that controls every controlled-H. A controlled-H
//! commutes through a Pauli factor `g` on its target up to the controlled
//! correction `g · HgH`: identity-like for `g = I`, a Z kickback on the
//! control for `g = Y` (since `HYH = -Y`), and a controlled `±iY` for
//! `g = X, Z`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::circuit::{Basis, Circuit, Element, Gate1, Gate2};
use crate::dense::{basis_state, pauli_matrix, mat_vec};
use crate::error::{Error, Result};
use crate::pauli::{gates, CliffordAction, Pauli, PauliString};

#[derive(Clone, Debug)]
enum Op {
    /// A Clifford that acts trivially or diagonally on the control wire.
    Clifford(CliffordAction),
    /// Controlled Pauli from the control wire.
    ControlledPauli { action: CliffordAction, target: PauliString },
    ControlledH { target: usize, h: CliffordAction },
    Slot { location: usize, pauli: PauliString },
}

/// A measurement at the end of the circuit.
#[derive(Clone, Debug)]
struct FinalMeasurement {
    wire: usize,
    basis: Basis,
    label: String,
}

/// Compiled frame propagator for one circuit.
#[derive(Clone, Debug)]
pub struct FramePropagator {
    width: usize,
    control: usize,
    ops: Vec<Op>,
    measurements: Vec<FinalMeasurement>,
    outputs: Vec<usize>,
}

/// Frame at the end of the circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub g: PauliString,
    pub q: PauliString,
}

/// Accepted-branch data computed from a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameOutcome {
    pub accept_prob: f64,
    /// Fidelity of each output against its ideal state.
    pub fidelities: Vec<f64>,
    /// Fidelity of all outputs jointly.
    pub joint_fidelity: f64,
}

fn unsupported(e: &Element) -> Error {
    Error::Unsupported(e.to_string())
}

impl FramePropagator {
    /// Compiles `circuit`. Supported: Clifford gates, controlled-H gates that
    /// share one control, diagonal gates on that control, initial
    /// preparations, Pauli insertions and final measurements.
    pub fn new(circuit: &Circuit) -> Result<Self> {
        let n = circuit.width();
        let control = circuit
            .elements()
            .iter()
            .find_map(|e| match e {
                Element::Gate2 { gate: Gate2::CH, a, .. } => Some(*a),
                _ => None,
            })
            .unwrap_or(0);
        let mut ops = Vec::new();
        let mut measurements: Vec<FinalMeasurement> = Vec::new();
        let mut touched = vec![false; n];
        let mut measured = vec![false; n];
        for e in circuit.elements() {
            let wires = e.wires();
            if wires.iter().any(|&w| measured[w]) {
                return Err(Error::Unsupported(format!("`{e}` acts after a measurement")));
            }
            match e {
                Element::Prep { wire, .. } => {
                    if touched[*wire] {
                        return Err(Error::Unsupported(format!("`{e}` resets a wire mid-circuit")));
                    }
                }
                Element::Measure { wire, basis, label } => {
                    measured[*wire] = true;
                    measurements.push(FinalMeasurement { wire: *wire, basis: *basis, label: label.clone() });
                }
                Element::Gate1 { gate, wire } => {
                    let action = gate.clifford(n, *wire).ok_or_else(|| unsupported(e))?;
                    if *wire == control && !matches!(gate, Gate1::Z | Gate1::S | Gate1::Sdg) {
                        return Err(unsupported(e));
                    }
                    ops.push(Op::Clifford(action));
                }
                Element::Gate2 { gate: Gate2::CH, a, b } => {
                    if *a != control {
                        return Err(Error::Unsupported(format!("`{e}` uses a second control wire")));
                    }
                    ops.push(Op::ControlledH { target: *b, h: gates::h(n, *b) });
                }
                Element::Gate2 { gate, a, b } => {
                    let action = gate.clifford(n, *a, *b).ok_or_else(|| unsupported(e))?;
                    let (c, t) = if *b == control && *gate == Gate2::CZ { (*b, *a) } else { (*a, *b) };
                    if t == control {
                        return Err(unsupported(e));
                    }
                    if c == control {
                        let p = match gate {
                            Gate2::CX => Pauli::X,
                            Gate2::CY => Pauli::Y,
                            Gate2::CZ => Pauli::Z,
                            _ => return Err(unsupported(e)),
                        };
                        ops.push(Op::ControlledPauli { action, target: PauliString::single(n, t, p) });
                    } else {
                        ops.push(Op::Clifford(action));
                    }
                }
                Element::ErrorSlot { location, pauli } => {
                    if pauli.get(control) == Pauli::X || pauli.get(control) == Pauli::Y {
                        return Err(Error::Unsupported(format!("`{e}` flips the control wire")));
                    }
                    ops.push(Op::Slot { location: *location, pauli: *pauli });
                }
                Element::Pauli { pauli } => {
                    ops.push(Op::Slot { location: usize::MAX, pauli: *pauli });
                }
                Element::ControlledSwap { .. } | Element::Conditioned { .. } => return Err(unsupported(e)),
            }
            for w in wires {
                touched[w] = true;
            }
        }
        if !measured[control] {
            return Err(Error::Unsupported("the control wire must be measured".into()));
        }
        let outputs = (0..n).filter(|&w| !measured[w]).collect();
        Ok(FramePropagator { width: n, control, ops, measurements, outputs })
    }

    pub fn outputs(&self) -> &[usize] {
        &self.outputs
    }

    /// Propagates the errors active in `pattern` to the end of the circuit.
    pub fn propagate(&self, pattern: u64) -> Result<Frame> {
        let n = self.width;
        let mut g = PauliString::identity(n);
        let mut q = PauliString::identity(n);
        for op in &self.ops {
            match op {
                Op::Clifford(a) => {
                    g = a.conjugate(&g)?;
                    q = a.conjugate(&q)?;
                }
                Op::ControlledPauli { action, target } => {
                    g = action.conjugate(&g)?;
                    q = target.multiply(&q)?.multiply(target)?;
                }
                Op::ControlledH { target, h } => {
                    if matches!(g.get(self.control), Pauli::X | Pauli::Y) {
                        return Err(Error::Unsupported("frame flips the control wire".into()));
                    }
                    let gt = g.restricted(*target);
                    let f = gt.multiply(&h.conjugate(&gt)?)?;
                    if f.get(*target) == Pauli::I {
                        // g·HgH is ±1: a Z kickback for -1.
                        if f.phase().exponent() == 2 {
                            g = PauliString::single(n, self.control, Pauli::Z).multiply(&g)?;
                        }
                        q = h.conjugate(&q)?;
                    } else {
                        q = f.multiply(&h.conjugate(&q)?)?;
                    }
                }
                Op::Slot { location, pauli } => {
                    if *location == usize::MAX || pattern >> location & 1 == 1 {
                        g = pauli.multiply(&g)?;
                    }
                }
            }
        }
        Ok(Frame { g, q })
    }

    /// Evaluates the accepted branch for a frame, given the ideal final
    /// per-wire states implied by `reference` and `output_state`.
    pub fn evaluate(
        &self,
        frame: &Frame,
        reference: &BTreeMap<String, bool>,
        output_state: [Complex64; 2],
    ) -> Result<FrameOutcome> {
        let zero = Complex64::new(0.0, 0.0);
        let mut ideal = vec![output_state; self.width];
        let mut projector = vec![None; self.width];
        for m in &self.measurements {
            let bit = *reference
                .get(&m.label)
                .ok_or_else(|| Error::Usage(format!("no reference outcome for {}", m.label)))?;
            let v = basis_state(m.basis, bit);
            ideal[m.wire] = v;
            projector[m.wire] = Some(v);
        }
        let k = self.outputs.len();
        let mut v = vec![zero; 1 << k];
        let omega = Complex64::i().powu(frame.q.phase().exponent() as u32);
        for b in 0..2usize {
            // Control wire: computational basis component b of its ideal state.
            let mut scalar = ideal[self.control][b];
            if frame.g.get(self.control) == Pauli::Z && b == 1 {
                scalar = -scalar;
            }
            let cp = projector[self.control].expect("control is measured");
            scalar *= cp[b].conj();
            if b == 1 {
                scalar *= omega;
            }
            let mut outs = Vec::with_capacity(k);
            for w in 0..self.width {
                if w == self.control {
                    continue;
                }
                let mut vec = ideal[w];
                if b == 1 {
                    vec = mat_vec(&pauli_matrix(frame.q.get(w)), vec);
                }
                vec = mat_vec(&pauli_matrix(frame.g.get(w)), vec);
                match projector[w] {
                    Some(m) => scalar *= m[0].conj() * vec[0] + m[1].conj() * vec[1],
                    None => outs.push(vec),
                }
            }
            for (idx, slot) in v.iter_mut().enumerate() {
                let amp: Complex64 = outs.iter().enumerate().map(|(j, o)| o[idx >> j & 1]).product();
                *slot += scalar * amp;
            }
        }
        let accept_prob: f64 = v.iter().map(|a| a.norm_sqr()).sum();
        if accept_prob < 1e-14 {
            return Ok(FrameOutcome { accept_prob: 0.0, fidelities: vec![0.0; k], joint_fidelity: 0.0 });
        }
        let norm = accept_prob.sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        let fidelities = (0..k)
            .map(|j| {
                // Contract every output except j with nothing: reduce over the others.
                let mut total = 0.0;
                for rest in 0..(1usize << k) {
                    if rest >> j & 1 == 1 {
                        continue;
                    }
                    let a0 = v[rest];
                    let a1 = v[rest | 1 << j];
                    total += (output_state[0].conj() * a0 + output_state[1].conj() * a1).norm_sqr();
                }
                total
            })
            .collect();
        let joint: Complex64 = v
            .iter()
            .enumerate()
            .map(|(idx, a)| {
                let ideal_amp: Complex64 = (0..k).map(|j| output_state[idx >> j & 1]).product();
                ideal_amp.conj() * a
            })
            .sum();
        Ok(FrameOutcome { accept_prob, fidelities, joint_fidelity: joint.norm_sqr() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_distillation_circuit, PrepState};
    use crate::dense::h_state;

    #[test]
    fn noiseless_frame_is_trivial() {
        let (c, _) = build_distillation_circuit();
        let f = FramePropagator::new(&c).unwrap();
        let frame = f.propagate(0).unwrap();
        assert!(frame.g.is_identity_up_to_phase());
        assert!(frame.q.is_identity_up_to_phase());
        let reference = crate::circuit::reference_outcomes(&c).unwrap();
        let out = f.evaluate(&frame, &reference, h_state()).unwrap();
        assert!((out.accept_prob - 1.0).abs() < 1e-12);
        assert!(out.fidelities.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn y_on_target_kicks_back_z() {
        let mut c = Circuit::new(2);
        c.prep(0, PrepState::Plus).prep(1, PrepState::H);
        c.error_slot(0, &[(1, Pauli::Y)]);
        c.g2(Gate2::CH, 0, 1);
        c.measure(0, Basis::X, "m");
        let f = FramePropagator::new(&c).unwrap();
        let frame = f.propagate(1).unwrap();
        assert_eq!(frame.g.get(0), Pauli::Z);
        assert!(frame.q.is_identity_up_to_phase());
    }

    #[test]
    fn rejects_unsupported_elements() {
        let mut c = Circuit::new(2);
        c.g1(Gate1::YQuarter, 1).measure(0, Basis::X, "m");
        assert!(FramePropagator::new(&c).is_err());
        let mut c = Circuit::new(3);
        c.push(Element::ControlledSwap { control: 0, a: 1, b: 2 }).unwrap();
        assert!(FramePropagator::new(&c).is_err());
    }
}
