//! Dense state-vector simulation, used as the ground-truth oracle.
//!
//! Qubit `q` is bit `q` of the amplitude index. Measurements are handled by
//! explicit branch enumeration, so channels are represented as ensembles of
//! pure states labeled by their classical outcomes.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;

use crate::circuit::{Basis, Circuit, Element, Gate1, Gate2, PrepState};
use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, MAX_QUBITS};

pub type C64 = Complex64;
pub type Mat2 = [[C64; 2]; 2];

/// Tolerance used by identity checks.
pub const IDENTITY_TOL: f64 = 1e-10;
const PRUNE: f64 = 1e-14;
/// Extra room for reference qubits in channel comparisons.
const MAX_DENSE_QUBITS: usize = 2 * MAX_QUBITS;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn gate1_matrix(g: Gate1) -> Mat2 {
    let o = c(0.0, 0.0);
    let l = c(1.0, 0.0);
    let i = c(0.0, 1.0);
    let r = c(FRAC_1_SQRT_2, 0.0);
    match g {
        Gate1::H => [[r, r], [r, -r]],
        Gate1::S => [[l, o], [o, i]],
        Gate1::Sdg => [[l, o], [o, -i]],
        Gate1::X => [[o, l], [l, o]],
        Gate1::Y => [[o, -i], [i, o]],
        Gate1::Z => [[l, o], [o, -l]],
        Gate1::SqrtY => y_rotation(std::f64::consts::FRAC_PI_2),
        Gate1::SqrtYdg => y_rotation(-std::f64::consts::FRAC_PI_2),
        Gate1::YQuarter => y_rotation(std::f64::consts::FRAC_PI_4),
        Gate1::YQuarterDg => y_rotation(-std::f64::consts::FRAC_PI_4),
    }
}

/// `Y(θ) = exp(-iθY/2)`.
pub fn y_rotation(theta: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}

pub fn pauli_matrix(p: Pauli) -> Mat2 {
    match p {
        Pauli::I => [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
        Pauli::X => gate1_matrix(Gate1::X),
        Pauli::Y => gate1_matrix(Gate1::Y),
        Pauli::Z => gate1_matrix(Gate1::Z),
    }
}

/// `|H⟩ = cos(π/8)|0⟩ + sin(π/8)|1⟩`.
pub fn h_state() -> [C64; 2] {
    let t = std::f64::consts::PI / 8.0;
    [c(t.cos(), 0.0), c(t.sin(), 0.0)]
}

/// `|-H⟩ = Y|H⟩ / i`, orthogonal to `|H⟩`.
pub fn minus_h_state() -> [C64; 2] {
    let t = std::f64::consts::PI / 8.0;
    [c(-t.sin(), 0.0), c(t.cos(), 0.0)]
}

/// The +1 (`bit = false`) or -1 eigenvector of a Pauli basis.
pub fn basis_state(basis: Basis, bit: bool) -> [C64; 2] {
    let r = FRAC_1_SQRT_2;
    let s = if bit { -1.0 } else { 1.0 };
    match basis {
        Basis::Z => {
            if bit {
                [c(0.0, 0.0), c(1.0, 0.0)]
            } else {
                [c(1.0, 0.0), c(0.0, 0.0)]
            }
        }
        Basis::X => [c(r, 0.0), c(s * r, 0.0)],
        Basis::Y => [c(r, 0.0), c(0.0, s * r)],
    }
}

pub fn mat_vec(m: &Mat2, v: [C64; 2]) -> [C64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn zero(n: usize) -> Self {
        assert!(n <= MAX_DENSE_QUBITS, "too many qubits for dense simulation");
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        StateVector { n, amps }
    }

    /// Product state with `factors[q]` on qubit `q`.
    pub fn product(factors: &[[C64; 2]]) -> Self {
        let n = factors.len();
        assert!(n <= MAX_DENSE_QUBITS);
        let amps = (0..1usize << n)
            .map(|idx| (0..n).map(|q| factors[q][idx >> q & 1]).product())
            .collect();
        StateVector { n, amps }
    }

    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n {
            return Err(Error::Dimension { expected: 1 << n, found: amps.len() });
        }
        Ok(StateVector { n, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= n);
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.n != other.n {
            return Err(Error::Dimension { expected: self.n, found: other.n });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    fn check(&self, q: usize) {
        assert!(q < self.n, "qubit {q} out of range for {} qubits", self.n);
    }

    pub fn apply_matrix(&mut self, m: &Mat2, q: usize) {
        self.check(q);
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply_controlled(&mut self, m: &Mat2, control: usize, target: usize) {
        self.check(control);
        self.check(target);
        let (cb, tb) = (1usize << control, 1usize << target);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | tb]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | tb] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn swap_where(&mut self, a: usize, b: usize, control: Option<usize>) {
        self.check(a);
        self.check(b);
        let (ab, bb) = (1usize << a, 1usize << b);
        let cb = control.map_or(0, |c| 1usize << c);
        for i in 0..self.amps.len() {
            if i & cb == cb && i & ab != 0 && i & bb == 0 {
                self.amps.swap(i, i ^ ab ^ bb);
            }
        }
    }

    pub fn apply_swap(&mut self, a: usize, b: usize) {
        self.swap_where(a, b, None);
    }

    pub fn apply_cswap(&mut self, control: usize, a: usize, b: usize) {
        self.check(control);
        self.swap_where(a, b, Some(control));
    }

    /// Applies `i^k ⊗ σ_q` on the first `p.num_qubits()` qubits.
    pub fn apply_pauli(&mut self, p: &PauliString) {
        assert!(p.num_qubits() <= self.n);
        for q in 0..p.num_qubits() {
            let s = p.get(q);
            if s != Pauli::I {
                self.apply_matrix(&pauli_matrix(s), q);
            }
        }
        let phase = C64::i().powu(p.phase().exponent() as u32);
        self.amps.iter_mut().for_each(|a| *a *= phase);
    }

    pub fn apply_gate2(&mut self, g: Gate2, a: usize, b: usize) {
        match g {
            Gate2::CX => self.apply_controlled(&gate1_matrix(Gate1::X), a, b),
            Gate2::CY => self.apply_controlled(&gate1_matrix(Gate1::Y), a, b),
            Gate2::CZ => self.apply_controlled(&gate1_matrix(Gate1::Z), a, b),
            Gate2::CH => self.apply_controlled(&gate1_matrix(Gate1::H), a, b),
            Gate2::Swap => self.apply_swap(a, b),
        }
    }

    /// Projects qubit `q` onto the eigenstate of `basis` labeled by `bit`,
    /// renormalizes, and returns the outcome probability.
    pub fn project(&mut self, q: usize, basis: Basis, bit: bool) -> f64 {
        self.check(q);
        let v = basis_state(basis, bit);
        let b = 1usize << q;
        let mut prob = 0.0;
        for i in 0..self.amps.len() {
            if i & b == 0 {
                let amp = v[0].conj() * self.amps[i] + v[1].conj() * self.amps[i | b];
                self.amps[i] = v[0] * amp;
                self.amps[i | b] = v[1] * amp;
                prob += amp.norm_sqr();
            }
        }
        if prob > 0.0 {
            let s = prob.sqrt();
            self.amps.iter_mut().for_each(|a| *a /= s);
        }
        prob
    }

    /// Reduced density matrix on `keep` (in that order, first entry least
    /// significant), row-major.
    pub fn reduced_density(&self, keep: &[usize]) -> Vec<C64> {
        let k = keep.len();
        let dim = 1usize << k;
        let kept_mask: usize = keep.iter().map(|&q| 1usize << q).sum();
        let mut rho = vec![C64::new(0.0, 0.0); dim * dim];
        let sub = |idx: usize| keep.iter().enumerate().fold(0usize, |acc, (j, &q)| acc | ((idx >> q & 1) << j));
        let mut groups: BTreeMap<usize, Vec<(usize, C64)>> = BTreeMap::new();
        for (idx, &a) in self.amps.iter().enumerate() {
            if a.norm_sqr() > 0.0 {
                groups.entry(idx & !kept_mask).or_default().push((sub(idx), a));
            }
        }
        for entries in groups.values() {
            for &(i, a) in entries {
                for &(j, b) in entries {
                    rho[i * dim + j] += a * b.conj();
                }
            }
        }
        rho
    }

    /// `⟨ψ|ρ_q|ψ⟩` for a single-qubit state `psi`.
    pub fn reduced_overlap(&self, q: usize, psi: [C64; 2]) -> f64 {
        self.check(q);
        let b = 1usize << q;
        (0..self.amps.len())
            .filter(|i| i & b == 0)
            .map(|i| (psi[0].conj() * self.amps[i] + psi[1].conj() * self.amps[i | b]).norm_sqr())
            .sum()
    }

    /// Joint overlap with `|ψ⟩⊗|ψ⟩` on qubits `q1`, `q2`.
    pub fn reduced_overlap_pair(&self, q1: usize, q2: usize, psi: [C64; 2]) -> f64 {
        self.check(q1);
        self.check(q2);
        let (b1, b2) = (1usize << q1, 1usize << q2);
        (0..self.amps.len())
            .filter(|i| i & (b1 | b2) == 0)
            .map(|i| {
                let mut s = C64::new(0.0, 0.0);
                for x in 0..2usize {
                    for y in 0..2usize {
                        let idx = i | if x == 1 { b1 } else { 0 } | if y == 1 { b2 } else { 0 };
                        s += (psi[x] * psi[y]).conj() * self.amps[idx];
                    }
                }
                s.norm_sqr()
            })
            .sum()
    }
}

/// `⟨H|ρ_wire|H⟩`.
pub fn reduced_fidelity_with_h(state: &StateVector, wire: usize) -> f64 {
    state.reduced_overlap(wire, h_state())
}

/// `⟨HH|ρ|HH⟩` on two wires.
pub fn joint_fidelity_with_hh(state: &StateVector, w1: usize, w2: usize) -> f64 {
    state.reduced_overlap_pair(w1, w2, h_state())
}

/// Twirl of a one-qubit density matrix: `ρ ↦ (ρ + HρH)/2`.
pub fn twirl(rho: &Mat2) -> Mat2 {
    let h = gate1_matrix(Gate1::H);
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut hrh = C64::new(0.0, 0.0);
            for k in 0..2 {
                for l in 0..2 {
                    hrh += h[i][k] * rho[k][l] * h[l][j];
                }
            }
            out[i][j] = (rho[i][j] + hrh) / 2.0;
        }
    }
    out
}

/// Weight of `|-H⟩` in a density matrix.
pub fn minus_h_weight(rho: &Mat2) -> f64 {
    let v = minus_h_state();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            s += v[i].conj() * rho[i][j] * v[j];
        }
    }
    s.re
}

/// Prepared single-qubit state for a [`PrepState`].
pub fn prep_vector(s: PrepState) -> [C64; 2] {
    match s {
        PrepState::Zero => basis_state(Basis::Z, false),
        PrepState::Plus => basis_state(Basis::X, false),
        PrepState::H => h_state(),
    }
}

/// Applies one element. Measurement and preparation elements need a forced
/// `outcome` (for preparation, the outcome of the implicit Z reset); the
/// return value is the probability of that outcome, `1.0` otherwise.
pub fn apply(
    state: &mut StateVector,
    element: &Element,
    classical: &mut BTreeMap<String, bool>,
    pattern: u64,
    outcome: Option<bool>,
) -> Result<f64> {
    let need = |o: Option<bool>| o.ok_or_else(|| Error::Usage("measurement needs an outcome".into()));
    match element {
        Element::Gate1 { gate, wire } => state.apply_matrix(&gate1_matrix(*gate), *wire),
        Element::Gate2 { gate, a, b } => state.apply_gate2(*gate, *a, *b),
        Element::ControlledSwap { control, a, b } => state.apply_cswap(*control, *a, *b),
        Element::Pauli { pauli } => state.apply_pauli(pauli),
        Element::ErrorSlot { location, pauli } => {
            if pattern >> location & 1 == 1 {
                state.apply_pauli(pauli);
            }
        }
        Element::Prep { wire, state: s } => {
            let bit = need(outcome)?;
            let p = state.project(*wire, Basis::Z, bit);
            if bit {
                state.apply_matrix(&gate1_matrix(Gate1::X), *wire);
            }
            match s {
                PrepState::Zero => {}
                PrepState::Plus => state.apply_matrix(&gate1_matrix(Gate1::H), *wire),
                PrepState::H => state.apply_matrix(&gate1_matrix(Gate1::YQuarter), *wire),
            }
            return Ok(p);
        }
        Element::Measure { wire, basis, label } => {
            let bit = need(outcome)?;
            let p = state.project(*wire, *basis, bit);
            classical.insert(label.clone(), bit);
            return Ok(p);
        }
        Element::Conditioned { label, value, gate, wire } => {
            let bit = classical
                .get(label)
                .ok_or_else(|| Error::Usage(format!("classical bit {label} read before it was set")))?;
            if bit == value {
                state.apply_matrix(&gate1_matrix(*gate), *wire);
            }
        }
    }
    Ok(1.0)
}

/// One measurement branch of a circuit run.
#[derive(Clone, Debug)]
pub struct Branch {
    pub prob: f64,
    pub outcomes: BTreeMap<String, bool>,
    pub state: StateVector,
}

fn is_branching(e: &Element) -> bool {
    matches!(e, Element::Prep { .. } | Element::Measure { .. })
}

/// Runs `circuit` on `initial`, enumerating every measurement branch with
/// nonzero probability.
pub fn run_branches(circuit: &Circuit, initial: StateVector, pattern: u64) -> Result<Vec<Branch>> {
    if initial.num_qubits() < circuit.width() {
        return Err(Error::Dimension { expected: circuit.width(), found: initial.num_qubits() });
    }
    let mut branches = vec![Branch { prob: 1.0, outcomes: BTreeMap::new(), state: initial }];
    for e in circuit.elements() {
        if is_branching(e) {
            let mut next = Vec::with_capacity(branches.len() * 2);
            for b in branches {
                for bit in [false, true] {
                    let mut nb = b.clone();
                    let p = apply(&mut nb.state, e, &mut nb.outcomes, pattern, Some(bit))?;
                    if b.prob * p > PRUNE {
                        nb.prob = b.prob * p;
                        next.push(nb);
                    }
                }
            }
            branches = next;
        } else {
            for b in &mut branches {
                apply(&mut b.state, e, &mut b.outcomes, pattern, None)?;
            }
        }
    }
    Ok(branches)
}

/// Runs `circuit` once, sampling each measurement outcome.
pub fn run_sampled<R: Rng + ?Sized>(
    circuit: &Circuit,
    initial: StateVector,
    pattern: u64,
    rng: &mut R,
) -> Result<(StateVector, BTreeMap<String, bool>)> {
    let mut state = initial;
    let mut bits = BTreeMap::new();
    for e in circuit.elements() {
        if is_branching(e) {
            let mut trial = state.clone();
            let mut trial_bits = bits.clone();
            let p0 = apply(&mut trial, e, &mut trial_bits, pattern, Some(false))?;
            if rng.gen::<f64>() < p0 {
                state = trial;
                bits = trial_bits;
            } else {
                apply(&mut state, e, &mut bits, pattern, Some(true))?;
            }
        } else {
            apply(&mut state, e, &mut bits, pattern, None)?;
        }
    }
    Ok((state, bits))
}

/// Maximally entangles each open input of `circuit` with a reference qubit
/// appended after the circuit's wires.
fn choi_input(circuit: &Circuit, inputs: &[usize]) -> StateVector {
    let w = circuit.width();
    let n = w + inputs.len();
    let mut s = StateVector::zero(n);
    let h = gate1_matrix(Gate1::H);
    let x = gate1_matrix(Gate1::X);
    for (i, &q) in inputs.iter().enumerate() {
        s.apply_matrix(&h, w + i);
        s.apply_controlled(&x, w + i, q);
    }
    s
}

fn common_labels(a: &Circuit, b: &Circuit) -> Vec<String> {
    let lb = b.measurement_labels();
    let mut out: Vec<_> = a.measurement_labels().into_iter().filter(|l| lb.contains(l)).collect();
    out.sort();
    out.dedup();
    out
}

type Instrument = BTreeMap<Vec<bool>, Vec<C64>>;

fn instrument(circuit: &Circuit, keys: &[String], pattern: u64) -> Result<Instrument> {
    let inputs = circuit.open_inputs();
    let outputs = circuit.open_outputs();
    let w = circuit.width();
    let keep: Vec<usize> = outputs.iter().copied().chain((0..inputs.len()).map(|i| w + i)).collect();
    let mut out: Instrument = BTreeMap::new();
    for b in run_branches(circuit, choi_input(circuit, &inputs), pattern)? {
        let key: Vec<bool> = keys.iter().map(|k| b.outcomes.get(k).copied().unwrap_or(false)).collect();
        let rho = b.state.reduced_density(&keep);
        let acc = out.entry(key).or_insert_with(|| vec![C64::new(0.0, 0.0); rho.len()]);
        for (t, r) in acc.iter_mut().zip(&rho) {
            *t += r * b.prob;
        }
    }
    Ok(out)
}

/// Largest deviation between the channels (or instruments, keyed by the
/// measurement labels both circuits share) of two circuits. Pure unitary
/// circuits of equal width are compared up to a global phase.
pub fn channel_distance(a: &Circuit, b: &Circuit) -> Result<f64> {
    let (ia, ib) = (a.open_inputs(), b.open_inputs());
    if ia != ib {
        return Err(Error::Dimension { expected: ia.len(), found: ib.len() });
    }
    let (oa, ob) = (a.open_outputs(), b.open_outputs());
    if oa != ob {
        return Err(Error::Dimension { expected: oa.len(), found: ob.len() });
    }
    if a.is_unitary() && b.is_unitary() && a.width() == b.width() {
        let sa = run_branches(a, choi_input(a, &ia), 0)?.remove(0).state;
        let sb = run_branches(b, choi_input(b, &ib), 0)?.remove(0).state;
        return Ok(1.0 - sa.inner(&sb)?.norm());
    }
    let keys = common_labels(a, b);
    let ma = instrument(a, &keys, 0)?;
    let mb = instrument(b, &keys, 0)?;
    let mut worst: f64 = 0.0;
    for key in ma.keys().chain(mb.keys()) {
        let dev = match (ma.get(key), mb.get(key)) {
            (Some(x), Some(y)) => x.iter().zip(y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max),
            (Some(x), None) | (None, Some(x)) => x.iter().map(|p| p.norm()).fold(0.0, f64::max),
            (None, None) => 0.0,
        };
        worst = worst.max(dev);
    }
    Ok(worst)
}

/// True iff the two circuits induce the same channel within `tol`.
pub fn channel_equal(a: &Circuit, b: &Circuit, tol: f64) -> Result<bool> {
    Ok(channel_distance(a, b)? <= tol)
}

/// Accepted-branch summary of the distillation circuit for one error pattern.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcceptedOutcome {
    pub prob: f64,
    pub fidelity1: f64,
    pub fidelity2: f64,
    pub joint_fidelity: f64,
}

/// Runs a state-preparation circuit and returns the branch whose outcomes
/// equal `reference`, with the fidelities of `out1`, `out2` against `|H⟩`.
pub fn accepted_outcome(
    circuit: &Circuit,
    pattern: u64,
    reference: &BTreeMap<String, bool>,
    out1: usize,
    out2: usize,
) -> Result<AcceptedOutcome> {
    let mut prob = 0.0;
    let (mut f1, mut f2, mut f12) = (0.0, 0.0, 0.0);
    for b in run_branches(circuit, StateVector::zero(circuit.width()), pattern)? {
        if reference.iter().all(|(k, v)| b.outcomes.get(k) == Some(v)) {
            prob += b.prob;
            f1 += b.prob * reduced_fidelity_with_h(&b.state, out1);
            f2 += b.prob * reduced_fidelity_with_h(&b.state, out2);
            f12 += b.prob * joint_fidelity_with_hh(&b.state, out1, out2);
        }
    }
    if prob == 0.0 {
        return Ok(AcceptedOutcome { prob, fidelity1: 0.0, fidelity2: 0.0, joint_fidelity: 0.0 });
    }
    Ok(AcceptedOutcome { prob, fidelity1: f1 / prob, fidelity2: f2 / prob, joint_fidelity: f12 / prob })
}
