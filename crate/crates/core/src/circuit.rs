//! Circuit intermediate representation, text serialization, and builders for
//! the C4 codec, the 10-to-2 distillation circuit and the identity circuits
//! used to validate it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::pauli::{gates, CliffordAction, Pauli, PauliString};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate1 {
    H,
    S,
    Sdg,
    X,
    Y,
    Z,
    /// `Y(π/2)`
    SqrtY,
    /// `Y(-π/2)`
    SqrtYdg,
    /// `Y(π/4)`, non-Clifford.
    YQuarter,
    /// `Y(-π/4)`, non-Clifford.
    YQuarterDg,
}

impl Gate1 {
    pub const ALL: [Gate1; 10] = [
        Gate1::H,
        Gate1::S,
        Gate1::Sdg,
        Gate1::X,
        Gate1::Y,
        Gate1::Z,
        Gate1::SqrtY,
        Gate1::SqrtYdg,
        Gate1::YQuarter,
        Gate1::YQuarterDg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Gate1::H => "h",
            Gate1::S => "s",
            Gate1::Sdg => "sdg",
            Gate1::X => "x",
            Gate1::Y => "y",
            Gate1::Z => "z",
            Gate1::SqrtY => "sqrty",
            Gate1::SqrtYdg => "sqrtydg",
            Gate1::YQuarter => "yquarter",
            Gate1::YQuarterDg => "yquarterdg",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Gate1::ALL.into_iter().find(|g| g.name() == s)
    }

    pub fn clifford(self, n: usize, q: usize) -> Option<CliffordAction> {
        Some(match self {
            Gate1::H => gates::h(n, q),
            Gate1::S => gates::s(n, q),
            Gate1::Sdg => gates::sdg(n, q),
            Gate1::X => gates::x(n, q),
            Gate1::Y => gates::y(n, q),
            Gate1::Z => gates::z(n, q),
            Gate1::SqrtY => gates::sqrt_y(n, q),
            Gate1::SqrtYdg => gates::sqrt_y_dg(n, q),
            Gate1::YQuarter | Gate1::YQuarterDg => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Gate2 {
    CX,
    CY,
    CZ,
    /// Controlled-Hadamard, non-Clifford.
    CH,
    Swap,
}

impl Gate2 {
    pub const ALL: [Gate2; 5] = [Gate2::CX, Gate2::CY, Gate2::CZ, Gate2::CH, Gate2::Swap];

    pub fn name(self) -> &'static str {
        match self {
            Gate2::CX => "cx",
            Gate2::CY => "cy",
            Gate2::CZ => "cz",
            Gate2::CH => "ch",
            Gate2::Swap => "swap",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Gate2::ALL.into_iter().find(|g| g.name() == s)
    }

    pub fn clifford(self, n: usize, a: usize, b: usize) -> Option<CliffordAction> {
        Some(match self {
            Gate2::CX => gates::cx(n, a, b),
            Gate2::CY => gates::cy(n, a, b),
            Gate2::CZ => gates::cz(n, a, b),
            Gate2::Swap => gates::swap(n, a, b),
            Gate2::CH => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::X => "X",
            Basis::Y => "Y",
            Basis::Z => "Z",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "X" | "x" => Ok(Basis::X),
            "Y" | "y" => Ok(Basis::Y),
            "Z" | "z" => Ok(Basis::Z),
            _ => Err(Error::Parse(format!("unknown basis {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrepState {
    Zero,
    Plus,
    /// `|H⟩ = Y(π/4)|0⟩`
    H,
}

impl PrepState {
    pub fn name(self) -> &'static str {
        match self {
            PrepState::Zero => "zero",
            PrepState::Plus => "plus",
            PrepState::H => "h",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(PrepState::Zero),
            "plus" => Ok(PrepState::Plus),
            "h" => Ok(PrepState::H),
            _ => Err(Error::Parse(format!("unknown preparation {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Element {
    Gate1 { gate: Gate1, wire: usize },
    Gate2 { gate: Gate2, a: usize, b: usize },
    ControlledSwap { control: usize, a: usize, b: usize },
    /// Unconditional Pauli insertion.
    Pauli { pauli: PauliString },
    /// Pauli inserted only when location `location` is active in the error pattern.
    ErrorSlot { location: usize, pauli: PauliString },
    /// Reset the wire and prepare the given state.
    Prep { wire: usize, state: PrepState },
    /// Destructive projective measurement recording bit `label` (0 for the +1 eigenvalue).
    Measure { wire: usize, basis: Basis, label: String },
    /// Apply `gate` to `wire` iff the bit `label` equals `value`.
    Conditioned { label: String, value: bool, gate: Gate1, wire: usize },
}

impl Element {
    pub fn wires(&self) -> Vec<usize> {
        match self {
            Element::Gate1 { wire, .. } | Element::Prep { wire, .. } | Element::Measure { wire, .. } => vec![*wire],
            Element::Conditioned { wire, .. } => vec![*wire],
            Element::Gate2 { a, b, .. } => vec![*a, *b],
            Element::ControlledSwap { control, a, b } => vec![*control, *a, *b],
            Element::Pauli { pauli } | Element::ErrorSlot { pauli, .. } => {
                (0..pauli.num_qubits()).filter(|&q| pauli.get(q) != Pauli::I).collect()
            }
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Gate1 { gate, wire } => write!(f, "{} {wire}", gate.name()),
            Element::Gate2 { gate, a, b } => write!(f, "{} {a} {b}", gate.name()),
            Element::ControlledSwap { control, a, b } => write!(f, "cswap {control} {a} {b}"),
            Element::Pauli { pauli } => write!(f, "pauli {pauli}"),
            Element::ErrorSlot { location, pauli } => write!(f, "error {location} {pauli}"),
            Element::Prep { wire, state } => write!(f, "prep {wire} {}", state.name()),
            Element::Measure { wire, basis, label } => write!(f, "measure {wire} {} {label}", basis.name()),
            Element::Conditioned { label, value, gate, wire } => {
                write!(f, "if {label} {} {} {wire}", *value as u8, gate.name())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    width: usize,
    elements: Vec<Element>,
    labels: BTreeMap<String, usize>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        assert!(width <= crate::pauli::MAX_QUBITS);
        Circuit { width, elements: Vec::new(), labels: BTreeMap::new() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn labels(&self) -> &BTreeMap<String, usize> {
        &self.labels
    }

    pub fn wire(&self, label: &str) -> Option<usize> {
        self.labels.get(label).copied()
    }

    pub fn label_wire(&mut self, name: &str, wire: usize) -> Result<()> {
        if wire >= self.width {
            return Err(Error::Construction(format!("label {name} on wire {wire} outside width {}", self.width)));
        }
        if self.labels.values().any(|&w| w == wire) {
            return Err(Error::Construction(format!("wire {wire} already labeled")));
        }
        self.labels.insert(name.to_string(), wire);
        Ok(())
    }

    /// Appends after checking that the wires are distinct and in range.
    pub fn push(&mut self, element: Element) -> Result<()> {
        let wires = element.wires();
        let distinct: BTreeSet<_> = wires.iter().collect();
        if distinct.len() != wires.len() {
            return Err(Error::Construction(format!("repeated wire in `{element}`")));
        }
        if let Some(&w) = wires.iter().find(|&&w| w >= self.width) {
            return Err(Error::Construction(format!("wire {w} out of range in `{element}`")));
        }
        match &element {
            Element::Pauli { pauli } | Element::ErrorSlot { pauli, .. } if pauli.num_qubits() != self.width => {
                return Err(Error::Dimension { expected: self.width, found: pauli.num_qubits() });
            }
            _ => {}
        }
        self.elements.push(element);
        Ok(())
    }

    pub fn g1(&mut self, gate: Gate1, wire: usize) -> &mut Self {
        self.push(Element::Gate1 { gate, wire }).expect("valid gate");
        self
    }

    pub fn g2(&mut self, gate: Gate2, a: usize, b: usize) -> &mut Self {
        self.push(Element::Gate2 { gate, a, b }).expect("valid gate");
        self
    }

    pub fn prep(&mut self, wire: usize, state: PrepState) -> &mut Self {
        self.push(Element::Prep { wire, state }).expect("valid prep");
        self
    }

    pub fn measure(&mut self, wire: usize, basis: Basis, label: &str) -> &mut Self {
        self.push(Element::Measure { wire, basis, label: label.into() }).expect("valid measurement");
        self
    }

    pub fn error_slot(&mut self, location: usize, factors: &[(usize, Pauli)]) -> &mut Self {
        let pauli = PauliString::from_sparse(self.width, factors);
        self.push(Element::ErrorSlot { location, pauli }).expect("valid slot");
        self
    }

    pub fn extend(&mut self, other: &Circuit) -> Result<()> {
        if other.width > self.width {
            return Err(Error::Dimension { expected: self.width, found: other.width });
        }
        for e in &other.elements {
            self.push(e.clone())?;
        }
        Ok(())
    }

    /// Element-wise reverse. Only valid for self-inverse elements, which is
    /// all the codec uses.
    pub fn reversed(&self) -> Circuit {
        let mut out = Circuit::new(self.width);
        out.labels = self.labels.clone();
        out.elements = self.elements.iter().rev().cloned().collect();
        out
    }

    /// Active error slots become fixed Pauli insertions; inactive ones are dropped.
    pub fn with_errors(&self, pattern: u64) -> Circuit {
        let mut out = Circuit::new(self.width);
        out.labels = self.labels.clone();
        for e in &self.elements {
            match e {
                Element::ErrorSlot { location, pauli } => {
                    if pattern >> location & 1 == 1 {
                        out.elements.push(Element::Pauli { pauli: *pauli });
                    }
                }
                other => out.elements.push(other.clone()),
            }
        }
        out
    }

    pub fn count_gate2(&self, gate: Gate2) -> usize {
        self.elements.iter().filter(|e| matches!(e, Element::Gate2 { gate: g, .. } if *g == gate)).count()
    }

    pub fn measurement_labels(&self) -> Vec<String> {
        self.elements
            .iter()
            .filter_map(|e| match e {
                Element::Measure { label, .. } => Some(label.clone()),
                _ => None,
            })
            .collect()
    }

    /// Wires whose first use is not a preparation.
    pub fn open_inputs(&self) -> Vec<usize> {
        (0..self.width)
            .filter(|&w| {
                self.elements
                    .iter()
                    .find(|e| e.wires().contains(&w))
                    .map_or(true, |e| !matches!(e, Element::Prep { .. }))
            })
            .collect()
    }

    /// Wires whose last use is not a measurement.
    pub fn open_outputs(&self) -> Vec<usize> {
        (0..self.width)
            .filter(|&w| {
                self.elements
                    .iter()
                    .rev()
                    .find(|e| e.wires().contains(&w))
                    .map_or(true, |e| !matches!(e, Element::Measure { .. }))
            })
            .collect()
    }

    pub fn is_unitary(&self) -> bool {
        self.elements
            .iter()
            .all(|e| !matches!(e, Element::Prep { .. } | Element::Measure { .. } | Element::Conditioned { .. }))
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "width {}", self.width)?;
        let mut by_wire: Vec<_> = self.labels.iter().collect();
        by_wire.sort_by_key(|(_, &w)| w);
        for (name, wire) in by_wire {
            writeln!(f, "label {name} {wire}")?;
        }
        for e in &self.elements {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

fn parse_usize(tok: Option<&str>, line: &str) -> Result<usize> {
    tok.ok_or_else(|| Error::Parse(format!("missing field in `{line}`")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad integer in `{line}`")))
}

impl FromStr for Circuit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut circuit: Option<Circuit> = None;
        for raw in s.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let head = toks.next().unwrap_or_default();
            if head == "width" {
                if circuit.is_some() {
                    return Err(Error::Parse("duplicate width line".into()));
                }
                let w = parse_usize(toks.next(), line)?;
                if w > crate::pauli::MAX_QUBITS {
                    return Err(Error::Parse(format!("width {w} too large")));
                }
                circuit = Some(Circuit::new(w));
                continue;
            }
            let c = circuit.as_mut().ok_or_else(|| Error::Parse("first line must be `width N`".into()))?;
            let elem = match head {
                "label" => {
                    let name = toks.next().ok_or_else(|| Error::Parse(format!("missing name in `{line}`")))?;
                    let wire = parse_usize(toks.next(), line)?;
                    c.label_wire(name, wire)?;
                    continue;
                }
                "cswap" => Element::ControlledSwap {
                    control: parse_usize(toks.next(), line)?,
                    a: parse_usize(toks.next(), line)?,
                    b: parse_usize(toks.next(), line)?,
                },
                "pauli" => {
                    let pauli = toks.next().ok_or_else(|| Error::Parse(format!("missing pauli in `{line}`")))?.parse()?;
                    Element::Pauli { pauli }
                }
                "error" => {
                    let location = parse_usize(toks.next(), line)?;
                    let pauli = toks.next().ok_or_else(|| Error::Parse(format!("missing pauli in `{line}`")))?.parse()?;
                    Element::ErrorSlot { location, pauli }
                }
                "prep" => Element::Prep {
                    wire: parse_usize(toks.next(), line)?,
                    state: PrepState::parse(toks.next().unwrap_or_default())?,
                },
                "measure" => {
                    let wire = parse_usize(toks.next(), line)?;
                    let basis = Basis::parse(toks.next().unwrap_or_default())?;
                    let label = toks.next().ok_or_else(|| Error::Parse(format!("missing label in `{line}`")))?;
                    Element::Measure { wire, basis, label: label.into() }
                }
                "if" => {
                    let label = toks.next().ok_or_else(|| Error::Parse(format!("missing label in `{line}`")))?.to_string();
                    let value = match toks.next() {
                        Some("0") => false,
                        Some("1") => true,
                        _ => return Err(Error::Parse(format!("bad condition value in `{line}`"))),
                    };
                    let gate = Gate1::from_name(toks.next().unwrap_or_default())
                        .ok_or_else(|| Error::Parse(format!("bad conditioned gate in `{line}`")))?;
                    Element::Conditioned { label, value, gate, wire: parse_usize(toks.next(), line)? }
                }
                name => {
                    if let Some(gate) = Gate1::from_name(name) {
                        Element::Gate1 { gate, wire: parse_usize(toks.next(), line)? }
                    } else if let Some(gate) = Gate2::from_name(name) {
                        Element::Gate2 { gate, a: parse_usize(toks.next(), line)?, b: parse_usize(toks.next(), line)? }
                    } else {
                        return Err(Error::Parse(format!("unknown element `{name}`")));
                    }
                }
            };
            if toks.next().is_some() {
                return Err(Error::Parse(format!("trailing tokens in `{line}`")));
            }
            c.push(elem).map_err(|e| Error::Parse(e.to_string()))?;
        }
        circuit.ok_or_else(|| Error::Parse("empty circuit".into()))
    }
}

/// The four-qubit error-detecting code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeDefinition {
    pub n: usize,
    pub stabilizers: Vec<PauliString>,
    pub logical_x: Vec<PauliString>,
    pub logical_z: Vec<PauliString>,
}

impl CodeDefinition {
    pub fn c4() -> Self {
        let p = |s: &str| s.parse::<PauliString>().expect("static");
        CodeDefinition {
            n: 4,
            stabilizers: vec![p("XXXX"), p("ZZZZ")],
            logical_x: vec![p("XXII"), p("XIIX")],
            logical_z: vec![p("ZIIZ"), p("ZZII")],
        }
    }

    /// Checks the stabilizer/logical commutation structure.
    pub fn validate(&self) -> Result<()> {
        let all_logical: Vec<_> = self.logical_x.iter().chain(&self.logical_z).collect();
        for s in &self.stabilizers {
            for t in &self.stabilizers {
                if !s.commutes(t)? {
                    return Err(Error::Construction(format!("stabilizers {s} and {t} anticommute")));
                }
            }
            for l in &all_logical {
                if !s.commutes(l)? {
                    return Err(Error::Construction(format!("stabilizer {s} anticommutes with logical {l}")));
                }
            }
        }
        for (i, x) in self.logical_x.iter().enumerate() {
            for (j, z) in self.logical_z.iter().enumerate() {
                if x.commutes(z)? == (i == j) {
                    return Err(Error::Construction(format!("logical X{i}/Z{j} commutation wrong")));
                }
            }
        }
        Ok(())
    }

    /// True iff some stabilizer anticommutes with `error`.
    pub fn detects(&self, error: &PauliString) -> Result<bool> {
        for s in &self.stabilizers {
            if !s.commutes(error)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateRole {
    First,
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LocationKind {
    Data { wire: usize },
    /// Resource-state error of controlled-H gadget `gadget` (0..4).
    Gate { gadget: usize, role: GateRole },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorLocation {
    pub id: usize,
    pub kind: LocationKind,
    /// Index of the slot element in the circuit.
    pub element_index: usize,
    pub pauli: PauliString,
}

pub mod wires {
    pub const ANCILLA: usize = 0;
    /// Code wire `k` (1..=4) sits on circuit wire `k`.
    pub const CODE: [usize; 4] = [1, 2, 3, 4];
    pub const OUT1: usize = 1;
    pub const OUT2: usize = 3;
}

pub const NUM_LOCATIONS: usize = 10;

/// Measurement labels of the distillation circuit.
pub mod labels {
    pub const ANCILLA: &str = "m_anc";
    pub const CHECK_Z: &str = "m_z";
    pub const CHECK_X: &str = "m_x";
}

fn encoder_on(c: &mut Circuit, w: [usize; 4]) {
    c.g2(Gate2::CX, w[3], w[0])
        .g2(Gate2::CX, w[2], w[1])
        .g2(Gate2::CX, w[0], w[1])
        .g2(Gate2::CX, w[3], w[2]);
}

/// 4-wire encoder and decoder of the C4 code. Inputs: logical 1 on wire 0,
/// `|0⟩` on wire 1, logical 2 on wire 2, `|+⟩` on wire 3.
pub fn build_c4_codec() -> (Circuit, Circuit) {
    let mut enc = Circuit::new(4);
    for k in 0..4 {
        enc.label_wire(&format!("code{}", k + 1), k).expect("fresh");
    }
    encoder_on(&mut enc, [0, 1, 2, 3]);
    let dec = enc.reversed();
    (enc, dec)
}

fn labeled5() -> Circuit {
    let mut c = Circuit::new(5);
    c.label_wire("ancilla", 0).expect("fresh");
    for k in 1..=4 {
        c.label_wire(&format!("code{k}"), k).expect("fresh");
    }
    c
}

/// The fixed Clifford block between the two controlled-H blocks, including
/// the CZ gates from the ancilla that replace the second pair of
/// controlled-H gates on code wire 3.
fn middle_block(c: &mut Circuit) {
    use Gate1::*;
    use Gate2::*;
    c.g1(H, 2).g1(H, 3).g1(S, 2).g1(Sdg, 4);
    c.g2(CZ, 2, 4).g2(CZ, 0, 2).g2(CY, 2, 3).g1(H, 2).g2(CY, 4, 3).g2(CZ, 0, 4);
}

/// Five-wire distillation circuit: wire 0 is the ancilla, wires 1..4 the
/// code. Outputs are left on wires 1 and 3.
pub fn build_distillation_circuit() -> (Circuit, Vec<ErrorLocation>) {
    use Pauli::{Y, Z};
    let mut c = labeled5();
    let mut locs = Vec::with_capacity(NUM_LOCATIONS);
    let mut slot = |c: &mut Circuit, id: usize, kind: LocationKind, factors: &[(usize, Pauli)]| {
        c.error_slot(id, factors);
        let element_index = c.elements().len() - 1;
        let pauli = PauliString::from_sparse(c.width(), factors);
        locs.push(ErrorLocation { id, kind, element_index, pauli });
    };

    c.prep(0, PrepState::Plus);
    c.prep(1, PrepState::H);
    slot(&mut c, 0, LocationKind::Data { wire: 1 }, &[(1, Y)]);
    c.prep(2, PrepState::Zero);
    c.prep(3, PrepState::H);
    slot(&mut c, 1, LocationKind::Data { wire: 3 }, &[(3, Y)]);
    c.prep(4, PrepState::Plus);
    encoder_on(&mut c, [1, 2, 3, 4]);

    let mut gadget = |c: &mut Circuit, g: usize, target: usize| {
        c.g2(Gate2::CH, 0, target);
        let first = 2 + 2 * g;
        slot(c, first, LocationKind::Gate { gadget: g, role: GateRole::First }, &[(0, Z), (target, Y)]);
        slot(c, first + 1, LocationKind::Gate { gadget: g, role: GateRole::Second }, &[(target, Y)]);
    };
    gadget(&mut c, 0, 2);
    gadget(&mut c, 1, 4);
    middle_block(&mut c);
    gadget(&mut c, 2, 2);
    gadget(&mut c, 3, 4);

    let mut dec = Circuit::new(5);
    encoder_on(&mut dec, [1, 2, 3, 4]);
    c.extend(&dec.reversed()).expect("same width");
    c.measure(0, Basis::X, labels::ANCILLA);
    c.measure(2, Basis::Z, labels::CHECK_Z);
    c.measure(4, Basis::X, labels::CHECK_X);
    (c, locs)
}

/// Unitary part of the encoded measurement with eight controlled-H gates.
pub fn encoded_measurement_eight_ch() -> Circuit {
    use Gate1::*;
    use Gate2::*;
    let mut c = labeled5();
    for t in 1..=4 {
        c.g2(CH, 0, t);
    }
    c.g1(H, 2).g1(H, 3).g1(S, 2).g1(Sdg, 4);
    c.g2(CZ, 2, 4).g2(CY, 2, 3).g2(CY, 4, 3).g1(H, 2);
    for t in 1..=4 {
        c.g2(CH, 0, t);
    }
    c
}

/// Unitary part of the encoded measurement with four controlled-H gates, in
/// the order used by [`build_distillation_circuit`].
pub fn encoded_measurement_four_ch() -> Circuit {
    let mut c = labeled5();
    c.g2(Gate2::CH, 0, 2).g2(Gate2::CH, 0, 4);
    middle_block(&mut c);
    c.g2(Gate2::CH, 0, 2).g2(Gate2::CH, 0, 4);
    c
}

/// Appends a gadget applying `Y(±π/4)` to `data` by consuming an `|H⟩` on `resource`.
pub fn push_quarter_gadget(
    c: &mut Circuit,
    data: usize,
    resource: usize,
    positive: bool,
    label: &str,
    slot: Option<usize>,
) {
    c.prep(resource, PrepState::H);
    if let Some(id) = slot {
        c.error_slot(id, &[(resource, Pauli::Y)]);
    }
    c.g2(Gate2::CY, resource, data);
    c.measure(resource, Basis::Y, label);
    let (value, gate) = if positive { (true, Gate1::SqrtY) } else { (false, Gate1::SqrtYdg) };
    c.push(Element::Conditioned { label: label.into(), value, gate, wire: data }).expect("valid");
}

/// Appends a controlled-H built from two `|H⟩` gadgets and a CZ.
pub fn push_ch_gadget(
    c: &mut Circuit,
    control: usize,
    target: usize,
    resources: [usize; 2],
    tag: &str,
    slots: Option<[usize; 2]>,
) {
    push_quarter_gadget(c, target, resources[0], false, &format!("{tag}a"), slots.map(|s| s[0]));
    c.g2(Gate2::CZ, control, target);
    push_quarter_gadget(c, target, resources[1], true, &format!("{tag}b"), slots.map(|s| s[1]));
}

/// The distillation circuit with each controlled-H expanded into Clifford
/// gadgets on two reusable resource wires (5 and 6). Gate error locations
/// are Y errors on the freshly prepared resource states.
pub fn build_gadget_distillation_circuit() -> Circuit {
    let mut c = Circuit::new(7);
    c.label_wire("ancilla", 0).expect("fresh");
    for k in 1..=4 {
        c.label_wire(&format!("code{k}"), k).expect("fresh");
    }
    c.label_wire("res_a", 5).expect("fresh");
    c.label_wire("res_b", 6).expect("fresh");
    c.prep(0, PrepState::Plus);
    c.prep(1, PrepState::H);
    c.error_slot(0, &[(1, Pauli::Y)]);
    c.prep(2, PrepState::Zero);
    c.prep(3, PrepState::H);
    c.error_slot(1, &[(3, Pauli::Y)]);
    c.prep(4, PrepState::Plus);
    encoder_on(&mut c, [1, 2, 3, 4]);
    let gadget = |c: &mut Circuit, g: usize, t: usize| {
        push_ch_gadget(c, 0, t, [5, 6], &format!("g{g}"), Some([2 + 2 * g, 3 + 2 * g]));
    };
    gadget(&mut c, 0, 2);
    gadget(&mut c, 1, 4);
    middle_block(&mut c);
    gadget(&mut c, 2, 2);
    gadget(&mut c, 3, 4);
    let mut dec = Circuit::new(7);
    encoder_on(&mut dec, [1, 2, 3, 4]);
    c.extend(&dec.reversed()).expect("same width");
    c.measure(0, Basis::X, labels::ANCILLA);
    c.measure(2, Basis::Z, labels::CHECK_Z);
    c.measure(4, Basis::X, labels::CHECK_X);
    c
}

/// A named pair of circuits expected to implement the same channel.
#[derive(Clone, Debug)]
pub struct IdentityCase {
    pub name: String,
    pub left: Circuit,
    pub right: Circuit,
}

fn case(name: &str, left: Circuit, right: Circuit) -> IdentityCase {
    IdentityCase { name: name.into(), left, right }
}

fn from_ops(width: usize, ops: &[(&str, &[usize])]) -> Circuit {
    let mut c = Circuit::new(width);
    for (name, w) in ops {
        let e = if let Some(gate) = Gate1::from_name(name) {
            Element::Gate1 { gate, wire: w[0] }
        } else if let Some(gate) = Gate2::from_name(name) {
            Element::Gate2 { gate, a: w[0], b: w[1] }
        } else if *name == "cswap" {
            Element::ControlledSwap { control: w[0], a: w[1], b: w[2] }
        } else {
            panic!("unknown op {name}")
        };
        c.push(e).expect("valid op");
    }
    c
}

/// Every circuit identity the construction relies on.
pub fn identity_cases() -> Vec<IdentityCase> {
    let mut out = Vec::new();

    // Controlled-H as a CZ sandwich.
    out.push(case(
        "ch-as-cz-sandwich",
        from_ops(2, &[("ch", &[0, 1])]),
        from_ops(2, &[("yquarterdg", &[1]), ("cz", &[0, 1]), ("yquarter", &[1])]),
    ));

    // Y(±π/4) from an |H⟩ resource.
    for positive in [true, false] {
        let gate = if positive { "yquarter" } else { "yquarterdg" };
        let mut gadget = Circuit::new(2);
        push_quarter_gadget(&mut gadget, 0, 1, positive, "r", None);
        out.push(case(&format!("{gate}-gadget"), from_ops(1, &[(gate, &[0])]), gadget));
    }

    // Non-destructive H measurement, direct and via gadgets.
    let mut direct = Circuit::new(2);
    direct.prep(0, PrepState::Plus).g2(Gate2::CH, 0, 1).measure(0, Basis::X, "m");
    let mut cz_form = Circuit::new(2);
    cz_form
        .prep(0, PrepState::Plus)
        .g1(Gate1::YQuarterDg, 1)
        .g2(Gate2::CZ, 0, 1)
        .g1(Gate1::YQuarter, 1)
        .measure(0, Basis::X, "m");
    out.push(case("h-measurement-via-cz", direct.clone(), cz_form));
    let mut via_gadgets = Circuit::new(4);
    via_gadgets.prep(0, PrepState::Plus);
    push_ch_gadget(&mut via_gadgets, 0, 1, [2, 3], "r", None);
    via_gadgets.measure(0, Basis::X, "m");
    out.push(case("h-measurement-via-gadgets", direct, via_gadgets));

    // Unencoded two-qubit measurement with and without the controlled swaps.
    let mut plain = Circuit::new(3);
    plain.prep(0, PrepState::Plus).g2(Gate2::CH, 0, 1).g2(Gate2::CH, 0, 2).g1(Gate1::H, 2).measure(0, Basis::X, "m");
    let mut swapped = Circuit::new(3);
    swapped.prep(0, PrepState::Plus);
    swapped.extend(&from_ops(
        3,
        &[
            ("ch", &[0, 1]),
            ("ch", &[0, 2]),
            ("cswap", &[0, 1, 2]),
            ("h", &[2]),
            ("ch", &[0, 1]),
            ("ch", &[0, 2]),
            ("cswap", &[0, 1, 2]),
        ],
    ))
    .expect("same width");
    swapped.measure(0, Basis::X, "m");
    out.push(case("unencoded-measurement-swap-form", plain, swapped));

    // Eight versus four controlled-H gates on the code.
    out.push(case("encoded-measurement-four-ch", encoded_measurement_eight_ch(), encoded_measurement_four_ch()));

    // Transversal H acts as logical H⊗H followed by logical SWAP.
    let mut transversal = Circuit::new(4);
    transversal.prep(1, PrepState::Zero).prep(3, PrepState::Plus);
    encoder_on(&mut transversal, [0, 1, 2, 3]);
    for q in 0..4 {
        transversal.g1(Gate1::H, q);
    }
    let mut dec = Circuit::new(4);
    encoder_on(&mut dec, [0, 1, 2, 3]);
    transversal.extend(&dec.reversed()).expect("same width");
    transversal.measure(1, Basis::Z, "s1").measure(3, Basis::X, "s2");
    let mut logical = Circuit::new(4);
    logical.prep(1, PrepState::Zero).prep(3, PrepState::Plus);
    logical.g1(Gate1::H, 0).g1(Gate1::H, 2).g2(Gate2::Swap, 0, 2);
    logical.measure(1, Basis::Z, "s1").measure(3, Basis::X, "s2");
    out.push(case("transversal-h", transversal, logical));

    // Appendix chain (a): H on the second logical qubit of the code.
    let enc: [(&str, &[usize]); 4] = [("cx", &[4, 1]), ("cx", &[3, 2]), ("cx", &[1, 2]), ("cx", &[4, 3])];
    let mut a1_ops: Vec<(&str, &[usize])> = enc.iter().rev().cloned().collect();
    a1_ops.push(("h", &[3]));
    a1_ops.extend(enc.iter().cloned());
    let a1 = from_ops(5, &a1_ops);
    let a2 = from_ops(5, &[("cx", &[4, 3]), ("cx", &[3, 2]), ("h", &[3]), ("cx", &[3, 2]), ("cx", &[4, 3])]);
    let a3 = from_ops(
        5,
        &[("h", &[2]), ("h", &[3]), ("cz", &[3, 4]), ("cx", &[2, 3]), ("cz", &[2, 3]), ("h", &[2]), ("cx", &[4, 3])],
    );
    let a4 = from_ops(
        5,
        &[
            ("h", &[2]),
            ("h", &[3]),
            ("s", &[2]),
            ("sdg", &[4]),
            ("cz", &[2, 4]),
            ("cy", &[2, 3]),
            ("cy", &[4, 3]),
            ("h", &[2]),
        ],
    );
    out.push(case("chain-a-1", a1, a2.clone()));
    out.push(case("chain-a-2", a2, a3.clone()));
    out.push(case("chain-a-3", a3, a4));

    // Appendix chain (b): removing the controlled-H pair on code wire 3.
    let head: [(&str, &[usize]); 5] = [("h", &[2]), ("h", &[3]), ("s", &[2]), ("sdg", &[4]), ("cz", &[2, 4])];
    let with = |mid: &[(&'static str, &'static [usize])]| {
        let mut ops: Vec<(&str, &[usize])> = head.to_vec();
        ops.extend_from_slice(mid);
        from_ops(5, &ops)
    };
    let b1 = from_ops(
        5,
        &[
            ("ch", &[0, 3]),
            ("h", &[2]),
            ("h", &[3]),
            ("s", &[2]),
            ("sdg", &[4]),
            ("cz", &[2, 4]),
            ("cy", &[2, 3]),
            ("cy", &[4, 3]),
            ("h", &[2]),
            ("ch", &[0, 3]),
        ],
    );
    let b2 = with(&[("ch", &[0, 3]), ("cy", &[2, 3]), ("cy", &[4, 3]), ("ch", &[0, 3]), ("h", &[2])]);
    let b3 = with(&[
        ("cz", &[0, 2]),
        ("cy", &[2, 3]),
        ("ch", &[0, 3]),
        ("cy", &[4, 3]),
        ("ch", &[0, 3]),
        ("h", &[2]),
    ]);
    let b4 = with(&[("cz", &[0, 2]), ("cy", &[2, 3]), ("cy", &[4, 3]), ("cz", &[0, 4]), ("h", &[2])]);
    out.push(case("chain-b-1", b1, b2.clone()));
    out.push(case("chain-b-2", b2, b3.clone()));
    out.push(case("chain-b-3", b3, b4));

    out
}

/// Noiseless outcome of every measurement, from a dense run with open inputs
/// in `|0⟩`. A measurement without a deterministic outcome is a build error.
pub fn reference_outcomes(circuit: &Circuit) -> Result<BTreeMap<String, bool>> {
    use crate::dense::{run_branches, StateVector};
    let branches = run_branches(circuit, StateVector::zero(circuit.width()), 0)?;
    let mut out = BTreeMap::new();
    for label in circuit.measurement_labels() {
        let mut prob_one = 0.0;
        for b in &branches {
            if b.outcomes.get(&label) == Some(&true) {
                prob_one += b.prob;
            }
        }
        let bit = if prob_one < 1e-9 {
            false
        } else if prob_one > 1.0 - 1e-9 {
            true
        } else {
            return Err(Error::Construction(format!(
                "measurement {label} is nondeterministic in the noiseless run (P(1) = {prob_one:.6})"
            )));
        };
        out.insert(label, bit);
    }
    Ok(out)
}
