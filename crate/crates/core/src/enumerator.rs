//! Exhaustive classification of the 2^10 Y-error patterns of the 10-to-2
//! circuit and the exact acceptance and error polynomials derived from it.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::{BigRational, Rational64};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{build_distillation_circuit, reference_outcomes, wires, Circuit, NUM_LOCATIONS};
use crate::dense::{accepted_outcome, h_state};
use crate::error::{Error, Result};
use crate::frame::FramePropagator;
use crate::poly::{ExactPolynomial, RationalFunction};

/// Expected coefficient lists, lowest degree first.
pub mod reference {
    pub const ACCEPTANCE: [i64; 9] = [1, -10, 58, -192, 400, -544, 480, -256, 64];
    pub const UNDETECTED: [i64; 9] = [0, 0, 9, -56, 160, -256, 240, -128, 32];
    pub const UNDETECTED_ANY: [i64; 9] = [0, 0, 13, -80, 228, -368, 352, -192, 48];
}

/// Probabilities are multiples of this after snapping.
const GRID: i64 = 64;
const SNAP_TOL: f64 = 1e-9;

/// 10-bit mask over error location ids: bits 0-1 data, 2-9 gate states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ErrorPattern(pub u16);

impl ErrorPattern {
    pub fn new(bits: u16) -> Result<Self> {
        if bits >> NUM_LOCATIONS != 0 {
            return Err(Error::Domain(format!("pattern {bits:#x} has bits beyond location {NUM_LOCATIONS}")));
        }
        Ok(ErrorPattern(bits))
    }

    pub fn all() -> impl Iterator<Item = ErrorPattern> {
        (0..1u16 << NUM_LOCATIONS).map(ErrorPattern)
    }

    pub fn bits(self) -> u64 {
        self.0 as u64
    }

    pub fn weight(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn data_bits(self) -> u16 {
        self.0 & 0b11
    }

    pub fn gate_bits(self) -> u16 {
        self.0 >> 2
    }
}

impl fmt::Display for ErrorPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:010b}", self.0.reverse_bits() >> 6)
    }
}

/// Residual quality of an accepted output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityClass {
    /// Exactly `|H⟩`.
    One,
    /// Marginal fidelity 1/2: an X/Z-type residual, or outputs entangled
    /// within the span of `|±H⟩`.
    Half,
    /// A Y flip to `|-H⟩`.
    Zero,
    /// Anything else.
    Mixed,
}

impl FidelityClass {
    fn of(f: f64) -> Self {
        if (f - 1.0).abs() < SNAP_TOL {
            FidelityClass::One
        } else if (f - 0.5).abs() < SNAP_TOL {
            FidelityClass::Half
        } else if f.abs() < SNAP_TOL {
            FidelityClass::Zero
        } else {
            FidelityClass::Mixed
        }
    }
}

/// Accept and error weights of one pattern. All weights are joint
/// probabilities with acceptance, so a deterministic rejection has all
/// weights zero and a half-accepted pattern has `accept = 1/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PatternVerdict {
    pub pattern: ErrorPattern,
    #[serde(serialize_with = "ser_ratio")]
    pub accept: Rational64,
    #[serde(serialize_with = "ser_ratio")]
    pub error_out1: Rational64,
    #[serde(serialize_with = "ser_ratio")]
    pub error_out2: Rational64,
    /// Weight of at least one output differing from `|H⟩|H⟩`.
    #[serde(serialize_with = "ser_ratio")]
    pub error_any: Rational64,
    /// Per-output fidelity class, when the pattern can be accepted.
    pub class_out1: Option<FidelityClass>,
    pub class_out2: Option<FidelityClass>,
}

fn ser_ratio<S: serde::Serializer>(r: &Rational64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn snap(x: f64, what: &str, pattern: ErrorPattern) -> Result<Rational64> {
    let scaled = x * GRID as f64;
    let k = scaled.round();
    if (scaled - k).abs() > SNAP_TOL * GRID as f64 {
        return Err(Error::Domain(format!("{what} = {x} for pattern {pattern} is not a multiple of 1/{GRID}")));
    }
    Ok(Rational64::new(k as i64, GRID))
}

impl PatternVerdict {
    /// Builds a verdict from accept probability and conditional fidelities.
    pub fn from_fidelities(pattern: ErrorPattern, prob: f64, f1: f64, f2: f64, f12: f64) -> Result<Self> {
        let accept = snap(prob, "accept probability", pattern)?;
        let accepted = !accept.is_zero();
        Ok(PatternVerdict {
            pattern,
            accept,
            error_out1: snap(prob * (1.0 - f1), "output 1 error weight", pattern)?,
            error_out2: snap(prob * (1.0 - f2), "output 2 error weight", pattern)?,
            error_any: snap(prob * (1.0 - f12), "joint error weight", pattern)?,
            class_out1: accepted.then(|| FidelityClass::of(f1)),
            class_out2: accepted.then(|| FidelityClass::of(f2)),
        })
    }

    pub fn accepted(&self) -> bool {
        !self.accept.is_zero()
    }

    /// Weight of both outputs in error.
    pub fn error_both(&self) -> Rational64 {
        self.error_out1 + self.error_out2 - self.error_any
    }

    pub fn is_partial(&self) -> bool {
        self.accepted() && self.accept != Rational64::from_integer(1)
    }

    /// Conditional probabilities `(out1 only, out2 only, both)` given acceptance.
    pub fn conditional_errors(&self) -> (f64, f64, f64) {
        if !self.accepted() {
            return (0.0, 0.0, 0.0);
        }
        let a = self.accept;
        let both = self.error_both() / a;
        let only1 = self.error_out1 / a - both;
        let only2 = self.error_out2 / a - both;
        let f = |r: Rational64| r.to_f64().unwrap_or(f64::NAN);
        (f(only1), f(only2), f(both))
    }
}

pub trait Classifier: Sync {
    fn classify(&self, pattern: ErrorPattern) -> Result<PatternVerdict>;
}

/// Ground-truth classifier running the dense simulator on each pattern.
pub struct DenseClassifier {
    circuit: Circuit,
    reference: BTreeMap<String, bool>,
}

impl DenseClassifier {
    pub fn new() -> Result<Self> {
        let (circuit, _) = build_distillation_circuit();
        Self::for_circuit(circuit)
    }

    pub fn for_circuit(circuit: Circuit) -> Result<Self> {
        let reference = reference_outcomes(&circuit)?;
        Ok(DenseClassifier { circuit, reference })
    }
}

impl Classifier for DenseClassifier {
    fn classify(&self, pattern: ErrorPattern) -> Result<PatternVerdict> {
        let o = accepted_outcome(&self.circuit, pattern.bits(), &self.reference, wires::OUT1, wires::OUT2)?;
        PatternVerdict::from_fidelities(pattern, o.prob, o.fidelity1, o.fidelity2, o.joint_fidelity)
    }
}

/// Fast classifier propagating a generalized Pauli frame.
pub struct FrameClassifier {
    propagator: FramePropagator,
    reference: BTreeMap<String, bool>,
}

impl FrameClassifier {
    pub fn new() -> Result<Self> {
        let (circuit, _) = build_distillation_circuit();
        let reference = reference_outcomes(&circuit)?;
        let propagator = FramePropagator::new(&circuit)?;
        if propagator.outputs() != [wires::OUT1, wires::OUT2] {
            return Err(Error::Construction("unexpected output wires".into()));
        }
        Ok(FrameClassifier { propagator, reference })
    }
}

impl Classifier for FrameClassifier {
    fn classify(&self, pattern: ErrorPattern) -> Result<PatternVerdict> {
        let frame = self.propagator.propagate(pattern.bits())?;
        let o = self.propagator.evaluate(&frame, &self.reference, h_state())?;
        PatternVerdict::from_fidelities(pattern, o.accept_prob, o.fidelities[0], o.fidelities[1], o.joint_fidelity)
    }
}

/// Classifies all 1024 patterns in parallel; the result is in pattern order.
pub fn classify_all<C: Classifier>(classifier: &C) -> Result<Vec<PatternVerdict>> {
    ErrorPattern::all().collect::<Vec<_>>().par_iter().map(|&p| classifier.classify(p)).collect()
}

/// Per-weight sums of a verdict field.
fn weight_sums(verdicts: &[PatternVerdict], field: impl Fn(&PatternVerdict) -> Rational64) -> Vec<BigRational> {
    let mut sums = vec![Rational64::zero(); NUM_LOCATIONS + 1];
    for v in verdicts {
        sums[v.pattern.weight()] += field(v);
    }
    sums.into_iter().map(|r| BigRational::new((*r.numer()).into(), (*r.denom()).into())).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ErrorClassCounts {
    /// Accepted with exactly one output in error.
    pub one_output: usize,
    /// Accepted with both outputs in error.
    pub both_outputs: usize,
    /// Accepted with marginal fidelity 1/2 on some output.
    pub half_fidelity: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PatternCounts {
    pub rejected: usize,
    pub clean: usize,
    /// Accepted with probability strictly between 0 and 1.
    pub partial: usize,
    pub error: ErrorClassCounts,
}

/// Exact polynomials and pattern statistics.
#[derive(Clone, Debug)]
pub struct PolynomialSet {
    /// Acceptance `a(p)`.
    pub a: ExactPolynomial,
    /// Accepted with output 1 in error, `u(p)`.
    pub u: ExactPolynomial,
    /// Same for output 2.
    pub u_out2: ExactPolynomial,
    /// Accepted with at least one output in error, `u2(p)`.
    pub u2: ExactPolynomial,
    pub counts: PatternCounts,
    pub verdicts: Vec<PatternVerdict>,
}

pub fn polynomials_from_verdicts(verdicts: Vec<PatternVerdict>) -> PolynomialSet {
    let poly = |f: &dyn Fn(&PatternVerdict) -> Rational64| {
        ExactPolynomial::from_weight_distribution(&weight_sums(&verdicts, f))
    };
    let a = poly(&|v| v.accept);
    let u = poly(&|v| v.error_out1);
    let u_out2 = poly(&|v| v.error_out2);
    let u2 = poly(&|v| v.error_any);
    let mut counts = PatternCounts::default();
    for v in &verdicts {
        if !v.accepted() {
            counts.rejected += 1;
            continue;
        }
        if v.is_partial() {
            counts.partial += 1;
        }
        let half = v.class_out1 == Some(FidelityClass::Half) || v.class_out2 == Some(FidelityClass::Half);
        if half {
            counts.error.half_fidelity += 1;
        } else if !v.error_both().is_zero() {
            counts.error.both_outputs += 1;
        } else if !v.error_any.is_zero() {
            counts.error.one_output += 1;
        } else {
            counts.clean += 1;
        }
    }
    PolynomialSet { a, u, u_out2, u2, counts, verdicts }
}

/// Derives `a`, `u`, `u2` with the dense classifier.
pub fn derive_polynomials() -> Result<PolynomialSet> {
    Ok(polynomials_from_verdicts(classify_all(&DenseClassifier::new()?)?))
}

fn diff_report(name: &str, derived: &ExactPolynomial, expected: &ExactPolynomial) -> Option<String> {
    if derived == expected {
        return None;
    }
    let dw = derived.weight_distribution(NUM_LOCATIONS).ok()?;
    let ew = expected.weight_distribution(NUM_LOCATIONS).ok()?;
    let mut out = format!("{name}: derived {derived}\n{name}: expected {expected}\n");
    for (w, (d, e)) in dw.iter().zip(&ew).enumerate() {
        if d != e {
            out.push_str(&format!("  weight {w}: derived {d}, expected {e}\n"));
        }
    }
    Some(out)
}

impl PolynomialSet {
    /// Compares against the expected coefficient lists, reporting the
    /// per-weight differences on mismatch.
    pub fn check_reference(&self) -> Result<()> {
        let mut report = String::new();
        for (name, derived, expected) in [
            ("a", &self.a, &reference::ACCEPTANCE[..]),
            ("u", &self.u, &reference::UNDETECTED[..]),
            ("u (output 2)", &self.u_out2, &reference::UNDETECTED[..]),
            ("u2", &self.u2, &reference::UNDETECTED_ANY[..]),
        ] {
            if let Some(r) = diff_report(name, derived, &ExactPolynomial::from_integers(expected)) {
                report.push_str(&r);
            }
        }
        if report.is_empty() {
            Ok(())
        } else {
            Err(Error::ReferenceMismatch(report))
        }
    }

    /// `e = u/a` and `e2 = u2/a`.
    pub fn conditional_errors(&self) -> ConditionalErrors {
        ConditionalErrors {
            e: RationalFunction::new(self.u.clone(), self.a.clone()),
            e2: RationalFunction::new(self.u2.clone(), self.a.clone()),
        }
    }

    /// `2u - u2`, the weight of both outputs in error.
    pub fn both_error(&self) -> ExactPolynomial {
        &(&self.u + &self.u_out2) - &self.u2
    }

    pub fn report(&self) -> PolynomialReport {
        let ints = |p: &ExactPolynomial| p.integer_coefficients().unwrap_or_default();
        PolynomialReport { a: ints(&self.a), u: ints(&self.u), u2: ints(&self.u2), patterns: self.counts.clone() }
    }
}

/// Serializable summary.
#[derive(Clone, Debug, Serialize)]
pub struct PolynomialReport {
    pub a: Vec<i64>,
    pub u: Vec<i64>,
    pub u2: Vec<i64>,
    pub patterns: PatternCounts,
}

#[derive(Clone, Debug)]
pub struct ConditionalErrors {
    pub e: RationalFunction,
    pub e2: RationalFunction,
}

impl ConditionalErrors {
    /// Evaluates `(e, e2)` for `p` in `[0, 1/2)`.
    pub fn evaluate(&self, p: f64) -> Result<(f64, f64)> {
        if !(0.0..0.5).contains(&p) {
            return Err(Error::Domain(format!("p = {p} outside [0, 1/2)")));
        }
        Ok((self.e.evaluate_f64(p)?, self.e2.evaluate_f64(p)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapping() {
        let p = ErrorPattern(0);
        assert_eq!(snap(0.5 + 1e-12, "x", p).unwrap(), Rational64::new(1, 2));
        assert!(snap(0.3, "x", p).is_err());
    }

    #[test]
    fn pattern_display_lists_location_zero_first() {
        assert_eq!(ErrorPattern(0b1).to_string(), "1000000000");
        assert_eq!(ErrorPattern(0b1000000000).to_string(), "0000000001");
    }

    #[test]
    fn pattern_range_is_checked() {
        assert!(ErrorPattern::new(1 << 10).is_err());
        assert_eq!(ErrorPattern::new(0b101).unwrap().weight(), 2);
    }

    #[test]
    fn verdict_both_error_weight() {
        let v = PatternVerdict::from_fidelities(ErrorPattern(3), 1.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(v.error_both(), Rational64::from_integer(1));
        assert_eq!(v.conditional_errors(), (0.0, 0.0, 1.0));
    }
}
