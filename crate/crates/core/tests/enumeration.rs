use hdistill::circuit::NUM_LOCATIONS;
use hdistill::enumerator::*;
use hdistill::poly::ExactPolynomial;
use num_rational::BigRational;
use std::sync::OnceLock;

fn dense_set() -> &'static PolynomialSet {
    static SET: OnceLock<PolynomialSet> = OnceLock::new();
    SET.get_or_init(|| derive_polynomials().unwrap())
}

#[test]
fn dense_polynomials_match_reference() {
    let set = dense_set();
    set.check_reference().unwrap();
    assert_eq!(set.a, ExactPolynomial::from_integers(&reference::ACCEPTANCE));
    assert_eq!(set.u, ExactPolynomial::from_integers(&reference::UNDETECTED));
    assert_eq!(set.u2, ExactPolynomial::from_integers(&reference::UNDETECTED_ANY));
}

#[test]
fn pattern_census() {
    let c = &dense_set().counts;
    assert_eq!((c.rejected, c.clean, c.partial), (640, 32, 256));
    assert_eq!((c.error.one_output, c.error.both_outputs, c.error.half_fidelity), (64, 32, 256));
}

#[test]
fn frame_classifier_agrees_with_dense() {
    let frame = classify_all(&FrameClassifier::new().unwrap()).unwrap();
    let bad: Vec<_> = dense_set().verdicts.iter().zip(&frame).filter(|(d, f)| d != f).map(|(d, _)| d.pattern.to_string()).collect();
    assert!(bad.is_empty(), "{} disagreements, first {:?}", bad.len(), &bad[..bad.len().min(5)]);
}

#[test]
fn every_single_error_is_rejected() {
    let v = &dense_set().verdicts;
    for loc in 0..NUM_LOCATIONS {
        assert!(!v[1 << loc].accepted(), "location {loc}");
    }
}

#[test]
fn odd_numbers_of_gate_errors_are_rejected() {
    for v in &dense_set().verdicts {
        if v.pattern.data_bits() == 0 && v.pattern.weight() % 2 == 1 {
            assert!(!v.accepted(), "{}", v.pattern);
        }
    }
}

#[test]
fn outputs_are_symmetric() {
    assert_eq!(dense_set().u, dense_set().u_out2);
}

#[test]
fn polynomials_are_ordered_probabilities() {
    let s = dense_set();
    for k in 0..=1000 {
        let p = BigRational::new(k.into(), 1000.into());
        let (a, u, u2) = (s.a.evaluate(&p), s.u.evaluate(&p), s.u2.evaluate(&p));
        let zero = BigRational::from_integer(0.into());
        let one = BigRational::from_integer(1.into());
        assert!(zero <= u && u <= u2 && u2 <= a && a <= one, "p = {p}");
    }
}

#[test]
fn output_errors_are_positively_correlated() {
    let s = dense_set();
    for k in 1..=89 {
        let p = BigRational::new(k.into(), 1000.into());
        let a = s.a.evaluate(&p);
        let e = s.u.evaluate(&p) / &a;
        let e2 = s.u2.evaluate(&p) / &a;
        assert!(e2 <= &e * BigRational::from_integer(2.into()) - &e * &e, "p = {p}");
    }
}

#[test]
fn both_error_starts_at_five_p_squared() {
    let both = dense_set().both_error();
    assert_eq!(both.lowest_degree(), Some(2));
    assert_eq!(both.coeff(2), BigRational::from_integer(5.into()));
    let expected = &ExactPolynomial::from_integers(&reference::UNDETECTED).scale(&BigRational::from_integer(2.into()))
        - &ExactPolynomial::from_integers(&reference::UNDETECTED_ANY);
    assert_eq!(both, expected);
}

#[test]
fn conditional_errors_have_a_domain() {
    let ce = dense_set().conditional_errors();
    let (e, e2) = ce.evaluate(0.01).unwrap();
    assert!(e > 0.0 && e2 > e);
    assert!(ce.evaluate(0.5).is_err());
}
