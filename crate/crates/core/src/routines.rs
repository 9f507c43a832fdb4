//! Distillation routines as `(m, n, a(p), e(p))` models.
//!
//! Every model is stored as two exact polynomials: the acceptance `a(p)` and
//! the accepted-with-error weight `u(p)`, with `e = u / a`. Evaluation runs
//! in double-double precision.

use std::sync::OnceLock;

use num_rational::BigRational;
use num_traits::{FromPrimitive, One, ToPrimitive, Zero};
use serde::Deserialize;
use twofloat::TwoFloat;

use crate::enumerator::{classify_all, polynomials_from_verdicts, FrameClassifier, PolynomialSet};
use crate::error::{Error, Result};
use crate::poly::{rational_to_twofloat, ExactPolynomial};

#[derive(Clone, Debug)]
pub struct RoutineModel {
    name: String,
    m: u32,
    n: u32,
    acceptance: ExactPolynomial,
    undetected: ExactPolynomial,
    acceptance_dd: Vec<TwoFloat>,
    undetected_dd: Vec<TwoFloat>,
    threshold: OnceLock<Option<f64>>,
}

impl PartialEq for RoutineModel {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.m == other.m
            && self.n == other.n
            && self.acceptance == other.acceptance
            && self.undetected == other.undetected
    }
}

fn horner(coeffs: &[TwoFloat], p: TwoFloat) -> TwoFloat {
    coeffs.iter().rev().fold(TwoFloat::from(0.0), |acc, &c| acc * p + c)
}

fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

impl RoutineModel {
    /// Builds and validates a model. Names are single ASCII letters so that
    /// sequences can be written as strings such as `"BAA"`.
    pub fn new(
        name: &str,
        m: u32,
        n: u32,
        acceptance: ExactPolynomial,
        undetected: ExactPolynomial,
    ) -> Result<Self> {
        if name.len() != 1 || !name.chars().all(|c| c.is_ascii_alphabetic()) {
            return Err(Error::Config(format!("routine name {name:?} must be a single letter")));
        }
        if n == 0 || m < n {
            return Err(Error::Config(format!("routine {name}: need m >= n >= 1, got m={m}, n={n}")));
        }
        if acceptance.coeff(0) != BigRational::one() {
            return Err(Error::Config(format!("routine {name}: acceptance(0) must be 1")));
        }
        if !undetected.coeff(0).is_zero() {
            return Err(Error::Config(format!("routine {name}: undetected(0) must be 0")));
        }
        let dd = |p: &ExactPolynomial| p.coefficients().iter().map(rational_to_twofloat).collect();
        Ok(RoutineModel {
            name: name.to_string(),
            m,
            n,
            acceptance_dd: dd(&acceptance),
            undetected_dd: dd(&undetected),
            acceptance,
            undetected,
            threshold: OnceLock::new(),
        })
    }

    /// The 10-to-2 routine from the enumerated polynomials.
    pub fn ten_to_two_from(polys: &PolynomialSet) -> Result<Self> {
        Self::new("A", 10, 2, polys.a.clone(), polys.u.clone())
    }

    /// The 10-to-2 routine, enumerating with the frame classifier.
    pub fn ten_to_two() -> Result<Self> {
        let polys = polynomials_from_verdicts(classify_all(&FrameClassifier::new()?)?);
        Self::ten_to_two_from(&polys)
    }

    /// The 15-to-1 routine, with `x = 1 - 2p`:
    /// `a = (1 + 15x^8)/16` and `e = (1 - 15x^7 + 15x^8 - x^15) / (2(1 + 15x^8))`.
    pub fn fifteen_to_one() -> Self {
        let x = ExactPolynomial::from_integers(&[1, -2]);
        let one = ExactPolynomial::from_integers(&[1]);
        let fifteen = rational(15, 1);
        let a_num = &one + &x.pow(8).scale(&fifteen);
        let acceptance = a_num.scale(&rational(1, 16));
        let u_num = &(&(&one - &x.pow(7).scale(&fifteen)) + &x.pow(8).scale(&fifteen)) - &x.pow(15);
        let undetected = u_num.scale(&rational(1, 32));
        Self::new("B", 15, 1, acceptance, undetected).expect("valid closed form")
    }

    /// Parses a routine from TOML:
    ///
    /// ```toml
    /// name = "C"
    /// m = 10
    /// n = 2
    /// acceptance = [1, -10, 58]
    /// undetected = [0, 0, 9]
    /// ```
    ///
    /// Coefficients may be integers, floats or strings like `"9/16"`.
    pub fn from_toml(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Num {
            Int(i64),
            Float(f64),
            Text(String),
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Config {
            name: String,
            m: u32,
            n: u32,
            acceptance: Vec<Num>,
            undetected: Vec<Num>,
        }
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let convert = |v: &[Num]| -> Result<ExactPolynomial> {
            v.iter()
                .map(|x| match x {
                    Num::Int(i) => Ok(BigRational::from_integer((*i).into())),
                    Num::Float(f) => BigRational::from_f64(*f).ok_or_else(|| Error::Config(format!("bad number {f}"))),
                    Num::Text(s) => s.trim().parse().map_err(|_| Error::Config(format!("bad rational {s:?}"))),
                })
                .collect::<Result<Vec<_>>>()
                .map(ExactPolynomial::new)
        };
        Self::new(&cfg.name, cfg.m, cfg.n, convert(&cfg.acceptance)?, convert(&cfg.undetected)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn inputs(&self) -> u32 {
        self.m
    }

    pub fn outputs(&self) -> u32 {
        self.n
    }

    pub fn acceptance_polynomial(&self) -> &ExactPolynomial {
        &self.acceptance
    }

    pub fn undetected_polynomial(&self) -> &ExactPolynomial {
        &self.undetected
    }

    pub fn acceptance_dd(&self, p: TwoFloat) -> TwoFloat {
        horner(&self.acceptance_dd, p)
    }

    /// `u(p) / a(p)`, with `u` and `a` evaluated separately.
    pub fn output_error_dd(&self, p: TwoFloat) -> TwoFloat {
        horner(&self.undetected_dd, p) / horner(&self.acceptance_dd, p)
    }

    pub fn acceptance(&self, p: f64) -> f64 {
        self.acceptance_dd(TwoFloat::from(p)).hi()
    }

    pub fn output_error(&self, p: f64) -> f64 {
        self.output_error_dd(TwoFloat::from(p)).hi()
    }

    /// Input states consumed per accepted output, `m / (n · a(p))`.
    pub fn cost_factor(&self, p: f64) -> f64 {
        self.m as f64 / (self.n as f64 * self.acceptance(p))
    }

    /// `(d, κ)` with `e(p) ≈ κ p^d` for small `p`.
    pub fn leading_error_term(&self) -> Option<(u32, f64)> {
        let d = self.undetected.lowest_degree()?;
        let kappa = (self.undetected.coeff(d) / self.acceptance.coeff(0)).to_f64()?;
        Some((d as u32, kappa))
    }

    pub(crate) fn cached_threshold(&self, compute: impl FnOnce() -> Option<f64>) -> Option<f64> {
        *self.threshold.get_or_init(compute)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_to_one_matches_closed_form() {
        let b = RoutineModel::fifteen_to_one();
        for p in [0.001, 0.01, 0.05, 0.1, 0.2] {
            let x: f64 = 1.0 - 2.0 * p;
            let a = (1.0 + 15.0 * x.powi(8)) / 16.0;
            let e = (1.0 - 15.0 * x.powi(7) + 15.0 * x.powi(8) - x.powi(15)) / (2.0 * (1.0 + 15.0 * x.powi(8)));
            assert!((b.acceptance(p) - a).abs() < 1e-14);
            assert!((b.output_error(p) - e).abs() < 1e-9 * e.max(1e-12));
        }
    }

    #[test]
    fn fifteen_to_one_error_starts_at_cubic_order() {
        let b = RoutineModel::fifteen_to_one();
        let (d, kappa) = b.leading_error_term().unwrap();
        assert_eq!(d, 3);
        assert!((kappa - 35.0).abs() < 1e-12);
    }

    #[test]
    fn toml_config_roundtrip() {
        let text = "name = \"C\"\nm = 10\nn = 2\nacceptance = [1, -10, 58]\nundetected = [0, 0, \"9/1\", 0.5]\n";
        let c = RoutineModel::from_toml(text).unwrap();
        assert_eq!(c.name(), "C");
        assert_eq!(c.leading_error_term().unwrap().0, 2);
        assert!(RoutineModel::from_toml("name = \"CC\"\nm = 1\nn = 1\nacceptance = [1]\nundetected = [0]").is_err());
        assert!(RoutineModel::from_toml("name = \"C\"\nm = 1\nn = 1\nacceptance = [2]\nundetected = [0]").is_err());
        assert!(RoutineModel::from_toml("name = \"C\"\nm = 1\nn = 1\nacceptance = [1]").is_err());
    }
}
