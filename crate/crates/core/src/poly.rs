//! Univariate polynomials and rational functions with exact rational coefficients.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ExactPolynomial {
    coeffs: Vec<BigRational>,
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

/// Converts an exact rational to double-double by dividing the two halves.
pub fn rational_to_twofloat(r: &BigRational) -> TwoFloat {
    let split = |x: &BigInt| -> TwoFloat {
        let hi = x.to_f64().unwrap_or(f64::NAN);
        let rest = x - BigInt::from_f64(hi).unwrap_or_default();
        TwoFloat::new_add(hi, rest.to_f64().unwrap_or(0.0))
    };
    split(r.numer()) / split(r.denom())
}

impl ExactPolynomial {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        ExactPolynomial { coeffs }
    }

    pub fn from_integers(c: &[i64]) -> Self {
        Self::new(c.iter().map(|&x| BigRational::from_integer(x.into())).collect())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    /// The polynomial `p`.
    pub fn x() -> Self {
        Self::from_integers(&[0, 1])
    }

    /// `1 - p`.
    pub fn one_minus_x() -> Self {
        Self::from_integers(&[1, -1])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Lowest degree with a nonzero coefficient.
    pub fn lowest_degree(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs.get(k).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.coeffs
    }

    /// Coefficients as integers, if they all are.
    pub fn integer_coefficients(&self) -> Option<Vec<i64>> {
        self.coeffs.iter().map(|c| if c.is_integer() { c.to_integer().to_i64() } else { None }).collect()
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(BigRational::one());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    /// `self(inner(p))`, by Horner's rule.
    pub fn compose(&self, inner: &ExactPolynomial) -> Self {
        let mut out = Self::zero();
        for c in self.coeffs.iter().rev() {
            out = &(&out * inner) + &Self::constant(c.clone());
        }
        out
    }

    pub fn evaluate(&self, p: &BigRational) -> BigRational {
        self.coeffs.iter().rev().fold(BigRational::zero(), |acc, c| acc * p + c)
    }

    pub fn evaluate_f64(&self, p: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * p + c.to_f64().unwrap_or(f64::NAN))
    }

    pub fn evaluate_twofloat(&self, p: TwoFloat) -> TwoFloat {
        self.coeffs
            .iter()
            .rev()
            .fold(TwoFloat::from(0.0), |acc, c| acc * p + rational_to_twofloat(c))
    }

    /// Builds `Σ_w weights[w] · p^w (1-p)^(n-w)` with `n = weights.len() - 1`.
    pub fn from_weight_distribution(weights: &[BigRational]) -> Self {
        let n = weights.len().saturating_sub(1);
        let mut out = Self::zero();
        for (w, a) in weights.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let term = &Self::x().pow(w as u32) * &Self::one_minus_x().pow((n - w) as u32);
            out = &out + &term.scale(a);
        }
        out
    }

    /// Inverse of [`from_weight_distribution`]: the weights `A_w` with
    /// `self = Σ_w A_w p^w (1-p)^(n-w)`. Requires `degree <= n`.
    pub fn weight_distribution(&self, n: usize) -> Result<Vec<BigRational>> {
        if self.degree().is_some_and(|d| d > n) {
            return Err(Error::Domain(format!("degree exceeds {n}")));
        }
        // p^k = p^k (p + (1-p))^(n-k)
        Ok((0..=n)
            .map(|w| {
                (0..=w).fold(BigRational::zero(), |acc, k| {
                    acc + self.coeff(k) * BigRational::from_integer(binomial(n - k, w - k))
                })
            })
            .collect())
    }
}

impl Add for &ExactPolynomial {
    type Output = ExactPolynomial;
    fn add(self, rhs: &ExactPolynomial) -> ExactPolynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        ExactPolynomial::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &ExactPolynomial {
    type Output = ExactPolynomial;
    fn sub(self, rhs: &ExactPolynomial) -> ExactPolynomial {
        self + &(-rhs)
    }
}

impl Neg for &ExactPolynomial {
    type Output = ExactPolynomial;
    fn neg(self) -> ExactPolynomial {
        ExactPolynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &ExactPolynomial {
    type Output = ExactPolynomial;
    fn mul(self, rhs: &ExactPolynomial) -> ExactPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return ExactPolynomial::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        ExactPolynomial::new(out)
    }
}

impl fmt::Display for ExactPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mag = c.abs();
            match k {
                0 => write!(f, "{mag}")?,
                1 => write!(f, "{mag}p")?,
                _ => write!(f, "{mag}p^{k}")?,
            }
        }
        Ok(())
    }
}

/// `numerator / denominator`, both exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalFunction {
    pub numerator: ExactPolynomial,
    pub denominator: ExactPolynomial,
}

impl RationalFunction {
    pub fn new(numerator: ExactPolynomial, denominator: ExactPolynomial) -> Self {
        RationalFunction { numerator, denominator }
    }

    pub fn evaluate(&self, p: &BigRational) -> Result<BigRational> {
        let d = self.denominator.evaluate(p);
        if d.is_zero() {
            return Err(Error::Domain(format!("denominator vanishes at p = {p}")));
        }
        Ok(self.numerator.evaluate(p) / d)
    }

    pub fn evaluate_f64(&self, p: f64) -> Result<f64> {
        let d = self.denominator.evaluate_f64(p);
        if d == 0.0 {
            return Err(Error::Domain(format!("denominator vanishes at p = {p}")));
        }
        Ok(self.numerator.evaluate_f64(p) / d)
    }

    pub fn evaluate_twofloat(&self, p: TwoFloat) -> Result<TwoFloat> {
        let d = self.denominator.evaluate_twofloat(p);
        if d == TwoFloat::from(0.0) {
            return Err(Error::Domain(format!("denominator vanishes at p = {}", p.hi())));
        }
        Ok(self.numerator.evaluate_twofloat(p) / d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn arithmetic() {
        let a = ExactPolynomial::from_integers(&[1, 1]);
        let b = ExactPolynomial::from_integers(&[1, -1]);
        assert_eq!(&a * &b, ExactPolynomial::from_integers(&[1, 0, -1]));
        assert_eq!(&a + &b, ExactPolynomial::from_integers(&[2]));
        assert_eq!(&a - &a, ExactPolynomial::zero());
        assert_eq!(a.pow(3), ExactPolynomial::from_integers(&[1, 3, 3, 1]));
    }

    #[test]
    fn compose_and_evaluate() {
        let a = ExactPolynomial::from_integers(&[0, 0, 1]);
        let inner = ExactPolynomial::from_integers(&[1, 2]);
        let c = a.compose(&inner);
        assert_eq!(c, ExactPolynomial::from_integers(&[1, 4, 4]));
        assert_eq!(c.evaluate(&q(1, 2)), q(4, 1));
        assert!((c.evaluate_f64(0.25) - 2.25).abs() < 1e-15);
    }

    #[test]
    fn weight_distribution_roundtrip() {
        let weights: Vec<BigRational> = [1, 0, 13, 32, 50].iter().map(|&x| q(x, 1)).collect();
        let p = ExactPolynomial::from_weight_distribution(&weights);
        assert_eq!(p.weight_distribution(4).unwrap(), weights);
    }

    #[test]
    fn display() {
        assert_eq!(ExactPolynomial::from_integers(&[1, -10, 0, 4]).to_string(), "1 - 10p + 4p^3");
    }

    #[test]
    fn rational_function_domain() {
        let r = RationalFunction::new(ExactPolynomial::from_integers(&[1]), ExactPolynomial::from_integers(&[0, 1]));
        assert!(r.evaluate(&q(0, 1)).is_err());
        assert_eq!(r.evaluate(&q(1, 4)).unwrap(), q(4, 1));
    }

    #[test]
    fn twofloat_conversion_is_accurate() {
        let r = q(1, 3);
        let t = rational_to_twofloat(&r);
        let back = TwoFloat::from(1.0) / TwoFloat::from(3.0);
        assert!(((t - back).hi()).abs() < 1e-30);
    }
}
