//! Exact arithmetic in `Z[ζ_p]`.
//!
//! A value is a length-`p` coefficient vector over the powers `1, ζ, …, ζ^{p-1}`.
//! Because `1 + ζ + … + ζ^{p-1} = 0`, the top coefficient can always be cleared;
//! the canonical form keeps it at zero, which makes equality componentwise.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::is_prime;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CycError {
    #[error("root order {0} is not prime")]
    NotPrime(u32),
    #[error("mismatched root orders {0} and {1}")]
    Mismatch(u32, u32),
    #[error("integer overflow in Z[zeta_{0}] arithmetic")]
    Overflow(u32),
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CycInt {
    p: u32,
    coeffs: Vec<i64>,
}

impl CycInt {
    pub fn zero(p: u32) -> Result<Self, CycError> {
        Self::from_int(p, 0)
    }

    pub fn from_int(p: u32, m: i64) -> Result<Self, CycError> {
        if !is_prime(p as u64) {
            return Err(CycError::NotPrime(p));
        }
        let mut coeffs = vec![0; p as usize];
        coeffs[0] = m;
        Ok(CycInt { p, coeffs })
    }

    /// `ζ_p^k`, with `k` taken mod `p`.
    pub fn zeta_pow(p: u32, k: i64) -> Result<Self, CycError> {
        let mut z = Self::zero(p)?;
        z.coeffs[k.rem_euclid(p as i64) as usize] = 1;
        z.canonicalize()?;
        Ok(z)
    }

    /// `Σ counts[k] ζ^k`; `counts` must have length `p`.
    pub fn from_counts(p: u32, counts: &[i64]) -> Result<Self, CycError> {
        if !is_prime(p as u64) {
            return Err(CycError::NotPrime(p));
        }
        assert_eq!(counts.len(), p as usize, "one count per power of zeta");
        let mut z = CycInt {
            p,
            coeffs: counts.to_vec(),
        };
        z.canonicalize()?;
        Ok(z)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    fn canonicalize(&mut self) -> Result<(), CycError> {
        let top = self.coeffs[self.p as usize - 1];
        if top != 0 {
            for c in &mut self.coeffs {
                *c = c.checked_sub(top).ok_or(CycError::Overflow(self.p))?;
            }
        }
        Ok(())
    }

    fn check(&self, other: &Self) -> Result<(), CycError> {
        if self.p != other.p {
            Err(CycError::Mismatch(self.p, other.p))
        } else {
            Ok(())
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, CycError> {
        self.check(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.checked_add(*b).ok_or(CycError::Overflow(self.p)))
            .collect::<Result<_, _>>()?;
        Ok(CycInt { p: self.p, coeffs })
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self, CycError> {
        self.check(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.checked_sub(*b).ok_or(CycError::Overflow(self.p)))
            .collect::<Result<_, _>>()?;
        Ok(CycInt { p: self.p, coeffs })
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, CycError> {
        self.check(other)?;
        let p = self.p as usize;
        let mut out = vec![0i64; p];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                if b == 0 {
                    continue;
                }
                let k = (i + j) % p;
                let term = a.checked_mul(b).ok_or(CycError::Overflow(self.p))?;
                out[k] = out[k].checked_add(term).ok_or(CycError::Overflow(self.p))?;
            }
        }
        let mut z = CycInt {
            p: self.p,
            coeffs: out,
        };
        z.canonicalize()?;
        Ok(z)
    }

    pub fn try_scale(&self, m: i64) -> Result<Self, CycError> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| c.checked_mul(m).ok_or(CycError::Overflow(self.p)))
            .collect::<Result<_, _>>()?;
        Ok(CycInt { p: self.p, coeffs })
    }

    pub fn try_neg(&self) -> Result<Self, CycError> {
        self.try_scale(-1)
    }

    /// Complex conjugation, `ζ^k ↦ ζ^{p-k}`.
    pub fn conj(&self) -> Self {
        let p = self.p as usize;
        let mut coeffs = vec![0i64; p];
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs[(p - k) % p] = c;
        }
        let mut z = CycInt { p: self.p, coeffs };
        z.canonicalize()
            .expect("conjugation only permutes canonical coefficients");
        z
    }

    /// `a · conj(a)`.
    pub fn norm_sq(&self) -> Result<Self, CycError> {
        self.try_mul(&self.conj())
    }

    pub fn is_real(&self) -> bool {
        *self == self.conj()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// The rational integer this equals, if any.
    pub fn as_integer(&self) -> Option<i64> {
        self.coeffs[1..].iter().all(|&c| c == 0).then_some(self.coeffs[0])
    }

    pub fn eval(&self) -> Complex64 {
        let p = self.p as f64;
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(k, &c)| Complex64::from_polar(c as f64, 2.0 * std::f64::consts::PI * k as f64 / p))
            .sum()
    }

    /// Real part of [`eval`](Self::eval); for values known to be real.
    pub fn eval_real(&self) -> f64 {
        self.eval().re
    }

    pub fn abs(&self) -> f64 {
        self.eval().norm()
    }
}

impl fmt::Debug for CycInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for CycInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}·ζ")?,
                _ => write!(f, "{c}·ζ^{k}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

// The operator forms panic on overflow or mismatched orders, like integer ops
// with overflow checks enabled. Use the `try_*` methods to handle either.

impl Add for &CycInt {
    type Output = CycInt;
    fn add(self, rhs: &CycInt) -> CycInt {
        self.try_add(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Sub for &CycInt {
    type Output = CycInt;
    fn sub(self, rhs: &CycInt) -> CycInt {
        self.try_sub(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Mul for &CycInt {
    type Output = CycInt;
    fn mul(self, rhs: &CycInt) -> CycInt {
        self.try_mul(rhs).unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Neg for &CycInt {
    type Output = CycInt;
    fn neg(self) -> CycInt {
        self.try_neg().unwrap_or_else(|e| panic!("{e}"))
    }
}

impl Add for CycInt {
    type Output = CycInt;
    fn add(self, rhs: CycInt) -> CycInt {
        &self + &rhs
    }
}

impl Sub for CycInt {
    type Output = CycInt;
    fn sub(self, rhs: CycInt) -> CycInt {
        &self - &rhs
    }
}

impl Mul for CycInt {
    type Output = CycInt;
    fn mul(self, rhs: CycInt) -> CycInt {
        &self * &rhs
    }
}

impl Neg for CycInt {
    type Output = CycInt;
    fn neg(self) -> CycInt {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(p: u32, k: i64) -> CycInt {
        CycInt::zeta_pow(p, k).unwrap()
    }

    fn int(p: u32, m: i64) -> CycInt {
        CycInt::from_int(p, m).unwrap()
    }

    #[test]
    fn root_relation() {
        assert_eq!(&z(3, 1) + &z(3, 2), int(3, -1));
        assert_eq!((&z(3, 1) + &z(3, 2)).as_integer(), Some(-1));
        assert_eq!(&z(3, 1) * &z(3, 2), int(3, 1));
        assert_eq!(z(5, 1).conj(), z(5, 4));
    }

    #[test]
    fn norms() {
        assert_eq!(z(3, 1).norm_sq().unwrap(), int(3, 1));
        assert_eq!((&int(3, 1) + &z(3, 1)).norm_sq().unwrap(), int(3, 1));
        assert_eq!(int(5, 0).norm_sq().unwrap(), int(5, 0));
    }

    #[test]
    fn evaluation() {
        let v = (&z(3, 1) + &z(3, 2)).eval();
        assert!((v.re + 1.0).abs() < 1e-12 && v.im.abs() < 1e-12);
        assert!(CycInt::zero(4).is_err());
        let seven = int(5, 7).eval();
        assert!((seven.re - 7.0).abs() < 1e-12 && seven.im.abs() < 1e-12);
    }

    #[test]
    fn reality() {
        assert!((&z(3, 1) + &z(3, 2)).is_real());
        assert!(!z(3, 1).is_real());
        assert!((&z(5, 1) + &z(5, 4)).is_real());
    }

    #[test]
    fn mismatch_and_overflow() {
        assert_eq!(int(3, 1).try_add(&int(5, 1)), Err(CycError::Mismatch(3, 5)));
        let big = int(3, i64::MAX);
        assert_eq!(big.try_add(&int(3, 1)), Err(CycError::Overflow(3)));
        assert!(big.try_mul(&big).is_err());
    }

    #[test]
    fn display() {
        let v = &int(5, 2) + &z(5, 3);
        assert_eq!(v.to_string(), "2 + 1·ζ^3");
        assert_eq!(int(3, 0).to_string(), "0");
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"{"p":5,"coeffs":[2,0,0,1,0]}"#);
    }

    fn arb(p: u32) -> impl Strategy<Value = CycInt> {
        proptest::collection::vec(-50i64..50, p as usize)
            .prop_map(move |c| CycInt::from_counts(p, &c).unwrap())
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-9
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn canonical_and_float_consistent((a, b) in (arb(5), arb(5))) {
            prop_assert_eq!(a.coeffs()[4], 0);
            prop_assert!(close((&a + &b).eval(), a.eval() + b.eval()));
            prop_assert!(close((&a * &b).eval(), a.eval() * b.eval()));
            prop_assert!(close(a.conj().eval(), a.eval().conj()));
        }

        #[test]
        fn conj_is_involutive_homomorphism((a, b) in (arb(7), arb(7))) {
            prop_assert_eq!(a.conj().conj(), a.clone());
            prop_assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
            prop_assert_eq!((&a + &b).conj(), &a.conj() + &b.conj());
            let n = a.norm_sq().unwrap();
            prop_assert!(n.is_real());
            prop_assert!(n.eval().re >= -1e-9);
        }

        #[test]
        fn ring_laws((a, b, c) in (arb(3), arb(3), arb(3))) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a - &a, CycInt::zero(3).unwrap());
        }
    }
}
