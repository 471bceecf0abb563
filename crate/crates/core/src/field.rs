//! Odd-characteristic finite fields `F_{p^n}` backed by lookup tables.
//!
//! Elements are stored by their integer index `Σ c_k p^k`, where `c_k` is the
//! coefficient of `x^k` in the canonical residue modulo the field polynomial.
//! The field polynomial is the lexicographically smallest monic irreducible of
//! degree `n`, comparing `(c_0, …, c_{n-1})` with `c_0` most significant, so any
//! two builds of the same `(p, n)` agree element by element.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest field order accepted by [`FieldCtx::new`].
pub const DEFAULT_TABLE_BUDGET: u64 = 1 << 16;

/// Above this order the dense `q × q` add/mul tables are not built.
pub const DENSE_TABLE_LIMIT: u32 = 512;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("characteristic {0} is not prime")]
    NotPrime(u64),
    #[error("even characteristic unsupported")]
    EvenCharacteristic,
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {p}^{n} exceeds the table budget of {budget} elements")]
    OverBudget { p: u64, n: u32, budget: u64 },
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("inverse of zero")]
    ZeroInverse,
    #[error("cannot parse {text:?}: {reason}")]
    Parse { text: String, reason: String },
}

/// A field element, identified by its index in `[0, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Fq(u32);

impl Fq {
    pub const ZERO: Fq = Fq(0);
    pub const ONE: Fq = Fq(1);

    #[inline]
    pub const fn from_index(index: u32) -> Self {
        Fq(index)
    }

    #[inline]
    pub const fn index(self) -> u32 {
        self.0
    }

    #[inline]
    pub const fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Fq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Splits a prime power `q` into `(p, n)`.
pub fn factor_prime_power(q: u64) -> Result<(u64, u32), FieldError> {
    if q < 2 {
        return Err(FieldError::NotPrimePower(q));
    }
    let mut p = 2;
    while p * p <= q && q % p != 0 {
        p += 1;
    }
    if q % p != 0 {
        p = q;
    }
    let mut rest = q;
    let mut n = 0;
    while rest % p == 0 {
        rest /= p;
        n += 1;
    }
    if rest != 1 {
        return Err(FieldError::NotPrimePower(q));
    }
    Ok((p, n))
}

/// Parses a field order given either as `q` or as `p^n`.
pub fn parse_order(text: &str) -> Result<(u64, u32), FieldError> {
    let bad = |reason: &str| FieldError::Parse {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    let text = text.trim();
    if let Some((p, n)) = text.split_once('^') {
        let p: u64 = p.trim().parse().map_err(|_| bad("bad characteristic"))?;
        let n: u32 = n.trim().parse().map_err(|_| bad("bad degree"))?;
        Ok((p, n))
    } else {
        let q: u64 = text.parse().map_err(|_| bad("expected q or p^n"))?;
        factor_prime_power(q)
    }
}

/// An immutable finite field context with precomputed tables.
#[derive(Clone)]
pub struct FieldCtx {
    p: u32,
    n: u32,
    q: u32,
    modulus: Vec<u32>,
    generator: Fq,
    /// `exp[k] = g^k` for `k < 2(q-1)`, doubled so products skip a reduction.
    exp: Vec<u32>,
    log: Vec<u32>,
    neg: Vec<u32>,
    inv: Vec<u32>,
    trace: Vec<u32>,
    quad: Vec<i8>,
    add_tab: Option<Vec<u16>>,
    mul_tab: Option<Vec<u16>>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldCtx")
            .field("descriptor", &self.descriptor())
            .finish()
    }
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.n == other.n
    }
}

impl Eq for FieldCtx {}

impl FieldCtx {
    pub fn new(p: u64, n: u32) -> Result<Self, FieldError> {
        Self::with_budget(p, n, DEFAULT_TABLE_BUDGET)
    }

    /// Builds a field from an order string such as `"9"` or `"3^2"`.
    pub fn parse(order: &str) -> Result<Self, FieldError> {
        let (p, n) = parse_order(order)?;
        Self::new(p, n)
    }

    pub fn with_budget(p: u64, n: u32, budget: u64) -> Result<Self, FieldError> {
        if p == 2 {
            return Err(FieldError::EvenCharacteristic);
        }
        if !is_prime(p) {
            return Err(FieldError::NotPrime(p));
        }
        if n == 0 {
            return Err(FieldError::ZeroDegree);
        }
        let q = (p as u128).checked_pow(n).unwrap_or(u128::MAX);
        if q > budget as u128 || q > u32::MAX as u128 {
            return Err(FieldError::OverBudget { p, n, budget });
        }
        let (p, q) = (p as u32, q as u32);
        let modulus = smallest_irreducible(p, n as usize);
        let poly = PolyField {
            p,
            n: n as usize,
            modulus: &modulus,
        };

        let generator = (1..q)
            .find(|&g| poly.is_generator(g, q))
            .expect("multiplicative group of a finite field is cyclic");
        let order = (q - 1) as usize;
        let mut exp = vec![0u32; 2 * order];
        let mut cur = 1u32;
        for k in 0..order {
            exp[k] = cur;
            exp[k + order] = cur;
            cur = poly.mul(cur, generator);
        }
        debug_assert_eq!(cur, 1);
        let mut log = vec![0u32; q as usize];
        for (k, &e) in exp[..order].iter().enumerate() {
            log[e as usize] = k as u32;
        }

        let neg = (0..q).map(|a| poly.neg(a)).collect();
        let mut inv = vec![0u32; q as usize];
        for a in 1..q {
            let l = log[a as usize] as usize;
            inv[a as usize] = exp[(order - l) % order];
        }

        // Tr(t) = Σ t^{p^k}; each Frobenius image is a power of the generator.
        let mut trace = vec![0u32; q as usize];
        for a in 1..q {
            let l = log[a as usize] as u64;
            let mut acc = 0u32;
            let mut pk = 1u64;
            for _ in 0..n {
                acc = poly.add(acc, exp[((l * pk) % order as u64) as usize]);
                pk = (pk * p as u64) % order as u64;
            }
            debug_assert!(acc < p, "trace must land in the prime subfield");
            trace[a as usize] = acc;
        }

        let mut quad = vec![0i8; q as usize];
        for a in 1..q {
            quad[a as usize] = if log[a as usize] % 2 == 0 { 1 } else { -1 };
        }

        let mut ctx = FieldCtx {
            p,
            n,
            q,
            modulus: modulus.clone(),
            generator: Fq(generator),
            exp,
            log,
            neg,
            inv,
            trace,
            quad,
            add_tab: None,
            mul_tab: None,
        };
        if q <= DENSE_TABLE_LIMIT {
            let qs = q as usize;
            let mut add_tab = vec![0u16; qs * qs];
            let mut mul_tab = vec![0u16; qs * qs];
            for a in 0..q {
                for b in 0..q {
                    add_tab[a as usize * qs + b as usize] = poly.add(a, b) as u16;
                    mul_tab[a as usize * qs + b as usize] = ctx.mul_slow(Fq(a), Fq(b)).0 as u16;
                }
            }
            ctx.add_tab = Some(add_tab);
            ctx.mul_tab = Some(mul_tab);
        }
        Ok(ctx)
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn q(&self) -> u32 {
        self.q
    }

    /// Field polynomial coefficients, constant term first (length `n + 1`).
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// Smallest-index primitive element.
    pub fn generator(&self) -> Fq {
        self.generator
    }

    /// `"p^n:c0,c1,…,cn"`.
    pub fn descriptor(&self) -> String {
        let m: Vec<String> = self.modulus.iter().map(u32::to_string).collect();
        format!("{}^{}:{}", self.p, self.n, m.join(","))
    }

    pub fn elements(&self) -> impl Iterator<Item = Fq> + Clone {
        (0..self.q).map(Fq)
    }

    pub fn nonzero(&self) -> impl Iterator<Item = Fq> + Clone {
        (1..self.q).map(Fq)
    }

    /// The `p` constants of the prime subfield.
    pub fn prime_subfield(&self) -> Vec<Fq> {
        (0..self.p).map(Fq).collect()
    }

    #[inline]
    pub fn is_in_prime_subfield(&self, a: Fq) -> bool {
        a.0 < self.p
    }

    /// The canonical representative of an integer residue.
    pub fn from_int(&self, v: i64) -> Fq {
        Fq(v.rem_euclid(self.p as i64) as u32)
    }

    pub fn coeffs(&self, a: Fq) -> Vec<u32> {
        let mut v = a.0;
        (0..self.n)
            .map(|_| {
                let c = v % self.p;
                v /= self.p;
                c
            })
            .collect()
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<Fq, FieldError> {
        if coeffs.len() > self.n as usize {
            return Err(FieldError::Parse {
                text: format!("{coeffs:?}"),
                reason: format!("more than {} coefficients", self.n),
            });
        }
        let mut idx = 0u32;
        for &c in coeffs.iter().rev() {
            if c >= self.p {
                return Err(FieldError::Parse {
                    text: format!("{coeffs:?}"),
                    reason: format!("coefficient {c} not reduced mod {}", self.p),
                });
            }
            idx = idx * self.p + c;
        }
        Ok(Fq(idx))
    }

    /// Comma-separated coefficients, constant term first, all `n` of them.
    pub fn format_elem(&self, a: Fq) -> String {
        let c: Vec<String> = self.coeffs(a).iter().map(u32::to_string).collect();
        c.join(",")
    }

    /// Inverse of [`format_elem`](Self::format_elem); missing high coefficients
    /// are zero, and a leading `-` on a prime-field value is reduced mod `p`.
    pub fn parse_elem(&self, text: &str) -> Result<Fq, FieldError> {
        let bad = |reason: String| FieldError::Parse {
            text: text.to_string(),
            reason,
        };
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Err(bad("empty element".into()));
        }
        let parts: Vec<&str> = trimmed.split(',').collect();
        if parts.len() > self.n as usize {
            return Err(bad(format!("more than {} coefficients", self.n)));
        }
        let mut coeffs = Vec::with_capacity(parts.len());
        for part in parts {
            let v: i64 = part
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad coefficient {part:?}")))?;
            coeffs.push(v.rem_euclid(self.p as i64) as u32);
        }
        self.from_coeffs(&coeffs)
    }

    #[inline]
    pub fn add(&self, a: Fq, b: Fq) -> Fq {
        match &self.add_tab {
            Some(t) => Fq(t[a.0 as usize * self.q as usize + b.0 as usize] as u32),
            None => Fq(self.add_digits(a.0, b.0)),
        }
    }

    #[inline]
    pub fn neg(&self, a: Fq) -> Fq {
        Fq(self.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: Fq, b: Fq) -> Fq {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fq, b: Fq) -> Fq {
        match &self.mul_tab {
            Some(t) => Fq(t[a.0 as usize * self.q as usize + b.0 as usize] as u32),
            None => self.mul_slow(a, b),
        }
    }

    #[inline]
    fn mul_slow(&self, a: Fq, b: Fq) -> Fq {
        if a.0 == 0 || b.0 == 0 {
            return Fq::ZERO;
        }
        let l = self.log[a.0 as usize] + self.log[b.0 as usize];
        Fq(self.exp[l as usize])
    }

    pub fn inv(&self, a: Fq) -> Result<Fq, FieldError> {
        if a.is_zero() {
            Err(FieldError::ZeroInverse)
        } else {
            Ok(Fq(self.inv[a.0 as usize]))
        }
    }

    pub fn div(&self, a: Fq, b: Fq) -> Result<Fq, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `a^e` with `a^0 = 1` (including `0^0`).
    pub fn pow(&self, a: Fq, e: u64) -> Fq {
        if e == 0 {
            return Fq::ONE;
        }
        if a.is_zero() {
            return Fq::ZERO;
        }
        let order = (self.q - 1) as u64;
        let l = (self.log[a.0 as usize] as u64 * (e % order)) % order;
        Fq(self.exp[l as usize])
    }

    /// Discrete logarithm base [`generator`](Self::generator).
    pub fn log(&self, a: Fq) -> Option<u32> {
        (!a.is_zero()).then(|| self.log[a.0 as usize])
    }

    /// Absolute trace into `F_p`, as a residue in `[0, p)`.
    #[inline]
    pub fn trace(&self, a: Fq) -> u32 {
        self.trace[a.0 as usize]
    }

    /// Quadratic character with `η(0) = 0`.
    #[inline]
    pub fn quad(&self, a: Fq) -> i8 {
        self.quad[a.0 as usize]
    }

    pub fn is_square(&self, a: Fq) -> bool {
        self.quad(a) >= 0
    }

    /// Smallest-index nonsquare.
    pub fn smallest_nonsquare(&self) -> Fq {
        self.nonzero()
            .find(|&a| self.quad(a) < 0)
            .expect("odd order fields have nonsquares")
    }

    fn add_digits(&self, mut a: u32, mut b: u32) -> u32 {
        let (p, mut scale, mut out) = (self.p, 1u32, 0u32);
        for _ in 0..self.n {
            let d = (a % p + b % p) % p;
            out += d * scale;
            a /= p;
            b /= p;
            scale = scale.wrapping_mul(p);
        }
        out
    }
}

/// Polynomial arithmetic over `F_p` used only while building tables.
struct PolyField<'a> {
    p: u32,
    n: usize,
    modulus: &'a [u32],
}

impl PolyField<'_> {
    fn digits(&self, mut a: u32) -> Vec<u32> {
        (0..self.n)
            .map(|_| {
                let c = a % self.p;
                a /= self.p;
                c
            })
            .collect()
    }

    fn undigits(&self, d: &[u32]) -> u32 {
        d.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    fn add(&self, a: u32, b: u32) -> u32 {
        let (x, y) = (self.digits(a), self.digits(b));
        let s: Vec<u32> = x.iter().zip(&y).map(|(u, v)| (u + v) % self.p).collect();
        self.undigits(&s)
    }

    fn neg(&self, a: u32) -> u32 {
        let d: Vec<u32> = self
            .digits(a)
            .into_iter()
            .map(|c| (self.p - c) % self.p)
            .collect();
        self.undigits(&d)
    }

    fn mul(&self, a: u32, b: u32) -> u32 {
        let prod = poly_mul(&self.digits(a), &self.digits(b), self.p);
        let mut r = poly_rem(&prod, self.modulus, self.p);
        r.resize(self.n, 0);
        self.undigits(&r)
    }

    fn pow(&self, a: u32, mut e: u64) -> u32 {
        let (mut base, mut acc) = (a, 1u32);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    fn is_generator(&self, g: u32, q: u32) -> bool {
        let order = (q - 1) as u64;
        prime_factors(order)
            .into_iter()
            .all(|r| self.pow(g, order / r) != 1)
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn poly_mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut out = vec![0u64; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    out.into_iter().map(|c| c as u32).collect()
}

/// Remainder of `a` modulo the monic polynomial `m` (constant term first).
fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let deg = m.len() - 1;
    let mut r: Vec<u64> = a.iter().map(|&c| c as u64).collect();
    let p = p as u64;
    for top in (deg..r.len()).rev() {
        let c = r[top] % p;
        if c == 0 {
            continue;
        }
        for (k, &mk) in m.iter().enumerate() {
            let pos = top - deg + k;
            r[pos] = (r[pos] + (p - c) * mk as u64) % p;
        }
    }
    r.truncate(deg);
    r.into_iter().map(|c| c as u32).collect()
}

fn is_irreducible(f: &[u32], p: u32) -> bool {
    let n = f.len() - 1;
    for d in 1..=n / 2 {
        let count = (p as u64).pow(d as u32);
        for k in 0..count {
            let mut g = Vec::with_capacity(d + 1);
            let mut v = k;
            for _ in 0..d {
                g.push((v % p as u64) as u32);
                v /= p as u64;
            }
            g.push(1);
            if poly_rem(f, &g, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

/// Lexicographically smallest monic irreducible of degree `n` over `F_p`.
fn smallest_irreducible(p: u32, n: usize) -> Vec<u32> {
    let total = (p as u64).pow(n as u32);
    for k in 0..total {
        // c_0 is the most significant digit of k.
        let mut f = vec![0u32; n + 1];
        let mut v = k;
        for pos in (0..n).rev() {
            f[pos] = (v % p as u64) as u32;
            v /= p as u64;
        }
        f[n] = 1;
        if is_irreducible(&f, p) {
            return f;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64, n: u32) -> FieldCtx {
        FieldCtx::new(p, n).unwrap()
    }

    #[test]
    fn construction_errors() {
        assert_eq!(FieldCtx::new(2, 1).unwrap_err(), FieldError::EvenCharacteristic);
        assert_eq!(
            FieldCtx::new(2, 1).unwrap_err().to_string(),
            "even characteristic unsupported"
        );
        assert_eq!(FieldCtx::new(9, 1).unwrap_err(), FieldError::NotPrime(9));
        assert!(matches!(
            FieldCtx::new(3, 11),
            Err(FieldError::OverBudget { .. })
        ));
        assert!(FieldCtx::with_budget(3, 3, 26).is_err());
        assert!(FieldCtx::with_budget(3, 3, 27).is_ok());
    }

    #[test]
    fn prime_field_modulus_is_x() {
        let k = f(3, 1);
        assert_eq!(k.modulus(), &[0, 1]);
        assert_eq!(k.descriptor(), "3^1:0,1");
    }

    #[test]
    fn f9_modulus_matches_enumeration() {
        // Oracle: monic quadratics over F_3 in lex order, irreducible iff no root.
        let mut first = None;
        'outer: for c0 in 0..3u32 {
            for c1 in 0..3u32 {
                if (0..3u32).all(|x| (x * x + c1 * x + c0) % 3 != 0) {
                    first = Some(vec![c0, c1, 1]);
                    break 'outer;
                }
            }
        }
        assert_eq!(f(3, 2).modulus(), first.unwrap().as_slice());
        assert_eq!(f(3, 2).modulus(), &[1, 0, 1]);
    }

    #[test]
    fn small_arithmetic() {
        let k5 = f(5, 1);
        assert_eq!(k5.mul(Fq(2), Fq(3)), Fq(1));
        let k7 = f(7, 1);
        assert_eq!(k7.inv(Fq(3)).unwrap(), Fq(5));
        assert_eq!(k7.inv(Fq::ZERO), Err(FieldError::ZeroInverse));
        let k9 = f(3, 2);
        let x = k9.parse_elem("0,1").unwrap();
        assert_eq!(k9.mul(x, x), k9.parse_elem("2").unwrap());
        assert_eq!(k9.pow(x, 0), Fq::ONE);
        assert_eq!(k9.pow(x, 4), Fq::ONE);
    }

    #[test]
    fn trace_examples() {
        let k5 = f(5, 1);
        assert_eq!(k5.trace(Fq(2)), 2);
        let k9 = f(3, 2);
        assert_eq!(k9.trace(k9.parse_elem("0,1").unwrap()), 0);
        assert_eq!(k9.trace(Fq::ONE), 2);
    }

    #[test]
    fn quad_examples() {
        let k5 = f(5, 1);
        assert_eq!(k5.quad(Fq(4)), 1);
        assert_eq!(k5.quad(Fq(2)), -1);
        assert_eq!(k5.quad(Fq::ZERO), 0);
        let k9 = f(3, 2);
        assert_eq!(k9.quad(k9.neg(Fq::ONE)), 1);
    }

    #[test]
    fn prime_subfield_closed() {
        let k = f(5, 2);
        let sub = k.prime_subfield();
        assert_eq!(sub.len(), 5);
        for &a in &sub {
            for &b in &sub {
                assert!(k.is_in_prime_subfield(k.mul(a, b)));
                assert!(k.is_in_prime_subfield(k.add(a, b)));
            }
        }
        assert_eq!(f(5, 1).prime_subfield().len(), 5);
        assert_eq!(f(3, 2).prime_subfield(), vec![Fq(0), Fq(1), Fq(2)]);
    }

    #[test]
    fn element_text_round_trip() {
        let k = f(3, 2);
        assert_eq!(k.format_elem(k.parse_elem("2,1").unwrap()), "2,1");
        assert_eq!(k.parse_elem("2").unwrap(), Fq(2));
        assert!(k.parse_elem("1,1,1").is_err());
        assert!(k.parse_elem("a").is_err());
        let k7 = f(7, 1);
        assert_eq!(k7.parse_elem("-1").unwrap(), Fq(6));
    }

    #[test]
    fn order_parsing() {
        assert_eq!(parse_order("9").unwrap(), (3, 2));
        assert_eq!(parse_order("3^3").unwrap(), (3, 3));
        assert_eq!(parse_order("17").unwrap(), (17, 1));
        assert!(parse_order("12").is_err());
        assert!(parse_order("x").is_err());
    }

    const SMALL: &[(u64, u32)] = &[(3, 1), (5, 1), (7, 1), (3, 2), (11, 1), (13, 1), (5, 2), (3, 3)];

    #[test]
    fn index_bijection() {
        for &(p, n) in SMALL {
            let k = f(p, n);
            for a in k.elements() {
                assert_eq!(k.from_coeffs(&k.coeffs(a)).unwrap(), a);
            }
        }
    }

    #[test]
    fn trace_linear_and_surjective() {
        for &(p, n) in SMALL {
            let k = f(p, n);
            let mut hit = vec![false; p as usize];
            for a in k.elements() {
                hit[k.trace(a) as usize] = true;
                for b in k.elements() {
                    assert_eq!(k.trace(k.add(a, b)), (k.trace(a) + k.trace(b)) % p as u32);
                }
                for c in k.prime_subfield() {
                    assert_eq!(k.trace(k.mul(c, a)), (c.index() * k.trace(a)) % p as u32);
                }
            }
            assert!(hit.iter().all(|&h| h));
        }
    }

    #[test]
    fn trace_matches_frobenius_sum() {
        for &(p, n) in SMALL {
            let k = f(p, n);
            for a in k.elements() {
                let mut acc = Fq::ZERO;
                let mut pk = 1u64;
                for _ in 0..n {
                    acc = k.add(acc, k.pow(a, pk));
                    pk *= p;
                }
                assert_eq!(acc.index(), k.trace(a));
            }
        }
    }

    #[test]
    fn quad_is_euler_criterion_and_multiplicative() {
        for &(p, n) in SMALL {
            let k = f(p, n);
            let half = (k.q() as u64 - 1) / 2;
            for s in k.nonzero() {
                let e = k.pow(s, half);
                let expect = if e == Fq::ONE { 1 } else { -1 };
                assert_eq!(k.quad(s), expect);
                for t in k.nonzero() {
                    assert_eq!(k.quad(k.mul(s, t)), k.quad(s) * k.quad(t));
                }
            }
        }
    }

    #[test]
    fn quad_orthogonality() {
        for &(p, n) in SMALL {
            let k = f(p, n);
            for a in k.nonzero() {
                let s: i64 = k.nonzero().map(|t| k.quad(k.mul(a, t)) as i64).sum();
                assert_eq!(s, 0);
            }
        }
    }

    #[test]
    fn large_field_uses_log_tables() {
        let k = f(3, 7); // q = 2187 > dense limit
        assert!(k.mul_tab.is_none());
        let g = k.generator();
        assert_eq!(k.pow(g, (k.q() - 1) as u64), Fq::ONE);
        for a in k.nonzero().take(200) {
            assert_eq!(k.mul(a, k.inv(a).unwrap()), Fq::ONE);
            assert_eq!(k.add(a, k.neg(a)), Fq::ZERO);
        }
        let prime = FieldCtx::new(65521, 1).unwrap();
        assert_eq!(prime.trace(Fq(12345)), 12345);
    }

    #[test]
    fn field_axioms_on_random_triples() {
        use rand_chacha::rand_core::{RngCore, SeedableRng};
        for &(p, n) in SMALL {
            let k = f(p, n);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
            for _ in 0..1000 {
                let mut pick = || Fq((rng.next_u32()) % k.q());
                let (a, b, c) = (pick(), pick(), pick());
                assert_eq!(k.add(k.add(a, b), c), k.add(a, k.add(b, c)));
                assert_eq!(k.mul(k.mul(a, b), c), k.mul(a, k.mul(b, c)));
                assert_eq!(k.mul(a, k.add(b, c)), k.add(k.mul(a, b), k.mul(a, c)));
                assert_eq!(k.mul(a, b), k.mul(b, a));
            }
        }
    }
}
