//! Character sums and Fourier transforms on `F_q` and `M_2(F_q)`, all exact in `Z[ζ_p]`.
//!
//! Sums are accumulated as a histogram over `Tr(·) mod p`: the coefficient of
//! `ζ^k` is the number of terms whose character exponent is `k`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::cyclotomic::{CycError, CycInt};
use crate::field::{FieldCtx, Fq};
use crate::matrix::{self, Mat2, MatSet, MatrixError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("{0} must be nonzero")]
    ZeroArgument(&'static str),
    #[error("function has {got} values, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("set is not contained in a single variety D_j with j != 0")]
    NotInNonzeroVariety,
    #[error(transparent)]
    Cyc(#[from] CycError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

type Result<T> = std::result::Result<T, TransformError>;

/// `χ(t) = ζ_p^{Tr(t)}`.
pub fn add_char(ctx: &FieldCtx, t: Fq) -> CycInt {
    CycInt::zeta_pow(ctx.p(), ctx.trace(t) as i64).expect("field characteristic is prime")
}

/// Histogram of character exponents, turned into a `CycInt` at the end.
#[derive(Clone)]
struct CharSum {
    p: usize,
    counts: Vec<i64>,
}

impl CharSum {
    fn new(ctx: &FieldCtx) -> Self {
        CharSum {
            p: ctx.p() as usize,
            counts: vec![0; ctx.p() as usize],
        }
    }

    /// Adds `weight · ζ^{exp}`.
    #[inline]
    fn push(&mut self, exp: u32, weight: i64) {
        self.counts[exp as usize % self.p] += weight;
    }

    /// Adds `weight · χ(t)`.
    #[inline]
    fn push_char(&mut self, ctx: &FieldCtx, t: Fq, weight: i64) {
        self.push(ctx.trace(t), weight);
    }

    fn merge(mut self, other: CharSum) -> CharSum {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self
    }

    fn finish(self) -> CycInt {
        CycInt::from_counts(self.p as u32, &self.counts).expect("prime root order")
    }
}

/// `G_a = Σ_{t≠0} η(t) χ(at)`.
pub fn gauss_sum(ctx: &FieldCtx, a: Fq) -> Result<CycInt> {
    if a.is_zero() {
        return Err(TransformError::ZeroArgument("a"));
    }
    let mut s = CharSum::new(ctx);
    for t in ctx.nonzero() {
        s.push_char(ctx, ctx.mul(a, t), ctx.quad(t) as i64);
    }
    Ok(s.finish())
}

/// `Σ_{t≠0} χ(at + b/t)`, or with the twist `η(t)` in front of each term.
pub fn kloosterman(ctx: &FieldCtx, a: Fq, b: Fq, twisted: bool) -> Result<CycInt> {
    if !twisted {
        if a.is_zero() {
            return Err(TransformError::ZeroArgument("a"));
        }
        if b.is_zero() {
            return Err(TransformError::ZeroArgument("b"));
        }
    }
    let mut s = CharSum::new(ctx);
    for t in ctx.nonzero() {
        let arg = ctx.add(ctx.mul(a, t), ctx.div(b, t).expect("t is nonzero"));
        let w = if twisted { ctx.quad(t) as i64 } else { 1 };
        s.push_char(ctx, arg, w);
    }
    Ok(s.finish())
}

/// The value the explicit Gauss-sum evaluation predicts for `G_1`.
///
/// `√p` or `i√p` is written as the prime-field quadratic Gauss sum
/// `g_p = Σ_{k=1}^{p-1} (k/p) ζ^k` with the Legendre symbol taken from Euler's
/// criterion in plain integers, so the prediction never touches the field tables.
pub fn gauss_sum_prediction(ctx: &FieldCtx) -> CycInt {
    let (p, n) = (ctx.p() as i64, ctx.n());
    let sign = if (n - 1) % 2 == 0 { 1 } else { -1 };
    let value = if p % 4 == 1 {
        // (−1)^{n−1} √q
        if n % 2 == 0 {
            CycInt::from_int(p as u32, p.pow(n / 2)).unwrap()
        } else {
            prime_gauss_sum(p as u32).try_scale(p.pow((n - 1) / 2)).unwrap()
        }
    } else {
        // (−1)^{n−1} i^n √q
        if n % 2 == 0 {
            let i_pow = if (n / 2) % 2 == 0 { 1 } else { -1 };
            CycInt::from_int(p as u32, i_pow * p.pow(n / 2)).unwrap()
        } else {
            let i_pow = if ((n - 1) / 2) % 2 == 0 { 1 } else { -1 };
            prime_gauss_sum(p as u32)
                .try_scale(i_pow * p.pow((n - 1) / 2))
                .unwrap()
        }
    };
    value.try_scale(sign).unwrap()
}

/// `Σ_{k=1}^{p-1} (k/p) ζ^k`, Legendre symbol by Euler's criterion.
pub fn prime_gauss_sum(p: u32) -> CycInt {
    let mut counts = vec![0i64; p as usize];
    for k in 1..p as u64 {
        let mut e = 1u64;
        for _ in 0..(p - 1) / 2 {
            e = e * k % p as u64;
        }
        counts[k as usize] = if e == 1 { 1 } else { -1 };
    }
    CycInt::from_counts(p, &counts).unwrap()
}

/// Outcome of the completing-the-square comparison for one `(a, b)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompleteSquare {
    /// `Σ_{s≠0} χ(as² + bs) = η(a) G_1 χ(b²/(−4a)) − 1`.
    pub punctured: bool,
    /// `Σ_{s∈F_q} χ(as² + bs) = η(a) G_1 χ(b²/(−4a))`.
    pub full: bool,
}

pub fn complete_square_check(ctx: &FieldCtx, a: Fq, b: Fq) -> Result<CompleteSquare> {
    let g1 = gauss_sum(ctx, Fq::ONE)?;
    complete_square_with(ctx, &g1, a, b)
}

pub(crate) fn complete_square_with(
    ctx: &FieldCtx,
    g1: &CycInt,
    a: Fq,
    b: Fq,
) -> Result<CompleteSquare> {
    if a.is_zero() {
        return Err(TransformError::ZeroArgument("a"));
    }
    let mut lhs = CharSum::new(ctx);
    for s in ctx.nonzero() {
        let arg = ctx.add(ctx.mul(a, ctx.mul(s, s)), ctx.mul(b, s));
        lhs.push_char(ctx, arg, 1);
    }
    let punctured_lhs = lhs.clone().finish();
    lhs.push_char(ctx, Fq::ZERO, 1);
    let full_lhs = lhs.finish();

    let minus_four_a = ctx.neg(ctx.mul(ctx.from_int(4), a));
    let shift = ctx.div(ctx.mul(b, b), minus_four_a).expect("a is nonzero");
    let full_rhs = g1
        .try_scale(ctx.quad(a) as i64)?
        .try_mul(&add_char(ctx, shift))?;
    let punctured_rhs = full_rhs.try_sub(&CycInt::from_int(ctx.p(), 1)?)?;
    Ok(CompleteSquare {
        punctured: punctured_lhs == punctured_rhs,
        full: full_lhs == full_rhs,
    })
}

/// `Σ_{s≠0} η(as) χ(bs) = η(ab) G_1`.
pub fn eta_twist_check(ctx: &FieldCtx, a: Fq, b: Fq) -> Result<bool> {
    let g1 = gauss_sum(ctx, Fq::ONE)?;
    eta_twist_with(ctx, &g1, a, b)
}

pub(crate) fn eta_twist_with(ctx: &FieldCtx, g1: &CycInt, a: Fq, b: Fq) -> Result<bool> {
    if a.is_zero() {
        return Err(TransformError::ZeroArgument("a"));
    }
    if b.is_zero() {
        return Err(TransformError::ZeroArgument("b"));
    }
    let mut lhs = CharSum::new(ctx);
    for s in ctx.nonzero() {
        lhs.push_char(ctx, ctx.mul(b, s), ctx.quad(ctx.mul(a, s)) as i64);
    }
    let rhs = g1.try_scale(ctx.quad(ctx.mul(a, b)) as i64)?;
    Ok(lhs.finish() == rhs)
}

/// Which bilinear form pairs `x` with the frequency `m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Flavor {
    /// `Σ_x χ(−m·x) f(x)`, reported with denominator `q⁴`.
    Dot,
    /// `Σ_x χ(−x⊙m) f(x)`, un-normalized.
    Odot,
}

impl Flavor {
    /// Exponent `k` of the `q^k` denominator attached to table entries.
    pub fn denominator_exp(self) -> u32 {
        match self {
            Flavor::Dot => 4,
            Flavor::Odot => 0,
        }
    }
}

/// `num / q^k` with an exact numerator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scaled {
    pub num: CycInt,
    pub k: u32,
}

impl Scaled {
    /// Compares values by cross-multiplying denominators.
    pub fn same_value(&self, other: &Scaled, q: u32) -> Result<bool> {
        let lift = |s: &Scaled, to: u32| -> Result<CycInt> {
            let mut v = s.num.clone();
            for _ in s.k..to {
                v = v.try_scale(q as i64)?;
            }
            Ok(v)
        };
        let top = self.k.max(other.k);
        Ok(lift(self, top)? == lift(other, top)?)
    }

    pub fn eval(&self, q: u32) -> num_complex::Complex64 {
        self.num.eval() / (q as f64).powi(self.k as i32)
    }
}

/// Exact transform of a function on `M_2(F_q)`, one `Z[ζ_p]` entry per frequency.
#[derive(Clone, PartialEq, Eq)]
pub struct TransformTable {
    descriptor: String,
    p: u32,
    q: u32,
    flavor: Flavor,
    /// `q⁴` blocks of `p` canonical coefficients.
    coeffs: Vec<i64>,
}

impl std::fmt::Debug for TransformTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TransformTable({}, {:?})", self.descriptor, self.flavor)
    }
}

/// `(y1, y2, y3, y4) ↦ (y4, −y3, −y2, y1)`, so that `x⊙y = x·σ(y)`.
fn odot_partner(ctx: &FieldCtx, y: &Mat2) -> Mat2 {
    let [y1, y2, y3, y4] = y.0;
    Mat2([y4, ctx.neg(y3), ctx.neg(y2), y1])
}

impl TransformTable {
    pub fn of_set(ctx: &FieldCtx, set: &MatSet, flavor: Flavor) -> Result<Self> {
        set.check_ctx(ctx)?;
        let mut f = vec![0i64; matrix::ring_size(ctx)];
        for i in set.indices() {
            f[i] = 1;
        }
        Self::of_function(ctx, &f, flavor)
    }

    /// `f` is indexed by ring index.
    ///
    /// The sum over `x` factors across the four coordinates, so the table is
    /// built one coordinate at a time; every step is an exact integer
    /// reassociation of the defining sum.
    pub fn of_function(ctx: &FieldCtx, f: &[i64], flavor: Flavor) -> Result<Self> {
        let size = matrix::ring_size(ctx);
        if f.len() != size {
            return Err(TransformError::LengthMismatch {
                expected: size,
                got: f.len(),
            });
        }
        // Every coefficient is bounded by Σ|f|, so checking it once rules out overflow.
        f.iter()
            .try_fold(0i64, |acc, v| acc.checked_add(v.checked_abs()?))
            .ok_or(CycError::Overflow(ctx.p()))?;

        let q = ctx.q() as usize;
        let p = ctx.p() as usize;
        // shift[m·q + x] = exponent of χ(−m x)
        let shift: Vec<usize> = (0..q * q)
            .map(|mx| {
                let t = ctx.mul(Fq::from_index((mx / q) as u32), Fq::from_index((mx % q) as u32));
                ctx.trace(ctx.neg(t)) as usize
            })
            .collect();

        let mut cur = vec![0i64; size * p];
        for (x, &v) in f.iter().enumerate() {
            cur[x * p] = v;
        }
        let mut next = vec![0i64; size * p];
        for axis in 0..4 {
            let stride = q.pow(axis);
            next.par_chunks_mut(stride * q * p)
                .enumerate()
                .for_each(|(hi, out)| {
                    out.fill(0);
                    let src_base = hi * stride * q;
                    for m in 0..q {
                        for x in 0..q {
                            let sh = shift[m * q + x];
                            for lo in 0..stride {
                                let src = &cur[(src_base + x * stride + lo) * p..][..p];
                                if src.iter().all(|&c| c == 0) {
                                    continue;
                                }
                                let dst = &mut out[(m * stride + lo) * p..][..p];
                                for (k, &c) in src.iter().enumerate() {
                                    let kk = k + sh;
                                    dst[if kk >= p { kk - p } else { kk }] += c;
                                }
                            }
                        }
                    }
                });
            std::mem::swap(&mut cur, &mut next);
        }

        cur.par_chunks_mut(p).for_each(|c| {
            let top = c[p - 1];
            for v in c.iter_mut() {
                *v -= top;
            }
        });

        let coeffs = match flavor {
            Flavor::Dot => cur,
            Flavor::Odot => {
                let mut out = vec![0i64; size * p];
                out.par_chunks_mut(p).enumerate().for_each(|(m, dst)| {
                    let src = odot_partner(ctx, &Mat2::from_index(m, ctx.q())).index(ctx.q());
                    dst.copy_from_slice(&cur[src * p..][..p]);
                });
                out
            }
        };
        Ok(TransformTable {
            descriptor: ctx.descriptor(),
            p: ctx.p(),
            q: ctx.q(),
            flavor,
            coeffs,
        })
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn denominator_exp(&self) -> u32 {
        self.flavor.denominator_exp()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len() / self.p as usize
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Raw (un-normalized) entry at a ring index.
    pub fn entry(&self, index: usize) -> CycInt {
        let p = self.p as usize;
        CycInt::from_counts(self.p, &self.coeffs[index * p..][..p]).unwrap()
    }

    pub fn entry_at(&self, m: &Mat2) -> CycInt {
        self.entry(m.index(self.q))
    }

    /// Normalized entry `entry / q^k`.
    pub fn value(&self, index: usize) -> Scaled {
        Scaled {
            num: self.entry(index),
            k: self.denominator_exp(),
        }
    }

    /// `Σ_m T(m) conj(T(m))`, exact.
    pub fn norm_sq_sum(&self) -> Result<CycInt> {
        let p = self.p as usize;
        let acc = self
            .coeffs
            .par_chunks(p)
            .fold(
                || vec![0i128; p],
                |mut acc, c| {
                    for (a, &ca) in c.iter().enumerate() {
                        if ca == 0 {
                            continue;
                        }
                        for (b, &cb) in c.iter().enumerate() {
                            acc[(a + p - b) % p] += ca as i128 * cb as i128;
                        }
                    }
                    acc
                },
            )
            .reduce(
                || vec![0i128; p],
                |mut l, r| {
                    for (a, b) in l.iter_mut().zip(r) {
                        *a += b;
                    }
                    l
                },
            );
        let counts = acc
            .into_iter()
            .map(|v| i64::try_from(v).map_err(|_| CycError::Overflow(self.p)))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(CycInt::from_counts(self.p, &counts)?)
    }

    /// `{"field", "flavor", "k", "p", "entries": [[c_0, …, c_{p-1}], …]}` by ring index.
    pub fn to_json(&self) -> Value {
        let p = self.p as usize;
        let entries: Vec<&[i64]> = self.coeffs.chunks(p).collect();
        json!({
            "field": self.descriptor,
            "flavor": self.flavor,
            "k": self.denominator_exp(),
            "p": self.p,
            "entries": entries,
        })
    }
}

/// The defining sum at a single frequency, term by term over the set.
pub fn transform_at(ctx: &FieldCtx, set: &MatSet, m: &Mat2, flavor: Flavor) -> CycInt {
    let mut s = CharSum::new(ctx);
    for x in set.mats() {
        let pairing = match flavor {
            Flavor::Dot => matrix::dot(ctx, m, &x),
            Flavor::Odot => matrix::odot(ctx, &x, m),
        };
        s.push_char(ctx, ctx.neg(pairing), 1);
    }
    s.finish()
}

/// `D̃_i(y) = q³ δ_0(y) + q Σ_{r≠0} χ(−ir − det(y)/r)` for `i ≠ 0`.
pub fn tilde_variety_closed(ctx: &FieldCtx, i: Fq, y: &Mat2) -> Result<CycInt> {
    if i.is_zero() {
        return Err(TransformError::ZeroArgument("i"));
    }
    let q = ctx.q() as i64;
    let d = matrix::det(ctx, y);
    let mut s = CharSum::new(ctx);
    for r in ctx.nonzero() {
        let arg = ctx.sub(ctx.neg(ctx.mul(i, r)), ctx.div(d, r).expect("r is nonzero"));
        s.push_char(ctx, arg, q);
    }
    if *y == Mat2::ZERO {
        s.push(0, q * q * q);
    }
    Ok(s.finish())
}

/// `D̂_t(m) = (q² δ_0(m) + Σ_{s≠0} χ(−st − det(m)/s)) / q³`.
pub fn hat_variety_closed(ctx: &FieldCtx, t: Fq, m: &Mat2) -> Scaled {
    let q = ctx.q() as i64;
    let d = matrix::det(ctx, m);
    let mut s = CharSum::new(ctx);
    for u in ctx.nonzero() {
        let arg = ctx.sub(ctx.neg(ctx.mul(u, t)), ctx.div(d, u).expect("u is nonzero"));
        s.push_char(ctx, arg, 1);
    }
    if *m == Mat2::ZERO {
        s.push(0, q * q);
    }
    Scaled { num: s.finish(), k: 3 }
}

/// The common determinant `j` of a nonempty set inside some `D_j`, `j ≠ 0`.
pub fn common_nonzero_det(ctx: &FieldCtx, f: &MatSet) -> Result<Fq> {
    let mut dets = f.mats().into_iter().map(|y| matrix::det(ctx, &y));
    let j = dets.next().ok_or(TransformError::NotInNonzeroVariety)?;
    if j.is_zero() || dets.any(|d| d != j) {
        return Err(TransformError::NotInNonzeroVariety);
    }
    Ok(j)
}

fn sum_over_pairs<G>(ctx: &FieldCtx, f: &MatSet, body: G) -> CycInt
where
    G: Fn(&Mat2, &Mat2, &mut CharSum) + Sync,
{
    let elems = f.mats();
    elems
        .par_iter()
        .fold(
            || CharSum::new(ctx),
            |mut acc, y| {
                for y2 in &elems {
                    body(y, y2, &mut acc);
                }
                acc
            },
        )
        .reduce(|| CharSum::new(ctx), CharSum::merge)
        .finish()
}

/// `I(ℓ) = Σ_{y,y'∈F; s,s'≠0} δ_0(s'y' − sy) χ(ℓ(s' − s))`, for `F ⊆ D_j`, `j ≠ 0`.
pub fn audit_i(ctx: &FieldCtx, f: &MatSet, ell: Fq) -> Result<CycInt> {
    common_nonzero_det(ctx, f)?;
    Ok(sum_over_pairs(ctx, f, |y, y2, acc| {
        for s in ctx.nonzero() {
            let sy = matrix::scale(ctx, s, y);
            for s2 in ctx.nonzero() {
                if matrix::scale(ctx, s2, y2) == sy {
                    acc.push_char(ctx, ctx.mul(ell, ctx.sub(s2, s)), 1);
                }
            }
        }
    }))
}

/// `A(ℓ) = Σ_{y,y'∈F; r,s,s'≠0; det(s'y' − sy) = 0} χ(−ir) χ(ℓ(s' − s))`,
/// for `i ≠ 0` and `F ⊆ D_j`, `j ≠ 0`.
pub fn audit_a(ctx: &FieldCtx, f: &MatSet, i: Fq, ell: Fq) -> Result<CycInt> {
    if i.is_zero() {
        return Err(TransformError::ZeroArgument("i"));
    }
    common_nonzero_det(ctx, f)?;
    Ok(sum_over_pairs(ctx, f, |y, y2, acc| {
        for s in ctx.nonzero() {
            let sy = matrix::scale(ctx, s, y);
            for s2 in ctx.nonzero() {
                let diff = matrix::sub(ctx, &matrix::scale(ctx, s2, y2), &sy);
                if !matrix::det(ctx, &diff).is_zero() {
                    continue;
                }
                let tail = ctx.trace(ctx.mul(ell, ctx.sub(s2, s)));
                for r in ctx.nonzero() {
                    acc.push(ctx.trace(ctx.neg(ctx.mul(i, r))) + tail, 1);
                }
            }
        }
    }))
}

/// `B(i) = Σ_{y,y'∈F; r,s≠0; det(y' − y) ≠ 0} χ(−ir − s² det(y' − y)/r)`, for `i ≠ 0`.
pub fn audit_b(ctx: &FieldCtx, f: &MatSet, i: Fq) -> Result<CycInt> {
    if i.is_zero() {
        return Err(TransformError::ZeroArgument("i"));
    }
    f.check_ctx(ctx)?;
    Ok(sum_over_pairs(ctx, f, |y, y2, acc| {
        let d = matrix::det(ctx, &matrix::sub(ctx, y2, y));
        if d.is_zero() {
            return;
        }
        for r in ctx.nonzero() {
            let ir = ctx.neg(ctx.mul(i, r));
            for s in ctx.nonzero() {
                let frac = ctx.div(ctx.mul(ctx.mul(s, s), d), r).expect("r is nonzero");
                acc.push_char(ctx, ctx.sub(ir, frac), 1);
            }
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::variety;

    fn ctx(q: &str) -> FieldCtx {
        FieldCtx::parse(q).unwrap()
    }

    #[test]
    fn additive_character_examples() {
        let k9 = ctx("9");
        assert_eq!(add_char(&k9, Fq::ZERO), CycInt::from_int(3, 1).unwrap());
        assert_eq!(add_char(&ctx("3"), Fq::ONE), CycInt::zeta_pow(3, 1).unwrap());
        let x = k9.parse_elem("0,1").unwrap();
        assert_eq!(add_char(&k9, x), CycInt::from_int(3, 1).unwrap());
        for a in k9.elements() {
            for b in k9.elements() {
                assert_eq!(add_char(&k9, k9.add(a, b)), add_char(&k9, a) * add_char(&k9, b));
            }
        }
    }

    #[test]
    fn gauss_sum_examples() {
        let g5 = gauss_sum(&ctx("5"), Fq::ONE).unwrap().eval();
        assert!((g5.re - 5f64.sqrt()).abs() < 1e-9 && g5.im.abs() < 1e-9);
        let g3 = gauss_sum(&ctx("3"), Fq::ONE).unwrap().eval();
        assert!(g3.re.abs() < 1e-9 && (g3.im - 3f64.sqrt()).abs() < 1e-9);
        assert_eq!(gauss_sum(&ctx("9"), Fq::ONE).unwrap(), CycInt::from_int(3, 3).unwrap());
        assert!(gauss_sum(&ctx("9"), Fq::ZERO).is_err());
    }

    #[test]
    fn gauss_sum_structure() {
        for q in ["3", "5", "7", "9", "11", "13", "25", "27"] {
            let k = ctx(q);
            let g1 = gauss_sum(&k, Fq::ONE).unwrap();
            assert_eq!(gauss_sum_prediction(&k), g1, "q={q}");
            let eta_m1 = k.quad(k.neg(Fq::ONE)) as i64;
            let lhs = (&g1 * &g1).try_scale(eta_m1).unwrap();
            assert_eq!(lhs, CycInt::from_int(k.p(), k.q() as i64).unwrap());
            for a in k.nonzero() {
                let ga = gauss_sum(&k, a).unwrap();
                assert_eq!(ga, g1.try_scale(k.quad(a) as i64).unwrap());
                assert!((ga.abs() - (k.q() as f64).sqrt()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn prime_gauss_sum_magnitude() {
        for p in [3u32, 5, 7, 11, 13] {
            let g = prime_gauss_sum(p).eval();
            let r = (p as f64).sqrt();
            if p % 4 == 1 {
                assert!((g.re - r).abs() < 1e-9 && g.im.abs() < 1e-9);
            } else {
                assert!(g.re.abs() < 1e-9 && (g.im - r).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn kloosterman_examples() {
        let k3 = ctx("3");
        assert_eq!(
            kloosterman(&k3, Fq::ONE, Fq::ONE, false).unwrap(),
            CycInt::from_int(3, -1).unwrap()
        );
        assert!(kloosterman(&k3, Fq::ZERO, Fq::ZERO, true).unwrap().is_zero());
        assert!(kloosterman(&k3, Fq::ZERO, Fq::ONE, false).is_err());
        let k5 = ctx("5");
        let bound = 2.0 * 5f64.sqrt() + 1e-9;
        for a in k5.nonzero() {
            for b in k5.nonzero() {
                assert!(kloosterman(&k5, a, b, false).unwrap().abs() <= bound);
            }
        }
    }

    #[test]
    fn complete_square_and_twist() {
        for q in ["3", "5", "7", "9"] {
            let k = ctx(q);
            for a in k.nonzero() {
                for b in k.elements() {
                    let c = complete_square_check(&k, a, b).unwrap();
                    assert!(c.punctured && c.full, "q={q}");
                    if !b.is_zero() {
                        assert!(eta_twist_check(&k, a, b).unwrap());
                    }
                }
            }
        }
        assert!(complete_square_check(&ctx("5"), Fq::ZERO, Fq::ONE).is_err());
    }

    #[test]
    fn all_ones_transform_is_delta() {
        for q in ["3", "5", "9"] {
            let k = ctx(q);
            let full = MatSet::full(&k);
            for flavor in [Flavor::Dot, Flavor::Odot] {
                let t = TransformTable::of_set(&k, &full, flavor).unwrap();
                let q4 = (k.q() as i64).pow(4);
                assert_eq!(t.entry(0), CycInt::from_int(k.p(), q4).unwrap());
                assert!((1..t.len()).all(|m| t.entry(m).is_zero()));
            }
        }
    }

    #[test]
    fn table_matches_pointwise_sum() {
        let k = ctx("3");
        let d1 = variety(&k, Fq::ONE);
        let mut e = MatSet::empty(&k);
        for i in [0usize, 4, 17, 40, 41, 77, 80] {
            e.insert_index(i);
        }
        for set in [&d1, &e] {
            for flavor in [Flavor::Dot, Flavor::Odot] {
                let t = TransformTable::of_set(&k, set, flavor).unwrap();
                for m in 0..81 {
                    let mm = Mat2::from_index(m, 3);
                    assert_eq!(t.entry(m), transform_at(&k, set, &mm, flavor));
                }
            }
        }
        let k9 = ctx("9");
        let s = variety(&k9, k9.from_int(2));
        let t = TransformTable::of_set(&k9, &s, Flavor::Dot).unwrap();
        for m in (0..6561).step_by(97) {
            let mm = Mat2::from_index(m, 9);
            assert_eq!(t.entry(m), transform_at(&k9, &s, &mm, Flavor::Dot));
        }
    }

    #[test]
    fn plancherel_small() {
        let k = ctx("5");
        let e = MatSet::from_indices(&k, (0..625).filter(|i| i % 7 == 3).map(|i| i as u64)).unwrap();
        let t = TransformTable::of_set(&k, &e, Flavor::Dot).unwrap();
        let q4 = 625i64;
        assert_eq!(
            t.norm_sq_sum().unwrap(),
            CycInt::from_int(5, q4 * e.len() as i64).unwrap()
        );
    }

    #[test]
    fn variety_closed_forms() {
        for q in ["3", "5"] {
            let k = ctx(q);
            let qq = k.q() as i64;
            for i in k.nonzero() {
                let di = variety(&k, i);
                let tilde = TransformTable::of_set(&k, &di, Flavor::Odot).unwrap();
                let hat = TransformTable::of_set(&k, &di, Flavor::Dot).unwrap();
                for y in 0..tilde.len() {
                    let ym = Mat2::from_index(y, k.q());
                    assert_eq!(tilde.entry(y), tilde_variety_closed(&k, i, &ym).unwrap());
                    assert!(hat_variety_closed(&k, i, &ym).same_value(&hat.value(y), k.q()).unwrap());
                }
            }
            let zero = tilde_variety_closed(&k, Fq::ONE, &Mat2::ZERO).unwrap();
            assert_eq!(zero, CycInt::from_int(k.p(), qq.pow(3) - qq).unwrap());
            let rank_one = Mat2([Fq::ONE, Fq::ZERO, Fq::ZERO, Fq::ZERO]);
            let v = tilde_variety_closed(&k, Fq::ONE, &rank_one).unwrap();
            assert_eq!(v, CycInt::from_int(k.p(), -qq).unwrap());
        }
        let k5 = ctx("5");
        let d0 = variety(&k5, Fq::ZERO);
        let direct = transform_at(&k5, &d0, &Mat2::IDENTITY, Flavor::Dot);
        let closed = hat_variety_closed(&k5, Fq::ZERO, &Mat2::IDENTITY);
        assert!(closed.same_value(&Scaled { num: direct, k: 4 }, 5).unwrap());
        assert!(tilde_variety_closed(&k5, Fq::ZERO, &Mat2::IDENTITY).is_err());
    }

    #[test]
    fn auditor_examples() {
        for q in ["3", "5", "7"] {
            let k = ctx(q);
            let id = MatSet::from_mats(&k, [&Mat2::IDENTITY]);
            let v = audit_i(&k, &id, Fq::ZERO).unwrap();
            assert_eq!(v, CycInt::from_int(k.p(), k.q() as i64 - 1).unwrap());
        }
        let k = ctx("3");
        let d1 = variety(&k, Fq::ONE);
        let f = MatSet::from_indices(&k, d1.indices().step_by(3).map(|i| i as u64)).unwrap();
        assert_eq!(f.len(), 8);
        let n = f.len() as f64;
        for ell in k.elements() {
            let vi = audit_i(&k, &f, ell).unwrap();
            let va = audit_a(&k, &f, Fq::ONE, ell).unwrap();
            assert!(vi.is_real() && va.is_real());
            assert!(vi.eval_real() <= 2.0 * 3.0 * n + 1e-6);
            assert!(va.eval_real() <= 3.0 * n * n + 1e-6);
        }
        let vb = audit_b(&k, &f, Fq::ONE).unwrap();
        assert!(vb.is_real() && vb.eval_real() <= 384.0 + 1e-6);
        let mixed = MatSet::from_mats(&k, [&Mat2::IDENTITY, &Mat2::ZERO]);
        assert!(audit_i(&k, &mixed, Fq::ZERO).is_err());
    }

    #[test]
    fn table_json_shape() {
        let k = ctx("3");
        let t = TransformTable::of_set(&k, &MatSet::full(&k), Flavor::Odot).unwrap();
        let v = t.to_json();
        assert_eq!(v["flavor"], "odot");
        assert_eq!(v["k"], 0);
        assert_eq!(v["entries"].as_array().unwrap().len(), 81);
        assert_eq!(v["entries"][0], json!([81, 0, 0]));
    }
}
