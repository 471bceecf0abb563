//! Explicit matrix sets: the nonsquare slice `H_i` and its asymmetric half,
//! product-type sets, and matrices over the prime subfield.

use rand_chacha::rand_core::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{FieldCtx, FieldError, Fq};
use crate::matrix::{self, Mat2, MatSet, MatrixError};
use crate::sample::{self, SampleError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructionError {
    #[error("i = {0} must be a nonzero nonsquare")]
    NotNonsquare(String),
    #[error("needs a proper extension field (n >= 2), got n = {0}")]
    PrimeField(u32),
    #[error("needs an even extension degree, got n = {0}")]
    OddDegree(u32),
    #[error("descriptor is for q = {descriptor}, field has q = {field}")]
    FieldMismatch { descriptor: u32, field: u32 },
    #[error("a product set takes at most q^2 = {max} rows, got {got}")]
    TooManyRows { got: usize, max: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Sample(#[from] SampleError),
}

/// Enough to rebuild a set exactly; embedded in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Construction {
    Sharpness { q: u32, i: String },
    Variety { q: u32, i: String },
    RandomSubset { q: u32, parent: Box<Construction>, size: usize, seed: u64 },
    Product { q: u32, rows1: usize, rows2: usize, seed: Option<u64> },
    PrimeSubfield { q: u32 },
    Sl2PrimeSubfield { q: u32 },
    Full { q: u32 },
}

impl Construction {
    pub fn q(&self) -> u32 {
        match self {
            Construction::Sharpness { q, .. }
            | Construction::Variety { q, .. }
            | Construction::RandomSubset { q, .. }
            | Construction::Product { q, .. }
            | Construction::PrimeSubfield { q }
            | Construction::Sl2PrimeSubfield { q }
            | Construction::Full { q } => *q,
        }
    }

    /// Rebuilds the exact set this descriptor names.
    pub fn build(&self, ctx: &FieldCtx) -> Result<MatSet, ConstructionError> {
        if self.q() != ctx.q() {
            return Err(ConstructionError::FieldMismatch {
                descriptor: self.q(),
                field: ctx.q(),
            });
        }
        Ok(match self {
            Construction::Sharpness { i, .. } => build_sharpness(ctx, ctx.parse_elem(i)?)?.e,
            Construction::Variety { i, .. } => matrix::variety(ctx, ctx.parse_elem(i)?),
            Construction::RandomSubset {
                parent, size, seed, ..
            } => sample::random_subset(ctx, &parent.build(ctx)?, *size, *seed)?,
            Construction::Product {
                rows1, rows2, seed, ..
            } => {
                let (s1, s2) = match seed {
                    Some(seed) => {
                        let mut rng = sample::rng(*seed);
                        (random_rows(ctx, *rows1, &mut rng)?, random_rows(ctx, *rows2, &mut rng)?)
                    }
                    None => (first_rows(ctx, *rows1)?, first_rows(ctx, *rows2)?),
                };
                product_set(ctx, &s1, &s2)
            }
            Construction::PrimeSubfield { .. } => prime_subfield_matrices(ctx)?,
            Construction::Sl2PrimeSubfield { .. } => sl2_prime_subfield(ctx)?,
            Construction::Full { .. } => MatSet::full(ctx),
        })
    }
}

fn row_at(ctx: &FieldCtx, v: usize) -> (Fq, Fq) {
    let q = ctx.q() as usize;
    (Fq::from_index((v % q) as u32), Fq::from_index((v / q) as u32))
}

fn check_rows(ctx: &FieldCtx, r: usize) -> Result<usize, ConstructionError> {
    let max = (ctx.q() as usize).pow(2);
    if r > max {
        return Err(ConstructionError::TooManyRows { got: r, max });
    }
    Ok(max)
}

/// `r` distinct rows of `F_q²` drawn uniformly.
pub fn random_rows(
    ctx: &FieldCtx,
    r: usize,
    rng: &mut impl RngCore,
) -> Result<Vec<(Fq, Fq)>, ConstructionError> {
    let max = check_rows(ctx, r)?;
    Ok(sample::choose(rng, max, r).into_iter().map(|v| row_at(ctx, v)).collect())
}

/// The first `r` rows of `F_q²` in index order.
pub fn first_rows(ctx: &FieldCtx, r: usize) -> Result<Vec<(Fq, Fq)>, ConstructionError> {
    check_rows(ctx, r)?;
    Ok((0..r).map(|v| row_at(ctx, v)).collect())
}

/// `H_i = {x : x2 + x3 = 0, x1 x4 + x2² = i}` and a half `E` with `E ∩ (−E) = ∅`.
#[derive(Debug, Clone)]
pub struct SharpnessSet {
    pub i: Fq,
    pub h: MatSet,
    pub e: MatSet,
}

pub fn nonsquares(ctx: &FieldCtx) -> Vec<Fq> {
    ctx.nonzero().filter(|&a| !ctx.is_square(a)).collect()
}

pub fn build_sharpness(ctx: &FieldCtx, i: Fq) -> Result<SharpnessSet, ConstructionError> {
    if i.is_zero() || ctx.is_square(i) {
        return Err(ConstructionError::NotNonsquare(ctx.format_elem(i)));
    }
    let h = MatSet::from_predicate(ctx, |x| {
        let [x1, x2, x3, x4] = x.0;
        ctx.add(x2, x3).is_zero() && ctx.add(ctx.mul(x1, x4), ctx.mul(x2, x2)) == i
    });
    // Since i is a nonsquare, 0 ∉ H and x ≠ −x; keep the smaller index of each pair.
    let q = ctx.q();
    let mut e = MatSet::empty(ctx);
    for idx in h.indices() {
        let partner = matrix::neg(ctx, &Mat2::from_index(idx, q)).index(q);
        if idx < partner {
            e.insert_index(idx);
        }
    }
    Ok(SharpnessSet { i, h, e })
}

/// Result of scanning `x ⊙ y = −2i` over the sharpness sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolutionScan {
    /// Number of `y ∈ H` scanned.
    pub ys: usize,
    /// `y ∈ H` whose only solution `x ∈ H` is `x = −y`.
    pub unique_negation: usize,
    /// Pairs `(x, y) ∈ E × E` solving the equation.
    pub solutions_in_e: usize,
}

impl SolutionScan {
    pub fn holds(&self) -> bool {
        self.unique_negation == self.ys && self.solutions_in_e == 0
    }
}

pub fn verify_unique_solution(ctx: &FieldCtx, sh: &SharpnessSet) -> SolutionScan {
    let target = ctx.neg(ctx.mul(ctx.from_int(2), sh.i));
    let hs = sh.h.mats();
    let solutions = |y: &Mat2| -> Vec<Mat2> {
        hs.iter()
            .copied()
            .filter(|x| matrix::odot(ctx, x, y) == target)
            .collect()
    };
    let mut unique_negation = 0;
    for y in &hs {
        let xs = solutions(y);
        if xs == [matrix::neg(ctx, y)] {
            unique_negation += 1;
        }
    }
    let mut solutions_in_e = 0;
    for y in sh.e.mats() {
        solutions_in_e += solutions(&y).iter().filter(|x| sh.e.contains(x)).count();
    }
    SolutionScan {
        ys: hs.len(),
        unique_negation,
        solutions_in_e,
    }
}

/// `{[[a1, a2], [b1, b2]] : a ∈ S1, b ∈ S2}`.
pub fn product_set(ctx: &FieldCtx, s1: &[(Fq, Fq)], s2: &[(Fq, Fq)]) -> MatSet {
    let mut out = MatSet::empty(ctx);
    for &(a1, a2) in s1 {
        for &(b1, b2) in s2 {
            out.insert(&Mat2([a1, a2, b1, b2]));
        }
    }
    out
}

/// `A × A` for a list of field elements.
pub fn grid(a: &[Fq]) -> Vec<(Fq, Fq)> {
    a.iter().flat_map(|&x| a.iter().map(move |&y| (x, y))).collect()
}

/// All `p⁴` matrices with prime-subfield entries.
pub fn prime_subfield_matrices(ctx: &FieldCtx) -> Result<MatSet, ConstructionError> {
    if ctx.n() < 2 {
        return Err(ConstructionError::PrimeField(ctx.n()));
    }
    let fp = grid(&ctx.prime_subfield());
    Ok(product_set(ctx, &fp, &fp))
}

/// `SL_2(F_p)` inside `M_2(F_q)` for `q = p^n`, `n` even.
pub fn sl2_prime_subfield(ctx: &FieldCtx) -> Result<MatSet, ConstructionError> {
    if ctx.n() % 2 == 1 {
        return Err(ConstructionError::OddDegree(ctx.n()));
    }
    let mut out = MatSet::empty(ctx);
    for x in prime_subfield_matrices(ctx)?.mats() {
        if matrix::det(ctx, &x) == Fq::ONE {
            out.insert(&x);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{det_set, iterate_sumset, sumset, variety};

    fn ctx(q: &str) -> FieldCtx {
        FieldCtx::parse(q).unwrap()
    }

    #[test]
    fn sharpness_sizes() {
        for (q, i, h, e) in [("5", 2, 20, 10), ("3", 2, 6, 3)] {
            let k = ctx(q);
            let sh = build_sharpness(&k, k.from_int(i)).unwrap();
            assert_eq!((sh.h.len(), sh.e.len()), (h, e));
            assert!(sh.e.intersect(&sh.e.negate(&k).unwrap()).unwrap().is_empty());
            assert_eq!(sh.e.union(&sh.e.negate(&k).unwrap()).unwrap(), sh.h);
            assert!(!sh.h.contains(&Mat2::ZERO));
        }
        let k5 = ctx("5");
        assert!(build_sharpness(&k5, Fq::ONE).is_err());
        assert!(build_sharpness(&k5, Fq::ZERO).is_err());
    }

    #[test]
    fn sharpness_misses_zero() {
        for q in ["3", "5", "7"] {
            let k = ctx(q);
            for i in nonsquares(&k) {
                let sh = build_sharpness(&k, i).unwrap();
                let dets = det_set(&k, &sumset(&k, &sh.e, &sh.e).unwrap()).unwrap();
                assert!(!dets.contains(&Fq::ZERO));
                let scan = verify_unique_solution(&k, &sh);
                assert!(scan.holds(), "{scan:?}");
            }
        }
    }

    #[test]
    fn product_examples() {
        let k = ctx("5");
        let all: Vec<Fq> = k.elements().collect();
        assert_eq!(product_set(&k, &grid(&all), &grid(&all)), MatSet::full(&k));
        let id = product_set(&k, &[(Fq::ONE, Fq::ZERO)], &[(Fq::ZERO, Fq::ONE)]);
        assert_eq!(id.mats(), vec![Mat2::IDENTITY]);
        let k9 = ctx("9");
        assert_eq!(prime_subfield_matrices(&k9).unwrap().len(), 81);
        assert_eq!(prime_subfield_matrices(&ctx("25")).unwrap().len(), 625);
        assert!(prime_subfield_matrices(&ctx("3")).is_err());
    }

    #[test]
    fn descriptors_rebuild() {
        let k = ctx("5");
        let sh = Construction::Sharpness { q: 5, i: "2".into() };
        assert_eq!(sh.build(&k).unwrap(), build_sharpness(&k, k.from_int(2)).unwrap().e);
        let json = serde_json::to_string(&sh).unwrap();
        assert_eq!(json, r#"{"kind":"sharpness","q":5,"i":"2"}"#);
        let sub = Construction::RandomSubset {
            q: 5,
            parent: Box::new(Construction::Variety { q: 5, i: "1".into() }),
            size: 17,
            seed: 3,
        };
        let back: Construction = serde_json::from_str(&serde_json::to_string(&sub).unwrap()).unwrap();
        assert_eq!(back.build(&k).unwrap(), sub.build(&k).unwrap());
        assert_eq!(sub.build(&k).unwrap().len(), 17);
        let prod = Construction::Product { q: 5, rows1: 25, rows2: 25, seed: None };
        assert_eq!(prod.build(&k).unwrap(), MatSet::full(&k));
        let seeded = Construction::Product { q: 5, rows1: 4, rows2: 6, seed: Some(1) };
        assert_eq!(seeded.build(&k).unwrap().len(), 24);
        assert!(Construction::Full { q: 7 }.build(&k).is_err());
        assert!(Construction::Product { q: 5, rows1: 26, rows2: 1, seed: None }.build(&k).is_err());
    }

    #[test]
    fn sl2_inside_f9() {
        let k = ctx("9");
        let e = sl2_prime_subfield(&k).unwrap();
        assert_eq!(e.len(), 24);
        assert!(e.is_subset(&variety(&k, Fq::ONE)).unwrap());
        let four = iterate_sumset(&k, &e, 4).unwrap();
        assert!(four.is_subset(&prime_subfield_matrices(&k).unwrap()).unwrap());
        for d in det_set(&k, &four).unwrap() {
            assert!(k.is_in_prime_subfield(d));
        }
        assert!(sl2_prime_subfield(&ctx("27")).is_err());
    }
}
