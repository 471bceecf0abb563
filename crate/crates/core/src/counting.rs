//! Exact pair counts `N_t`, `W_ℓ`, additive energy, and the explicit-constant
//! bounds checked against them.
//!
//! `N_t` counts pairs `(x, y) ∈ E × F` with `det(x + y) = t`; `W_ℓ` counts pairs
//! with `x ⊙ y = ℓ`. Both come out of one pass, since
//! `x ⊙ y = det(x + y) − det x − det y`.

use rayon::prelude::*;
use thiserror::Error;

use crate::constructions::product_set;
use crate::cyclotomic::{CycError, CycInt};
use crate::field::{FieldCtx, Fq};
use crate::matrix::{self, det_set, sumset, variety, Mat2, MatSet, MatrixError};
use crate::report::{Direction, Record};
use crate::transforms::{Flavor, TransformError, TransformTable};

/// Largest number of `(x, y)` pairs a single enumeration may visit.
pub const PAIR_CAP: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountError {
    #[error("{pairs} pairs exceed the enumeration cap of {cap}")]
    TooManyPairs { pairs: u128, cap: u128 },
    #[error("set is not contained in D_{0}")]
    NotInVariety(String),
    #[error("{0} must be nonzero")]
    ZeroArgument(&'static str),
    #[error("spectral sum {0} is not an integer multiple of q^4")]
    NotDivisible(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Cyc(#[from] CycError),
}

type Result<T> = std::result::Result<T, CountError>;

pub fn check_pair_cap(e: usize, f: usize) -> Result<()> {
    let pairs = e as u128 * f as u128;
    if pairs > PAIR_CAP {
        return Err(CountError::TooManyPairs {
            pairs,
            cap: PAIR_CAP,
        });
    }
    Ok(())
}

/// Errors unless every element of `s` has determinant `i`.
pub fn require_variety(ctx: &FieldCtx, s: &MatSet, i: Fq) -> Result<()> {
    s.check_ctx(ctx)?;
    if s.mats().iter().all(|x| matrix::det(ctx, x) == i) {
        Ok(())
    } else {
        Err(CountError::NotInVariety(ctx.format_elem(i)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountProfile {
    pub q: u32,
    pub e_size: u64,
    pub f_size: u64,
    /// `N_t` by field index of `t`.
    pub n: Vec<u64>,
    /// `W_ℓ` by field index of `ℓ`.
    pub w: Vec<u64>,
}

impl CountProfile {
    pub fn pairs(&self) -> u64 {
        self.e_size * self.f_size
    }

    pub fn n_at(&self, t: Fq) -> u64 {
        self.n[t.index() as usize]
    }

    pub fn w_at(&self, l: Fq) -> u64 {
        self.w[l.index() as usize]
    }

    /// `q·N_t − |E||F|`, i.e. `q` times the deviation from the mean.
    pub fn n_excess(&self, t: Fq) -> i128 {
        self.q as i128 * self.n_at(t) as i128 - self.pairs() as i128
    }

    /// `q·R_ℓ = q·W_ℓ − |E||F|`.
    pub fn r_numerator(&self, l: Fq) -> i128 {
        self.q as i128 * self.w_at(l) as i128 - self.pairs() as i128
    }

    /// `M = max_ℓ W_ℓ`.
    pub fn max_w(&self) -> u64 {
        self.w.iter().copied().max().unwrap_or(0)
    }

    pub fn max_n(&self) -> u64 {
        self.n.iter().copied().max().unwrap_or(0)
    }

    /// `det(E + F)` read off as `{t : N_t > 0}`.
    pub fn attained(&self) -> Vec<Fq> {
        (0..self.q)
            .filter(|&t| self.n[t as usize] > 0)
            .map(Fq::from_index)
            .collect()
    }
}

fn merge_add(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

pub fn count_profile(ctx: &FieldCtx, e: &MatSet, f: &MatSet) -> Result<CountProfile> {
    e.check_ctx(ctx)?;
    e.same_ring(f)?;
    check_pair_cap(e.len(), f.len())?;
    let q = ctx.q() as usize;
    let with_det = |s: &MatSet| -> Vec<(Mat2, Fq)> {
        s.mats().into_iter().map(|x| (x, matrix::det(ctx, &x))).collect()
    };
    let es = with_det(e);
    let fs = with_det(f);
    let tallies = es
        .par_chunks(8)
        .fold(
            || vec![0u64; 2 * q],
            |mut acc, chunk| {
                for (x, dx) in chunk {
                    for (y, dy) in &fs {
                        let t = matrix::det(ctx, &matrix::add(ctx, x, y));
                        let l = ctx.sub(ctx.sub(t, *dx), *dy);
                        acc[t.index() as usize] += 1;
                        acc[q + l.index() as usize] += 1;
                    }
                }
                acc
            },
        )
        .reduce(|| vec![0u64; 2 * q], merge_add);
    Ok(CountProfile {
        q: ctx.q(),
        e_size: e.len() as u64,
        f_size: f.len() as u64,
        n: tallies[..q].to_vec(),
        w: tallies[q..].to_vec(),
    })
}

/// Representation counts of `E + F` and the quantities built from them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SumProfile {
    /// `Λ(E, F) = #{x + y = z + w}` `= Σ_v c(v)²`.
    pub energy: u128,
    /// `|E + F|`.
    pub sumset_size: u64,
}

pub fn sum_profile(ctx: &FieldCtx, e: &MatSet, f: &MatSet) -> Result<SumProfile> {
    e.check_ctx(ctx)?;
    e.same_ring(f)?;
    check_pair_cap(e.len(), f.len())?;
    let size = matrix::ring_size(ctx);
    let q = ctx.q() as usize;
    let es = e.coords();
    let fs = f.coords();
    let counts = es
        .par_chunks(64)
        .fold(
            || vec![0u64; size],
            |mut acc, chunk| {
                for x in chunk {
                    for y in &fs {
                        acc[matrix::sum_index(ctx, x, y, q)] += 1;
                    }
                }
                acc
            },
        )
        .reduce(|| vec![0u64; size], merge_add);
    Ok(SumProfile {
        energy: counts.iter().map(|&c| c as u128 * c as u128).sum(),
        sumset_size: counts.iter().filter(|&&c| c > 0).count() as u64,
    })
}

/// `N_t` for every `t` through `q⁴ N_t = Σ_m T_{D_t}(m) conj(T_E(m)) conj(T_F(m))`,
/// with `T` the un-normalized dot transform.
pub fn spectral_counts(ctx: &FieldCtx, e: &MatSet, f: &MatSet) -> Result<Vec<i64>> {
    e.same_ring(f)?;
    let te = TransformTable::of_set(ctx, e, Flavor::Dot)?;
    let tf = TransformTable::of_set(ctx, f, Flavor::Dot)?;
    let conj_ef: Vec<CycInt> = (0..te.len())
        .into_par_iter()
        .map(|m| te.entry(m).conj().try_mul(&tf.entry(m).conj()))
        .collect::<std::result::Result<_, _>>()?;
    let q4 = (ctx.q() as i64).pow(4);
    ctx.elements()
        .map(|t| {
            let td = TransformTable::of_set(ctx, &variety(ctx, t), Flavor::Dot)?;
            let total = conj_ef
                .par_iter()
                .enumerate()
                .map(|(m, ef)| td.entry(m).try_mul(ef))
                .try_reduce(
                    || CycInt::zero(ctx.p()).unwrap(),
                    |a, b| a.try_add(&b),
                )?;
            match total.as_integer() {
                Some(v) if v % q4 == 0 => Ok(v / q4),
                _ => Err(CountError::NotDivisible(total.to_string())),
            }
        })
        .collect()
}

/// `N_t` for one `t` by the spectral identity.
pub fn spectral_count(ctx: &FieldCtx, e: &MatSet, f: &MatSet, t: Fq) -> Result<i64> {
    Ok(spectral_counts(ctx, e, f)?[t.index() as usize])
}

/// `|N_t − |E||F|/q| ≤ √(18q²|E||F| + 11|E||F|² + 4√7 q|E||F|^{3/2})` for every `t`,
/// for `E ⊆ D_i`, `F ⊆ D_j`, `i, j ≠ 0`. Returns the worst `t` plus the two
/// exact bookkeeping identities `Σ_t N_t = |E||F|` and `N_{ℓ+i+j} = W_ℓ`.
pub fn check_mainthm_bound(
    ctx: &FieldCtx,
    e: &MatSet,
    f: &MatSet,
    i: Fq,
    j: Fq,
) -> Result<Vec<Record>> {
    if i.is_zero() || j.is_zero() {
        return Err(CountError::ZeroArgument("i and j"));
    }
    require_variety(ctx, e, i)?;
    require_variety(ctx, f, j)?;
    let prof = count_profile(ctx, e, f)?;
    let q = ctx.q() as f64;
    let (ne, nf) = (e.len() as f64, f.len() as f64);
    let bound = (18.0 * q * q * ne * nf
        + 11.0 * ne * nf * nf
        + 4.0 * 7f64.sqrt() * q * ne * nf.powf(1.5))
    .sqrt();
    let tag = |r: Record| {
        r.with_sizes(e.len(), f.len())
            .with_varieties(ctx.format_elem(i), ctx.format_elem(j))
    };
    let worst = ctx
        .elements()
        .max_by_key(|&t| prof.n_excess(t).unsigned_abs())
        .expect("field is nonempty");
    let dev = prof.n_excess(worst).unsigned_abs() as f64 / q;
    let mut out = vec![tag(Record::upper("mainthm-deviation", ctx.q(), dev, bound))
        .with_index(ctx.format_elem(worst))];
    out.extend(bookkeeping(ctx, &prof, i, j).into_iter().map(tag));
    Ok(out)
}

/// `Σ_t N_t = Σ_ℓ W_ℓ = |E||F|` and `N_{ℓ+i+j} = W_ℓ` for all `ℓ`.
pub fn bookkeeping(ctx: &FieldCtx, prof: &CountProfile, i: Fq, j: Fq) -> Vec<Record> {
    let total_n: u64 = prof.n.iter().sum();
    let total_w: u64 = prof.w.iter().sum();
    let shift_ok = ctx
        .elements()
        .filter(|&l| prof.w_at(l) == prof.n_at(ctx.add(l, ctx.add(i, j))))
        .count();
    vec![
        Record::equal("pair-total", ctx.q(), total_n as u128, prof.pairs() as u128),
        Record::equal("odot-pair-total", ctx.q(), total_w as u128, prof.pairs() as u128),
        Record::equal("shift-identity", ctx.q(), shift_ok as u128, ctx.q() as u128)
            .with_note("number of l with N_{l+i+j} = W_l"),
    ]
}

/// If `|E||F| ≥ 225 q⁴`, then `det(E + F) = F_q`; informational below the threshold.
pub fn check_main1(ctx: &FieldCtx, e: &MatSet, f: &MatSet, i: Fq, j: Fq) -> Result<Vec<Record>> {
    if i.is_zero() || j.is_zero() {
        return Err(CountError::ZeroArgument("i and j"));
    }
    require_variety(ctx, e, i)?;
    require_variety(ctx, f, j)?;
    check_pair_cap(e.len(), f.len())?;
    let dets = det_set(ctx, &sumset(ctx, e, f)?)?;
    let q = ctx.q();
    let meets = e.len() as u128 * f.len() as u128 >= 225 * (q as u128).pow(4);
    let missing: Vec<String> = ctx
        .elements()
        .filter(|t| !dets.contains(t))
        .map(|t| ctx.format_elem(t))
        .collect();
    let mut r = Record::exact(
        "main1-full-determinants",
        q,
        Direction::Equal,
        dets.len() as f64,
        q as f64,
        dets.len() == q as usize,
    )
    .with_sizes(e.len(), f.len())
    .with_varieties(ctx.format_elem(i), ctx.format_elem(j));
    if !missing.is_empty() {
        r = r.with_note(format!("missing {}", missing.join(" ")));
    }
    if !meets {
        r = r.informational();
        let note = r.note.take().map(|n| format!("; {n}")).unwrap_or_default();
        r = r.with_note(format!("below |E||F| >= 225 q^4{note}"));
    }
    Ok(vec![r])
}

/// `W_0 ≤ |E||F|/q + √2 q² |E|^{1/2}|F|^{1/2}` for arbitrary `E, F`.
pub fn check_w0_bound(ctx: &FieldCtx, e: &MatSet, f: &MatSet) -> Result<Record> {
    let prof = count_profile(ctx, e, f)?;
    let q = ctx.q() as f64;
    let (ne, nf) = (e.len() as f64, f.len() as f64);
    let rhs = ne * nf / q + 2f64.sqrt() * q * q * (ne * nf).sqrt();
    Ok(Record::upper("w0-bound", ctx.q(), prof.w_at(Fq::ZERO) as f64, rhs)
        .with_sizes(e.len(), f.len()))
}

/// `|E + F| · Λ(E, F) ≥ |E|²|F|²`, exact in integers, for nonempty `E, F`.
pub fn check_energy_sumset(ctx: &FieldCtx, e: &MatSet, f: &MatSet) -> Result<(Record, SumProfile)> {
    let sp = sum_profile(ctx, e, f)?;
    let lhs = sp.sumset_size as u128 * sp.energy;
    let rhs = (e.len() as u128 * f.len() as u128).pow(2);
    let r = Record::exact(
        "energy-sumset",
        ctx.q(),
        Direction::Lower,
        sp.sumset_size as f64,
        if sp.energy == 0 { 0.0 } else { rhs as f64 / sp.energy as f64 },
        lhs >= rhs,
    )
    .with_sizes(e.len(), f.len());
    Ok((r, sp))
}

/// Exact energy/sumset check plus empirical ratios for the bounds whose constants
/// are unspecified, for `E ⊆ D_i`, `F ⊆ D_j`.
pub fn energy_and_sumset_report(
    ctx: &FieldCtx,
    e: &MatSet,
    f: &MatSet,
    i: Fq,
    j: Fq,
) -> Result<Vec<Record>> {
    if i.is_zero() || j.is_zero() {
        return Err(CountError::ZeroArgument("i and j"));
    }
    require_variety(ctx, e, i)?;
    require_variety(ctx, f, j)?;
    let (cs, sp) = check_energy_sumset(ctx, e, f)?;
    let prof = count_profile(ctx, e, f)?;
    let q = ctx.q() as f64;
    let (ne, nf) = (e.len() as f64, f.len() as f64);
    let qi = ctx.q();
    let sumset = sp.sumset_size as f64;
    let (small, large) = (ne.min(nf), ne.max(nf));
    let mut out = vec![
        cs,
        Record::ratio(
            "energy-upper",
            qi,
            Direction::Upper,
            sp.energy as f64,
            ne * ne * nf / q + q * ne * nf + q * ne.powf(1.5) * nf.sqrt(),
        ),
        Record::ratio(
            "sumset-lower-three-term",
            qi,
            Direction::Lower,
            sumset,
            (q * nf).min(ne * nf / q).min(ne.sqrt() * nf.powf(1.5) / q),
        ),
        Record::ratio(
            "sumset-lower-two-term",
            qi,
            Direction::Lower,
            sumset,
            (q * large).min(small * large / q),
        ),
        Record::ratio(
            "max-det-count",
            qi,
            Direction::Upper,
            prof.max_n() as f64,
            ne * nf / q + q * (ne * nf).sqrt(),
        ),
        Record::ratio(
            "max-odot-count",
            qi,
            Direction::Upper,
            prof.max_w() as f64,
            ne * nf / q + q * (ne * nf).sqrt(),
        ),
    ];
    out.extend(bookkeeping(ctx, &prof, i, j));
    Ok(out
        .into_iter()
        .map(|r| {
            r.with_sizes(e.len(), f.len())
                .with_varieties(ctx.format_elem(i), ctx.format_elem(j))
        })
        .collect())
}

/// For arbitrary `E, F`: `|N_t − |E||F|/q| ≤ 2 q^{3/2} |E|^{1/2}|F|^{1/2}` for `t ≠ 0`,
/// and, when `|E||F| > 4q⁵`, every `t ≠ 0` is a determinant of `E + F`.
pub fn check_prop71(ctx: &FieldCtx, e: &MatSet, f: &MatSet) -> Result<Vec<Record>> {
    let prof = count_profile(ctx, e, f)?;
    let q = ctx.q() as f64;
    let (ne, nf) = (e.len() as f64, f.len() as f64);
    let bound = 2.0 * q.powf(1.5) * (ne * nf).sqrt();
    let worst = ctx
        .nonzero()
        .max_by_key(|&t| prof.n_excess(t).unsigned_abs())
        .expect("field has units");
    let dev = prof.n_excess(worst).unsigned_abs() as f64 / q;
    let hits = ctx.nonzero().filter(|&t| prof.n_at(t) > 0).count();
    let meets = e.len() as u128 * f.len() as u128 > 4 * (ctx.q() as u128).pow(5);
    let mut cover = Record::exact(
        "units-covered",
        ctx.q(),
        Direction::Equal,
        hits as f64,
        q - 1.0,
        hits == ctx.q() as usize - 1,
    );
    if !meets {
        cover = cover.informational().with_note("below |E||F| > 4 q^5");
    }
    Ok(vec![
        cover.with_sizes(e.len(), f.len()),
        Record::upper("unit-deviation", ctx.q(), dev, bound)
            .with_sizes(e.len(), f.len())
            .with_index(ctx.format_elem(worst)),
    ])
}

/// `||S ∩ D_i| − |S|/q| ≤ q^{1/2}|S|^{1/2}` for the product-type set with rows from `s1`, `s2`.
pub fn product_intersection_check(
    ctx: &FieldCtx,
    s1: &[(Fq, Fq)],
    s2: &[(Fq, Fq)],
    i: Fq,
) -> Result<Record> {
    if i.is_zero() {
        return Err(CountError::ZeroArgument("i"));
    }
    let s = product_set(ctx, s1, s2);
    let hit = s.intersect(&variety(ctx, i))?.len() as f64;
    let q = ctx.q() as f64;
    let size = s.len() as f64;
    Ok(Record::upper(
        "product-concentration",
        ctx.q(),
        (hit - size / q).abs(),
        q.sqrt() * size.sqrt(),
    )
    .with_sizes(s1.len(), s2.len())
    .with_i(ctx.format_elem(i)))
}
