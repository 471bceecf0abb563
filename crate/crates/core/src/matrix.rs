//! `M_2(F_q)` viewed as the 4-tuple space `F_q^4`, with dense membership sets.

use rayon::prelude::*;
use serde::ser::{Serialize, SerializeSeq, Serializer};
use thiserror::Error;

use crate::field::{FieldCtx, FieldError, Fq};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MatrixError {
    #[error("matrix sets belong to different fields ({0} vs {1})")]
    CtxMismatch(String, String),
    #[error("iterated sumset needs at least one term")]
    ZeroTerms,
    #[error("index {0} is outside the ring of order {1}")]
    IndexOutOfRange(u64, u64),
    #[error("cannot parse matrix {text:?}: {reason}")]
    Parse { text: String, reason: String },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// `[[x1, x2], [x3, x4]]`, stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mat2(pub [Fq; 4]);

impl Mat2 {
    pub const ZERO: Mat2 = Mat2([Fq::ZERO; 4]);
    pub const IDENTITY: Mat2 = Mat2([Fq::ONE, Fq::ZERO, Fq::ZERO, Fq::ONE]);

    pub fn new(x1: Fq, x2: Fq, x3: Fq, x4: Fq) -> Self {
        Mat2([x1, x2, x3, x4])
    }

    /// `idx(x1) + idx(x2)·q + idx(x3)·q² + idx(x4)·q³`.
    #[inline]
    pub fn index(&self, q: u32) -> usize {
        let q = q as usize;
        let [a, b, c, d] = self.0.map(|e| e.index() as usize);
        a + q * (b + q * (c + q * d))
    }

    #[inline]
    pub fn from_index(index: usize, q: u32) -> Self {
        let q = q as usize;
        Mat2([
            Fq::from_index((index % q) as u32),
            Fq::from_index((index / q % q) as u32),
            Fq::from_index((index / (q * q) % q) as u32),
            Fq::from_index((index / (q * q * q)) as u32),
        ])
    }

    /// First row `(x1, x2)`.
    pub fn row1(&self) -> (Fq, Fq) {
        (self.0[0], self.0[1])
    }

    /// Second row `(x3, x4)`.
    pub fn row2(&self) -> (Fq, Fq) {
        (self.0[2], self.0[3])
    }
}

/// `x1 x4 − x2 x3`.
#[inline]
pub fn det(ctx: &FieldCtx, x: &Mat2) -> Fq {
    let [a, b, c, d] = x.0;
    ctx.sub(ctx.mul(a, d), ctx.mul(b, c))
}

/// `x1 y4 − x2 y3 − x3 y2 + x4 y1`, the polarization of the determinant.
#[inline]
pub fn odot(ctx: &FieldCtx, x: &Mat2, y: &Mat2) -> Fq {
    let [x1, x2, x3, x4] = x.0;
    let [y1, y2, y3, y4] = y.0;
    let plus = ctx.add(ctx.mul(x1, y4), ctx.mul(x4, y1));
    let minus = ctx.add(ctx.mul(x2, y3), ctx.mul(x3, y2));
    ctx.sub(plus, minus)
}

/// Ordinary dot product on `F_q^4`.
#[inline]
pub fn dot(ctx: &FieldCtx, x: &Mat2, y: &Mat2) -> Fq {
    (0..4).fold(Fq::ZERO, |acc, k| ctx.add(acc, ctx.mul(x.0[k], y.0[k])))
}

#[inline]
pub fn add(ctx: &FieldCtx, x: &Mat2, y: &Mat2) -> Mat2 {
    Mat2(std::array::from_fn(|k| ctx.add(x.0[k], y.0[k])))
}

#[inline]
pub fn sub(ctx: &FieldCtx, x: &Mat2, y: &Mat2) -> Mat2 {
    Mat2(std::array::from_fn(|k| ctx.sub(x.0[k], y.0[k])))
}

#[inline]
pub fn neg(ctx: &FieldCtx, x: &Mat2) -> Mat2 {
    Mat2(x.0.map(|e| ctx.neg(e)))
}

#[inline]
pub fn scale(ctx: &FieldCtx, c: Fq, x: &Mat2) -> Mat2 {
    Mat2(x.0.map(|e| ctx.mul(c, e)))
}

/// `[a,b;c,d]`. Entries of extension fields are parenthesized coefficient
/// lists, e.g. `[(0,1),1;2,(1,1)]` over `F_9`.
pub fn format_mat(ctx: &FieldCtx, x: &Mat2) -> String {
    let e = |v: Fq| {
        if ctx.n() == 1 {
            ctx.format_elem(v)
        } else {
            format!("({})", ctx.format_elem(v))
        }
    };
    let [a, b, c, d] = x.0;
    format!("[{},{};{},{}]", e(a), e(b), e(c), e(d))
}

pub fn parse_mat(ctx: &FieldCtx, text: &str) -> Result<Mat2, MatrixError> {
    let bad = |reason: &str| MatrixError::Parse {
        text: text.to_string(),
        reason: reason.to_string(),
    };
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| bad("expected [a,b;c,d]"))?;
    let (r1, r2) = inner.split_once(';').ok_or_else(|| bad("missing ';'"))?;
    let mut entries = Vec::with_capacity(4);
    for row in [r1, r2] {
        let parts = split_entries(row).ok_or_else(|| bad("unbalanced parentheses"))?;
        if parts.len() != 2 {
            return Err(bad("each row needs two entries"));
        }
        for part in parts {
            let body = part
                .trim()
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .unwrap_or(part.trim());
            entries.push(ctx.parse_elem(body)?);
        }
    }
    Ok(Mat2([entries[0], entries[1], entries[2], entries[3]]))
}

fn split_entries(row: &str) -> Option<Vec<&str>> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, ch) in row.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(&row[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return None;
        }
    }
    (depth == 0).then(|| {
        out.push(&row[start..]);
        out
    })
}

/// A subset of `M_2(F_q)` as a bitset over ring indices.
#[derive(Clone, PartialEq, Eq)]
pub struct MatSet {
    p: u32,
    n: u32,
    q: u32,
    bits: Vec<u64>,
    len: usize,
}

impl std::fmt::Debug for MatSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MatSet(q={}, |S|={})", self.q, self.len)
    }
}

impl Serialize for MatSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(self.len))?;
        for i in self.indices() {
            seq.serialize_element(&(i as u64))?;
        }
        seq.end()
    }
}

impl MatSet {
    pub fn empty(ctx: &FieldCtx) -> Self {
        let size = ring_size(ctx);
        MatSet {
            p: ctx.p(),
            n: ctx.n(),
            q: ctx.q(),
            bits: vec![0; size.div_ceil(64)],
            len: 0,
        }
    }

    pub fn full(ctx: &FieldCtx) -> Self {
        let mut s = Self::empty(ctx);
        for i in 0..ring_size(ctx) {
            s.bits[i / 64] |= 1 << (i % 64);
        }
        s.len = ring_size(ctx);
        s
    }

    /// All matrices satisfying `pred`, scanned in parallel over disjoint words.
    pub fn from_predicate<P>(ctx: &FieldCtx, pred: P) -> Self
    where
        P: Fn(&Mat2) -> bool + Sync,
    {
        let size = ring_size(ctx);
        let q = ctx.q();
        let mut s = Self::empty(ctx);
        s.bits.par_iter_mut().enumerate().for_each(|(w, word)| {
            let base = w * 64;
            for b in 0..64.min(size - base) {
                if pred(&Mat2::from_index(base + b, q)) {
                    *word |= 1 << b;
                }
            }
        });
        s.recount();
        s
    }

    pub fn from_mats<'a, I>(ctx: &FieldCtx, mats: I) -> Self
    where
        I: IntoIterator<Item = &'a Mat2>,
    {
        let mut s = Self::empty(ctx);
        for m in mats {
            s.insert_index(m.index(ctx.q()));
        }
        s
    }

    pub fn from_indices<I>(ctx: &FieldCtx, indices: I) -> Result<Self, MatrixError>
    where
        I: IntoIterator<Item = u64>,
    {
        let mut s = Self::empty(ctx);
        let size = ring_size(ctx) as u64;
        for i in indices {
            if i >= size {
                return Err(MatrixError::IndexOutOfRange(i, size));
            }
            s.insert_index(i as usize);
        }
        Ok(s)
    }

    /// Parses the JSON index-list form produced by `serde_json::to_string`.
    pub fn from_json(ctx: &FieldCtx, json: &str) -> Result<Self, MatrixError> {
        let list: Vec<u64> = serde_json::from_str(json).map_err(|e| MatrixError::Parse {
            text: json.chars().take(40).collect(),
            reason: e.to_string(),
        })?;
        Self::from_indices(ctx, list)
    }

    fn recount(&mut self) {
        self.len = self.bits.iter().map(|w| w.count_ones() as usize).sum();
    }

    #[inline]
    pub fn insert_index(&mut self, i: usize) -> bool {
        let (w, b) = (i / 64, 1u64 << (i % 64));
        let fresh = self.bits[w] & b == 0;
        if fresh {
            self.bits[w] |= b;
            self.len += 1;
        }
        fresh
    }

    pub fn insert(&mut self, m: &Mat2) -> bool {
        self.insert_index(m.index(self.q))
    }

    #[inline]
    pub fn contains_index(&self, i: usize) -> bool {
        self.bits[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn contains(&self, m: &Mat2) -> bool {
        self.contains_index(m.index(self.q))
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// Ring indices in ascending order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(w * 64 + b)
            })
        })
    }

    pub fn mats(&self) -> Vec<Mat2> {
        self.indices().map(|i| Mat2::from_index(i, self.q)).collect()
    }

    pub fn same_ring(&self, other: &MatSet) -> Result<(), MatrixError> {
        if (self.p, self.n) == (other.p, other.n) {
            Ok(())
        } else {
            Err(MatrixError::CtxMismatch(
                format!("{}^{}", self.p, self.n),
                format!("{}^{}", other.p, other.n),
            ))
        }
    }

    pub fn check_ctx(&self, ctx: &FieldCtx) -> Result<(), MatrixError> {
        if (self.p, self.n) == (ctx.p(), ctx.n()) {
            Ok(())
        } else {
            Err(MatrixError::CtxMismatch(
                format!("{}^{}", self.p, self.n),
                format!("{}^{}", ctx.p(), ctx.n()),
            ))
        }
    }

    fn zip_words(&self, other: &MatSet, f: impl Fn(u64, u64) -> u64) -> Result<MatSet, MatrixError> {
        self.same_ring(other)?;
        let mut out = self.clone();
        for (w, o) in out.bits.iter_mut().zip(&other.bits) {
            *w = f(*w, *o);
        }
        out.recount();
        Ok(out)
    }

    pub fn union(&self, other: &MatSet) -> Result<MatSet, MatrixError> {
        self.zip_words(other, |a, b| a | b)
    }

    pub fn intersect(&self, other: &MatSet) -> Result<MatSet, MatrixError> {
        self.zip_words(other, |a, b| a & b)
    }

    pub fn difference(&self, other: &MatSet) -> Result<MatSet, MatrixError> {
        self.zip_words(other, |a, b| a & !b)
    }

    pub fn is_subset(&self, other: &MatSet) -> Result<bool, MatrixError> {
        Ok(self.difference(other)?.is_empty())
    }

    pub fn complement(&self) -> MatSet {
        let size = (self.q as usize).pow(4);
        let mut out = self.clone();
        for w in &mut out.bits {
            *w = !*w;
        }
        let tail = size % 64;
        if tail != 0 {
            *out.bits.last_mut().unwrap() &= (1u64 << tail) - 1;
        }
        out.recount();
        out
    }

    /// `{-x : x ∈ S}`.
    pub fn negate(&self, ctx: &FieldCtx) -> Result<MatSet, MatrixError> {
        self.map(ctx, |x| neg(ctx, x))
    }

    /// `{c x : x ∈ S}`.
    pub fn scale(&self, ctx: &FieldCtx, c: Fq) -> Result<MatSet, MatrixError> {
        self.map(ctx, |x| scale(ctx, c, x))
    }

    fn map(&self, ctx: &FieldCtx, f: impl Fn(&Mat2) -> Mat2) -> Result<MatSet, MatrixError> {
        self.check_ctx(ctx)?;
        let mut out = MatSet::empty(ctx);
        for x in self.mats() {
            out.insert(&f(&x));
        }
        Ok(out)
    }

    /// Elements as coordinate quadruples, the form the hot loops use.
    pub fn coords(&self) -> Vec<[u32; 4]> {
        self.mats().iter().map(|m| m.0.map(Fq::index)).collect()
    }
}

pub fn ring_size(ctx: &FieldCtx) -> usize {
    (ctx.q() as usize).pow(4)
}

/// `D_i = {x : det x = i}`.
pub fn variety(ctx: &FieldCtx, i: Fq) -> MatSet {
    MatSet::from_predicate(ctx, |x| det(ctx, x) == i)
}

/// `{det x : x ∈ S}`, ascending.
pub fn det_set(ctx: &FieldCtx, s: &MatSet) -> Result<Vec<Fq>, MatrixError> {
    s.check_ctx(ctx)?;
    let mut hit = vec![false; ctx.q() as usize];
    for x in s.mats() {
        hit[det(ctx, &x).index() as usize] = true;
    }
    Ok(ctx.elements().filter(|a| hit[a.index() as usize]).collect())
}

/// `A + B`. The outer loop runs over the smaller set, split across workers that
/// each mark a private bitset; the bitsets are OR-merged.
pub fn sumset(ctx: &FieldCtx, a: &MatSet, b: &MatSet) -> Result<MatSet, MatrixError> {
    a.check_ctx(ctx)?;
    a.same_ring(b)?;
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let outer = small.coords();
    let inner = large.coords();
    let q = ctx.q() as usize;
    let words = a.bits.len();
    let bits = outer
        .par_chunks(16)
        .fold(
            || vec![0u64; words],
            |mut acc, chunk| {
                for x in chunk {
                    for y in &inner {
                        let i = sum_index(ctx, x, y, q);
                        acc[i / 64] |= 1 << (i % 64);
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; words],
            |mut l, r| {
                for (a, b) in l.iter_mut().zip(r) {
                    *a |= b;
                }
                l
            },
        );
    let mut out = MatSet::empty(ctx);
    out.bits = bits;
    out.recount();
    Ok(out)
}

#[inline]
pub(crate) fn sum_index(ctx: &FieldCtx, x: &[u32; 4], y: &[u32; 4], q: usize) -> usize {
    let s = |k: usize| ctx.add(Fq::from_index(x[k]), Fq::from_index(y[k])).index() as usize;
    s(0) + q * (s(1) + q * (s(2) + q * s(3)))
}

/// `kE = E + … + E` (`k` terms), built by repeated addition of `E`.
pub fn iterate_sumset(ctx: &FieldCtx, e: &MatSet, k: usize) -> Result<MatSet, MatrixError> {
    if k == 0 {
        return Err(MatrixError::ZeroTerms);
    }
    e.check_ctx(ctx)?;
    let mut acc = e.clone();
    let full = ring_size(ctx);
    for _ in 1..k {
        if acc.len() == full || acc.is_empty() {
            break;
        }
        acc = sumset(ctx, &acc, e)?;
    }
    Ok(acc)
}
