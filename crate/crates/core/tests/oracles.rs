//! Library results against independent brute-force oracles: plain `i64`
//! arithmetic mod p, hand-rolled `F_9 = F_3[i]`, and complex floating-point
//! character sums.

use std::collections::HashMap;
use std::f64::consts::PI;

use detsum::counting::{count_profile, spectral_counts, sum_profile};
use detsum::matrix::{det_set, sumset, variety};
use detsum::sample;
use detsum::transforms::{self, Flavor, TransformTable};
use detsum::{FieldCtx, Fq, Mat2, MatSet};
use num_complex::Complex64;

type M = [i64; 4];

fn ctx(q: &str) -> FieldCtx {
    FieldCtx::parse(q).unwrap()
}

fn to_int(k: &FieldCtx, a: Fq) -> i64 {
    k.coeffs(a)[0] as i64
}

fn to_mat(k: &FieldCtx, x: &M) -> Mat2 {
    Mat2(x.map(|v| k.from_int(v)))
}

fn from_mat(k: &FieldCtx, m: &Mat2) -> M {
    m.0.map(|v| to_int(k, v))
}

fn all_mats(p: i64) -> Vec<M> {
    let mut out = Vec::new();
    for a in 0..p {
        for b in 0..p {
            for c in 0..p {
                for d in 0..p {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

fn det_p(x: &M, p: i64) -> i64 {
    (x[0] * x[3] - x[1] * x[2]).rem_euclid(p)
}

fn add_p(x: &M, y: &M, p: i64) -> M {
    std::array::from_fn(|k| (x[k] + y[k]) % p)
}

fn legendre(a: i64, p: i64) -> i64 {
    let a = a.rem_euclid(p);
    if a == 0 {
        return 0;
    }
    if (1..p).any(|t| t * t % p == a) {
        1
    } else {
        -1
    }
}

fn chi(t: i64, p: i64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * t.rem_euclid(p) as f64 / p as f64)
}

fn random_set(k: &FieldCtx, size: usize, seed: u64) -> MatSet {
    sample::random_subset(k, &MatSet::full(k), size, seed).unwrap()
}

#[test]
fn variety_sizes_match_counting_formula() {
    for p in [3i64, 5, 7] {
        let k = ctx(&p.to_string());
        let mut hist = vec![0usize; p as usize];
        for x in all_mats(p) {
            hist[det_p(&x, p) as usize] += 1;
        }
        let q = p as usize;
        assert_eq!(hist[0], q.pow(3) + q * q - q);
        for t in 0..p {
            assert_eq!(variety(&k, k.from_int(t)).len(), hist[t as usize]);
            if t != 0 {
                assert_eq!(hist[t as usize], q.pow(3) - q);
            }
        }
    }
}

/// `F_9` as `a + b·i`, `i² = −1`, over `F_3`.
#[test]
fn f9_arithmetic_matches_gaussian_integers_mod_3() {
    let k = ctx("9");
    let mul = |(a, b): (i64, i64), (c, d): (i64, i64)| ((a * c - b * d).rem_euclid(3), (a * d + b * c).rem_euclid(3));
    let pair = |x: Fq| {
        let c = k.coeffs(x);
        (c[0] as i64, c[1] as i64)
    };
    for x in k.elements() {
        for y in k.elements() {
            assert_eq!(pair(k.mul(x, y)), mul(pair(x), pair(y)));
            let (a, b) = pair(x);
            let (c, d) = pair(y);
            assert_eq!(pair(k.add(x, y)), ((a + c) % 3, (b + d) % 3));
        }
        // Tr(a + bi) = 2a since the conjugate of i is −i.
        assert_eq!(k.trace(x) as i64, (2 * pair(x).0) % 3);
    }
}

#[test]
fn gauss_sums_match_complex_evaluation() {
    for p in [3i64, 5, 7, 11, 13] {
        let k = ctx(&p.to_string());
        for a in 1..p {
            let naive: Complex64 = (1..p).map(|t| chi(a * t, p) * legendre(t, p) as f64).sum();
            let lib = transforms::gauss_sum(&k, k.from_int(a)).unwrap().eval();
            assert!((naive - lib).norm() < 1e-9, "p={p} a={a}");
        }
        // Classical sign: G_1 = √p for p ≡ 1 (mod 4), i√p for p ≡ 3 (mod 4).
        let g1 = transforms::gauss_sum(&k, Fq::ONE).unwrap().eval();
        let root = (p as f64).sqrt();
        let expect = if p % 4 == 1 { Complex64::new(root, 0.0) } else { Complex64::new(0.0, root) };
        assert!((g1 - expect).norm() < 1e-9, "p={p}");
    }
}

#[test]
fn kloosterman_sums_match_complex_evaluation() {
    for p in [5i64, 7, 11] {
        let k = ctx(&p.to_string());
        let inv = |t: i64| (1..p).find(|u| u * t % p == 1).unwrap();
        for a in 0..p {
            for b in 0..p {
                let plain: Complex64 = (1..p).map(|t| chi(a * t + b * inv(t), p)).sum();
                let twisted: Complex64 = (1..p).map(|t| chi(a * t + b * inv(t), p) * legendre(t, p) as f64).sum();
                let (fa, fb) = (k.from_int(a), k.from_int(b));
                match transforms::kloosterman(&k, fa, fb, false) {
                    Ok(v) => assert!((plain - v.eval()).norm() < 1e-9),
                    Err(_) => assert!(a == 0 || b == 0),
                }
                assert!((twisted - transforms::kloosterman(&k, fa, fb, true).unwrap().eval()).norm() < 1e-9);
            }
        }
    }
}

#[test]
fn transform_table_matches_complex_dft() {
    let p = 3i64;
    let k = ctx("3");
    let mats = all_mats(p);
    let e = random_set(&k, 31, 8);
    let members: Vec<M> = e.mats().iter().map(|m| from_mat(&k, m)).collect();
    let dot = TransformTable::of_set(&k, &e, Flavor::Dot).unwrap();
    let odot = TransformTable::of_set(&k, &e, Flavor::Odot).unwrap();
    for m in &mats {
        let naive_dot: Complex64 = members
            .iter()
            .map(|x| chi(-(0..4).map(|i| m[i] * x[i]).sum::<i64>(), p))
            .sum();
        // x ⊙ y = x1 y4 − x2 y3 − x3 y2 + x4 y1.
        let naive_odot: Complex64 = members
            .iter()
            .map(|x| chi(-(x[0] * m[3] - x[1] * m[2] - x[2] * m[1] + x[3] * m[0]), p))
            .sum();
        let mm = to_mat(&k, m);
        assert!((dot.entry_at(&mm).eval() - naive_dot).norm() < 1e-9);
        assert!((odot.entry_at(&mm).eval() - naive_odot).norm() < 1e-9);
    }
}

#[test]
fn determinant_counts_match_pair_loops() {
    for (p, se, sf, seed) in [(3i64, 20, 50, 1u64), (5, 90, 130, 2), (7, 200, 60, 3)] {
        let k = ctx(&p.to_string());
        let e = random_set(&k, se, seed);
        let f = random_set(&k, sf, seed + 100);
        let em: Vec<M> = e.mats().iter().map(|m| from_mat(&k, m)).collect();
        let fm: Vec<M> = f.mats().iter().map(|m| from_mat(&k, m)).collect();
        let mut n = vec![0u64; p as usize];
        let mut w = vec![0u64; p as usize];
        let mut sums: HashMap<M, u128> = HashMap::new();
        for x in &em {
            for y in &fm {
                n[det_p(&add_p(x, y, p), p) as usize] += 1;
                let od = (x[0] * y[3] - x[1] * y[2] - x[2] * y[1] + x[3] * y[0]).rem_euclid(p);
                w[od as usize] += 1;
                *sums.entry(add_p(x, y, p)).or_default() += 1;
            }
        }
        let prof = count_profile(&k, &e, &f).unwrap();
        for t in 0..p {
            assert_eq!(prof.n_at(k.from_int(t)), n[t as usize]);
            assert_eq!(prof.w_at(k.from_int(t)), w[t as usize]);
        }
        let sp = sum_profile(&k, &e, &f).unwrap();
        assert_eq!(sp.sumset_size as usize, sums.len());
        assert_eq!(sp.energy, sums.values().map(|c| c * c).sum::<u128>());
        assert_eq!(sumset(&k, &e, &f).unwrap().len(), sums.len());
        let mut dets: Vec<i64> = sums.keys().map(|s| det_p(s, p)).collect();
        dets.sort_unstable();
        dets.dedup();
        let mut lib: Vec<i64> = det_set(&k, &sumset(&k, &e, &f).unwrap())
            .unwrap()
            .into_iter()
            .map(|d| to_int(&k, d))
            .collect();
        lib.sort_unstable();
        assert_eq!(lib, dets);
    }
}

/// `q⁴ N_t = Σ_m T_{D_t}(m) conj(T_E(m)) conj(T_F(m))`, evaluated in floating point.
#[test]
fn spectral_counts_match_float_evaluation() {
    let p = 3i64;
    let k = ctx("3");
    let mats = all_mats(p);
    let e = random_set(&k, 17, 5);
    let f = random_set(&k, 23, 6);
    let transform = |set: &[M], m: &M| -> Complex64 {
        set.iter()
            .map(|x| chi(-(0..4).map(|i| m[i] * x[i]).sum::<i64>(), p))
            .sum()
    };
    let em: Vec<M> = e.mats().iter().map(|m| from_mat(&k, m)).collect();
    let fm: Vec<M> = f.mats().iter().map(|m| from_mat(&k, m)).collect();
    let lib = spectral_counts(&k, &e, &f).unwrap();
    for t in 0..p {
        let dt: Vec<M> = mats.iter().copied().filter(|x| det_p(x, p) == t).collect();
        let total: Complex64 = mats
            .iter()
            .map(|m| transform(&dt, m) * transform(&em, m).conj() * transform(&fm, m).conj())
            .sum();
        let n = total / (p as f64).powi(4);
        assert!(n.im.abs() < 1e-6);
        assert_eq!(n.re.round() as i64, lib[t as usize], "t={t}");
    }
}

#[test]
fn sharpness_slice_and_sl2_sizes() {
    for p in [3i64, 5, 7, 11] {
        let k = ctx(&p.to_string());
        for i in (1..p).filter(|&i| legendre(i, p) == -1) {
            // x2 + x3 = 0 and x1 x4 + x2² = i.
            let h = all_mats(p)
                .into_iter()
                .filter(|x| (x[1] + x[2]) % p == 0 && (x[0] * x[3] + x[1] * x[1]) % p == i)
                .count();
            let sh = detsum::constructions::build_sharpness(&k, k.from_int(i)).unwrap();
            assert_eq!(sh.h.len(), h);
            assert_eq!(h as i64, p * (p - 1));
        }
    }
    // SL_2(F_3) has 3·(9 − 1) = 24 elements; inside F_9 they are the det-1 matrices over F_3.
    let naive = all_mats(3).into_iter().filter(|x| det_p(x, 3) == 1).count();
    assert_eq!(naive, 24);
    assert_eq!(detsum::constructions::sl2_prime_subfield(&ctx("9")).unwrap().len(), naive);
}

#[test]
fn auditors_match_float_sums() {
    let p = 5i64;
    let k = ctx("5");
    let dj = variety(&k, k.from_int(2));
    let f = sample::random_subset(&k, &dj, 12, 4).unwrap();
    let fm: Vec<M> = f.mats().iter().map(|m| from_mat(&k, m)).collect();
    let inv = |t: i64| (1..p).find(|u| u * t % p == 1).unwrap();
    let scale = |s: i64, y: &M| y.map(|v| s * v % p);
    let (i, ell) = (1i64, 3i64);
    let (mut vi, mut va, mut vb) = (Complex64::default(), Complex64::default(), Complex64::default());
    for y in &fm {
        for y2 in &fm {
            for s in 1..p {
                for s2 in 1..p {
                    let diff: M = std::array::from_fn(|c| (s2 * y2[c] - s * y[c]).rem_euclid(p));
                    if scale(s2, y2) == scale(s, y) {
                        vi += chi(ell * (s2 - s), p);
                    }
                    if det_p(&diff, p) == 0 {
                        for r in 1..p {
                            va += chi(-i * r + ell * (s2 - s), p);
                        }
                    }
                }
            }
            let d = det_p(&std::array::from_fn(|c| y2[c] - y[c]), p);
            if d != 0 {
                for r in 1..p {
                    for s in 1..p {
                        vb += chi(-i * r - s * s * d * inv(r), p);
                    }
                }
            }
        }
    }
    let (fi, fl) = (k.from_int(i), k.from_int(ell));
    let lib_i = transforms::audit_i(&k, &f, fl).unwrap();
    let lib_a = transforms::audit_a(&k, &f, fi, fl).unwrap();
    let lib_b = transforms::audit_b(&k, &f, fi).unwrap();
    for (lib, naive) in [(&lib_i, vi), (&lib_a, va), (&lib_b, vb)] {
        assert!(lib.is_real());
        assert!((lib.eval() - naive).norm() < 1e-6, "{lib} vs {naive}");
    }
}
