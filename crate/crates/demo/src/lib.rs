//! Browser bindings. Each export takes plain numbers/strings and returns a JSON
//! string for the page to draw; the same functions are callable natively.

use detsum::constructions;
use detsum::counting;
use detsum::matrix::{self, det_set, sumset, variety};
use detsum::sample;
use detsum::transforms;
use detsum::{FieldCtx, Fq};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest field the page offers; keeps every call well under a second.
pub const MAX_Q: u32 = 27;

fn field(q: &str) -> Result<FieldCtx, String> {
    let ctx = FieldCtx::parse(q).map_err(|e| e.to_string())?;
    if ctx.q() > MAX_Q {
        return Err(format!("q = {} is above the demo limit {MAX_Q}", ctx.q()));
    }
    Ok(ctx)
}

fn nonzero(ctx: &FieldCtx, text: &str, name: &str) -> Result<Fq, String> {
    let v = ctx.parse_elem(text).map_err(|e| e.to_string())?;
    if v.is_zero() {
        return Err(format!("{name} must be nonzero"));
    }
    Ok(v)
}

/// Histogram of `det(x + y)` over `E × F` for random `E ⊆ D_i`, `F ⊆ D_j`,
/// with the count bound `|N_t − |E||F|/q|`.
pub fn det_distribution_value(
    q: &str,
    i: &str,
    j: &str,
    e_size: usize,
    f_size: usize,
    seed: u64,
) -> Result<Value, String> {
    let ctx = field(q)?;
    let (fi, fj) = (nonzero(&ctx, i, "i")?, nonzero(&ctx, j, "j")?);
    let (di, dj) = (variety(&ctx, fi), variety(&ctx, fj));
    let e = sample::random_subset(&ctx, &di, e_size, sample::subseed(seed, &[0])).map_err(|e| e.to_string())?;
    let f = sample::random_subset(&ctx, &dj, f_size, sample::subseed(seed, &[1])).map_err(|e| e.to_string())?;
    let prof = counting::count_profile(&ctx, &e, &f).map_err(|e| e.to_string())?;
    let qf = ctx.q() as f64;
    let (ne, nf) = (e_size as f64, f_size as f64);
    let bound = (18.0 * qf * qf * ne * nf + 11.0 * ne * nf * nf + 4.0 * 7f64.sqrt() * qf * ne * nf.powf(1.5)).sqrt();
    let labels: Vec<String> = ctx.elements().map(|t| ctx.format_elem(t)).collect();
    Ok(json!({
        "q": ctx.q(),
        "variety_sizes": [di.len(), dj.len()],
        "labels": labels,
        "counts": prof.n,
        "mean": ne * nf / qf,
        "bound": bound,
        "full": prof.attained().len() == ctx.q() as usize,
    }))
}

/// The sharpness construction for a nonsquare `i`: `E ⊆ H_i` with `0 ∉ det(E + E)`.
pub fn sharpness_value(q: &str, i: &str) -> Result<Value, String> {
    let ctx = field(q)?;
    let fi = ctx.parse_elem(i).map_err(|e| e.to_string())?;
    let sh = constructions::build_sharpness(&ctx, fi).map_err(|e| e.to_string())?;
    let ee = sumset(&ctx, &sh.e, &sh.e).map_err(|e| e.to_string())?;
    let dets = det_set(&ctx, &ee).map_err(|e| e.to_string())?;
    let mats: Vec<String> = sh.e.mats().iter().map(|m| matrix::format_mat(&ctx, m)).collect();
    Ok(json!({
        "q": ctx.q(),
        "i": ctx.format_elem(fi),
        "nonsquares": constructions::nonsquares(&ctx).iter().map(|&a| ctx.format_elem(a)).collect::<Vec<_>>(),
        "h_size": sh.h.len(),
        "e": mats,
        "sumset_size": ee.len(),
        "determinants": dets.iter().map(|&d| ctx.format_elem(d)).collect::<Vec<_>>(),
        "zero_missing": !dets.contains(&Fq::ZERO),
    }))
}

/// Gauss sums `G_a` and Kloosterman sums `K(1, b)` as complex points.
pub fn character_sums_value(q: &str) -> Result<Value, String> {
    let ctx = field(q)?;
    let point = |v: &detsum::CycInt| {
        let z = v.eval();
        json!([z.re, z.im])
    };
    let mut gauss = Vec::new();
    let mut kloosterman = Vec::new();
    for a in ctx.nonzero() {
        gauss.push(point(&transforms::gauss_sum(&ctx, a).map_err(|e| e.to_string())?));
        kloosterman.push(point(&transforms::kloosterman(&ctx, Fq::ONE, a, false).map_err(|e| e.to_string())?));
    }
    let g1 = transforms::gauss_sum(&ctx, Fq::ONE).map_err(|e| e.to_string())?;
    Ok(json!({
        "q": ctx.q(),
        "sqrt_q": (ctx.q() as f64).sqrt(),
        "gauss": gauss,
        "kloosterman": kloosterman,
        "g1_exact": g1.to_string(),
        "g1_matches_prediction": g1 == transforms::gauss_sum_prediction(&ctx),
    }))
}

fn to_js(v: Result<Value, String>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn det_distribution(q: &str, i: &str, j: &str, e_size: usize, f_size: usize, seed: u32) -> Result<String, JsError> {
    to_js(det_distribution_value(q, i, j, e_size, f_size, seed as u64))
}

#[wasm_bindgen]
pub fn sharpness(q: &str, i: &str) -> Result<String, JsError> {
    to_js(sharpness_value(q, i))
}

#[wasm_bindgen]
pub fn character_sums(q: &str) -> Result<String, JsError> {
    to_js(character_sums_value(q))
}
