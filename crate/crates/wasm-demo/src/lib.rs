//! Browser bindings for three interactive views: one sampled walk, the
//! normalized excursion curve across n, and the ε-net levels of a stream.
//!
//! Each view has a plain Rust function returning `kwise_core::Result` and a
//! `#[wasm_bindgen]` wrapper that converts errors into JS exceptions.

use kwise_core::rng::trial_rng;
use kwise_core::streams::{NetHierarchy, StreamKind};
use kwise_core::walks::{prefix_sums, scaling_table};
use kwise_core::{Error, FamilySpec, Result, Sampler, Stage};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Family names understood by the page.
pub const FAMILIES: [&str; 6] = ["H", "H1", "H2", "H3", "4-wise", "full"];

/// Domain sizes on the scaling curve.
pub const CURVE_NS: [usize; 5] = [16, 64, 256, 1024, 4096];

pub fn family(name: &str, n: usize) -> Result<FamilySpec> {
    let spec = match name {
        "4-wise" => FamilySpec::kwise(n, 4, 0),
        "pairwise" => FamilySpec::kwise(n, 2, 0),
        "full" => FamilySpec::fully_independent(n, 0),
        other => FamilySpec::adversarial(n, other.parse::<Stage>()?, 0),
    };
    spec.validate()?;
    Ok(spec)
}

/// Prefix sums `S_0 = 0, S_1, …, S_n` of one sampled sign vector.
pub fn walk(name: &str, n: usize, seed: u64) -> Result<Vec<i64>> {
    let sampler = Sampler::new(&family(name, n)?)?;
    let h = sampler.sample(&mut trial_rng(seed, 0));
    Ok(prefix_sums(h.entries()))
}

/// `E[sup|S_t|^order] / n^{order/2}` at each n in `ns`.
pub fn curve(name: &str, ns: &[usize], order: u32, trials: u64, seed: u64) -> Result<Vec<f64>> {
    let first = *ns
        .first()
        .ok_or_else(|| Error::InvalidParameter("no domain sizes".into()))?;
    Ok(scaling_table(&family(name, first)?, ns, order, trials, seed)?.normalized())
}

#[derive(Debug, Serialize)]
pub struct NetView {
    pub stream: String,
    pub m: usize,
    pub norm_sq: u64,
    /// Squared norms of the prefix vectors, `||z^(t)||²` for t = 0..=m.
    pub prefix_norms_sq: Vec<u64>,
    /// Net times per level r = 0..=top.
    pub levels: Vec<Vec<usize>>,
}

pub fn net_view(stream: &str, m: usize, seed: u64) -> Result<NetView> {
    let kind: StreamKind = stream.parse()?;
    let s = kind.generate(m, m, seed)?;
    let nets = NetHierarchy::build(&s);
    Ok(NetView {
        stream: kind.to_string(),
        m,
        norm_sq: nets.norm_sq(),
        prefix_norms_sq: nets.prefix_norms_sq().to_vec(),
        levels: (0..=nets.top()).map(|r| nets.level(r).to_vec()).collect(),
    })
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub fn sample_walk(family: &str, n: usize, seed: u64) -> std::result::Result<Vec<i32>, JsError> {
    let s = walk(family, n, seed).map_err(js)?;
    Ok(s.into_iter().map(|v| v as i32).collect())
}

#[wasm_bindgen]
pub fn scaling_curve(
    family: &str,
    order: u32,
    trials: u32,
    seed: u64,
) -> std::result::Result<Vec<f64>, JsError> {
    curve(family, &CURVE_NS, order, trials as u64, seed).map_err(js)
}

#[wasm_bindgen]
pub fn curve_ns() -> Vec<u32> {
    CURVE_NS.iter().map(|&n| n as u32).collect()
}

/// JSON-encoded [`NetView`].
#[wasm_bindgen]
pub fn net_levels(stream: &str, m: usize, seed: u64) -> std::result::Result<String, JsError> {
    let view = net_view(stream, m, seed).map_err(js)?;
    serde_json::to_string(&view).map_err(|e| JsError::new(&e.to_string()))
}
