//! Browser bindings for the cone sampler.
//!
//! Three operations back the demo page: a 3-d scatter of cone draws, a
//! cosine-band comparison of cone sampling against additive noise, and a
//! small bound sweep with the full metric report per bound. Each returns
//! its result as a JSON string so the page needs nothing but `JSON.parse`
//! and a canvas.
//!
//! Inputs are capped well below anything slow; a single-threaded wasm
//! build stays interactive. The same functions compile natively, which is
//! how they are tested.

use cone_sampler::{
    generate_reference_set, noise_perturb, rotate_toward, run_lb_sweep, sample_cosine,
    sample_tangent, stream_for, ConeSpec, GenerationConfig, StreamDomain, UnitVector,
};
use serde_json::json;
use wasm_bindgen::prelude::*;

const MAX_DRAWS: u32 = 20_000;
const MAX_IDENTITIES: u32 = 100;
const MAX_PER_IDENTITY: u32 = 30;
const MAX_DIM: u32 = 256;
const MAX_BOUNDS: usize = 8;

fn check(condition: bool, message: &str) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(message.to_string())
    }
}

/// Draws `count` unit vectors inside the cone of cosine bound `lb` around
/// the z axis and returns them as JSON `{lb, count, points: [[x,y,z],..]}`.
#[wasm_bindgen]
pub fn cone_scatter(lb: f64, count: u32, seed: u64) -> Result<String, String> {
    check(count >= 1 && count <= MAX_DRAWS, "count must be between 1 and 20000")?;
    let spec = ConeSpec::new(lb).map_err(|e| e.to_string())?;
    let axis = UnitVector::new(vec![0.0, 0.0, 1.0]).map_err(|e| e.to_string())?;
    let mut rng = stream_for(seed, StreamDomain::Identity, 0);
    let mut points = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let draw = sample_cosine(&spec, &mut rng);
        let u = sample_tangent(&axis, &mut rng).map_err(|e| e.to_string())?;
        let v = rotate_toward(&axis, &u, draw.angle).map_err(|e| e.to_string())?;
        let p = v.as_slice();
        points.push([p[0], p[1], p[2]]);
    }
    Ok(json!({ "lb": lb, "count": count, "points": points }).to_string())
}

/// Compares cone draws against additive Gaussian noise at the same base
/// vector: `count` cosines per method at dimension `dim`, plus the
/// fraction of each that fell below the band edge `lb`.
#[wasm_bindgen]
pub fn band_leak_comparison(
    lb: f64,
    sigma: f64,
    dim: u32,
    count: u32,
    seed: u64,
) -> Result<String, String> {
    check(count >= 1 && count <= MAX_DRAWS, "count must be between 1 and 20000")?;
    check(dim >= 2 && dim <= MAX_DIM, "dim must be between 2 and 256")?;
    let spec = ConeSpec::new(lb).map_err(|e| e.to_string())?;
    let mut rng = stream_for(seed, StreamDomain::Identity, 0);
    let base = {
        let mut raw = vec![0.0; dim as usize];
        raw[0] = 1.0;
        UnitVector::new(raw).map_err(|e| e.to_string())?
    };

    let mut cone = Vec::with_capacity(count as usize);
    let mut noise = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let draw = sample_cosine(&spec, &mut rng);
        let u = sample_tangent(&base, &mut rng).map_err(|e| e.to_string())?;
        let v = rotate_toward(&base, &u, draw.angle).map_err(|e| e.to_string())?;
        cone.push(cone_sampler::dot(v.as_slice(), base.as_slice()));
        let n = noise_perturb(&base, sigma, &mut rng).map_err(|e| e.to_string())?;
        noise.push(cone_sampler::dot(n.as_slice(), base.as_slice()));
    }
    let leak = |xs: &[f64]| xs.iter().filter(|&&c| c < lb - 1e-9).count() as f64 / xs.len() as f64;
    Ok(json!({
        "lb": lb,
        "sigma": sigma,
        "dim": dim,
        "cone": cone,
        "noise": noise,
        "cone_leak": leak(&cone),
        "noise_leak": leak(&noise),
    })
    .to_string())
}

/// Generates a reference set and evaluates one dataset per cone bound,
/// returning the sweep report JSON (entries ordered tightest bound first).
#[wasm_bindgen]
pub fn bound_sweep_preview(
    ids: u32,
    dim: u32,
    k: u32,
    seed: u64,
    observation_cone: f64,
    bounds_csv: &str,
) -> Result<String, String> {
    check(ids >= 2 && ids <= MAX_IDENTITIES, "ids must be between 2 and 100")?;
    check(dim >= 2 && dim <= MAX_DIM, "dim must be between 2 and 256")?;
    check(k >= 2 && k <= MAX_PER_IDENTITY, "k must be between 2 and 30")?;
    let bounds: Vec<f64> = bounds_csv
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("not a number: {s:?}")))
        .collect::<Result<_, _>>()?;
    check(
        !bounds.is_empty() && bounds.len() <= MAX_BOUNDS,
        "need between 1 and 8 bounds",
    )?;

    let refs = generate_reference_set(ids as usize, dim as usize, 0.5, seed)
        .map_err(|e| e.to_string())?;
    let cfg = GenerationConfig {
        lower_bound: bounds[0],
        samples_per_identity: k,
        base_seed: seed,
        dim: dim as usize,
        observation_cone,
    };
    let sweep = run_lb_sweep(&refs, &cfg, &bounds).map_err(|e| e.to_string())?;
    sweep.to_json_pretty().map_err(|e| e.to_string())
}
