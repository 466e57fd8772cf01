//! wasm-bindgen entry points for the browser demo in `www/`.
//!
//! Results go back to JS as flat `Float64Array`s; the page knows the stride.

use averaging_core::lattice::{LatticeBox, LatticePoint};
use averaging_core::series::{alpha_d, AsymptoticConstants};
use averaging_core::sim::{clt_statistic, simulate, SimConfig, TestFunction};
use averaging_core::walk::{avg_difference_kernel, heat_kernel, return_sequence_float};
use wasm_bindgen::prelude::*;

const MAX_STEPS: [usize; 3] = [4000, 800, 300];

fn js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

fn check_dim(d: usize, max: usize) -> Result<(), String> {
    if d == 0 || d > max {
        return Err(format!("d must be in 1..={max}"));
    }
    Ok(())
}

/// One run of the averaging process from a unit mass at the origin, read
/// along the first axis. Stride 3: `x, mass, heat kernel h_t(0, x)`.
#[wasm_bindgen]
pub fn mass_profile(d: usize, t: f64, seed: u64) -> Result<Vec<f64>, JsError> {
    js(profile(d, t, seed))
}

fn profile(d: usize, t: f64, seed: u64) -> Result<Vec<f64>, String> {
    check_dim(d, 2)?;
    if !(0.0..=2000.0).contains(&t) {
        return Err("t must be in [0, 2000]".into());
    }
    let cfg = SimConfig::point(d, t, seed);
    let field = simulate::<f64>(&cfg).map_err(|e| e.to_string())?;
    let r = cfg.radius() as i64;
    let heat = heat_kernel(d, t, &LatticePoint::origin(d), &LatticeBox::absorbing(d, r as usize).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let mut out = Vec::with_capacity(3 * (2 * r as usize + 1));
    for x in -r..=r {
        let mut c = vec![0; d];
        c[0] = x;
        let p = LatticePoint::new(c).map_err(|e| e.to_string())?;
        out.extend([x as f64, field.at(&p).copied().unwrap_or(0.0), heat.at(&p)]);
    }
    Ok(out)
}

/// Rescaled return probabilities of the difference walk. Stride 3:
/// `n, p~_n (2 pi n / d)^{d/2}, predicted limit`.
#[wasm_bindgen]
pub fn return_curve(d: usize, steps: usize) -> Result<Vec<f64>, JsError> {
    js(curve(d, steps))
}

fn curve(d: usize, steps: usize) -> Result<Vec<f64>, String> {
    check_dim(d, 3)?;
    let steps = steps.clamp(1, MAX_STEPS[d - 1]);
    let seq = return_sequence_float(&avg_difference_kernel(d), steps, 1e-15).map_err(|e| e.to_string())?;
    let alpha = if d >= 3 { Some(alpha_d(d, 120).map_err(|e| e.to_string())?) } else { None };
    let c = AsymptoticConstants::new(d, alpha);
    Ok((1..=steps).flat_map(|n| [n as f64, seq.values[n] * c.scale(n), c.target(n)]).collect())
}

/// CLT statistics `sum_x f(x / sqrt(t/2)) eta_t^x`, one per independent run.
#[wasm_bindgen]
pub fn clt_samples(d: usize, t: f64, trials: usize, seed: u64, function: &str) -> Result<Vec<f64>, JsError> {
    js(samples(d, t, trials, seed, function))
}

fn samples(d: usize, t: f64, trials: usize, seed: u64, function: &str) -> Result<Vec<f64>, String> {
    check_dim(d, 2)?;
    if !(t > 0.0 && t <= 400.0) || trials == 0 || trials > 2000 {
        return Err("need 0 < t <= 400 and 1 <= trials <= 2000".into());
    }
    let f: TestFunction = function.parse().map_err(|e: averaging_core::SimError| e.to_string())?;
    let base = SimConfig::point(d, t, seed);
    (0..trials as u64)
        .map(|i| {
            let field = simulate::<f64>(&base.with_seed(seed.wrapping_add(i))).map_err(|e| e.to_string())?;
            Ok(clt_statistic(&field, &f))
        })
        .collect()
}

/// `integral f d gamma_d`, where the CLT statistics concentrate.
#[wasm_bindgen]
pub fn gaussian_integral(d: usize, function: &str) -> Result<f64, JsError> {
    js(function
        .parse::<TestFunction>()
        .map(|f| f.gaussian_integral(d))
        .map_err(|e| e.to_string()))
}
