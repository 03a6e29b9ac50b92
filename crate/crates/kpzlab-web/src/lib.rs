//! Browser bindings for the kpzlab demo page (`www/index.html`).
//!
//! Each export returns a JSON string; the `*_json` functions do the work and
//! are plain Rust so they can be tested natively.

use kpzlab::asep::{self, AsepSim, ColoredConfiguration};
use kpzlab::lpp;
use kpzlab::qboson::{self, ExactSampler, QBoson};
use kpzlab::randomness::{CounterRng, SeedSpec};
use kpzlab::verify;
use serde_json::json;
use wasm_bindgen::prelude::*;

const MAX_TIME: f64 = 400.0;

/// Colored heights `h(x, y, t)` of ASEP from the packed start, for each
/// requested color threshold and `y ∈ ⟦−R, R⟧`.
pub fn asep_profile_json(q: f64, t: f64, radius: i64, xs: &[i64], seed: u64) -> Result<String, String> {
    if !(0.0..=MAX_TIME).contains(&t) || !(1..=400).contains(&radius) {
        return Err(format!("need 0 ≤ t ≤ {MAX_TIME} and 1 ≤ R ≤ 400"));
    }
    let w = asep::safe_half_width(t, radius + xs.iter().map(|x| x.abs()).max().unwrap_or(0));
    let mut sim = AsepSim::new(ColoredConfiguration::packed(w), SeedSpec::asep(seed), q, 0.0).map_err(|e| e.to_string())?;
    sim.advance_to(t).map_err(|e| e.to_string())?;
    let ys: Vec<i64> = (-radius..=radius).collect();
    let mut series = Vec::new();
    for &x in xs {
        let h = ys
            .iter()
            .map(|&y| asep::colored_height(sim.config(), x, y, t))
            .collect::<kpzlab::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        series.push(json!({"x": x, "h": h}));
    }
    Ok(json!({"t": t, "q": q, "ys": ys, "series": series}).to_string())
}

/// One exact two-color q-Boson sample: both line ensembles, the Pitman
/// transform `PT(L¹_k, L²_{k+1})` and `L²_k`, which lies above it.
pub fn pitman_sample_json(n: usize, m: usize, q: f64, z: f64, k: usize, seed: u64) -> Result<String, String> {
    if n < 2 || n + m > 8 || k == 0 || k > 6 {
        return Err("need 2 ≤ N, N + M ≤ 8 and 1 ≤ k ≤ 6".into());
    }
    let sigma = (0..n).map(|r| if r == 0 { 1 } else { 2 }).collect();
    let model = QBoson::new(n, m, sigma, q, z).map_err(|e| e.to_string())?;
    let tm = model.transfer_matrix().map_err(|e| e.to_string())?;
    let cutoff = tm.cutoff_for(1e-12, 400).map_err(|e| e.to_string())?.max(k + 1);
    let sampler = ExactSampler::new(&model, cutoff).map_err(|e| e.to_string())?;
    let cfg = sampler.sample(&mut CounterRng::new(seed));
    let l1 = cfg.line_ensemble(1, k + 1);
    let l2 = cfg.line_ensemble(2, k + 1);
    let pt = lpp::pitman(l1.curve(k), l2.curve(k + 1));
    Ok(json!({
        "k": k,
        "l1": l1.curves,
        "l2": l2.curves,
        "pitman": pt,
        "upper": l2.curve(k),
        "deviation": lpp::pitman_deviation(&l1, &l2, k).map_err(|e| e.to_string())?,
    })
    .to_string())
}

/// Exact probability that the Gibbs resampling keeps the higher of the two
/// bridges `(0,0,−1)` / `(0,−1,−1)` above the curve `(−k,−k−1,−k−1)`.
pub fn gibbs_probability_json(q: &str, k: i64) -> Result<String, String> {
    let q = qboson::parse_exact(q).map_err(|e| e.to_string())?;
    let p = verify::gibbs_figure_probability(&q, k).map_err(|e| e.to_string())?;
    let approx = p.numer().to_string().parse::<f64>().unwrap_or(f64::NAN) / p.denom().to_string().parse::<f64>().unwrap_or(f64::NAN);
    Ok(json!({"q": q.to_string(), "k": k, "exact": p.to_string(), "value": approx}).to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn asep_profile(q: f64, t: f64, radius: i32, xs: &str, seed: u32) -> Result<String, JsError> {
    let xs: Vec<i64> = xs.split(',').filter_map(|s| s.trim().parse().ok()).collect();
    js(asep_profile_json(q, t, radius as i64, &xs, seed as u64))
}

#[wasm_bindgen]
pub fn pitman_sample(n: u32, m: u32, q: f64, z: f64, k: u32, seed: u32) -> Result<String, JsError> {
    js(pitman_sample_json(n as usize, m as usize, q, z, k as usize, seed as u64))
}

#[wasm_bindgen]
pub fn gibbs_probability(q: &str, k: i32) -> Result<String, JsError> {
    js(gibbs_probability_json(q, k as i64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    #[test]
    fn profile_is_monotone() {
        let v: Value = serde_json::from_str(&asep_profile_json(0.3, 5.0, 10, &[0, 2], 1).unwrap()).unwrap();
        for s in v["series"].as_array().unwrap() {
            let h: Vec<i64> = serde_json::from_value(s["h"].clone()).unwrap();
            assert!(h.windows(2).all(|w| w[0] >= w[1]));
        }
        assert!(asep_profile_json(0.3, -1.0, 10, &[0], 1).is_err());
    }

    #[test]
    fn pitman_bound_holds() {
        for seed in 0..20 {
            let v: Value = serde_json::from_str(&pitman_sample_json(3, 2, 0.4, 0.5, 2, seed).unwrap()).unwrap();
            let pt: Vec<i64> = serde_json::from_value(v["pitman"].clone()).unwrap();
            let up: Vec<i64> = serde_json::from_value(v["upper"].clone()).unwrap();
            assert!(pt.iter().zip(&up).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn gibbs_probability_at_half() {
        let v: Value = serde_json::from_str(&gibbs_probability_json("1/2", 2).unwrap()).unwrap();
        assert_eq!(v["exact"], "7/15");
    }
}
