//! Browser bindings for the demo page in `www/`.
//!
//! Each export takes and returns JSON text. The plain `*_json` functions do the
//! work so they can be tested natively.

use serde_json::{json, Value};
use tinopt::format::{self, ChannelFile, RegionDoc};
use tinopt::netsim::{self, SimConfig};
use tinopt::region::K_MAX_VERTICES;
use tinopt::{
    check_tin_condition, general_tin_region, point_in_tin_region, polyhedral_region, tin_gdof,
    GdofTuple,
};
use wasm_bindgen::prelude::*;

/// Largest network the page will sample; keeps a click responsive.
const MAX_DEMO_USERS: usize = 30;
const MAX_DEMO_TRIALS: u64 = 20_000;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn channel(text: &str) -> Result<tinopt::ChannelMatrix, String> {
    ChannelFile::parse(text).and_then(|f| f.channel()).map_err(err)
}

/// Condition verdict, minimized region, its vertices (K <= 4) and the union's maximal sets.
pub fn analyze_json(channel_text: &str) -> Result<String, String> {
    let ch = channel(channel_text)?;
    let region = polyhedral_region(&ch, &[]).map_err(err)?.minimized();
    let vertices = if ch.users() <= K_MAX_VERTICES {
        let v = region.vertices().map_err(err)?;
        Value::from(
            v.iter()
                .map(|p| p.iter().map(|&x| format::round_sig(x)).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
        )
    } else {
        Value::Null
    };
    let union = general_tin_region(&ch).map_err(err)?;
    let maximal: Vec<Vec<usize>> = union
        .maximal()
        .map(|m| m.silent.iter().map(|u| u + 1).collect())
        .collect();
    let doc = json!({
        "condition": format::condition_json(&check_tin_condition(&ch)),
        "region": RegionDoc::from_polyhedron(&region),
        "vertices": vertices,
        "maximal_silent_sets": maximal,
        "union_convex": union.nonconvex_witness.is_none(),
    });
    Ok(doc.to_string())
}

/// Membership of a GDoF tuple with its certificate and the GDoF the powers achieve.
pub fn membership_json(channel_text: &str, point: &[f64]) -> Result<String, String> {
    let ch = channel(channel_text)?;
    ch.check_len(point.len()).map_err(err)?;
    let d = GdofTuple::new(point.to_vec()).map_err(err)?;
    let m = point_in_tin_region(&ch, &d).map_err(err)?;
    let mut doc = format::membership_json(&m);
    doc["achieved_gdof"] = match m.certificate.power() {
        Some(r) => {
            let g = tin_gdof(&ch, r).map_err(err)?;
            Value::from(g.as_slice().iter().map(|&x| format::round_sig(x)).collect::<Vec<_>>())
        }
        None => Value::Null,
    };
    Ok(doc.to_string())
}

fn demo_config(users: usize, radius_m: f64, seed: u64, trials: u64) -> Result<SimConfig, String> {
    if users > MAX_DEMO_USERS {
        return Err(format!("at most {MAX_DEMO_USERS} users in the demo"));
    }
    if trials > MAX_DEMO_TRIALS {
        return Err(format!("at most {MAX_DEMO_TRIALS} trials in the demo"));
    }
    let cfg = SimConfig {
        k: users,
        coverage_radius_m: radius_m,
        master_seed: seed,
        trials: trials.max(1),
        ..SimConfig::default()
    };
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// One random layout plus the probability estimate for its parameters.
pub fn sample_json(users: usize, radius_m: f64, seed: u64, trial: u64, trials: u64) -> Result<String, String> {
    let cfg = demo_config(users, radius_m, seed, trials)?;
    let inst = netsim::sample_network(&cfg, trial).map_err(err)?;
    let est = netsim::condition_probability(&cfg).map_err(err)?;
    let doc = json!({
        "instance": format::instance_json(&inst),
        "cell_radius_m": cfg.cell_radius_m,
        "estimate": format::estimate_json(&est),
    });
    Ok(doc.to_string())
}

#[wasm_bindgen]
pub fn analyze(channel_text: &str) -> Result<String, JsValue> {
    analyze_json(channel_text).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn membership(channel_text: &str, point: &[f64]) -> Result<String, JsValue> {
    membership_json(channel_text, point).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn sample(users: usize, radius_m: f64, seed: u32, trial: u32, trials: u32) -> Result<String, JsValue> {
    sample_json(users, radius_m, seed.into(), trial.into(), trials.into()).map_err(|e| JsValue::from_str(&e))
}
