//! Browser bindings. Each export takes plain numbers and returns JSON.

use polarnet::chain::{split_at_blocklength, ChannelOracle, TwoUserSweep};
use polarnet::channel::{DiscreteChannel, InputDistribution};
use polarnet::estimator::Estimator;
use polarnet::polar::synthesize_p2p;
use polarnet::region::{intersect, mac_region, Region2D};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Synthesized bit-channel capacities of a BEC(`epsilon`) at `N = 2^n`,
/// in index order.
#[wasm_bindgen]
pub fn bec_polarization(epsilon: f64, n: usize) -> Result<Vec<f64>, JsError> {
    if n > 16 {
        return Err(js_err("n is capped at 16 in the browser"));
    }
    let ch = DiscreteChannel::bec(epsilon).map_err(js_err)?;
    let stats = synthesize_p2p(&ch, n, &Estimator::exact()).map_err(js_err)?;
    Ok(stats.iter().map(|s| s.mi).collect())
}

/// Uniform-input regions of an XOR-or-erase receiver and an
/// independent-erasure receiver, and their intersection.
#[wasm_bindgen]
pub fn compound_region(xor_erasure: f64, a1: f64, a2: f64) -> Result<String, JsError> {
    let y = DiscreteChannel::xor_erasure(xor_erasure).map_err(js_err)?;
    let z = DiscreteChannel::independent_erasures(&[a1, a2]).map_err(js_err)?;
    let p = InputDistribution::uniform(&[2, 2]);
    let ry = mac_region(&y, &p, &[0, 1]).map_err(js_err)?;
    let rz = mac_region(&z, &p, &[0, 1]).map_err(js_err)?;
    let both = intersect(&[ry.clone(), rz.clone()]).map_err(js_err)?;
    let v = |r| Region2D::from_polytope(r).map(|g| g.vertices).map_err(js_err);
    Ok(json!({ "y": v(&ry)?, "z": v(&rz)?, "intersection": v(&both)? }).to_string())
}

/// Rate pairs of the paths `1^i 2^N 1^(N-i)` on the two-user binary adder
/// MAC, plus the split closest to the dominant-face point nearest
/// `(t1, t2)`.
#[wasm_bindgen]
pub fn adder_sweep(n: usize, t1: f64, t2: f64) -> Result<String, JsError> {
    if n > 10 {
        return Err(js_err("n is capped at 10 in the browser"));
    }
    let mac = DiscreteChannel::binary_adder(2).map_err(js_err)?;
    let est = Estimator::exact();
    let oracle = ChannelOracle { mac: &mac, estimator: &est };
    let sweep = TwoUserSweep::compute(&oracle, n, &[0, 0], 0, 1).map_err(js_err)?;
    let split = split_at_blocklength(&oracle, &[t1, t2], n).map_err(js_err)?;
    Ok(json!({
        "r1": sweep.lead_rates,
        "r2": sweep.other_rates,
        "path": split.path.to_string(),
        "rates": split.rates,
        "face_target": split.target.target,
        "gap": split.gap,
    })
    .to_string())
}
