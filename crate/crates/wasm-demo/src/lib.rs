//! Browser bindings for the static demo page in `www/`.

use rca_lab::exact::{exact_window_marginal, ConeProblem};
use rca_lab::finite::{distance_curve, finite_bound_rhs, ReversibleNetwork};
use rca_lab::rng::CounterRng;
use rca_lab::rules::Stencil;
use rca_lab::{CellSet, LocalRule, NoiseModel};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js(e: rca_lab::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Space-time diagram of an elementary rule with bit-flip noise on a ring,
/// starting from all zeros. Row-major, `steps + 1` rows of `width` cells.
#[wasm_bindgen]
pub fn spacetime(
    code: u32,
    flip: f64,
    width: usize,
    steps: usize,
    seed: u64,
) -> Result<Vec<u8>, JsError> {
    let rule = LocalRule::elementary(code).map_err(js)?;
    let noise = NoiseModel::flip(flip).map_err(js)?;
    let stencil = Stencil::new(&rule, &[width]).map_err(js)?;
    let rng = CounterRng::new(seed);
    let mut x = vec![0u32; width];
    let mut y = vec![0u32; width];
    let mut out = Vec::with_capacity(width * (steps + 1));
    out.extend(x.iter().map(|&s| s as u8));
    for t in 0..steps {
        stencil.step(&rule, &x, &mut y);
        noise.apply_in_place(&mut y, &rng, t as u64);
        std::mem::swap(&mut x, &mut y);
        out.extend(x.iter().map(|&s| s as u8));
    }
    Ok(out)
}

/// Exact distance to uniform and its Pinsker bound on an interval of `n`
/// cells, for t = 0..=horizon, starting from all zeros. Returns JSON.
#[wasm_bindgen]
pub fn decay_curve(code: u32, flip: f64, n: usize, horizon: usize) -> Result<String, JsError> {
    let rule = LocalRule::elementary(code).map_err(js)?;
    let noise = NoiseModel::flip(flip).map_err(js)?;
    let window = CellSet::interval(0, n as i64 - 1);
    let (mut tv, mut pinsker, mut deficiency) = (vec![], vec![], vec![]);
    for t in 0..=horizon {
        let p =
            ConeProblem::from_configuration(rule.clone(), noise.clone(), window.clone(), t, |_| 0)
                .map_err(js)?;
        let law = exact_window_marginal(&p).map_err(js)?;
        tv.push(law.tv_to_uniform());
        pinsker.push(law.pinsker_bound());
        deficiency.push(law.deficiency());
    }
    Ok(json!({ "tv": tv, "pinsker": pinsker, "deficiency": deficiency }).to_string())
}

/// Worst-case distance to uniform of the alternating CNOT circuit on `bits`
/// bits, next to the entropy bound. Returns JSON.
#[wasm_bindgen]
pub fn circuit_curve(bits: usize, flip: f64, horizon: usize) -> Result<String, JsError> {
    let net = ReversibleNetwork::alternating_cnot(bits).map_err(js)?;
    let noise = NoiseModel::flip(flip).map_err(js)?;
    let curve = distance_curve(&net.compile().map_err(js)?, &noise, horizon, 0).map_err(js)?;
    let kappa = noise.kappa();
    let bound: Vec<f64> = (0..=horizon)
        .map(|t| finite_bound_rhs(bits, std::f64::consts::LN_2, kappa, t))
        .collect();
    Ok(json!({ "d": curve.d, "bound": bound, "mode": format!("{:?}", curve.mode) }).to_string())
}

/// Surjectivity, injectivity and balance of an elementary rule. Returns JSON.
#[wasm_bindgen]
pub fn analyze_rule(code: u32) -> Result<String, JsError> {
    let rule = LocalRule::elementary(code).map_err(js)?;
    let a = rca_lab::analysis::analyze(&rule, 8).map_err(js)?;
    Ok(
        json!({ "surjective": a.surjective, "injective": a.injective, "balanced": a.balanced })
            .to_string(),
    )
}
