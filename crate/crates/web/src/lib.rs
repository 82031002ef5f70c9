//! Browser bindings. Every export takes and returns JSON strings so the page
//! needs no generated glue beyond `wasm-bindgen`'s own.

use mingle_core::harness::{evaluate, localize_with, preprocess, EvalReport, Method, Mode, Scenario};
use mingle_core::simulator::{generate, preset};
use mingle_core::training::TrainConfig;
use mingle_core::{Point, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct Inspection {
    n_mps: usize,
    aps: Vec<Point>,
    truth: Vec<Option<Point>>,
    turn_flags: Vec<bool>,
    courses: Vec<(usize, usize)>,
    speed_ratio: Vec<f64>,
    epsilon: usize,
    /// Neighbor lists of the two graphs, self loops included.
    tmg: Vec<Vec<usize>>,
    dmg: Vec<Vec<usize>>,
    pseudo_labels: Vec<Point>,
}

#[derive(Serialize)]
struct Localization {
    method: String,
    coords: Vec<Point>,
    report: Option<EvalReport>,
}

fn neighbors<'a, R, I>(rows: R) -> Vec<Vec<usize>>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = &'a f64>,
{
    rows.into_iter()
        .map(|row| row.into_iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, _)| j).collect())
        .collect()
}

pub fn simulate_json(preset_name: &str, seed: u64, sigma: f64, nlos_p: f64) -> Result<String> {
    let mut spec = preset(preset_name)?;
    spec.noise.sigma = sigma;
    spec.noise.nlos_p = nlos_p;
    generate(&spec, seed)?.to_json()
}

pub fn inspect_json(scene: &str, epsilon: usize) -> Result<String> {
    let sc = Scenario::from_json(scene)?;
    let pre = preprocess(&sc, epsilon)?;
    let out = Inspection {
        n_mps: sc.n_mps(),
        aps: sc.aps.clone(),
        truth: sc.gt.clone(),
        turn_flags: pre.segmentation.beta.clone(),
        courses: pre.segmentation.courses.clone(),
        speed_ratio: pre.segmentation.speed_ratio.clone(),
        epsilon,
        tmg: neighbors(pre.graphs.a.rows()),
        dmg: neighbors(pre.graphs.b.rows()),
        pseudo_labels: pre.cda.labels,
    };
    Ok(serde_json::to_string(&out)?)
}

/// Runs one localizer. `epochs` caps training so the page stays responsive.
pub fn localize_json(scene: &str, method: &str, epochs: usize, lambda: f64, semi: bool) -> Result<String> {
    let sc = Scenario::from_json(scene)?;
    let method: Method = method.parse()?;
    let cfg = TrainConfig {
        max_epochs: epochs.max(1),
        patience: TrainConfig::default().patience.min(epochs.max(1)),
        repetitions: 1,
        lambda,
        ..TrainConfig::default()
    };
    let pre = preprocess(&sc, cfg.epsilon)?;
    let mode = if semi { Mode::Semi } else { Mode::SelfSupervised };
    let est = localize_with(&sc, &pre, method, mode, &cfg)?;
    let report = if sc.gt.iter().any(Option::is_some) {
        Some(evaluate(&est.coords, &sc.gt)?)
    } else {
        None
    };
    Ok(serde_json::to_string(&Localization {
        method: method.to_string(),
        coords: est.coords,
        report,
    })?)
}

fn to_js<T>(r: Result<T>) -> std::result::Result<T, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn simulate(preset_name: &str, seed: u32, sigma: f64, nlos_p: f64) -> std::result::Result<String, JsValue> {
    to_js(simulate_json(preset_name, u64::from(seed), sigma, nlos_p))
}

#[wasm_bindgen]
pub fn inspect(scene: &str, epsilon: u32) -> std::result::Result<String, JsValue> {
    to_js(inspect_json(scene, epsilon as usize))
}

#[wasm_bindgen]
pub fn localize(scene: &str, method: &str, epochs: u32, lambda: f64, semi: bool) -> std::result::Result<String, JsValue> {
    to_js(localize_json(scene, method, epochs as usize, lambda, semi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simulate_then_inspect() {
        let scene = simulate_json("type2", 1, 0.5, 0.3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&inspect_json(&scene, 2).unwrap()).unwrap();
        let n = v["n_mps"].as_u64().unwrap() as usize;
        assert_eq!(n, 34);
        assert_eq!(v["tmg"][0], serde_json::json!([0, 1, 2]));
        assert_eq!(v["courses"].as_array().unwrap().len(), 4);
        assert_eq!(v["pseudo_labels"].as_array().unwrap().len(), n);
    }

    #[test]
    fn localize_baseline_and_model() {
        let scene = simulate_json("type2", 2, 0.5, 0.3).unwrap();
        let v: serde_json::Value = serde_json::from_str(&localize_json(&scene, "cda", 1, 3.0, false).unwrap()).unwrap();
        assert!(v["report"]["rmse"].as_f64().unwrap() < 3.0);
        let v: serde_json::Value = serde_json::from_str(&localize_json(&scene, "mingle", 10, 3.0, false).unwrap()).unwrap();
        assert_eq!(v["coords"].as_array().unwrap().len(), 34);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(simulate_json("nope", 0, 0.5, 0.3).is_err());
        assert!(inspect_json("{}", 2).is_err());
        let scene = simulate_json("type2", 0, 0.5, 0.3).unwrap();
        assert!(localize_json(&scene, "gps", 1, 3.0, false).is_err());
    }
}
