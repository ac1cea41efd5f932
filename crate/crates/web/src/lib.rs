//! Browser bindings: analyze a preset or a typed-in recurrence, and predict
//! from characteristic roots. Every call returns a JSON string.

use benrec::benford::{analyze_sample, BenfordReport, Thresholds};
use benrec::binet::solve;
use benrec::presets::{find_preset, list_presets, Model};
use benrec::{RecurrenceSpec, SciNum};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Upper bound on N so a click cannot freeze the tab.
const MAX_HORIZON: usize = 200_000;

#[derive(Serialize)]
struct Analysis {
    horizon: usize,
    first_terms: Vec<String>,
    report: BenfordReport,
}

fn run_model(model: Model, n: usize) -> Result<String, String> {
    if !(2..=MAX_HORIZON).contains(&n) {
        return Err(format!("N must be between 2 and {MAX_HORIZON}"));
    }
    let model = model.with_horizon(n);
    let sample = model.generate().map_err(|e| e.to_string())?;
    let report = analyze_sample(&sample, 10, &Thresholds::default()).map_err(|e| e.to_string())?;
    let out = Analysis {
        horizon: sample.len(),
        first_terms: sample.values.iter().take(12).map(SciNum::to_string).collect(),
        report,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

fn split(list: &str) -> Vec<&str> {
    list.split(';').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn numbers(list: &str) -> Result<Vec<f64>, String> {
    split(list)
        .iter()
        .map(|s| s.parse::<f64>().map_err(|_| format!("'{s}' is not a number")))
        .collect()
}

fn linear(coeffs: &str, inits: &str, n: usize) -> Result<RecurrenceSpec, String> {
    RecurrenceSpec::linear(&split(coeffs), &numbers(inits)?, n).map_err(|e| e.to_string())
}

pub fn preset_names_json() -> String {
    let names: Vec<(String, String)> = list_presets().into_iter().map(|p| (p.name, p.description)).collect();
    serde_json::to_string(&names).unwrap_or_default()
}

pub fn analyze_preset_json(name: &str, n: usize) -> Result<String, String> {
    let preset = find_preset(name).map_err(|e| e.to_string())?;
    run_model(preset.model_at(n), n.min(preset.max_horizon.unwrap_or(n)))
}

/// `coeffs` and `inits` are `;`-separated, e.g. `"n; 1"` and `"1; 1"`.
pub fn analyze_recurrence_json(coeffs: &str, inits: &str, n: usize) -> Result<String, String> {
    run_model(Model::Recurrence(linear(coeffs, inits, n.max(1))?), n)
}

pub fn predict_json(coeffs: &str, inits: &str) -> Result<String, String> {
    let spec = linear(coeffs, inits, 2)?;
    if !spec.coeffs.iter().all(|c| c.is_constant()) {
        return Err("prediction needs constant coefficients".into());
    }
    let values: Vec<f64> = spec
        .coeffs
        .iter()
        .map(|c| c.eval_at(1, 0))
        .collect::<benrec::Result<_>>()
        .map_err(|e| e.to_string())?;
    let sol = solve(&values, &spec.initial).map_err(|e| e.to_string())?;
    serde_json::to_string(&sol.predict_benford()).map_err(|e| e.to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn preset_names() -> String {
    preset_names_json()
}

#[wasm_bindgen]
pub fn analyze_preset(name: &str, n: usize) -> Result<String, JsError> {
    js(analyze_preset_json(name, n))
}

#[wasm_bindgen]
pub fn analyze_recurrence(coeffs: &str, inits: &str, n: usize) -> Result<String, JsError> {
    js(analyze_recurrence_json(coeffs, inits, n))
}

#[wasm_bindgen]
pub fn predict(coeffs: &str, inits: &str) -> Result<String, JsError> {
    js(predict_json(coeffs, inits))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_analysis() {
        let v: serde_json::Value = serde_json::from_str(&analyze_preset_json("fibonacci", 5000).unwrap()).unwrap();
        assert_eq!(v["report"]["verdict"], "consistent");
        assert_eq!(v["first_terms"].as_array().unwrap().len(), 12);
        assert!(analyze_preset_json("fibonacci", 1).is_err());
        assert!(analyze_preset_json("missing", 100).is_err());
    }

    #[test]
    fn typed_recurrence() {
        let v: serde_json::Value = serde_json::from_str(&analyze_recurrence_json("100", "1", 1000).unwrap()).unwrap();
        assert_eq!(v["report"]["verdict"], "inconsistent");
        assert!(analyze_recurrence_json("n +", "1", 10).unwrap_err().contains("byte"));
        assert!(analyze_recurrence_json("1", "x", 10).is_err());
    }

    #[test]
    fn prediction() {
        let v: serde_json::Value = serde_json::from_str(&predict_json("1; 1", "1; 1").unwrap()).unwrap();
        assert_eq!(v["status"], "benford");
        let v: serde_json::Value = serde_json::from_str(&predict_json("0; -4", "1; 1").unwrap()).unwrap();
        assert_eq!(v["status"], "inconclusive");
        assert!(predict_json("n; 1", "1; 1").is_err());
    }
}
