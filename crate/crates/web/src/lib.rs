//! Browser bindings: classify a formula, search for a model, and run the
//! tiling oracle. Every export returns a `key: value` report.

use guardedsat::reductions::{parse_tiling, tiling_oracle};
use guardedsat::structures::render_structure;
use guardedsat::{classify, decide, parse_formula, Dialect, Engine, Options, SatStatus, SizeLimit};
use wasm_bindgen::prelude::*;

const TILING_STEPS: u64 = 2_000_000;

pub fn classify_report(source: &str) -> Result<String, String> {
    let (_, f) = parse_formula(source).map_err(|e| e.to_string())?;
    Ok(classify(&f).to_report())
}

pub fn sat_report(
    source: &str,
    dialect: &str,
    engine: &str,
    max_size: &str,
    budget_nodes: u64,
) -> Result<String, String> {
    let (sig, f) = parse_formula(source).map_err(|e| e.to_string())?;
    let dialect: Dialect = dialect.parse()?;
    let engine: Engine = engine.parse()?;
    let max_size: SizeLimit = max_size.parse()?;
    let opts = Options {
        max_size,
        budget_nodes: budget_nodes.max(1),
        ..Options::default()
    };
    let v = decide(&f, &sig, dialect, engine, &opts).map_err(|e| e.to_string())?;
    let mut out = format!("status: {}\nnodes: {}\n", v.status.label(), v.stats.nodes);
    match &v.status {
        SatStatus::Sat(m) => {
            out += &format!("model-size: {}\n", m.size());
            out += &render_structure(m);
        }
        SatStatus::UnsatUpTo(n) => out += &format!("searched-up-to: {n}\n"),
        SatStatus::Unknown(why) => out += &format!("reason: {why}\n"),
        SatStatus::Unsat => {}
    }
    Ok(out)
}

pub fn tiling_report(spec: &str, m: usize) -> Result<String, String> {
    if m == 0 || m > 32 {
        return Err("side must be between 1 and 32".into());
    }
    let t = parse_tiling(spec).map_err(|e| e.to_string())?;
    let result = tiling_oracle(&t, m, TILING_STEPS).map_err(|e| e.to_string())?;
    let mut out = format!("side: {m}\ntiles: {}\n", result.is_some());
    if let Some(f) = result {
        for q in (0..m).rev() {
            let row: Vec<&str> = (0..m).map(|p| t.colors[f[p][q]].as_str()).collect();
            out += &format!("row: {}\n", row.join(" "));
        }
    }
    Ok(out)
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = classify)]
pub fn classify_js(source: &str) -> Result<String, JsValue> {
    js(classify_report(source))
}

#[wasm_bindgen(js_name = sat)]
pub fn sat_js(
    source: &str,
    dialect: &str,
    engine: &str,
    max_size: &str,
    budget_nodes: u32,
) -> Result<String, JsValue> {
    js(sat_report(
        source,
        dialect,
        engine,
        max_size,
        budget_nodes as u64,
    ))
}

#[wasm_bindgen(js_name = tilingOracle)]
pub fn tiling_js(spec: &str, m: u32) -> Result<String, JsValue> {
    js(tiling_report(spec, m as usize))
}
