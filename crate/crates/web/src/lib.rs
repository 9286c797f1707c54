//! Browser bindings: PVF heatmaps, eigenoption policies and diffusion-time
//! curves for a map typed into the page. Every call returns JSON.

use eigenoptions::env::maps;
use eigenoptions::metrics::{diffusion_sweep, Arrival};
use eigenoptions::options::{eigenoption as solve_option, eigenoptions_for};
use eigenoptions::spectral::pvf_sequence;
use eigenoptions::{parse_map, FeatureMap, GridWorld, LaplacianKind, Sign};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest option count the page will sweep; each row is a dense solve per goal.
pub const MAX_SWEEP_OPTIONS: usize = 32;

fn world(map: &str) -> Result<GridWorld, String> {
    parse_map(map).map_err(|e| e.to_string())
}

fn kind(name: &str) -> Result<LaplacianKind, String> {
    name.parse()
}

fn cells(g: &GridWorld, values: impl Fn(usize) -> Value) -> Value {
    let rows: Vec<Value> = (0..g.height())
        .map(|r| (0..g.width()).map(|c| g.state_at(r, c).map_or(Value::Null, &values)).collect())
        .collect();
    Value::Array(rows)
}

/// Built-in maps as `{name: text}`.
pub fn shipped_maps() -> String {
    let m: serde_json::Map<String, Value> = maps::all().iter().map(|(n, t)| (n.to_string(), Value::from(*t))).collect();
    Value::Object(m).to_string()
}

/// Rank `rank` PVF (1-based, λ = 0 included) as a grid of values, `null` on walls.
pub fn pvf_json(map: &str, laplacian: &str, rank: usize) -> Result<String, String> {
    let g = world(map)?;
    if rank == 0 || rank > g.num_states() {
        return Err(format!("rank must be in 1..={}", g.num_states()));
    }
    let purposes = pvf_sequence(&g, kind(laplacian)?, rank).map_err(|e| e.to_string())?;
    let p = purposes.iter().find(|p| p.rank == rank && p.sign == Sign::Positive).ok_or("missing eigenvector")?;
    Ok(json!({
        "rank": rank,
        "eigenvalue": p.eigenvalue,
        "values": cells(&g, |s| p.vector[s].into()),
    })
    .to_string())
}

/// Eigenoption for the PVF of `rank` with `sign` (`"+"` or `"-"`): per-cell
/// glyphs plus initiation and termination flags.
pub fn eigenoption_json(map: &str, laplacian: &str, rank: usize, sign: &str, gamma: f64) -> Result<String, String> {
    let g = world(map)?;
    if rank == 0 || rank > g.num_states() {
        return Err(format!("rank must be in 1..={}", g.num_states()));
    }
    let sign = match sign {
        "+" => Sign::Positive,
        "-" => Sign::Negative,
        other => return Err(format!("sign must be + or -, got {other:?}")),
    };
    let purposes = pvf_sequence(&g, kind(laplacian)?, rank).map_err(|e| e.to_string())?;
    let p = purposes.iter().find(|p| p.rank == rank && p.sign == sign).ok_or("missing eigenvector")?;
    let e = solve_option(&g, p, FeatureMap::TabularOneHot, gamma).map_err(|e| e.to_string())?;
    let o = &e.option;
    Ok(json!({
        "label": p.label(),
        "glyphs": cells(&g, |s| o.policy[s].glyph().to_string().into()),
        "initiation": o.initiation_states().len(),
        "termination": o.termination_states().iter().map(|&s| { let (r, c) = g.cell(s); json!([r, c]) }).collect::<Vec<_>>(),
    })
    .to_string())
}

/// Exact diffusion time with 0, 2, …, `max_options` eigenoptions.
pub fn diffusion_json(map: &str, laplacian: &str, gamma: f64, max_options: usize) -> Result<String, String> {
    let g = world(map)?;
    if !max_options.is_multiple_of(2) || max_options > MAX_SWEEP_OPTIONS {
        return Err(format!("option count must be even and at most {MAX_SWEEP_OPTIONS}"));
    }
    let purposes = pvf_sequence(&g, kind(laplacian)?, (max_options / 2).min(g.num_states())).map_err(|e| e.to_string())?;
    let options: Vec<_> = eigenoptions_for(&g, &purposes, FeatureMap::TabularOneHot, gamma)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|e| e.option)
        .collect();
    let rows = diffusion_sweep(&g, &options, options.len(), Arrival::FirstVisit, None).map_err(|e| e.to_string())?;
    Ok(Value::Array(rows.iter().map(|r| json!([r.option_count, r.diffusion_time])).collect()).to_string())
}

#[wasm_bindgen]
pub fn maps_list() -> String {
    shipped_maps()
}

#[wasm_bindgen]
pub fn pvf(map: &str, laplacian: &str, rank: usize) -> Result<String, JsError> {
    pvf_json(map, laplacian, rank).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn eigenoption(map: &str, laplacian: &str, rank: usize, sign: &str, gamma: f64) -> Result<String, JsError> {
    eigenoption_json(map, laplacian, rank, sign, gamma).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn diffusion(map: &str, laplacian: &str, gamma: f64, max_options: usize) -> Result<String, JsError> {
    diffusion_json(map, laplacian, gamma, max_options).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CORRIDOR: &str = "XXXXX\nX...X\nXXXXX\n";

    #[test]
    fn first_normalized_pvf_follows_sqrt_degree() {
        let v: Value = serde_json::from_str(&pvf_json(CORRIDOR, "normalized", 1).unwrap()).unwrap();
        let row = v["values"][1].as_array().unwrap();
        assert!(row[0].is_null());
        let (a, b, c) = (row[1].as_f64().unwrap(), row[2].as_f64().unwrap(), row[3].as_f64().unwrap());
        assert!((a - c).abs() < 1e-12);
        assert!((b / a - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn corridor_option_walks_to_an_end() {
        let v: Value = serde_json::from_str(&eigenoption_json(CORRIDOR, "combinatorial", 2, "+", 0.9).unwrap()).unwrap();
        assert_eq!(v["termination"].as_array().unwrap().len(), 1);
        assert_eq!(v["initiation"], 2);
        let glyphs: String = v["glyphs"][1].as_array().unwrap().iter().filter_map(Value::as_str).collect();
        assert!(glyphs == ">>T" || glyphs == "T<<", "{glyphs}");
    }

    #[test]
    fn diffusion_curve_starts_at_random_walk() {
        let v: Value = serde_json::from_str(&diffusion_json(CORRIDOR, "normalized", 0.9, 2).unwrap()).unwrap();
        // middle to an end: h = 1 + h/2 + (4 + h)/4, so 8; end to far end 12; end to middle 4
        assert_eq!(v[0], json!([0, 8.0]));
        assert_eq!(v.as_array().unwrap().len(), 2);
    }

    #[test]
    fn bad_input_is_reported() {
        assert!(pvf_json("XXX\n", "normalized", 1).is_err());
        assert!(pvf_json(CORRIDOR, "weird", 1).is_err());
        assert!(pvf_json(CORRIDOR, "normalized", 4).is_err());
        assert!(eigenoption_json(CORRIDOR, "normalized", 1, "x", 0.9).is_err());
        assert!(diffusion_json(CORRIDOR, "normalized", 0.9, 3).is_err());
        assert!(serde_json::from_str::<Value>(&shipped_maps()).unwrap()["four_room"].is_string());
    }
}
