//! wasm-bindgen exports for the browser demo in `www/`. Every function returns
//! a JSON string so the page needs no glue beyond `JSON.parse`.

use loctime::excursions::{decompose_with, DecomposeOptions, Sign};
use loctime::localtime::{bridge_local_time, default_bandwidth, local_time_curve, path_functionals};
use loctime::paths::{sample_bridge, sample_brownian, TimeGrid};
use loctime::reflaws::law_catalog;
use loctime::rng::mix;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_STEPS: usize = 200_000;
const MAX_SAMPLES: usize = 20_000;

#[derive(Serialize)]
struct Curve {
    times: Vec<f64>,
    path: Vec<f64>,
    levels: Vec<f64>,
    local_time: Vec<f64>,
    eps: f64,
    /// Riemann sum of the curve; equals the horizon by the occupation formula.
    integral: f64,
}

#[derive(Serialize)]
struct ExcursionView {
    start: f64,
    end: f64,
    positive: bool,
    height: f64,
}

#[derive(Serialize)]
struct Excursions {
    times: Vec<f64>,
    path: Vec<f64>,
    excursions: Vec<ExcursionView>,
    last_zero: f64,
}

#[derive(Serialize)]
struct Histogram {
    title: String,
    edges: Vec<f64>,
    density: Vec<f64>,
    reference_x: Vec<f64>,
    reference: Vec<f64>,
    n: usize,
}

#[derive(Serialize)]
struct Failure {
    error: String,
}

fn to_json<T: Serialize>(value: &loctime::Result<T>) -> String {
    match value {
        Ok(v) => serde_json::to_string(v),
        Err(e) => serde_json::to_string(&Failure { error: e.to_string() }),
    }
    .unwrap_or_else(|e| format!(r#"{{"error":"{e}"}}"#))
}

fn grid(steps: usize) -> loctime::Result<TimeGrid> {
    let steps = steps.clamp(10, MAX_STEPS);
    TimeGrid::new(1.0 / steps as f64, steps)
}

/// Thins a path to at most `keep` points for drawing.
fn thin(times: impl Iterator<Item = f64>, values: &[f64], keep: usize) -> (Vec<f64>, Vec<f64>) {
    let stride = values.len().div_ceil(keep.max(1)).max(1);
    times.zip(values).step_by(stride).map(|(t, v)| (t, *v)).unzip()
}

fn curve(seed: u64, steps: usize, eps: f64) -> loctime::Result<Curve> {
    let g = grid(steps)?;
    let path = sample_brownian(g, 0.0, seed);
    let eps = if eps > 0.0 { eps } else { default_bandwidth(g.step()) };
    let lo = path.values.iter().cloned().fold(0.0, f64::min) - eps;
    let hi = path.values.iter().cloned().fold(0.0, f64::max) + eps;
    let levels: Vec<f64> = (0..=300).map(|k| lo + (hi - lo) * k as f64 / 300.0).collect();
    let c = local_time_curve(&path, &levels, 1.0, eps)?;
    let (times, values) = thin((0..path.values.len()).map(|i| g.time(i)), &path.values, 2000);
    Ok(Curve { times, path: values, integral: c.integral(), levels: c.levels, local_time: c.values, eps })
}

/// Brownian path on `[0, 1]` and its occupation local-time curve `x ↦ L^x_1`.
/// `eps <= 0` picks the default bandwidth for the step.
#[wasm_bindgen]
pub fn local_time_curve_json(seed: u64, steps: usize, eps: f64) -> String {
    to_json(&curve(seed, steps, eps))
}

fn excursions(seed: u64, steps: usize, min_length: f64) -> loctime::Result<Excursions> {
    let g = grid(steps)?;
    let path = sample_brownian(g, 0.0, seed);
    let d = decompose_with(&path, &DecomposeOptions::summaries_only());
    let last_zero = path_functionals(&path, 1.0)?.g_t;
    let (times, values) = thin((0..path.values.len()).map(|i| g.time(i)), &path.values, 2000);
    Ok(Excursions {
        times,
        path: values,
        excursions: d
            .excursions
            .iter()
            .chain(d.boundary.as_ref())
            .filter(|e| e.length() >= min_length)
            .map(|e| ExcursionView { start: e.start, end: e.end, positive: e.sign == Sign::Positive, height: e.height })
            .collect(),
        last_zero,
    })
}

/// Brownian path on `[0, 1]` split into excursions away from 0. Excursions
/// shorter than `min_length` are dropped from the list (not from the path).
#[wasm_bindgen]
pub fn excursions_json(seed: u64, steps: usize, min_length: f64) -> String {
    to_json(&excursions(seed, steps, min_length))
}

fn histogram(kind: &str, n: usize, steps: usize, seed: u64) -> loctime::Result<Histogram> {
    let n = n.clamp(100, MAX_SAMPLES);
    let g = grid(steps.min(5_000))?;
    let (title, law, sample): (&str, _, Vec<f64>) = match kind {
        "arcsine" => (
            "last zero before 1 (arcsine law)",
            law_catalog("arcsine", &[])?,
            (0..n)
                .map(|i| path_functionals(&sample_brownian(g, 0.0, mix(seed, i as u64)), 1.0).map(|f| f.g_t))
                .collect::<loctime::Result<_>>()?,
        ),
        "levy" => (
            "S1 - B1 (law of |B1|)",
            law_catalog("reflected_sup", &[1.0])?,
            (0..n)
                .map(|i| {
                    let p = sample_brownian(g, 0.0, mix(seed, i as u64));
                    p.values.iter().cloned().fold(0.0, f64::max) - p.values[p.values.len() - 1]
                })
                .collect(),
        ),
        "bridge" => (
            "bridge local time at 0 (Rayleigh law)",
            law_catalog("rayleigh", &[])?,
            (0..n)
                .map(|i| sample_bridge(1.0, g, mix(seed, i as u64)).and_then(|p| bridge_local_time(&p, 0.0, 1.0)))
                .collect::<loctime::Result<_>>()?,
        ),
        other => return Err(loctime::Error::UnknownLaw(other.to_string())),
    };
    let (lo, hi) = match kind {
        "arcsine" => (0.0, 1.0),
        _ => (0.0, 3.5),
    };
    const BINS: usize = 35;
    let w = (hi - lo) / BINS as f64;
    let mut counts = vec![0usize; BINS];
    for &x in &sample {
        if (lo..=hi).contains(&x) {
            counts[(((x - lo) / w) as usize).min(BINS - 1)] += 1;
        }
    }
    let reference_x: Vec<f64> = (1..400).map(|k| lo + (hi - lo) * k as f64 / 400.0).collect();
    Ok(Histogram {
        title: title.to_string(),
        edges: (0..=BINS).map(|k| lo + w * k as f64).collect(),
        density: counts.iter().map(|c| *c as f64 / (n as f64 * w)).collect(),
        reference: reference_x.iter().map(|&x| law.density(x).unwrap_or(0.0)).collect(),
        reference_x,
        n,
    })
}

/// Density histogram of a simulated functional against its reference law.
/// `kind` is one of `arcsine`, `levy` or `bridge`.
#[wasm_bindgen]
pub fn histogram_json(kind: &str, n: usize, steps: usize, seed: u64) -> String {
    to_json(&histogram(kind, n, steps, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn curve_integrates_to_horizon() {
        let v = parse(&local_time_curve_json(3, 5_000, 0.0));
        assert!((v["integral"].as_f64().unwrap() - 1.0).abs() < 0.02);
        assert_eq!(v["levels"].as_array().unwrap().len(), v["local_time"].as_array().unwrap().len());
        assert!(v["path"].as_array().unwrap().len() <= 2_001);
    }

    #[test]
    fn excursions_are_ordered_and_filtered() {
        let v = parse(&excursions_json(5, 10_000, 0.01));
        let ex = v["excursions"].as_array().unwrap();
        assert!(!ex.is_empty());
        let mut last = 0.0;
        for e in ex {
            let (s, t) = (e["start"].as_f64().unwrap(), e["end"].as_f64().unwrap());
            assert!(s >= last - 1e-12 && t - s >= 0.01);
            last = t;
        }
        assert!(v["last_zero"].as_f64().unwrap() <= 1.0);
    }

    #[test]
    fn histograms_are_normalised() {
        for kind in ["arcsine", "levy", "bridge"] {
            let v = parse(&histogram_json(kind, 2_000, 1_000, 9));
            let edges: Vec<f64> = v["edges"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
            let mass: f64 =
                v["density"].as_array().unwrap().iter().map(|d| d.as_f64().unwrap() * (edges[1] - edges[0])).sum();
            assert!(mass > 0.95 && mass <= 1.0 + 1e-9, "{kind}: {mass}");
        }
    }

    #[test]
    fn bad_input_reports_error() {
        assert!(parse(&histogram_json("nope", 10, 10, 1))["error"].is_string());
    }
}
