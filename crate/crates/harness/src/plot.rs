//! SVG histogram with an overlaid reference density.

use std::fmt::Write;

use crate::experiments::PlotData;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 40.0;
const BINS: usize = 40;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Density-normalised histogram of `plot.sample` on the reference range.
pub fn histogram(plot: &PlotData) -> (f64, f64, Vec<f64>) {
    let (lo, hi) = match (plot.reference.first(), plot.reference.last()) {
        (Some(a), Some(b)) if b.0 > a.0 => (a.0, b.0),
        _ => {
            let lo = plot.sample.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = plot.sample.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if lo.is_finite() && hi > lo {
                (lo, hi)
            } else {
                (0.0, 1.0)
            }
        }
    };
    let width = (hi - lo) / BINS as f64;
    let mut counts = vec![0.0; BINS];
    for &x in &plot.sample {
        if x >= lo && x <= hi {
            let k = (((x - lo) / width) as usize).min(BINS - 1);
            counts[k] += 1.0;
        }
    }
    let total = plot.sample.len().max(1) as f64;
    (lo, hi, counts.iter().map(|c| c / (total * width)).collect())
}

pub fn svg(plot: &PlotData) -> String {
    let (lo, hi, dens) = histogram(plot);
    let top = dens
        .iter()
        .cloned()
        .chain(plot.reference.iter().map(|p| p.1))
        .filter(|v| v.is_finite())
        .fold(0.0, f64::max)
        .max(1e-12)
        * 1.05;
    let sx = |x: f64| MARGIN + (x - lo) / (hi - lo) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - y / top * (H - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(&plot.title));
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<g class="histogram" fill="steelblue" fill-opacity="0.6">"#);
    let width = (hi - lo) / dens.len() as f64;
    for (k, d) in dens.iter().enumerate() {
        let x0 = sx(lo + k as f64 * width);
        let x1 = sx(lo + (k + 1) as f64 * width);
        let _ = writeln!(
            s,
            r#"<rect x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}"/>"#,
            sy(*d),
            x1 - x0,
            sy(0.0) - sy(*d)
        );
    }
    let _ = writeln!(s, "</g>");
    let pts: Vec<String> = plot.reference.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(y.min(top)))).collect();
    let _ = writeln!(
        s,
        r#"<polyline class="reference" fill="none" stroke="crimson" stroke-width="2" points="{}"/>"#,
        pts.join(" ")
    );
    let _ =
        writeln!(s, r#"<line x1="{MARGIN}" y1="{0:.2}" x2="{1:.2}" y2="{0:.2}" stroke="black"/>"#, sy(0.0), W - MARGIN);
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="{:.2}" font-size="12">{lo:.3}</text>"#, H - 15.0);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="end">{hi:.3}</text>"#,
        W - MARGIN,
        H - 15.0
    );
    let _ = writeln!(s, r#"<text x="{MARGIN}" y="20" font-size="14">{}</text>"#, escape(&plot.title));
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_integrates_to_one() {
        let sample: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let plot = PlotData::new("u", sample, |_| 1.0);
        let (lo, hi, d) = histogram(&plot);
        let mass: f64 = d.iter().sum::<f64>() * (hi - lo) / d.len() as f64;
        assert!((mass - 0.99).abs() < 0.02, "{mass}");
        let s = svg(&plot);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("class=\"histogram\"") && s.contains("class=\"reference\""));
    }
}
