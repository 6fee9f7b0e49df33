//! Violin plots of estimates grouped by design size, as standalone SVG 1.1.

use std::fmt::Write as _;
use std::path::Path;

use statrs::statistics::{Data, Distribution, OrderStatistics};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("group n = {n} has {count} finite values; at least {min} are needed")]
    TooFew { n: usize, count: usize, min: usize },
    #[error("nothing to plot")]
    Empty,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub const MIN_GROUP: usize = 5;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 50.0;
const KDE_POINTS: usize = 96;

/// Silverman's rule of thumb, `0.9 min(σ, IQR/1.34) m^{−1/5}`; zero for a
/// constant sample.
pub fn silverman_bandwidth(xs: &[f64]) -> f64 {
    let m = xs.len();
    if m < 2 {
        return 0.0;
    }
    let mut d = Data::new(xs.to_vec());
    let sd = d.std_dev().unwrap_or(0.0);
    let iqr = d.interquartile_range() / 1.34;
    let spread = if iqr > 0.0 { sd.min(iqr) } else { sd };
    0.9 * spread * (m as f64).powf(-0.2)
}

fn kde(xs: &[f64], h: f64, at: f64) -> f64 {
    let c = 1.0 / (xs.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
    c * xs.iter().map(|x| (-0.5 * ((at - x) / h).powi(2)).exp()).sum::<f64>()
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders one violin per group. Groups are `(n, values)`; non-finite values
/// are dropped before the size check.
pub fn violin_svg(title: &str, groups: &[(usize, Vec<f64>)], reference: f64) -> Result<String, PlotError> {
    if groups.is_empty() {
        return Err(PlotError::Empty);
    }
    let clean: Vec<(usize, Vec<f64>)> = groups
        .iter()
        .map(|(n, v)| (*n, v.iter().copied().filter(|x| x.is_finite()).collect()))
        .collect();
    for (n, v) in &clean {
        if v.len() < MIN_GROUP {
            return Err(PlotError::TooFew {
                n: *n,
                count: v.len(),
                min: MIN_GROUP,
            });
        }
    }
    let bws: Vec<f64> = clean.iter().map(|(_, v)| silverman_bandwidth(v)).collect();
    let mut lo = reference;
    let mut hi = reference;
    for ((_, v), h) in clean.iter().zip(&bws) {
        for &x in v {
            lo = lo.min(x - 3.0 * h);
            hi = hi.max(x + 3.0 * h);
        }
    }
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = 0.05 * (hi - lo);
    let (lo, hi) = (lo - pad, hi + pad);
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let y_of = |v: f64| MARGIN_T + plot_h * (hi - v) / (hi - lo);
    let slot = plot_w / clean.len() as f64;
    let half_w = 0.4 * slot;

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="18" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        esc(title)
    );
    let _ = writeln!(
        svg,
        r#"<polyline class="axis" points="{l:.2},{t:.2} {l:.2},{b:.2} {r:.2},{b:.2}" fill="none" stroke="black"/>"#,
        l = MARGIN_L,
        t = MARGIN_T,
        b = MARGIN_T + plot_h,
        r = MARGIN_L + plot_w
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.2}</text>"#,
            MARGIN_L - 6.0,
            y_of(v) + 4.0
        );
    }
    for (g, ((n, v), &h)) in clean.iter().zip(&bws).enumerate() {
        let cx = MARGIN_L + slot * (g as f64 + 0.5);
        let _ = writeln!(
            svg,
            r#"<text x="{cx:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">n = {n}</text>"#,
            MARGIN_T + plot_h + 20.0
        );
        if !(h > 0.0) {
            let y = y_of(v[0]);
            let _ = writeln!(
                svg,
                r#"<line class="tick" x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="steelblue" stroke-width="2"/>"#,
                cx - half_w,
                cx + half_w
            );
            continue;
        }
        let (vmin, vmax) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let (a, b) = (vmin - 3.0 * h, vmax + 3.0 * h);
        let ys: Vec<f64> = (0..KDE_POINTS).map(|i| a + (b - a) * i as f64 / (KDE_POINTS - 1) as f64).collect();
        let dens: Vec<f64> = ys.iter().map(|&y| kde(v, h, y)).collect();
        let peak = dens.iter().cloned().fold(0.0, f64::max);
        let mut d = String::new();
        for (i, (&y, &p)) in ys.iter().zip(&dens).enumerate() {
            let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, cx + half_w * p / peak, y_of(y));
        }
        for (&y, &p) in ys.iter().zip(&dens).rev() {
            let _ = write!(d, "L{:.2},{:.2} ", cx - half_w * p / peak, y_of(y));
        }
        d.push('Z');
        let _ = writeln!(
            svg,
            r#"<path class="violin" d="{d}" fill="lightsteelblue" stroke="steelblue" stroke-width="1"/>"#
        );
        let med = Data::new(v.clone()).median();
        let _ = writeln!(
            svg,
            r#"<circle class="median" cx="{cx:.2}" cy="{:.2}" r="3" fill="black"/>"#,
            y_of(med)
        );
    }
    let yr = y_of(reference);
    let _ = writeln!(
        svg,
        r#"<line class="reference" x1="{:.2}" y1="{yr:.2}" x2="{:.2}" y2="{yr:.2}" stroke="red" stroke-width="1.5" stroke-dasharray="6,4"/>"#,
        MARGIN_L,
        MARGIN_L + plot_w
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn emit_violin_svg(path: &Path, title: &str, groups: &[(usize, Vec<f64>)], reference: f64) -> Result<(), PlotError> {
    let svg = violin_svg(title, groups, reference)?;
    std::fs::write(path, svg).map_err(|source| PlotError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(c: f64) -> Vec<f64> {
        (0..20).map(|i| c + (i as f64 * 0.37).sin()).collect()
    }

    #[test]
    fn silverman_on_known_sample() {
        let xs: Vec<f64> = (1..=10).map(f64::from).collect();
        let sd = (55.0f64 / 6.0).sqrt();
        let expected = 0.9 * sd.min(Data::new(xs.clone()).interquartile_range() / 1.34) * 10f64.powf(-0.2);
        assert!((silverman_bandwidth(&xs) - expected).abs() < 1e-14);
        assert_eq!(silverman_bandwidth(&[2.0; 7]), 0.0);
    }

    #[test]
    fn three_groups_three_paths() {
        let svg = violin_svg("t", &[(100, sample(4.0)), (200, sample(5.0)), (400, sample(5.5))], 5.0).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let count = |tag: &str, class: &str| {
            doc.descendants()
                .filter(|n| n.has_tag_name(tag) && n.attribute("class") == Some(class))
                .count()
        };
        assert_eq!(count("path", "violin"), 3);
        assert_eq!(count("line", "reference"), 1);
        assert_eq!(doc.descendants().filter(|n| n.has_tag_name("line")).count(), 1);
    }

    #[test]
    fn constant_group_is_a_tick() {
        let svg = violin_svg("flat", &[(10, vec![5.0; 6]), (20, sample(5.0))], 5.0).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let ticks = doc.descendants().filter(|n| n.attribute("class") == Some("tick")).count();
        let paths = doc.descendants().filter(|n| n.attribute("class") == Some("violin")).count();
        assert_eq!((ticks, paths), (1, 1));
        let all_flat = violin_svg("flat", &[(10, vec![5.0; 6])], 5.0).unwrap();
        assert!(roxmltree::Document::parse(&all_flat).is_ok());
    }

    #[test]
    fn too_few_is_an_error() {
        assert!(violin_svg("x", &[(10, vec![1.0, 2.0, f64::NAN, 3.0, 4.0, 5.0])], 5.0).is_ok());
        assert!(matches!(
            violin_svg("x", &[(10, vec![1.0, 2.0, f64::NAN, 3.0])], 5.0),
            Err(PlotError::TooFew { count: 3, .. })
        ));
        assert!(matches!(violin_svg("x", &[], 5.0), Err(PlotError::Empty)));
    }
}
