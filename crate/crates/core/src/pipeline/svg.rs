//! Line chart of the half-month series as plain SVG markup.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::corpus::BucketRange;
use crate::partition::Dataset;
use crate::study::SentimentSeries;

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 130.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 70.0;
const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e"];

/// One polyline per dataset; x is the bucket position within `range`,
/// y the bucket mean. Missing buckets are skipped.
pub fn series_chart(series: &BTreeMap<Dataset, SentimentSeries>, range: &BucketRange) -> String {
    let buckets = range.buckets();
    let values = series.values().flat_map(|s| s.points.values().map(|p| p.mean));
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 0.05;
        hi += 0.05;
    }
    let pad = (hi - lo) * 0.05;
    let (lo, hi) = (lo - pad, hi + pad);
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let step = if buckets.len() > 1 { plot_w / (buckets.len() - 1) as f64 } else { 0.0 };
    let x = |i: usize| LEFT + step * i as f64;
    let y = |v: f64| TOP + plot_h * (hi - v) / (hi - lo);

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r#"  <rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"  <line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let _ = writeln!(
        out,
        r#"  <line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.2}" stroke="black"/>"#,
        TOP + plot_h
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"  <text x="{:.2}" y="{:.2}" text-anchor="end">{v:.3}</text>"#,
            LEFT - 6.0,
            y(v) + 4.0
        );
    }
    for (i, b) in buckets.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"  <text x="{:.2}" y="{:.2}" text-anchor="end" transform="rotate(-45 {:.2} {:.2})">{b}</text>"#,
            x(i),
            TOP + plot_h + 14.0,
            x(i),
            TOP + plot_h + 14.0
        );
    }
    let position: BTreeMap<_, _> = buckets.iter().enumerate().map(|(i, b)| (*b, i)).collect();
    for (k, d) in Dataset::ALL.into_iter().enumerate() {
        let points: Vec<String> = series
            .get(&d)
            .map(|s| {
                s.points
                    .iter()
                    .filter_map(|(b, p)| position.get(b).map(|&i| format!("{:.2},{:.2}", x(i), y(p.mean))))
                    .collect()
            })
            .unwrap_or_default();
        let _ = writeln!(
            out,
            r#"  <polyline data-dataset="{d}" fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            COLORS[k],
            points.join(" ")
        );
        let ly = TOP + 16.0 * k as f64;
        let lx = LEFT + plot_w + 16.0;
        let _ = writeln!(
            out,
            r#"  <line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="2"/>"#,
            lx + 18.0,
            COLORS[k]
        );
        let _ = writeln!(out, r#"  <text x="{:.2}" y="{:.2}">{d}</text>"#, lx + 24.0, ly + 4.0);
    }
    out.push_str("</svg>\n");
    out
}
