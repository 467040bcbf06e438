//! Static SVG renderings: line charts of indicator series and risk-map heat
//! strips. Output depends only on the inputs (fixed geometry, fixed number
//! formatting), so identical inputs give identical bytes.

use std::fmt::Write;

use crate::riskmap::RiskMap;
use crate::series::{align, AlignPolicy, TimeSeries};

const WIDTH: f64 = 960.0;
const LEFT: f64 = 150.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 40.0;
const LINE_HEIGHT: f64 = 320.0;
const ROW_HEIGHT: f64 = 24.0;
const UNCLASSIFIED: &str = "#e0e0e0";
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn short(v: f64) -> String {
    let r: f64 = format!("{v:.3e}").parse().expect("formatted float parses");
    format!("{}", if r == 0.0 { 0.0 } else { r })
}

/// Fill colour of a bucket: the four-level map uses green, light green,
/// orange and red; other bucket counts interpolate green to red.
pub fn bucket_fill(bucket: u8, buckets: usize) -> String {
    if buckets == 4 {
        return ["#2e7d32", "#9ccc65", "#fb8c00", "#c62828"][bucket as usize - 1].to_string();
    }
    let f = if buckets > 1 {
        (bucket as f64 - 1.0) / (buckets as f64 - 1.0)
    } else {
        0.0
    };
    let mix = |a: f64, b: f64| (a + (b - a) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(46.0, 198.0), mix(125.0, 40.0), mix(50.0, 40.0))
}

fn header(out: &mut String, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{height}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{LEFT}" y="24" font-size="15">{}</text>"#, escape(title));
}

fn date_axis(out: &mut String, dates: &[chrono::NaiveDate], y: f64) {
    if dates.is_empty() {
        return;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let n = dates.len();
    let mut ticks = vec![0, n / 2, n - 1];
    ticks.dedup();
    for t in ticks {
        let x = LEFT + plot_w * (t as f64 + 0.5) / n as f64;
        let _ = writeln!(out, r#"<text x="{x:.2}" y="{y:.2}" text-anchor="middle">{}</text>"#, dates[t]);
    }
}

/// Run-length coloured cells of one risk map across `[LEFT, WIDTH - RIGHT]`.
fn strip_cells(out: &mut String, map: &RiskMap, y: f64, height: f64, opacity: f64) {
    let n = map.buckets.len();
    if n == 0 {
        return;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let buckets = map.policy.bucket_count();
    let mut start = 0;
    while start < n {
        let b = map.buckets[start];
        let mut end = start + 1;
        while end < n && map.buckets[end] == b {
            end += 1;
        }
        let x0 = LEFT + plot_w * start as f64 / n as f64;
        let x1 = LEFT + plot_w * end as f64 / n as f64;
        let fill = b.map_or_else(|| UNCLASSIFIED.to_string(), |b| bucket_fill(b, buckets));
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.2}" y="{y:.2}" width="{:.2}" height="{height:.2}" fill="{fill}" fill-opacity="{opacity}"/>"#,
            x1 - x0
        );
        start = end;
    }
}

/// Line chart of one or more series on their union calendar, optionally
/// over the coloured buckets of a risk map on the same calendar.
pub fn line_chart(title: &str, series: &[&TimeSeries], background: Option<&RiskMap>) -> String {
    let height = TOP + LINE_HEIGHT + BOTTOM + 16.0 * series.len() as f64;
    let mut out = String::new();
    header(&mut out, height, title);
    let owned: Vec<TimeSeries> = series.iter().map(|s| (*s).clone()).collect();
    let aligned = if owned.is_empty() { Vec::new() } else { align(&owned, AlignPolicy::Union).unwrap_or(owned) };
    let n = aligned.first().map_or(0, TimeSeries::len);
    let plot_w = WIDTH - LEFT - RIGHT;

    if let Some(map) = background {
        strip_cells(&mut out, map, TOP, LINE_HEIGHT, 0.35);
    }
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{LINE_HEIGHT}" fill="none" stroke="black"/>"#
    );

    let values: Vec<f64> = aligned.iter().flat_map(|s| s.present()).collect();
    if values.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">no data</text>"#,
            LEFT + plot_w / 2.0,
            TOP + LINE_HEIGHT / 2.0
        );
    } else {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 1.0, hi + 1.0) };
        let y_of = |v: f64| TOP + LINE_HEIGHT * (1.0 - (v - lo) / (hi - lo));
        for (v, anchor_y) in [(hi, TOP + 4.0), ((lo + hi) / 2.0, TOP + LINE_HEIGHT / 2.0 + 4.0), (lo, TOP + LINE_HEIGHT)] {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{anchor_y:.2}" text-anchor="end">{}</text>"#,
                LEFT - 6.0,
                short(v)
            );
        }
        for (k, s) in aligned.iter().enumerate() {
            let mut d = String::new();
            let mut pen_down = false;
            for t in 0..n {
                match s.get(t) {
                    Some(v) => {
                        let x = LEFT + plot_w * (t as f64 + 0.5) / n as f64;
                        let _ = write!(d, "{}{x:.2} {:.2} ", if pen_down { "L" } else { "M" }, y_of(v));
                        pen_down = true;
                    }
                    None => pen_down = false,
                }
            }
            let color = PALETTE[k % PALETTE.len()];
            let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#, d.trim_end());
            let ly = TOP + LINE_HEIGHT + BOTTOM + 12.0 + 16.0 * k as f64;
            let _ = writeln!(out, r#"<line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="{color}" stroke-width="2"/>"#, ly - 4.0, LEFT + 20.0, ly - 4.0);
            let _ = writeln!(out, r#"<text x="{:.2}" y="{ly:.2}">{}</text>"#, LEFT + 26.0, escape(s.name()));
        }
    }
    if let Some(first) = aligned.first() {
        date_axis(&mut out, first.dates(), TOP + LINE_HEIGHT + 16.0);
    }
    out.push_str("</svg>\n");
    out
}

/// One coloured row per risk map (all on the same calendar), with a note on
/// rows that have no classified date yet.
pub fn heat_strip(title: &str, maps: &[&RiskMap]) -> String {
    let height = TOP + ROW_HEIGHT * maps.len().max(1) as f64 + BOTTOM;
    let mut out = String::new();
    header(&mut out, height, title);
    let plot_w = WIDTH - LEFT - RIGHT;
    for (k, map) in maps.iter().enumerate() {
        let y = TOP + ROW_HEIGHT * k as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + ROW_HEIGHT / 2.0 + 4.0,
            escape(&map.name)
        );
        if map.classified() == 0 {
            let _ = writeln!(
                out,
                r#"<rect x="{LEFT}" y="{y:.2}" width="{plot_w}" height="{:.2}" fill="{UNCLASSIFIED}"/>"#,
                ROW_HEIGHT - 2.0
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">no classified dates: warmup of {} observations not reached ({} available)</text>"#,
                LEFT + plot_w / 2.0,
                y + ROW_HEIGHT / 2.0 + 4.0,
                map.policy.warmup,
                map.values.iter().flatten().count()
            );
        } else {
            strip_cells(&mut out, map, y, ROW_HEIGHT - 2.0, 1.0);
        }
    }
    if maps.is_empty() {
        let _ = writeln!(out, r#"<text x="{LEFT}" y="{:.2}">no risk maps</text>"#, TOP + 16.0);
    }
    if let Some(first) = maps.first() {
        date_axis(&mut out, &first.dates, TOP + ROW_HEIGHT * maps.len() as f64 + 16.0);
    }
    out.push_str("</svg>\n");
    out
}
