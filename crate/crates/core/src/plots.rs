//! Static SVG emitters for sweep line plots and boxplots. No interactive
//! viewer; the files are the artifact.

use std::fmt::Write as _;

use crate::metrics::BoxStats;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 300.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 45.0;

const PALETTE: [&str; 5] = ["#4363d8", "#e6194b", "#3cb44b", "#f58231", "#911eb4"];

struct Scale {
    min: f64,
    max: f64,
    lo_px: f64,
    hi_px: f64,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        if self.max == self.min {
            return (self.lo_px + self.hi_px) / 2.0;
        }
        self.lo_px + (v - self.min) / (self.max - self.min) * (self.hi_px - self.lo_px)
    }
}

fn value_bounds(series: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for v in series {
        min = min.min(v);
        max = max.max(v);
    }
    if !min.is_finite() {
        return (0.0, 1.0);
    }
    if min == max {
        return (min - 0.5, max + 0.5);
    }
    let pad = 0.05 * (max - min);
    (min - pad, max + pad)
}

fn svg_header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/><text x="{}" y="18" text-anchor="middle" font-family="sans-serif" font-size="13">{title}</text>"#,
        WIDTH / 2.0
    );
}

fn axes(out: &mut String, x_label: &str, y_label: &str, ys: &Scale) {
    let _ = writeln!(
        out,
        r#"<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{}" stroke="black"/><line x1="{MARGIN_L}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        HEIGHT - MARGIN_B,
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">{x_label}</text>"#,
        (MARGIN_L + WIDTH - MARGIN_R) / 2.0,
        HEIGHT - 8.0
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11" transform="rotate(-90 14 {})">{y_label}</text>"#,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0,
        (MARGIN_T + HEIGHT - MARGIN_B) / 2.0
    );
    // y ticks at min / mid / max
    for frac in [0.0, 0.5, 1.0] {
        let v = ys.min + frac * (ys.max - ys.min);
        let y = ys.map(v);
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{y}" x2="{MARGIN_L}" y2="{y}" stroke="black"/><text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="10">{v:.3}</text>"#,
            MARGIN_L - 4.0,
            MARGIN_L - 6.0,
            y + 3.0
        );
    }
}

/// One named series of per-seed values.
pub struct Series<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

/// Line plot of per-seed metric values, one polyline per variant.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let mut out = String::new();
    svg_header(&mut out, title);
    let (ymin, ymax) = value_bounds(series.iter().flat_map(|s| s.values.iter().copied()));
    let ys = Scale { min: ymin, max: ymax, lo_px: HEIGHT - MARGIN_B, hi_px: MARGIN_T };
    let n = series.iter().map(|s| s.values.len()).max().unwrap_or(1).max(2);
    let xs = Scale { min: 0.0, max: (n - 1) as f64, lo_px: MARGIN_L, hi_px: WIDTH - MARGIN_R };
    axes(&mut out, x_label, y_label, &ys);

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let points: Vec<String> = s
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| format!("{:.2},{:.2}", xs.map(i as f64), ys.map(v)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" fill="{color}">{}</text>"#,
            WIDTH - MARGIN_R - 110.0,
            MARGIN_T + 14.0 * si as f64,
            s.name
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Boxplot per variant for a single metric.
pub fn boxplot(title: &str, y_label: &str, groups: &[(&str, &BoxStats)]) -> String {
    let mut out = String::new();
    svg_header(&mut out, title);
    let all = groups.iter().flat_map(|(_, b)| {
        [b.whisker_lo, b.whisker_hi]
            .into_iter()
            .chain(b.outliers.iter().copied())
    });
    let (ymin, ymax) = value_bounds(all);
    let ys = Scale { min: ymin, max: ymax, lo_px: HEIGHT - MARGIN_B, hi_px: MARGIN_T };
    axes(&mut out, "", y_label, &ys);

    let slot = (WIDTH - MARGIN_L - MARGIN_R) / groups.len() as f64;
    let box_w = (slot * 0.4).min(60.0);
    for (gi, (name, b)) in groups.iter().enumerate() {
        let cx = MARGIN_L + slot * (gi as f64 + 0.5);
        let color = PALETTE[gi % PALETTE.len()];
        let (yq1, ymed, yq3) = (ys.map(b.q1), ys.map(b.median), ys.map(b.q3));
        let (ywl, ywh) = (ys.map(b.whisker_lo), ys.map(b.whisker_hi));
        let _ = writeln!(
            out,
            r#"<line x1="{cx}" y1="{ywl}" x2="{cx}" y2="{yq1}" stroke="black"/><line x1="{cx}" y1="{yq3}" x2="{cx}" y2="{ywh}" stroke="black"/>"#
        );
        for wy in [ywl, ywh] {
            let _ = writeln!(
                out,
                r#"<line x1="{}" y1="{wy}" x2="{}" y2="{wy}" stroke="black"/>"#,
                cx - box_w / 4.0,
                cx + box_w / 4.0
            );
        }
        let _ = writeln!(
            out,
            r#"<rect x="{}" y="{yq3}" width="{box_w}" height="{}" fill="{color}" fill-opacity="0.5" stroke="black"/>"#,
            cx - box_w / 2.0,
            (yq1 - yq3).abs().max(0.5)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{ymed}" x2="{}" y2="{ymed}" stroke="black" stroke-width="1.6"/>"#,
            cx - box_w / 2.0,
            cx + box_w / 2.0
        );
        for &o in &b.outliers {
            let _ = writeln!(
                out,
                r#"<circle cx="{cx}" cy="{}" r="2" fill="none" stroke="black"/>"#,
                ys.map(o)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{cx}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{name}</text>"#,
            HEIGHT - MARGIN_B + 16.0
        );
    }
    out.push_str("</svg>\n");
    out
}
