//! Static SVG rendering of an explain result.
//!
//! Upper panel: the overall series with dashed cut markers. Lower panel: each
//! segment's top explanations over that segment only, one colour per label.
//! A legend row under each segment lists its explanations with their effect.

use std::fmt::Write;

use evolex_core::pipeline::EvolvingExplanations;

const WIDTH: f64 = 960.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 24.0;
const PANEL: f64 = 210.0;
const TOP: f64 = 36.0;
const GAP: f64 = 56.0;
const LINE: f64 = 14.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

/// Colour chosen by hashing the label so re-runs keep colours stable.
fn colour(label: &str) -> &'static str {
    let h = label
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
    PALETTE[(h % PALETTE.len() as u64) as usize]
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn number(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.3e}")
    } else {
        format!("{}", (v * 100.0).round() / 100.0)
    }
}

struct Panel {
    y0: f64,
    lo: f64,
    hi: f64,
}

impl Panel {
    fn new<'a>(y0: f64, values: impl Iterator<Item = &'a f64>) -> Panel {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 {
            lo -= 0.5;
            hi += 0.5;
        }
        Panel { y0, lo, hi }
    }

    fn y(&self, v: f64) -> f64 {
        self.y0 + PANEL * (1.0 - (v - self.lo) / (self.hi - self.lo))
    }

    fn frame(&self, svg: &mut String, title: &str) {
        let _ = writeln!(
            svg,
            r##"<rect x="{LEFT}" y="{}" width="{}" height="{PANEL}" fill="none" stroke="#999"/>"##,
            self.y0,
            WIDTH - LEFT - RIGHT
        );
        let _ = writeln!(svg, r#"<text x="{LEFT}" y="{}" font-size="13">{}</text>"#, self.y0 - 8.0, escape(title));
        for v in [self.lo, self.hi] {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{:.1}" font-size="10" text-anchor="end">{}</text>"#,
                LEFT - 4.0,
                self.y(v) + 3.0,
                number(v)
            );
        }
    }
}

fn polyline(svg: &mut String, points: impl Iterator<Item = (f64, f64)>, stroke: &str, width: f64) {
    let pts: Vec<String> = points.map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
    let _ = writeln!(
        svg,
        r#"<polyline fill="none" stroke="{stroke}" stroke-width="{width}" points="{}"/>"#,
        pts.join(" ")
    );
}

/// Render `result` as a standalone SVG document.
pub fn render_svg(result: &EvolvingExplanations) -> String {
    let n = result.overall.len();
    let x = |i: usize| LEFT + (WIDTH - LEFT - RIGHT) * i as f64 / (n.max(2) - 1) as f64;
    let rows = result.segments.iter().map(|s| s.explanations.len()).max().unwrap_or(0);
    let upper = Panel::new(TOP, result.overall.values.iter());
    let lower = Panel::new(
        TOP + PANEL + GAP,
        result.segments.iter().flat_map(|s| s.explanations.iter().flat_map(|e| e.series.iter())),
    );
    let legend_y = lower.y0 + PANEL + 34.0;
    let height = legend_y + LINE * rows as f64 + 12.0;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    upper.frame(&mut svg, &format!("overall ({} segments)", result.k));
    lower.frame(&mut svg, "top explanations per segment");

    polyline(
        &mut svg,
        result.overall.values.iter().enumerate().map(|(i, &v)| (x(i), upper.y(v))),
        "#222",
        1.5,
    );
    for seg in &result.segments {
        for e in &seg.explanations {
            polyline(
                &mut svg,
                e.series.iter().enumerate().map(|(o, &v)| (x(seg.start_index + o), lower.y(v))),
                colour(&e.label),
                1.5,
            );
        }
    }

    let axis = lower.y0 + PANEL + 14.0;
    let ends = [0, n.saturating_sub(1)];
    for (pos, &i) in result.cut_indices.iter().enumerate() {
        let interior = pos > 0 && pos + 1 < result.cut_indices.len();
        if interior {
            let _ = writeln!(
                svg,
                r##"<line class="cut" x1="{0:.1}" y1="{TOP}" x2="{0:.1}" y2="{1}" stroke="#d33" stroke-dasharray="4 3"/>"##,
                x(i),
                lower.y0 + PANEL
            );
        }
        if interior || ends.contains(&i) {
            if let Some(t) = result.overall.timestamps.get(i) {
                let _ = writeln!(
                    svg,
                    r#"<text x="{:.1}" y="{axis}" font-size="10" text-anchor="middle">{}</text>"#,
                    x(i),
                    escape(&t.to_string())
                );
            }
        }
    }

    for seg in &result.segments {
        for (row, e) in seg.explanations.iter().enumerate() {
            let sign = if e.effect_sign >= 0 { '+' } else { '-' };
            let _ = writeln!(
                svg,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" fill="{}">{}{sign}</text>"#,
                x(seg.start_index) + 2.0,
                legend_y + LINE * row as f64,
                colour(&e.label),
                escape(&e.label)
            );
        }
    }
    svg.push_str("</svg>\n");
    svg
}
