//! Deterministic SVG scatter of a discretization spectrum with the two
//! reference circles.

use std::fmt::Write;

const SIZE: f64 = 520.0;
const MARGIN: f64 = 40.0;
const COLORS: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

pub struct PlotInput<'a> {
    pub title: &'a str,
    pub lambda_inf: f64,
    pub bv_radius: f64,
    /// Legend text for the two circles, including depth qualifiers.
    pub lambda_label: String,
    pub bv_label: String,
    /// `(M, eigenvalues)` groups.
    pub spectra: Vec<(usize, Vec<(f64, f64)>)>,
}

fn f(x: f64) -> String {
    format!("{x:.3}")
}

/// Radii this close are drawn as a single circle.
const SAME_RADIUS: f64 = 1e-9;

pub fn render(input: &PlotInput) -> String {
    let max_mod = input
        .spectra
        .iter()
        .flat_map(|(_, v)| v.iter().map(|&(re, im)| re.hypot(im)))
        .fold(input.bv_radius.max(input.lambda_inf).max(1.0), f64::max);
    let extent = max_mod * 1.08;
    let scale = (SIZE / 2.0 - MARGIN) / extent;
    let c = SIZE / 2.0;
    let px = |re: f64| c + re * scale;
    let py = |im: f64| c - im * scale;

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{}" viewBox="0 0 {SIZE} {}">"#, SIZE + 90.0, SIZE + 90.0).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="22" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#, f(c), escape(input.title)).unwrap();
    // axes and unit circle
    writeln!(s, r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#bbb" stroke-width="0.8"/>"##, f(MARGIN), f(c), f(SIZE - MARGIN), f(c)).unwrap();
    writeln!(s, r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#bbb" stroke-width="0.8"/>"##, f(c), f(MARGIN), f(c), f(SIZE - MARGIN)).unwrap();
    writeln!(s, r##"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="#ddd" stroke-width="0.8"/>"##, f(c), f(c), f(scale)).unwrap();

    let same = (input.lambda_inf - input.bv_radius).abs() < SAME_RADIUS;
    if !same {
        writeln!(
            s,
            r##"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="#000" stroke-width="1.4" stroke-dasharray="6 4"/>"##,
            f(c),
            f(c),
            f(input.lambda_inf * scale)
        )
        .unwrap();
    }
    writeln!(s, r##"<circle cx="{}" cy="{}" r="{}" fill="none" stroke="#000" stroke-width="1.4"/>"##, f(c), f(c), f(input.bv_radius * scale)).unwrap();

    for (g, (_, values)) in input.spectra.iter().enumerate() {
        let color = COLORS[g % COLORS.len()];
        for &(re, im) in values {
            writeln!(s, r#"<circle cx="{}" cy="{}" r="2" fill="{color}" fill-opacity="0.75"/>"#, f(px(re)), f(py(im))).unwrap();
        }
    }

    // legend
    let mut y = SIZE + 8.0;
    let legend_line = |s: &mut String, y: f64, dashed: bool, text: &str| {
        let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
        writeln!(s, r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#000" stroke-width="1.4"{dash}/>"##, f(MARGIN), f(y), f(MARGIN + 28.0), f(y)).unwrap();
        writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{}</text>"#, f(MARGIN + 36.0), f(y + 4.0), escape(text)).unwrap();
    };
    if same {
        let text = format!("{} = {} (single circle)", input.lambda_label, input.bv_label);
        legend_line(&mut s, y, false, &text);
        y += 16.0;
    } else {
        legend_line(&mut s, y, true, &input.lambda_label);
        y += 16.0;
        legend_line(&mut s, y, false, &input.bv_label);
        y += 16.0;
    }
    for (g, (m, _)) in input.spectra.iter().enumerate() {
        let color = COLORS[g % COLORS.len()];
        writeln!(s, r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#, f(MARGIN + 14.0), f(y)).unwrap();
        writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">discretization spectrum, M = {m}</text>"#, f(MARGIN + 36.0), f(y + 4.0))
            .unwrap();
        y += 16.0;
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
