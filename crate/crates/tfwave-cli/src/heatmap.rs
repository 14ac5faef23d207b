//! Phase-space scatter heatmap of log10|c| as SVG.

use std::fmt::Write as _;

use tfwave::gabor::CoefficientGrid;

const SIZE: f64 = 640.0;
const MARGIN: f64 = 64.0;
/// decades shown below the peak
const DECADES: f64 = 12.0;

/// Fixed ramp from dark blue through green to yellow.
const RAMP: [(f64, [u8; 3]); 5] =
    [(0.0, [13, 8, 135]), (0.25, [84, 2, 163]), (0.5, [33, 145, 140]), (0.75, [144, 215, 67]), (1.0, [253, 231, 37])];

fn color(u: f64) -> String {
    let u = u.clamp(0.0, 1.0);
    let i = RAMP.iter().position(|(s, _)| *s >= u).unwrap_or(RAMP.len() - 1).max(1);
    let ((s0, c0), (s1, c1)) = (RAMP[i - 1], RAMP[i]);
    let t = (u - s0) / (s1 - s0);
    let mix = |k: usize| (f64::from(c0[k]) + t * (f64::from(c1[k]) - f64::from(c0[k]))).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(0), mix(1), mix(2))
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo, hi)
    }
}

/// Returns the SVG document; `None` for an empty grid.
pub fn render_heatmap(coeffs: &CoefficientGrid<f64>, title: &str) -> Option<String> {
    if coeffs.entries.is_empty() {
        return None;
    }
    let (x0, x1) = span(coeffs.entries.iter().map(|e| e.x));
    let (y0, y1) = span(coeffs.entries.iter().map(|e| e.xi));
    let peak = coeffs.max_abs();
    let top = if peak > 0.0 { peak.log10() } else { 0.0 };
    let inner = SIZE - 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * inner;
    let py = |y: f64| SIZE - MARGIN - (y - y0) / (y1 - y0) * inner;
    let dot = (inner / (coeffs.entries.len() as f64).sqrt() * 0.5).clamp(0.75, 6.0);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(s, r##"<rect width="{SIZE}" height="{SIZE}" fill="#ffffff"/>"##);
    let _ = writeln!(s, r##"<rect x="{MARGIN}" y="{MARGIN}" width="{inner}" height="{inner}" fill="#0d0887"/>"##);
    let mut entries: Vec<_> = coeffs.entries.iter().collect();
    // brightest on top, ties by node index
    entries.sort_by(|a, b| a.value.norm().total_cmp(&b.value.norm()).then((a.m, a.n).cmp(&(b.m, b.n))));
    for e in entries {
        let a = e.value.norm();
        let level = if a > 0.0 { (a.log10() - (top - DECADES)) / DECADES } else { 0.0 };
        let _ = writeln!(
            s,
            r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{}"/>"#,
            px(e.x) - dot / 2.0,
            py(e.xi) - dot / 2.0,
            dot,
            dot,
            color(level)
        );
    }
    let axis = r##"font-family="monospace" font-size="14" fill="#000000""##;
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" {axis}>x</text>"#, SIZE / 2.0, SIZE - 20.0);
    let _ = writeln!(
        s,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})" {axis}>ξ</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );
    for (x, y, anchor, label) in [
        (MARGIN, SIZE - MARGIN + 18.0, "start", format!("{x0:.2}")),
        (SIZE - MARGIN, SIZE - MARGIN + 18.0, "end", format!("{x1:.2}")),
        (MARGIN - 6.0, SIZE - MARGIN, "end", format!("{y0:.2}")),
        (MARGIN - 6.0, MARGIN + 10.0, "end", format!("{y1:.2}")),
    ] {
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{y:.1}" text-anchor="{anchor}" {axis}>{label}</text>"#);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="32" text-anchor="middle" {axis}>{} (log10|c| from {:.1} to {:.1})</text>"#,
        SIZE / 2.0,
        escape(title),
        top - DECADES,
        top
    );
    s.push_str("</svg>\n");
    Some(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex;
    use tfwave::gabor::CoefficientEntry;

    #[test]
    fn ramp_ends() {
        assert_eq!(color(0.0), "#0d0887");
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(2.0), "#fde725");
    }

    #[test]
    fn empty_and_deterministic() {
        assert!(render_heatmap(&CoefficientGrid::default(), "t").is_none());
        let g = CoefficientGrid {
            entries: (0..10)
                .map(|i| CoefficientEntry { m: i, n: 0, x: 0.0, xi: i as f64, value: Complex::new(1.0 / (1 + i) as f64, 0.0) })
                .collect(),
        };
        let a = render_heatmap(&g, "t").unwrap();
        assert_eq!(a, render_heatmap(&g, "t").unwrap());
        assert_eq!(a.matches("<rect").count(), 12);
    }
}
