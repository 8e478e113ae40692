//! Minimal SVG line charts for profile curves.

use std::fmt::Write as _;

use super::ProfileCurve;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;
const COLORS: &[&str] = &["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Step-function polylines for `curves`, starting at abscissa `x0`.
pub fn render_profiles(title: &str, x_label: &str, curves: &[ProfileCurve], x0: f64) -> String {
    let x_max = curves.iter().flat_map(|c| c.ratios.last().copied()).fold(x0 + 1.0, f64::max) * 1.05;
    let sx = |x: f64| PAD + (x - x0) / (x_max - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - y * (H - 2.0 * PAD);

    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<polyline points="{},{} {},{} {},{}" fill="none" stroke="black"/>"#,
        sx(x0),
        sy(1.0),
        sx(x0),
        sy(0.0),
        sx(x_max),
        sy(0.0)
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, W / 2.0, H - 10.0, escape(x_label));
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="10">{x0}</text>"#, sx(x0) - 4.0, sy(0.0) + 14.0);
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="10">{:.3}</text>"#, sx(x_max) - 20.0, sy(0.0) + 14.0, x_max);
    let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="10">1</text>"#, PAD - 14.0, sy(1.0) + 4.0);

    for (i, c) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut pts = vec![(x0, c.value_at(x0))];
        for b in c.breakpoints().into_iter().filter(|b| *b > x0) {
            pts.push((b, pts.last().expect("nonempty").1));
            pts.push((b, c.value_at(b)));
        }
        pts.push((x_max, c.value_at(x_max)));
        let points: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        let _ = writeln!(out, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, points.join(" "));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            W - PAD - 120.0,
            PAD + 16.0 * i as f64,
            escape(&c.solver)
        );
    }
    out.push_str("</svg>\n");
    out
}
