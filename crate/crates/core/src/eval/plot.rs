use std::fmt::Write as _;

use crate::trajectory::Trajectory;

const SIZE: f64 = 600.0;
const MARGIN: f64 = 30.0;

/// Top-down (x, z) SVG of the ground truth and the estimate.
pub fn trajectory_svg(est: &Trajectory, gt: &Trajectory) -> String {
    let xz = |t: &Trajectory| -> Vec<(f64, f64)> { t.positions().iter().map(|p| (p.x, p.z)).collect() };
    let (e, g) = (xz(est), xz(gt));
    let all = e.iter().chain(&g);
    let (mut x0, mut x1, mut z0, mut z1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, z) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        z0 = z0.min(z);
        z1 = z1.max(z);
    }
    let span = (x1 - x0).max(z1 - z0).max(1e-9);
    let scale = (SIZE - 2.0 * MARGIN) / span;
    // z grows upward on screen.
    let map = |&(x, z): &(f64, f64)| (MARGIN + (x - x0) * scale, SIZE - MARGIN - (z - z0) * scale);
    let polyline = |pts: &[(f64, f64)], color: &str| {
        let coords: Vec<String> = pts
            .iter()
            .map(map)
            .map(|(x, y)| format!("{x:.2},{y:.2}"))
            .collect();
        format!(
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            coords.join(" ")
        )
    };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">"
    );
    let _ = writeln!(svg, "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    svg.push_str(&polyline(&g, "black"));
    svg.push_str(&polyline(&e, "red"));
    let _ = writeln!(svg, "  <text x=\"10\" y=\"18\" font-size=\"12\" fill=\"black\">ground truth</text>");
    let _ = writeln!(svg, "  <text x=\"10\" y=\"34\" font-size=\"12\" fill=\"red\">estimate</text>");
    svg.push_str("</svg>\n");
    svg
}
