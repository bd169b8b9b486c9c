//! Static SVG convergence plots: value series and target on a linear axis,
//! errors on a secondary log axis, orders on a log axis.

use std::fmt::Write as _;

use szego_core::szego::Series;

const W: f64 = 800.0;
const H: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 80.0;
const TOP: f64 = 50.0;
const BOTTOM: f64 = 60.0;
const ERROR_FLOOR: f64 = 1e-17;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Linear map from `[lo, hi]` to `[a, b]`.
fn scale(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    a + (v - lo) / (hi - lo) * (b - a)
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo > 1e-12 * (lo.abs() + hi.abs()).max(1e-300) {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = 0.5 * lo.abs().max(1e-3);
        (lo - pad, hi + pad)
    }
}

fn polyline(out: &mut String, pts: &[(f64, f64)], colour: &str, dash: &str) {
    let _ = write!(out, "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"2\"{dash} points=\"");
    for (i, (x, y)) in pts.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x:.2},{y:.2}");
    }
    out.push_str("\"/>\n");
    for (x, y) in pts {
        let _ = writeln!(out, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{colour}\"/>");
    }
}

/// Renders a report. `None` for an empty report.
pub fn render<S: Series>(report: &S) -> Option<String> {
    let orders = report.orders();
    let values = report.values();
    let errors = report.errors();
    if orders.is_empty() || values.len() != orders.len() || errors.len() != orders.len() {
        return None;
    }
    let target = report.target();
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);

    let lx: Vec<f64> = orders.iter().map(|&n| (n.max(1) as f64).log10()).collect();
    let (xlo, xhi) = {
        let lo = lx.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = lx.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi - lo < 1e-9 {
            (lo - 0.5, hi + 0.5)
        } else {
            (lo - 0.05 * (hi - lo), hi + 0.05 * (hi - lo))
        }
    };
    let vmin = values.iter().copied().fold(target, f64::min);
    let vmax = values.iter().copied().fold(target, f64::max);
    let (vlo, vhi) = padded(vmin, vmax);
    let le: Vec<f64> = errors.iter().map(|e| e.max(ERROR_FLOOR).log10()).collect();
    let elo = le.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let mut ehi = le.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil();
    if ehi <= elo {
        ehi = elo + 1.0;
    }

    let px = |v: f64| scale(v, xlo, xhi, x0, x1);
    let pv = |v: f64| scale(v, vlo, vhi, y0, y1);
    let pe = |v: f64| scale(v, elo, ehi, y0, y1);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"25\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        W / 2.0,
        escape(&report.title())
    );
    let _ = writeln!(
        out,
        "<rect x=\"{x0}\" y=\"{y1}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"black\"/>",
        x1 - x0,
        y0 - y1
    );

    for (&n, &l) in orders.iter().zip(&lx) {
        let x = px(l);
        let _ = writeln!(out, "<line x1=\"{x:.2}\" y1=\"{y0}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>", y0 + 5.0);
        let _ = writeln!(out, "<text x=\"{x:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{n}</text>", y0 + 20.0);
    }
    let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">N (log scale)</text>", (x0 + x1) / 2.0, H - 15.0);

    for k in 0..=4 {
        let v = vlo + (vhi - vlo) * k as f64 / 4.0;
        let y = pv(v);
        let _ = writeln!(out, "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{x0}\" y2=\"{y:.2}\" stroke=\"black\"/>", x0 - 5.0);
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{v:.4}</text>", x0 - 8.0, y + 4.0);
    }
    let mut decade = elo as i32;
    while decade as f64 <= ehi {
        let y = pe(decade as f64);
        let _ = writeln!(out, "<line x1=\"{x1}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#b03030\"/>", x1 + 5.0);
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" fill=\"#b03030\">1e{decade}</text>", x1 + 8.0, y + 4.0);
        decade += 1;
    }

    let ty = pv(target);
    let _ = writeln!(
        out,
        "<line x1=\"{x0}\" y1=\"{ty:.2}\" x2=\"{x1}\" y2=\"{ty:.2}\" stroke=\"#2a7a2a\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>"
    );
    let vpts: Vec<(f64, f64)> = lx.iter().zip(values).map(|(&l, &v)| (px(l), pv(v))).collect();
    polyline(&mut out, &vpts, "#1f4fa0", "");
    let epts: Vec<(f64, f64)> = lx.iter().zip(&le).map(|(&l, &e)| (px(l), pe(e))).collect();
    polyline(&mut out, &epts, "#b03030", " stroke-dasharray=\"3 3\"");

    let legend = [("#1f4fa0", "value"), ("#2a7a2a", "target"), ("#b03030", "error (right axis)")];
    for (i, (colour, label)) in legend.iter().enumerate() {
        let y = TOP + 15.0 + 16.0 * i as f64;
        let _ = writeln!(out, "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"12\" height=\"3\" fill=\"{colour}\"/>", x0 + 10.0, y - 4.0);
        let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{y:.2}\">{label}</text>", x0 + 28.0);
    }
    out.push_str("</svg>\n");
    Some(out)
}
