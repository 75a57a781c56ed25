//! Static two-axis line chart for a threshold sweep: F1(True) on the left
//! axis, total cost on the right.

use std::fmt::Write as _;

use super::SweepReport;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 80.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_sweep_svg(report: &SweepReport) -> String {
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let taus: Vec<f64> = report.points.iter().map(|p| p.tau as f64).collect();
    let (tmin, tmax) = taus
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &t| (a.min(t), b.max(t)));
    let x = |t: f64| {
        if tmax > tmin {
            LEFT + (t - tmin) / (tmax - tmin) * pw
        } else {
            LEFT + pw / 2.0
        }
    };
    let cost_max = report.points.iter().map(|p| p.total_cost.dollars()).fold(0.0, f64::max);
    let cost_max = if cost_max > 0.0 { cost_max * 1.1 } else { 1.0 };
    let y_f1 = |v: f64| TOP + (1.0 - v.clamp(0.0, 1.0)) * ph;
    let y_cost = |v: f64| TOP + (1.0 - v / cost_max) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">Evidence threshold sweep ({})</text>"#,
        W / 2.0,
        esc(&report.model_id)
    );
    // axes
    let _ = writeln!(
        s,
        r#"<path d="M{LEFT} {TOP} V{} H{} V{TOP}" fill="none" stroke="black"/>"#,
        TOP + ph,
        LEFT + pw
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let y = y_f1(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" x2="{}" y1="{y}" y2="{y}" stroke="#ddd"/>"##,
            LEFT + pw
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{v:.1}</text>"#,
            LEFT - 6.0,
            y + 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">${:.4}</text>"#,
            LEFT + pw + 6.0,
            y + 4.0,
            cost_max * v
        );
    }
    for &t in &taus {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">{t}</text>"#,
            x(t),
            TOP + ph + 18.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">tau</text>"#,
        LEFT + pw / 2.0,
        H - 18.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate(18 {}) rotate(-90)" text-anchor="middle">F1 (True)</text>"#,
        TOP + ph / 2.0
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate({} {}) rotate(90)" text-anchor="middle">total cost (USD)</text>"#,
        W - 12.0,
        TOP + ph / 2.0
    );

    let series = [
        (
            "#1f77b4",
            report
                .points
                .iter()
                .map(|p| (x(p.tau as f64), y_f1(p.f1_true)))
                .collect::<Vec<_>>(),
        ),
        (
            "#d62728",
            report
                .points
                .iter()
                .map(|p| (x(p.tau as f64), y_cost(p.total_cost.dollars())))
                .collect(),
        ),
    ];
    for (color, pts) in &series {
        let path: Vec<String> = pts.iter().map(|(a, b)| format!("{a:.1},{b:.1}")).collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            path.join(" ")
        );
        for (a, b) in pts {
            let _ = writeln!(s, r#"<circle cx="{a:.1}" cy="{b:.1}" r="3" fill="{color}"/>"#);
        }
    }
    let _ = writeln!(
        s,
        r##"<text x="{}" y="{}" fill="#1f77b4">F1 (True)</text><text x="{}" y="{}" fill="#d62728">cost</text>"##,
        LEFT + 8.0,
        TOP + 14.0,
        LEFT + 90.0,
        TOP + 14.0
    );
    s.push_str("</svg>\n");
    s
}
