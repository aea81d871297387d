//! Line chart of an intensity series as a standalone SVG document.

use std::fmt::Write as _;

use crate::intensity::IntensitySeries;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders one polyline per region with a legend and labelled axes.
/// Output depends only on the series contents.
pub fn render_svg(series: &IntensitySeries, title: &str) -> String {
    let frames = series.frames();
    let x_min = *frames.first().unwrap_or(&0) as f64;
    let mut x_max = *frames.last().unwrap_or(&1) as f64;
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }
    let y_peak = series
        .values()
        .iter()
        .flatten()
        .cloned()
        .fold(0.0f64, f64::max);
    let y_max = if y_peak > 0.0 { y_peak * 1.05 } else { 1.0 };

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |f: f64| LEFT + (f - x_min) / (x_max - x_min) * plot_w;
    let sy = |v: f64| TOP + plot_h - v / y_max * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    // axes and ticks
    let (x0, x1, y0, y1) = (LEFT, LEFT + plot_w, TOP + plot_h, TOP);
    let _ = writeln!(s, r#"<g stroke="black" stroke-width="1">"#);
    let _ = writeln!(s, r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x1:.1}" y2="{y0:.1}"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0:.1}" y1="{y0:.1}" x2="{x0:.1}" y2="{y1:.1}"/>"#);
    for i in 0..=TICKS {
        let fx = x_min + (x_max - x_min) * i as f64 / TICKS as f64;
        let px = sx(fx);
        let _ = writeln!(s, r#"<line x1="{px:.1}" y1="{y0:.1}" x2="{px:.1}" y2="{:.1}"/>"#, y0 + 5.0);
        let vy = y_max * i as f64 / TICKS as f64;
        let py = sy(vy);
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{py:.1}" x2="{x0:.1}" y2="{py:.1}"/>"#, x0 - 5.0);
    }
    let _ = writeln!(s, "</g>");
    for i in 0..=TICKS {
        let fx = x_min + (x_max - x_min) * i as f64 / TICKS as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(fx),
            y0 + 20.0,
            fx.round()
        );
        let vy = y_max * i as f64 / TICKS as f64;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{vy:.2e}</text>"#,
            x0 - 8.0,
            sy(vy) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">frame</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="20" y="{0:.1}" text-anchor="middle" transform="rotate(-90 20 {0:.1})">mean magnitude</text>"#,
        TOP + plot_h / 2.0
    );

    // one curve per region
    for (i, name) in series.regions().iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = frames
            .iter()
            .zip(series.values())
            .map(|(f, row)| format!("{:.2},{:.2}", sx(*f as f64), sy(row[i])))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" data-region="{}" points="{}"/>"#,
            escape(name),
            points.join(" ")
        );
    }

    // legend
    let lx = LEFT + plot_w + 20.0;
    let _ = writeln!(s, r#"<g class="legend">"#);
    for (i, name) in series.regions().iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let ly = TOP + 10.0 + 20.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="3"/>"#,
            lx + 24.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 30.0,
            ly + 4.0,
            escape(name)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}
