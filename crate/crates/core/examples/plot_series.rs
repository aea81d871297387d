//! Round-trips a series through CSV and renders it as SVG.

use facedeform::cli::{plot::render_svg, series_csv};
use facedeform::prelude::*;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 40;
    let bump = |c: f64, w: f64| (1..=n).map(move |t| 1e-3 * (-((t as f64 - c) / w).powi(2)).exp());
    let cols: Vec<Vec<f64>> = vec![bump(20.0, 8.0).map(|v| v * 0.3).collect(), bump(18.0, 6.0).map(|v| v * 0.5).collect(), bump(20.0, 9.0).collect()];
    let series = IntensitySeries::new(
        vec!["eyes_eyebrows".into(), "cheeks".into(), "mouth".into()],
        (1..=n).collect(),
        (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect(),
        Units::Normalized,
        Mode::Reference,
    )?;

    let dir = std::env::temp_dir().join("facedeform-plot-series");
    std::fs::create_dir_all(&dir)?;
    let csv = dir.join("series.csv");
    series_csv::write_series(&csv, &series)?;
    let back = series_csv::read_series(&csv)?;
    let svg = render_svg(&back, "synthetic bumps");
    std::fs::write(dir.join("plot.svg"), &svg)?;
    println!("wrote {} and plot.svg ({} bytes, {} curves)", csv.display(), svg.len(), svg.matches("<polyline").count());
    Ok(())
}
