//! `series.csv`: header `frame,<region>,...`, one row per frame, values in
//! 9-significant-digit scientific notation.

use std::path::Path;

use crate::intensity::{IntensitySeries, Mode, Units};

use super::CliError;

fn fmt_value(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn to_csv_string(series: &IntensitySeries) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("frame").chain(series.regions().iter().map(String::as_str));
    w.write_record(header).map_err(CliError::data)?;
    for (frame, row) in series.frames().iter().zip(series.values()) {
        let record = std::iter::once(frame.to_string()).chain(row.iter().map(|v| fmt_value(*v)));
        w.write_record(record).map_err(CliError::data)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_series(path: &Path, series: &IntensitySeries) -> Result<(), CliError> {
    let text = to_csv_string(series)?;
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Parses series CSV text. `origin` names the source in error messages.
pub fn parse_series(text: &str, origin: &str) -> Result<IntensitySeries, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{origin}: line 1: {e}")))?
        .clone();
    let mut cols = headers.iter();
    if cols.next().map(str::trim) != Some("frame") {
        return Err(CliError::Data(format!(
            "{origin}: line 1: header must start with 'frame'"
        )));
    }
    let regions: Vec<String> = cols.map(|c| c.trim().to_string()).collect();
    if regions.is_empty() || regions.iter().any(String::is_empty) {
        return Err(CliError::Data(format!(
            "{origin}: line 1: header must name at least one region"
        )));
    }

    let mut frames = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Data(format!("{origin}: line {line}: {e}"))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let bad = |msg: String| CliError::Data(format!("{origin}: line {line}: {msg}"));
        let frame: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| bad(format!("invalid frame index '{}'", &record[0])))?;
        let row = record
            .iter()
            .skip(1)
            .map(|field| {
                field
                    .trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite() && *v >= 0.0)
                    .ok_or_else(|| bad(format!("invalid magnitude '{field}'")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(&last) = frames.last() {
            if frame <= last {
                return Err(bad(format!("frame {frame} does not follow {last}")));
            }
        }
        frames.push(frame);
        values.push(row);
    }
    if values.is_empty() {
        return Err(CliError::Data(format!("{origin}: no data rows")));
    }
    IntensitySeries::new(regions, frames, values, Units::default(), Mode::default())
        .map_err(|e| CliError::Data(format!("{origin}: {e}")))
}

pub fn read_series(path: &Path) -> Result<IntensitySeries, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    parse_series(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> IntensitySeries {
        IntensitySeries::new(
            vec!["eyes_eyebrows".into(), "mouth".into()],
            vec![1, 2],
            vec![vec![0.0, 1.25e-4], vec![3.0e-3, 0.123456789123]],
            Units::Normalized,
            Mode::Reference,
        )
        .unwrap()
    }

    #[test]
    fn format_is_fixed() {
        let text = to_csv_string(&sample()).unwrap();
        assert_eq!(
            text,
            "frame,eyes_eyebrows,mouth\n\
             1,0.00000000e0,1.25000000e-4\n\
             2,3.00000000e-3,1.23456789e-1\n"
        );
        let back = parse_series(&text, "mem").unwrap();
        assert_eq!(back.regions(), sample().regions());
        assert_eq!(back.frames(), [1, 2]);
        assert_eq!(back.values()[1][1], 0.123456789);
    }

    #[test]
    fn malformed_lines_are_named() {
        let err = parse_series("frame,a\n1,0.5\n2,oops\n", "s.csv").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = parse_series("frame,a\n1,0.5,7\n", "s.csv").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = parse_series("frame,a\n", "s.csv").unwrap_err();
        assert!(err.to_string().contains("no data rows"));
        assert!(parse_series("", "s.csv").is_err());
        assert!(parse_series("t,a\n1,0\n", "s.csv").is_err());
        assert!(parse_series("frame,a\n1,-1\n", "s.csv").is_err());
        assert!(parse_series("frame,a\n2,0\n1,0\n", "s.csv").is_err());
    }
}
