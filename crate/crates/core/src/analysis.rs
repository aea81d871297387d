//! Event extraction (onset, apex, offset) and region ranking over an
//! intensity series.
//!
//! Thresholds are relative: `theta` is a fraction of a region's own peak
//! and `rho` a fraction of the dominant region's peak, so the analysis is
//! independent of the series units.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intensity::IntensitySeries;
use crate::regions::CANONICAL_ORDER;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("smoothing window must be odd and >= 1, got {0}")]
    EvenWindow(usize),
    #[error("threshold theta must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("run length must be >= 1, got {0}")]
    InvalidRunLength(usize),
    #[error("significance ratio rho must lie in (0, 1], got {0}")]
    InvalidRatio(f64),
    #[error("series has no frames or no regions")]
    EmptySeries,
}

/// Event detection settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectParams {
    pub theta: f64,
    pub run_length: usize,
    pub smooth_window: usize,
}

impl Default for DetectParams {
    fn default() -> Self {
        Self {
            theta: 0.1,
            run_length: 3,
            smooth_window: 5,
        }
    }
}

impl DetectParams {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        if !(self.theta > 0.0 && self.theta < 1.0) {
            return Err(AnalysisError::InvalidThreshold(self.theta));
        }
        if self.run_length < 1 {
            return Err(AnalysisError::InvalidRunLength(self.run_length));
        }
        if self.smooth_window % 2 == 0 {
            return Err(AnalysisError::EvenWindow(self.smooth_window));
        }
        Ok(())
    }
}

/// Full analysis settings, echoed into every report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub theta: f64,
    pub run_length: usize,
    pub rho: f64,
    pub smooth_window: usize,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        let d = DetectParams::default();
        Self {
            theta: d.theta,
            run_length: d.run_length,
            rho: 0.2,
            smooth_window: d.smooth_window,
        }
    }
}

impl AnalysisParams {
    pub fn detect(&self) -> DetectParams {
        DetectParams {
            theta: self.theta,
            run_length: self.run_length,
            smooth_window: self.smooth_window,
        }
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        self.detect().validate()?;
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(AnalysisError::InvalidRatio(self.rho));
        }
        Ok(())
    }
}

/// Onset, apex and offset of one region's curve. Positions are indices
/// into the series passed to [`detect_events`]; reports translate them to
/// frame numbers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionEvents {
    pub onset: Option<usize>,
    pub apex: Option<usize>,
    pub offset: Option<usize>,
    pub peak_value: f64,
}

impl RegionEvents {
    pub fn none() -> Self {
        Self {
            onset: None,
            apex: None,
            offset: None,
            peak_value: 0.0,
        }
    }
}

/// Centered moving average; the window shrinks at the sequence ends.
pub fn smooth_series(values: &[f64], window: usize) -> Result<Vec<f64>, AnalysisError> {
    if window % 2 == 0 {
        return Err(AnalysisError::EvenWindow(window));
    }
    if window == 1 {
        return Ok(values.to_vec());
    }
    let half = window / 2;
    let n = values.len();
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            values[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
        })
        .collect())
}

/// Finds onset, apex and offset on the smoothed series.
///
/// With peak `P`, the apex is the first maximum. Above-threshold runs are
/// maximal runs of at least `run_length` consecutive values `> theta·P`.
/// The onset starts the first such run that begins at or before the apex;
/// the offset ends the last such run that finishes at or after it.
pub fn detect_events(values: &[f64], params: &DetectParams) -> Result<RegionEvents, AnalysisError> {
    params.validate()?;
    let smoothed = smooth_series(values, params.smooth_window)?;
    let Some((apex, peak)) = smoothed
        .iter()
        .copied()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((i, v)),
        })
    else {
        return Ok(RegionEvents::none());
    };
    if !(peak > 0.0) {
        return Ok(RegionEvents::none());
    }

    let threshold = params.theta * peak;
    let mut runs = Vec::new();
    let mut start = None;
    for (i, &v) in smoothed.iter().enumerate() {
        match (v > threshold, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                runs.push((s, i - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, smoothed.len() - 1));
    }
    runs.retain(|(s, e)| e - s + 1 >= params.run_length);

    Ok(RegionEvents {
        onset: runs.iter().find(|(s, _)| *s <= apex).map(|r| r.0),
        apex: Some(apex),
        offset: runs.iter().rev().find(|(_, e)| *e >= apex).map(|r| r.1),
        peak_value: peak,
    })
}

/// Per-region events plus ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressionReport {
    /// Events keyed by region; positions are frame numbers.
    pub per_region: BTreeMap<String, RegionEvents>,
    pub dominant_region: Option<String>,
    /// Regions whose peak reaches `rho` × the dominant peak, by
    /// descending peak.
    pub deformed_regions: Vec<String>,
    pub deformation_detected: bool,
    pub parameters: AnalysisParams,
}

fn tie_key(name: &str, position: usize) -> usize {
    CANONICAL_ORDER
        .iter()
        .position(|c| *c == name)
        .unwrap_or(CANONICAL_ORDER.len() + position)
}

/// Detects events per region and ranks regions by peak.
pub fn rank_regions(
    series: &IntensitySeries,
    rho: f64,
    detect: &DetectParams,
) -> Result<ExpressionReport, AnalysisError> {
    if series.is_empty() || series.regions().is_empty() {
        return Err(AnalysisError::EmptySeries);
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(AnalysisError::InvalidRatio(rho));
    }
    detect.validate()?;

    let frame_of = |i: Option<usize>| i.map(|i| series.frames()[i]);
    let mut entries = Vec::with_capacity(series.regions().len());
    for (pos, name) in series.regions().iter().enumerate() {
        let ev = detect_events(&series.column(pos), detect)?;
        let ev = RegionEvents {
            onset: frame_of(ev.onset),
            apex: frame_of(ev.apex),
            offset: frame_of(ev.offset),
            peak_value: ev.peak_value,
        };
        entries.push((name.clone(), tie_key(name, pos), ev));
    }

    // descending peak, then canonical region order
    let mut ranked: Vec<&(String, usize, RegionEvents)> = entries.iter().collect();
    ranked.sort_by(|a, b| {
        b.2.peak_value
            .total_cmp(&a.2.peak_value)
            .then_with(|| a.1.cmp(&b.1))
    });
    let top = ranked[0];
    let detected = top.2.peak_value > 0.0;
    let dominant_region = detected.then(|| top.0.clone());
    let deformed_regions = if detected {
        let floor = rho * top.2.peak_value;
        ranked
            .iter()
            .filter(|e| e.2.peak_value > 0.0 && e.2.peak_value >= floor)
            .map(|e| e.0.clone())
            .collect()
    } else {
        Vec::new()
    };

    Ok(ExpressionReport {
        per_region: entries.into_iter().map(|(n, _, e)| (n, e)).collect(),
        dominant_region,
        deformed_regions,
        deformation_detected: detected,
        parameters: AnalysisParams {
            theta: detect.theta,
            run_length: detect.run_length,
            rho,
            smooth_window: detect.smooth_window,
        },
    })
}

/// Complete report for a series under `params`.
pub fn build_report(
    series: &IntensitySeries,
    params: &AnalysisParams,
) -> Result<ExpressionReport, AnalysisError> {
    params.validate()?;
    rank_regions(series, params.rho, &params.detect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intensity::{Mode, Units};
    use proptest::prelude::*;

    fn series(cols: &[(&str, Vec<f64>)]) -> IntensitySeries {
        let n = cols[0].1.len();
        IntensitySeries::new(
            cols.iter().map(|c| c.0.to_string()).collect(),
            (1..=n).collect(),
            (0..n).map(|i| cols.iter().map(|c| c.1[i]).collect()).collect(),
            Units::Pixels,
            Mode::Reference,
        )
        .unwrap()
    }

    fn triangle() -> Vec<f64> {
        (0..=100)
            .map(|i| if i <= 50 { i as f64 / 50.0 } else { (100 - i) as f64 / 50.0 })
            .collect()
    }

    /// Independent scan: starts/ends of above-threshold stretches of at
    /// least `k` values, checked element by element.
    fn brute_force_events(s: &[f64], theta: f64, k: usize) -> (usize, Option<usize>, Option<usize>) {
        let peak = s.iter().cloned().fold(f64::MIN, f64::max);
        let apex = s.iter().position(|&v| v == peak).unwrap();
        let thr = theta * peak;
        let above = |i: usize| s[i] > thr;
        let run_len_from = |i: usize| (i..s.len()).take_while(|&j| above(j)).count();
        let run_len_to = |j: usize| (0..=j).rev().take_while(|&i| above(i)).count();
        let onset = (0..=apex)
            .find(|&i| above(i) && (i == 0 || !above(i - 1)) && run_len_from(i) >= k);
        let offset = (apex..s.len())
            .rev()
            .find(|&j| above(j) && (j + 1 == s.len() || !above(j + 1)) && run_len_to(j) >= k);
        (apex, onset, offset)
    }

    #[test]
    fn smoothing_examples() {
        let v = [0.3, 0.1, 0.7];
        assert_eq!(smooth_series(&v, 1).unwrap(), v);
        let c = smooth_series(&[0.5; 9], 5).unwrap();
        assert!(c.iter().all(|x| (x - 0.5).abs() < 1e-15));
        assert_eq!(
            smooth_series(&[0.0, 0.0, 9.0, 0.0, 0.0], 3).unwrap(),
            [0.0, 3.0, 3.0, 3.0, 0.0]
        );
        assert_eq!(smooth_series(&v, 4), Err(AnalysisError::EvenWindow(4)));
        assert_eq!(smooth_series(&v, 0), Err(AnalysisError::EvenWindow(0)));
        assert!(smooth_series(&[], 3).unwrap().is_empty());
    }

    #[test]
    fn events_all_zero() {
        let ev = detect_events(&[0.0; 20], &DetectParams::default()).unwrap();
        assert_eq!(ev, RegionEvents::none());
        assert_eq!(detect_events(&[], &DetectParams::default()).unwrap(), RegionEvents::none());
    }

    #[test]
    fn events_triangle_match_scan() {
        let s = triangle();
        let p = DetectParams {
            theta: 0.1,
            run_length: 3,
            smooth_window: 1,
        };
        let ev = detect_events(&s, &p).unwrap();
        let (apex, onset, offset) = brute_force_events(&s, 0.1, 3);
        assert_eq!(ev.apex, Some(apex));
        assert_eq!(ev.onset, onset);
        assert_eq!(ev.offset, offset);
        // frozen from the scan above
        assert_eq!((ev.onset, ev.apex, ev.offset), (Some(6), Some(50), Some(94)));
        assert_eq!(ev.peak_value, 1.0);
    }

    #[test]
    fn events_tie_break_first_max() {
        let mut s = vec![0.0; 100];
        s[40] = 1.0;
        s[60] = 1.0;
        let p = DetectParams {
            smooth_window: 1,
            run_length: 1,
            ..DetectParams::default()
        };
        assert_eq!(detect_events(&s, &p).unwrap().apex, Some(40));
    }

    #[test]
    fn short_spike_has_no_onset() {
        let mut s = vec![0.0; 30];
        s[10] = 1.0;
        let p = DetectParams {
            smooth_window: 1,
            ..DetectParams::default()
        };
        let ev = detect_events(&s, &p).unwrap();
        assert_eq!((ev.onset, ev.apex, ev.offset), (None, Some(10), None));
    }

    #[test]
    fn invalid_params() {
        let bad = |theta, run_length| DetectParams {
            theta,
            run_length,
            smooth_window: 1,
        };
        assert!(matches!(
            detect_events(&[1.0], &bad(1.0, 3)),
            Err(AnalysisError::InvalidThreshold(_))
        ));
        assert!(matches!(
            detect_events(&[1.0], &bad(0.0, 3)),
            Err(AnalysisError::InvalidThreshold(_))
        ));
        assert!(matches!(
            detect_events(&[1.0], &bad(0.5, 0)),
            Err(AnalysisError::InvalidRunLength(0))
        ));
    }

    #[test]
    fn ranking_and_deformed_order() {
        let tri = triangle();
        let half: Vec<f64> = tri.iter().map(|v| v * 0.5).collect();
        let tiny: Vec<f64> = tri.iter().map(|v| v * 0.05).collect();
        let s = series(&[("eyes_eyebrows", half), ("cheeks", tiny), ("mouth", tri)]);
        let r = build_report(&s, &AnalysisParams::default()).unwrap();
        assert_eq!(r.dominant_region.as_deref(), Some("mouth"));
        assert_eq!(r.deformed_regions, ["mouth", "eyes_eyebrows"]);
        assert!(r.deformation_detected);
        // events are reported as frame numbers (series starts at frame 1)
        assert_eq!(r.per_region["mouth"].apex, Some(51));
    }

    #[test]
    fn ranking_ties_use_canonical_order() {
        let tri = triangle();
        let s = series(&[("mouth", tri.clone()), ("cheeks", tri.clone()), ("eyes_eyebrows", tri)]);
        let r = build_report(&s, &AnalysisParams::default()).unwrap();
        assert_eq!(r.dominant_region.as_deref(), Some("eyes_eyebrows"));
        assert_eq!(r.deformed_regions, ["eyes_eyebrows", "cheeks", "mouth"]);
    }

    #[test]
    fn all_zero_report() {
        let s = series(&[("eyes_eyebrows", vec![0.0; 10]), ("mouth", vec![0.0; 10])]);
        let r = build_report(&s, &AnalysisParams::default()).unwrap();
        assert_eq!(r.dominant_region, None);
        assert!(r.deformed_regions.is_empty());
        assert!(!r.deformation_detected);
    }

    #[test]
    fn empty_series_and_bad_rho() {
        let empty = IntensitySeries::new(vec!["a".into()], vec![], vec![], Units::Pixels, Mode::Reference)
            .unwrap();
        assert_eq!(
            build_report(&empty, &AnalysisParams::default()),
            Err(AnalysisError::EmptySeries)
        );
        let s = series(&[("a", vec![1.0; 5])]);
        assert!(matches!(
            rank_regions(&s, 0.0, &DetectParams::default()),
            Err(AnalysisError::InvalidRatio(_))
        ));
    }

    fn series_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (1usize..40).prop_flat_map(|n| {
            proptest::collection::vec(proptest::collection::vec(0.0f64..10.0, n), 3)
        })
    }

    proptest! {
        #[test]
        fn ordering_invariant(values in proptest::collection::vec(0.0f64..1.0, 0..80),
                              theta in 0.01f64..0.99, k in 1usize..6, w in 0usize..4) {
            let p = DetectParams { theta, run_length: k, smooth_window: 2 * w + 1 };
            let ev = detect_events(&values, &p).unwrap();
            if let (Some(on), Some(ap), Some(off)) = (ev.onset, ev.apex, ev.offset) {
                prop_assert!(on <= ap && ap <= off);
            }
            if let Some(ap) = ev.apex {
                let sm = smooth_series(&values, p.smooth_window).unwrap();
                prop_assert_eq!(ev.peak_value, sm[ap]);
            }
        }

        #[test]
        fn matches_brute_force(values in proptest::collection::vec(0.0f64..1.0, 1..80),
                               theta in 0.01f64..0.99, k in 1usize..6) {
            let p = DetectParams { theta, run_length: k, smooth_window: 1 };
            let ev = detect_events(&values, &p).unwrap();
            if values.iter().any(|&v| v > 0.0) {
                let (apex, onset, offset) = brute_force_events(&values, theta, k);
                prop_assert_eq!(ev.apex, Some(apex));
                prop_assert_eq!(ev.onset, onset);
                prop_assert_eq!(ev.offset, offset);
            }
        }

        #[test]
        fn scale_invariance(cols in series_strategy(), c in 1e-3f64..1e3) {
            let s = series(&[("eyes_eyebrows", cols[0].clone()), ("cheeks", cols[1].clone()), ("mouth", cols[2].clone())]);
            let p = AnalysisParams::default();
            let a = build_report(&s, &p).unwrap();
            let b = build_report(&s.scaled(c), &p).unwrap();
            prop_assert_eq!(&a.dominant_region, &b.dominant_region);
            prop_assert_eq!(&a.deformed_regions, &b.deformed_regions);
            for (name, ea) in &a.per_region {
                let eb = &b.per_region[name];
                prop_assert_eq!((ea.onset, ea.apex, ea.offset), (eb.onset, eb.apex, eb.offset));
                prop_assert!((eb.peak_value - c * ea.peak_value).abs() <= 1e-12 * c * ea.peak_value.max(1e-300));
            }
        }

        #[test]
        fn raising_rho_never_adds(cols in series_strategy(), r1 in 0.01f64..=1.0, r2 in 0.01f64..=1.0) {
            let s = series(&[("eyes_eyebrows", cols[0].clone()), ("cheeks", cols[1].clone()), ("mouth", cols[2].clone())]);
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let d = DetectParams::default();
            let a = rank_regions(&s, lo, &d).unwrap();
            let b = rank_regions(&s, hi, &d).unwrap();
            for name in &b.deformed_regions {
                prop_assert!(a.deformed_regions.contains(name));
            }
            prop_assert_eq!(rank_regions(&s, lo, &d).unwrap(), a);
        }
    }
}
