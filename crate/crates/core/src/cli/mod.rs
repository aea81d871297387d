//! The `facedeform` command line: `series`, `analyze`, `plot` and `synth`.
//!
//! Exit codes: 0 on success, 2 for data or I/O failures, 3 for invalid
//! configuration. Diagnostics go to standard error.

pub mod config;
pub mod plot;
pub mod series_csv;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::analysis::{build_report, AnalysisError, ExpressionReport};
use crate::flow::FlowError;
use crate::imageio::{self, FrameSequence};
use crate::intensity::{intensity_series, IntensityError, IntensitySeries, Mode, Units};
use crate::regions::{make_grid, parse_region_map, RegionError, RegionMap};
use crate::synth::{self, ActiveRegion, GroundTruth, Profile, SynthError};

pub use config::{ConfigFile, Overrides, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => EXIT_DATA,
            CliError::Config(_) => EXIT_CONFIG,
        }
    }

    pub(crate) fn data(e: impl std::fmt::Display) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<imageio::ImageError> for CliError {
    fn from(e: imageio::ImageError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<RegionError> for CliError {
    fn from(e: RegionError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<IntensityError> for CliError {
    fn from(e: IntensityError) -> Self {
        match e {
            IntensityError::Flow(f) => f.into(),
            IntensityError::Region(r) => r.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::EmptySeries => CliError::Data(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "facedeform", version, about = "Facial-feature deformation from optical flow")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute per-region intensity curves and write series.csv
    Series(SeriesArgs),
    /// Detect onset/apex/offset per region and write report.json
    Analyze(AnalyzeArgs),
    /// Render a series.csv as an SVG line chart
    Plot(PlotArgs),
    /// Generate a synthetic frame directory with ground truth
    Synth(SynthArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct PipelineArgs {
    /// Flat key=value config file; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory of PGM/PPM frames
    #[arg(long)]
    pub frames: Option<PathBuf>,
    /// Filename glob selecting frames inside --frames
    #[arg(long)]
    pub glob: Option<String>,
    /// Region map file (defaults to the bundled layout)
    #[arg(long)]
    pub regions: Option<PathBuf>,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    #[arg(long)]
    pub window_radius: Option<usize>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub eigen_threshold: Option<f64>,
    #[arg(long)]
    pub pyramid_levels: Option<usize>,
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<Mode>,
    #[arg(long, value_parser = parse_units)]
    pub units: Option<Units>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct AnalysisArgs {
    /// Event threshold as a fraction of each region's peak
    #[arg(long)]
    pub theta: Option<f64>,
    /// Minimum consecutive above-threshold frames
    #[arg(long)]
    pub run_length: Option<usize>,
    /// Significance ratio against the dominant peak
    #[arg(long)]
    pub rho: Option<f64>,
    /// Odd moving-average window applied before detection
    #[arg(long)]
    pub smooth_window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Existing series.csv; when absent the series is computed from --frames
    #[arg(long)]
    pub series: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub series: PathBuf,
    /// SVG path, or a directory that receives plot.svg
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value = "facial feature intensity")]
    pub title: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Translate,
    Expression,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = SynthKind::Expression)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 160)]
    pub width: usize,
    #[arg(long, default_value_t = 240)]
    pub height: usize,
    /// Number of frames to generate
    #[arg(short = 'n', long, default_value_t = 50)]
    pub num_frames: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Horizontal shift per frame (translate)
    #[arg(long, default_value_t = 0.5)]
    pub dx: f64,
    /// Vertical shift per frame (translate)
    #[arg(long, default_value_t = 0.0)]
    pub dy: f64,
    /// Moving region (expression): NAME:AMP:ONSET:APEX:OFFSET or
    /// NAME:AMP:ONSET:APEX:RELEASE:OFFSET, optional @DEGREES suffix
    #[arg(long = "active")]
    pub active: Vec<String>,
    #[arg(long, default_value_t = crate::regions::DEFAULT_ROWS)]
    pub rows: usize,
    #[arg(long, default_value_t = crate::regions::DEFAULT_COLS)]
    pub cols: usize,
    #[arg(long)]
    pub regions: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_units(s: &str) -> Result<Units, String> {
    s.parse()
}

impl PipelineArgs {
    fn overrides(&self, analysis: Option<&AnalysisArgs>) -> Overrides {
        let a = analysis.cloned().unwrap_or_default();
        Overrides {
            frames: self.frames.clone(),
            glob: self.glob.clone(),
            regions: self.regions.clone(),
            rows: self.rows,
            cols: self.cols,
            window_radius: self.window_radius,
            sigma: self.sigma,
            eigen_threshold: self.eigen_threshold,
            pyramid_levels: self.pyramid_levels,
            mode: self.mode,
            units: self.units,
            theta: a.theta,
            run_length: a.run_length,
            rho: a.rho,
            smooth_window: a.smooth_window,
            out: self.out.clone(),
        }
    }

    fn resolve(&self, analysis: Option<&AnalysisArgs>) -> Result<RunConfig, CliError> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        RunConfig::resolve(&self.overrides(analysis), &file)
    }
}

/// Entry point shared by the binary and tests. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Series(a) => cmd_series(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Plot(a) => cmd_plot(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_region_map(cfg: &RunConfig) -> Result<RegionMap, CliError> {
    match &cfg.regions {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read region map {}: {e}", path.display()))
            })?;
            parse_region_map(&text, cfg.rows, cfg.cols)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
        }
        None => {
            let map = RegionMap::default_layout();
            if (map.rows(), map.cols()) != (cfg.rows, cfg.cols) {
                return Err(CliError::Config(format!(
                    "the bundled region map needs a {}x{} grid; pass --regions for {}x{}",
                    map.rows(),
                    map.cols(),
                    cfg.rows,
                    cfg.cols
                )));
            }
            Ok(map)
        }
    }
}

/// Loads frames and computes the intensity series for a resolved config.
pub fn compute_series(cfg: &RunConfig) -> Result<IntensitySeries, CliError> {
    let dir = cfg
        .frames
        .as_ref()
        .ok_or_else(|| CliError::Config("--frames is required".into()))?;
    // region map problems are configuration errors; report them before
    // touching the frames
    let map = load_region_map(cfg)?;
    let seq: FrameSequence = imageio::load_sequence(dir, &cfg.glob)?;
    if seq.len() < 2 {
        return Err(CliError::Data(format!(
            "{}: need at least 2 frames, found {}",
            dir.display(),
            seq.len()
        )));
    }
    let (w, h) = seq.dims();
    let grid = make_grid(w, h, cfg.rows, cfg.cols)?;
    Ok(intensity_series(&seq, &grid, &map, &cfg.flow, cfg.mode, cfg.units)?)
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn report_json(report: &ExpressionReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn cmd_series(args: &SeriesArgs) -> Result<(), CliError> {
    let cfg = args.pipeline.resolve(None)?;
    let series = compute_series(&cfg)?;
    ensure_dir(&cfg.out)?;
    series_csv::write_series(&cfg.out.join("series.csv"), &series)
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let cfg = args.pipeline.resolve(Some(&args.analysis))?;
    let series = match &args.series {
        Some(path) => series_csv::read_series(path)?,
        None => compute_series(&cfg)?,
    };
    let report = build_report(&series, &cfg.analysis)?;
    ensure_dir(&cfg.out)?;
    write_file(&cfg.out.join("report.json"), report_json(&report).as_bytes())
}

fn cmd_plot(args: &PlotArgs) -> Result<(), CliError> {
    let series = series_csv::read_series(&args.series)?;
    let svg = plot::render_svg(&series, &args.title);
    let target = if args.out.extension().is_some_and(|e| e == "svg") {
        if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
            ensure_dir(parent)?;
        }
        args.out.clone()
    } else {
        ensure_dir(&args.out)?;
        args.out.join("plot.svg")
    };
    write_file(&target, svg.as_bytes())
}

/// Parses `NAME:AMP:ONSET:APEX:OFFSET[@DEG]` or
/// `NAME:AMP:ONSET:APEX:RELEASE:OFFSET[@DEG]`.
pub fn parse_active(arg: &str) -> Result<ActiveRegion, CliError> {
    let bad = || CliError::Config(format!("invalid --active '{arg}'"));
    let (body, direction) = match arg.split_once('@') {
        Some((b, d)) => (b, Some(d.parse::<f64>().map_err(|_| bad())?)),
        None => (arg, None),
    };
    let parts: Vec<&str> = body.split(':').collect();
    if parts.len() != 5 && parts.len() != 6 {
        return Err(bad());
    }
    let amplitude: f64 = parts[1].parse().map_err(|_| bad())?;
    let frames = parts[2..]
        .iter()
        .map(|p| p.parse::<usize>().map_err(|_| bad()))
        .collect::<Result<Vec<_>, _>>()?;
    let profile = match frames[..] {
        [on, ap, off] => Profile::triangle(on, ap, off),
        [on, ap, rel, off] => Profile::with_hold(on, ap, rel, off),
        _ => return Err(bad()),
    };
    let region = ActiveRegion::new(parts[0], amplitude, profile);
    Ok(match direction {
        Some(d) => region.with_direction_deg(d),
        None => region,
    })
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let (seq, truth): (FrameSequence, GroundTruth) = match args.kind {
        SynthKind::Translate => {
            let base = synth::make_texture(args.width, args.height, args.seed)?;
            synth::translate_sequence(&base, args.dx, args.dy, args.num_frames)?
        }
        SynthKind::Expression => {
            let grid = make_grid(args.width, args.height, args.rows, args.cols)?;
            let map = match &args.regions {
                Some(path) => {
                    let text = fs::read_to_string(path).map_err(|e| {
                        CliError::Config(format!("cannot read region map {}: {e}", path.display()))
                    })?;
                    parse_region_map(&text, args.rows, args.cols)?
                }
                None => RegionMap::default_layout(),
            };
            let active = args
                .active
                .iter()
                .map(|s| parse_active(s))
                .collect::<Result<Vec<_>, _>>()?;
            synth::synth_expression(&grid, &map, &active, args.num_frames, args.seed)?
        }
    };
    ensure_dir(&args.out)?;
    let digits = (seq.len().saturating_sub(1)).to_string().len().max(4);
    for (t, frame) in seq.frames().iter().enumerate() {
        let path = args.out.join(format!("frame_{t:0digits$}.pgm"));
        write_file(&path, &imageio::encode_pgm(frame))?;
    }
    write_file(&args.out.join("ground_truth.csv"), truth.to_csv().as_bytes())
}
