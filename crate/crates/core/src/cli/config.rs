//! Run configuration: a flat `key = value` file whose keys are the long
//! flag names, overridden by command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::AnalysisParams;
use crate::flow::FlowParams;
use crate::intensity::{Mode, Units};
use crate::regions::{DEFAULT_COLS, DEFAULT_ROWS};

use super::CliError;

pub const KEYS: [&str; 16] = [
    "frames",
    "glob",
    "regions",
    "rows",
    "cols",
    "window-radius",
    "sigma",
    "eigen-threshold",
    "pyramid-levels",
    "mode",
    "units",
    "theta",
    "run-length",
    "rho",
    "smooth-window",
    "out",
];

const PATH_KEYS: [&str; 3] = ["frames", "regions", "out"];

pub const DEFAULT_GLOB: &str = "*.p[gp]m";

/// Parsed config file. Relative paths are resolved against the file's
/// directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("config line {}: expected key = value", i + 1))
            })?;
            let key = key.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!(
                    "config line {}: unknown key '{key}'",
                    i + 1
                )));
            }
            let mut value = value.trim().to_string();
            if PATH_KEYS.contains(&key.as_str()) && Path::new(&value).is_relative() {
                value = base_dir.join(&value).to_string_lossy().into_owned();
            }
            values.insert(key, value);
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::Config(format!("config key '{key}': invalid value '{v}'")))
            })
            .transpose()
    }
}

/// Flag values as given on the command line; `None` means "not given".
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub frames: Option<PathBuf>,
    pub glob: Option<String>,
    pub regions: Option<PathBuf>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub window_radius: Option<usize>,
    pub sigma: Option<f64>,
    pub eigen_threshold: Option<f64>,
    pub pyramid_levels: Option<usize>,
    pub mode: Option<Mode>,
    pub units: Option<Units>,
    pub theta: Option<f64>,
    pub run_length: Option<usize>,
    pub rho: Option<f64>,
    pub smooth_window: Option<usize>,
    pub out: Option<PathBuf>,
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub frames: Option<PathBuf>,
    pub glob: String,
    pub regions: Option<PathBuf>,
    pub rows: usize,
    pub cols: usize,
    pub flow: FlowParams,
    pub mode: Mode,
    pub units: Units,
    pub analysis: AnalysisParams,
    pub out: PathBuf,
}

impl RunConfig {
    /// Merges flags over the config file over defaults, then validates.
    pub fn resolve(flags: &Overrides, file: &ConfigFile) -> Result<Self, CliError> {
        fn pick<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str) -> Result<Option<T>, CliError> {
            match flag {
                Some(v) => Ok(Some(v)),
                None => file.get(key),
            }
        }
        let flow_d = FlowParams::default();
        let an_d = AnalysisParams::default();
        let cfg = RunConfig {
            frames: pick(flags.frames.clone(), file, "frames")?,
            glob: pick(flags.glob.clone(), file, "glob")?.unwrap_or_else(|| DEFAULT_GLOB.into()),
            regions: pick(flags.regions.clone(), file, "regions")?,
            rows: pick(flags.rows, file, "rows")?.unwrap_or(DEFAULT_ROWS),
            cols: pick(flags.cols, file, "cols")?.unwrap_or(DEFAULT_COLS),
            flow: FlowParams {
                window_radius: pick(flags.window_radius, file, "window-radius")?
                    .unwrap_or(flow_d.window_radius),
                smooth_sigma: pick(flags.sigma, file, "sigma")?.unwrap_or(flow_d.smooth_sigma),
                eigen_threshold: pick(flags.eigen_threshold, file, "eigen-threshold")?
                    .unwrap_or(flow_d.eigen_threshold),
                pyramid_levels: pick(flags.pyramid_levels, file, "pyramid-levels")?
                    .unwrap_or(flow_d.pyramid_levels),
            },
            mode: pick(flags.mode, file, "mode")?.unwrap_or_default(),
            units: pick(flags.units, file, "units")?.unwrap_or_default(),
            analysis: AnalysisParams {
                theta: pick(flags.theta, file, "theta")?.unwrap_or(an_d.theta),
                run_length: pick(flags.run_length, file, "run-length")?.unwrap_or(an_d.run_length),
                rho: pick(flags.rho, file, "rho")?.unwrap_or(an_d.rho),
                smooth_window: pick(flags.smooth_window, file, "smooth-window")?
                    .unwrap_or(an_d.smooth_window),
            },
            out: pick(flags.out.clone(), file, "out")?.unwrap_or_else(|| PathBuf::from(".")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(CliError::Config("rows and cols must be >= 1".into()));
        }
        self.flow
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.analysis
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file = ConfigFile::parse(
            "# run\nwindow_radius = 4\nsigma=0.5\nmode = consecutive\nregions = r.txt\n",
            Path::new("/cfg"),
        )
        .unwrap();
        let flags = Overrides {
            window_radius: Some(9),
            ..Overrides::default()
        };
        let cfg = RunConfig::resolve(&flags, &file).unwrap();
        assert_eq!(cfg.flow.window_radius, 9);
        assert_eq!(cfg.flow.smooth_sigma, 0.5);
        assert_eq!(cfg.mode, Mode::Consecutive);
        assert_eq!(cfg.regions, Some(PathBuf::from("/cfg/r.txt")));
        assert_eq!(cfg.rows, 6);
        assert_eq!(cfg.analysis, AnalysisParams::default());
    }

    #[test]
    fn rejects_bad_config() {
        assert!(ConfigFile::parse("bogus = 1", Path::new(".")).is_err());
        assert!(ConfigFile::parse("rows", Path::new(".")).is_err());
        let file = ConfigFile::parse("rows = six", Path::new(".")).unwrap();
        assert!(RunConfig::resolve(&Overrides::default(), &file).is_err());
        let flags = Overrides {
            theta: Some(1.5),
            ..Overrides::default()
        };
        assert!(matches!(
            RunConfig::resolve(&flags, &ConfigFile::default()),
            Err(CliError::Config(_))
        ));
    }
}
