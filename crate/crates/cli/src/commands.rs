//! `calibrate` and `run`: file in, file out.

use std::fmt;
use std::path::{Path, PathBuf};

use modal_core::calibration::{calibrate, default_caps, embedded, parse_caps, parse_survey, CalibrationData, ColumnMapping};
use modal_core::model::Mode;
use modal_core::scenario::{aggregate_csv, parse_scenario, preset, render, run_scenario, Format, Scenario};

/// A failed command. Validation errors (bad input content) exit with 2,
/// everything else with 1.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<modal_core::Error> for CliError {
    fn from(e: modal_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// The embedded defaults, or a calibration file written by `calibrate`.
pub fn load_calibration(path: Option<&Path>) -> Result<CalibrationData, CliError> {
    match path {
        None => Ok(embedded()),
        Some(p) => CalibrationData::from_json(&read(p)?)
            .map_err(|e| CliError::Validation(format!("calibration file {}: {e}", p.display()))),
    }
}

/// A scenario file path, or the name of a bundled preset. Returns the
/// scenario and the stem used to name output files.
pub fn load_scenario(arg: &str) -> Result<(Scenario, String), CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario").to_string();
        let scenario =
            parse_scenario(&read(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        return Ok((scenario, stem));
    }
    match preset(arg) {
        Some(s) => Ok((s, arg.to_string())),
        None => Err(CliError::Validation(format!("`{arg}` is neither a scenario file nor a bundled preset"))),
    }
}

pub struct CalibrateArgs {
    pub survey: PathBuf,
    pub caps: Option<String>,
    pub mapping: Option<PathBuf>,
    pub out: PathBuf,
}

/// Calibrates from a survey file and writes the calibration JSON. Returns a
/// short human-readable report.
pub fn run_calibrate(args: &CalibrateArgs) -> Result<String, CliError> {
    let mapping = match &args.mapping {
        None => ColumnMapping::default(),
        Some(p) => ColumnMapping::from_json(&read(p)?)
            .map_err(|e| CliError::Validation(format!("mapping file {}: {e}", p.display())))?,
    };
    let caps = match &args.caps {
        None => default_caps(),
        Some(spec) => parse_caps(spec)?,
    };
    let file = std::fs::File::open(&args.survey)
        .map_err(|e| CliError::Runtime(format!("cannot read {}: {e}", args.survey.display())))?;
    let parsed = parse_survey(file, &mapping)?;
    let calib = calibrate(&parsed, &caps, &args.survey.display().to_string())?;
    write(&args.out, &calib.to_json()?)?;

    let mut report = format!(
        "{} responses kept, {} rows dropped; calibration written to {}",
        parsed.responses.len(),
        parsed.dropped,
        args.out.display()
    );
    if let Some(excl) = &calib.provenance.exclusions {
        let parts: Vec<String> = Mode::ALL.iter().map(|&m| format!("{m} {}", excl[m])).collect();
        report.push_str(&format!("\ndistance exclusions: {}", parts.join(", ")));
    }
    for m in Mode::ALL {
        let d = calib.distance_stats[m];
        report.push_str(&format!("\n{m}: n={} distance mean {:.2} km (sd {:.2})", d.n, d.mean, d.stdev));
    }
    Ok(report)
}

pub struct RunArgs {
    pub scenario: String,
    pub calibration: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// What `run` produced: files written, or the text to print when no output
/// directory was given.
pub enum RunOutput {
    Files(Vec<PathBuf>),
    Stdout(String),
}

/// Runs every seed of a scenario. With an output directory, writes one file
/// per seed plus, for several seeds, an aggregate CSV of per-tick means and
/// standard deviations. Without one, returns a single seed's series or the
/// aggregate.
pub fn run_run(args: &RunArgs) -> Result<RunOutput, CliError> {
    let (scenario, stem) = load_scenario(&args.scenario)?;
    let calib = load_calibration(args.calibration.as_deref())?;
    let runs = run_scenario(&scenario, &calib)?;

    let Some(dir) = &args.out else {
        return Ok(RunOutput::Stdout(match (runs.as_slice(), args.format) {
            ([single], format) => render(&single.snapshots, format)?,
            (_, Format::Csv) => aggregate_csv(&runs),
            (_, Format::Json) => {
                let seeds: Vec<serde_json::Value> = runs
                    .iter()
                    .map(|r| {
                        let series: serde_json::Value =
                            serde_json::from_str(&render(&r.snapshots, Format::Json)?).map_err(modal_core::Error::from)?;
                        Ok(serde_json::json!({ "seed": r.seed, "series": series }))
                    })
                    .collect::<Result<_, CliError>>()?;
                serde_json::to_string_pretty(&serde_json::json!({ "seeds": seeds })).map_err(modal_core::Error::from)?
            }
        }));
    };

    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    for r in &runs {
        let path = dir.join(format!("{stem}_seed{}.{}", r.seed, args.format.extension()));
        write(&path, &render(&r.snapshots, args.format)?)?;
        written.push(path);
    }
    if runs.len() > 1 {
        let path = dir.join(format!("{stem}_aggregate.csv"));
        write(&path, &aggregate_csv(&runs))?;
        written.push(path);
    }
    Ok(RunOutput::Files(written))
}
