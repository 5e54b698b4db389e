//! Scenario files, batch runs over seeds and time-series export.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationData;
use crate::engine::{ActionFields, Intervention, MetricsSnapshot, SimConfig, SimState};
use crate::error::{Error, Result};
use crate::model::{Criterion, Mode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_agents")]
    pub n_agents: usize,
    pub ticks: u64,
    pub seeds: Vec<u64>,
    #[serde(default = "yes")]
    pub biases: bool,
    #[serde(default = "yes")]
    pub habits: bool,
}

fn default_agents() -> usize {
    200
}

fn yes() -> bool {
    true
}

impl ScenarioConfig {
    pub fn sim_config(&self, seed: u64) -> SimConfig {
        SimConfig {
            n_agents: self.n_agents,
            seed,
            biases_enabled: self.biases,
            habits_enabled: self.habits,
            ..SimConfig::default()
        }
    }
}

/// An intervention scheduled at `at`, optionally repeated `count` times
/// every `every` ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioEvent {
    pub at: u64,
    pub every: Option<u64>,
    pub count: Option<u64>,
    pub action: Intervention,
}

impl ScenarioEvent {
    pub fn once(at: u64, action: Intervention) -> Self {
        ScenarioEvent { at, every: None, count: None, action }
    }

    /// Ticks at which this event fires.
    pub fn ticks(&self) -> impl Iterator<Item = u64> + '_ {
        let n = self.count.unwrap_or(1);
        let every = self.every.unwrap_or(0);
        (0..n).map(move |k| self.at + k * every)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub events: Vec<ScenarioEvent>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    config: ScenarioConfig,
    #[serde(default)]
    events: Vec<RawEvent>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvent {
    at: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    every: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    count: Option<i64>,
    action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    criterion: Option<Criterion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<String>,
}

fn scenario_error(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Scenario { path: path.into(), message: message.into() }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawScenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        scenario_error(path, e.into_inner().to_string())
    })?;
    if raw.config.n_agents == 0 {
        return Err(scenario_error("config.n_agents", "must be at least 1"));
    }
    if raw.config.seeds.is_empty() {
        return Err(scenario_error("config.seeds", "needs at least one seed"));
    }
    let mut events = Vec::with_capacity(raw.events.len());
    for (i, e) in raw.events.into_iter().enumerate() {
        let at = u64::try_from(e.at).map_err(|_| scenario_error(format!("events[{i}].at"), "must be non-negative"))?;
        let every = match e.every {
            Some(v) if v <= 0 => return Err(scenario_error(format!("events[{i}].every"), "must be positive")),
            Some(v) => Some(v as u64),
            None => None,
        };
        let count = match e.count {
            Some(v) if v <= 0 => return Err(scenario_error(format!("events[{i}].count"), "must be positive")),
            Some(v) => Some(v as u64),
            None => None,
        };
        if count.unwrap_or(1) > 1 && every.is_none() {
            return Err(scenario_error(format!("events[{i}].every"), "required when count > 1"));
        }
        let fields = ActionFields {
            action: e.action,
            mode: e.mode,
            criterion: e.criterion,
            delta: e.delta,
            value: e.value,
            target: e.target,
        };
        let action = Intervention::try_from(fields)
            .map_err(|err| scenario_error(format!("events[{i}].action"), err.to_string()))?;
        events.push(ScenarioEvent { at, every, count, action });
    }
    Ok(Scenario { config: raw.config, events })
}

impl Scenario {
    pub fn to_json(&self) -> Result<String> {
        let events = self
            .events
            .iter()
            .map(|e| {
                let f = ActionFields::from(e.action.clone());
                RawEvent {
                    at: e.at as i64,
                    every: e.every.map(|v| v as i64),
                    count: e.count.map(|v| v as i64),
                    action: f.action,
                    mode: f.mode,
                    criterion: f.criterion,
                    delta: f.delta,
                    value: f.value,
                    target: f.target,
                }
            })
            .collect();
        Ok(serde_json::to_string_pretty(&RawScenario { config: self.config.clone(), events })?)
    }

    /// Every firing, sorted by tick; same-tick firings keep file order.
    pub fn timeline(&self) -> Vec<(u64, Intervention)> {
        let mut out: Vec<(u64, Intervention)> =
            self.events.iter().flat_map(|e| e.ticks().map(move |t| (t, e.action.clone()))).collect();
        out.sort_by_key(|(t, _)| *t);
        out
    }
}

/// The snapshots of one seed plus the final state.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub snapshots: Vec<MetricsSnapshot>,
    pub final_state: SimState,
}

/// Runs one seed: before each step, every intervention due at the current
/// tick is applied.
pub fn run_seed(scenario: &Scenario, seed: u64, calib: &CalibrationData) -> Result<SeedRun> {
    let timeline = scenario.timeline();
    let mut state = SimState::init(calib, scenario.config.sim_config(seed))?;
    let mut next = 0;
    let mut snapshots = Vec::with_capacity(scenario.config.ticks as usize);
    for t in 0..scenario.config.ticks {
        while next < timeline.len() && timeline[next].0 <= t {
            state.apply(&timeline[next].1)?;
            next += 1;
        }
        snapshots.push(state.step());
    }
    Ok(SeedRun { seed, snapshots, final_state: state })
}

/// Runs every seed of the scenario, one thread per seed. Output follows the
/// scenario's seed order.
pub fn run_scenario(scenario: &Scenario, calib: &CalibrationData) -> Result<Vec<SeedRun>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = scenario
            .config
            .seeds
            .iter()
            .map(|&seed| scope.spawn(move || run_seed(scenario, seed, calib)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("seed worker panicked")).collect()
    })
}

pub const CSV_HEADER: &str = "tick,share_car,share_bike,share_bus,share_walk,sat_car,sat_bike,sat_bus,sat_walk,\
n_by_habit,n_habit_contrary,n_biased,n_constrained";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::UnknownName { kind: "format", name: other.into() }),
        }
    }
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

pub fn csv_row(m: &MetricsSnapshot) -> String {
    let mut row = m.tick.to_string();
    for s in m.shares.0 {
        let _ = write!(row, ",{s}");
    }
    for s in m.satisfaction.0 {
        match s {
            Some(v) => {
                let _ = write!(row, ",{v}");
            }
            None => row.push(','),
        }
    }
    let c = &m.counts;
    let _ = write!(row, ",{},{},{},{}", c.by_habit, c.habit_contrary, c.biased, c.constrained);
    row
}

pub fn to_csv(series: &[MetricsSnapshot]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for m in series {
        out.push_str(&csv_row(m));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct JsonRow {
    tick: u64,
    share_car: f64,
    share_bike: f64,
    share_bus: f64,
    share_walk: f64,
    sat_car: Option<f64>,
    sat_bike: Option<f64>,
    sat_bus: Option<f64>,
    sat_walk: Option<f64>,
    n_by_habit: u32,
    n_habit_contrary: u32,
    n_biased: u32,
    n_constrained: u32,
}

pub fn to_json(series: &[MetricsSnapshot]) -> Result<String> {
    let rows: Vec<JsonRow> = series
        .iter()
        .map(|m| JsonRow {
            tick: m.tick,
            share_car: m.shares[Mode::Car],
            share_bike: m.shares[Mode::Bike],
            share_bus: m.shares[Mode::Bus],
            share_walk: m.shares[Mode::Walk],
            sat_car: m.satisfaction[Mode::Car],
            sat_bike: m.satisfaction[Mode::Bike],
            sat_bus: m.satisfaction[Mode::Bus],
            sat_walk: m.satisfaction[Mode::Walk],
            n_by_habit: m.counts.by_habit,
            n_habit_contrary: m.counts.habit_contrary,
            n_biased: m.counts.biased,
            n_constrained: m.counts.constrained,
        })
        .collect();
    Ok(serde_json::to_string_pretty(&rows)? + "\n")
}

pub fn render(series: &[MetricsSnapshot], format: Format) -> Result<String> {
    match format {
        Format::Csv => Ok(to_csv(series)),
        Format::Json => to_json(series),
    }
}

pub fn export(series: &[MetricsSnapshot], format: Format, path: &Path) -> Result<()> {
    let text = render(series, format)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

/// Numeric CSV columns after `tick`, in header order.
fn numeric_cells(m: &MetricsSnapshot) -> [Option<f64>; 12] {
    let c = &m.counts;
    [
        Some(m.shares[Mode::Car]),
        Some(m.shares[Mode::Bike]),
        Some(m.shares[Mode::Bus]),
        Some(m.shares[Mode::Walk]),
        m.satisfaction[Mode::Car],
        m.satisfaction[Mode::Bike],
        m.satisfaction[Mode::Bus],
        m.satisfaction[Mode::Walk],
        Some(f64::from(c.by_habit)),
        Some(f64::from(c.habit_contrary)),
        Some(f64::from(c.biased)),
        Some(f64::from(c.constrained)),
    ]
}

/// Per-tick mean and sample standard deviation across seeds. Absent
/// satisfaction values are left out of their column's statistics.
pub fn aggregate_csv(runs: &[SeedRun]) -> String {
    let names: Vec<&str> = CSV_HEADER.split(',').skip(1).collect();
    let mut out = String::from("tick");
    for n in &names {
        let _ = write!(out, ",{n}_mean,{n}_sd");
    }
    out.push('\n');
    let ticks = runs.iter().map(|r| r.snapshots.len()).min().unwrap_or(0);
    for t in 0..ticks {
        let _ = write!(out, "{}", runs[0].snapshots[t].tick);
        let cells: Vec<[Option<f64>; 12]> = runs.iter().map(|r| numeric_cells(&r.snapshots[t])).collect();
        for col in 0..names.len() {
            let xs: Vec<f64> = cells.iter().filter_map(|c| c[col]).collect();
            if xs.is_empty() {
                out.push_str(",,");
            } else {
                let mean = crate::calibration::mean(&xs);
                let sd = crate::calibration::sample_stdev(&xs);
                let _ = write!(out, ",{mean},{sd}");
            }
        }
        out.push('\n');
    }
    out
}

/// Bundled scenario files, by name.
pub const PRESETS: [(&str, &str); 6] = [
    ("bike_safety", include_str!("../scenarios/bike_safety.json")),
    ("bike_safety_no_reset", include_str!("../scenarios/bike_safety_no_reset.json")),
    ("car_comfort", include_str!("../scenarios/car_comfort.json")),
    ("bus_bias", include_str!("../scenarios/bus_bias.json")),
    ("bus_bias_unbiased", include_str!("../scenarios/bus_bias_unbiased.json")),
    ("default", include_str!("../scenarios/default.json")),
];

pub fn preset(name: &str) -> Option<Scenario> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, text)| parse_scenario(text).expect("bundled preset parses"))
}
