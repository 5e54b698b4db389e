//! Live steering sessions: the message protocol and a transport-free session
//! that owns one simulation.
//!
//! Clients send JSON objects `{"id": <int>, "type": <string>, ...}`. Every
//! command is answered by exactly one `ack` or `error` carrying its id. Tick
//! metrics are pushed as `tick_metrics` events with strictly increasing ticks.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::calibration::CalibrationData;
use crate::engine::{ActionFields, Intervention, MetricsSnapshot, SimConfig, SimState};
use crate::error::Result;
use crate::model::{perceive, Criterion, Mode, ModeGrid, PerMode};
use crate::scenario::{Scenario, ScenarioConfig, ScenarioEvent};

pub const DEFAULT_SPEED: f64 = 10.0;
pub const MAX_SPEED: f64 = 1000.0;
pub const MAX_STEP: u32 = 10_000;
pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewKind {
    Metrics,
    Agents,
    Layout,
    PrioritiesHistogram,
    ValuesHistogram,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Pause,
    Resume,
    Step(u32),
    SetSpeed(f64),
    Intervene(Intervention),
    ResetHabits,
    SnapshotRequest(ViewKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientCommand {
    pub id: u64,
    pub command: Command,
}

/// A rejected message, with the id when one could be read.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandError {
    pub id: Option<u64>,
    pub message: String,
}

impl ClientCommand {
    pub fn parse(text: &str) -> std::result::Result<Self, CommandError> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| CommandError { id: None, message: format!("malformed JSON: {e}") })?;
        let Value::Object(mut obj) = value else {
            return Err(CommandError { id: None, message: "command must be a JSON object".into() });
        };
        let id = obj.remove("id").and_then(|v| v.as_u64());
        let fail = |message: String| CommandError { id, message };
        let id = id.ok_or_else(|| fail("missing integer `id`".into()))?;
        let kind = match obj.remove("type") {
            Some(Value::String(s)) => s,
            _ => return Err(fail("missing string `type`".into())),
        };
        let rest = Value::Object(obj);
        let no_payload = |cmd: Command| {
            if rest.as_object().is_some_and(|o| !o.is_empty()) {
                Err(fail(format!("`{kind}` takes no payload")))
            } else {
                Ok(cmd)
            }
        };
        let command = match kind.as_str() {
            "pause" => no_payload(Command::Pause)?,
            "resume" => no_payload(Command::Resume)?,
            "reset_habits" => no_payload(Command::ResetHabits)?,
            "step" => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct P {
                    #[serde(default = "one")]
                    n: u32,
                }
                fn one() -> u32 {
                    1
                }
                let p: P = serde_json::from_value(rest).map_err(|e| fail(e.to_string()))?;
                if p.n == 0 || p.n > MAX_STEP {
                    return Err(fail(format!("step count must lie in 1..={MAX_STEP}")));
                }
                Command::Step(p.n)
            }
            "set_speed" => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct P {
                    ticks_per_second: f64,
                }
                let p: P = serde_json::from_value(rest).map_err(|e| fail(e.to_string()))?;
                if !(p.ticks_per_second > 0.0 && p.ticks_per_second <= MAX_SPEED) {
                    return Err(fail(format!("speed must lie in (0, {MAX_SPEED}] ticks per second")));
                }
                Command::SetSpeed(p.ticks_per_second)
            }
            "intervene" => {
                let fields: ActionFields = serde_json::from_value(rest).map_err(|e| fail(e.to_string()))?;
                Command::Intervene(Intervention::try_from(fields).map_err(|e| fail(e.to_string()))?)
            }
            "snapshot_request" => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct P {
                    view: ViewKind,
                }
                let p: P = serde_json::from_value(rest).map_err(|e| fail(e.to_string()))?;
                Command::SnapshotRequest(p.view)
            }
            other => return Err(fail(format!("unknown command type `{other}`"))),
        };
        Ok(ClientCommand { id, command })
    }

    pub fn to_json(&self) -> String {
        let mut obj = serde_json::Map::new();
        obj.insert("id".into(), self.id.into());
        let kind = match &self.command {
            Command::Pause => "pause",
            Command::Resume => "resume",
            Command::ResetHabits => "reset_habits",
            Command::Step(n) => {
                obj.insert("n".into(), (*n).into());
                "step"
            }
            Command::SetSpeed(s) => {
                obj.insert("ticks_per_second".into(), (*s).into());
                "set_speed"
            }
            Command::Intervene(i) => {
                if let Ok(Value::Object(fields)) = serde_json::to_value(i) {
                    obj.extend(fields);
                }
                "intervene"
            }
            Command::SnapshotRequest(v) => {
                obj.insert("view".into(), serde_json::to_value(v).expect("view serializes"));
                "snapshot_request"
            }
        };
        obj.insert("type".into(), kind.into());
        Value::Object(obj).to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentView {
    pub id: u32,
    pub mode: Mode,
    pub usual_mode: Option<Mode>,
    pub satisfaction: f64,
    pub distance_km: f64,
}

/// Bin counts over [0, 100] per mode and criterion.
pub type Histograms = PerMode<std::collections::BTreeMap<Criterion, [u32; HISTOGRAM_BINS]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "view", rename_all = "snake_case")]
pub enum StateView {
    Metrics { metrics: MetricsSnapshot },
    Agents { agents: Vec<AgentView> },
    Layout { layout: ModeGrid },
    /// Priorities of each mode's current users.
    PrioritiesHistogram { histograms: Histograms },
    /// Every agent's perceived value of each mode.
    ValuesHistogram { histograms: Histograms },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerEvent {
    TickMetrics(MetricsSnapshot),
    StateView(StateView),
    Ack { id: u64 },
    Error { id: Option<u64>, message: String },
}

impl ServerEvent {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server events serialize")
    }
}

fn bin(v: f64) -> usize {
    ((v / 100.0 * HISTOGRAM_BINS as f64).floor().max(0.0) as usize).min(HISTOGRAM_BINS - 1)
}

fn empty_histograms() -> Histograms {
    PerMode::from_fn(|_| Criterion::ALL.iter().map(|&c| (c, [0u32; HISTOGRAM_BINS])).collect())
}

pub fn priorities_histogram(state: &SimState) -> Histograms {
    let mut h = empty_histograms();
    for a in &state.agents {
        for (c, v) in a.priorities.iter() {
            h[a.current_mode].get_mut(&c).expect("all criteria")[bin(v)] += 1;
        }
    }
    h
}

pub fn values_histogram(state: &SimState) -> Histograms {
    let mut h = empty_histograms();
    for a in &state.agents {
        let seen = perceive(&state.layout, &a.filter, state.config.biases_enabled);
        for (m, c, v) in seen.entries() {
            h[m].get_mut(&c).expect("all criteria")[bin(v)] += 1;
        }
    }
    h
}

pub fn state_view(state: &SimState, kind: ViewKind) -> StateView {
    match kind {
        ViewKind::Metrics => StateView::Metrics { metrics: state.observe() },
        ViewKind::Agents => StateView::Agents {
            agents: state
                .agents
                .iter()
                .map(|a| AgentView {
                    id: a.id,
                    mode: a.current_mode,
                    usual_mode: a.usual_mode(),
                    satisfaction: a.satisfaction,
                    distance_km: a.distance_km,
                })
                .collect(),
        },
        ViewKind::Layout => StateView::Layout { layout: state.layout },
        ViewKind::PrioritiesHistogram => StateView::PrioritiesHistogram { histograms: priorities_histogram(state) },
        ViewKind::ValuesHistogram => StateView::ValuesHistogram { histograms: values_histogram(state) },
    }
}

/// One operator's simulation. Starts paused at [`DEFAULT_SPEED`].
///
/// Commands are applied between ticks and recorded, so the session can be
/// replayed headlessly with [`Session::replay_scenario`]. Only `n_agents`,
/// `seed` and the two toggles of the initial configuration carry over to the
/// replay; the remaining fields must be left at their defaults.
#[derive(Debug, Clone)]
pub struct Session {
    state: SimState,
    initial: SimConfig,
    paused: bool,
    speed: f64,
    log: Vec<(u64, Intervention)>,
}

impl Session {
    pub fn new(calib: &CalibrationData, config: SimConfig) -> Result<Self> {
        let state = SimState::init(calib, config.clone())?;
        Ok(Session { state, initial: config, paused: true, speed: DEFAULT_SPEED, log: Vec::new() })
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn is_paused(&self) -> bool {
        self.paused
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    /// Advances one tick.
    pub fn tick(&mut self) -> MetricsSnapshot {
        self.state.step()
    }

    fn intervene(&mut self, i: Intervention) -> Result<()> {
        self.state.apply(&i)?;
        self.log.push((self.state.tick, i));
        Ok(())
    }

    /// Parses and handles one text message.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerEvent> {
        match ClientCommand::parse(text) {
            Ok(cmd) => self.handle(cmd),
            Err(e) => vec![ServerEvent::Error { id: e.id, message: e.message }],
        }
    }

    /// Applies a command. The ack (or error) comes first, followed by any
    /// metrics or view the command produced.
    pub fn handle(&mut self, cmd: ClientCommand) -> Vec<ServerEvent> {
        let id = cmd.id;
        let ack = ServerEvent::Ack { id };
        match cmd.command {
            Command::Pause => {
                self.paused = true;
                vec![ack]
            }
            Command::Resume => {
                self.paused = false;
                vec![ack]
            }
            Command::SetSpeed(s) => {
                self.speed = s;
                vec![ack]
            }
            Command::Step(n) => {
                let mut out = vec![ack];
                out.extend((0..n).map(|_| ServerEvent::TickMetrics(self.tick())));
                out
            }
            Command::Intervene(i) => match self.intervene(i) {
                Ok(()) => vec![ack],
                Err(e) => vec![ServerEvent::Error { id: Some(id), message: e.to_string() }],
            },
            Command::ResetHabits => match self.intervene(Intervention::ResetHabits) {
                Ok(()) => vec![ack],
                Err(e) => vec![ServerEvent::Error { id: Some(id), message: e.to_string() }],
            },
            Command::SnapshotRequest(kind) => vec![ack, ServerEvent::StateView(state_view(&self.state, kind))],
        }
    }

    /// Every applied intervention with the tick count at which it took effect.
    pub fn replay_log(&self) -> Vec<ScenarioEvent> {
        self.log.iter().map(|(t, i)| ScenarioEvent::once(*t, i.clone())).collect()
    }

    /// A single-seed scenario that reproduces this session up to its current
    /// tick.
    pub fn replay_scenario(&self) -> Scenario {
        Scenario {
            config: ScenarioConfig {
                n_agents: self.initial.n_agents,
                ticks: self.state.tick,
                seeds: vec![self.initial.seed],
                biases: self.initial.biases_enabled,
                habits: self.initial.habits_enabled,
            },
            events: self.replay_log(),
        }
    }
}
