//! WebAssembly bindings for the in-browser demo. A [`Simulation`] wraps one
//! steering session, so the page drives the same command set as the
//! websocket server, only without a network hop. Results cross the boundary
//! as JSON strings.

use modal_core::calibration::embedded;
use modal_core::engine::{Intervention, SimConfig, ToggleTarget};
use modal_core::model::{Criterion, Mode};
use modal_core::steering::{state_view, ClientCommand, Command, ServerEvent, Session, ViewKind};
use wasm_bindgen::prelude::*;

#[wasm_bindgen]
pub struct Simulation {
    session: Session,
    next_id: u64,
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("simulation output serializes")
}

#[wasm_bindgen]
impl Simulation {
    /// A paused population sampled from the embedded calibration.
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32, agents: u32) -> Result<Simulation, String> {
        let config = SimConfig { seed: seed.into(), n_agents: agents as usize, ..SimConfig::default() };
        let session = Session::new(&embedded(), config).map_err(|e| e.to_string())?;
        Ok(Simulation { session, next_id: 0 })
    }

    /// Ticks simulated so far.
    pub fn tick(&self) -> u32 {
        self.session.state().tick as u32
    }

    /// Metrics of the current state, before any further tick.
    pub fn observe(&self) -> String {
        json(&self.session.state().observe())
    }

    /// Advances `n` ticks and returns their metrics as a JSON array.
    pub fn step(&mut self, n: u32) -> String {
        let series: Vec<_> = (0..n).map(|_| self.session.tick()).collect();
        json(&series)
    }

    /// Adds `delta` to the objective value of one mode on one criterion and
    /// returns the new, clamped value.
    pub fn adjust_value(&mut self, mode: &str, criterion: &str, delta: f64) -> Result<f64, String> {
        let mode: Mode = mode.parse().map_err(|e| format!("{e}"))?;
        let criterion: Criterion = criterion.parse().map_err(|e| format!("{e}"))?;
        self.intervene(Intervention::AdjustValue { mode, criterion, delta })?;
        Ok(self.session.state().layout.get(mode, criterion))
    }

    /// Switches perception biases (`"biases"`) or habits (`"habits"`) on or off.
    pub fn set_toggle(&mut self, target: &str, enabled: bool) -> Result<(), String> {
        let target = match target {
            "biases" => ToggleTarget::Biases,
            "habits" => ToggleTarget::Habits,
            other => return Err(format!("unknown toggle `{other}`; expected biases or habits")),
        };
        self.intervene(Intervention::Toggle { target, enabled })
    }

    /// Empties every agent's habit memory.
    pub fn reset_habits(&mut self) -> Result<(), String> {
        self.run(Command::ResetHabits)
    }

    /// The objective layout as `{mode: {criterion: value}}`.
    pub fn layout(&self) -> String {
        json(&self.session.state().layout)
    }

    /// Per-agent view: id, current and usual mode, satisfaction, distance.
    pub fn agents(&self) -> String {
        json(&state_view(self.session.state(), ViewKind::Agents))
    }

    /// Handles one steering-protocol message and returns the resulting
    /// events as a JSON array.
    pub fn command(&mut self, text: &str) -> String {
        let events: Vec<serde_json::Value> = self
            .session
            .handle_text(text)
            .iter()
            .map(|e| serde_json::from_str(&e.to_json()).expect("event JSON parses"))
            .collect();
        json(&events)
    }

    /// A scenario file reproducing this session headlessly.
    pub fn replay_scenario(&self) -> Result<String, String> {
        self.session.replay_scenario().to_json().map_err(|e| e.to_string())
    }
}

impl Simulation {
    fn intervene(&mut self, i: Intervention) -> Result<(), String> {
        self.run(Command::Intervene(i))
    }

    fn run(&mut self, command: Command) -> Result<(), String> {
        self.next_id += 1;
        let events = self.session.handle(ClientCommand { id: self.next_id, command });
        match events.into_iter().next() {
            Some(ServerEvent::Error { message, .. }) => Err(message),
            _ => Ok(()),
        }
    }
}
