//! Simulation state and the discrete-time loop.
//!
//! One [`SimState`] is owned by a single caller. Interventions are applied
//! between calls to [`SimState::step`], so every agent in a tick sees the same
//! layout and toggles.
//!
//! Random numbers are consumed in a fixed order: population sampling at
//! [`SimState::init`], then for each tick and each agent in ascending id order
//! one event draw followed by one habit draw. Both draws are taken whether or
//! not they end up mattering, so a run is a pure function of its seed, its
//! configuration and its intervention timeline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{sample_population, CalibrationData, SamplingOptions};
use crate::error::{Error, Result};
use crate::model::{
    decide, perceive, scores, Agent, Criterion, Decision, DecisionContext, Mode, ModeGrid, PerMode, Thresholds,
    DEFAULT_WINDOW_CAPACITY, VALUE_MAX, VALUE_MIN,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_agents: usize,
    pub seed: u64,
    pub biases_enabled: bool,
    pub habits_enabled: bool,
    /// Per-agent, per-tick probability that the usual mode is unavailable.
    pub event_probability: f64,
    pub window_capacity: usize,
    pub walk_max_km: f64,
    pub bike_max_km: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_agents: 200,
            seed: 0,
            biases_enabled: true,
            habits_enabled: true,
            event_probability: 0.01,
            window_capacity: DEFAULT_WINDOW_CAPACITY,
            walk_max_km: 7.0,
            bike_max_km: 15.0,
        }
    }
}

impl SimConfig {
    pub fn limits(&self) -> Thresholds {
        Thresholds { walk_max_km: self.walk_max_km, bike_max_km: self.bike_max_km }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::EmptyPopulation);
        }
        if !(0.0..=1.0).contains(&self.event_probability) {
            return Err(Error::Config("event_probability must lie in [0, 1]".into()));
        }
        if !(self.walk_max_km > 0.0 && self.bike_max_km > 0.0) {
            return Err(Error::Config("distance thresholds must be positive".into()));
        }
        if self.window_capacity == 0 {
            return Err(Error::Config("window_capacity must be positive".into()));
        }
        Ok(())
    }
}

/// Decision-type counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DecisionCounts {
    pub by_habit: u32,
    pub habit_contrary: u32,
    pub biased: u32,
    pub constrained: u32,
}

impl DecisionCounts {
    fn record(&mut self, d: &Decision) {
        self.by_habit += u32::from(d.by_habit);
        self.habit_contrary += u32::from(d.habit_contrary);
        self.biased += u32::from(d.biased);
        self.constrained += u32::from(d.constrained);
    }

    fn add(&mut self, other: &DecisionCounts) {
        self.by_habit += other.by_habit;
        self.habit_contrary += other.habit_contrary;
        self.biased += other.biased;
        self.constrained += other.constrained;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSnapshot {
    pub tick: u64,
    /// Fraction of agents per current mode.
    pub shares: PerMode<f64>,
    /// Mean satisfaction of each mode's current users; `None` when unused.
    pub satisfaction: PerMode<Option<f64>>,
    #[serde(flatten)]
    pub counts: DecisionCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToggleTarget {
    Biases,
    Habits,
}

/// An operator action on a running simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ActionFields", into = "ActionFields")]
pub enum Intervention {
    SetValue { mode: Mode, criterion: Criterion, value: f64 },
    AdjustValue { mode: Mode, criterion: Criterion, delta: f64 },
    /// Adds `delta` to one priority of every agent.
    ShiftPriority { criterion: Criterion, delta: f64 },
    Toggle { target: ToggleTarget, enabled: bool },
    ResetHabits,
}

/// Flat wire form of an [`Intervention`], shared by scenario files and the
/// steering protocol. Toggles carry `value` 1 (on) or 0 (off).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionFields {
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub criterion: Option<Criterion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
}

impl TryFrom<ActionFields> for Intervention {
    type Error = Error;

    fn try_from(f: ActionFields) -> Result<Self> {
        let need = |name: &str, v: Option<f64>| {
            v.filter(|x| x.is_finite())
                .ok_or_else(|| Error::Intervention(format!("`{}` needs a finite `{name}`", f.action)))
        };
        let mode = || f.mode.ok_or_else(|| Error::Intervention(format!("`{}` needs a `mode`", f.action)));
        let criterion =
            || f.criterion.ok_or_else(|| Error::Intervention(format!("`{}` needs a `criterion`", f.action)));
        Ok(match f.action.as_str() {
            "set_value" => Intervention::SetValue { mode: mode()?, criterion: criterion()?, value: need("value", f.value)? },
            "adjust_value" => {
                Intervention::AdjustValue { mode: mode()?, criterion: criterion()?, delta: need("delta", f.delta)? }
            }
            "shift_priority" => Intervention::ShiftPriority { criterion: criterion()?, delta: need("delta", f.delta)? },
            "toggle" => {
                let target = match f.target.as_deref() {
                    Some("biases") => ToggleTarget::Biases,
                    Some("habits") => ToggleTarget::Habits,
                    Some(other) => return Err(Error::Intervention(format!("unknown toggle target `{other}`"))),
                    None => return Err(Error::Intervention("`toggle` needs a `target`".into())),
                };
                Intervention::Toggle { target, enabled: need("value", f.value)? != 0.0 }
            }
            "reset_habits" => Intervention::ResetHabits,
            other => return Err(Error::Intervention(format!("unknown action `{other}`"))),
        })
    }
}

impl From<Intervention> for ActionFields {
    fn from(i: Intervention) -> Self {
        let action = |name: &str| ActionFields { action: name.to_string(), ..Default::default() };
        match i {
            Intervention::SetValue { mode, criterion, value } => {
                ActionFields { mode: Some(mode), criterion: Some(criterion), value: Some(value), ..action("set_value") }
            }
            Intervention::AdjustValue { mode, criterion, delta } => {
                ActionFields { mode: Some(mode), criterion: Some(criterion), delta: Some(delta), ..action("adjust_value") }
            }
            Intervention::ShiftPriority { criterion, delta } => {
                ActionFields { criterion: Some(criterion), delta: Some(delta), ..action("shift_priority") }
            }
            Intervention::Toggle { target, enabled } => ActionFields {
                target: Some(match target {
                    ToggleTarget::Biases => "biases".into(),
                    ToggleTarget::Habits => "habits".into(),
                }),
                value: Some(if enabled { 1.0 } else { 0.0 }),
                ..action("toggle")
            },
            Intervention::ResetHabits => action("reset_habits"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub tick: u64,
    pub layout: ModeGrid,
    pub prototypes: PerMode<ModeGrid>,
    pub agents: Vec<Agent>,
    pub config: SimConfig,
    pub totals: DecisionCounts,
    rng: ChaCha8Rng,
}

impl SimState {
    pub fn init(calib: &CalibrationData, config: SimConfig) -> Result<Self> {
        config.validate()?;
        calib.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let opts = SamplingOptions { limits: config.limits(), window_capacity: config.window_capacity };
        let mut agents = sample_population(config.n_agents, &calib.national_shares, calib, &opts, &mut rng);
        let layout = calib.objective_layout;
        for a in &mut agents {
            let perceived = perceive(&layout, &a.filter, config.biases_enabled);
            a.satisfaction = scores(&perceived, &a.priorities).map(|s| s[a.current_mode]).unwrap_or(0.0);
        }
        Ok(SimState {
            tick: 0,
            layout,
            prototypes: calib.prototypes,
            agents,
            config,
            totals: DecisionCounts::default(),
            rng,
        })
    }

    pub fn context(&self) -> DecisionContext<'_> {
        DecisionContext {
            layout: &self.layout,
            prototypes: &self.prototypes,
            biases_enabled: self.config.biases_enabled,
            habits_enabled: self.config.habits_enabled,
            limits: self.config.limits(),
        }
    }

    /// Runs one tick and returns its metrics, labelled with the new tick
    /// number (the first step yields tick 1).
    pub fn step(&mut self) -> MetricsSnapshot {
        let mut counts = DecisionCounts::default();
        let p_event = self.config.event_probability;
        let biases = self.config.biases_enabled;
        let ctx = DecisionContext {
            layout: &self.layout,
            prototypes: &self.prototypes,
            biases_enabled: biases,
            habits_enabled: self.config.habits_enabled,
            limits: self.config.limits(),
        };
        for agent in &mut self.agents {
            let u_event: f64 = self.rng.random();
            let u_habit: f64 = self.rng.random();
            let blocked = if u_event < p_event { agent.usual_mode() } else { None };
            let decision = match decide(agent, &ctx, blocked, u_habit) {
                Ok(d) => d,
                // All-zero priorities: nothing to compare, keep the current mode.
                Err(_) => retain(agent),
            };
            counts.record(&decision);
            agent.apply_decision(&decision, &self.prototypes, biases);
        }
        self.tick += 1;
        self.totals.add(&counts);
        self.metrics(counts)
    }

    /// Metrics of the current state with zero decision counts; the tick-0
    /// baseline before any step.
    pub fn observe(&self) -> MetricsSnapshot {
        self.metrics(DecisionCounts::default())
    }

    fn metrics(&self, counts: DecisionCounts) -> MetricsSnapshot {
        let n = self.agents.len() as f64;
        let mut users = [0usize; Mode::COUNT];
        let mut sat = [0.0f64; Mode::COUNT];
        for a in &self.agents {
            users[a.current_mode.index()] += 1;
            sat[a.current_mode.index()] += a.satisfaction;
        }
        MetricsSnapshot {
            tick: self.tick,
            shares: PerMode::from_fn(|i| users[i] as f64 / n),
            satisfaction: PerMode::from_fn(|i| (users[i] > 0).then(|| sat[i] / users[i] as f64)),
            counts,
        }
    }

    pub fn apply(&mut self, intervention: &Intervention) -> Result<()> {
        let finite = |x: f64| {
            if x.is_finite() {
                Ok(x)
            } else {
                Err(Error::Intervention("value must be finite".into()))
            }
        };
        match *intervention {
            Intervention::SetValue { mode, criterion, value } => {
                self.layout.set(mode, criterion, finite(value)?.clamp(VALUE_MIN, VALUE_MAX));
            }
            Intervention::AdjustValue { mode, criterion, delta } => {
                let v = self.layout.get(mode, criterion) + finite(delta)?;
                self.layout.set(mode, criterion, v.clamp(VALUE_MIN, VALUE_MAX));
            }
            Intervention::ShiftPriority { criterion, delta } => {
                let delta = finite(delta)?;
                for a in &mut self.agents {
                    a.priorities[criterion] = (a.priorities[criterion] + delta).clamp(0.0, 100.0);
                }
            }
            Intervention::Toggle { target: ToggleTarget::Biases, enabled } => self.config.biases_enabled = enabled,
            Intervention::Toggle { target: ToggleTarget::Habits, enabled } => self.config.habits_enabled = enabled,
            Intervention::ResetHabits => self.reset_habits(),
        }
        Ok(())
    }

    /// Empties every trip window. Filters are kept until new trips accumulate.
    pub fn reset_habits(&mut self) {
        for a in &mut self.agents {
            a.trips.clear();
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

fn retain(agent: &Agent) -> Decision {
    let zeros = PerMode([0.0; Mode::COUNT]);
    Decision {
        chosen: agent.current_mode,
        by_habit: false,
        habit_contrary: false,
        biased: false,
        constrained: false,
        forced: true,
        satisfaction: 0.0,
        subjective_scores: zeros,
        objective_scores: zeros,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::embedded;

    fn state(config: SimConfig) -> SimState {
        SimState::init(&embedded(), config).unwrap()
    }

    #[test]
    fn default_population_counts() {
        let s = state(SimConfig::default());
        assert_eq!(s.agents.len(), 200);
        let mut counts = [0; 4];
        for a in &s.agents {
            counts[a.current_mode.index()] += 1;
        }
        assert_eq!(counts, [151, 4, 33, 12]);
        let m = s.observe();
        assert_eq!(m.tick, 0);
        assert!((m.shares[Mode::Car] - 0.755).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_state() {
        let a = state(SimConfig { seed: 7, ..SimConfig::default() });
        let b = state(SimConfig { seed: 7, ..SimConfig::default() });
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = state(SimConfig { seed: 8, ..SimConfig::default() });
        assert_ne!(a.to_json().unwrap(), c.to_json().unwrap());
    }

    #[test]
    fn empty_population_rejected() {
        let err = SimState::init(&embedded(), SimConfig { n_agents: 0, ..SimConfig::default() }).unwrap_err();
        assert!(matches!(err, Error::EmptyPopulation));
    }

    #[test]
    fn ticks_advance_and_shares_conserve() {
        let mut s = state(SimConfig::default());
        for t in 1..=20 {
            let m = s.step();
            assert_eq!(m.tick, t);
            assert!((m.shares.0.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(m.counts.by_habit <= 200);
        }
    }

    #[test]
    fn serialized_state_evolves_identically() {
        let mut a = state(SimConfig { seed: 3, ..SimConfig::default() });
        for _ in 0..5 {
            a.step();
        }
        let mut b = SimState::from_json(&a.to_json().unwrap()).unwrap();
        for _ in 0..5 {
            assert_eq!(a.step(), b.step());
        }
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn adjust_ramp_arithmetic() {
        let mut s = state(SimConfig::default());
        s.apply(&Intervention::SetValue { mode: Mode::Bike, criterion: Criterion::Safety, value: 34.0 }).unwrap();
        for _ in 0..5 {
            s.apply(&Intervention::AdjustValue { mode: Mode::Bike, criterion: Criterion::Safety, delta: 5.0 })
                .unwrap();
        }
        assert_eq!(s.layout.get(Mode::Bike, Criterion::Safety), 59.0);

        s.apply(&Intervention::SetValue { mode: Mode::Car, criterion: Criterion::Comfort, value: 86.0 }).unwrap();
        s.apply(&Intervention::AdjustValue { mode: Mode::Car, criterion: Criterion::Comfort, delta: -5.0 })
            .unwrap();
        assert_eq!(s.layout.get(Mode::Car, Criterion::Comfort), 81.0);

        s.apply(&Intervention::SetValue { mode: Mode::Car, criterion: Criterion::Comfort, value: 140.0 }).unwrap();
        assert_eq!(s.layout.get(Mode::Car, Criterion::Comfort), 100.0);
    }

    #[test]
    fn shift_priority_clamps() {
        let mut s = state(SimConfig::default());
        s.agents[0].priorities[Criterion::Ecology] = 95.0;
        s.apply(&Intervention::ShiftPriority { criterion: Criterion::Ecology, delta: 10.0 }).unwrap();
        assert_eq!(s.agents[0].priorities[Criterion::Ecology], 100.0);
        assert!(s.apply(&Intervention::ShiftPriority { criterion: Criterion::Ecology, delta: f64::NAN }).is_err());
    }

    #[test]
    fn reset_clears_habits_for_next_tick() {
        let mut s = state(SimConfig::default());
        s.step();
        s.reset_habits();
        let snapshot = s.to_json().unwrap();
        s.reset_habits();
        assert_eq!(s.to_json().unwrap(), snapshot, "reset is idempotent");
        assert!(s.agents.iter().all(|a| a.trips.is_empty()));
        let m = s.step();
        assert_eq!(m.counts.by_habit, 0);
        assert_eq!(m.counts.habit_contrary, 0);
    }

    #[test]
    fn toggles_null_their_counters() {
        let mut s = state(SimConfig { biases_enabled: false, habits_enabled: false, ..SimConfig::default() });
        for _ in 0..50 {
            let m = s.step();
            assert_eq!(m.counts.biased, 0);
            assert_eq!(m.counts.by_habit, 0);
        }
    }

    #[test]
    fn pure_argmax_converges_in_one_tick() {
        let mut s = state(SimConfig { biases_enabled: false, habits_enabled: false, ..SimConfig::default() });
        s.layout = ModeGrid::splat(10.0);
        s.layout[Mode::Bus] = crate::model::CriteriaVector::splat(100.0);
        s.step();
        for a in &s.agents {
            if a.access_bus {
                assert_eq!(a.current_mode, Mode::Bus);
            }
        }
    }

    #[test]
    fn intervention_wire_form() {
        let i: Intervention =
            serde_json::from_str(r#"{"action":"adjust_value","mode":"bike","criterion":"safety","delta":5}"#).unwrap();
        assert_eq!(i, Intervention::AdjustValue { mode: Mode::Bike, criterion: Criterion::Safety, delta: 5.0 });
        let t: Intervention = serde_json::from_str(r#"{"action":"toggle","target":"habits","value":0}"#).unwrap();
        assert_eq!(t, Intervention::Toggle { target: ToggleTarget::Habits, enabled: false });
        assert!(serde_json::from_str::<Intervention>(r#"{"action":"toggle","target":"traffic","value":0}"#).is_err());
        assert!(serde_json::from_str::<Intervention>(r#"{"action":"teleport"}"#).is_err());
        assert!(serde_json::from_str::<Intervention>(r#"{"action":"set_value","mode":"bike"}"#).is_err());
        let back: Intervention = serde_json::from_value(serde_json::to_value(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }
}
