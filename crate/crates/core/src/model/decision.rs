//! The per-agent decision mathematics.
//!
//! Every function here is pure: random draws are passed in by the caller so
//! the engine can fix their consumption order.

use serde::{Deserialize, Serialize};

use super::grid::{CriteriaVector, Mode, ModeGrid, PerMode};
use super::window::TripWindow;
use crate::error::{Error, Result};

pub const FILTER_MIN: f64 = 0.5;
pub const FILTER_MAX: f64 = 1.95;
pub const VALUE_MIN: f64 = 0.0;
pub const VALUE_MAX: f64 = 100.0;

/// A small set of modes backed by a bitmask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ModeSet(u8);

impl ModeSet {
    pub const EMPTY: ModeSet = ModeSet(0);
    pub const ALL: ModeSet = ModeSet(0b1111);

    pub fn of(modes: &[Mode]) -> Self {
        let mut s = Self::EMPTY;
        for &m in modes {
            s.insert(m);
        }
        s
    }

    pub fn insert(&mut self, m: Mode) {
        self.0 |= 1 << m.index();
    }

    pub fn remove(&mut self, m: Mode) {
        self.0 &= !(1 << m.index());
    }

    pub fn contains(&self, m: Mode) -> bool {
        self.0 & (1 << m.index()) != 0
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    /// Members in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = Mode> + '_ {
        Mode::ALL.into_iter().filter(move |m| self.contains(*m))
    }
}

/// Distance limits beyond which the active modes are unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub walk_max_km: f64,
    pub bike_max_km: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { walk_max_km: 7.0, bike_max_km: 15.0 }
    }
}

pub fn available_modes(distance_km: f64, access_bus: bool, access_car: bool, blocked: Option<Mode>) -> ModeSet {
    available_modes_with(&Thresholds::default(), distance_km, access_bus, access_car, blocked)
}

pub fn available_modes_with(
    limits: &Thresholds,
    distance_km: f64,
    access_bus: bool,
    access_car: bool,
    blocked: Option<Mode>,
) -> ModeSet {
    let mut set = ModeSet::EMPTY;
    if access_car {
        set.insert(Mode::Car);
    }
    if distance_km < limits.bike_max_km {
        set.insert(Mode::Bike);
    }
    if access_bus {
        set.insert(Mode::Bus);
    }
    if distance_km < limits.walk_max_km {
        set.insert(Mode::Walk);
    }
    if let Some(b) = blocked {
        set.remove(b);
    }
    set
}

/// Subjective values: objective values scaled by the filter and clamped to
/// [0, 100]. With biases off the objective grid is returned as is.
pub fn perceive(objective: &ModeGrid, filter: &ModeGrid, biases_enabled: bool) -> ModeGrid {
    if !biases_enabled {
        return *objective;
    }
    objective.map(|m, c, v| (v * filter.get(m, c)).clamp(VALUE_MIN, VALUE_MAX))
}

/// Priority-weighted mean of one mode's values, in [0, 100].
pub fn score(values: &ModeGrid, priorities: &CriteriaVector, mode: Mode) -> Result<f64> {
    let total = priorities.sum();
    if !(total > 0.0) {
        return Err(Error::DegeneratePriorities);
    }
    Ok(weighted_sum(values.row(mode), priorities) / total)
}

fn weighted_sum(values: &CriteriaVector, priorities: &CriteriaVector) -> f64 {
    values.0.iter().zip(priorities.0.iter()).map(|(v, p)| v * p).sum()
}

pub fn scores(values: &ModeGrid, priorities: &CriteriaVector) -> Result<PerMode<f64>> {
    let total = priorities.sum();
    if !(total > 0.0) {
        return Err(Error::DegeneratePriorities);
    }
    Ok(PerMode::from_fn(|i| weighted_sum(&values.0[i], priorities) / total))
}

/// Argmax over `candidates`, ties going to the canonical first.
pub fn argmax(scores: &PerMode<f64>, candidates: ModeSet) -> Option<Mode> {
    let mut best: Option<Mode> = None;
    for m in candidates.iter() {
        match best {
            Some(b) if scores[m] <= scores[b] => {}
            _ => best = Some(m),
        }
    }
    best
}

pub fn best_mode(values: &ModeGrid, priorities: &CriteriaVector, candidates: ModeSet) -> Result<Mode> {
    if candidates.is_empty() {
        return Err(Error::NoAvailableMode);
    }
    let s = scores(values, priorities)?;
    Ok(argmax(&s, candidates).expect("non-empty candidates"))
}

/// Habit fires when `u` falls below the usual mode's share of the window.
pub fn habit_triggers(frequencies: &PerMode<f64>, u: f64) -> bool {
    let f = frequencies.0.iter().copied().fold(0.0, f64::max);
    u < f
}

/// Frequency-weighted average of the per-mode filter prototypes.
pub fn blend_filter(frequencies: &PerMode<f64>, prototypes: &PerMode<ModeGrid>) -> Result<ModeGrid> {
    let mass: f64 = frequencies.0.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::NoHabitMass);
    }
    // A one-hot vector yields the prototype bit-exactly.
    if let Some((k, _)) = frequencies.iter().find(|(_, &f)| f == 1.0) {
        return Ok(prototypes[k]);
    }
    let mut out = ModeGrid::splat(0.0);
    for (k, &f) in frequencies.iter() {
        if f == 0.0 {
            continue;
        }
        let proto = &prototypes[k];
        for (o, p) in out.0.iter_mut().zip(proto.0.iter()) {
            for (oc, pc) in o.0.iter_mut().zip(p.0.iter()) {
                *oc += f * pc;
            }
        }
    }
    // Guard against rounding pushing a convex combination past the bounds.
    Ok(out.map(|_, _, v| v.clamp(FILTER_MIN, FILTER_MAX)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: u32,
    pub current_mode: Mode,
    pub satisfaction: f64,
    pub distance_km: f64,
    pub access_bus: bool,
    pub access_car: bool,
    pub priorities: CriteriaVector,
    pub filter: ModeGrid,
    pub trips: TripWindow,
}

impl Agent {
    pub fn usual_mode(&self) -> Option<Mode> {
        self.trips.usual_mode()
    }

    pub fn available(&self, limits: &Thresholds, blocked: Option<Mode>) -> ModeSet {
        available_modes_with(limits, self.distance_km, self.access_bus, self.access_car, blocked)
    }

    /// Appends the trip, refreshes the filter from the new habits and makes
    /// `chosen` the current mode.
    pub fn record_trip(&mut self, chosen: Mode, prototypes: &PerMode<ModeGrid>, biases_enabled: bool) {
        self.trips.push(chosen);
        if biases_enabled {
            if let Ok(f) = blend_filter(&self.trips.frequencies(), prototypes) {
                self.filter = f;
            }
        }
        self.current_mode = chosen;
    }

    pub fn apply_decision(&mut self, d: &Decision, prototypes: &PerMode<ModeGrid>, biases_enabled: bool) {
        self.record_trip(d.chosen, prototypes, biases_enabled);
        self.satisfaction = d.satisfaction;
    }
}

pub fn record_trip(agent: &Agent, chosen: Mode, prototypes: &PerMode<ModeGrid>, biases_enabled: bool) -> Agent {
    let mut next = agent.clone();
    next.record_trip(chosen, prototypes, biases_enabled);
    next
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub chosen: Mode,
    pub by_habit: bool,
    pub habit_contrary: bool,
    pub biased: bool,
    pub constrained: bool,
    /// No mode was available; the agent kept its mode.
    pub forced: bool,
    pub satisfaction: f64,
    pub subjective_scores: PerMode<f64>,
    pub objective_scores: PerMode<f64>,
}

/// Everything a decision needs besides the agent and its random draw.
#[derive(Debug, Clone, Copy)]
pub struct DecisionContext<'a> {
    pub layout: &'a ModeGrid,
    pub prototypes: &'a PerMode<ModeGrid>,
    pub biases_enabled: bool,
    pub habits_enabled: bool,
    pub limits: Thresholds,
}

pub fn decide(agent: &Agent, ctx: &DecisionContext<'_>, blocked: Option<Mode>, u_habit: f64) -> Result<Decision> {
    let candidates = agent.available(&ctx.limits, blocked);
    let subjective = perceive(ctx.layout, &agent.filter, ctx.biases_enabled);
    let subjective_scores = scores(&subjective, &agent.priorities)?;
    let objective_scores = if ctx.biases_enabled {
        scores(ctx.layout, &agent.priorities)?
    } else {
        subjective_scores
    };
    let preferred = argmax(&subjective_scores, ModeSet::ALL).expect("four modes");

    let Some(rational) = argmax(&subjective_scores, candidates) else {
        let chosen = agent.usual_mode().unwrap_or(agent.current_mode);
        return Ok(Decision {
            chosen,
            by_habit: false,
            habit_contrary: false,
            biased: false,
            constrained: true,
            forced: true,
            satisfaction: subjective_scores[chosen],
            subjective_scores,
            objective_scores,
        });
    };

    let habitual = if ctx.habits_enabled {
        agent
            .usual_mode()
            .filter(|&m| candidates.contains(m) && habit_triggers(&agent.trips.frequencies(), u_habit))
    } else {
        None
    };

    let (chosen, by_habit, habit_contrary, biased) = match habitual {
        Some(m) => (m, true, m != rational, false),
        None => {
            let objective_best = argmax(&objective_scores, candidates).expect("non-empty candidates");
            (rational, false, false, rational != objective_best)
        }
    };

    Ok(Decision {
        chosen,
        by_habit,
        habit_contrary,
        biased,
        constrained: !candidates.contains(preferred),
        forced: false,
        satisfaction: subjective_scores[chosen],
        subjective_scores,
        objective_scores,
    })
}
