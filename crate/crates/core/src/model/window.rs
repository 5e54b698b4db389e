use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::grid::{Mode, PerMode};

pub const DEFAULT_WINDOW_CAPACITY: usize = 100;

/// Bounded FIFO of the most recent trips, with per-mode counts kept in sync.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindowRepr", into = "WindowRepr")]
pub struct TripWindow {
    capacity: usize,
    trips: VecDeque<Mode>,
    counts: [u32; Mode::COUNT],
}

#[derive(Serialize, Deserialize)]
struct WindowRepr {
    capacity: usize,
    trips: Vec<Mode>,
}

impl TryFrom<WindowRepr> for TripWindow {
    type Error = String;

    fn try_from(r: WindowRepr) -> Result<Self, Self::Error> {
        if r.capacity == 0 {
            return Err("trip window capacity must be positive".into());
        }
        if r.trips.len() > r.capacity {
            return Err(format!("{} trips exceed window capacity {}", r.trips.len(), r.capacity));
        }
        let mut w = TripWindow::new(r.capacity);
        for m in r.trips {
            w.push(m);
        }
        Ok(w)
    }
}

impl From<TripWindow> for WindowRepr {
    fn from(w: TripWindow) -> Self {
        WindowRepr { capacity: w.capacity, trips: w.trips.into_iter().collect() }
    }
}

impl Default for TripWindow {
    fn default() -> Self {
        Self::new(DEFAULT_WINDOW_CAPACITY)
    }
}

impl TripWindow {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "trip window capacity must be positive");
        TripWindow { capacity, trips: VecDeque::with_capacity(capacity), counts: [0; Mode::COUNT] }
    }

    /// A window filled to capacity with a single mode.
    pub fn filled(mode: Mode, capacity: usize) -> Self {
        let mut w = Self::new(capacity);
        for _ in 0..capacity {
            w.push(mode);
        }
        w
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.trips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trips.is_empty()
    }

    pub fn trips(&self) -> impl Iterator<Item = Mode> + '_ {
        self.trips.iter().copied()
    }

    pub fn count(&self, m: Mode) -> u32 {
        self.counts[m.index()]
    }

    /// Appends a trip, evicting the oldest one when full.
    pub fn push(&mut self, m: Mode) {
        if self.trips.len() == self.capacity {
            if let Some(old) = self.trips.pop_front() {
                self.counts[old.index()] -= 1;
            }
        }
        self.trips.push_back(m);
        self.counts[m.index()] += 1;
    }

    pub fn clear(&mut self) {
        self.trips.clear();
        self.counts = [0; Mode::COUNT];
    }

    pub fn frequencies(&self) -> PerMode<f64> {
        habit_frequencies(self)
    }

    /// Most frequent mode, ties going to the earliest in canonical order.
    /// `None` for an empty window.
    pub fn usual_mode(&self) -> Option<Mode> {
        if self.is_empty() {
            return None;
        }
        let mut best = Mode::Car;
        for m in Mode::ALL {
            if self.count(m) > self.count(best) {
                best = m;
            }
        }
        Some(best)
    }
}

/// Share of each mode in the window; all zeros when the window is empty.
pub fn habit_frequencies(trips: &TripWindow) -> PerMode<f64> {
    let len = trips.len();
    if len == 0 {
        return PerMode([0.0; Mode::COUNT]);
    }
    PerMode::from_fn(|i| f64::from(trips.counts[i]) / len as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_window_of_one_mode() {
        let w = TripWindow::filled(Mode::Car, 100);
        let f = w.frequencies();
        assert_eq!(f[Mode::Car], 1.0);
        assert_eq!(f[Mode::Bike] + f[Mode::Bus] + f[Mode::Walk], 0.0);
        assert_eq!(w.usual_mode(), Some(Mode::Car));
    }

    #[test]
    fn half_and_half() {
        let mut w = TripWindow::new(100);
        for _ in 0..50 {
            w.push(Mode::Car);
            w.push(Mode::Bike);
        }
        let f = w.frequencies();
        assert_eq!(f[Mode::Car], 0.5);
        assert_eq!(f[Mode::Bike], 0.5);
        // tie goes to the canonical first
        assert_eq!(w.usual_mode(), Some(Mode::Car));
    }

    #[test]
    fn empty_window_has_zero_frequencies() {
        let mut w = TripWindow::filled(Mode::Bus, 100);
        w.clear();
        assert!(w.frequencies().0.iter().all(|&f| f == 0.0));
        assert_eq!(w.usual_mode(), None);
    }

    #[test]
    fn eviction_at_capacity() {
        let mut w = TripWindow::filled(Mode::Car, 100);
        w.push(Mode::Bike);
        assert_eq!(w.len(), 100);
        assert_eq!(w.count(Mode::Car), 99);
        assert_eq!(w.count(Mode::Bike), 1);
        let f = w.frequencies();
        assert!((f[Mode::Car] - 0.99).abs() < 1e-15);
        assert!((f[Mode::Bike] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn same_mode_at_capacity_is_a_no_op() {
        let mut w = TripWindow::filled(Mode::Walk, 100);
        let before = w.clone();
        w.push(Mode::Walk);
        assert_eq!(w, before);
    }

    #[test]
    fn serde_rebuilds_counts() {
        let mut w = TripWindow::new(5);
        for m in [Mode::Car, Mode::Bus, Mode::Bus] {
            w.push(m);
        }
        let text = serde_json::to_string(&w).unwrap();
        let back: TripWindow = serde_json::from_str(&text).unwrap();
        assert_eq!(back, w);
        assert_eq!(back.count(Mode::Bus), 2);
        assert!(serde_json::from_str::<TripWindow>(r#"{"capacity":1,"trips":["car","car"]}"#).is_err());
    }
}
