//! Synthetic population drawn from calibration statistics.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::CalibrationData;
use crate::model::{perceive, score, Agent, Mode, PerMode, Thresholds, TripWindow, DEFAULT_WINDOW_CAPACITY};

/// Minimum sampled commuting distance, in km.
pub const MIN_DISTANCE_KM: f64 = 0.1;
pub const MAX_DISTANCE_KM: f64 = 200.0;
/// Relative spread applied to each priority around the group mean.
pub const PRIORITY_JITTER: f64 = 0.2;

const MAX_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy)]
pub struct SamplingOptions {
    pub limits: Thresholds,
    pub window_capacity: usize,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        SamplingOptions { limits: Thresholds::default(), window_capacity: DEFAULT_WINDOW_CAPACITY }
    }
}

/// Upper distance bound (exclusive for walk/bike) that keeps `mode` usable.
pub fn distance_bound(mode: Mode, limits: &Thresholds) -> f64 {
    match mode {
        Mode::Walk => limits.walk_max_km,
        Mode::Bike => limits.bike_max_km,
        Mode::Car | Mode::Bus => MAX_DISTANCE_KM,
    }
}

fn distance_ok(d: f64, mode: Mode, limits: &Thresholds) -> bool {
    if d <= MIN_DISTANCE_KM || d > MAX_DISTANCE_KM {
        return false;
    }
    match mode {
        Mode::Walk | Mode::Bike => d < distance_bound(mode, limits),
        Mode::Car | Mode::Bus => true,
    }
}

/// Draws a commuting distance from the mode's normal distribution, rejecting
/// draws the mode could not serve.
pub fn sample_distance<R: Rng + ?Sized>(mode: Mode, calib: &CalibrationData, limits: &Thresholds, rng: &mut R) -> f64 {
    let stats = calib.distance_stats[mode];
    if let Ok(normal) = Normal::new(stats.mean, stats.stdev.max(0.0)) {
        for _ in 0..MAX_RESAMPLES {
            let d = normal.sample(rng);
            if distance_ok(d, mode, limits) {
                return d;
            }
        }
    }
    // Degenerate distribution entirely outside the admissible range.
    let hi = distance_bound(mode, limits);
    let hi = if hi < MAX_DISTANCE_KM { hi - 1e-6 } else { hi };
    stats.mean.clamp(MIN_DISTANCE_KM + 1e-6, hi)
}

/// Samples one agent whose usual mode is `mode`.
///
/// Random draws, in order: six priority multipliers, distance draws until
/// accepted, car access, bus access.
pub fn sample_agent<R: Rng + ?Sized>(
    id: u32,
    mode: Mode,
    calib: &CalibrationData,
    opts: &SamplingOptions,
    rng: &mut R,
) -> Agent {
    let priorities = calib.mean_priorities[mode].map(|_, mean| {
        let factor = rng.random_range((1.0 - PRIORITY_JITTER)..(1.0 + PRIORITY_JITTER));
        (mean * factor).clamp(0.0, 100.0)
    });
    let distance_km = sample_distance(mode, calib, &opts.limits, rng);
    let access = calib.access_prob[mode];
    let has_car = rng.random::<f64>() >= access.no_car;
    let has_bus = rng.random::<f64>() >= access.no_bus;
    let filter = calib.prototypes[mode];
    let satisfaction = score(&perceive(&calib.objective_layout, &filter, true), &priorities, mode).unwrap_or(0.0);
    Agent {
        id,
        current_mode: mode,
        satisfaction,
        distance_km,
        access_car: has_car || mode == Mode::Car,
        access_bus: has_bus || mode == Mode::Bus,
        priorities,
        filter,
        trips: TripWindow::filled(mode, opts.window_capacity),
    }
}

/// Splits `n` across modes by largest-remainder rounding of `n * share`.
/// Remainder ties go to the canonical first mode.
pub fn allocate_counts(n: usize, shares: &PerMode<f64>) -> PerMode<usize> {
    let total: f64 = shares.0.iter().sum();
    let exact: Vec<f64> = shares.0.iter().map(|s| n as f64 * s / total).collect();
    let mut counts: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..Mode::COUNT).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    PerMode(counts.try_into().expect("four modes"))
}

/// Samples `n` agents, grouped by usual mode in canonical order, with ids
/// `0..n`.
pub fn sample_population<R: Rng + ?Sized>(
    n: usize,
    shares: &PerMode<f64>,
    calib: &CalibrationData,
    opts: &SamplingOptions,
    rng: &mut R,
) -> Vec<Agent> {
    let counts = allocate_counts(n, shares);
    let mut agents = Vec::with_capacity(n);
    for m in Mode::ALL {
        for _ in 0..counts[m] {
            let id = agents.len() as u32;
            agents.push(sample_agent(id, m, calib, opts, rng));
        }
    }
    agents
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::embedded;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn counts_for_two_hundred() {
        let c = allocate_counts(200, &PerMode([0.74, 0.02, 0.16, 0.06]));
        assert_eq!(c.0, [151, 4, 33, 12]);
    }

    #[test]
    fn single_cyclist() {
        let c = allocate_counts(1, &PerMode([0.0, 1.0, 0.0, 0.0]));
        assert_eq!(c.0, [0, 1, 0, 0]);
    }

    #[test]
    fn equal_shares_conserve() {
        let c = allocate_counts(10, &PerMode([0.25; 4]));
        assert_eq!(c.0.iter().sum::<usize>(), 10);
        assert_eq!(c.0, [3, 3, 2, 2]);
    }

    #[test]
    fn car_users_have_a_car() {
        let calib = embedded();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for i in 0..500 {
            let a = sample_agent(i, Mode::Car, &calib, &SamplingOptions::default(), &mut rng);
            assert!(a.access_car);
            assert_eq!(a.trips.len(), 100);
            assert_eq!(a.usual_mode(), Some(Mode::Car));
            assert_eq!(a.filter, calib.prototypes[Mode::Car]);
        }
    }

    #[test]
    fn walkers_live_close() {
        let calib = embedded();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for i in 0..10_000 {
            let a = sample_agent(i, Mode::Walk, &calib, &SamplingOptions::default(), &mut rng);
            assert!(a.distance_km < 7.0 && a.distance_km > MIN_DISTANCE_KM);
        }
    }

    #[test]
    fn bike_priorities_within_twenty_percent() {
        let calib = embedded();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mean = calib.mean_priorities[Mode::Bike];
        for i in 0..2_000 {
            let a = sample_agent(i, Mode::Bike, &calib, &SamplingOptions::default(), &mut rng);
            assert!(a.distance_km < 15.0);
            for (c, v) in a.priorities.iter() {
                assert!(v >= mean[c] * 0.8 - 1e-9 && v <= mean[c] * 1.2 + 1e-9);
            }
        }
    }

    #[test]
    fn degenerate_distance_falls_back_inside_range() {
        let mut calib = embedded();
        calib.distance_stats[Mode::Walk].mean = 30.0;
        calib.distance_stats[Mode::Walk].stdev = 0.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = sample_distance(Mode::Walk, &calib, &Thresholds::default(), &mut rng);
        assert!(d < 7.0 && d > MIN_DISTANCE_KM);
    }
}
