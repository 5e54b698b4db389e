//! Published survey statistics shipped with the crate, so a simulation can
//! run without the survey file. Survey-scale (0-10) unless noted.

use super::stats::{combine_group_views, deviation_factor, AccessProb, DistanceStats, EvaluationMeans};
use super::{CalibrationData, Provenance};
use crate::model::{CriteriaVector, Mode, ModeGrid, PerMode};

/// Published national commuting shares, in mode order (car, bike, bus,
/// walk). They leave 2% to other modes, so [`national_shares`] renormalises
/// them over the four simulated modes.
pub const NATIONAL_SHARES: [f64; 4] = [0.74, 0.02, 0.16, 0.06];

pub fn national_shares() -> PerMode<f64> {
    let total: f64 = NATIONAL_SHARES.iter().sum();
    PerMode(NATIONAL_SHARES.map(|s| s / total))
}

/// Mean priorities per usual mode; criteria in canonical order.
pub const MEAN_PRIORITIES: [[f64; 6]; 4] = [
    [5.65, 7.19, 5.63, 8.57, 7.79, 6.72],
    [8.3, 7.31, 7.08, 8.54, 7.68, 5.37],
    [6.76, 6.75, 7.44, 7.81, 7.37, 6.46],
    [7.27, 7.35, 7.58, 8.42, 6.7, 6.67],
];

/// Commuting distance (km) per usual mode: (n, mean, stdev, min, max, median).
pub const DISTANCES: [(usize, f64, f64, f64, f64, f64); 4] = [
    (131, 21.29, 23.1, 2.0, 190.0, 15.0),
    (199, 6.43, 6.68, 1.0, 50.0, 5.0),
    (220, 11.16, 13.59, 1.0, 95.0, 5.55),
    (78, 1.80, 1.44, 0.2, 9.0, 1.5),
];

/// Share of each group without car / without bus access.
pub const NO_ACCESS: [(f64, f64); 4] = [(0.0, 0.6119), (0.299, 0.1029), (0.5746, 0.0), (0.5, 0.0833)];

/// Mean evaluation of each mode (rows) on each criterion, among all
/// respondents, its users, and its non-users.
pub const EVAL_ALL: [[f64; 6]; 4] = [
    [1.81, 7.69, 2.68, 6.32, 6.76, 7.29],
    [9.21, 6.03, 7.74, 6.63, 6.6, 4.62],
    [7.43, 5.83, 6.87, 5.78, 5.57, 7.46],
    [9.81, 6.7, 9.75, 5.99, 2.98, 6.77],
];
pub const EVAL_USERS: [[f64; 6]; 4] = [
    [2.52, 8.51, 3.84, 8.32, 8.21, 7.69],
    [9.56, 7.39, 8.54, 8.23, 7.98, 5.38],
    [7.77, 6.46, 7.25, 7.2, 6.81, 7.37],
    [9.74, 8.12, 9.79, 8.01, 4.96, 7.12],
];
pub const EVAL_NON_USERS: [[f64; 6]; 4] = [
    [1.63, 7.47, 2.38, 5.81, 6.38, 7.19],
    [9.05, 5.4, 7.37, 5.9, 5.96, 4.28],
    [7.25, 5.49, 6.66, 5.0, 4.91, 7.5],
    [9.83, 6.49, 9.74, 5.69, 2.69, 6.72],
];

pub fn evaluation_tables() -> PerMode<EvaluationMeans> {
    PerMode::from_fn(|i| EvaluationMeans {
        all: CriteriaVector(EVAL_ALL[i]),
        users: CriteriaVector(EVAL_USERS[i]),
        non_users: CriteriaVector(EVAL_NON_USERS[i]),
    })
}

/// How group `g` sees mode `m` on average: the users' mean for its own mode,
/// the non-users' mean for the others.
fn group_view(g: Mode) -> ModeGrid {
    ModeGrid::from_rows(std::array::from_fn(|m| if m == g.index() { EVAL_USERS[m] } else { EVAL_NON_USERS[m] }))
}

/// Each group's deviation on its own mode against the all-respondent mean.
/// Other rows are neutral: the published non-user means pool the three
/// other groups, so they say nothing about one group's view.
pub fn prototypes() -> PerMode<ModeGrid> {
    PerMode::from_fn(|g| {
        ModeGrid::from_rows(std::array::from_fn(|m| {
            if m == g {
                std::array::from_fn(|c| deviation_factor(EVAL_USERS[m][c], EVAL_ALL[m][c]))
            } else {
                [1.0; 6]
            }
        }))
    })
}

/// Share-weighted mix of the group views, scaled to 0-100.
pub fn objective_layout() -> ModeGrid {
    let shares = national_shares();
    let views: Vec<(f64, ModeGrid)> = Mode::ALL.iter().map(|&g| (shares[g], group_view(g))).collect();
    combine_group_views(&views)
}

pub fn embedded() -> CalibrationData {
    let national_shares = national_shares();
    let mean_priorities = PerMode(MEAN_PRIORITIES.map(|row| CriteriaVector(row.map(|v| v * 10.0))));
    let distance_stats = PerMode(DISTANCES.map(|(n, mean, stdev, min, max, median)| DistanceStats {
        n,
        mean,
        stdev,
        min,
        max,
        median,
    }));
    let access_prob = PerMode(NO_ACCESS.map(|(no_car, no_bus)| AccessProb { no_car, no_bus }));
    CalibrationData {
        national_shares,
        mean_priorities,
        distance_stats,
        access_prob,
        prototypes: prototypes(),
        objective_layout: objective_layout(),
        provenance: Provenance {
            source: "embedded defaults (published survey tables)".into(),
            row_counts: None,
            exclusions: None,
            notes: vec![
                "objective layout and filter prototypes use published means in place of medians".into(),
                "filter prototypes only distort each group's own mode".into(),
                "group views of non-own modes use the non-users' mean".into(),
                "national shares renormalised over the four modes (published shares sum to 0.98)".into(),
            ],
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{score, Criterion};

    #[test]
    fn car_user_scores_their_mode_at_68_35() {
        let e = embedded();
        let values = ModeGrid::from_rows(EVAL_USERS.map(|r| r.map(|v| v * 10.0)));
        let s = score(&values, &e.mean_priorities[Mode::Car], Mode::Car).unwrap();
        assert!((s - 68.35).abs() < 0.01, "{s}");
    }

    #[test]
    fn access_rows_match_counts() {
        // 131 of 228 bus users, 61 of 204 cyclists, 42 of 84 walkers lack a car.
        assert!((NO_ACCESS[Mode::Bus.index()].0 - 131.0 / 228.0).abs() < 1e-4);
        assert!((NO_ACCESS[Mode::Bike.index()].0 - 61.0 / 204.0).abs() < 1e-3);
        assert!((NO_ACCESS[Mode::Walk.index()].0 - 42.0 / 84.0).abs() < 1e-12);
        assert!((NO_ACCESS[Mode::Car.index()].1 - 82.0 / 134.0).abs() < 1e-4);
    }

    #[test]
    fn derived_grids_in_bounds() {
        let e = embedded();
        e.validate().unwrap();
        // own mode is seen more favourably than the reference on comfort
        for m in Mode::ALL {
            assert!(e.prototypes[m].get(m, Criterion::Comfort) > 1.0);
        }
    }

    #[test]
    fn layout_weights_views_by_share() {
        let l = objective_layout();
        let expect = 10.0 * (0.74 * 8.51 + 0.24 * 7.47) / 0.98;
        assert!((l.get(Mode::Car, Criterion::Comfort) - expect).abs() < 1e-9);
    }

    #[test]
    fn prototypes_leave_other_modes_neutral() {
        let p = prototypes();
        assert!((p[Mode::Car].get(Mode::Car, Criterion::Ecology) - 2.52 / 1.81).abs() < 1e-12);
        assert_eq!(*p[Mode::Car].row(Mode::Bike), CriteriaVector([1.0; 6]));
        assert_eq!(*p[Mode::Walk].row(Mode::Bus), CriteriaVector([1.0; 6]));
}
}
