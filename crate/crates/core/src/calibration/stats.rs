//! Statistics derived from survey responses. All deterministic.

use serde::{Deserialize, Serialize};

use super::survey::SurveyResponse;
use crate::error::{Error, Result};
use crate::model::{CriteriaVector, Criterion, Mode, ModeGrid, PerMode, FILTER_MAX, FILTER_MIN, VALUE_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator; 0 for a single value).
    pub stdev: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
}

/// Probabilities that a user of the mode lacks access to a car / to the bus.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AccessProb {
    pub no_car: f64,
    pub no_bus: f64,
}

/// Mean evaluations of one mode, overall and split by whether the respondent
/// uses it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvaluationMeans {
    pub all: CriteriaVector,
    pub users: CriteriaVector,
    pub non_users: CriteriaVector,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreStats {
    pub mean: f64,
    pub stdev: f64,
    pub median: f64,
    pub users_mean: f64,
    pub non_users_mean: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_stdev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Median with the midpoint convention for even lengths. NaN when empty.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn group(responses: &[SurveyResponse], m: Mode) -> impl Iterator<Item = &SurveyResponse> {
    responses.iter().filter(move |r| r.usual_mode == m)
}

pub fn group_counts(responses: &[SurveyResponse]) -> PerMode<usize> {
    PerMode::from_fn(|i| group(responses, Mode::ALL[i]).count())
}

pub fn distance_stats(responses: &[SurveyResponse]) -> Result<PerMode<DistanceStats>> {
    let mut out = Vec::with_capacity(Mode::COUNT);
    for m in Mode::ALL {
        let d: Vec<f64> = group(responses, m).map(|r| r.distance_km).collect();
        if d.is_empty() {
            return Err(Error::EmptyGroup(m));
        }
        out.push(DistanceStats {
            n: d.len(),
            mean: mean(&d),
            stdev: sample_stdev(&d),
            min: d.iter().copied().fold(f64::INFINITY, f64::min),
            max: d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            median: median(&d),
        });
    }
    Ok(PerMode(out.try_into().expect("four modes")))
}

pub fn access_stats(responses: &[SurveyResponse]) -> PerMode<AccessProb> {
    PerMode::from_fn(|i| {
        let m = Mode::ALL[i];
        let members: Vec<&SurveyResponse> = group(responses, m).collect();
        if members.is_empty() {
            return AccessProb::default();
        }
        let n = members.len() as f64;
        let share = |target: Mode| {
            if target == m {
                0.0
            } else {
                members.iter().filter(|r| r.declared_inaccessible.contains(target)).count() as f64 / n
            }
        };
        AccessProb { no_car: share(Mode::Car), no_bus: share(Mode::Bus) }
    })
}

/// Per-group mean priorities, rescaled from the 0-10 survey scale to 0-100.
pub fn mean_priorities(responses: &[SurveyResponse]) -> Result<PerMode<CriteriaVector>> {
    let mut out = [CriteriaVector::default(); Mode::COUNT];
    for m in Mode::ALL {
        let members: Vec<&SurveyResponse> = group(responses, m).collect();
        if members.is_empty() {
            return Err(Error::EmptyGroup(m));
        }
        let n = members.len() as f64;
        for c in Criterion::ALL {
            out[m.index()][c] = 10.0 * members.iter().map(|r| r.priorities[c]).sum::<f64>() / n;
        }
    }
    Ok(PerMode(out))
}

/// Mean evaluations on the survey scale, overall / among users / among
/// non-users of each mode.
pub fn evaluation_means(responses: &[SurveyResponse]) -> PerMode<EvaluationMeans> {
    let avg = |m: Mode, pick: &dyn Fn(&SurveyResponse) -> bool| {
        let members: Vec<&SurveyResponse> = responses.iter().filter(|r| pick(r)).collect();
        let n = members.len() as f64;
        CriteriaVector::default().map(|c, _| members.iter().map(|r| r.evaluations.get(m, c)).sum::<f64>() / n)
    };
    PerMode::from_fn(|i| {
        let m = Mode::ALL[i];
        EvaluationMeans {
            all: avg(m, &|_| true),
            users: avg(m, &|r| r.usual_mode == m),
            non_users: avg(m, &|r| r.usual_mode != m),
        }
    })
}

/// Per-group filter prototypes: mean evaluation among the group's members
/// divided by the median over all responses, clamped to the filter bounds.
pub fn filter_prototypes(responses: &[SurveyResponse]) -> PerMode<ModeGrid> {
    let mut overall_median = ModeGrid::default();
    for m in Mode::ALL {
        for c in Criterion::ALL {
            let all: Vec<f64> = responses.iter().map(|r| r.evaluations.get(m, c)).collect();
            overall_median.set(m, c, median(&all));
        }
    }
    PerMode::from_fn(|g| {
        let members: Vec<&SurveyResponse> = group(responses, Mode::ALL[g]).collect();
        if members.is_empty() {
            return ModeGrid::identity();
        }
        let n = members.len() as f64;
        overall_median.map(|m, c, med| {
            let group_mean = members.iter().map(|r| r.evaluations.get(m, c)).sum::<f64>() / n;
            deviation_factor(group_mean, med)
        })
    })
}

/// Ratio of a group's view to the reference value, clamped; 1 when the
/// reference is zero.
pub fn deviation_factor(group_value: f64, reference: f64) -> f64 {
    if reference == 0.0 || !reference.is_finite() {
        return 1.0;
    }
    (group_value / reference).clamp(FILTER_MIN, FILTER_MAX)
}

/// Share-weighted average of the per-group median evaluations, on the 0-100
/// scale. Groups without responses are skipped and the remaining shares
/// renormalized.
pub fn objective_layout(responses: &[SurveyResponse], shares: &PerMode<f64>) -> ModeGrid {
    let mut group_medians: Vec<(f64, ModeGrid)> = Vec::new();
    for g in Mode::ALL {
        let members: Vec<&SurveyResponse> = group(responses, g).collect();
        if members.is_empty() {
            continue;
        }
        let med = ModeGrid::default().map(|m, c, _| {
            let v: Vec<f64> = members.iter().map(|r| r.evaluations.get(m, c)).collect();
            median(&v)
        });
        group_medians.push((shares[g], med));
    }
    combine_group_views(&group_medians)
}

/// `10 * Σ w_g * view_g`, with weights renormalized to sum to 1.
pub fn combine_group_views(views: &[(f64, ModeGrid)]) -> ModeGrid {
    let total: f64 = views.iter().map(|(w, _)| w).sum();
    if !(total > 0.0) {
        return ModeGrid::default();
    }
    ModeGrid::default().map(|m, c, _| {
        let v: f64 = views.iter().map(|(w, g)| w / total * g.get(m, c)).sum();
        (10.0 * v).clamp(0.0, VALUE_MAX)
    })
}

/// Statistics of each respondent's own score of each mode (survey scale).
/// Respondents whose priorities are all zero are skipped.
pub fn score_stats(responses: &[SurveyResponse]) -> PerMode<ScoreStats> {
    PerMode::from_fn(|i| {
        let m = Mode::ALL[i];
        let mut all = Vec::new();
        let mut users = Vec::new();
        let mut non_users = Vec::new();
        for r in responses {
            let total = r.priorities.sum();
            if !(total > 0.0) {
                continue;
            }
            let s: f64 = r.evaluations.row(m).iter().map(|(c, v)| v * r.priorities[c]).sum::<f64>() / total;
            all.push(s);
            if r.usual_mode == m {
                users.push(s);
            } else {
                non_users.push(s);
            }
        }
        ScoreStats {
            mean: mean(&all),
            stdev: sample_stdev(&all),
            median: median(&all),
            users_mean: mean(&users),
            non_users_mean: mean(&non_users),
        }
    })
}
