//! Calibration: survey ingestion, derived statistics and population sampling.

mod defaults;
mod sampling;
mod stats;
mod survey;

use serde::{Deserialize, Serialize};

pub use defaults::{embedded, evaluation_tables};
pub use sampling::{
    allocate_counts, distance_bound, sample_agent, sample_distance, sample_population, SamplingOptions,
    MAX_DISTANCE_KM, MIN_DISTANCE_KM, PRIORITY_JITTER,
};
pub use stats::{
    access_stats, combine_group_views, deviation_factor, distance_stats, evaluation_means, filter_prototypes,
    group_counts, mean, mean_priorities, median, objective_layout, sample_stdev, score_stats, AccessProb,
    DistanceStats, EvaluationMeans, ScoreStats,
};
pub use survey::{clean_distances, default_caps, parse_caps, parse_survey, ColumnMapping, SurveyParse, SurveyResponse};

/// Published embedded tables, for reports and reproduction checks.
pub mod tables {
    pub use super::defaults::{
        national_shares, DISTANCES, EVAL_ALL, EVAL_NON_USERS, EVAL_USERS, MEAN_PRIORITIES, NATIONAL_SHARES, NO_ACCESS,
    };
}

use crate::error::{Error, Result};
use crate::model::{CriteriaVector, ModeGrid, PerMode, FILTER_MAX, FILTER_MIN, VALUE_MAX, VALUE_MIN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowCounts {
    pub parsed: usize,
    pub dropped: usize,
    pub retained: usize,
    pub per_mode: PerMode<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub source: String,
    #[serde(default)]
    pub row_counts: Option<RowCounts>,
    /// Responses removed by the distance caps, per usual mode.
    #[serde(default)]
    pub exclusions: Option<PerMode<usize>>,
    #[serde(default)]
    pub notes: Vec<String>,
}

/// Everything the simulator needs from the survey.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationData {
    pub national_shares: PerMode<f64>,
    /// 0-100 scale.
    pub mean_priorities: PerMode<CriteriaVector>,
    pub distance_stats: PerMode<DistanceStats>,
    pub access_prob: PerMode<AccessProb>,
    pub prototypes: PerMode<ModeGrid>,
    pub objective_layout: ModeGrid,
    pub provenance: Provenance,
}

impl CalibrationData {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.national_shares.0.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.national_shares.0.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::Config(format!("national shares must be fractions summing to 1, got {sum}")));
        }
        for (m, p) in self.prototypes.iter() {
            if !p.all_within(FILTER_MIN, FILTER_MAX) {
                return Err(Error::Config(format!("{m} prototype outside [{FILTER_MIN}, {FILTER_MAX}]")));
            }
        }
        if !self.objective_layout.all_within(VALUE_MIN, VALUE_MAX) {
            return Err(Error::Config("objective layout outside [0, 100]".into()));
        }
        for (m, p) in self.mean_priorities.iter() {
            if p.0.iter().any(|v| !(0.0..=100.0).contains(v)) || !(p.sum() > 0.0) {
                return Err(Error::Config(format!("{m} priorities must lie in [0, 100] with a positive sum")));
            }
        }
        for (m, d) in self.distance_stats.iter() {
            if !(d.mean.is_finite() && d.stdev >= 0.0) {
                return Err(Error::Config(format!("{m} distance statistics invalid")));
            }
        }
        for (m, a) in self.access_prob.iter() {
            if !(0.0..=1.0).contains(&a.no_car) || !(0.0..=1.0).contains(&a.no_bus) {
                return Err(Error::Config(format!("{m} access probabilities outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: CalibrationData = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

/// Full calibration from parsed survey responses: caps, then every statistic.
pub fn calibrate(parsed: &SurveyParse, caps: &PerMode<f64>, source: &str) -> Result<CalibrationData> {
    let (kept, exclusions) = clean_distances(&parsed.responses, caps);
    let national_shares = defaults::national_shares();
    let calib = CalibrationData {
        national_shares,
        mean_priorities: mean_priorities(&parsed.responses)?,
        distance_stats: distance_stats(&kept)?,
        access_prob: access_stats(&parsed.responses),
        prototypes: filter_prototypes(&parsed.responses),
        objective_layout: objective_layout(&parsed.responses, &national_shares),
        provenance: Provenance {
            source: source.to_string(),
            row_counts: Some(RowCounts {
                parsed: parsed.responses.len() + parsed.dropped,
                dropped: parsed.dropped,
                retained: kept.len(),
                per_mode: group_counts(&parsed.responses),
            }),
            exclusions: Some(exclusions),
            notes: Vec::new(),
        },
    };
    calib.validate()?;
    Ok(calib)
}

/// Human-readable summary of the statistics a calibration run reproduces.
#[derive(Debug, Clone, Serialize)]
pub struct SurveyReport {
    pub distances: PerMode<DistanceStats>,
    pub access: PerMode<AccessProb>,
    /// Survey scale (0-10).
    pub priorities: PerMode<CriteriaVector>,
    pub evaluations: PerMode<EvaluationMeans>,
    pub scores: PerMode<ScoreStats>,
}

pub fn survey_report(parsed: &SurveyParse, caps: &PerMode<f64>) -> Result<SurveyReport> {
    let (kept, _) = clean_distances(&parsed.responses, caps);
    let priorities = mean_priorities(&parsed.responses)?;
    Ok(SurveyReport {
        distances: distance_stats(&kept)?,
        access: access_stats(&parsed.responses),
        priorities: PerMode(priorities.0.map(|p| p.map(|_, v| v / 10.0))),
        evaluations: evaluation_means(&parsed.responses),
        scores: score_stats(&parsed.responses),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_round_trips_through_json() {
        let e = embedded();
        let text = e.to_json().unwrap();
        let back = CalibrationData::from_json(&text).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn validation_rejects_bad_shares() {
        let mut e = embedded();
        e.national_shares.0[0] = 0.5;
        assert!(e.validate().is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut v = serde_json::to_value(embedded()).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(serde_json::from_value::<CalibrationData>(v).is_err());
    }
}
