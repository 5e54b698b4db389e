//! Reading survey responses from delimited text.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CriteriaVector, Criterion, Mode, ModeGrid, ModeSet, PerMode};

#[derive(Debug, Clone, PartialEq)]
pub struct SurveyResponse {
    pub usual_mode: Mode,
    pub distance_km: f64,
    /// Likert 0-10.
    pub priorities: CriteriaVector,
    /// Likert 0-10, per mode and criterion.
    pub evaluations: ModeGrid,
    pub declared_inaccessible: ModeSet,
}

/// Column names of the survey file. Every field defaults to the names used by
/// [`ColumnMapping::default`], so a mapping file only lists what differs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMapping {
    pub usual_mode: String,
    pub distance_km: String,
    pub priorities: BTreeMap<Criterion, String>,
    pub evaluations: BTreeMap<Mode, BTreeMap<Criterion, String>>,
    /// Optional per-mode "cannot access" columns.
    pub inaccessible: BTreeMap<Mode, String>,
    /// Extra labels accepted in the usual-mode column, e.g. `"vélo": "bike"`.
    pub mode_labels: BTreeMap<String, Mode>,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        let priorities = Criterion::ALL.iter().map(|&c| (c, format!("prio_{c}"))).collect();
        let evaluations = Mode::ALL
            .iter()
            .map(|&m| (m, Criterion::ALL.iter().map(|&c| (c, format!("eval_{m}_{c}"))).collect()))
            .collect();
        let inaccessible = Mode::ALL.iter().map(|&m| (m, format!("no_access_{m}"))).collect();
        let mode_labels = [
            ("voiture", Mode::Car),
            ("velo", Mode::Bike),
            ("vélo", Mode::Bike),
            ("bicycle", Mode::Bike),
            ("transports en commun", Mode::Bus),
            ("public transport", Mode::Bus),
            ("marche", Mode::Walk),
            ("walking", Mode::Walk),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        ColumnMapping {
            usual_mode: "usual_mode".into(),
            distance_km: "distance_km".into(),
            priorities,
            evaluations,
            inaccessible,
            mode_labels,
        }
    }
}

impl ColumnMapping {
    pub fn from_json(text: &str) -> Result<Self> {
        let mut mapping: ColumnMapping = serde_json::from_str(text)?;
        let defaults = ColumnMapping::default();
        // Partial maps fall back to default names entry by entry.
        for (c, name) in defaults.priorities {
            mapping.priorities.entry(c).or_insert(name);
        }
        for (m, row) in defaults.evaluations {
            let target = mapping.evaluations.entry(m).or_default();
            for (c, name) in row {
                target.entry(c).or_insert(name);
            }
        }
        Ok(mapping)
    }

    fn parse_mode(&self, raw: &str) -> Option<Mode> {
        let key = raw.trim().to_lowercase();
        self.mode_labels.get(&key).copied().or_else(|| key.parse().ok())
    }

    fn required_columns(&self) -> Vec<&str> {
        let mut cols = vec![self.usual_mode.as_str(), self.distance_km.as_str()];
        cols.extend(self.priorities.values().map(String::as_str));
        for row in self.evaluations.values() {
            cols.extend(row.values().map(String::as_str));
        }
        cols
    }
}

#[derive(Debug, Clone, Default)]
pub struct SurveyParse {
    pub responses: Vec<SurveyResponse>,
    /// Rows skipped because a field was missing, non-numeric or out of range.
    pub dropped: usize,
}

fn parse_number(raw: &str) -> Option<f64> {
    let t = raw.trim();
    if t.is_empty() {
        return None;
    }
    t.parse::<f64>().ok().or_else(|| t.replace(',', ".").parse().ok()).filter(|v| v.is_finite())
}

fn truthy(raw: &str) -> bool {
    matches!(raw.trim().to_lowercase().as_str(), "1" | "true" | "yes" | "oui" | "x" | "y")
}

fn likert(raw: &str) -> Option<f64> {
    parse_number(raw).filter(|v| (0.0..=10.0).contains(v))
}

/// Parses a comma-separated survey file with a header row.
pub fn parse_survey<R: Read>(raw: R, mapping: &ColumnMapping) -> Result<SurveyParse> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(raw);
    let headers = reader.headers()?.clone();
    let position: BTreeMap<&str, usize> = headers.iter().enumerate().map(|(i, h)| (h, i)).collect();

    let missing: Vec<String> = mapping
        .required_columns()
        .into_iter()
        .filter(|c| !position.contains_key(c))
        .map(str::to_string)
        .collect();
    if !missing.is_empty() {
        return Err(Error::SurveySchema(missing));
    }
    let col = |name: &str| position[name];
    let mode_col = col(&mapping.usual_mode);
    let dist_col = col(&mapping.distance_km);
    let prio_cols: Vec<(Criterion, usize)> = mapping.priorities.iter().map(|(&c, n)| (c, col(n))).collect();
    let eval_cols: Vec<(Mode, Criterion, usize)> = mapping
        .evaluations
        .iter()
        .flat_map(|(&m, row)| row.iter().map(move |(&c, n)| (m, c, n)))
        .map(|(m, c, n)| (m, c, col(n)))
        .collect();
    let access_cols: Vec<(Mode, usize)> =
        mapping.inaccessible.iter().filter_map(|(&m, n)| position.get(n.as_str()).map(|&i| (m, i))).collect();

    let mut out = SurveyParse::default();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let parsed = (|| {
            let usual_mode = mapping.parse_mode(field(mode_col))?;
            let distance_km = parse_number(field(dist_col)).filter(|d| *d >= 0.0)?;
            let mut priorities = CriteriaVector::default();
            for &(c, i) in &prio_cols {
                priorities[c] = likert(field(i))?;
            }
            let mut evaluations = ModeGrid::default();
            for &(m, c, i) in &eval_cols {
                evaluations.set(m, c, likert(field(i))?);
            }
            let mut declared_inaccessible = ModeSet::EMPTY;
            for &(m, i) in &access_cols {
                if truthy(field(i)) {
                    declared_inaccessible.insert(m);
                }
            }
            Some(SurveyResponse { usual_mode, distance_km, priorities, evaluations, declared_inaccessible })
        })();
        match parsed {
            Some(r) => out.responses.push(r),
            None => out.dropped += 1,
        }
    }
    Ok(out)
}

/// Maximum credible commuting distance per usual mode.
pub fn default_caps() -> PerMode<f64> {
    let mut caps = PerMode([0.0; Mode::COUNT]);
    caps[Mode::Walk] = 10.0;
    caps[Mode::Bike] = 55.0;
    caps[Mode::Car] = 195.0;
    caps[Mode::Bus] = 100.0;
    caps
}

/// Parses caps written as `walk=10,bike=55,...`. Unlisted modes keep their
/// default cap.
pub fn parse_caps(spec: &str) -> Result<PerMode<f64>> {
    let mut caps = default_caps();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (mode, value) =
            part.split_once('=').ok_or_else(|| Error::Config(format!("expected mode=km, got `{part}`")))?;
        let mode: Mode = mode.parse()?;
        let value = parse_number(value)
            .filter(|v| *v > 0.0)
            .ok_or_else(|| Error::Config(format!("cap for {mode} must be a positive number")))?;
        caps[mode] = value;
    }
    Ok(caps)
}

/// Drops zero or negative distances and distances above the cap of the
/// respondent's usual mode. Returns the retained responses and the number
/// excluded per mode.
pub fn clean_distances(responses: &[SurveyResponse], caps: &PerMode<f64>) -> (Vec<SurveyResponse>, PerMode<usize>) {
    let mut excluded = PerMode([0usize; Mode::COUNT]);
    let kept = responses
        .iter()
        .filter(|r| {
            let keep = r.distance_km > 0.0 && r.distance_km <= caps[r.usual_mode];
            if !keep {
                excluded[r.usual_mode] += 1;
            }
            keep
        })
        .cloned()
        .collect();
    (kept, excluded)
}
