//! End-to-end calibration from a synthetic survey file.

use std::fmt::Write as _;

use modal_core::calibration::{calibrate, default_caps, parse_survey, CalibrationData, ColumnMapping};
use modal_core::engine::{SimConfig, SimState};
use modal_core::model::{Criterion, Mode};
use modal_core::Error;

fn header() -> String {
    let mut cols = vec!["usual_mode".to_string(), "distance_km".to_string()];
    cols.extend(Criterion::ALL.iter().map(|c| format!("prio_{c}")));
    for m in Mode::ALL {
        cols.extend(Criterion::ALL.iter().map(|c| format!("eval_{m}_{c}")));
    }
    cols.extend(Mode::ALL.iter().map(|m| format!("no_access_{m}")));
    cols.join(",")
}

/// Users rate their own mode 8 and every other mode 4; priorities are
/// `prio` everywhere.
fn row(mode: &str, own: Mode, distance: &str, prio: &str, no_access: [&str; 4]) -> String {
    let mut r = format!("{mode},{distance}");
    for _ in Criterion::ALL {
        write!(r, ",{prio}").unwrap();
    }
    for m in Mode::ALL {
        for _ in Criterion::ALL {
            write!(r, ",{}", if m == own { 8 } else { 4 }).unwrap();
        }
    }
    for flag in no_access {
        write!(r, ",{flag}").unwrap();
    }
    r
}

fn fixture() -> String {
    let mut lines = vec![header()];
    for i in 0..10 {
        let no_bus = if i < 4 { "1" } else { "0" };
        lines.push(row("car", Mode::Car, &format!("{}", 10 + i), "6", ["0", "0", no_bus, "0"]));
        let no_car = if i < 5 { "oui" } else { "" };
        lines.push(row("vélo", Mode::Bike, "\"4,5\"", "8", [no_car, "0", "0", "0"]));
        lines.push(row("bus", Mode::Bus, "8", "7", ["1", "0", "0", "0"]));
        lines.push(row("walk", Mode::Walk, "1.5", "9", ["0", "0", "0", "0"]));
    }
    // Aberrant and malformed rows.
    lines.push(row("walk", Mode::Walk, "550", "9", ["0"; 4]));
    lines.push(row("car", Mode::Car, "0", "6", ["0"; 4]));
    lines.push(row("car", Mode::Car, "12", "11", ["0"; 4]));
    lines.push(row("tram", Mode::Car, "12", "6", ["0"; 4]));
    lines.join("\n")
}

#[test]
fn synthetic_survey_calibrates_and_runs() {
    let parsed = parse_survey(fixture().as_bytes(), &ColumnMapping::default()).unwrap();
    assert_eq!(parsed.responses.len(), 42);
    assert_eq!(parsed.dropped, 2, "out-of-range priority and unknown mode");

    let calib = calibrate(&parsed, &default_caps(), "synthetic fixture").unwrap();
    calib.validate().unwrap();
    let provenance = &calib.provenance;
    let exclusions = provenance.exclusions.as_ref().unwrap();
    assert_eq!(exclusions[Mode::Walk], 1, "550 km walker");
    assert_eq!(exclusions[Mode::Car], 1, "zero distance");

    assert!((calib.distance_stats[Mode::Car].mean - 14.5).abs() < 1e-9);
    assert!((calib.distance_stats[Mode::Bike].mean - 4.5).abs() < 1e-9);
    assert!((calib.mean_priorities[Mode::Walk][Criterion::Time] - 90.0).abs() < 1e-9);
    assert!((calib.access_prob[Mode::Car].no_bus - 4.0 / 11.0).abs() < 1e-9);
    assert!((calib.access_prob[Mode::Bike].no_car - 0.5).abs() < 1e-9);
    assert_eq!(calib.access_prob[Mode::Bus].no_bus, 0.0);

    // Users see their mode at 8 against a median of 4.
    assert!((calib.prototypes[Mode::Bus].get(Mode::Bus, Criterion::Comfort) - 2.0f64.min(1.95)).abs() < 1e-9);
    assert!((calib.prototypes[Mode::Bus].get(Mode::Car, Criterion::Comfort) - 1.0).abs() < 1e-9);

    let json = calib.to_json().unwrap();
    let back = CalibrationData::from_json(&json).unwrap();
    assert_eq!(back, calib);

    let mut state = SimState::init(&back, SimConfig { seed: 3, ..SimConfig::default() }).unwrap();
    for _ in 0..20 {
        let m = state.step();
        assert!((m.shares.0.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn missing_columns_are_listed() {
    let text = "usual_mode,distance_km\ncar,3\n";
    match parse_survey(text.as_bytes(), &ColumnMapping::default()).unwrap_err() {
        Error::SurveySchema(missing) => {
            assert!(missing.contains(&"prio_ecology".to_string()));
            assert!(missing.contains(&"eval_walk_safety".to_string()));
        }
        e => panic!("{e:?}"),
    }
}

#[test]
fn mapping_files_rename_columns() {
    let mapping = ColumnMapping::from_json(r#"{"usual_mode": "mode", "distance_km": "km"}"#).unwrap();
    let text = fixture().replacen("usual_mode,distance_km", "mode,km", 1);
    let parsed = parse_survey(text.as_bytes(), &mapping).unwrap();
    assert_eq!(parsed.responses.len(), 42);
    assert!(ColumnMapping::from_json(r#"{"colour": "x"}"#).is_err());
}
