//! Scenario labeling: match each community's aggregate 24-hour traffic
//! shape against a library of reference daily profiles (residential,
//! office, shopping, transport by default) by Euclidean distance.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::community::CommunityPartition;
use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Assignments farther than this from every reference profile are
/// flagged low-confidence.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.25;

const SECONDS_PER_DAY: i64 = 86_400;
const SECONDS_PER_HOUR: i64 = 3_600;

/// A reference daily shape: 24 hourly fractions summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioProfile {
    label: String,
    shape: [f64; 24],
}

impl ScenarioProfile {
    pub fn new(label: impl Into<String>, shape: [f64; 24]) -> Result<Self> {
        let label = label.into();
        if label.is_empty() {
            return Err(Error::InvalidArgument("profile label is empty".into()));
        }
        if shape.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "profile '{label}' has negative or non-finite entries"
            )));
        }
        let sum: f64 = shape.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "profile '{label}' sums to {sum}, expected 1"
            )));
        }
        Ok(ScenarioProfile { label, shape })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn shape(&self) -> &[f64; 24] {
        &self.shape
    }
}

/// The verdict for one community.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ScenarioAssignment {
    pub label: String,
    /// Euclidean distance between the community's normalized daily
    /// shape and the chosen profile.
    pub distance: f64,
    /// True when even the nearest profile is farther than the
    /// configured threshold.
    pub low_confidence: bool,
}

/// Parse profiles from CSV with header `label,h0,...,h23`.
pub fn parse_profiles(reader: impl Read) -> Result<Vec<ScenarioProfile>> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::Schema("profile file is empty".into()))?;
    let expected: Vec<String> = std::iter::once("label".to_string())
        .chain((0..24).map(|h| format!("h{h}")))
        .collect();
    if header.trim().split(',').map(str::trim).ne(expected.iter().map(String::as_str)) {
        return Err(Error::Schema(format!(
            "bad profile header: '{}'",
            header.trim()
        )));
    }
    let mut profiles = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 25 {
            return Err(Error::Row {
                line: idx + 2,
                reason: format!("expected 25 fields, got {}", fields.len()),
            });
        }
        let mut shape = [0.0; 24];
        for (h, slot) in shape.iter_mut().enumerate() {
            *slot = fields[h + 1].parse::<f64>().map_err(|e| Error::Row {
                line: idx + 2,
                reason: format!("bad value '{}': {e}", fields[h + 1]),
            })?;
        }
        let profile = ScenarioProfile::new(fields[0], shape).map_err(|e| Error::Row {
            line: idx + 2,
            reason: e.to_string(),
        })?;
        if profiles.iter().any(|p: &ScenarioProfile| p.label == profile.label) {
            return Err(Error::Row {
                line: idx + 2,
                reason: format!("duplicate profile label '{}'", profile.label),
            });
        }
        profiles.push(profile);
    }
    if profiles.is_empty() {
        return Err(Error::Schema("profile file defines no profiles".into()));
    }
    Ok(profiles)
}

/// Load profiles from a CSV file on disk.
pub fn load_profiles(path: impl AsRef<Path>) -> Result<Vec<ScenarioProfile>> {
    parse_profiles(std::fs::File::open(path)?)
}

/// The built-in reference library shipped with the crate.
pub fn builtin_profiles() -> Vec<ScenarioProfile> {
    parse_profiles(include_str!("../../data/scenario_profiles.csv").as_bytes())
        .expect("built-in profile data is valid")
}

/// Fold a community's member series into one normalized 24-entry daily
/// shape: bucket every sample by wall-clock hour, sum, divide by the
/// grand total. A community with zero total traffic gets the uniform
/// shape.
fn daily_shape(members: &[&TimeSeries]) -> [f64; 24] {
    let mut hours = [0.0f64; 24];
    for s in members {
        for (i, &v) in s.values.iter().enumerate() {
            let t = s.t0 + i as i64 * s.bin_width;
            let hour = (t.rem_euclid(SECONDS_PER_DAY) / SECONDS_PER_HOUR) as usize;
            hours[hour] += v;
        }
    }
    let total: f64 = hours.iter().sum();
    if total <= 0.0 {
        return [1.0 / 24.0; 24];
    }
    for v in &mut hours {
        *v /= total;
    }
    hours
}

fn euclidean(a: &[f64; 24], b: &[f64; 24]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Label every community of `partition` with the nearest reference
/// profile. Each node must come with an hourly-compatible series (bin
/// width dividing one hour) spanning at least one full day.
pub fn label_scenarios(
    partition: &CommunityPartition,
    series: &BTreeMap<String, TimeSeries>,
    profiles: &[ScenarioProfile],
    confidence_threshold: f64,
) -> Result<BTreeMap<usize, ScenarioAssignment>> {
    if profiles.is_empty() {
        return Err(Error::InvalidArgument("no reference profiles given".into()));
    }
    if !(confidence_threshold > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence threshold must be positive, got {confidence_threshold}"
        )));
    }
    for (id, _) in partition.assignment() {
        let s = series.get(id).ok_or_else(|| {
            Error::InvalidArgument(format!("node '{id}' has no series"))
        })?;
        let dt = s.bin_width;
        if dt > SECONDS_PER_HOUR || SECONDS_PER_HOUR % dt != 0 {
            return Err(Error::InvalidArgument(format!(
                "series '{id}' bin width {dt}s does not evenly divide one hour"
            )));
        }
        let span = dt * s.values.len() as i64;
        if span < SECONDS_PER_DAY {
            return Err(Error::InsufficientData(format!(
                "series '{id}' spans {span}s, need a full day"
            )));
        }
    }
    let mut members: BTreeMap<usize, Vec<&TimeSeries>> = BTreeMap::new();
    for (id, &c) in partition.assignment() {
        members.entry(c).or_default().push(&series[id]);
    }
    let mut out = BTreeMap::new();
    for (c, group) in &members {
        let shape = daily_shape(group);
        let (label, distance) = profiles
            .iter()
            .map(|p| (p.label.clone(), euclidean(&shape, &p.shape)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite distances"))
            .expect("at least one profile");
        out.insert(
            *c,
            ScenarioAssignment {
                label,
                low_confidence: distance > confidence_threshold,
                distance,
            },
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::community::tests::partition_of;

    fn hourly_series(t0: i64, day_values: &[f64; 24], days: usize) -> TimeSeries {
        let mut values = Vec::with_capacity(24 * days);
        for _ in 0..days {
            values.extend_from_slice(day_values);
        }
        TimeSeries::new("s", t0, 3600, values).unwrap()
    }

    #[test]
    fn builtin_profiles_are_valid_and_complete() {
        let profiles = builtin_profiles();
        let labels: Vec<&str> = profiles.iter().map(|p| p.label()).collect();
        assert_eq!(labels, ["residential", "office", "shopping", "transport"]);
        for p in &profiles {
            let sum: f64 = p.shape().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "{} sums to {sum}", p.label());
        }
    }

    #[test]
    fn profile_rejects_bad_shapes() {
        let mut shape = [1.0 / 24.0; 24];
        assert!(ScenarioProfile::new("x", shape).is_ok());
        shape[0] = -shape[0];
        assert!(ScenarioProfile::new("x", shape).is_err());
        let shape = [1.0 / 23.0; 24]; // sums to 24/23
        assert!(ScenarioProfile::new("x", shape).is_err());
    }

    #[test]
    fn exact_profile_traffic_gets_its_own_label_at_distance_zero() {
        let profiles = builtin_profiles();
        let office = profiles[1].shape();
        // traffic exactly proportional to the office profile
        let mut day = [0.0; 24];
        for (h, v) in day.iter_mut().enumerate() {
            *v = office[h] * 5000.0;
        }
        let series: BTreeMap<String, TimeSeries> =
            [("a".to_string(), hourly_series(0, &day, 2))].into();
        let partition = partition_of(&[("a", 0)]);
        let labels = label_scenarios(&partition, &series, &profiles, 0.25).unwrap();
        let a = &labels[&0];
        assert_eq!(a.label, "office");
        assert!(a.distance < 1e-12, "distance {}", a.distance);
        assert!(!a.low_confidence);
    }

    #[test]
    fn samples_are_bucketed_by_wall_clock_hour_not_sample_index() {
        let profiles = builtin_profiles();
        let resi = profiles[0].shape();
        let mut day = [0.0; 24];
        for (h, v) in day.iter_mut().enumerate() {
            *v = resi[h] * 100.0;
        }
        // series starts at 10:00, so index 0 lands in hour 10
        let mut rotated = [0.0; 24];
        for h in 0..24 {
            rotated[h] = day[(h + 10) % 24];
        }
        let series: BTreeMap<String, TimeSeries> =
            [("a".to_string(), hourly_series(10 * 3600, &rotated, 1))].into();
        let partition = partition_of(&[("a", 0)]);
        let labels = label_scenarios(&partition, &series, &profiles, 0.25).unwrap();
        assert_eq!(labels[&0].label, "residential");
        assert!(labels[&0].distance < 1e-12);
    }

    #[test]
    fn community_shape_is_the_volume_weighted_blend_of_members() {
        let profiles = builtin_profiles();
        let office = profiles[1].shape();
        let shopping = profiles[2].shape();
        // one heavy office cell and one light shopping cell in the same
        // community: the blend must sit nearer the office profile
        let mut heavy = [0.0; 24];
        let mut light = [0.0; 24];
        for h in 0..24 {
            heavy[h] = office[h] * 900.0;
            light[h] = shopping[h] * 100.0;
        }
        let series: BTreeMap<String, TimeSeries> = [
            ("a".to_string(), hourly_series(0, &heavy, 1)),
            ("b".to_string(), hourly_series(0, &light, 1)),
        ]
        .into();
        let partition = partition_of(&[("a", 0), ("b", 0)]);
        let labels = label_scenarios(&partition, &series, &profiles, 10.0).unwrap();
        assert_eq!(labels[&0].label, "office");
        // the blended shape is 0.9*office + 0.1*shopping; its distance
        // to office is 0.1 * |office - shopping|
        let expected = 0.1
            * office
                .iter()
                .zip(shopping)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
        assert!((labels[&0].distance - expected).abs() < 1e-12);
    }

    #[test]
    fn far_from_everything_is_flagged_low_confidence() {
        let profiles = builtin_profiles();
        // all traffic in a single 3am hour matches nothing
        let mut day = [0.0; 24];
        day[3] = 1000.0;
        let series: BTreeMap<String, TimeSeries> =
            [("a".to_string(), hourly_series(0, &day, 1))].into();
        let partition = partition_of(&[("a", 0)]);
        let labels = label_scenarios(&partition, &series, &profiles, 0.25).unwrap();
        assert!(labels[&0].low_confidence);
        assert!(labels[&0].distance > 0.25);
    }

    #[test]
    fn zero_traffic_community_gets_the_uniform_shape() {
        let profiles = builtin_profiles();
        let series: BTreeMap<String, TimeSeries> =
            [("a".to_string(), hourly_series(0, &[0.0; 24], 1))].into();
        let partition = partition_of(&[("a", 0)]);
        let labels = label_scenarios(&partition, &series, &profiles, 10.0).unwrap();
        // distance must equal each profile's distance from uniform, and
        // the nearest profile to uniform wins
        let uniform = [1.0 / 24.0; 24];
        let (want_label, want_dist) = profiles
            .iter()
            .map(|p| (p.label().to_string(), euclidean(&uniform, p.shape())))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        assert_eq!(labels[&0].label, want_label);
        assert!((labels[&0].distance - want_dist).abs() < 1e-12);
    }

    #[test]
    fn sub_hourly_bins_fold_into_the_right_hours() {
        let profiles = builtin_profiles();
        let office = profiles[1].shape();
        // 15-minute bins: four equal samples per hour
        let mut values = Vec::new();
        for h in 0..24 {
            for _ in 0..4 {
                values.push(office[h] * 250.0);
            }
        }
        let s = TimeSeries::new("a", 0, 900, values).unwrap();
        let series: BTreeMap<String, TimeSeries> = [("a".to_string(), s)].into();
        let partition = partition_of(&[("a", 0)]);
        let labels = label_scenarios(&partition, &series, &profiles, 0.25).unwrap();
        assert_eq!(labels[&0].label, "office");
        assert!(labels[&0].distance < 1e-12);
    }

    #[test]
    fn short_series_and_coarse_bins_are_rejected() {
        let profiles = builtin_profiles();
        let partition = partition_of(&[("a", 0)]);
        // spans only 12 hours
        let s = TimeSeries::new("a", 0, 3600, vec![1.0; 12]).unwrap();
        let series: BTreeMap<String, TimeSeries> = [("a".to_string(), s)].into();
        assert!(label_scenarios(&partition, &series, &profiles, 0.25).is_err());
        // 2-hour bins cannot be folded into hours
        let s = TimeSeries::new("a", 0, 7200, vec![1.0; 12]).unwrap();
        let series: BTreeMap<String, TimeSeries> = [("a".to_string(), s)].into();
        assert!(label_scenarios(&partition, &series, &profiles, 0.25).is_err());
        // 25-minute bins do not divide an hour evenly
        let s = TimeSeries::new("a", 0, 1500, vec![1.0; 60]).unwrap();
        let series: BTreeMap<String, TimeSeries> = [("a".to_string(), s)].into();
        assert!(label_scenarios(&partition, &series, &profiles, 0.25).is_err());
    }

    #[test]
    fn missing_series_for_a_member_is_an_error() {
        let profiles = builtin_profiles();
        let partition = partition_of(&[("a", 0), ("b", 0)]);
        let series: BTreeMap<String, TimeSeries> =
            [("a".to_string(), hourly_series(0, &[1.0; 24], 1))].into();
        assert!(label_scenarios(&partition, &series, &profiles, 0.25).is_err());
    }

    #[test]
    fn profile_csv_round_trips_through_a_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profiles.csv");
        let mut text = String::from(
            "label,h0,h1,h2,h3,h4,h5,h6,h7,h8,h9,h10,h11,h12,h13,h14,h15,h16,h17,h18,h19,h20,h21,h22,h23\n",
        );
        text.push_str("flat,");
        text.push_str(&vec!["0.04166666666666667"; 24].join(","));
        text.push('\n');
        std::fs::write(&path, text).unwrap();
        let profiles = load_profiles(&path).unwrap();
        assert_eq!(profiles.len(), 1);
        assert_eq!(profiles[0].label(), "flat");
    }

    #[test]
    fn malformed_profile_files_are_rejected() {
        assert!(parse_profiles("".as_bytes()).is_err());
        assert!(parse_profiles("label,h0\nx,1.0\n".as_bytes()).is_err());
        let header = "label,h0,h1,h2,h3,h4,h5,h6,h7,h8,h9,h10,h11,h12,h13,h14,h15,h16,h17,h18,h19,h20,h21,h22,h23\n";
        // row with wrong field count
        let bad = format!("{header}x,0.5,0.5\n");
        assert!(parse_profiles(bad.as_bytes()).is_err());
        // duplicate label
        let flat = vec!["0.04166666666666667"; 24].join(",");
        let dup = format!("{header}x,{flat}\nx,{flat}\n");
        assert!(parse_profiles(dup.as_bytes()).is_err());
        // header only
        assert!(parse_profiles(header.as_bytes()).is_err());
    }
}
