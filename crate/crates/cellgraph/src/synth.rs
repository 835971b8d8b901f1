//! Synthetic cities, subscriber populations, and call graphs with
//! planted ground truth, so every pipeline stage can be verified
//! end to end against a known answer.
//!
//! All generators are pure functions of their parameters and seed.
//! Per-entity randomness comes from separate ChaCha streams derived
//! from the seed, so generation order (or future parallelism) cannot
//! change the output.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto, StandardNormal};

use crate::community::{builtin_profiles, ScenarioProfile};
use crate::error::{Error, Result};
use crate::records::{CallRecord, CellInfo, FlowRecord};

const SECONDS_PER_DAY: i64 = 86_400;
const SECONDS_PER_HOUR: i64 = 3_600;

/// City center the synthetic cells scatter around.
const BASE_LAT: f64 = 47.4;
const BASE_LON: f64 = 8.5;
/// Scenario clusters sit on a ring of this radius (degrees) around the
/// base point; cells jitter by at most `CELL_JITTER` inside a cluster.
const CLUSTER_RADIUS: f64 = 0.08;
const CELL_JITTER: f64 = 0.01;

/// App catalog sampled per synthetic flow, with relative weights.
const APP_MIX: [(&str, u32); 4] = [("web", 4), ("video", 3), ("im", 2), ("music", 1)];

/// One scenario to plant in a synthetic city: a daily shape shared by
/// all its cells, the mean daily volume per cell, and the per-bin
/// noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    profile: ScenarioProfile,
    amplitude: f64,
    noise_sigma: f64,
}

impl ScenarioSpec {
    /// `amplitude` is mean bytes per cell per day; `noise_sigma` is the
    /// per-bin noise standard deviation as a fraction of the bin mean.
    pub fn new(profile: ScenarioProfile, amplitude: f64, noise_sigma: f64) -> Result<Self> {
        if !(amplitude > 0.0) || !amplitude.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "amplitude must be positive, got {amplitude}"
            )));
        }
        if !(noise_sigma >= 0.0) || !noise_sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "noise_sigma must be non-negative, got {noise_sigma}"
            )));
        }
        Ok(ScenarioSpec {
            profile,
            amplitude,
            noise_sigma,
        })
    }

    pub fn label(&self) -> &str {
        self.profile.label()
    }

    pub fn profile(&self) -> &ScenarioProfile {
        &self.profile
    }
}

/// The four built-in scenarios (residential, office, shopping,
/// transport) at plausible per-cell volumes and a common noise level.
pub fn default_scenarios(noise_sigma: f64) -> Result<Vec<ScenarioSpec>> {
    let amplitudes = [3.0e9, 4.0e9, 2.5e9, 2.0e9];
    builtin_profiles()
        .into_iter()
        .zip(amplitudes)
        .map(|(p, a)| ScenarioSpec::new(p, a, noise_sigma))
        .collect()
}

/// Expected bytes in `[t, t + bin_width)` for a daily shape scaled to
/// `amplitude` bytes per day: the integral of the piecewise-constant
/// hourly rate over the bin.
fn expected_bin_bytes(shape: &[f64; 24], amplitude: f64, t: i64, bin_width: i64) -> f64 {
    let mut total = 0.0;
    let mut at = t;
    let end = t + bin_width;
    while at < end {
        let hour = (at.rem_euclid(SECONDS_PER_DAY) / SECONDS_PER_HOUR) as usize;
        let hour_end = (at.div_euclid(SECONDS_PER_HOUR) + 1) * SECONDS_PER_HOUR;
        let chunk = hour_end.min(end) - at;
        total += amplitude * shape[hour] * chunk as f64 / SECONDS_PER_HOUR as f64;
        at = hour_end.min(end);
    }
    total
}

fn scenario_center(idx: usize, count: usize) -> (f64, f64) {
    let angle = 2.0 * std::f64::consts::PI * idx as f64 / count as f64;
    (
        BASE_LAT + CLUSTER_RADIUS * angle.cos(),
        BASE_LON + CLUSTER_RADIUS * angle.sin(),
    )
}

fn pick_app(rng: &mut ChaCha8Rng) -> &'static str {
    let total: u32 = APP_MIX.iter().map(|&(_, w)| w).sum();
    let mut roll = rng.gen_range(0..total);
    for &(app, w) in &APP_MIX {
        if roll < w {
            return app;
        }
        roll -= w;
    }
    unreachable!("weights cover the range")
}

/// Generate a synthetic city: one flow record per cell and bin starting
/// at epoch 0, cell metadata with scenario-clustered coordinates, and
/// the planted cell → scenario-label map.
///
/// Per cell and bin, the expected volume is `amplitude · shape[hour]`
/// prorated to the bin, realized as `expected · max(0, 1 + σ·N(0,1))`.
/// Cells of the same scenario share shape and amplitude, so at σ = 0
/// their series are identical and their Pearson correlation is 1.
pub fn gen_city(
    scenarios: &[ScenarioSpec],
    cells_per_scenario: usize,
    days: usize,
    bin_width: i64,
    seed: u64,
) -> Result<(Vec<FlowRecord>, Vec<CellInfo>, BTreeMap<String, String>)> {
    if scenarios.is_empty() {
        return Err(Error::InvalidArgument("no scenarios given".into()));
    }
    for (i, a) in scenarios.iter().enumerate() {
        if scenarios[..i].iter().any(|b| b.label() == a.label()) {
            return Err(Error::InvalidArgument(format!(
                "duplicate scenario label '{}'",
                a.label()
            )));
        }
    }
    if cells_per_scenario == 0 {
        return Err(Error::InvalidArgument("cells_per_scenario must be >= 1".into()));
    }
    if days == 0 {
        return Err(Error::InvalidArgument("days must be >= 1".into()));
    }
    if bin_width <= 0 || SECONDS_PER_DAY % bin_width != 0 {
        return Err(Error::InvalidArgument(format!(
            "bin_width {bin_width} must be positive and divide one day"
        )));
    }
    let n_bins = (days as i64 * SECONDS_PER_DAY / bin_width) as usize;

    let mut records = Vec::with_capacity(scenarios.len() * cells_per_scenario * n_bins);
    let mut cells = Vec::with_capacity(scenarios.len() * cells_per_scenario);
    let mut truth = BTreeMap::new();
    for (s_idx, spec) in scenarios.iter().enumerate() {
        let (center_lat, center_lon) = scenario_center(s_idx, scenarios.len());
        for c in 0..cells_per_scenario {
            let cell_index = s_idx * cells_per_scenario + c;
            let cell_id = format!("bs{cell_index:03}");
            // one independent stream per cell: output does not depend on
            // generation order
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(cell_index as u64);

            let lat = center_lat + rng.gen_range(-CELL_JITTER..CELL_JITTER);
            let lon = center_lon + rng.gen_range(-CELL_JITTER..CELL_JITTER);
            cells.push(CellInfo {
                cell_id: cell_id.clone(),
                lat,
                lon,
                poi_label: Some(spec.label().to_string()),
            });
            truth.insert(cell_id.clone(), spec.label().to_string());

            let user_id = format!("u_{cell_id}");
            for b in 0..n_bins {
                let t = b as i64 * bin_width;
                let expected =
                    expected_bin_bytes(spec.profile.shape(), spec.amplitude, t, bin_width);
                let z: f64 = rng.sample(StandardNormal);
                let factor = (1.0 + spec.noise_sigma * z).max(0.0);
                let bytes = (expected * factor).round() as u64;
                let bytes_up = bytes / 4;
                let bytes_down = bytes - bytes_up;
                let app = pick_app(&mut rng);
                records.push(FlowRecord {
                    user_id: user_id.clone(),
                    cell_id: cell_id.clone(),
                    t_start: t,
                    t_end: t + bin_width,
                    bytes_up,
                    bytes_down,
                    pkts_up: bytes_up.div_ceil(1400),
                    pkts_down: bytes_down.div_ceil(1400),
                    app_id: app.to_string(),
                    host: Some(format!("{app}.example.net")),
                });
            }
        }
    }
    Ok((records, cells, truth))
}

/// Draw per-subscriber total volumes from Pareto(alpha, x_min = 1).
/// Small alpha means a heavy tail: a few subscribers carry nearly all
/// traffic.
pub fn gen_subscribers(n: usize, alpha: f64, seed: u64) -> Result<BTreeMap<String, f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let pareto = Pareto::new(1.0, alpha)
        .map_err(|e| Error::InvalidArgument(format!("bad Pareto parameters: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|i| (format!("sub{i:05}"), pareto.sample(&mut rng)))
        .collect())
}

/// Planted-partition call graph: `blocks` groups of `users_per_block`
/// users; every unordered pair gets a call with probability `p_in`
/// inside a block and `p_out` across blocks. Call direction, start time
/// (within one day) and duration are randomized.
pub fn gen_calls(
    users_per_block: usize,
    blocks: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<(Vec<CallRecord>, BTreeMap<String, usize>)> {
    if users_per_block == 0 || blocks == 0 {
        return Err(Error::InvalidArgument("counts must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) || p_in <= p_out {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= p_out < p_in <= 1, got p_in {p_in}, p_out {p_out}"
        )));
    }
    let n = users_per_block * blocks;
    let id = |i: usize| format!("u{i:04}");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut calls = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if i / users_per_block == j / users_per_block {
                p_in
            } else {
                p_out
            };
            if rng.gen_bool(p) {
                let (a, b) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
                calls.push(CallRecord {
                    caller_id: id(a),
                    callee_id: id(b),
                    t_start: rng.gen_range(0..SECONDS_PER_DAY),
                    duration_s: rng.gen_range(10..600),
                });
            }
        }
    }
    let map = (0..n).map(|i| (id(i), i / users_per_block)).collect();
    Ok((calls, map))
}
