//! Renewable availability scenarios and load profiles over the horizon.
//!
//! The profile document is a delimited table: first column the period index
//! `1..T`, one column per scenario, values normalized to `[0, 1]`. An
//! optional row starting with `probabilities` overrides the equiprobable
//! default. `#` starts a comment.

use std::collections::HashMap;

use scopf_grid::ResPlant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("profile value {value} at scenario {s}, period {t} lies outside [0, 1]")]
    Range { s: usize, t: usize, value: f64 },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("probabilities {0}")]
    Probabilities(String),
}

/// Normalized RES output per scenario and period, with occurrence
/// probabilities. Immutable after construction.
#[derive(Debug, Clone)]
pub struct ScenarioSet {
    horizon: usize,
    dt: f64,
    /// Scenario-major: `profiles[s][t]`.
    profiles: Vec<Vec<f64>>,
    probabilities: Vec<f64>,
}

impl ScenarioSet {
    /// Assemble a set from scenario-major profiles, checking every invariant.
    pub fn new(
        profiles: Vec<Vec<f64>>,
        probabilities: Vec<f64>,
        horizon: usize,
        dt: f64,
    ) -> Result<Self, ScenarioError> {
        if profiles.is_empty() {
            return Err(ScenarioError::Shape("no scenarios".into()));
        }
        if profiles.len() != probabilities.len() {
            return Err(ScenarioError::Shape(format!(
                "{} scenarios but {} probabilities",
                profiles.len(),
                probabilities.len()
            )));
        }
        for (s, profile) in profiles.iter().enumerate() {
            if profile.len() != horizon {
                return Err(ScenarioError::Shape(format!(
                    "scenario {} has {} entries, expected {}",
                    s + 1,
                    profile.len(),
                    horizon
                )));
            }
            for (t, &v) in profile.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return Err(ScenarioError::Range { s: s + 1, t: t + 1, value: v });
                }
            }
        }
        if probabilities.iter().any(|&p| p < 0.0) {
            return Err(ScenarioError::Probabilities("must be nonnegative".into()));
        }
        let sum: f64 = probabilities.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(ScenarioError::Probabilities(format!("sum to {sum}, expected 1")));
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(ScenarioError::Shape(format!("period length must be positive, got {dt}")));
        }
        Ok(Self { horizon, dt, profiles, probabilities })
    }

    pub fn num_scenarios(&self) -> usize {
        self.profiles.len()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Period length in hours.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        assert!(dt > 0.0);
        self.dt = dt;
        self
    }

    /// Normalized availability, 0-based indices.
    pub fn profile(&self, s: usize, t: usize) -> f64 {
        self.profiles[s][t]
    }

    pub fn probability(&self, s: usize) -> f64 {
        self.probabilities[s]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Available plant power in MW for scenario `s`, period `t` (0-based).
    pub fn res_injection(&self, plant: &ResPlant, s: usize, t: usize) -> f64 {
        plant.capacity * self.profiles[s][t]
    }

    /// Build a `count`-scenario set by cycling through the originals in
    /// order and renormalizing to equiprobable `1/count` weights.
    pub fn replicate(&self, count: usize) -> ScenarioSet {
        assert!(count >= 1, "replication count must be at least 1");
        let orig = self.profiles.len();
        let profiles: Vec<Vec<f64>> =
            (0..count).map(|s| self.profiles[s % orig].clone()).collect();
        ScenarioSet {
            horizon: self.horizon,
            dt: self.dt,
            profiles,
            probabilities: vec![1.0 / count as f64; count],
        }
    }
}

/// Parse a profile document with `horizon` periods.
pub fn load_scenarios(text: &str, horizon: usize) -> Result<ScenarioSet, ScenarioError> {
    let mut probabilities: Option<Vec<f64>> = None;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields[0].eq_ignore_ascii_case("probabilities") {
            let parsed = fields[1..]
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ScenarioError::Parse { line: lineno + 1, msg: e.to_string() })?;
            probabilities = Some(parsed);
            continue;
        }
        let mut values = fields
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| ScenarioError::Parse { line: lineno + 1, msg: e.to_string() })?;
        if values.len() < 2 {
            return Err(ScenarioError::Parse {
                line: lineno + 1,
                msg: "expected a period index and at least one scenario value".into(),
            });
        }
        let t = values.remove(0);
        if t.fract() != 0.0 || t < 1.0 {
            return Err(ScenarioError::Parse {
                line: lineno + 1,
                msg: format!("period index must be a positive integer, got {t}"),
            });
        }
        rows.push((t as usize, values));
    }

    if rows.len() != horizon {
        return Err(ScenarioError::Shape(format!(
            "{} data rows, expected {horizon}",
            rows.len()
        )));
    }
    let num_scenarios = rows[0].1.len();
    let mut profiles = vec![vec![0.0; horizon]; num_scenarios];
    for (i, (t, values)) in rows.iter().enumerate() {
        if *t != i + 1 {
            return Err(ScenarioError::Shape(format!(
                "period indices must run 1..{horizon} in order, found {t} at row {}",
                i + 1
            )));
        }
        if values.len() != num_scenarios {
            return Err(ScenarioError::Shape(format!(
                "row {t} has {} scenario values, expected {num_scenarios}",
                values.len()
            )));
        }
        for (s, &v) in values.iter().enumerate() {
            profiles[s][i] = v;
        }
    }

    let probabilities = match probabilities {
        Some(p) => {
            if p.len() != num_scenarios {
                return Err(ScenarioError::Probabilities(format!(
                    "row has {} entries, expected {num_scenarios}",
                    p.len()
                )));
            }
            p
        }
        None => vec![1.0 / num_scenarios as f64; num_scenarios],
    };

    ScenarioSet::new(profiles, probabilities, horizon, 1.0)
}

/// Per-bus demand multipliers over the horizon. Missing buses default to a
/// constant multiplier of one; reactive demand scales with the same factor.
#[derive(Debug, Clone)]
pub struct LoadProfileSet {
    horizon: usize,
    multipliers: HashMap<u32, Vec<f64>>,
}

impl LoadProfileSet {
    /// Constant demand over `horizon` periods for every bus.
    pub fn uniform(horizon: usize) -> Self {
        Self { horizon, multipliers: HashMap::new() }
    }

    pub fn with_bus(mut self, bus: u32, profile: Vec<f64>) -> Result<Self, ScenarioError> {
        if profile.len() != self.horizon {
            return Err(ScenarioError::Shape(format!(
                "bus {bus} profile has {} entries, expected {}",
                profile.len(),
                self.horizon
            )));
        }
        if let Some(&bad) = profile.iter().find(|&&m| m < 0.0) {
            return Err(ScenarioError::Shape(format!(
                "bus {bus} multiplier {bad} must be nonnegative"
            )));
        }
        self.multipliers.insert(bus, profile);
        Ok(self)
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Demand multiplier for a bus at period `t` (0-based).
    pub fn multiplier(&self, bus: u32, t: usize) -> f64 {
        self.multipliers.get(&bus).map_or(1.0, |p| p[t])
    }
}
