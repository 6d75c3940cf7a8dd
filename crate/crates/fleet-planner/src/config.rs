//! TOML configuration for the CLI: planner selection and parameters, solver
//! backend, reactive buffer, and the benchmark matrix.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::planner::{PlannerConfig, TargetMode};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unknown planner {0:?} (expected full, interval, midpoint, heuristic, or reactive)")]
    UnknownPlanner(String),
    #[error("unknown targeting mode {0:?} (expected interval or midpoint)")]
    UnknownMode(String),
    #[error("bench section lists no planners")]
    NoPlanners,
    #[error("bench section lists no scenarios")]
    NoScenarios,
}

fn default_dt() -> f64 {
    1.0
}
fn default_planner() -> String {
    "interval".into()
}
fn default_mode() -> String {
    "interval".into()
}
fn default_backend() -> String {
    "highs".into()
}
fn default_reactive_buffer() -> f64 {
    10.0
}
fn default_repetitions() -> usize {
    1
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_backend")]
    pub backend: String,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            backend: default_backend(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactiveSection {
    #[serde(default = "default_reactive_buffer")]
    pub buffer: f64,
}

impl Default for ReactiveSection {
    fn default() -> Self {
        ReactiveSection {
            buffer: default_reactive_buffer(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    /// Scenario specs: `toy1`, `toy2`, `case1:<m>`, `grid<n>` / `grid:<n>`,
    /// `mine:<seed>:<vertices>:<vehicles>`, or a scenario file path.
    #[serde(default)]
    pub scenarios: Vec<String>,
    /// Planner names: full, interval, midpoint, heuristic, reactive.
    #[serde(default)]
    pub planners: Vec<String>,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Planner used by `plan`: full, interval, midpoint, heuristic, reactive.
    #[serde(default = "default_planner")]
    pub planner: String,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Overrides every vehicle's speed limit when set.
    #[serde(default)]
    pub v_max: Option<f64>,
    /// Detection/avoidance buffer in metres.
    #[serde(default)]
    pub buffer: f64,
    /// Constraint targeting for the iterative planner.
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default)]
    pub resistance_model: bool,
    #[serde(default)]
    pub equality_waypoints: bool,
    #[serde(default = "default_true")]
    pub use_goal_windows: bool,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub reactive: ReactiveSection,
    #[serde(default)]
    pub bench: BenchSection,
}

impl Default for Config {
    fn default() -> Self {
        Config::parse("").expect("empty config is valid")
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Config::parse(&text)
    }

    pub fn target_mode(&self) -> Result<TargetMode, ConfigError> {
        match self.mode.as_str() {
            "interval" => Ok(TargetMode::Interval),
            "midpoint" => Ok(TargetMode::Midpoint),
            other => Err(ConfigError::UnknownMode(other.to_string())),
        }
    }

    pub fn planner_config(&self) -> Result<PlannerConfig, ConfigError> {
        Ok(PlannerConfig {
            backend: self.solver.backend.clone(),
            mode: self.target_mode()?,
            buffer: self.buffer,
            reactive_buffer: self.reactive.buffer,
            resistance_model: self.resistance_model,
            equality_waypoints: self.equality_waypoints,
            use_goal_windows: self.use_goal_windows,
            ..PlannerConfig::default()
        })
    }

    /// Applies `dt` and the optional `v_max` override to a scenario.
    pub fn apply_to_scenario(&self, s: &mut crate::scenario::Scenario) {
        s.dt = self.dt;
        if let Some(v) = self.v_max {
            for (_, _, params) in &mut s.fleet {
                params.v_max = v;
            }
        }
    }

    /// Validates planner names and returns them; used by the bench harness.
    pub fn bench_planners(&self) -> Result<Vec<String>, ConfigError> {
        if self.bench.planners.is_empty() {
            return Err(ConfigError::NoPlanners);
        }
        for p in &self.bench.planners {
            validate_planner_name(p)?;
        }
        Ok(self.bench.planners.clone())
    }
}

pub fn validate_planner_name(name: &str) -> Result<(), ConfigError> {
    match name {
        "full" | "interval" | "midpoint" | "heuristic" | "reactive" => Ok(()),
        other => Err(ConfigError::UnknownPlanner(other.to_string())),
    }
}

/// Planner dispatch shared by `plan` and the bench harness.
pub fn run_planner(
    name: &str,
    s: &crate::scenario::Scenario,
    cfg: &PlannerConfig,
) -> Result<crate::planner::PlanResult, crate::planner::PlanError> {
    use crate::planner::*;
    match name {
        "full" => plan_full_range(s, cfg),
        "interval" => plan_iterative(
            s,
            &PlannerConfig {
                mode: TargetMode::Interval,
                ..cfg.clone()
            },
        ),
        "midpoint" => plan_iterative(
            s,
            &PlannerConfig {
                mode: TargetMode::Midpoint,
                ..cfg.clone()
            },
        ),
        "heuristic" => plan_heuristic(s, cfg),
        "reactive" => plan_reactive(s, cfg),
        other => Err(PlanError::UnknownBackend(format!("planner {other}"))),
    }
}

/// Resolves a scenario spec string (`toy1`, `grid3`, `mine:seed:nv:nf`,
/// `case1:m`, or a file path). `seed_override` replaces the seed of `mine`
/// specs (the `FLEET_SEED` hook).
pub fn scenario_from_spec(
    spec: &str,
    seed_override: Option<u64>,
) -> Result<crate::scenario::Scenario, ConfigError> {
    use crate::scenario::*;
    let parse_err = |m: String| ConfigError::Parse(m);
    if let Some(rest) = spec.strip_prefix("mine:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(parse_err(format!(
                "mine spec {spec:?}: expected mine:<seed>:<vertices>:<vehicles>"
            )));
        }
        let nums: BTreeMap<usize, u64> = parts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                p.parse::<u64>()
                    .map(|v| (i, v))
                    .map_err(|_| parse_err(format!("mine spec {spec:?}: bad number {p:?}")))
            })
            .collect::<Result<_, _>>()?;
        let seed = seed_override.unwrap_or(nums[&0]);
        return Ok(make_random_mine(seed, nums[&1] as usize, nums[&2] as usize));
    }
    if let Some(rest) = spec.strip_prefix("case1:") {
        let m: usize = rest
            .parse()
            .map_err(|_| parse_err(format!("case1 spec {spec:?}: bad count")))?;
        return Ok(make_case1_family(m));
    }
    if let Some(rest) = spec.strip_prefix("grid:").or_else(|| spec.strip_prefix("grid")) {
        if let Ok(n) = rest.parse::<usize>() {
            return Ok(make_grid(n));
        }
    }
    match spec {
        "toy1" => return Ok(make_toy_case(1)),
        "toy2" => return Ok(make_toy_case(2)),
        _ => {}
    }
    let text = std::fs::read_to_string(spec).map_err(|source| ConfigError::Io {
        path: spec.to_string(),
        source,
    })?;
    Scenario::parse(&text).map_err(|e| parse_err(format!("scenario file {spec:?}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = Config::default();
        assert_eq!(c.dt, 1.0);
        assert_eq!(c.solver.backend, "highs");
        assert_eq!(c.reactive.buffer, 10.0);
        assert!(c.use_goal_windows);
        let pc = c.planner_config().unwrap();
        assert_eq!(pc.backend, "highs");
        assert_eq!(pc.mode, TargetMode::Interval);
    }

    #[test]
    fn parse_full_config() {
        let c = Config::parse(
            r#"
planner = "heuristic"
dt = 0.5
buffer = 2.0
mode = "midpoint"

[solver]
backend = "built-in"

[reactive]
buffer = 15.0

[bench]
scenarios = ["grid1", "toy1"]
planners = ["full", "reactive"]
repetitions = 3
"#,
        )
        .unwrap();
        assert_eq!(c.planner, "heuristic");
        assert_eq!(c.dt, 0.5);
        assert_eq!(c.bench.repetitions, 3);
        let pc = c.planner_config().unwrap();
        assert_eq!(pc.reactive_buffer, 15.0);
        assert_eq!(pc.mode, TargetMode::Midpoint);
        assert_eq!(c.bench_planners().unwrap().len(), 2);
    }

    #[test]
    fn rejects_unknown_keys_and_modes() {
        assert!(matches!(
            Config::parse("not_a_key = 1"),
            Err(ConfigError::Parse(_))
        ));
        let c = Config::parse("mode = \"sideways\"").unwrap();
        assert!(matches!(c.target_mode(), Err(ConfigError::UnknownMode(_))));
        assert!(matches!(
            validate_planner_name("fastest"),
            Err(ConfigError::UnknownPlanner(_))
        ));
    }

    #[test]
    fn empty_bench_planners_rejected() {
        let c = Config::parse("[bench]\nscenarios = [\"grid1\"]").unwrap();
        assert!(matches!(c.bench_planners(), Err(ConfigError::NoPlanners)));
    }

    #[test]
    fn scenario_specs() {
        assert_eq!(scenario_from_spec("grid2", None).unwrap().fleet.len(), 4);
        assert_eq!(scenario_from_spec("grid:3", None).unwrap().fleet.len(), 6);
        assert_eq!(scenario_from_spec("toy1", None).unwrap().fleet.len(), 4);
        assert_eq!(
            scenario_from_spec("case1:4", None).unwrap().fleet.len(),
            5
        );
        let a = scenario_from_spec("mine:5:40:2", None).unwrap();
        let b = scenario_from_spec("mine:1:40:2", Some(5)).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        assert!(scenario_from_spec("no-such-file.txt", None).is_err());
    }
}
