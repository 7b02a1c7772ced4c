//! Run configuration files.
//!
//! ```json
//! { "scenario": "chsh", "seed": 7, "n_trials": 100000,
//!   "output_dir": "out/chsh", "params": { ... } }
//! ```
//!
//! `params` is checked against the block of the named scenario; unknown
//! keys are rejected, and errors carry the line and column in the file.

use std::path::{Path, PathBuf};

use chaintrial_optics::DoubleSlitConfig;
use chaintrial_scenarios::detector_toy::DetectorToyConfig;
use chaintrial_scenarios::epr::LatticeConfig;
use chaintrial_scenarios::light_quantum::LightQuantumConfig;
use chaintrial_scenarios::spin1::{rotated_triad, Triad};
use schemars::JsonSchema;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, JsonSchema, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    Singlet,
    Chsh,
    #[value(name = "spin1-compat")]
    Spin1Compat,
    Epr,
    LightQuantum,
    DetectorToy,
    Doubleslit,
    Counting,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 8] = [
        ScenarioKind::Singlet,
        ScenarioKind::Chsh,
        ScenarioKind::Spin1Compat,
        ScenarioKind::Epr,
        ScenarioKind::LightQuantum,
        ScenarioKind::DetectorToy,
        ScenarioKind::Doubleslit,
        ScenarioKind::Counting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Singlet => "singlet",
            ScenarioKind::Chsh => "chsh",
            ScenarioKind::Spin1Compat => "spin1-compat",
            ScenarioKind::Epr => "epr",
            ScenarioKind::LightQuantum => "light-quantum",
            ScenarioKind::DetectorToy => "detector-toy",
            ScenarioKind::Doubleslit => "doubleslit",
            ScenarioKind::Counting => "counting",
        }
    }
}

/// Alice's and Bob's measurement axes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct AxisPair {
    pub alice: [f64; 3],
    pub bob: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct SingletParams {
    /// Pairs sampled trial by trial.
    pub pairs: Vec<AxisPair>,
    /// Random axis pairs checked against the closed form.
    pub random_pairs: usize,
}

impl Default for SingletParams {
    fn default() -> Self {
        let (s, c) = 1.1f64.sin_cos();
        Self {
            pairs: vec![
                AxisPair {
                    alice: [0.0, 0.0, 1.0],
                    bob: [0.0, 0.0, 1.0],
                },
                AxisPair {
                    alice: [0.0, 0.0, 1.0],
                    bob: [s, 0.0, c],
                },
            ],
            random_pairs: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ChshAxesSpec {
    pub x1: [f64; 3],
    pub x2: [f64; 3],
    pub y1: [f64; 3],
    pub y2: [f64; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct ChshParams {
    /// Omitted: the coplanar optimum (Alice 0 and 90 degrees, Bob 45 and 135).
    pub axes: Option<ChshAxesSpec>,
    /// Random quadruples searched for the largest S.
    pub random_quadruples: u64,
}

impl Default for ChshParams {
    fn default() -> Self {
        Self {
            axes: None,
            random_quadruples: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Spin1State {
    MaximallyMixed,
    /// Pure Cartesian basis state `x`, `y` or `z` (index 0, 1, 2).
    Basis { index: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct Spin1Params {
    /// Orthonormal axis triads, one per setting.
    pub triads: Vec<Triad>,
    pub state: Spin1State,
    /// Longest repeated-index sequence checked.
    pub max_len: usize,
}

impl Default for Spin1Params {
    fn default() -> Self {
        Self {
            triads: vec![
                [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                rotated_triad([1.0, 2.0, 3.0], 0.7),
                rotated_triad([0.0, 0.0, 1.0], 0.6),
            ],
            state: Spin1State::MaximallyMixed,
            max_len: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct EhrenfestParams {
    pub sites: usize,
    /// Packet width, sites.
    pub sigma: f64,
    /// Carrier wavenumber, 1/site.
    pub k0: f64,
    pub t_max: f64,
    pub steps: usize,
    /// Largest tolerated deviation from a straight line, sites.
    pub max_residual: f64,
}

impl Default for EhrenfestParams {
    fn default() -> Self {
        Self {
            sites: 256,
            sigma: 8.0,
            k0: 0.5,
            t_max: 100.0,
            steps: 21,
            max_residual: 0.05,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct EprParams {
    pub lattice: LatticeConfig,
    pub ehrenfest: EhrenfestParams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorToyParams {
    pub toy: DetectorToyConfig,
    /// Fit window in units of `1/gamma`.
    pub fit_window: [f64; 2],
    pub fit_points: usize,
    /// Survival curve samples over `[0, 4/gamma]`.
    pub curve_points: usize,
    /// Sampled trials end at this many `1/gamma`.
    pub sample_time: f64,
}

impl Default for DetectorToyParams {
    fn default() -> Self {
        Self {
            toy: DetectorToyConfig::default(),
            fit_window: [0.5, 3.0],
            fit_points: 26,
            curve_points: 81,
            sample_time: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct DoubleSlitParams {
    pub optics: DoubleSlitConfig,
    /// Cumulative frame times, s.
    pub frame_times: Vec<f64>,
    /// Trials averaged for the convergence check; 0 skips it.
    pub average_trials: u64,
    /// Also dump the detector-plane field.
    pub write_field: bool,
}

impl Default for DoubleSlitParams {
    fn default() -> Self {
        Self {
            optics: DoubleSlitConfig::default(),
            frame_times: vec![0.1, 0.2, 0.4],
            average_trials: 0,
            write_field: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, JsonSchema)]
#[serde(default, deny_unknown_fields)]
pub struct CountingParams {
    /// Sites `L`.
    pub sites: usize,
    /// Subintervals `M`.
    pub subintervals: usize,
    /// `L p M`, the first-order mean count.
    pub total_mean: f64,
    /// Explicit `[site][subinterval]` probabilities; overrides the uniform
    /// fill when present.
    pub site_probs: Option<Vec<Vec<f64>>>,
}

impl Default for CountingParams {
    fn default() -> Self {
        Self {
            sites: 8,
            subintervals: 16,
            total_mean: 2.0,
            site_probs: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ScenarioParams {
    Singlet(SingletParams),
    Chsh(ChshParams),
    Spin1Compat(Spin1Params),
    Epr(EprParams),
    LightQuantum(LightQuantumConfig),
    DetectorToy(DetectorToyParams),
    Doubleslit(DoubleSlitParams),
    Counting(CountingParams),
}

pub const DEFAULT_TRIALS: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: ScenarioKind,
    pub seed: u64,
    pub n_trials: u64,
    pub output_dir: PathBuf,
    pub params: ScenarioParams,
}

/// Document layout of one scenario's configuration, for the schema.
#[derive(Serialize, JsonSchema)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument<P: Default> {
    pub scenario: ScenarioKind,
    /// Master seed.
    #[serde(default)]
    pub seed: u64,
    /// Trials per sampled population.
    #[serde(default)]
    pub n_trials: u64,
    #[serde(default)]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub params: P,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Header<'a> {
    scenario: ScenarioKind,
    seed: Option<u64>,
    n_trials: Option<u64>,
    output_dir: Option<PathBuf>,
    #[serde(borrow)]
    params: Option<&'a RawValue>,
}

fn located(path: &str, e: &serde_json::Error, line_offset: usize, column_offset: usize) -> CliError {
    let (line, column) = if e.line() <= 1 {
        (line_offset + e.line().max(1), column_offset + e.column())
    } else {
        (line_offset + e.line(), e.column())
    };
    let message = e.to_string();
    // serde_json appends its own position; keep only the message.
    let message = message.split(" at line ").next().unwrap_or(&message).to_string();
    CliError::Config {
        path: path.into(),
        line,
        column,
        message,
    }
}

fn parse_block<P: DeserializeOwned + Default>(text: &str, raw: Option<&RawValue>, path: &str) -> Result<P> {
    let Some(raw) = raw else {
        return Ok(P::default());
    };
    let offset = raw.get().as_ptr() as usize - text.as_ptr() as usize;
    let before = &text[..offset];
    let line0 = before.matches('\n').count();
    let col0 = offset - before.rfind('\n').map_or(0, |i| i + 1);
    serde_json::from_str(raw.get()).map_err(|e| located(path, &e, line0, col0))
}

impl RunConfig {
    /// Parses a configuration; `path` only labels error messages.
    pub fn parse(text: &str, path: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(CliError::Config {
                path: path.into(),
                line: 1,
                column: 1,
                message: "empty configuration".into(),
            });
        }
        let h: Header = serde_json::from_str(text).map_err(|e| located(path, &e, 0, 0))?;
        let params = match h.scenario {
            ScenarioKind::Singlet => ScenarioParams::Singlet(parse_block(text, h.params, path)?),
            ScenarioKind::Chsh => ScenarioParams::Chsh(parse_block(text, h.params, path)?),
            ScenarioKind::Spin1Compat => ScenarioParams::Spin1Compat(parse_block(text, h.params, path)?),
            ScenarioKind::Epr => ScenarioParams::Epr(parse_block(text, h.params, path)?),
            ScenarioKind::LightQuantum => ScenarioParams::LightQuantum(parse_block(text, h.params, path)?),
            ScenarioKind::DetectorToy => ScenarioParams::DetectorToy(parse_block(text, h.params, path)?),
            ScenarioKind::Doubleslit => ScenarioParams::Doubleslit(parse_block(text, h.params, path)?),
            ScenarioKind::Counting => ScenarioParams::Counting(parse_block(text, h.params, path)?),
        };
        let cfg = RunConfig {
            scenario: h.scenario,
            seed: h.seed.unwrap_or(0),
            n_trials: h.n_trials.unwrap_or(DEFAULT_TRIALS),
            output_dir: h.output_dir.unwrap_or_else(|| PathBuf::from("out").join(h.scenario.name())),
            params,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Defaults for `kind`.
    pub fn default_for(kind: ScenarioKind) -> Self {
        let params = match kind {
            ScenarioKind::Singlet => ScenarioParams::Singlet(Default::default()),
            ScenarioKind::Chsh => ScenarioParams::Chsh(Default::default()),
            ScenarioKind::Spin1Compat => ScenarioParams::Spin1Compat(Default::default()),
            ScenarioKind::Epr => ScenarioParams::Epr(Default::default()),
            ScenarioKind::LightQuantum => ScenarioParams::LightQuantum(Default::default()),
            ScenarioKind::DetectorToy => ScenarioParams::DetectorToy(Default::default()),
            ScenarioKind::Doubleslit => ScenarioParams::Doubleslit(Default::default()),
            ScenarioKind::Counting => ScenarioParams::Counting(Default::default()),
        };
        RunConfig {
            scenario: kind,
            seed: 0,
            n_trials: DEFAULT_TRIALS,
            output_dir: PathBuf::from("out").join(kind.name()),
            params,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(CliError::Invalid("n_trials must be positive".into()));
        }
        if let ScenarioParams::Doubleslit(p) = &self.params {
            if p.frame_times.is_empty() || p.frame_times.windows(2).any(|w| !(w[1] > w[0])) || !(p.frame_times[0] > 0.0) {
                return Err(CliError::Invalid("frame_times must be positive and increasing".into()));
            }
        }
        Ok(())
    }
}

/// JSON schema of one scenario's configuration file.
pub fn schema(kind: ScenarioKind) -> serde_json::Value {
    let s = match kind {
        ScenarioKind::Singlet => schemars::schema_for!(ConfigDocument<SingletParams>),
        ScenarioKind::Chsh => schemars::schema_for!(ConfigDocument<ChshParams>),
        ScenarioKind::Spin1Compat => schemars::schema_for!(ConfigDocument<Spin1Params>),
        ScenarioKind::Epr => schemars::schema_for!(ConfigDocument<EprParams>),
        ScenarioKind::LightQuantum => schemars::schema_for!(ConfigDocument<LightQuantumConfig>),
        ScenarioKind::DetectorToy => schemars::schema_for!(ConfigDocument<DetectorToyParams>),
        ScenarioKind::Doubleslit => schemars::schema_for!(ConfigDocument<DoubleSlitParams>),
        ScenarioKind::Counting => schemars::schema_for!(ConfigDocument<CountingParams>),
    };
    serde_json::to_value(s).expect("schema serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_point_into_the_params_block() {
        let text = "{\n  \"scenario\": \"chsh\",\n  \"params\": {\n    \"random_quadruples\": 10,\n    \"bogus\": 1\n  }\n}\n";
        match RunConfig::parse(text, "c.json").unwrap_err() {
            CliError::Config { line, message, .. } => {
                assert_eq!(line, 5, "{message}");
                assert!(message.contains("bogus"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn defaults_fill_missing_blocks() {
        let cfg = RunConfig::parse(r#"{"scenario": "counting"}"#, "c").unwrap();
        assert_eq!(cfg, RunConfig::default_for(ScenarioKind::Counting));
    }

    #[test]
    fn every_schema_names_its_params() {
        for kind in ScenarioKind::ALL {
            let s = schema(kind);
            assert!(s["properties"]["params"].is_object(), "{}", kind.name());
        }
    }
}
