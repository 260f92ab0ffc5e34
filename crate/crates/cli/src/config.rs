//! Scenario files: one TOML document per experiment.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use tricorr_core::estimators::{EnsembleConfig, DEFAULT_BATCHES, DEFAULT_PATHS};
use tricorr_core::params::DEFAULT_DT;
use tricorr_core::{HomodyneParams, IntegratorConfig, PhaseAngles, Scheme, SystemParams, Theory, TimeGrid};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TheorySel {
    Qm,
    Sed,
    Both,
}

impl TheorySel {
    pub fn theories(self) -> Vec<Theory> {
        match self {
            TheorySel::Qm => vec![Theory::Qm],
            TheorySel::Sed => vec![Theory::Sed],
            TheorySel::Both => vec![Theory::Qm, Theory::Sed],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outputs {
    #[default]
    Intracavity,
    External,
    Both,
}

impl Outputs {
    pub fn intracavity(self) -> bool {
        self != Outputs::External
    }

    pub fn external(self) -> bool {
        self != Outputs::Intracavity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Damping {
    Equal(f64),
    PerMode([f64; 3]),
}

impl Damping {
    pub fn values(self) -> [f64; 3] {
        match self {
            Damping::Equal(g) => [g; 3],
            Damping::PerMode(g) => g,
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub g: f64,
    #[serde(default = "default_damping")]
    pub gamma: Damping,
    /// Mean initial pump photon number N; the pump amplitude is sqrt(N).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_photons: Option<f64>,
    /// Complex pump amplitude `[re, im]`; exclusive with `n_photons`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<[f64; 2]>,
    #[serde(default = "one")]
    pub big_gamma: f64,
}

fn default_damping() -> Damping {
    Damping::Equal(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnglesSection {
    #[serde(default)]
    pub theta: [f64; 3],
    #[serde(default)]
    pub theta_bar: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Spacing of the recorded times; a whole number of steps.
    #[serde(default = "default_sample_interval")]
    pub sample_interval: f64,
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_sample_interval() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalSection {
    pub tau_f: Vec<f64>,
    #[serde(default = "one")]
    pub e_charge: f64,
    #[serde(default = "one")]
    pub amp: f64,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "one")]
    pub e_lo: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default = "default_iterations")]
    pub midpoint_iterations: u32,
    #[serde(default)]
    pub scheme: Scheme,
}

fn default_iterations() -> u32 {
    IntegratorConfig::default().midpoint_iterations
}

impl Default for IntegratorSection {
    fn default() -> Self {
        IntegratorSection {
            midpoint_iterations: default_iterations(),
            scheme: Scheme::default(),
        }
    }
}

fn default_paths() -> usize {
    DEFAULT_PATHS
}

fn default_batches() -> usize {
    DEFAULT_BATCHES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub theory: TheorySel,
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    /// Path count used with `--full`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_paths: Option<usize>,
    #[serde(default = "default_batches")]
    pub n_batches: usize,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub system: SystemSection,
    #[serde(default)]
    pub angles: AnglesSection,
    pub grid: GridSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external: Option<ExternalSection>,
    #[serde(default)]
    pub integrator: IntegratorSection,
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub batches: Option<usize>,
    pub full: bool,
}

/// A scenario with every field checked and converted to core types.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: ScenarioConfig,
    pub params: SystemParams,
    pub angles: PhaseAngles,
    pub grid: TimeGrid,
    pub nodes: Vec<usize>,
    pub ensemble: EnsembleConfig,
    pub homodyne: Option<HomodyneParams>,
}

fn field_error(field: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{field}`: {e}"))
}

impl ScenarioConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("{}: {e}", origin.display())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.full {
            self.n_paths = self.full_paths.unwrap_or(self.n_paths.max(1_000_000));
        }
        if let Some(p) = o.paths {
            self.n_paths = p;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(dt) = o.dt {
            self.grid.dt = dt;
        }
        if let Some(b) = o.batches {
            self.n_batches = b;
        }
    }

    pub fn epsilon(&self) -> Result<Complex64, CliError> {
        match (self.system.n_photons, self.system.epsilon) {
            (Some(_), Some(_)) => Err(field_error("system.epsilon", "give either n_photons or epsilon, not both")),
            (Some(n), None) if n >= 0.0 => Ok(Complex64::new(n.sqrt(), 0.0)),
            (Some(n), None) => Err(field_error("system.n_photons", format!("must be >= 0, got {n}"))),
            (None, Some([re, im])) => Ok(Complex64::new(re, im)),
            (None, None) => Ok(Complex64::new(1.0, 0.0)),
        }
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let core = |e: tricorr_core::Error| match e {
            tricorr_core::Error::InvalidParam { field, reason } => field_error(field, reason),
            other => CliError::Config(other.to_string()),
        };
        let params = SystemParams::new(self.system.g, self.system.gamma.values(), self.epsilon()?)
            .and_then(|p| p.with_big_gamma(self.system.big_gamma))
            .map_err(core)?;
        let angles = PhaseAngles::new(self.angles.theta, self.angles.theta_bar).map_err(core)?;
        let grid = TimeGrid::new(self.grid.t_start, self.grid.t_end, self.grid.dt).map_err(core)?;
        let ratio = self.grid.sample_interval / grid.dt();
        if !(ratio >= 1.0) || (ratio - ratio.round()).abs() > 1e-9 * ratio {
            return Err(field_error(
                "grid.sample_interval",
                format!("must be a whole number of steps of {}, got {}", grid.dt(), self.grid.sample_interval),
            ));
        }
        let nodes = grid.strided_nodes(ratio.round() as usize);
        let integrator = IntegratorConfig::new(self.integrator.midpoint_iterations, self.integrator.scheme).map_err(core)?;
        let ensemble = EnsembleConfig::new(self.n_paths, self.n_batches, self.seed)
            .map_err(|e| field_error("n_paths", e))?
            .with_integrator(integrator);
        let homodyne = match &self.external {
            Some(x) => {
                if x.tau_f.is_empty() {
                    return Err(field_error("external.tau_f", "needs at least one window"));
                }
                Some(HomodyneParams::new(x.e_charge, x.amp, x.eta, x.e_lo).map_err(core)?)
            }
            None if self.outputs.external() => {
                return Err(field_error("external", "required when outputs include external moments"));
            }
            None => None,
        };
        Ok(Resolved {
            config: self.clone(),
            params,
            angles,
            grid,
            nodes,
            ensemble,
            homodyne,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
theory = "both"
seed = 1
[system]
g = 0.1
n_photons = 4.0
[grid]
t_end = 1.0
"#;

    #[test]
    fn minimal_config_resolves_with_defaults() {
        let c = ScenarioConfig::parse(MINIMAL, Path::new("t.toml")).unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.params.epsilon, Complex64::new(2.0, 0.0));
        assert_eq!(r.ensemble.n_paths, DEFAULT_PATHS);
        assert_eq!(r.nodes.len(), 21);
        assert_eq!(r.grid.dt(), DEFAULT_DT);
    }

    #[test]
    fn unknown_fields_are_named() {
        let text = MINIMAL.replace("g = 0.1", "g = 0.1\ncoupling = 2");
        let err = ScenarioConfig::parse(&text, Path::new("t.toml")).unwrap_err().to_string();
        assert!(err.contains("coupling") && err.contains("line"), "{err}");
    }

    #[test]
    fn overrides_win() {
        let mut c = ScenarioConfig::parse(MINIMAL, Path::new("t.toml")).unwrap();
        c.apply(&Overrides {
            paths: Some(500),
            seed: Some(9),
            dt: Some(0.005),
            batches: Some(10),
            full: true,
        });
        let r = c.resolve().unwrap();
        assert_eq!((r.ensemble.n_paths, r.ensemble.n_batches, r.ensemble.seed), (500, 10, 9));
        assert_eq!(r.grid.dt(), 0.005);
    }

    #[test]
    fn external_outputs_need_windows() {
        let text = MINIMAL.replace("seed = 1", "seed = 1\noutputs = \"external\"");
        let err = ScenarioConfig::parse(&text, Path::new("t.toml")).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("external"));
    }

    #[test]
    fn bad_values_name_their_field() {
        let text = MINIMAL.replace("g = 0.1", "g = -1");
        let err = ScenarioConfig::parse(&text, Path::new("t.toml")).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("`g`"), "{err}");
        let text = MINIMAL.replace("t_end = 1.0", "t_end = 1.0\nsample_interval = 0.004");
        let err = ScenarioConfig::parse(&text, Path::new("t.toml")).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("sample_interval"), "{err}");
    }

    #[test]
    fn round_trips_through_toml() {
        let c = ScenarioConfig::parse(MINIMAL, Path::new("t.toml")).unwrap();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(ScenarioConfig::parse(&text, Path::new("t.toml")).unwrap(), c);
    }
}
