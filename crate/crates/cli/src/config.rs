//! TOML run configuration.

use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};

use constraint_morse::bench::{BenchCase, GridParams, QuarticCase, DEFAULT_SEED};
use constraint_morse::spectral::ZERO_TOL;
use constraint_morse::{Boundary, ModelParams, UChoice};
use serde::{Deserialize, Serialize};

use crate::ConfigError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Classify,
    Bench,
    DerivativeCheck,
    AppendixDemo,
    Slices,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Bench => "bench",
            Command::DerivativeCheck => "derivative-check",
            Command::AppendixDemo => "appendix-demo",
            Command::Slices => "slices",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    ExplicitMatrix,
    ParticleInBox,
    Harmonic,
    DoubleWell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    /// Rows of comma-separated entries; relative paths resolve against the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minimum: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintKind {
    #[default]
    Normalization,
    Mass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UChoiceName {
    #[default]
    A15,
    Uniform,
}

impl UChoiceName {
    pub fn choice(self) -> UChoice<f64> {
        match self {
            UChoiceName::A15 => UChoice::A15,
            UChoiceName::Uniform => UChoice::Uniform,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSection {
    #[serde(default)]
    pub kind: ConstraintKind,
    #[serde(default = "one")]
    pub target: f64,
    #[serde(default)]
    pub u_choice: UChoiceName,
    /// Number of lowest eigenstates to stay orthogonal to.
    #[serde(default)]
    pub ortho_l: usize,
}

impl Default for ConstraintSection {
    fn default() -> Self {
        Self { kind: ConstraintKind::Normalization, target: 1.0, u_choice: UChoiceName::A15, ortho_l: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_tol: Option<f64>,
    /// Bound on `max |λ_m − (E_m − E_k)|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionalKind {
    #[default]
    Quadratic,
    Interacting,
    Quartic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSection {
    #[serde(default)]
    pub kind: FunctionalKind,
    /// Quartic self-interaction strength of the interacting functional.
    #[serde(default = "half")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
}

impl Default for FunctionalSection {
    fn default() -> Self {
        Self { kind: FunctionalKind::Quadratic, gamma: 0.5, alpha: 1.0, beta: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuarticSection {
    #[serde(default = "quartic_grid")]
    pub grid: GridParams,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "default_masses")]
    pub masses: Vec<f64>,
    #[serde(default = "default_u_choices")]
    pub u_choices: Vec<UChoiceName>,
}

impl Default for QuarticSection {
    fn default() -> Self {
        Self { grid: quartic_grid(), alpha: 1.0, beta: 1.0, masses: default_masses(), u_choices: default_u_choices() }
    }
}

impl QuarticSection {
    pub fn cases(&self) -> Vec<QuarticCase> {
        self.masses
            .iter()
            .map(|&mass| {
                let mut case = QuarticCase::new(mass);
                case.grid = self.grid.clone();
                case.alpha = self.alpha;
                case.beta = self.beta;
                case
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceSection {
    /// Eigenstate to slice through; defaults to the first configured state, else 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DerivativeSection {
    #[serde(default = "default_trials")]
    pub trials: usize,
}

impl Default for DerivativeSection {
    fn default() -> Self {
        Self { trials: default_trials() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Eigenstates to classify; empty means every state.
    #[serde(default)]
    pub states: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridParams>,
    #[serde(default)]
    pub constraint: ConstraintSection,
    #[serde(default)]
    pub functional: FunctionalSection,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub quartic: QuarticSection,
    #[serde(default)]
    pub slices: SliceSection,
    #[serde(default)]
    pub derivative_check: DerivativeSection,
    /// Directory relative matrix paths resolve against; not serialized.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_trials() -> usize {
    20
}

fn quartic_grid() -> GridParams {
    GridParams::new(64, 0.0, 1.0, Boundary::None)
}

fn default_masses() -> Vec<f64> {
    vec![0.0, 0.3, 1.0]
}

fn default_u_choices() -> Vec<UChoiceName> {
    vec![UChoiceName::A15, UChoiceName::Uniform]
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            seed: DEFAULT_SEED,
            states: Vec::new(),
            model: None,
            grid: None,
            constraint: ConstraintSection::default(),
            functional: FunctionalSection::default(),
            tolerances: Tolerances::default(),
            output: OutputSection::default(),
            quartic: QuarticSection::default(),
            slices: SliceSection::default(),
            derivative_check: DerivativeSection::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("config: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Model parameters with any CSV matrix read in.
    pub fn model_params(&self) -> Result<Option<ModelParams>, ConfigError> {
        let Some(m) = &self.model else { return Ok(None) };
        let params = match m.kind {
            ModelKind::ExplicitMatrix => match (&m.matrix, &m.matrix_csv) {
                (Some(matrix), None) => ModelParams::ExplicitMatrix { matrix: matrix.clone() },
                (None, Some(path)) => {
                    let path = self.base_dir.join(path);
                    let file = File::open(&path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
                    ModelParams::explicit_from_csv(file).map_err(|e| ConfigError(e.to_string()))?
                }
                _ => return Err(ConfigError("explicit-matrix needs exactly one of `matrix` or `matrix_csv`".into())),
            },
            ModelKind::ParticleInBox => ModelParams::ParticleInBox,
            ModelKind::Harmonic => ModelParams::Harmonic { omega: m.omega.unwrap_or(1.0) },
            ModelKind::DoubleWell => ModelParams::DoubleWell { depth: m.depth.unwrap_or(1.0), minimum: m.minimum.unwrap_or(1.0) },
        };
        Ok(Some(params))
    }

    pub fn zero_tol(&self) -> f64 {
        self.tolerances.zero_tol.unwrap_or(ZERO_TOL)
    }

    /// The configured model as a bench case, when a model section exists.
    pub fn case(&self) -> Result<Option<BenchCase>, ConfigError> {
        let Some(model) = self.model_params()? else { return Ok(None) };
        let default_tol = if matches!(model, ModelParams::ExplicitMatrix { .. }) { 1e-10 } else { 1e-8 };
        let case = BenchCase {
            name: model.name().into(),
            model,
            grid: self.grid.clone(),
            states: self.states.clone(),
            tolerance: self.tolerances.residual.unwrap_or(default_tol),
            zero_tol: self.zero_tol(),
        };
        case.validate().map_err(|e| ConfigError(e.to_string()))?;
        Ok(Some(case))
    }

    /// Checks everything that does not require running the command.
    pub fn validate(&self, command: Command) -> Result<(), ConfigError> {
        if let Some(c) = self.command {
            if c != command {
                return Err(ConfigError(format!("config is for `{c}`, invoked as `{command}`")));
            }
        }
        for (name, v) in [("zero_tol", self.tolerances.zero_tol), ("residual", self.tolerances.residual)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(ConfigError(format!("tolerance {name} must be positive")));
                }
            }
        }
        if !(self.constraint.target.is_finite() && self.constraint.target > 0.0) {
            return Err(ConfigError("constraint target must be positive".into()));
        }
        let case = self.case()?;
        let needs_model = match command {
            Command::Classify | Command::Slices => true,
            Command::DerivativeCheck => self.functional.kind != FunctionalKind::Quartic,
            Command::Bench | Command::AppendixDemo => false,
        };
        if needs_model && case.is_none() {
            return Err(ConfigError(format!("`{command}` needs a [model] section")));
        }
        if let Some(case) = &case {
            let dim = case.operator().map_err(|e| ConfigError(e.to_string()))?.dim();
            let l = self.constraint.ortho_l;
            if l >= dim {
                return Err(ConfigError(format!("ortho_l = {l} must be below the dimension {dim}")));
            }
            if let Some(&k) = self.states.iter().find(|&&k| k < l) {
                return Err(ConfigError(format!("state {k} lies in the {l} projected-out states")));
            }
            if let Some(k) = self.slices.state {
                if k >= dim {
                    return Err(ConfigError(format!("slice state {k} out of range for dimension {dim}")));
                }
            }
        }
        let quadratic_command = matches!(command, Command::Classify | Command::Slices | Command::Bench);
        if quadratic_command && self.constraint.kind != ConstraintKind::Normalization {
            return Err(ConfigError(format!("`{command}` classifies eigenstates under normalization only")));
        }
        if command == Command::DerivativeCheck {
            let quartic = self.functional.kind == FunctionalKind::Quartic;
            if quartic != (self.constraint.kind == ConstraintKind::Mass) {
                return Err(ConfigError("the quartic functional pairs with the mass constraint, the others with normalization".into()));
            }
            if quartic && self.grid.is_none() {
                return Err(ConfigError("quartic derivative check needs a [grid] section".into()));
            }
            if self.derivative_check.trials == 0 {
                return Err(ConfigError("derivative_check.trials must be positive".into()));
            }
        }
        if command == Command::AppendixDemo {
            if self.quartic.masses.is_empty() || self.quartic.u_choices.is_empty() {
                return Err(ConfigError("appendix-demo needs at least one mass and one u choice".into()));
            }
            self.quartic.grid.build().map_err(|e| ConfigError(e.to_string()))?;
        }
        Ok(())
    }
}
