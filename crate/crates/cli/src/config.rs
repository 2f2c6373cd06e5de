use std::f64::consts::PI;
use std::path::PathBuf;

use qsthermo::classical::{ClassicalParams, ClassicalStart};
use qsthermo::liouvillian::{qome_mapping, ModelKind};
use qsthermo::oscillator::OscillatorModel;
use qsthermo::propagator::InitialCondition;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    MixedPowerLaw(f64),
    PureLevel(usize),
    Gibbs,
}

impl Initial {
    pub fn condition(&self) -> InitialCondition {
        match *self {
            Initial::MixedPowerLaw(f) => InitialCondition::MixedPowerLaw(f),
            Initial::PureLevel(s) => InitialCondition::PureLevel(s),
            Initial::Gibbs => InitialCondition::Gibbs,
        }
    }

    /// Short label used in file names: `f2`, `s3`, `gibbs`.
    pub fn label(&self) -> String {
        match self {
            Initial::MixedPowerLaw(f) => format!("f{f}"),
            Initial::PureLevel(s) => format!("s{s}"),
            Initial::Gibbs => "gibbs".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LindbladGrid {
    pub beta_p: Vec<f64>,
    pub beta_q: Vec<f64>,
    pub xi: Vec<f64>,
    pub kinds: Vec<String>,
    /// Boundary lines `Y = x1 X`, `Y = x2 X` are sampled on `[0, curve_x_max]`.
    pub curve_x_max: f64,
    pub curve_points: usize,
}

impl Default for LindbladGrid {
    fn default() -> Self {
        let betas = vec![0.02, 0.06, 0.18, 0.54, 1.62];
        Self {
            beta_p: betas.clone(),
            beta_q: betas,
            xi: vec![0.25, 0.5, 1.0, 2.0],
            kinds: vec!["full-hermitian".into(), "full-nonhermitian".into()],
            curve_x_max: 2.0,
            curve_points: 101,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    Gibbs,
    Origin,
    /// Gibbs samples at four times the bath temperature.
    Hot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassicalSection {
    pub n_trajectories: usize,
    pub n_steps: usize,
    /// Defaults to twice the burn-in time spread over `n_steps`.
    pub dt: Option<f64>,
    /// Defaults to the `10 / min β` relaxation time.
    pub burn_in_steps: Option<usize>,
    pub window_steps: usize,
    pub start: StartKind,
}

impl Default for ClassicalSection {
    fn default() -> Self {
        Self {
            n_trajectories: 5000,
            n_steps: 4000,
            dt: None,
            burn_in_steps: None,
            window_steps: 100,
            start: StartKind::Gibbs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Model,
    F,
    S,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub axis: Option<SweepAxis>,
    pub models: Vec<String>,
    pub f_values: Vec<f64>,
    pub s_values: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            axis: None,
            models: ModelKind::COMPARED.iter().map(|k| k.tag().to_string()).collect(),
            f_values: vec![1.0, 2.0, 3.0, 4.0],
            s_values: vec![1, 2, 3, 4],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrictionOperator {
    ThetaP,
    ThetaQ,
    XiP,
    XiQ,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrictionSection {
    pub operator: FrictionOperator,
}

impl Default for FrictionSection {
    fn default() -> Self {
        Self {
            operator: FrictionOperator::All,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub hbar: f64,
    pub kb: f64,
    pub temperature: f64,
    pub mass: f64,
    pub omega: f64,
    pub beta_p: f64,
    pub beta_q: f64,
    pub force: f64,
    pub dim: usize,
    pub dt: f64,
    pub steps: usize,
    pub model: String,
    pub initial: Initial,
    pub output: Option<PathBuf>,
    pub seed: u64,
    /// Significant digits of every float written to CSV.
    pub emit_precision: usize,
    pub lindblad: LindbladGrid,
    pub classical: ClassicalSection,
    pub sweep: SweepSection,
    pub friction: FrictionSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            kb: 1.0,
            temperature: 1.0,
            mass: 1.0,
            omega: 1.0,
            beta_p: 0.2,
            beta_q: 0.2,
            force: 0.0,
            dim: 16,
            dt: PI / 200.0,
            steps: 1000,
            model: "full-hermitian".into(),
            initial: Initial::MixedPowerLaw(1.0),
            output: None,
            seed: 0,
            emit_precision: 17,
            lindblad: LindbladGrid::default(),
            classical: ClassicalSection::default(),
            sweep: SweepSection::default(),
            friction: FrictionSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.oscillator().validate()?;
        if self.dim < 2 {
            return Err(CliError::Config(format!("dim must be >= 2, got {}", self.dim)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(CliError::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.steps == 0 {
            return Err(CliError::Config("steps must be >= 1".into()));
        }
        if !(1..=17).contains(&self.emit_precision) {
            return Err(CliError::Config(format!(
                "emit_precision must lie in 1..=17, got {}",
                self.emit_precision
            )));
        }
        self.model_kind()?;
        Ok(())
    }

    pub fn oscillator(&self) -> OscillatorModel {
        OscillatorModel {
            mass: self.mass,
            omega: self.omega,
            hbar: self.hbar,
            kb: self.kb,
            temperature: self.temperature,
            beta_p: self.beta_p,
            beta_q: self.beta_q,
            force: self.force,
            dim: self.dim,
        }
    }

    /// Parses `model`; `qome` gets its rates from the bisector mapping.
    pub fn model_kind(&self) -> Result<ModelKind, CliError> {
        let kind: ModelKind = self
            .model
            .parse()
            .map_err(|e: qsthermo::QsError| CliError::Config(e.to_string()))?;
        Ok(match kind {
            ModelKind::Qome(_) => ModelKind::Qome(qome_mapping(&self.oscillator())?),
            k => k,
        })
    }

    pub fn classical_params(&self) -> ClassicalParams {
        let mut p = ClassicalParams {
            mass: self.mass,
            omega: self.omega,
            kb: self.kb,
            temperature: self.temperature,
            beta_p: self.beta_p,
            beta_q: self.beta_q,
            force: self.force,
            dt: 1.0,
            n_steps: self.classical.n_steps,
            n_trajectories: self.classical.n_trajectories,
            seed: self.seed,
        };
        p.dt = self
            .classical
            .dt
            .unwrap_or_else(|| 2.0 * p.burn_in_time() / self.classical.n_steps.max(1) as f64);
        p
    }

    /// Fills the optional classical fields so the embedded config is explicit.
    pub fn resolve_classical(&mut self) -> Result<(), CliError> {
        if !(self.beta_p > 0.0 || self.beta_q > 0.0) {
            return Err(CliError::Config(
                "classical run needs beta_p > 0 or beta_q > 0".into(),
            ));
        }
        let p = self.classical_params();
        self.classical.dt = Some(p.dt);
        if self.classical.burn_in_steps.is_none() {
            self.classical.burn_in_steps = Some(p.burn_in_steps());
        }
        Ok(())
    }

    pub fn classical_start(&self) -> ClassicalStart {
        match self.classical.start {
            StartKind::Gibbs => ClassicalStart::Gibbs { scale: 1.0 },
            StartKind::Hot => ClassicalStart::Gibbs { scale: 4.0 },
            StartKind::Origin => ClassicalStart::Origin,
        }
    }
}
