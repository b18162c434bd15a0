//! TOML configuration. Every section is optional and falls back to the
//! library defaults; unknown keys are rejected.

use serde::Deserialize;
use std::path::{Path, PathBuf};
use stgrb_core::assembly::HyperSettings;
use stgrb_core::bases::RandomizedSvd;
use stgrb_core::bench::{CampaignConfig, FieldTolerances, Method, WindowSettings};
use stgrb_core::fom::{NewtonSettings, ParamBox, SynthConfig, Waveform};
use stgrb_core::par::Execution;
use stgrb_core::solvers::{JacobianMode, NewtonConfig, NniWeighting, WarmStartStrategy};

/// Environment variable that replaces `[output] directory`.
pub const OUTPUT_ENV: &str = "STGRB_OUTPUT_DIR";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    #[serde(default)]
    pub fom: FomSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub parameters: ParameterSection,
    #[serde(default)]
    pub pod: PodSection,
    #[serde(default)]
    pub hyper: HyperSection,
    #[serde(default)]
    pub newton: NewtonSection,
    #[serde(default)]
    pub warmstart: WarmStartSection,
    #[serde(default)]
    pub lifting: LiftingSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Synth,
    Ingest,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FomSection {
    pub source: Source,
    /// Operator directory to ingest.
    pub path: Option<PathBuf>,
    pub seed: u64,
    pub n_u: usize,
    pub n_p: usize,
    pub multiplier_blocks: Vec<usize>,
    pub wall_fraction: f64,
    pub resistances: usize,
    pub viscosity: f64,
    pub convection: f64,
    pub wall_stiffness: f64,
    pub wall_damping: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for FomSection {
    fn default() -> Self {
        let s = SynthConfig::default();
        let n = NewtonSettings::default();
        Self {
            source: Source::Synth,
            path: None,
            seed: s.seed,
            n_u: s.n_u,
            n_p: s.n_p,
            multiplier_blocks: s.multiplier_blocks,
            wall_fraction: s.wall_fraction,
            resistances: s.n_resistances,
            viscosity: s.viscosity,
            convection: s.convection,
            wall_stiffness: s.wall_stiffness,
            wall_damping: s.wall_damping,
            tol: n.tol,
            max_iters: n.max_iters,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub dt: f64,
    pub steps: usize,
    /// BDF order.
    pub order: usize,
    /// Inflow period; one window by default.
    pub period: Option<f64>,
}

impl Default for TimeSection {
    fn default() -> Self {
        let c = CampaignConfig::default();
        Self {
            dt: c.dt,
            steps: c.n_steps,
            order: c.order,
            period: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParameterSection {
    pub flow_lower: Vec<f64>,
    pub flow_upper: Vec<f64>,
    pub membrane_lower: Vec<f64>,
    pub membrane_upper: Vec<f64>,
    pub train: usize,
    pub test: usize,
    pub train_seed: u64,
    pub test_seed: u64,
}

impl Default for ParameterSection {
    fn default() -> Self {
        let c = CampaignConfig::default();
        Self {
            flow_lower: c.flow_box.lower,
            flow_upper: c.flow_box.upper,
            membrane_lower: c.membrane_box.lower,
            membrane_upper: c.membrane_box.upper,
            train: c.n_train,
            test: c.n_test,
            train_seed: c.train_seed,
            test_seed: c.test_seed,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PodSection {
    pub eps_u: f64,
    pub eps_p: f64,
    pub eps_lambda_space: f64,
    pub eps_lambda_time: f64,
    /// Tolerances swept by `bench`, each applied like `eps_u` with the
    /// multiplier spatial tolerance kept two orders lower.
    pub sweep: Vec<f64>,
    pub randomized: bool,
    pub randomized_seed: u64,
    pub supremizers: bool,
    pub stabilizers: bool,
}

impl Default for PodSection {
    fn default() -> Self {
        let t = FieldTolerances::tight_multipliers(1e-3);
        Self {
            eps_u: t.u,
            eps_p: t.p,
            eps_lambda_space: t.lambda_space,
            eps_lambda_time: t.lambda_time,
            sweep: Vec::new(),
            randomized: false,
            randomized_seed: 0,
            supremizers: true,
            stabilizers: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HyperSection {
    pub n_c: Option<usize>,
    pub n_cj: Option<usize>,
    pub include_supremizers: bool,
}

impl Default for HyperSection {
    fn default() -> Self {
        Self {
            n_c: None,
            n_cj: Some(0),
            include_supremizers: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JacobianChoice {
    Full,
    Quasi,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonSection {
    pub tol: f64,
    pub max_iters: usize,
    pub jacobian: JacobianChoice,
}

impl Default for NewtonSection {
    fn default() -> Self {
        let n = NewtonConfig::default();
        Self {
            tol: n.tol,
            max_iters: n.max_iters,
            jacobian: JacobianChoice::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyChoice {
    Zero,
    Average,
    Knn,
    Podi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightingChoice {
    Proportional,
    Inverse,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WarmStartSection {
    pub strategy: StrategyChoice,
    pub k: usize,
    pub nni_weighting: WeightingChoice,
}

impl Default for WarmStartSection {
    fn default() -> Self {
        Self {
            strategy: StrategyChoice::Podi,
            k: 3,
            nni_weighting: WeightingChoice::Proportional,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LiftingSection {
    pub enabled: bool,
    /// Waveform periods per window.
    pub periods: usize,
    pub cycles: usize,
}

impl Default for LiftingSection {
    fn default() -> Self {
        Self {
            enabled: false,
            periods: 1,
            cycles: 1,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub directory: PathBuf,
    /// Serial repetitions per timed solve in `bench`.
    pub timing_repeats: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("stgrb-out"),
            timing_repeats: 3,
        }
    }
}

/// Invalid configuration, reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

impl CliConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| bad(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Applies the output-directory override from the environment.
    pub fn with_env(mut self, value: Option<String>) -> Self {
        if let Some(v) = value.filter(|v| !v.is_empty()) {
            self.output.directory = PathBuf::from(v);
        }
        self
    }

    pub fn synth(&self) -> SynthConfig {
        let f = &self.fom;
        SynthConfig {
            n_u: f.n_u,
            n_p: f.n_p,
            multiplier_blocks: f.multiplier_blocks.clone(),
            wall_fraction: f.wall_fraction,
            n_resistances: f.resistances,
            viscosity: f.viscosity,
            convection: f.convection,
            wall_stiffness: f.wall_stiffness,
            wall_damping: f.wall_damping,
            seed: f.seed,
            ..SynthConfig::default()
        }
    }

    pub fn tolerances(&self) -> FieldTolerances {
        FieldTolerances {
            u: self.pod.eps_u,
            p: self.pod.eps_p,
            lambda_space: self.pod.eps_lambda_space,
            lambda_time: self.pod.eps_lambda_time,
        }
    }

    /// Checks everything that can be checked before running a stage.
    pub fn validate(&self) -> Result<CampaignConfig, ConfigError> {
        match (self.fom.source, &self.fom.path) {
            (Source::Ingest, None) => return Err(bad("[fom] source = \"ingest\" needs a path")),
            (Source::Ingest, Some(p)) if !p.join("operators.txt").is_file() => {
                return Err(bad(format!("[fom] path {} holds no operators.txt", p.display())))
            }
            _ => {}
        }
        if self.fom.tol <= 0.0 || self.fom.max_iters == 0 {
            return Err(bad("[fom] Newton tolerance and iteration cap must be positive"));
        }
        if self.warmstart.strategy == StrategyChoice::Knn && self.warmstart.k == 0 {
            return Err(bad("[warmstart] k must be positive"));
        }
        if self.output.directory.as_os_str().is_empty() {
            return Err(bad("[output] directory must not be empty"));
        }
        if self.output.directory.is_file() {
            return Err(bad(format!("output path {} is a file", self.output.directory.display())));
        }
        let cfg = self.campaign().map_err(|e| bad(e.to_string()))?;
        cfg.validate().map_err(|e| bad(e.to_string()))?;
        Ok(cfg)
    }

    fn campaign(&self) -> stgrb_core::Result<CampaignConfig> {
        let p = &self.parameters;
        let t = &self.time;
        let period = t.period.unwrap_or(t.dt * t.steps as f64 / self.lifting.periods.max(1) as f64);
        let mut tolerances = vec![self.tolerances()];
        tolerances.extend(self.pod.sweep.iter().filter(|&&e| e != self.pod.eps_u).map(|&e| FieldTolerances::tight_multipliers(e)));
        Ok(CampaignConfig {
            order: t.order,
            dt: t.dt,
            n_steps: t.steps,
            waveform: Waveform::Periodic { period },
            flow_box: ParamBox::new(p.flow_lower.clone(), p.flow_upper.clone())?,
            membrane_box: ParamBox::new(p.membrane_lower.clone(), p.membrane_upper.clone())?,
            n_train: p.train,
            n_test: p.test,
            train_seed: p.train_seed,
            test_seed: p.test_seed,
            tolerances,
            ranks: vec![HyperSettings {
                n_c: self.hyper.n_c,
                n_cj: self.hyper.n_cj,
                include_supremizers: self.hyper.include_supremizers,
            }],
            randomized: self.pod.randomized.then(|| RandomizedSvd {
                seed: self.pod.randomized_seed,
                ..RandomizedSvd::default()
            }),
            supremizers: self.pod.supremizers,
            stabilizers: self.pod.stabilizers,
            lifting: self.lifting.enabled,
            methods: vec![Method::StGrb, Method::Srb],
            newton: NewtonConfig {
                tol: self.newton.tol,
                max_iters: self.newton.max_iters,
                mode: match self.newton.jacobian {
                    JacobianChoice::Full => JacobianMode::Full,
                    JacobianChoice::Quasi => JacobianMode::Quasi,
                },
            },
            fom_newton: NewtonSettings {
                tol: self.fom.tol,
                max_iters: self.fom.max_iters,
            },
            warm_start: match self.warmstart.strategy {
                StrategyChoice::Zero => WarmStartStrategy::Zero,
                StrategyChoice::Average => WarmStartStrategy::Average,
                StrategyChoice::Knn => WarmStartStrategy::Knn(self.warmstart.k),
                StrategyChoice::Podi => WarmStartStrategy::Podi,
            },
            weighting: match self.warmstart.nni_weighting {
                WeightingChoice::Proportional => NniWeighting::Proportional,
                WeightingChoice::Inverse => NniWeighting::Inverse,
            },
            windows: WindowSettings {
                periods: self.lifting.periods,
                cycles: self.lifting.cycles,
            },
            repeats: self.output.timing_repeats,
            exec: Execution::Parallel,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_library_defaults() {
        let c = CliConfig::from_toml("").unwrap();
        let cfg = c.validate().unwrap();
        assert_eq!(cfg.newton.tol, 1e-5);
        assert_eq!(cfg.newton.max_iters, 10);
        assert_eq!(cfg.tolerances[0].lambda_space, 1e-5);
        assert_eq!(cfg.warm_start, WarmStartStrategy::Podi);
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        assert!(CliConfig::from_toml("[pod]\neps = 1e-3\n").is_err());
        assert!(CliConfig::from_toml("[solver]\ntol = 1e-3\n").is_err());
        assert!(CliConfig::from_toml("[newton]\njacobian = \"broyden\"\n").is_err());
    }

    #[test]
    fn invalid_values_fail_validation() {
        for text in [
            "[pod]\neps_u = 2.0\n",
            "[time]\norder = 3\n",
            "[parameters]\ntrain = 0\n",
            "[parameters]\nmembrane_lower = [0.1]\nmembrane_upper = [0.2]\n",
            "[fom]\nsource = \"ingest\"\n",
            "[warmstart]\nstrategy = \"knn\"\nk = 0\n",
        ] {
            let c = CliConfig::from_toml(text).unwrap();
            assert!(c.validate().is_err(), "{text}");
        }
    }

    #[test]
    fn environment_overrides_only_the_output_directory() {
        let c = CliConfig::from_toml("[output]\ndirectory = \"a\"\n").unwrap();
        assert_eq!(c.clone().with_env(Some("b".into())).output.directory, PathBuf::from("b"));
        assert_eq!(c.clone().with_env(Some(String::new())).output.directory, PathBuf::from("a"));
        assert_eq!(c.with_env(None).output.directory, PathBuf::from("a"));
    }

    #[test]
    fn sweep_adds_tolerance_sets() {
        let c = CliConfig::from_toml("[pod]\nsweep = [1e-2, 1e-3, 1e-4]\n").unwrap();
        let cfg = c.validate().unwrap();
        assert_eq!(cfg.tolerances.len(), 3);
        assert_eq!(cfg.tolerances[0].u, 1e-3);
        assert!((cfg.tolerances[2].lambda_space - 1e-6).abs() < 1e-18);
    }
}
