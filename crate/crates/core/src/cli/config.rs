use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{EffectiveKind, Scheme};
use crate::fockspace::{mode_a, Parity};
use crate::models::{DriveParams, ModelParams};
use crate::rgflow::FlowConfig;
use crate::validation::KitaevValidation;

use super::Command;

pub const FORMAT_VERSION: u32 = 1;

/// Sweep values, either listed or evenly spaced with both ends included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Linspace { start: f64, stop: f64, points: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Linspace { start, stop, points } => match *points {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..n).map(|i| start + (stop - start) * i as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

/// Which ladder Hamiltonian the static analyses diagonalize.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianSpec {
    /// `H_0` with decoupled legs.
    Bare,
    Effective { effective: EffectiveKind },
    /// Pair-hopping ladder with inter-leg coupling `w`.
    WLadder { t_hop: f64, w: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RabiSection {
    pub particles: usize,
    /// Occupied modes of the initial Fock state (`a_j = 2j`, `b_j = 2j+1`).
    pub initial: Vec<usize>,
    pub n_periods: usize,
    pub samples_per_period: usize,
    pub scheme: Scheme,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParitySection {
    pub particles: usize,
    pub n_periods: usize,
    pub schemes: Vec<Scheme>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicromotionSection {
    pub particles: usize,
    pub n_periods: usize,
    pub samples_per_period: usize,
    pub scheme: Scheme,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RgscanSection {
    /// Filling per leg.
    pub nu: f64,
    pub tau: f64,
    pub u0: Grid,
    pub alpha: Grid,
    /// Fixed Fermi velocity; tight-binding `2τ sin k_F` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapsSection {
    pub particles: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundStateSection {
    pub particles: usize,
    /// Leg-parity sectors to diagonalize.
    pub parities: Vec<Parity>,
    /// Entanglement cut after this many rungs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cut: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpureSection {
    pub particles: usize,
    pub n_periods: usize,
    /// Pulse durations as fractions of the period.
    pub ratios: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContinuousSection {
    pub particles: usize,
    pub n_periods: usize,
    pub k0: Vec<f64>,
}

/// Declarative description of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub format_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<DriveParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<HamiltonianSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi: Option<RabiSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parity: Option<ParitySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub micromotion: Option<MicromotionSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rgscan: Option<RgscanSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaps: Option<GapsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_state: Option<GroundStateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub impure: Option<ImpureSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub continuous: Option<ContinuousSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kitaev: Option<KitaevValidation>,
}

impl RunConfig {
    fn empty(cmd: Command) -> Self {
        RunConfig {
            format_version: FORMAT_VERSION,
            experiment: Some(cmd.name().to_string()),
            out_dir: None,
            threads: None,
            model: None,
            drive: None,
            hamiltonian: None,
            rabi: None,
            parity: None,
            micromotion: None,
            rgscan: None,
            flow: None,
            gaps: None,
            ground_state: None,
            impure: None,
            continuous: None,
            kitaev: None,
        }
    }

    /// Built-in configuration of a subcommand.
    pub fn default_for(cmd: Command) -> Self {
        let mut c = RunConfig::empty(cmd);
        let plaquette = ModelParams::new(1.0, -0.7, 2);
        let pulse = DriveParams::pulse(1.0 / 3.0, FRAC_PI_2, 0.2);
        match cmd {
            Command::Rabi => {
                let t_r = 2.0 * PI / (0.7 * (2.0 / 3.0));
                c.model = Some(plaquette);
                c.drive = Some(pulse);
                c.rabi = Some(RabiSection {
                    particles: 2,
                    initial: vec![mode_a(0), mode_a(1)],
                    n_periods: (4.5 * t_r / 0.2).ceil() as usize,
                    samples_per_period: 1,
                    scheme: Scheme::PulseSequence,
                });
            }
            Command::Parity => {
                c.model = Some(plaquette);
                c.drive = Some(pulse);
                c.parity = Some(ParitySection {
                    particles: 2,
                    n_periods: 100,
                    schemes: vec![Scheme::PulseSequence, Scheme::EffectiveStatic(EffectiveKind::Pulse)],
                });
            }
            Command::Micromotion => {
                c.model = Some(plaquette);
                c.drive = Some(pulse);
                c.micromotion = Some(MicromotionSection {
                    particles: 2,
                    n_periods: 20,
                    samples_per_period: 32,
                    scheme: Scheme::PulseSequence,
                });
            }
            Command::Rgscan => {
                c.rgscan = Some(RgscanSection {
                    nu: 1.0 / 3.0,
                    tau: 1.0,
                    u0: Grid::List(vec![-0.5, -1.0, -1.5]),
                    alpha: Grid::Linspace { start: 0.5, stop: 1.0, points: 51 },
                    velocity: None,
                });
                c.flow = Some(FlowConfig::default());
            }
            Command::Gaps | Command::Entspec | Command::Correlations => {
                c.model = Some(ModelParams::new(1.0, -1.5, 8));
                c.drive = Some(DriveParams::pulse(0.5, FRAC_PI_2, 0.2));
                c.hamiltonian = Some(HamiltonianSpec::Effective { effective: EffectiveKind::Pulse });
                if cmd == Command::Gaps {
                    c.gaps = Some(GapsSection { particles: vec![4] });
                } else {
                    c.ground_state = Some(GroundStateSection {
                        particles: 4,
                        parities: vec![Parity::Even, Parity::Odd],
                        cut: (cmd == Command::Entspec).then_some(4),
                    });
                }
            }
            Command::ImpurePulse => {
                c.model = Some(plaquette);
                c.drive = Some(DriveParams::pulse(0.5, FRAC_PI_2, 0.1));
                c.impure = Some(ImpureSection { particles: 2, n_periods: 500, ratios: vec![1.0 / 40.0, 1.0 / 20.0] });
            }
            Command::ContinuousDrive => {
                c.model = Some(ModelParams::new(1.0, -0.9, 3));
                c.drive = Some(DriveParams::pulse(0.5, FRAC_PI_2, 0.2));
                c.continuous = Some(ContinuousSection { particles: 3, n_periods: 20, k0: vec![0.5, 1.0, 1.5] });
            }
            Command::KitaevValidate => c.kitaev = Some(KitaevValidation::default()),
            Command::Selftest => {}
        }
        c
    }

    /// Parses TOML, or JSON when the text is a JSON object.
    pub fn parse(text: &str) -> Result<Self> {
        let c: RunConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?
        };
        if c.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "format_version {} is not supported (expected {FORMAT_VERSION})",
                c.format_version
            )));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn check_experiment(&self, cmd: Command) -> Result<()> {
        match &self.experiment {
            Some(name) if name != cmd.name() => Err(Error::Config(format!(
                "config is for `{name}` but `{}` was requested",
                cmd.name()
            ))),
            _ => Ok(()),
        }
    }
}

/// Required section of a config, or a config error naming it.
pub fn section<'a, T>(value: &'a Option<T>, name: &str) -> Result<&'a T> {
    value.as_ref().ok_or_else(|| Error::Config(format!("missing [{name}] section")))
}
