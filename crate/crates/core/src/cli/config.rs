use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::SystemParams;
use crate::policies::PolicyKind;
use crate::simulator::SimConfig;
use crate::solver::{Method, SolverConfig};

/// Cap used when a configuration does not pin `delta_max`.
pub const CAP_FACTOR: usize = 20;

/// Instance parameters as written in a config file; `delta_max` defaults to
/// `CAP_FACTOR * t_u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamSpec {
    pub q: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub t_u: usize,
    pub delta_max: Option<usize>,
    pub allow_null_outcome: bool,
}

impl Default for ParamSpec {
    fn default() -> Self {
        Self {
            q: 0.9,
            p_a: 0.1,
            p_b: 0.1,
            t_u: 10,
            delta_max: None,
            allow_null_outcome: false,
        }
    }
}

impl ParamSpec {
    pub fn resolve(&self) -> Result<SystemParams<f64>> {
        let cap = self.delta_max.unwrap_or(CAP_FACTOR * self.t_u);
        if self.allow_null_outcome {
            SystemParams::allowing_null_outcome(self.q, self.p_a, self.p_b, self.t_u, cap)
        } else {
            SystemParams::new(self.q, self.p_a, self.p_b, self.t_u, cap)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    #[default]
    None,
    TU,
    Q,
}

impl Axis {
    pub fn label(self) -> &'static str {
        match self {
            Axis::None => "none",
            Axis::TU => "t_u",
            Axis::Q => "q",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Average TAoI versus t_u at q = 0.9, p_a = p_b = 0.1.
    Fig4,
    /// Average TAoI versus q at t_u = 100, p_a = p_b = 0.1.
    Fig5,
}

impl Preset {
    pub fn sweep(self) -> SweepSpec {
        match self {
            Preset::Fig4 => SweepSpec {
                axis: Axis::TU,
                values: (1..=10).map(|k| f64::from(10 * k)).collect(),
            },
            Preset::Fig5 => SweepSpec {
                axis: Axis::Q,
                values: vec![0.5, 0.6, 0.7, 0.8, 0.9],
            },
        }
    }

    pub fn base(self) -> ParamSpec {
        match self {
            Preset::Fig4 => ParamSpec {
                q: 0.9,
                ..ParamSpec::default()
            },
            Preset::Fig5 => ParamSpec {
                t_u: 100,
                ..ParamSpec::default()
            },
        }
    }

    pub fn note(self) -> &'static str {
        match self {
            Preset::Fig4 => "reconstructed grid: t_u in {10, 20, ..., 100}, q = 0.9, p_a = p_b = 0.1",
            Preset::Fig5 => "reconstructed grid: q in {0.5, 0.6, ..., 0.9}, t_u = 100, p_a = p_b = 0.1",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyName {
    Optimal,
    AlwaysTransmit,
    PreIdBased,
}

impl PolicyName {
    pub const ALL: [PolicyName; 3] = [PolicyName::Optimal, PolicyName::AlwaysTransmit, PolicyName::PreIdBased];

    pub fn label(self) -> &'static str {
        match self {
            PolicyName::Optimal => "optimal",
            PolicyName::AlwaysTransmit => "always-transmit",
            PolicyName::PreIdBased => "pre-id-based",
        }
    }

    /// Baselines map directly; the optimal policy needs a solved table.
    pub fn baseline(self) -> Option<PolicyKind> {
        match self {
            PolicyName::Optimal => None,
            PolicyName::AlwaysTransmit => Some(PolicyKind::AlwaysTransmit),
            PolicyName::PreIdBased => Some(PolicyKind::PreIdBased),
        }
    }
}

fn default_policies() -> Vec<PolicyName> {
    PolicyName::ALL.to_vec()
}

/// A whole experiment as a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: ParamSpec,
    pub preset: Option<Preset>,
    pub sweep: SweepSpec,
    pub solver: SolverConfig<f64>,
    pub method: Method,
    pub sim: SimConfig,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyName>,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: ParamSpec::default(),
            preset: None,
            sweep: SweepSpec::default(),
            solver: SolverConfig::default(),
            method: Method::default(),
            sim: SimConfig::default(),
            policies: default_policies(),
            output: None,
        }
    }
}

impl ExperimentConfig {
    /// Sweep points as fully resolved parameter sets, in axis order.
    pub fn sweep_points(&self) -> Result<Vec<(f64, SystemParams<f64>)>> {
        let sweep = match (&self.sweep.axis, self.preset) {
            (Axis::None, Some(p)) => p.sweep(),
            _ => self.sweep.clone(),
        };
        let mut values = sweep.values.clone();
        values.sort_by(f64::total_cmp);
        match sweep.axis {
            Axis::None => Ok(vec![(f64::NAN, self.params.resolve()?)]),
            Axis::TU => values
                .into_iter()
                .map(|v| {
                    let spec = ParamSpec {
                        t_u: v as usize,
                        delta_max: None,
                        ..self.params
                    };
                    Ok((v, spec.resolve()?))
                })
                .collect(),
            Axis::Q => values
                .into_iter()
                .map(|v| Ok((v, ParamSpec { q: v, ..self.params }.resolve()?)))
                .collect(),
        }
    }

    pub fn axis(&self) -> Axis {
        match (self.sweep.axis, self.preset) {
            (Axis::None, Some(p)) => p.sweep().axis,
            (a, _) => a,
        }
    }
}
