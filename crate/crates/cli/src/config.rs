//! JSON run configuration.

use std::f64::consts::PI;
use std::path::Path;

use boltzmix::bounds::OmegaConstants;
use boltzmix::dsmc::{SimConfig, SimParams};
use boltzmix::moments::DiagnosticSpec;
use boltzmix::{AngularKernel, CrossSection, SpeciesSet};
use serde::{Deserialize, Serialize};

use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub species: SpeciesSpec,
    pub cross_section: CrossSectionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_constants: Option<OmegaConstants>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimParams>,
    #[serde(default)]
    pub diagnostics: DiagnosticSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSpec {
    pub masses: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerPair<T> {
    Uniform(T),
    Matrix(Vec<Vec<T>>),
}

impl<T: Clone> PerPair<T> {
    fn expand(&self, n: usize) -> Vec<Vec<T>> {
        match self {
            PerPair::Uniform(x) => vec![vec![x.clone(); n]; n],
            PerPair::Matrix(m) => m.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `value` defaults to `1 / (4 pi)`, i.e. `||b||_L1 = 1`.
    Constant {
        #[serde(default = "unit_mass_constant")]
        value: f64,
    },
    Tabulated {
        tau: Vec<f64>,
        values: Vec<f64>,
    },
}

fn unit_mass_constant() -> f64 {
    1.0 / (4.0 * PI)
}

impl KernelSpec {
    fn build(&self) -> boltzmix::Result<AngularKernel> {
        match self {
            KernelSpec::Constant { value } => AngularKernel::constant(*value),
            KernelSpec::Tabulated { tau, values } => {
                AngularKernel::tabulated(tau.clone(), values.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossSectionSpec {
    pub gamma: PerPair<f64>,
    pub kernel: PerPair<KernelSpec>,
}

/// Validated mixture built from a [`FileConfig`].
pub struct Mixture {
    pub species: SpeciesSet,
    pub cross_section: CrossSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
    }

    pub fn mixture(&self) -> Result<Mixture, Failure> {
        let species = SpeciesSet::new(self.species.masses.clone())?;
        let n = species.len();
        let gamma = self.cross_section.gamma.expand(n);
        let kernels = self
            .cross_section
            .kernel
            .expand(n)
            .iter()
            .map(|row| {
                row.iter()
                    .map(KernelSpec::build)
                    .collect::<boltzmix::Result<Vec<_>>>()
            })
            .collect::<boltzmix::Result<Vec<_>>>()?;
        let cross_section = CrossSection::new(gamma, kernels)?;
        let report = cross_section.validate(&species);
        if !report.is_ok() {
            let msgs: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
            return Err(Failure::Invalid(format!(
                "cross section: {}",
                msgs.join("; ")
            )));
        }
        Ok(Mixture {
            species,
            cross_section,
        })
    }

    pub fn sim_config(&self, seed: Option<u64>) -> Result<SimConfig, Failure> {
        let mut params = self
            .sim
            .clone()
            .ok_or_else(|| Failure::Invalid("config has no `sim` section".into()))?;
        if let Some(s) = seed {
            params.seed = s;
        }
        let Mixture {
            species,
            cross_section,
        } = self.mixture()?;
        let cfg = SimConfig {
            species,
            cross_section,
            params,
            diagnostics: self.diagnostics.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn omega(&self) -> Result<OmegaConstants, Failure> {
        let omega = self
            .omega_constants
            .ok_or_else(|| Failure::Invalid("config has no `omega_constants` section".into()))?;
        omega.validate()?;
        Ok(omega)
    }
}
