//! Run configuration: a single JSON document embedding every module config.
//! Unknown keys are rejected (no silent typos), and nothing runs before the
//! whole document validates.

use serde::{Deserialize, Serialize};
use tentflow::solver::SolverConfig;
use tentflow::verify::CampaignConfig;
use tentflow::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub verify: Option<VerifySection>,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default = "default_id")]
    pub id: String,
    pub campaign: CampaignConfig,
}

fn default_id() -> String {
    "all".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub alphas: Vec<f64>,
    pub eps0s: Vec<f64>,
    pub ns: Vec<usize>,
    #[serde(default = "default_preset")]
    pub preset: String,
    /// Template for each run; alpha/eps0/n are substituted per grid point.
    pub base: SolverConfig,
}

fn default_preset() -> String {
    "bump".to_string()
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(solver) = &self.solver {
            solver.validate()?;
        }
        if let Some(sweep) = &self.sweep {
            sweep.base.validate()?;
            if sweep.alphas.is_empty() || sweep.eps0s.is_empty() || sweep.ns.is_empty() {
                return Err(Error::Config("sweep axes must be non-empty".into()));
            }
            for &a in &sweep.alphas {
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::Config(format!("sweep alpha {a} outside (0,1)")));
                }
            }
        }
        if let Some(verify) = &self.verify {
            if !(verify.campaign.alpha > 0.0 && verify.campaign.alpha < 1.0) {
                return Err(Error::Config(format!(
                    "campaign alpha {} outside (0,1)",
                    verify.campaign.alpha
                )));
            }
        }
        Ok(())
    }
}
