//! Empirical verification campaigns: seeded ensembles, per-sample LHS/RHS
//! ratios, empirical constants, and refinement verdicts under one grid
//! doubling.

pub mod checks;
pub mod ensemble;

pub use checks::{
    check_bilinear, check_embeddings, check_gradient_and_product, check_key_inequalities,
    check_lemma_timederiv, check_leray_tent, check_linear_flow, check_maxreg_bound,
    check_mollification, check_offdiagonal, check_scaling, offdiagonal_sweep, CheckContext,
    OffDiagonalReport, OffDiagonalSample, ScalingReport,
};
pub use ensemble::{Ensemble, EnsembleKind};

use crate::error::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Ratios with RHS below this scale are skipped, not treated as infinite.
pub const RHS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioSample {
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
}

impl RatioSample {
    pub fn new(index: usize, lhs: f64, rhs: f64) -> Self {
        let ratio = if rhs > RHS_FLOOR * lhs.max(1.0) {
            Some(lhs / rhs)
        } else {
            None
        };
        Self {
            index,
            lhs,
            rhs,
            ratio,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "BOUNDED_STABLE")]
    BoundedStable,
    #[serde(rename = "UNSTABLE")]
    Unstable,
}

/// Empirical constant of one inequality: the worst LHS/RHS ratio over the
/// ensemble, with its drift under one resolution doubling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityReport {
    pub inequality_id: String,
    pub params: BTreeMap<String, f64>,
    /// Per-sample ratios at the base resolution.
    pub samples: Vec<RatioSample>,
    /// `max(lhs/rhs)` at the base resolution.
    pub c_emp: f64,
    /// `(grid N, c_emp)` at base and doubled resolutions.
    pub refinement: Vec<(usize, f64)>,
    pub drift: f64,
    pub verdict: Verdict,
    pub skipped: usize,
}

/// Drift threshold for BOUNDED_STABLE under one doubling.
pub const STABLE_DRIFT: f64 = 0.25;

fn c_emp(samples: &[RatioSample]) -> f64 {
    samples
        .iter()
        .filter_map(|s| s.ratio)
        .fold(0.0f64, f64::max)
}

fn assemble_report(
    id: &str,
    params: BTreeMap<String, f64>,
    base_n: usize,
    base: Vec<RatioSample>,
    fine_n: usize,
    fine: Vec<RatioSample>,
) -> InequalityReport {
    let c_base = c_emp(&base);
    let c_fine = c_emp(&fine);
    let drift = if c_base > 0.0 {
        (c_fine - c_base).abs() / c_base
    } else if c_fine > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let verdict = if drift < STABLE_DRIFT {
        Verdict::BoundedStable
    } else {
        Verdict::Unstable
    };
    let skipped = base.iter().filter(|s| s.ratio.is_none()).count();
    InequalityReport {
        inequality_id: id.to_string(),
        params,
        samples: base,
        c_emp: c_base,
        refinement: vec![(base_n, c_base), (fine_n, c_fine)],
        drift,
        verdict,
        skipped,
    }
}

/// Campaign configuration: everything needed to evaluate one inequality at
/// the base resolution and its doubling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub dim: usize,
    pub l: f64,
    /// Base grid; refinement runs at `2 * base_n`.
    pub base_n: usize,
    pub alpha: f64,
    pub seed: u64,
    pub samples: usize,
    #[serde(default = "default_time_nodes")]
    pub time_nodes: usize,
    #[serde(default = "default_k_max")]
    pub mollify_k_max: u32,
}

fn default_time_nodes() -> usize {
    48
}

fn default_k_max() -> u32 {
    8
}

impl CampaignConfig {
    pub fn standard(seed: u64) -> Self {
        Self {
            dim: 2,
            l: 1.0,
            base_n: 64,
            alpha: 0.5,
            seed,
            samples: 50,
            time_nodes: default_time_nodes(),
            mollify_k_max: default_k_max(),
        }
    }

    fn context(&self, n: usize) -> Result<CheckContext> {
        CheckContext::new(self.dim, self.l, n, self.time_nodes)
    }

    fn ensemble(&self, kind: EnsembleKind) -> Ensemble {
        Ensemble::new(kind, self.seed, self.samples)
    }
}

/// All inequality-campaign identifiers, in the order `verify --id all`
/// runs them.
pub const CAMPAIGN_IDS: &[&str] = &[
    "timederiv",
    "maxreg",
    "leray",
    "gradprod",
    "key",
    "bilinear",
    "embed",
    "mollify",
    "linear_flow",
];

/// Run one named inequality campaign at the base resolution and its
/// doubling. Some ids expand to several reports (per beta or per estimate).
pub fn run_campaign(id: &str, cfg: &CampaignConfig) -> Result<Vec<InequalityReport>> {
    let base_n = cfg.base_n;
    let fine_n = 2 * cfg.base_n;
    type NamedSamples = (String, BTreeMap<String, f64>, Vec<RatioSample>);
    let run = |n: usize| -> Result<Vec<NamedSamples>> {
        let ctx = cfg.context(n)?;
        let mut out = Vec::new();
        let alpha_params: BTreeMap<String, f64> =
            [("alpha".to_string(), cfg.alpha)].into_iter().collect();
        match id {
            "timederiv" => {
                let ens = cfg.ensemble(EnsembleKind::LocalizedBumps);
                out.push((
                    "timederiv".into(),
                    alpha_params.clone(),
                    check_lemma_timederiv(&ens, cfg.alpha, &ctx)?,
                ));
            }
            "maxreg" => {
                let betas = [0.0, 0.5, 0.9];
                let ens = cfg.ensemble(EnsembleKind::LocalizedBumps);
                for (b, samples) in betas.iter().zip(check_maxreg_bound(&ens, &betas, &ctx)?) {
                    let params: BTreeMap<String, f64> =
                        [("beta".to_string(), *b)].into_iter().collect();
                    out.push((format!("maxreg_beta_{b}"), params, samples));
                }
            }
            "leray" => {
                let betas = [0.0, 1.0, 1.9];
                let ens = cfg.ensemble(EnsembleKind::BandLimitedRandom);
                for (b, samples) in betas.iter().zip(check_leray_tent(&ens, &betas, &ctx)?) {
                    let params: BTreeMap<String, f64> =
                        [("beta".to_string(), *b)].into_iter().collect();
                    out.push((format!("leray_beta_{b}"), params, samples));
                }
            }
            "gradprod" => {
                let ens = cfg.ensemble(EnsembleKind::LocalizedBumps);
                let (identity, product) = check_gradient_and_product(&ens, cfg.alpha, &ctx)?;
                out.push(("gradprod_identity".into(), alpha_params.clone(), identity));
                out.push(("gradprod_product".into(), alpha_params.clone(), product));
            }
            "key" => {
                let ens = cfg.ensemble(EnsembleKind::LocalizedBumps);
                let [k1, k2, k3] = check_key_inequalities(&ens, cfg.alpha, &ctx)?;
                out.push(("key1_sup".into(), alpha_params.clone(), k1));
                out.push(("key2_gradient".into(), alpha_params.clone(), k2));
                out.push(("key3_besov".into(), alpha_params.clone(), k3));
            }
            "bilinear" => {
                let ens = cfg.ensemble(EnsembleKind::BandLimitedRandom);
                out.push((
                    "bilinear".into(),
                    BTreeMap::new(),
                    check_bilinear(&ens, &ctx)?,
                ));
            }
            "embed" => {
                let rough = cfg.ensemble(EnsembleKind::SlobodeckijRough);
                let band = cfg.ensemble(EnsembleKind::BandLimitedRandom);
                let (slobodeckij, besov) = check_embeddings(&rough, &band, cfg.alpha, &ctx)?;
                out.push((
                    "embed_slobodeckij".into(),
                    alpha_params.clone(),
                    slobodeckij,
                ));
                out.push(("embed_besov".into(), alpha_params.clone(), besov));
            }
            "mollify" => {
                let ens = cfg.ensemble(EnsembleKind::SlobodeckijRough);
                let mut params = alpha_params.clone();
                params.insert("k_max".into(), cfg.mollify_k_max as f64);
                out.push((
                    "mollify".into(),
                    params,
                    check_mollification(&ens, cfg.alpha, cfg.mollify_k_max, &ctx)?,
                ));
            }
            "linear_flow" => {
                let ens = cfg.ensemble(EnsembleKind::LocalizedBumps);
                out.push((
                    "linear_flow".into(),
                    alpha_params.clone(),
                    check_linear_flow(&ens, cfg.alpha, &ctx)?,
                ));
            }
            other => {
                return Err(Error::Config(format!(
                    "unknown campaign id '{other}' (expected one of {CAMPAIGN_IDS:?})"
                )))
            }
        }
        Ok(out)
    };
    // Base and doubled resolutions run in parallel.
    let (base, fine) = rayon::join(|| run(base_n), || run(fine_n));
    let base = base?;
    let fine = fine?;
    Ok(base
        .into_iter()
        .zip(fine)
        .map(|((id, params, b), (_, _, f))| assemble_report(&id, params, base_n, b, fine_n, f))
        .collect())
}

/// Run every campaign in [`CAMPAIGN_IDS`].
pub fn run_all_campaigns(cfg: &CampaignConfig) -> Result<Vec<InequalityReport>> {
    let reports: Result<Vec<Vec<InequalityReport>>> = CAMPAIGN_IDS
        .par_iter()
        .map(|id| run_campaign(id, cfg))
        .collect();
    Ok(reports?.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg() -> CampaignConfig {
        CampaignConfig {
            dim: 2,
            l: 1.0,
            base_n: 16,
            alpha: 0.5,
            seed: 7,
            samples: 3,
            time_nodes: 24,
            mollify_k_max: 3,
        }
    }

    #[test]
    fn ratio_samples_skip_vanishing_rhs() {
        let s = RatioSample::new(0, 0.0, 0.0);
        assert!(s.ratio.is_none());
        let s = RatioSample::new(0, 1.0, 1e-16);
        assert!(s.ratio.is_none());
        let s = RatioSample::new(0, 1.0, 2.0);
        assert_eq!(s.ratio, Some(0.5));
    }

    #[test]
    fn verdict_rule_is_exact() {
        let base = vec![RatioSample::new(0, 1.0, 1.0)];
        let fine_ok = vec![RatioSample::new(0, 1.2, 1.0)];
        let report = assemble_report("x", BTreeMap::new(), 16, base.clone(), 32, fine_ok);
        assert_eq!(report.verdict, Verdict::BoundedStable);
        assert!((report.drift - 0.2).abs() < 1e-12);
        let fine_bad = vec![RatioSample::new(0, 1.3, 1.0)];
        let report = assemble_report("x", BTreeMap::new(), 16, base, 32, fine_bad);
        assert_eq!(report.verdict, Verdict::Unstable);
    }

    #[test]
    fn verdict_monotone_under_subsetting() {
        // A subset of the ensemble can only lower c_emp.
        let full: Vec<RatioSample> = (0..6)
            .map(|i| RatioSample::new(i, 1.0 + i as f64 * 0.1, 1.0))
            .collect();
        let subset: Vec<RatioSample> = full[..3].to_vec();
        assert!(c_emp(&subset) <= c_emp(&full));
    }

    #[test]
    fn hypothesis_violations_cite_the_hypothesis() {
        let cfg = tiny_cfg();
        let ctx = cfg.context(16).unwrap();
        let ens = cfg.ensemble(EnsembleKind::LocalizedBumps);
        let err = check_maxreg_bound(&ens, &[1.0], &ctx).unwrap_err();
        assert!(err.to_string().contains("beta < 1"), "{err}");
        let err = check_leray_tent(&ens, &[2.5], &ctx).unwrap_err();
        assert!(err.to_string().contains("beta < 2"), "{err}");
        let err = check_lemma_timederiv(&ens, 1.5, &ctx).unwrap_err();
        assert!(err.to_string().contains("alpha in (0,1)"), "{err}");
    }

    #[test]
    fn campaigns_are_deterministic() {
        let cfg = tiny_cfg();
        let a = run_campaign("timederiv", &cfg).unwrap();
        let b = run_campaign("timederiv", &cfg).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn unknown_campaign_id_is_an_error() {
        let cfg = tiny_cfg();
        assert!(run_campaign("nope", &cfg).is_err());
    }

    #[test]
    fn product_constant_stays_under_the_pointwise_bound() {
        // The product estimate is a pointwise Cauchy-Schwarz bound, so the
        // measured constant cannot exceed 1 (plus discretization slack).
        let mut cfg = tiny_cfg();
        cfg.base_n = 32;
        cfg.samples = 6;
        let reports = run_campaign("gradprod", &cfg).unwrap();
        let product = reports
            .iter()
            .find(|r| r.inequality_id == "gradprod_product")
            .unwrap();
        assert!(product.c_emp <= 1.1, "product C_emp {}", product.c_emp);
        let identity = reports
            .iter()
            .find(|r| r.inequality_id == "gradprod_identity")
            .unwrap();
        assert!(
            (identity.c_emp - 1.0).abs() < 0.02,
            "identity C_emp {}",
            identity.c_emp
        );
    }

    #[test]
    fn maxreg_constant_degrades_toward_beta_one() {
        let mut cfg = tiny_cfg();
        cfg.base_n = 32;
        cfg.samples = 6;
        let reports = run_campaign("maxreg", &cfg).unwrap();
        let c_at = |id: &str| {
            reports
                .iter()
                .find(|r| r.inequality_id == id)
                .unwrap()
                .c_emp
        };
        assert!(
            c_at("maxreg_beta_0.9") >= c_at("maxreg_beta_0"),
            "expected the constant to grow as beta approaches 1"
        );
    }
}
