//! Experiment configuration: a single JSON document, every field optional.
//! Missing fields take the per-experiment defaults listed in [`Experiment::defaults`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{critical_pareto, TailLaw};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    ZetaConvergence,
    Moments,
    ModelEquivalence,
    OrderedClusters,
    Subcritical,
    HubConnectivity,
    CoalescentConditions,
    LevyHitting,
    TruncationScaling,
    ProcessProperties,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::ZetaConvergence,
        Experiment::Moments,
        Experiment::ModelEquivalence,
        Experiment::OrderedClusters,
        Experiment::Subcritical,
        Experiment::HubConnectivity,
        Experiment::CoalescentConditions,
        Experiment::LevyHitting,
        Experiment::TruncationScaling,
        Experiment::ProcessProperties,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::ZetaConvergence => "zeta_convergence",
            Experiment::Moments => "moments",
            Experiment::ModelEquivalence => "model_equivalence",
            Experiment::OrderedClusters => "ordered_clusters",
            Experiment::Subcritical => "subcritical",
            Experiment::HubConnectivity => "hub_connectivity",
            Experiment::CoalescentConditions => "coalescent_conditions",
            Experiment::LevyHitting => "levy_hitting",
            Experiment::TruncationScaling => "truncation_scaling",
            Experiment::ProcessProperties => "process_properties",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name).ok_or_else(|| Error::UnknownExperiment(name.to_string()))
    }

    /// Acceptance criteria checked by this experiment.
    pub fn criteria(self) -> &'static [u32] {
        match self {
            Experiment::ZetaConvergence => &[1],
            Experiment::Moments => &[2],
            Experiment::ModelEquivalence => &[3],
            Experiment::OrderedClusters => &[4, 5],
            Experiment::Subcritical => &[6],
            Experiment::HubConnectivity => &[7, 8],
            Experiment::CoalescentConditions => &[9],
            Experiment::LevyHitting => &[],
            Experiment::TruncationScaling | Experiment::ProcessProperties => &[10],
        }
    }

    /// Defaults reproduce the pinned acceptance setup of each experiment.
    pub fn defaults(self) -> Defaults {
        let base = Defaults {
            n: vec![],
            replications: vec![],
            lambda: 0.0,
            lambda_exponent: None,
            limit_samples: 0,
            truncation: crate::levy::DEFAULT_TRUNCATION,
            truncations: vec![],
            nu: vec![],
            tolerances: BTreeMap::new(),
        };
        let tol = |pairs: &[(&str, f64)]| pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        match self {
            Experiment::ZetaConvergence => Defaults {
                n: vec![1_000, 10_000, 100_000, 1_000_000, 10_000_000],
                replications: vec![0; 5],
                tolerances: tol(&[("final_rel", 0.05), ("runtime_secs", 60.0), ("zeta_tol", 1e-8)]),
                ..base
            },
            Experiment::Moments => Defaults {
                n: vec![10_000],
                replications: vec![100_000],
                nu: vec![0.5, 0.8, 0.9],
                tolerances: tol(&[("se_multiple", 4.0), ("runtime_secs", 300.0)]),
                ..base
            },
            Experiment::ModelEquivalence => Defaults {
                n: vec![200, 10],
                replications: vec![10_000, 100_000],
                tolerances: tol(&[("significance", 1e-3), ("runtime_secs", 300.0)]),
                ..base
            },
            Experiment::OrderedClusters => Defaults {
                n: vec![1_000_000],
                replications: vec![1_000],
                limit_samples: 10_000,
                tolerances: tol(&[
                    ("ks_single", 0.05),
                    ("ks_ordered", 0.07),
                    ("weight_mean_rel", 0.05),
                    ("weight_ks", 0.03),
                    ("runtime_secs", 1800.0),
                ]),
                ..base
            },
            Experiment::Subcritical => Defaults {
                n: vec![1_000_000],
                replications: vec![200],
                lambda_exponent: Some(0.1),
                tolerances: tol(&[("mean_rel", 0.10), ("cv", 0.15), ("identification", 0.95)]),
                ..base
            },
            Experiment::HubConnectivity => Defaults {
                n: vec![100_000, 1_000_000],
                replications: vec![10_000, 500],
                tolerances: tol(&[
                    ("lower", 0.02),
                    ("upper", 0.98),
                    ("wilson_alpha", 1e-3),
                    ("top_k", 50.0),
                    ("top_clusters", 3.0),
                    ("dominance", 0.95),
                ]),
                ..base
            },
            Experiment::CoalescentConditions => Defaults {
                n: vec![100_000, 1_000_000],
                replications: vec![100, 100],
                lambda_exponent: Some(0.05),
                limit_samples: 10_000,
                tolerances: tol(&[
                    ("cond_a_rel", 0.25),
                    ("cond_b_rel", 0.10),
                    ("cond_c_rel", 0.25),
                    ("excursion_ks", 0.07),
                    ("excursion_horizon", 100.0),
                ]),
                ..base
            },
            Experiment::LevyHitting => Defaults {
                limit_samples: 10_000,
                tolerances: tol(&[("flagged_fraction", 0.01)]),
                ..base
            },
            Experiment::TruncationScaling => Defaults {
                replications: vec![1_000],
                truncations: vec![500, 1_000, 2_000, 4_000, 8_000],
                tolerances: tol(&[("slope_margin", 0.1), ("horizon", 1.0)]),
                ..base
            },
            Experiment::ProcessProperties => Defaults {
                n: vec![10_000],
                replications: vec![1_000],
                truncations: vec![500, 1_000, 2_000, 4_000, 8_000],
                tolerances: tol(&[
                    ("slope_margin", 0.1),
                    ("horizon", 1.0),
                    ("identity_rel", 1e-9),
                    ("runtime_secs", 60.0),
                ]),
                ..base
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct Defaults {
    pub n: Vec<usize>,
    pub replications: Vec<usize>,
    pub lambda: f64,
    pub lambda_exponent: Option<f64>,
    pub limit_samples: usize,
    pub truncation: u64,
    pub truncations: Vec<u64>,
    pub nu: Vec<f64>,
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawConfig {
    /// Pareto tail with the critical scale `(tau - 3)/(tau - 2)`.
    CriticalPareto,
    Pareto { scale: f64 },
}

/// Raw configuration as read from JSON.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<String>,
    pub tau: Option<f64>,
    pub law: Option<LawConfig>,
    pub n: Option<Vec<usize>>,
    pub lambda: Option<f64>,
    /// When set, `lambda_n = -n^lambda_exponent` overrides `lambda`.
    pub lambda_exponent: Option<f64>,
    /// One count for every `n`, or a single count for all of them.
    pub replications: Option<Vec<usize>>,
    pub limit_samples: Option<usize>,
    pub truncation: Option<u64>,
    pub truncations: Option<Vec<u64>>,
    pub nu: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tolerances: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn for_experiment(e: Experiment, seed: u64) -> Self {
        Self { experiment: Some(e.name().into()), seed: Some(seed), ..Self::default() }
    }

    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let name = self.experiment.as_deref().ok_or_else(|| Error::Config("experiment name missing".into()))?;
        let experiment = Experiment::parse(name)?;
        let seed = self.seed.ok_or_else(|| Error::Config("seed is mandatory".into()))?;
        let d = experiment.defaults();
        let tau = self.tau.unwrap_or(3.5);
        if !(tau > 3.0 && tau < 4.0) {
            return Err(Error::InvalidTau(tau));
        }
        let law = self.law.clone().unwrap_or(LawConfig::CriticalPareto);
        if let LawConfig::Pareto { scale } = law {
            if !(scale > 0.0) {
                return Err(Error::Config(format!("Pareto scale must be positive (got {scale})")));
            }
        }
        let n = self.n.clone().unwrap_or(d.n);
        if n.iter().any(|&v| v < 2) {
            return Err(Error::Config("every n must be at least 2".into()));
        }
        let replications = match &self.replications {
            None => d.replications,
            Some(r) if r.len() == 1 => vec![r[0]; n.len().max(1)],
            Some(r) if r.len() == n.len() => r.clone(),
            Some(r) => {
                return Err(Error::Config(format!("{} replication counts for {} values of n", r.len(), n.len())))
            }
        };
        let mut tolerances = d.tolerances;
        for (k, v) in &self.tolerances {
            if !tolerances.contains_key(k) {
                return Err(Error::Config(format!("unknown tolerance '{k}' for {name}")));
            }
            if !v.is_finite() {
                return Err(Error::Config(format!("tolerance '{k}' must be finite")));
            }
            tolerances.insert(k.clone(), *v);
        }
        let truncation = self.truncation.unwrap_or(d.truncation);
        if truncation < 2 {
            return Err(Error::Config("truncation must be at least 2".into()));
        }
        let nu = self.nu.clone().unwrap_or(d.nu);
        if nu.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
            return Err(Error::Config("nu targets must lie in (0, 1)".into()));
        }
        let truncations = self.truncations.clone().unwrap_or(d.truncations);
        if truncations.iter().any(|&k| k < 2) || truncations.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::Config("truncations must be increasing and at least 2".into()));
        }
        Ok(ResolvedConfig {
            experiment,
            tau,
            law,
            n,
            lambda: self.lambda.unwrap_or(d.lambda),
            lambda_exponent: self.lambda_exponent.or(d.lambda_exponent),
            replications,
            limit_samples: self.limit_samples.unwrap_or(d.limit_samples),
            truncation,
            truncations,
            nu,
            seed,
            out: self.out.clone(),
            tolerances,
        })
    }
}

/// Configuration with every default filled in; echoed in the report.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedConfig {
    pub experiment: Experiment,
    pub tau: f64,
    pub law: LawConfig,
    pub n: Vec<usize>,
    pub lambda: f64,
    pub lambda_exponent: Option<f64>,
    pub replications: Vec<usize>,
    pub limit_samples: usize,
    pub truncation: u64,
    pub truncations: Vec<u64>,
    pub nu: Vec<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tolerances: BTreeMap<String, f64>,
}

impl ResolvedConfig {
    pub fn tail_law(&self) -> Result<TailLaw> {
        match self.law {
            LawConfig::CriticalPareto => critical_pareto(self.tau),
            LawConfig::Pareto { scale } => TailLaw::pareto(self.tau, scale),
        }
    }

    pub fn tol(&self, key: &str) -> f64 {
        self.tolerances[key]
    }

    pub fn reps(&self, k: usize) -> usize {
        self.replications.get(k).copied().unwrap_or(0)
    }

    /// `-n^lambda_exponent` if set, else the configured `lambda`.
    pub fn lambda_for(&self, n: usize) -> f64 {
        match self.lambda_exponent {
            Some(d) => -(n as f64).powf(d),
            None => self.lambda,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(Experiment::parse(e.name()).unwrap(), e);
        }
        assert!(Experiment::parse("nope").is_err());
    }

    #[test]
    fn resolve_defaults_and_overrides() {
        let c = ExperimentConfig::from_json(
            r#"{"experiment": "moments", "seed": 3, "replications": [10], "tolerances": {"se_multiple": 5}}"#,
        )
        .unwrap();
        let r = c.resolve().unwrap();
        assert_eq!(r.replications, vec![10]);
        assert_eq!(r.tol("se_multiple"), 5.0);
        assert_eq!(r.nu, vec![0.5, 0.8, 0.9]);
        assert!(ExperimentConfig::from_json(r#"{"experiment": "moments"}"#).unwrap().resolve().is_err());
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        let bad = r#"{"experiment": "moments", "seed": 1, "tolerances": {"nope": 1}}"#;
        assert!(ExperimentConfig::from_json(bad).unwrap().resolve().is_err());
    }
}
