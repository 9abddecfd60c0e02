//! Experiment configuration: one JSON file, every key optional.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use fedgraph_core::adafgl::{HcsParams, KnowledgeScale, Step2Hyper, DEFAULT_DENSE_CAP};
use fedgraph_core::fed::FederationConfig;
use fedgraph_core::graph::MaskRatios;
use fedgraph_core::learn::AdamConfig;
use fedgraph_core::partition::{SparsityConfig, Strategy};

use crate::ValidationError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fedgcn,
    #[default]
    Adafgl,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Fedgcn => "fedgcn",
            Method::Adafgl => "adafgl",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub strategy: Strategy,
    pub num_clients: usize,
    /// Probability that a client receives homophilous edges.
    pub p_s: f64,
    /// Injected edges as a fraction of each client's edges.
    pub ratio: f64,
    /// Seed of the masks and the partition; training seeds are separate.
    pub seed: u64,
    pub masks: MaskRatios,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self {
            strategy: Strategy::Community,
            num_clients: 10,
            p_s: 0.5,
            ratio: 0.5,
            seed: 0,
            masks: MaskRatios::HOMOPHILOUS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FederationSection {
    pub rounds: usize,
    pub local_epochs: usize,
    pub participation: f64,
    pub hidden: usize,
    pub lr: f64,
    pub weight_decay: f64,
}

impl Default for FederationSection {
    fn default() -> Self {
        let f = FederationConfig::default();
        Self {
            rounds: f.rounds,
            local_epochs: f.local_epochs,
            participation: f.participation,
            hidden: f.hidden,
            lr: f.adam.lr,
            weight_decay: f.adam.weight_decay,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdafglSection {
    pub alpha: f64,
    pub beta: f64,
    pub k: usize,
    pub layers: usize,
    pub epochs: usize,
    pub hidden: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub knowledge_scale: KnowledgeScale,
    pub kappa: f64,
    pub lp_steps: usize,
    pub mask_prob: f64,
    pub dense_cap: usize,
}

impl Default for AdafglSection {
    fn default() -> Self {
        let h = Step2Hyper::default();
        Self {
            alpha: h.alpha,
            beta: h.beta,
            k: h.k,
            layers: h.layers,
            epochs: h.epochs,
            hidden: h.hidden,
            lr: h.adam.lr,
            weight_decay: h.adam.weight_decay,
            knowledge_scale: h.knowledge_scale,
            kappa: h.hcs.kappa,
            lp_steps: h.hcs.steps,
            mask_prob: h.hcs.mask_prob,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// A graph directory, a task directory (with `manifest.json`) or a
    /// directory holding `<name>.content[.gz]` and `<name>.cites[.gz]`.
    pub dataset: PathBuf,
    /// Row-normalize features after loading a raw dataset.
    pub normalize_features: bool,
    pub split: SplitSection,
    pub federation: FederationSection,
    pub adafgl: AdafglSection,
    pub sparsity: SparsityConfig,
    pub method: Method,
    /// Training seeds; each yields one run.
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("data/cora"),
            normalize_features: true,
            split: SplitSection::default(),
            federation: FederationSection::default(),
            adafgl: AdafglSection::default(),
            sparsity: SparsityConfig::default(),
            method: Method::Adafgl,
            seeds: (0..10).collect(),
            out: None,
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), ValidationError> {
    if ok {
        Ok(())
    } else {
        Err(ValidationError(msg()))
    }
}

fn unit(name: &str, v: f64) -> Result<(), ValidationError> {
    check((0.0..=1.0).contains(&v), || format!("{name} = {v} must lie in [0, 1]"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| ValidationError(format!("{}: {e}", path.display())).into())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Checks every documented range before any computation.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let s = &self.split;
        check(s.num_clients >= 2, || {
            format!("num_clients = {} must be at least 2", s.num_clients)
        })?;
        unit("split.p_s", s.p_s)?;
        check(s.ratio >= 0.0 && s.ratio.is_finite(), || {
            format!("split.ratio = {} must be non-negative", s.ratio)
        })?;
        s.masks.validate().map_err(|e| ValidationError(e.to_string()))?;
        self.federation_config(0)
            .validate()
            .map_err(|e| ValidationError(e.to_string()))?;
        let f = &self.federation;
        check(f.lr > 0.0, || format!("federation.lr = {} must be positive", f.lr))?;
        check(f.weight_decay >= 0.0, || {
            "federation.weight_decay must be non-negative".into()
        })?;
        let a = &self.adafgl;
        check(a.lr > 0.0, || format!("adafgl.lr = {} must be positive", a.lr))?;
        check(a.weight_decay >= 0.0, || {
            "adafgl.weight_decay must be non-negative".into()
        })?;
        check(a.dense_cap > 0, || "adafgl.dense_cap must be positive".into())?;
        self.step2_hyper()
            .validate()
            .map_err(|e| ValidationError(e.to_string()))?;
        self.sparsity.validate().map_err(|e| ValidationError(e.to_string()))?;
        check(!self.seeds.is_empty(), || "seeds must not be empty".into())?;
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        check(sorted.len() == self.seeds.len(), || "seeds must be distinct".into())
    }

    pub fn federation_config(&self, seed: u64) -> FederationConfig {
        let f = &self.federation;
        FederationConfig {
            rounds: f.rounds,
            local_epochs: f.local_epochs,
            participation: f.participation,
            hidden: f.hidden,
            adam: AdamConfig {
                lr: f.lr,
                weight_decay: f.weight_decay,
                ..AdamConfig::default()
            },
            seed,
            ..FederationConfig::default()
        }
    }

    pub fn step2_hyper(&self) -> Step2Hyper {
        let a = &self.adafgl;
        Step2Hyper {
            alpha: a.alpha,
            beta: a.beta,
            k: a.k,
            layers: a.layers,
            epochs: a.epochs,
            hidden: a.hidden,
            adam: AdamConfig {
                lr: a.lr,
                weight_decay: a.weight_decay,
                ..AdamConfig::default()
            },
            knowledge_scale: a.knowledge_scale,
            hcs: HcsParams {
                kappa: a.kappa,
                steps: a.lp_steps,
                mask_prob: a.mask_prob,
            },
            dense_cap: a.dense_cap,
        }
    }
}
