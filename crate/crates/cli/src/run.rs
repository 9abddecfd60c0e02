//! Loading, splitting and training.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use fedgraph_core::adafgl::{step2_train, weighted_adafgl_accuracy, ClientResult};
use fedgraph_core::fed::{run_federation, FederationOutcome};
use fedgraph_core::graph::{edge_homophily, make_masks, Graph, Split};
use fedgraph_core::io::{self, load_dataset, load_graph, load_task, write_task};
use fedgraph_core::partition::{apply_sparsity, community_split, structure_noniid_split, FederatedTask, Strategy};

use crate::config::{ExperimentConfig, Method};
use crate::{csv_opt, mean_std, ValidationError};

/// What a dataset path points at.
#[derive(Clone, Debug)]
pub enum Source {
    Graph(Graph),
    Task(FederatedTask),
}

fn linqs_name(dir: &Path) -> Option<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let f = e.file_name().to_string_lossy().into_owned();
            f.strip_suffix(".content.gz")
                .or_else(|| f.strip_suffix(".content"))
                .map(str::to_string)
        })
        .collect();
    names.sort();
    names.dedup();
    names.into_iter().next()
}

/// Loads a task directory, a graph directory or a LINQS dataset directory.
pub fn load_source(cfg: &ExperimentConfig) -> Result<Source> {
    let dir = &cfg.dataset;
    if !dir.is_dir() {
        return Err(ValidationError(format!("dataset {} is not a directory", dir.display())).into());
    }
    if dir.join(io::MANIFEST_FILE).exists() {
        return Ok(Source::Task(load_task(dir)?));
    }
    let g = if dir.join(io::EDGES_FILE).exists() {
        let g = load_graph(dir)?;
        let g = if cfg.normalize_features {
            g.with_row_normalized_features()
        } else {
            g
        };
        if g.count_in(Split::Train) == 0 {
            make_masks(&g, cfg.split.masks, cfg.split.seed)?
        } else {
            g
        }
    } else if let Some(name) = linqs_name(dir) {
        load_dataset(dir, &name, cfg.split.masks, cfg.normalize_features, cfg.split.seed)?
    } else {
        return Err(ValidationError(format!(
            "{}: no manifest.json, edges.tsv or *.content file found",
            dir.display()
        ))
        .into());
    };
    Ok(Source::Graph(g))
}

/// The federated task a config describes, sparsity knobs included.
pub fn build_task(cfg: &ExperimentConfig) -> Result<FederatedTask> {
    let s = &cfg.split;
    let task = match load_source(cfg)? {
        Source::Task(t) => t,
        Source::Graph(g) => match s.strategy {
            Strategy::Community => community_split(&g, s.num_clients, s.seed)?,
            Strategy::StructureNoniid => structure_noniid_split(&g, s.num_clients, s.p_s, s.ratio, s.seed)?,
        },
    };
    if cfg.sparsity.is_noop() {
        Ok(task)
    } else {
        Ok(apply_sparsity(&task, &cfg.sparsity, s.seed)?)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn prepare_out(out: &Path, cfg: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_file(&out.join("config.json"), &cfg.to_json())
}

/// One line per client: nodes, edges, edge homophily and injection mode.
pub fn split_table(task: &FederatedTask) -> String {
    let mut s = String::from("client\tnodes\tedges\ttrain\tedge_homophily\tinjection\tadded\n");
    for (c, inj) in task.clients.iter().zip(&task.injection_log) {
        let h = edge_homophily(&c.graph).ok().map_or("-".into(), |h| format!("{h:.4}"));
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{h}\t{}\t{}",
            c.client_id,
            c.graph.num_nodes(),
            c.graph.num_edges(),
            c.graph.count_in(Split::Train),
            inj.mode.as_str(),
            inj.edges_added
        );
    }
    s
}

/// Builds the task and writes it with a copy of the config.
pub fn cmd_split(cfg: &ExperimentConfig, out: &Path) -> Result<FederatedTask> {
    cfg.validate()?;
    let task = build_task(cfg)?;
    prepare_out(out, cfg)?;
    write_task(&task, out)?;
    Ok(task)
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub per_seed: Vec<f64>,
}

impl Summary {
    fn of(values: Vec<f64>) -> Option<Self> {
        mean_std(&values).map(|(mean, std)| Summary {
            mean,
            std,
            per_seed: values,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SeedFailure {
    pub seed: u64,
    pub error: String,
}

/// Contents of `results.json`.
#[derive(Clone, Debug, Serialize)]
pub struct Results {
    pub method: Method,
    pub strategy: Strategy,
    pub num_clients: usize,
    pub seeds: Vec<u64>,
    /// Node-weighted test accuracy of the federated GCN.
    pub fedgcn: Option<Summary>,
    /// Node-weighted test accuracy after personalization.
    pub adafgl: Option<Summary>,
    pub failed: Vec<SeedFailure>,
}

/// Everything one training seed produced.
#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub fedgcn_acc: Option<f64>,
    pub adafgl_acc: Option<f64>,
    pub outcome: FederationOutcome,
    pub clients: Vec<ClientResult>,
}

pub fn run_seed(task: &FederatedTask, cfg: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    let outcome = run_federation(task, &cfg.federation_config(seed))?;
    let fedgcn_acc = outcome.test_accuracy();
    let clients = match cfg.method {
        Method::Fedgcn => Vec::new(),
        Method::Adafgl => {
            let hyper = cfg.step2_hyper();
            task.clients
                .par_iter()
                .map(|c| step2_train(c.client_id, &c.graph, &outcome.extractor, &hyper, seed))
                .collect::<fedgraph_core::Result<Vec<_>>>()?
        }
    };
    let adafgl_acc = weighted_adafgl_accuracy(&clients);
    Ok(SeedRun {
        seed,
        fedgcn_acc,
        adafgl_acc,
        outcome,
        clients,
    })
}

pub struct TrainOutput {
    pub results: Results,
    pub runs: Vec<SeedRun>,
}

impl TrainOutput {
    pub fn results_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.results).expect("results serialize");
        s.push('\n');
        s
    }

    /// `seed,phase,step,client_id,loss,val_acc,test_acc`; federation rounds
    /// carry one row per client plus a `global` row.
    pub fn curves_csv(&self) -> String {
        let mut s = String::from("seed,phase,step,client_id,loss,val_acc,test_acc\n");
        for run in &self.runs {
            for r in &run.outcome.reports {
                for c in &r.clients {
                    let _ = writeln!(
                        s,
                        "{},fedgcn,{},{},{},{},{}",
                        run.seed,
                        r.round,
                        c.client_id,
                        csv_opt(c.train_loss),
                        csv_opt(c.val_acc),
                        csv_opt(c.test_acc)
                    );
                }
                let _ = writeln!(
                    s,
                    "{},fedgcn,{},global,,{},{}",
                    run.seed,
                    r.round,
                    csv_opt(r.val_acc),
                    csv_opt(r.test_acc)
                );
            }
            for c in &run.clients {
                for e in &c.epochs_trace {
                    let loss = (!e.loss.is_nan()).then_some(e.loss);
                    let _ = writeln!(
                        s,
                        "{},adafgl,{},{},{},{},{}",
                        run.seed,
                        e.epoch,
                        c.client_id,
                        csv_opt(loss),
                        csv_opt(e.val_acc),
                        csv_opt(e.test_acc)
                    );
                }
            }
        }
        s
    }

    /// Per-seed, per-client breakdown.
    pub fn clients_csv(&self, task: &FederatedTask) -> String {
        let mut s = String::from(
            "seed,client_id,nodes,edges,test_nodes,edge_homophily,injection,hcs,fedgcn_acc,adafgl_acc,best_epoch\n",
        );
        for run in &self.runs {
            for (i, c) in task.clients.iter().enumerate() {
                let eval = &run.outcome.extractor_eval[i];
                let step2 = run.clients.get(i);
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    run.seed,
                    c.client_id,
                    c.graph.num_nodes(),
                    c.graph.num_edges(),
                    eval.test_count,
                    csv_opt(edge_homophily(&c.graph).ok()),
                    task.injection_log[i].mode.as_str(),
                    csv_opt(step2.map(|r| r.hcs)),
                    csv_opt(eval.test_acc),
                    csv_opt(step2.and_then(|r| r.adafgl_acc)),
                    step2.map_or_else(String::new, |r| r.best_epoch.to_string()),
                );
            }
        }
        s
    }
}

/// Runs every seed in parallel. Failed seeds are recorded, not fatal.
pub fn train(cfg: &ExperimentConfig, task: &FederatedTask) -> TrainOutput {
    let outcomes: Vec<(u64, Result<SeedRun>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| (seed, run_seed(task, cfg, seed)))
        .collect();
    let mut runs = Vec::new();
    let mut failed = Vec::new();
    for (seed, r) in outcomes {
        match r {
            Ok(run) => runs.push(run),
            Err(e) => failed.push(SeedFailure {
                seed,
                error: format!("{e:#}"),
            }),
        }
    }
    let fedgcn = Summary::of(runs.iter().filter_map(|r| r.fedgcn_acc).collect());
    let adafgl = match cfg.method {
        Method::Fedgcn => None,
        Method::Adafgl => Summary::of(runs.iter().filter_map(|r| r.adafgl_acc).collect()),
    };
    TrainOutput {
        results: Results {
            method: cfg.method,
            strategy: task.strategy,
            num_clients: task.num_clients(),
            seeds: cfg.seeds.clone(),
            fedgcn,
            adafgl,
            failed,
        },
        runs,
    }
}

/// Trains and writes `results.json`, `curves.csv`, `clients.csv` and
/// `config.json` under `out`. Outputs are flushed before a failure is reported.
pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> Result<TrainOutput> {
    cfg.validate()?;
    let task = build_task(cfg)?;
    prepare_out(out, cfg)?;
    let output = train(cfg, &task);
    write_file(&out.join("results.json"), &output.results_json())?;
    write_file(&out.join("curves.csv"), &output.curves_csv())?;
    write_file(&out.join("clients.csv"), &output.clients_csv(&task))?;
    if let Some(f) = output.results.failed.first() {
        bail!(
            "{} of {} seeds failed; first (seed {}): {}",
            output.results.failed.len(),
            cfg.seeds.len(),
            f.seed,
            f.error
        );
    }
    Ok(output)
}

/// Output directory from the flag or the config.
pub fn resolve_out(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> Result<PathBuf> {
    flag.or_else(|| cfg.out.clone())
        .ok_or_else(|| ValidationError("no output directory: pass --out or set \"out\"".into()).into())
}
