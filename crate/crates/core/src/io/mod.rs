//! On-disk formats.
//!
//! A graph directory holds:
//!
//! - `edges.tsv`: one undirected edge `u<TAB>v` per line
//! - `features.bin`: `n` and `f` as little-endian `u64`, then `n·f` little-endian `f64`, row-major
//! - `labels.txt`: one class id per line
//! - `masks.txt` (optional): `train`, `val`, `test` or `none` per line
//!
//! A task directory holds `manifest.json` and one graph directory per
//! client, named `client_<id>`.

mod linqs;

pub use linqs::{import_linqs, load_dataset, LinqsReport};

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeCleanup, Graph, Split};
use crate::matrix::DenseMatrix;
use crate::partition::{ClientSubgraph, FederatedTask, InjectionRecord, Strategy};

pub use crate::graph::{make_masks, MaskRatios};

pub const EDGES_FILE: &str = "edges.tsv";
pub const FEATURES_FILE: &str = "features.bin";
pub const LABELS_FILE: &str = "labels.txt";
pub const MASKS_FILE: &str = "masks.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    Ok(BufWriter::new(fs::File::create(path).map_err(|e| Error::io(path, e))?))
}

fn lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let reader = BufReader::new(open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if !t.is_empty() && !t.starts_with('#') {
            out.push((i + 1, t.to_string()));
        }
    }
    Ok(out)
}

fn read_edges(path: &Path) -> Result<Vec<(usize, usize)>> {
    lines(path)?
        .into_iter()
        .map(|(no, line)| {
            let mut parts = line.split_whitespace();
            let mut next = || {
                parts
                    .next()
                    .and_then(|p| p.parse::<usize>().ok())
                    .ok_or_else(|| Error::format(path, format!("line {no}: expected `u<TAB>v`, got {line:?}")))
            };
            Ok((next()?, next()?))
        })
        .collect()
}

fn read_features(path: &Path) -> Result<DenseMatrix> {
    let mut bytes = Vec::new();
    open(path)?.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 {
        return Err(Error::format(path, "shorter than the 16-byte header"));
    }
    let word = |i: usize| u64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().expect("8 bytes"));
    let (n, f) = (word(0) as usize, word(1) as usize);
    let expected = n
        .checked_mul(f)
        .and_then(|c| c.checked_mul(8))
        .and_then(|c| c.checked_add(16))
        .ok_or_else(|| Error::format(path, "header sizes overflow"))?;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            format!(
                "header says {n}x{f} ({expected} bytes) but file has {} bytes",
                bytes.len()
            ),
        ));
    }
    let data = bytes[16..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    DenseMatrix::from_vec(n, f, data)
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    lines(path)?
        .into_iter()
        .map(|(no, line)| {
            line.parse::<usize>()
                .map_err(|_| Error::format(path, format!("line {no}: {line:?} is not a class id")))
        })
        .collect()
}

fn read_masks(path: &Path) -> Result<Vec<Split>> {
    lines(path)?
        .into_iter()
        .map(|(no, line)| {
            Split::parse(&line)
                .ok_or_else(|| Error::format(path, format!("line {no}: expected train/val/test/none, got {line:?}")))
        })
        .collect()
}

/// Loads a graph directory. `num_classes` overrides the class count implied
/// by the labels (needed when a subgraph lacks the highest class).
pub fn load_graph_with_report(dir: &Path, num_classes: Option<usize>) -> Result<(Graph, EdgeCleanup)> {
    let edges = read_edges(&dir.join(EDGES_FILE))?;
    let features = read_features(&dir.join(FEATURES_FILE))?;
    let labels_path = dir.join(LABELS_FILE);
    let labels = read_labels(&labels_path)?;
    if labels.len() != features.rows() {
        return Err(Error::format(
            &labels_path,
            format!("{} labels but {} feature rows", labels.len(), features.rows()),
        ));
    }
    let implied = labels.iter().max().map_or(0, |m| m + 1);
    let classes = num_classes.unwrap_or(implied);
    if implied > classes {
        return Err(Error::format(
            &labels_path,
            format!("label {} out of range for {classes} classes", implied - 1),
        ));
    }
    let n = labels.len();
    if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= n || v >= n) {
        return Err(Error::format(
            dir.join(EDGES_FILE),
            format!("edge ({u}, {v}) out of range for {n} nodes"),
        ));
    }
    let (mut graph, report) = Graph::from_edges_with_report(&edges, features, labels, classes)?;
    if report.self_loops > 0 || report.duplicates > 0 {
        log::info!(
            "{}: dropped {} self-loop(s) and {} duplicate edge(s)",
            dir.display(),
            report.self_loops,
            report.duplicates
        );
    }
    let masks_path = dir.join(MASKS_FILE);
    if masks_path.exists() {
        let split = read_masks(&masks_path)?;
        if split.len() != n {
            return Err(Error::format(
                &masks_path,
                format!("{} entries for {n} nodes", split.len()),
            ));
        }
        graph = graph.with_split(split)?;
    }
    Ok((graph, report))
}

pub fn load_graph(dir: &Path) -> Result<Graph> {
    Ok(load_graph_with_report(dir, None)?.0)
}

/// Writes a graph directory; `masks.txt` is written only when some node has a split.
pub fn write_graph(g: &Graph, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(EDGES_FILE);
    let mut w = create(&path)?;
    for (u, v) in g.edges() {
        writeln!(w, "{u}\t{v}").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(FEATURES_FILE);
    let mut w = create(&path)?;
    let x = g.features();
    let mut buf = Vec::with_capacity(16 + 8 * x.data().len());
    buf.extend_from_slice(&(x.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(x.cols() as u64).to_le_bytes());
    for v in x.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&path, e))?;

    let path = dir.join(LABELS_FILE);
    let mut w = create(&path)?;
    for y in g.labels() {
        writeln!(w, "{y}").map_err(|e| Error::io(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;

    let path = dir.join(MASKS_FILE);
    if g.split().iter().any(|&s| s != Split::None) {
        let mut w = create(&path)?;
        for s in g.split() {
            writeln!(w, "{}", s.as_str()).map_err(|e| Error::io(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
    } else if path.exists() {
        fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClientEntry {
    pub client_id: usize,
    pub dir: String,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub injection: InjectionRecord,
    pub global_ids: Vec<usize>,
}

/// JSON manifest of a task directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskManifest {
    pub strategy: Strategy,
    pub seed: u64,
    pub num_global_nodes: usize,
    pub num_classes: usize,
    pub p_s: Option<f64>,
    pub ratio: Option<f64>,
    pub clients: Vec<ClientEntry>,
}

pub fn client_dir_name(id: usize) -> String {
    format!("client_{id}")
}

pub fn task_manifest(task: &FederatedTask) -> TaskManifest {
    TaskManifest {
        strategy: task.strategy,
        seed: task.seed,
        num_global_nodes: task.num_global_nodes,
        num_classes: task.clients.first().map_or(0, |c| c.graph.num_classes()),
        p_s: task.p_s,
        ratio: task.ratio,
        clients: task
            .clients
            .iter()
            .zip(&task.injection_log)
            .map(|(c, inj)| ClientEntry {
                client_id: c.client_id,
                dir: client_dir_name(c.client_id),
                num_nodes: c.graph.num_nodes(),
                num_edges: c.graph.num_edges(),
                injection: *inj,
                global_ids: c.global_ids.clone(),
            })
            .collect(),
    }
}

pub fn write_task(task: &FederatedTask, dir: &Path) -> Result<()> {
    task.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = task_manifest(task);
    for c in &task.clients {
        write_graph(&c.graph, &dir.join(client_dir_name(c.client_id)))?;
    }
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn load_task(dir: &Path) -> Result<FederatedTask> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: TaskManifest = serde_json::from_str(&text)?;
    let mut clients = Vec::with_capacity(manifest.clients.len());
    let mut log = Vec::with_capacity(manifest.clients.len());
    for entry in &manifest.clients {
        let cdir: PathBuf = dir.join(&entry.dir);
        let (graph, _) = load_graph_with_report(&cdir, Some(manifest.num_classes))?;
        if graph.num_nodes() != entry.global_ids.len() {
            return Err(Error::format(
                &path,
                format!(
                    "client {} lists {} global ids but its graph has {} nodes",
                    entry.client_id,
                    entry.global_ids.len(),
                    graph.num_nodes()
                ),
            ));
        }
        clients.push(ClientSubgraph {
            client_id: entry.client_id,
            graph,
            global_ids: entry.global_ids.clone(),
        });
        log.push(entry.injection);
    }
    let task = FederatedTask {
        strategy: manifest.strategy,
        seed: manifest.seed,
        num_global_nodes: manifest.num_global_nodes,
        p_s: manifest.p_s,
        ratio: manifest.ratio,
        clients,
        injection_log: log,
    };
    task.validate()?;
    Ok(task)
}
