//! Importer for the LINQS citation format (`.content` / `.cites`, optionally gzipped).

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::error::{Error, Result};
use crate::graph::{make_masks, EdgeCleanup, Graph, MaskRatios};
use crate::matrix::DenseMatrix;

fn reader(path: &Path) -> Result<Box<dyn BufRead>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let inner: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(GzDecoder::new(file))
    } else {
        Box::new(file)
    };
    Ok(Box::new(BufReader::new(inner)))
}

/// Counts reported by [`import_linqs`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LinqsReport {
    /// Citation lines naming a paper absent from the content file.
    pub unknown_ids: usize,
    pub cleanup: EdgeCleanup,
}

/// Reads a LINQS dataset. Nodes follow the content file order and class ids
/// follow the alphabetical order of the class names.
pub fn import_linqs(content: &Path, cites: &Path) -> Result<(Graph, Vec<String>, LinqsReport)> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<f64> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut width = None;
    for (no, line) in reader(content)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(content, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() < 3 {
            return Err(Error::format(content, format!("line {}: too few fields", no + 1)));
        }
        let f = fields.len() - 2;
        if *width.get_or_insert(f) != f {
            return Err(Error::format(
                content,
                format!("line {}: {f} features, expected {}", no + 1, width.unwrap_or(0)),
            ));
        }
        for v in &fields[1..=f] {
            rows.push(
                v.parse::<f64>()
                    .map_err(|_| Error::format(content, format!("line {}: bad feature value {v:?}", no + 1)))?,
            );
        }
        if ids.insert(fields[0].to_string(), names.len()).is_some() {
            return Err(Error::format(
                content,
                format!("line {}: duplicate id {}", no + 1, fields[0]),
            ));
        }
        names.push(fields[f + 1].to_string());
    }
    let n = names.len();
    let features = DenseMatrix::from_vec(n, width.unwrap_or(0), rows)?;
    let classes: Vec<String> = names.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let labels = names
        .iter()
        .map(|c| classes.binary_search(c).expect("class collected above"))
        .collect();

    let mut report = LinqsReport::default();
    let mut edges = Vec::new();
    for (no, line) in reader(cites)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(cites, e))?;
        let mut parts = line.split_whitespace();
        let (Some(a), Some(b)) = (parts.next(), parts.next()) else {
            if line.trim().is_empty() {
                continue;
            }
            return Err(Error::format(cites, format!("line {}: expected two ids", no + 1)));
        };
        match (ids.get(a), ids.get(b)) {
            (Some(&u), Some(&v)) => edges.push((u, v)),
            _ => report.unknown_ids += 1,
        }
    }
    if report.unknown_ids > 0 {
        log::warn!(
            "{}: skipped {} citation(s) with unknown ids",
            cites.display(),
            report.unknown_ids
        );
    }
    let (graph, cleanup) = Graph::from_edges_with_report(&edges, features, labels, classes.len())?;
    report.cleanup = cleanup;
    Ok((graph, classes, report))
}

/// Imports a LINQS dataset directory holding `<name>.content[.gz]` and
/// `<name>.cites[.gz]`, optionally row-normalizes features and draws masks.
pub fn load_dataset(dir: &Path, name: &str, ratios: MaskRatios, normalize: bool, seed: u64) -> Result<Graph> {
    let pick = |ext: &str| {
        let gz = dir.join(format!("{name}.{ext}.gz"));
        if gz.exists() {
            gz
        } else {
            dir.join(format!("{name}.{ext}"))
        }
    };
    let (g, _, _) = import_linqs(&pick("content"), &pick("cites"))?;
    let g = if normalize { g.with_row_normalized_features() } else { g };
    make_masks(&g, ratios, seed)
}
