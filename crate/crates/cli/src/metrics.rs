//! Per-client graph statistics as CSV.

use std::fmt::Write as _;

use fedgraph_core::graph::{edge_homophily, node_homophily, Graph};

use crate::csv_opt;
use crate::run::Source;

pub const HEADER: &str =
    "client_id,nodes,edges,node_homophily,edge_homophily,min_degree,max_degree,mean_degree,label_histogram\n";

/// One CSV row; the label histogram is `;`-separated counts per class.
pub fn row(client_id: usize, g: &Graph) -> String {
    let n = g.num_nodes();
    let degrees = (0..n).map(|u| g.degree(u));
    let min = degrees.clone().min().unwrap_or(0);
    let max = degrees.max().unwrap_or(0);
    let mean = if n == 0 {
        0.0
    } else {
        2.0 * g.num_edges() as f64 / n as f64
    };
    let nh = node_homophily(g);
    let hist: Vec<String> = g.label_histogram().iter().map(usize::to_string).collect();
    format!(
        "{client_id},{n},{},{},{},{min},{max},{mean},{}\n",
        g.num_edges(),
        csv_opt((!nh.no_edges).then_some(nh.value)),
        csv_opt(edge_homophily(g).ok()),
        hist.join(";")
    )
}

/// A task gives one row per client; a single graph gives one row with id 0.
pub fn metrics_csv(source: &Source) -> String {
    let mut s = String::from(HEADER);
    match source {
        Source::Graph(g) => s.push_str(&row(0, g)),
        Source::Task(t) => {
            for c in &t.clients {
                let _ = write!(s, "{}", row(c.client_id, &c.graph));
            }
        }
    }
    s
}
