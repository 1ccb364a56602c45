//! Temporal star graphs built from per-feature CMPs.
//!
//! Graph `i` has a central node for context `i` (zero features) and one outer
//! node per previous context `j < i`, carrying `[M_f[i][j] for each feature f]`.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use crate::cmp::Cmp;
use crate::error::{Error, Result};
use crate::nn::StarBatch;

#[derive(Debug, Clone, PartialEq)]
pub struct ContextGraph {
    pub context_index: usize,
    /// Index of the context behind outer row 0 (non-zero only with a history cap).
    pub first_outer: usize,
    /// `n_outer × F`.
    pub outer_features: Array2<f64>,
}

impl ContextGraph {
    pub fn n_outer(&self) -> usize {
        self.outer_features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.outer_features.ncols()
    }

    pub fn central_features(&self) -> Vec<f64> {
        vec![0.0; self.n_features()]
    }

    /// Node attribute matrix with the central node in row 0.
    pub fn node_features(&self) -> Array2<f64> {
        let mut x = Array2::zeros((self.n_outer() + 1, self.n_features()));
        x.slice_mut(s![1.., ..]).assign(&self.outer_features);
        x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphStream {
    pub graphs: Vec<ContextGraph>,
}

impl GraphStream {
    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.graphs.first().map_or(0, ContextGraph::n_features)
    }

    pub fn context_indices(&self) -> Vec<usize> {
        self.graphs.iter().map(|g| g.context_index).collect()
    }

    /// Stacks every graph's nodes (central first) into one batch.
    pub fn batch(&self) -> (StarBatch, Array2<f64>) {
        let counts: Vec<usize> = self.graphs.iter().map(ContextGraph::n_outer).collect();
        let batch = StarBatch::new(&counts);
        let mut x = Array2::zeros((batch.n_nodes(), self.n_features()));
        for (g, graph) in self.graphs.iter().enumerate() {
            let r = batch.nodes(g);
            x.slice_mut(s![r.start + 1..r.end, ..]).assign(&graph.outer_features);
        }
        (batch, x)
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        dump_jsonl(self, &mut out)?;
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Reads a stream written by [`write_jsonl`](Self::write_jsonl). Outer rows
    /// are assumed to cover the trailing contexts `i - n_outer .. i`.
    pub fn read_jsonl(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut graphs = Vec::new();
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let g: GraphLine = serde_json::from_str(&line)?;
            let n = g.outer_features.len();
            let f = g.outer_features.first().map_or(0, Vec::len);
            if g.outer_features.iter().any(|r| r.len() != f) {
                return Err(Error::invalid(format!(
                    "graph {}: ragged outer features",
                    g.context_index
                )));
            }
            let outer_features = Array2::from_shape_vec((n, f), g.outer_features.into_iter().flatten().collect())
                .map_err(|e| Error::invalid(e.to_string()))?;
            graphs.push(ContextGraph {
                context_index: g.context_index,
                first_outer: g.context_index.saturating_sub(n),
                outer_features,
            });
        }
        Ok(Self { graphs })
    }
}

#[derive(Serialize, Deserialize)]
struct GraphLine {
    context_index: usize,
    outer_features: Vec<Vec<f64>>,
}

/// Star graph for context `i`. `max_history` keeps only the most recent
/// previous contexts; `None` keeps all of them.
pub fn build_graph(cmp: &Cmp, i: usize, max_history: Option<usize>) -> Result<ContextGraph> {
    if i == 0 {
        return Err(Error::invalid("context 0 has no previous contexts"));
    }
    let c = cmp.n_contexts();
    if i >= c {
        return Err(Error::invalid(format!("context {i} out of range for {c} contexts")));
    }
    if max_history == Some(0) {
        return Err(Error::config("max_history", "must be >= 1"));
    }
    let first = max_history.map_or(0, |h| i.saturating_sub(h));
    let mut outer = Array2::zeros((i - first, cmp.n_features()));
    for (f, m) in cmp.matrices.iter().enumerate() {
        outer.column_mut(f).assign(&m.slice(s![i, first..i]));
    }
    Ok(ContextGraph {
        context_index: i,
        first_outer: first,
        outer_features: outer,
    })
}

/// Graphs for every context in `[i_min, C)`.
pub fn build_stream(cmp: &Cmp, i_min: usize, max_history: Option<usize>) -> Result<GraphStream> {
    let c = cmp.n_contexts();
    if i_min == 0 || i_min >= c {
        return Err(Error::config(
            "i_min",
            format!("must satisfy 1 <= i_min < {c}, got {i_min}"),
        ));
    }
    let graphs = (i_min..c)
        .map(|i| build_graph(cmp, i, max_history))
        .collect::<Result<Vec<_>>>()?;
    Ok(GraphStream { graphs })
}

/// Writes one JSON object per graph: `{context_index, outer_features}`.
pub fn dump_jsonl(stream: &GraphStream, mut w: impl Write) -> Result<()> {
    for g in &stream.graphs {
        let line = GraphLine {
            context_index: g.context_index,
            outer_features: g.outer_features.rows().into_iter().map(|r| r.to_vec()).collect(),
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n").map_err(|e| Error::io("<graph dump>", e))?;
    }
    Ok(())
}
