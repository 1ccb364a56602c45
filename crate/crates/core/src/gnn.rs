//! Self-supervised single-layer GCN over star graphs.
//!
//! A graph embedding is `ReLU(W · agg + b)` where `agg` aggregates the outer
//! node features. On a star graph with a zero central node this is exactly
//! what one spatial convolution at the central node computes, up to the
//! aggregation normalization. The layer is trained on random graph pairs to
//! make the Euclidean distance between embeddings match a CMP-derived target.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cmp::{Cmp, ContextMeasures};
use crate::detectors::ScoreSeries;
use crate::error::{check_dim, Error, Result};
use crate::graphs::{ContextGraph, GraphStream};
use crate::nn::{
    dropout_mask, fit, seed_stream, Activation, DenseLayer, Differentiable, FitConfig, FitReport, Gradients, Mode,
    Parameterized, SeedStream,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphDistance {
    /// Difference of CMP energies (Frobenius norms).
    Energy,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMetric {
    Cosine,
    Euclidean,
    Chebyshev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Mean,
    Sum,
}

impl std::str::FromStr for GraphDistance {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "energy" | "euclidean" | "euclidean-energy" => Ok(Self::Energy),
            "entropy" => Ok(Self::Entropy),
            _ => Err(format!("unknown graph distance `{s}` (energy, entropy)")),
        }
    }
}

impl std::str::FromStr for EmbeddingMetric {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "cosine" => Ok(Self::Cosine),
            "euclidean" => Ok(Self::Euclidean),
            "chebyshev" => Ok(Self::Chebyshev),
            _ => Err(format!("unknown embedding metric `{s}` (cosine, euclidean, chebyshev)")),
        }
    }
}

impl std::str::FromStr for Aggregation {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(Self::Mean),
            "sum" => Ok(Self::Sum),
            _ => Err(format!("unknown aggregation `{s}` (mean, sum)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_pairs: usize,
    pub epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub graph_distance: GraphDistance,
    pub embedding_metric: EmbeddingMetric,
    pub embedding_dim: usize,
    pub dropout: f64,
    pub aggregation: Aggregation,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_pairs: 75,
            epochs: 50,
            patience: 10,
            learning_rate: 1e-2,
            graph_distance: GraphDistance::Energy,
            embedding_metric: EmbeddingMetric::Cosine,
            embedding_dim: 128,
            dropout: 0.0,
            aggregation: Aggregation::Mean,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_pairs == 0 {
            return Err(Error::config("n_pairs", "must be >= 1"));
        }
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be >= 1"));
        }
        if self.patience > self.epochs {
            return Err(Error::config("patience", "must not exceed epochs"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("learning_rate", "must be a positive number"));
        }
        if self.embedding_dim == 0 {
            return Err(Error::config("embedding_dim", "must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("dropout", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnEmbedder {
    pub layer: DenseLayer,
    pub dropout: f64,
    pub aggregation: Aggregation,
}

/// Column-wise aggregate of the outer features. Each column is summed in
/// sorted order so the result does not depend on node order at all.
pub fn aggregate(graph: &ContextGraph, aggregation: Aggregation) -> Array1<f64> {
    let n = graph.n_outer();
    let mut out = Array1::zeros(graph.n_features());
    let mut column = Vec::with_capacity(n);
    for (f, col) in graph.outer_features.columns().into_iter().enumerate() {
        column.clear();
        column.extend(col.iter().copied());
        column.sort_by(f64::total_cmp);
        let sum: f64 = column.iter().sum();
        out[f] = match aggregation {
            Aggregation::Mean if n > 0 => sum / n as f64,
            _ => sum,
        };
    }
    out
}

impl GcnEmbedder {
    pub fn init(in_dim: usize, cfg: &TrainConfig, rng: &mut SeedStream) -> Self {
        Self {
            layer: DenseLayer::init(in_dim, cfg.embedding_dim, Activation::ReLU, rng),
            dropout: cfg.dropout,
            aggregation: cfg.aggregation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.layer.in_dim()
    }

    pub fn embedding_dim(&self) -> usize {
        self.layer.out_dim()
    }

    /// Graph embedding. In train mode dropout is applied to the aggregated input
    /// using `rng`; infer mode never draws.
    pub fn embed(&self, graph: &ContextGraph, mode: Mode, rng: &mut SeedStream) -> Result<Array1<f64>> {
        check_dim("gcn input features", self.in_dim(), graph.n_features())?;
        let mut a = aggregate(graph, self.aggregation);
        if mode == Mode::Train && self.dropout > 0.0 {
            a *= &dropout_mask(a.len(), self.dropout, rng)?;
        }
        self.layer.forward(a.view())
    }

    /// Inference embedding (no randomness).
    pub fn embed_infer(&self, graph: &ContextGraph) -> Result<Array1<f64>> {
        check_dim("gcn input features", self.in_dim(), graph.n_features())?;
        self.layer.forward(aggregate(graph, self.aggregation).view())
    }
}

impl Parameterized for GcnEmbedder {
    fn params(&self) -> Vec<(String, &[f64])> {
        self.layer.params()
    }

    fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
        self.layer.params_mut()
    }
}

/// Per-feature energy and entropy of every leading CMP submatrix.
#[derive(Debug, Clone)]
pub struct PairTargets {
    measures: Vec<ContextMeasures>,
    kind: GraphDistance,
}

impl PairTargets {
    pub fn new(cmp: &Cmp, kind: GraphDistance) -> Self {
        let dmax = cmp.max_distance();
        Self {
            measures: cmp.matrices.iter().map(|m| ContextMeasures::new(m, dmax)).collect(),
            kind,
        }
    }

    /// Mean over features of the absolute measure difference between the
    /// submatrices up to (and including) contexts `i` and `j`.
    pub fn target(&self, i: usize, j: usize) -> f64 {
        if self.measures.is_empty() {
            return 0.0;
        }
        let total: f64 = self
            .measures
            .iter()
            .map(|m| {
                let v = match self.kind {
                    GraphDistance::Energy => &m.energy,
                    GraphDistance::Entropy => &m.entropy,
                };
                (v[i] - v[j]).abs()
            })
            .sum();
        total / self.measures.len() as f64
    }
}

pub fn pair_target(cmp: &Cmp, i: usize, j: usize, kind: GraphDistance) -> Result<f64> {
    let c = cmp.n_contexts();
    if i >= c || j >= c {
        return Err(Error::invalid(format!(
            "context pair ({i}, {j}) out of range for {c} contexts"
        )));
    }
    Ok(PairTargets::new(cmp, kind).target(i, j))
}

/// Mean squared pair loss and its parameter gradients.
///
/// `inputs` holds one aggregated (and possibly dropped-out) row per graph.
pub fn pair_loss_and_gradients(
    model: &GcnEmbedder,
    inputs: &Array2<f64>,
    pairs: &[(usize, usize)],
    targets: &[f64],
) -> Result<(f64, Gradients)> {
    check_dim("pair targets", pairs.len(), targets.len())?;
    let (pre, h) = model.layer.forward_batch(inputs.view())?;
    let p = pairs.len() as f64;
    let mut grad_h = Array2::zeros(h.raw_dim());
    let mut total = 0.0;
    for (&(a, b), &t) in pairs.iter().zip(targets) {
        let diff = &h.row(a) - &h.row(b);
        let d = diff.dot(&diff).sqrt();
        total += (d - t) * (d - t);
        if d > 0.0 {
            let coeff = 2.0 * (d - t) / (p * d);
            grad_h.row_mut(a).scaled_add(coeff, &diff);
            grad_h.row_mut(b).scaled_add(-coeff, &diff);
        }
    }
    let (_, grads) = model.layer.backward_batch(inputs.view(), pre.view(), grad_h.view());
    Ok((total / p, grads.into_blocks(model.layer.use_bias)))
}

/// The pair loss over fixed inputs, packaged for gradient checking.
#[derive(Debug, Clone)]
pub struct PairObjective {
    pub model: GcnEmbedder,
    pub inputs: Array2<f64>,
    pub pairs: Vec<(usize, usize)>,
    pub targets: Vec<f64>,
}

impl Parameterized for PairObjective {
    fn params(&self) -> Vec<(String, &[f64])> {
        self.model.params()
    }

    fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
        self.model.params_mut()
    }
}

impl Differentiable for PairObjective {
    fn loss(&self) -> f64 {
        self.loss_and_gradients().0
    }

    fn loss_and_gradients(&self) -> (f64, Gradients) {
        pair_loss_and_gradients(&self.model, &self.inputs, &self.pairs, &self.targets).expect("consistent shapes")
    }
}

pub type TrainReport = FitReport;

/// Samples `n` ordered pairs of distinct positions in `0..len`.
pub fn sample_pairs(len: usize, n: usize, rng: &mut SeedStream) -> Vec<(usize, usize)> {
    (0..n)
        .map(|_| {
            let a = rng.random_range(0..len);
            let mut b = rng.random_range(0..len - 1);
            if b >= a {
                b += 1;
            }
            (a, b)
        })
        .collect()
}

/// Full-batch Adam on random graph pairs with early stopping on training loss.
/// Returns the model at its best evaluated epoch.
pub fn train_embedder(stream: &GraphStream, cmp: &Cmp, cfg: &TrainConfig) -> Result<(GcnEmbedder, TrainReport)> {
    cfg.validate()?;
    if stream.len() < 2 {
        return Err(Error::invalid("training needs at least two graphs"));
    }
    check_dim("graph features", cmp.n_features(), stream.n_features())?;
    let mut rng = seed_stream(cfg.seed);
    let mut model = GcnEmbedder::init(stream.n_features(), cfg, &mut rng);
    let pairs = sample_pairs(stream.len(), cfg.n_pairs, &mut rng);
    let targets_src = PairTargets::new(cmp, cfg.graph_distance);
    let targets: Vec<f64> = pairs
        .iter()
        .map(|&(a, b)| targets_src.target(stream.graphs[a].context_index, stream.graphs[b].context_index))
        .collect();

    let (n, f) = (stream.len(), stream.n_features());
    let mut clean = Array2::zeros((n, f));
    for (g, graph) in stream.graphs.iter().enumerate() {
        clean.row_mut(g).assign(&aggregate(graph, cfg.aggregation));
    }
    let fit_cfg = FitConfig {
        epochs: cfg.epochs,
        patience: cfg.patience,
        learning_rate: cfg.learning_rate,
    };
    let report = fit(&mut model, &fit_cfg, |m, _| {
        if cfg.dropout > 0.0 {
            let dropped = &clean * &dropout_mask::<ndarray::Ix2, _>((n, f), cfg.dropout, &mut rng)?;
            pair_loss_and_gradients(m, &dropped, &pairs, &targets)
        } else {
            pair_loss_and_gradients(m, &clean, &pairs, &targets)
        }
    })?;
    log::debug!(
        "gcn training: initial {:.4}, best {:.4} at epoch {}",
        report.initial_loss(),
        report.best_loss,
        report.best_epoch
    );
    Ok((model, report))
}

fn euclidean(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn embedding_distance(a: ArrayView1<f64>, b: ArrayView1<f64>, metric: EmbeddingMetric) -> f64 {
    match metric {
        EmbeddingMetric::Euclidean => euclidean(a, b),
        EmbeddingMetric::Chebyshev => a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
        EmbeddingMetric::Cosine => {
            let na = a.dot(&a).sqrt();
            let nb = b.dot(&b).sqrt();
            match (na == 0.0, nb == 0.0) {
                (true, true) => 0.0,
                (true, false) | (false, true) => 1.0,
                _ => 1.0 - a.dot(&b) / (na * nb),
            }
        }
    }
}

/// Distance between consecutive graph embeddings; the first graph of the
/// stream has no predecessor and gets no score.
pub fn embedding_deltas(
    model: &GcnEmbedder,
    stream: &GraphStream,
    metric: EmbeddingMetric,
    subject_id: &str,
) -> Result<ScoreSeries> {
    let embeddings = stream
        .graphs
        .iter()
        .map(|g| model.embed_infer(g))
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<f64> = embeddings
        .windows(2)
        .map(|w| embedding_distance(w[0].view(), w[1].view(), metric))
        .collect();
    let indices = stream.graphs.iter().skip(1).map(|g| g.context_index).collect();
    ScoreSeries::new(subject_id, "gnn", indices, scores)
}

pub const CHECKPOINT_FORMAT: &str = "cmpgraph-gcn-embedder/1";

/// JSON checkpoint layout: weights are stored row-major as `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GcnCheckpoint {
    pub format: String,
    pub in_dim: usize,
    pub embedding_dim: usize,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub aggregation: Aggregation,
    pub dropout: f64,
    pub config: TrainConfig,
    pub report: Option<TrainReport>,
}

impl GcnCheckpoint {
    pub fn new(model: &GcnEmbedder, config: &TrainConfig, report: Option<&TrainReport>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            in_dim: model.in_dim(),
            embedding_dim: model.embedding_dim(),
            weights: model.layer.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
            bias: model.layer.bias.to_vec(),
            aggregation: model.aggregation,
            dropout: model.dropout,
            config: config.clone(),
            report: report.cloned(),
        }
    }

    pub fn model(&self) -> Result<GcnEmbedder> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::invalid(format!(
                "unsupported checkpoint format `{}`",
                self.format
            )));
        }
        check_dim("checkpoint rows", self.embedding_dim, self.weights.len())?;
        let flat: Vec<f64> = self.weights.iter().flatten().copied().collect();
        check_dim("checkpoint weights", self.embedding_dim * self.in_dim, flat.len())?;
        let w = Array2::from_shape_vec((self.embedding_dim, self.in_dim), flat)
            .map_err(|e| Error::invalid(e.to_string()))?;
        Ok(GcnEmbedder {
            layer: DenseLayer::new(w, Array1::from(self.bias.clone()), Activation::ReLU)?,
            dropout: self.dropout,
            aggregation: self.aggregation,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmp::CmpConfig;
    use crate::graphs::build_stream;
    use crate::nn::grad_check;
    use ndarray::{array, Axis};

    fn graph(rows: Array2<f64>) -> ContextGraph {
        ContextGraph {
            context_index: rows.nrows(),
            first_outer: 0,
            outer_features: rows,
        }
    }

    fn identity_model() -> GcnEmbedder {
        GcnEmbedder {
            layer: DenseLayer::new(Array2::eye(2), Array1::zeros(2), Activation::ReLU).unwrap(),
            dropout: 0.0,
            aggregation: Aggregation::Mean,
        }
    }

    #[test]
    fn embed_examples() {
        let m = identity_model();
        let mut rng = seed_stream(0);
        let e = m
            .embed(&graph(array![[1.0, 0.0], [0.0, 1.0]]), Mode::Infer, &mut rng)
            .unwrap();
        assert_eq!(e, array![0.5, 0.5]);
        let z = m.embed(&graph(Array2::zeros((3, 2))), Mode::Infer, &mut rng).unwrap();
        assert_eq!(z, array![0.0, 0.0]);
        assert!(m.embed(&graph(Array2::zeros((3, 3))), Mode::Infer, &mut rng).is_err());
    }

    #[test]
    fn permutation_is_exact() {
        let mut rng = seed_stream(3);
        let cfg = TrainConfig {
            embedding_dim: 8,
            ..TrainConfig::default()
        };
        let m = GcnEmbedder::init(3, &cfg, &mut rng);
        let rows = Array2::from_shape_fn((7, 3), |(i, j)| ((i * 7 + j * 3) as f64).sin() * 1.7 + 0.1);
        let base = m.embed_infer(&graph(rows.clone())).unwrap();
        let mut order: Vec<usize> = (0..7).collect();
        order.reverse();
        order.swap(1, 4);
        let permuted = rows.select(Axis(0), &order);
        assert_eq!(m.embed_infer(&graph(permuted)).unwrap(), base);
    }

    #[test]
    fn metrics() {
        let a = array![0.0, 0.0];
        let b = array![3.0, 4.0];
        assert_eq!(embedding_distance(a.view(), b.view(), EmbeddingMetric::Euclidean), 5.0);
        assert_eq!(embedding_distance(a.view(), b.view(), EmbeddingMetric::Chebyshev), 4.0);
        assert_eq!(embedding_distance(a.view(), b.view(), EmbeddingMetric::Cosine), 1.0);
        assert_eq!(embedding_distance(a.view(), a.view(), EmbeddingMetric::Cosine), 0.0);
        let x = array![1.0, 0.0];
        let y = array![0.0, 2.0];
        assert_eq!(embedding_distance(x.view(), y.view(), EmbeddingMetric::Cosine), 1.0);
        for metric in [
            EmbeddingMetric::Cosine,
            EmbeddingMetric::Euclidean,
            EmbeddingMetric::Chebyshev,
        ] {
            assert_eq!(embedding_distance(b.view(), b.view(), metric), 0.0);
        }
    }

    #[test]
    fn pair_target_examples() {
        let m = array![[0.0, 3.0], [3.0, 0.0]];
        let cmp = Cmp::from_matrices(CmpConfig::default(), vec!["f".into()], vec![m]).unwrap();
        assert!((pair_target(&cmp, 0, 1, GraphDistance::Energy).unwrap() - 18f64.sqrt()).abs() < 1e-12);
        assert_eq!(pair_target(&cmp, 1, 1, GraphDistance::Energy).unwrap(), 0.0);
        assert_eq!(pair_target(&cmp, 1, 1, GraphDistance::Entropy).unwrap(), 0.0);
        assert_eq!(
            pair_target(&cmp, 1, 0, GraphDistance::Energy).unwrap(),
            pair_target(&cmp, 0, 1, GraphDistance::Energy).unwrap()
        );
        assert!(pair_target(&cmp, 0, 2, GraphDistance::Energy).is_err());
    }

    fn toy_cmp(c: usize, f: usize) -> Cmp {
        let mats = (0..f)
            .map(|k| {
                Array2::from_shape_fn((c, c), |(i, j)| {
                    if i == j {
                        0.0
                    } else {
                        ((i * j + k * 5 + i + j) % 7) as f64 * 0.4 + 0.05
                    }
                })
            })
            .collect();
        Cmp::from_matrices(CmpConfig::default(), (0..f).map(|k| format!("f{k}")).collect(), mats).unwrap()
    }

    #[test]
    fn pair_loss_gradients() {
        let cmp = toy_cmp(8, 3);
        let stream = build_stream(&cmp, 1, None).unwrap();
        let cfg = TrainConfig {
            embedding_dim: 4,
            n_pairs: 6,
            ..TrainConfig::default()
        };
        let mut rng = seed_stream(11);
        let model = GcnEmbedder::init(3, &cfg, &mut rng);
        let pairs = sample_pairs(stream.len(), cfg.n_pairs, &mut rng);
        let targets: Vec<f64> = pairs.iter().map(|&(a, b)| 0.3 * (a as f64 - b as f64).abs()).collect();
        let inputs = Array2::from_shape_fn((stream.len(), 3), |(g, f)| {
            aggregate(&stream.graphs[g], Aggregation::Mean)[f]
        });
        let mut obj = PairObjective {
            model,
            inputs,
            pairs,
            targets,
        };
        let report = grad_check(&mut obj, 1e-4);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn zero_targets_drive_loss_down() {
        let c = 10;
        let m = Array2::from_elem((c, c), 1.0);
        let cmp = Cmp::from_matrices(CmpConfig::default(), vec!["f".into()], vec![m]).unwrap();
        let cfg = TrainConfig {
            graph_distance: GraphDistance::Entropy,
            embedding_dim: 8,
            epochs: 200,
            patience: 200,
            seed: 5,
            ..TrainConfig::default()
        };
        let stream = build_stream(&cmp, 1, None).unwrap();
        let (_, report) = train_embedder(&stream, &cmp, &cfg).unwrap();
        assert!(report.best_loss < 1e-6, "{report:?}");
    }

    #[test]
    fn training_is_deterministic_and_improves() {
        let cmp = toy_cmp(30, 3);
        let stream = build_stream(&cmp, 2, None).unwrap();
        let cfg = TrainConfig {
            embedding_dim: 16,
            seed: 9,
            ..TrainConfig::default()
        };
        let (a, ra) = train_embedder(&stream, &cmp, &cfg).unwrap();
        let (b, rb) = train_embedder(&stream, &cmp, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert!(ra.best_loss < ra.initial_loss());
        assert_eq!(ra.best_loss, ra.loss_trace[ra.best_epoch]);
        assert!(ra.loss_trace[..ra.best_epoch].iter().all(|&l| l >= ra.best_loss));
    }

    #[test]
    fn deltas_skip_first_graph() {
        let cmp = toy_cmp(12, 2);
        let stream = build_stream(&cmp, 2, None).unwrap();
        let mut rng = seed_stream(1);
        let model = GcnEmbedder::init(2, &TrainConfig::default(), &mut rng);
        let s = embedding_deltas(&model, &stream, EmbeddingMetric::Euclidean, "S").unwrap();
        assert_eq!(s.context_indices, (3..12).collect::<Vec<_>>());
        assert!(s.scores.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = seed_stream(2);
        let cfg = TrainConfig {
            embedding_dim: 5,
            ..TrainConfig::default()
        };
        let model = GcnEmbedder::init(3, &cfg, &mut rng);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("gcn.json");
        GcnCheckpoint::new(&model, &cfg, None).write(&p).unwrap();
        assert_eq!(GcnCheckpoint::read(&p).unwrap().model().unwrap(), model);
    }
}
