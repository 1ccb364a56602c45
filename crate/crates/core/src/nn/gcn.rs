use std::ops::Range;

use ndarray::{s, Array2, ArrayView2, Zip};

/// A batch of star graphs stacked node-wise. Within each graph node 0 is the
/// central node and nodes `1..=k` are the outer nodes.
///
/// Propagation uses the symmetric-normalized adjacency with self-loops,
/// `D^{-1/2} (A + I) D^{-1/2}`, evaluated in O(nodes) thanks to the star
/// topology: the central node has degree `k + 1`, every outer node degree 2.
#[derive(Debug, Clone, PartialEq)]
pub struct StarBatch {
    starts: Vec<usize>,
    sizes: Vec<usize>,
}

impl StarBatch {
    /// `outer_counts[g]` is the number of outer nodes of graph `g`.
    pub fn new(outer_counts: &[usize]) -> Self {
        let mut starts = Vec::with_capacity(outer_counts.len());
        let mut sizes = Vec::with_capacity(outer_counts.len());
        let mut offset = 0;
        for &k in outer_counts {
            starts.push(offset);
            sizes.push(k + 1);
            offset += k + 1;
        }
        Self { starts, sizes }
    }

    pub fn n_graphs(&self) -> usize {
        self.starts.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.starts.last().zip(self.sizes.last()).map_or(0, |(s, n)| s + n)
    }

    pub fn nodes(&self, g: usize) -> Range<usize> {
        self.starts[g]..self.starts[g] + self.sizes[g]
    }

    pub fn central(&self, g: usize) -> usize {
        self.starts[g]
    }

    /// Computes `Â · h` for every graph in the batch.
    pub fn propagate(&self, h: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(h.raw_dim());
        for g in 0..self.n_graphs() {
            let range = self.nodes(g);
            let k = range.len() - 1;
            let c = range.start;
            let spoke = 1.0 / (2.0 * (k as f64 + 1.0)).sqrt();
            let self_c = 1.0 / (k as f64 + 1.0);
            let outer = h.slice(s![c + 1..range.end, ..]);
            let centre_in = h.row(c);

            let mut centre_out = out.row_mut(c);
            Zip::from(&mut centre_out)
                .and(&centre_in)
                .for_each(|o, &x| *o = self_c * x);
            for row in outer.rows() {
                Zip::from(&mut centre_out).and(&row).for_each(|o, &x| *o += spoke * x);
            }
            let mut outer_out = out.slice_mut(s![c + 1..range.end, ..]);
            for (mut o_row, x_row) in outer_out.rows_mut().into_iter().zip(outer.rows()) {
                Zip::from(&mut o_row)
                    .and(&x_row)
                    .and(&centre_in)
                    .for_each(|o, &x, &xc| *o = 0.5 * x + spoke * xc);
            }
        }
        out
    }

    /// Dense normalized adjacency of graph `g` (reference form of [`propagate`](Self::propagate)).
    pub fn normalized_adjacency(&self, g: usize) -> Array2<f64> {
        let n = self.sizes[g];
        let k = n - 1;
        let mut a = Array2::zeros((n, n));
        a[[0, 0]] = 1.0 / (k as f64 + 1.0);
        let spoke = 1.0 / (2.0 * (k as f64 + 1.0)).sqrt();
        for j in 1..n {
            a[[0, j]] = spoke;
            a[[j, 0]] = spoke;
            a[[j, j]] = 0.5;
        }
        a
    }

    /// Structure reconstruction target of graph `g`: star adjacency with self-loops.
    pub fn adjacency_target(&self, g: usize) -> Array2<f64> {
        let n = self.sizes[g];
        let mut a = Array2::eye(n);
        for j in 1..n {
            a[[0, j]] = 1.0;
            a[[j, 0]] = 1.0;
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn propagate_matches_dense_adjacency() {
        let batch = StarBatch::new(&[1, 3, 2]);
        assert_eq!(batch.n_nodes(), 9);
        let h = Array2::from_shape_fn((9, 2), |(i, j)| (i * 3 + j) as f64 * 0.37 - 1.0);
        let fast = batch.propagate(h.view());
        for g in 0..batch.n_graphs() {
            let r = batch.nodes(g);
            let dense = batch.normalized_adjacency(g).dot(&h.slice(s![r.clone(), ..]));
            let got = fast.slice(s![r, ..]);
            for (a, b) in dense.iter().zip(got.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn normalized_adjacency_is_symmetric_with_unit_spectral_radius_rows() {
        let batch = StarBatch::new(&[4]);
        let a = batch.normalized_adjacency(0);
        assert_eq!(a, a.t());
        // D^{-1/2}(A+I)D^{-1/2} applied to sqrt(degree) returns it unchanged.
        let d = ndarray::array![5f64.sqrt(), 2f64.sqrt(), 2f64.sqrt(), 2f64.sqrt(), 2f64.sqrt()];
        let ad = a.dot(&d);
        for (x, y) in ad.iter().zip(d.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
