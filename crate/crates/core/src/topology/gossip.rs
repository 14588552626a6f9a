use nalgebra::DMatrix;

use super::{Graph, TopologyError};

const TOL: f64 = 1e-12;

/// Metropolis–Hastings weights: `1 / (1 + max(deg_i, deg_j))` on edges,
/// diagonal fills each row up to one.
pub fn metropolis_weights(graph: &Graph) -> DMatrix<f64> {
    let m = graph.agents();
    let mut w = DMatrix::zeros(m, m);
    for &(i, j) in graph.edges() {
        let v = 1.0 / (1.0 + graph.degree(i).max(graph.degree(j)) as f64);
        w[(i, j)] = v;
        w[(j, i)] = v;
    }
    for i in 0..m {
        let off: f64 = (0..m).filter(|&j| j != i).map(|j| w[(i, j)]).sum();
        w[(i, i)] = 1.0 - off;
    }
    w
}

/// Doubly stochastic mixing matrices `W̃` and `W = (1 - c) I + c W̃`
/// attached to the graph they comply with.
#[derive(Debug, Clone)]
pub struct GossipMatrix {
    graph: Graph,
    w_tilde: DMatrix<f64>,
    c: f64,
    w: DMatrix<f64>,
}

impl GossipMatrix {
    /// Validates `w_tilde` against the graph and forms the lazy matrix `W`.
    pub fn new(graph: Graph, w_tilde: DMatrix<f64>, c: f64) -> Result<Self, TopologyError> {
        if !(c > 0.0 && c <= 0.5) {
            return Err(TopologyError::InvalidMixing(c));
        }
        check_compliance(&graph, &w_tilde)?;
        let w = lazy_mixing(&w_tilde, c);
        Ok(Self {
            graph,
            w_tilde,
            c,
            w,
        })
    }

    /// Metropolis weights on `graph` mixed with coefficient `c`.
    pub fn metropolis(graph: Graph, c: f64) -> Result<Self, TopologyError> {
        let w_tilde = metropolis_weights(&graph);
        Self::new(graph, w_tilde, c)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn w_tilde(&self) -> &DMatrix<f64> {
        &self.w_tilde
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn agents(&self) -> usize {
        self.graph.agents()
    }
}

/// `(1 - c) I + c W̃` without any range check on `c`.
pub(crate) fn lazy_mixing(w_tilde: &DMatrix<f64>, c: f64) -> DMatrix<f64> {
    let m = w_tilde.nrows();
    DMatrix::identity(m, m) * (1.0 - c) + w_tilde * c
}

fn check_compliance(graph: &Graph, w: &DMatrix<f64>) -> Result<(), TopologyError> {
    let m = graph.agents();
    if w.nrows() != m || w.ncols() != m {
        return Err(TopologyError::InvalidGossip(format!(
            "expected {m}x{m}, got {}x{}",
            w.nrows(),
            w.ncols()
        )));
    }
    for i in 0..m {
        let row_sum: f64 = w.row(i).sum();
        if (row_sum - 1.0).abs() > TOL {
            return Err(TopologyError::InvalidGossip(format!(
                "row {i} sums to {row_sum}"
            )));
        }
        for j in 0..m {
            if (w[(i, j)] - w[(j, i)]).abs() > TOL {
                return Err(TopologyError::InvalidGossip(format!(
                    "asymmetric at ({i}, {j})"
                )));
            }
            let linked = i == j || graph.has_edge(i, j);
            if linked != (w[(i, j)] > 0.0) || w[(i, j)] < 0.0 {
                return Err(TopologyError::InvalidGossip(format!(
                    "entry ({i}, {j}) = {} does not match the graph",
                    w[(i, j)]
                )));
            }
        }
    }
    Ok(())
}
