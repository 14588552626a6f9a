use nalgebra::DMatrix;

use super::AlgorithmError;
use crate::topology::{GossipMatrix, Graph};

/// Communication counters accumulated by a [`NeighborExchange`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CommStats {
    /// Rounds in which every agent sends a `d`-vector to its neighbors.
    pub vector_rounds: u64,
    /// Rounds in which agents exchange O(1) scalars.
    pub scalar_rounds: u64,
    /// Point-to-point messages, self-deliveries excluded.
    pub messages: u64,
    /// Scalars carried by those messages.
    pub scalars: u64,
}

/// Ledger for neighbor-to-neighbor traffic. Every payload goes through
/// [`NeighborExchange::deliver`], which rejects any hop that is not an
/// edge of the graph (or a self-delivery).
#[derive(Debug, Clone, Default)]
pub struct NeighborExchange {
    stats: CommStats,
}

impl NeighborExchange {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn stats(&self) -> CommStats {
        self.stats
    }

    /// Records one message of `width` scalars from `from` to `to`.
    pub fn deliver(
        &mut self,
        graph: &Graph,
        from: usize,
        to: usize,
        width: usize,
    ) -> Result<(), AlgorithmError> {
        if from == to {
            return Ok(());
        }
        if !graph.has_edge(from, to) {
            return Err(AlgorithmError::Locality { from, to });
        }
        self.stats.messages += 1;
        self.stats.scalars += width as u64;
        Ok(())
    }

    /// One vector gossip round: row `i` of the result is `Σ_{j∈N_i} W_ij x_j`.
    pub fn gossip(&mut self, gm: &GossipMatrix, x: &DMatrix<f64>) -> Result<DMatrix<f64>, AlgorithmError> {
        let graph = gm.graph();
        let w = gm.w();
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for i in 0..graph.agents() {
            for &j in graph.neighborhood(i) {
                self.deliver(graph, j, i, x.ncols())?;
                let wij = w[(i, j)];
                for c in 0..x.ncols() {
                    out[(i, c)] += wij * x[(j, c)];
                }
            }
        }
        self.stats.vector_rounds += 1;
        Ok(out)
    }

    /// One scalar round in which every agent sends `width` scalars to each
    /// neighbor.
    pub fn scalar_round(&mut self, graph: &Graph, width: usize) -> Result<(), AlgorithmError> {
        for i in 0..graph.agents() {
            for &j in graph.neighborhood(i) {
                self.deliver(graph, j, i, width)?;
            }
        }
        self.stats.scalar_rounds += 1;
        Ok(())
    }

    /// Charges a network-wide flooding of one scalar: `rounds` scalar rounds.
    pub fn charge_flooding(&mut self, graph: &Graph, rounds: usize) -> Result<(), AlgorithmError> {
        for _ in 0..rounds {
            self.scalar_round(graph, 1)?;
        }
        Ok(())
    }
}
