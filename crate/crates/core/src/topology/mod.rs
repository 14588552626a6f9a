//! Undirected communication graphs, gossip matrices and their spectral data.
//!
//! Agents are numbered `0..m`. Every agent's closed neighborhood `N_i`
//! contains the agent itself, so a min/max over `N_i` always sees the
//! agent's own value.

mod gossip;
mod spectral;

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gossip::{metropolis_weights, GossipMatrix};
pub use spectral::{spectral_data, SpectralData, PINV_CUTOFF};

/// Number of Erdős–Rényi draws attempted before giving up on connectivity.
pub const ER_MAX_ATTEMPTS: u64 = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("graph needs at least {min} agents, got {got}")]
    TooFewAgents { min: usize, got: usize },
    #[error("edge probability must lie in (0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("edge ({0}, {1}) is invalid for a graph on {2} agents")]
    InvalidEdge(usize, usize, usize),
    #[error("graph is disconnected")]
    Disconnected,
    #[error("no connected Erdős–Rényi draw with m={m}, p={p} after {attempts} attempts")]
    ConnectivityExhausted { m: usize, p: f64, attempts: u64 },
    #[error("mixing coefficient c must lie in (0, 1/2], got {0}")]
    InvalidMixing(f64),
    #[error("invalid gossip matrix: {0}")]
    InvalidGossip(String),
}

/// A static, undirected, connected communication graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    m: usize,
    edges: BTreeSet<(usize, usize)>,
    // closed neighborhoods, sorted, each containing the agent itself
    neighborhoods: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an edge list. Self-loops and duplicates are
    /// rejected or folded; connectivity is required.
    pub fn from_edges(
        m: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TopologyError> {
        let graph = Self::from_edges_unchecked(m, edges)?;
        if !graph.is_connected() {
            return Err(TopologyError::Disconnected);
        }
        Ok(graph)
    }

    fn from_edges_unchecked(
        m: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TopologyError> {
        if m == 0 {
            return Err(TopologyError::TooFewAgents { min: 1, got: 0 });
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i == j || i >= m || j >= m {
                return Err(TopologyError::InvalidEdge(i, j, m));
            }
            set.insert((i.min(j), i.max(j)));
        }
        let mut neighborhoods: Vec<Vec<usize>> = (0..m).map(|i| vec![i]).collect();
        for &(i, j) in &set {
            neighborhoods[i].push(j);
            neighborhoods[j].push(i);
        }
        for n in &mut neighborhoods {
            n.sort_unstable();
        }
        Ok(Self {
            m,
            edges: set,
            neighborhoods,
        })
    }

    pub fn line(m: usize) -> Result<Self, TopologyError> {
        Self::from_edges(m, (1..m).map(|i| (i - 1, i)))
    }

    pub fn cycle(m: usize) -> Result<Self, TopologyError> {
        if m < 3 {
            return Self::line(m);
        }
        Self::from_edges(m, (0..m).map(|i| (i, (i + 1) % m)))
    }

    pub fn complete(m: usize) -> Result<Self, TopologyError> {
        Self::from_edges(m, (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))))
    }

    /// G(m, p) conditioned on connectivity. Draw `a` uses the generator
    /// seeded with `seed + a`; the first connected draw is returned.
    pub fn erdos_renyi(m: usize, p: f64, seed: u64) -> Result<Self, TopologyError> {
        if m < 2 {
            return Err(TopologyError::TooFewAgents { min: 2, got: m });
        }
        if !(p > 0.0 && p <= 1.0) {
            // p = 0 can never connect; report it the same way a hopeless p would
            if p == 0.0 {
                return Err(TopologyError::ConnectivityExhausted {
                    m,
                    p,
                    attempts: 0,
                });
            }
            return Err(TopologyError::InvalidProbability(p));
        }
        for attempt in 0..ER_MAX_ATTEMPTS {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
            let mut edges = Vec::new();
            for i in 0..m {
                for j in i + 1..m {
                    if rng.random::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
            let g = Self::from_edges_unchecked(m, edges)?;
            if g.is_connected() {
                return Ok(g);
            }
        }
        Err(TopologyError::ConnectivityExhausted {
            m,
            p,
            attempts: ER_MAX_ATTEMPTS,
        })
    }

    pub fn agents(&self) -> usize {
        self.m
    }

    /// Unordered edges as `(i, j)` with `i < j`.
    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// `N_i`, sorted, including `i`.
    pub fn neighborhood(&self, i: usize) -> &[usize] {
        &self.neighborhoods[i]
    }

    /// Number of neighbors of `i`, excluding `i`.
    pub fn degree(&self, i: usize) -> usize {
        self.neighborhoods[i].len() - 1
    }

    /// Hop distances from `source`; `None` for unreachable agents.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.m];
        dist[source] = Some(0);
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("queued nodes have a distance");
            for &v in &self.neighborhoods[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0).iter().all(Option::is_some)
    }

    /// Exact diameter via BFS from every agent.
    pub fn diameter(&self) -> Result<usize, TopologyError> {
        let mut best = 0;
        for s in 0..self.m {
            for d in self.bfs_distances(s) {
                best = best.max(d.ok_or(TopologyError::Disconnected)?);
            }
        }
        Ok(best)
    }
}

/// Graph description as it appears in run configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Line { m: usize },
    Cycle { m: usize },
    Complete { m: usize },
    ErdosRenyi { m: usize, p: f64, seed: u64 },
}

impl GraphSpec {
    pub fn agents(&self) -> usize {
        match *self {
            GraphSpec::Line { m }
            | GraphSpec::Cycle { m }
            | GraphSpec::Complete { m }
            | GraphSpec::ErdosRenyi { m, .. } => m,
        }
    }

    pub fn build(&self) -> Result<Graph, TopologyError> {
        match *self {
            GraphSpec::Line { m } => Graph::line(m),
            GraphSpec::Cycle { m } => Graph::cycle(m),
            GraphSpec::Complete { m } => Graph::complete(m),
            GraphSpec::ErdosRenyi { m, p, seed } => Graph::erdos_renyi(m, p, seed),
        }
    }

    /// Short label used in file names and summaries.
    pub fn label(&self) -> String {
        match *self {
            GraphSpec::Line { m } => format!("line_m{m}"),
            GraphSpec::Cycle { m } => format!("cycle_m{m}"),
            GraphSpec::Complete { m } => format!("complete_m{m}"),
            GraphSpec::ErdosRenyi { m, p, .. } => format!("er_p{p}_m{m}"),
        }
    }
}
