//! Weighted directed graph carrying the topology of the coupled system.
//!
//! The graph stores deterministic mean edge weights; stochastic weight
//! factors are applied downstream when parameters are realized.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// One directed edge `src -> dst` with a positive weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub weight: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("edge ({src}, {dst}) out of range for {n} nodes")]
    IndexOutOfRange { src: usize, dst: usize, n: usize },
    #[error("edge ({0}, {1}) has non-positive weight {2}")]
    NonpositiveWeight(usize, usize, f64),
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("graph has no edges")]
    EmptyGraph,
    #[error("scale factor must be positive, got {0}")]
    NonpositiveFactor(f64),
    #[error("node count must be positive")]
    ZeroNodes,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Immutable weighted digraph with an edge-indexed adjacency lookup.
#[derive(Debug, Clone)]
pub struct WeightedDigraph {
    n: usize,
    edges: Vec<Edge>,
    index: HashMap<(usize, usize), usize>,
}

impl WeightedDigraph {
    /// Builds a graph from an edge list, rejecting self-loops, duplicate
    /// directed edges, out-of-range indices and non-positive weights.
    pub fn build(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::ZeroNodes);
        }
        let mut stored = Vec::with_capacity(edges.len());
        let mut index = HashMap::with_capacity(edges.len());
        for (src, dst, weight) in edges {
            if src >= n || dst >= n {
                return Err(GraphError::IndexOutOfRange { src, dst, n });
            }
            if src == dst {
                return Err(GraphError::SelfLoop(src));
            }
            if !(weight > 0.0) {
                return Err(GraphError::NonpositiveWeight(src, dst, weight));
            }
            if index.insert((src, dst), stored.len()).is_some() {
                return Err(GraphError::DuplicateEdge(src, dst));
            }
            stored.push(Edge { src, dst, weight });
        }
        Ok(Self { n, edges: stored, index })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Weight of the directed edge `src -> dst`, if present.
    pub fn weight(&self, src: usize, dst: usize) -> Option<f64> {
        self.index.get(&(src, dst)).map(|&i| self.edges[i].weight)
    }

    /// Arithmetic mean of the edge weights, the E[M] entering the
    /// coupling moments.
    pub fn mean_weight(&self) -> Result<f64, GraphError> {
        if self.edges.is_empty() {
            return Err(GraphError::EmptyGraph);
        }
        let sum: f64 = self.edges.iter().map(|e| e.weight).sum();
        Ok(sum / self.edges.len() as f64)
    }

    /// Returns a copy with every weight multiplied by `factor`.
    pub fn scale_weights(&self, factor: f64) -> Result<Self, GraphError> {
        if !(factor > 0.0) {
            return Err(GraphError::NonpositiveFactor(factor));
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge { weight: e.weight * factor, ..*e })
            .collect();
        Ok(Self { n: self.n, edges, index: self.index.clone() })
    }

    /// Erdős–Rényi digraph: each ordered pair (i, j), i != j, kept with
    /// probability `p`, all edges carrying the same weight. Deterministic
    /// for a fixed seed.
    pub fn generate_random(n: usize, p: f64, weight: f64, seed: u64) -> Result<Self, GraphError> {
        assert!(n >= 2, "random graph needs at least 2 nodes");
        assert!(p > 0.0 && p <= 1.0, "edge probability must be in (0, 1]");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.gen::<f64>() < p {
                    edges.push((i, j, weight));
                }
            }
        }
        Self::build(n, edges)
    }

    /// Parses the plain-text format: first line `n m`, then m lines
    /// `src dst weight` with 0-based indices.
    pub fn from_text(text: &str) -> Result<Self, GraphError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or(GraphError::Parse { line: 1, msg: "empty file".into() })?;
        let mut it = header.split_whitespace();
        let n: usize = parse_field(it.next(), 1, "node count")?;
        let m: usize = parse_field(it.next(), 1, "edge count")?;
        let mut edges = Vec::with_capacity(m);
        for (i, line) in lines {
            let lineno = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let src: usize = parse_field(it.next(), lineno, "src")?;
            let dst: usize = parse_field(it.next(), lineno, "dst")?;
            let weight: f64 = parse_field(it.next(), lineno, "weight")?;
            if it.next().is_some() {
                return Err(GraphError::Parse { line: lineno, msg: "trailing tokens".into() });
            }
            edges.push((src, dst, weight));
        }
        if edges.len() != m {
            return Err(GraphError::Parse {
                line: 1,
                msg: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Self::build(n, edges)
    }

    pub fn from_file(path: &Path) -> Result<Self, GraphError> {
        let text = std::fs::read_to_string(path).map_err(|e| GraphError::Parse {
            line: 0,
            msg: format!("{}: {e}", path.display()),
        })?;
        Self::from_text(&text)
    }
}

fn parse_field<T: std::str::FromStr>(
    tok: Option<&str>,
    line: usize,
    what: &str,
) -> Result<T, GraphError>
where
    T::Err: fmt::Display,
{
    let tok = tok.ok_or_else(|| GraphError::Parse { line, msg: format!("missing {what}") })?;
    tok.parse().map_err(|e| GraphError::Parse { line, msg: format!("bad {what} `{tok}`: {e}") })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn builds_and_caches_edge_count() {
        let g = WeightedDigraph::build(2, vec![(0, 1, 1.0)]).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight(0, 1), Some(1.0));
        assert_eq!(g.weight(1, 0), None);
    }

    #[test]
    fn rejects_duplicate_edge() {
        let err = WeightedDigraph::build(3, vec![(0, 1, 1.0), (0, 1, 2.0)]).unwrap_err();
        assert_eq!(err, GraphError::DuplicateEdge(0, 1));
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(matches!(
            WeightedDigraph::build(2, vec![(0, 5, 1.0)]).unwrap_err(),
            GraphError::IndexOutOfRange { .. }
        ));
        assert!(matches!(
            WeightedDigraph::build(2, vec![(0, 1, 0.0)]).unwrap_err(),
            GraphError::NonpositiveWeight(..)
        ));
        assert!(matches!(
            WeightedDigraph::build(2, vec![(1, 1, 1.0)]).unwrap_err(),
            GraphError::SelfLoop(1)
        ));
    }

    #[test]
    fn empty_graph_has_no_mean_weight() {
        let g = WeightedDigraph::build(1, vec![]).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.mean_weight().unwrap_err(), GraphError::EmptyGraph);
    }

    #[test]
    fn mean_weight_is_arithmetic_mean() {
        let g = WeightedDigraph::build(3, vec![(0, 1, 1.0), (1, 2, 3.0)]).unwrap();
        assert_relative_eq!(g.mean_weight().unwrap(), 2.0);
        let single = WeightedDigraph::build(2, vec![(0, 1, 5.0)]).unwrap();
        assert_relative_eq!(single.mean_weight().unwrap(), 5.0);
    }

    #[test]
    fn mean_weight_of_constant_random_graph() {
        let g = WeightedDigraph::generate_random(100, 0.1, 0.77, 1).unwrap();
        assert_relative_eq!(g.mean_weight().unwrap(), 0.77, epsilon = 1e-12);
    }

    #[test]
    fn complete_digraph_on_two_nodes() {
        let g = WeightedDigraph::generate_random(2, 1.0, 1.0, 0).unwrap();
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn random_graph_is_reproducible() {
        let a = WeightedDigraph::generate_random(50, 0.1, 1.0, 7).unwrap();
        let b = WeightedDigraph::generate_random(50, 0.1, 1.0, 7).unwrap();
        assert_eq!(a.edges(), b.edges());
    }

    #[test]
    fn random_graph_edge_count_near_binomial_mean() {
        // n(n-1)p = 990, sd = sqrt(n(n-1)p(1-p)) ~ 29.85
        let g = WeightedDigraph::generate_random(100, 0.1, 1.0, 3).unwrap();
        let mean = 990.0;
        let sd = (9900.0_f64 * 0.1 * 0.9).sqrt();
        let m = g.edge_count() as f64;
        assert!((m - mean).abs() < 4.0 * sd, "m = {m}");
    }

    #[test]
    fn scale_weights_is_linear() {
        let g = WeightedDigraph::build(3, vec![(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let s = g.scale_weights(2.0).unwrap();
        let w: Vec<f64> = s.edges().iter().map(|e| e.weight).collect();
        assert_eq!(w, vec![2.0, 4.0]);
        assert_eq!(s.node_count(), 3);
        assert_eq!(s.edge_count(), 2);

        let id = g.scale_weights(1.0).unwrap();
        assert_eq!(id.edges(), g.edges());

        let h = WeightedDigraph::build(3, vec![(0, 1, 0.5), (1, 2, 1.5)]).unwrap();
        assert_relative_eq!(h.scale_weights(3.0).unwrap().mean_weight().unwrap(), 3.0);
        assert!(g.scale_weights(0.0).is_err());
    }

    #[test]
    fn text_round_trip_and_errors() {
        let g = WeightedDigraph::from_text("3 2\n0 1 1.5\n1 2 0.5\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.weight(1, 2), Some(0.5));

        let err = WeightedDigraph::from_text("2 1\n0 x 1.0\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { line: 2, .. }));

        let err = WeightedDigraph::from_text("2 2\n0 1 1.0\n").unwrap_err();
        assert!(matches!(err, GraphError::Parse { .. }));
    }

    proptest::proptest! {
        #[test]
        fn scaling_scales_mean_weight(
            weights in proptest::collection::vec(0.01f64..10.0, 1..20),
            factor in 0.01f64..100.0,
        ) {
            let n = weights.len() + 1;
            let edges: Vec<_> = weights
                .iter()
                .enumerate()
                .map(|(i, &w)| (i, i + 1, w))
                .collect();
            let g = WeightedDigraph::build(n, edges).unwrap();
            let scaled = g.scale_weights(factor).unwrap();
            let lhs = scaled.mean_weight().unwrap();
            let rhs = factor * g.mean_weight().unwrap();
            proptest::prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }
    }
}
