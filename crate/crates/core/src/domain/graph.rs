use std::collections::{BTreeMap, BTreeSet};

use super::grid::CellId;

/// Directed graph over grid cells.
///
/// Edges are kept after their endpoints leave the grid so that predecessor
/// queries still see every observed transition.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TransitionGraph {
    vertices: BTreeSet<CellId>,
    edges: BTreeSet<(CellId, CellId)>,
    preds: BTreeMap<CellId, BTreeSet<CellId>>,
}

impl TransitionGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, v: CellId) {
        self.vertices.insert(v);
    }

    /// Returns true if the edge was not present before.
    pub fn add_edge(&mut self, from: CellId, to: CellId) -> bool {
        self.vertices.insert(from);
        self.vertices.insert(to);
        if self.edges.insert((from, to)) {
            self.preds.entry(to).or_default().insert(from);
            true
        } else {
            false
        }
    }

    pub fn contains_edge(&self, from: CellId, to: CellId) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn vertices(&self) -> impl Iterator<Item = CellId> + '_ {
        self.vertices.iter().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (CellId, CellId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Every vertex with a directed path into `target`, plus `target`.
    ///
    /// Iterative DFS over reversed edges; cycles are fine.
    pub fn ancestors(&self, target: CellId) -> BTreeSet<CellId> {
        let mut seen = BTreeSet::from([target]);
        let mut stack = vec![target];
        while let Some(v) = stack.pop() {
            if let Some(ps) = self.preds.get(&v) {
                for &p in ps {
                    if seen.insert(p) {
                        stack.push(p);
                    }
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(i: u32) -> CellId {
        CellId(i)
    }

    #[test]
    fn chain_ancestors() {
        let mut g = TransitionGraph::new();
        g.add_edge(c(0), c(1));
        g.add_edge(c(1), c(2));
        assert_eq!(g.ancestors(c(2)), BTreeSet::from([c(0), c(1), c(2)]));
        assert_eq!(g.ancestors(c(0)), BTreeSet::from([c(0)]));
    }

    #[test]
    fn cycle_terminates() {
        // a=0, b=1, x=2
        let mut g = TransitionGraph::new();
        g.add_edge(c(0), c(1));
        g.add_edge(c(1), c(0));
        g.add_edge(c(2), c(0));
        assert_eq!(g.ancestors(c(1)), BTreeSet::from([c(0), c(1), c(2)]));
    }

    #[test]
    fn unknown_vertex_is_its_own_ancestor() {
        let g = TransitionGraph::new();
        assert_eq!(g.ancestors(c(9)), BTreeSet::from([c(9)]));
    }

    #[test]
    fn duplicate_edges_are_ignored() {
        let mut g = TransitionGraph::new();
        assert!(g.add_edge(c(0), c(1)));
        assert!(!g.add_edge(c(0), c(1)));
        assert_eq!(g.edge_count(), 1);
    }
}
