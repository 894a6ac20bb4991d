use serde::Serialize;

use super::graph::{NodeIdx, Topology};

/// Partial map from nodes to positive colors.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ColorAssignment {
    colors: Vec<Option<u32>>,
}

impl ColorAssignment {
    pub fn new(n: usize) -> Self {
        ColorAssignment { colors: vec![None; n] }
    }

    pub fn from_colors(colors: Vec<Option<u32>>) -> Self {
        assert!(colors.iter().flatten().all(|&c| c >= 1), "colors are positive");
        ColorAssignment { colors }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn get(&self, v: NodeIdx) -> Option<u32> {
        self.colors[v as usize]
    }

    pub fn set(&mut self, v: NodeIdx, c: u32) {
        assert!(c >= 1, "colors are positive");
        self.colors[v as usize] = Some(c);
    }

    pub fn colors(&self) -> &[Option<u32>] {
        &self.colors
    }

    pub fn colored(&self) -> usize {
        self.colors.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_total(&self) -> bool {
        self.colors.iter().all(Option::is_some)
    }

    /// Largest color in use, the palette bound of a total coloring.
    pub fn max_color(&self) -> u32 {
        self.colors.iter().flatten().copied().max().unwrap_or(0)
    }

    pub fn distinct_colors(&self) -> usize {
        let mut cs: Vec<u32> = self.colors.iter().flatten().copied().collect();
        cs.sort_unstable();
        cs.dedup();
        cs.len()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub nodes: usize,
    pub edges: usize,
    pub colored: usize,
    pub uncolored: usize,
    pub monochromatic_edges: usize,
    pub list_violations: usize,
    pub distinct_colors: usize,
    pub max_color: u32,
    /// First few offending edges and nodes, by node index.
    pub sample_mono: Vec<(NodeIdx, NodeIdx)>,
    pub sample_list: Vec<NodeIdx>,
}

impl VerifyReport {
    /// No monochromatic edge among colored nodes.
    pub fn is_proper(&self) -> bool {
        self.monochromatic_edges == 0
    }

    pub fn is_list_valid(&self) -> bool {
        self.list_violations == 0
    }

    /// Total, proper and list-valid.
    pub fn is_valid(&self) -> bool {
        self.is_proper() && self.is_list_valid() && self.uncolored == 0
    }
}

const SAMPLES: usize = 8;

/// Checks a (partial) coloring on the members of `topo`. Uncolored nodes never
/// make an edge monochromatic.
pub fn verify_coloring(topo: &Topology, a: &ColorAssignment, lists: Option<&[Vec<u32>]>) -> VerifyReport {
    let mut r = VerifyReport { nodes: topo.members().len(), edges: topo.edge_count(), ..Default::default() };
    for &v in topo.members() {
        match a.get(v) {
            None => r.uncolored += 1,
            Some(c) => {
                r.colored += 1;
                if let Some(lists) = lists {
                    if lists[v as usize].binary_search(&c).is_err() {
                        r.list_violations += 1;
                        if r.sample_list.len() < SAMPLES {
                            r.sample_list.push(v);
                        }
                    }
                }
            }
        }
    }
    for (u, v) in topo.edges() {
        if a.get(u).is_some() && a.get(u) == a.get(v) {
            r.monochromatic_edges += 1;
            if r.sample_mono.len() < SAMPLES {
                r.sample_mono.push((u, v));
            }
        }
    }
    let mut used: Vec<u32> = topo.members().iter().filter_map(|&v| a.get(v)).collect();
    used.sort_unstable();
    used.dedup();
    r.distinct_colors = used.len();
    r.max_color = used.last().copied().unwrap_or(0);
    r
}

/// Edges `(u, v)`, `u < v`, whose endpoints share a color in a 0-based
/// schedule coloring.
pub fn monochromatic_edges(topo: &Topology, colors: &[u64]) -> Vec<(NodeIdx, NodeIdx)> {
    topo.edges().filter(|&(u, v)| colors[u as usize] == colors[v as usize]).collect()
}

pub fn is_proper(topo: &Topology, colors: &[u64]) -> bool {
    topo.edges().all(|(u, v)| colors[u as usize] != colors[v as usize])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simcore::graph::SimGraph;

    fn triangle() -> SimGraph {
        SimGraph::from_index_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    #[test]
    fn proper_triangle() {
        let a = ColorAssignment::from_colors(vec![Some(1), Some(2), Some(3)]);
        let r = verify_coloring(triangle().topology(), &a, None);
        assert_eq!(r.monochromatic_edges, 0);
        assert!(r.is_valid());
        assert_eq!(r.distinct_colors, 3);
    }

    #[test]
    fn one_monochromatic_edge() {
        let a = ColorAssignment::from_colors(vec![Some(1), Some(1), Some(2)]);
        let r = verify_coloring(triangle().topology(), &a, None);
        assert_eq!(r.monochromatic_edges, 1);
        assert_eq!(r.sample_mono, vec![(0, 1)]);
    }

    #[test]
    fn list_violation_and_uncolored() {
        let g = SimGraph::from_index_edges(2, &[]).unwrap();
        let a = ColorAssignment::from_colors(vec![Some(3), None]);
        let lists = vec![vec![1, 2], vec![1, 2]];
        let r = verify_coloring(g.topology(), &a, Some(&lists));
        assert_eq!(r.list_violations, 1);
        assert_eq!(r.uncolored, 1);
        assert!(!r.is_valid());
    }
}
