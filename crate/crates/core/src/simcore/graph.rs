use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{Rational, Scalar};

/// Node index inside a graph, `0..n`. Distinct from the node's identifier.
pub type NodeIdx = u32;

/// The communication structure an engine run executes on.
///
/// A topology shares the node index space of the graph it was derived from;
/// restricting it to a subgraph keeps indices stable and only changes which
/// nodes participate ([`Topology::members`]) and which edges exist.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    ids: Arc<Vec<u64>>,
    adj: Vec<Vec<NodeIdx>>,
    members: Vec<NodeIdx>,
}

impl Topology {
    /// Builds a topology over all nodes. `adj` must be symmetric, sorted and
    /// free of self-loops and duplicates.
    pub fn new(ids: Vec<u64>, adj: Vec<Vec<NodeIdx>>) -> Self {
        assert_eq!(ids.len(), adj.len());
        let members = (0..ids.len() as NodeIdx).collect();
        Topology { ids: Arc::new(ids), adj, members }
    }

    /// Number of nodes in the index space (not only members).
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn members(&self) -> &[NodeIdx] {
        &self.members
    }

    pub fn is_member(&self, v: NodeIdx) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    pub fn id(&self, v: NodeIdx) -> u64 {
        self.ids[v as usize]
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn neighbors(&self, v: NodeIdx) -> &[NodeIdx] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: NodeIdx) -> usize {
        self.adj[v as usize].len()
    }

    pub fn max_degree(&self) -> usize {
        self.members.iter().map(|&v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn edge_count(&self) -> usize {
        self.members.iter().map(|&v| self.degree(v)).sum::<usize>() / 2
    }

    /// Position of `u` in `v`'s neighbor list.
    pub fn slot(&self, v: NodeIdx, u: NodeIdx) -> Option<usize> {
        self.adj[v as usize].binary_search(&u).ok()
    }

    pub fn has_edge(&self, u: NodeIdx, v: NodeIdx) -> bool {
        self.slot(u, v).is_some()
    }

    /// Edges `(u, v)` with `u < v` among members.
    pub fn edges(&self) -> impl Iterator<Item = (NodeIdx, NodeIdx)> + '_ {
        self.members
            .iter()
            .flat_map(move |&u| self.adj[u as usize].iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Subgraph induced by the members for which `keep` holds.
    pub fn induced(&self, keep: impl Fn(NodeIdx) -> bool) -> Topology {
        let mut mask = vec![false; self.len()];
        let members: Vec<NodeIdx> = self.members.iter().copied().filter(|&v| keep(v)).collect();
        for &v in &members {
            mask[v as usize] = true;
        }
        let mut adj = vec![Vec::new(); self.len()];
        for &v in &members {
            adj[v as usize] = self.adj[v as usize].iter().copied().filter(|&u| mask[u as usize]).collect();
        }
        Topology { ids: Arc::clone(&self.ids), adj, members }
    }

    /// Same members, keeping only edges for which `keep(u, v)` holds. `keep`
    /// must be symmetric.
    pub fn filter_edges(&self, keep: impl Fn(NodeIdx, NodeIdx) -> bool) -> Topology {
        let mut adj = vec![Vec::new(); self.len()];
        for &v in &self.members {
            adj[v as usize] = self.adj[v as usize].iter().copied().filter(|&u| keep(v, u)).collect();
        }
        debug_assert!(is_symmetric(&adj));
        Topology { ids: Arc::clone(&self.ids), adj, members: self.members.clone() }
    }

    /// Same members, keeping only the given per-node neighbor subsets.
    pub fn with_adjacency(&self, adj: Vec<Vec<NodeIdx>>) -> Topology {
        assert_eq!(adj.len(), self.len());
        debug_assert!(is_symmetric(&adj));
        Topology { ids: Arc::clone(&self.ids), adj, members: self.members.clone() }
    }
}

fn is_symmetric(adj: &[Vec<NodeIdx>]) -> bool {
    adj.iter().enumerate().all(|(v, ns)| {
        ns.windows(2).all(|w| w[0] < w[1])
            && ns.iter().all(|&u| adj[u as usize].binary_search(&(v as NodeIdx)).is_ok())
    })
}

/// Immutable undirected simulation graph with unique node identifiers and
/// optional exact edge and node weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SimGraph {
    topo: Topology,
    edge_weights: Option<Vec<Vec<Rational>>>,
    node_weights: Option<Vec<Rational>>,
}

impl SimGraph {
    /// Builds a graph from identifiers and an edge list over identifiers.
    /// Node indices follow the order of `ids`.
    pub fn from_edges(ids: Vec<u64>, edges: &[(u64, u64)]) -> Result<SimGraph> {
        let weighted: Vec<(u64, u64, Option<Rational>)> = edges.iter().map(|&(u, v)| (u, v, None)).collect();
        Self::build(ids, &weighted)
    }

    /// Graph on nodes `0..n` with identifiers equal to indices.
    pub fn from_index_edges(n: usize, edges: &[(NodeIdx, NodeIdx)]) -> Result<SimGraph> {
        let ids = (0..n as u64).collect();
        let e: Vec<(u64, u64)> = edges.iter().map(|&(u, v)| (u as u64, v as u64)).collect();
        Self::from_edges(ids, &e)
    }

    /// Builds a graph where each edge may carry a weight. Either every edge
    /// has a weight or none does.
    pub fn build(ids: Vec<u64>, edges: &[(u64, u64, Option<Rational>)]) -> Result<SimGraph> {
        let mut seen_ids = HashSet::with_capacity(ids.len());
        for &id in &ids {
            if !seen_ids.insert(id) {
                return Err(Error::InvalidGraph(format!("duplicate node id {id}")));
            }
        }
        let index: std::collections::HashMap<u64, NodeIdx> =
            ids.iter().enumerate().map(|(i, &id)| (id, i as NodeIdx)).collect();
        let n = ids.len();
        let weighted = edges.first().is_some_and(|e| e.2.is_some());
        let mut adj: Vec<Vec<(NodeIdx, Option<Rational>)>> = vec![Vec::new(); n];
        let mut seen = HashSet::with_capacity(edges.len());
        for (u, v, w) in edges {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
            }
            if w.is_some() != weighted {
                return Err(Error::InvalidGraph("either all edges carry weights or none does".into()));
            }
            if let Some(w) = w {
                if w.is_negative() {
                    return Err(Error::InvalidGraph(format!("negative weight {w} on edge {{{u},{v}}}")));
                }
            }
            let key = if u < v { (*u, *v) } else { (*v, *u) };
            if !seen.insert(key) {
                return Err(Error::InvalidGraph(format!("duplicate edge {{{u},{v}}}")));
            }
            let (&a, &b) = match (index.get(u), index.get(v)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::InvalidGraph(format!("edge {{{u},{v}}} references an unknown node"))),
            };
            adj[a as usize].push((b, w.clone()));
            adj[b as usize].push((a, w.clone()));
        }
        let mut plain = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for mut list in adj {
            list.sort_by_key(|e| e.0);
            plain.push(list.iter().map(|e| e.0).collect::<Vec<_>>());
            if weighted {
                weights.push(list.into_iter().map(|e| e.1.unwrap()).collect::<Vec<_>>());
            }
        }
        Ok(SimGraph {
            topo: Topology::new(ids, plain),
            edge_weights: weighted.then_some(weights),
            node_weights: None,
        })
    }

    pub fn with_node_weights(mut self, weights: Vec<Rational>) -> Result<SimGraph> {
        if weights.len() != self.n() {
            return Err(Error::InvalidGraph("node weight count does not match node count".into()));
        }
        if let Some(w) = weights.iter().find(|w| w.is_negative()) {
            return Err(Error::InvalidGraph(format!("negative node weight {w}")));
        }
        self.node_weights = Some(weights);
        Ok(self)
    }

    /// Replaces all edge weights with `f(u, v)`; `f` must be symmetric.
    pub fn with_edge_weights(mut self, f: impl Fn(NodeIdx, NodeIdx) -> Rational) -> Result<SimGraph> {
        let mut weights = Vec::with_capacity(self.n());
        for v in 0..self.n() as NodeIdx {
            let row: Vec<Rational> = self.topo.neighbors(v).iter().map(|&u| f(v, u)).collect();
            if let Some(w) = row.iter().find(|w| w.is_negative()) {
                return Err(Error::InvalidGraph(format!("negative weight {w}")));
            }
            weights.push(row);
        }
        self.edge_weights = Some(weights);
        Ok(self)
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn n(&self) -> usize {
        self.topo.len()
    }

    pub fn m(&self) -> usize {
        self.topo.edge_count()
    }

    pub fn max_degree(&self) -> usize {
        self.topo.max_degree()
    }

    pub fn degree(&self, v: NodeIdx) -> usize {
        self.topo.degree(v)
    }

    pub fn neighbors(&self, v: NodeIdx) -> &[NodeIdx] {
        self.topo.neighbors(v)
    }

    pub fn id(&self, v: NodeIdx) -> u64 {
        self.topo.id(v)
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeIdx, NodeIdx)> + '_ {
        self.topo.edges()
    }

    pub fn is_weighted(&self) -> bool {
        self.edge_weights.is_some()
    }

    /// Weight of edge `{u, v}`; unweighted graphs have unit weights.
    pub fn edge_weight(&self, u: NodeIdx, v: NodeIdx) -> Option<Rational> {
        let slot = self.topo.slot(u, v)?;
        Some(match &self.edge_weights {
            Some(w) => w[u as usize][slot].clone(),
            None => Rational::one(),
        })
    }

    /// Edge weights aligned with the adjacency lists (unit when unweighted).
    pub fn edge_weight_rows(&self) -> Vec<Vec<Rational>> {
        match &self.edge_weights {
            Some(w) => w.clone(),
            None => (0..self.n()).map(|v| vec![Rational::one(); self.topo.degree(v as NodeIdx)]).collect(),
        }
    }

    pub fn node_weights(&self) -> Option<&[Rational]> {
        self.node_weights.as_deref()
    }

    /// Sum of all edge weights `W`.
    pub fn total_edge_weight(&self) -> Rational {
        self.edges().map(|(u, v)| self.edge_weight(u, v).unwrap()).sum()
    }

    /// Palette size of the identifier coloring, `max id + 1`.
    pub fn id_palette(&self) -> u64 {
        self.topo.ids().iter().copied().max().map_or(1, |m| m + 1)
    }

    /// The identifier coloring: every node colored by its unique id.
    pub fn id_coloring(&self) -> Vec<u64> {
        self.topo.ids().to_vec()
    }
}

/// Edge values aligned with the adjacency of a base topology. Lookups work
/// for every edge of the base, so the same map serves all of its subgraphs.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeWeights<S> {
    base: Topology,
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> EdgeWeights<S> {
    pub fn from_fn(base: &Topology, f: impl Fn(NodeIdx, NodeIdx) -> S) -> Self {
        let rows = (0..base.len() as NodeIdx).map(|v| base.neighbors(v).iter().map(|&u| f(v, u)).collect()).collect();
        EdgeWeights { base: base.clone(), rows }
    }

    /// Weights for the members of `base` given as per-node rows aligned with
    /// `base`'s adjacency.
    pub fn from_rows(base: &Topology, rows: Vec<Vec<S>>) -> Self {
        assert_eq!(rows.len(), base.len());
        EdgeWeights { base: base.clone(), rows }
    }

    pub fn unit(base: &Topology) -> Self {
        Self::from_fn(base, |_, _| S::one())
    }

    /// Weights of a graph converted into the scalar type `S`.
    pub fn of_graph(g: &SimGraph) -> Self {
        let rows = g.edge_weight_rows().iter().map(|r| r.iter().map(S::from_rational).collect()).collect();
        EdgeWeights { base: g.topology().clone(), rows }
    }

    pub fn base(&self) -> &Topology {
        &self.base
    }

    pub fn get(&self, v: NodeIdx, u: NodeIdx) -> &S {
        let slot = self.base.slot(v, u).expect("edge of the base topology");
        &self.rows[v as usize][slot]
    }

    /// Weighted degree of `v` within `topo`, a subgraph of the base.
    pub fn node_total(&self, topo: &Topology, v: NodeIdx) -> S {
        let mut t = S::zero();
        for &u in topo.neighbors(v) {
            t += self.get(v, u).clone();
        }
        t
    }

    /// Total weight of the edges of `topo`.
    pub fn total(&self, topo: &Topology) -> S {
        let mut t = S::zero();
        for (u, v) in topo.edges() {
            t += self.get(u, v).clone();
        }
        t
    }
}
