//! Shortest paths on vertex and dual graphs.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::linalg;
use crate::mesh::{Face, Topology, NO_FACE};
use crate::points::Points;

/// Weighted adjacency lists.
#[derive(Debug, Clone)]
pub struct Graph {
    adj: Vec<Vec<(usize, f64)>>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn add_edge(&mut self, a: usize, b: usize, w: f64) {
        self.adj[a].push((b, w));
        self.adj[b].push((a, w));
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[v]
    }

    /// Edge graph of a mesh with Euclidean edge lengths of `points`.
    pub fn vertex_graph(points: &Points, topology: &Topology) -> Graph {
        let mut g = Graph::new(points.len());
        for &[a, b] in &topology.edges {
            g.add_edge(a, b, linalg::dist(points.row(a), points.row(b)));
        }
        g
    }

    /// Unit-weight edge graph of a mesh.
    pub fn combinatorial(topology: &Topology) -> Graph {
        let mut g = Graph::new(topology.vertex_count());
        for &[a, b] in &topology.edges {
            g.add_edge(a, b, 1.0);
        }
        g
    }

    /// Face adjacency graph weighted by distances between barycenters.
    pub fn dual_graph(barycenters: &Points, topology: &Topology) -> Graph {
        let mut g = Graph::new(barycenters.len());
        for pair in &topology.edge_faces {
            if pair[0] != NO_FACE && pair[1] != NO_FACE {
                g.add_edge(
                    pair[0],
                    pair[1],
                    linalg::dist(barycenters.row(pair[0]), barycenters.row(pair[1])),
                );
            }
        }
        g
    }

    pub fn dijkstra(&self, source: usize) -> Vec<f64> {
        self.dijkstra_bounded(source, f64::INFINITY)
    }

    /// Distances from `source`, left infinite beyond `bound`.
    pub fn dijkstra_bounded(&self, source: usize, bound: f64) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.adj.len()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry(0.0, source));
        while let Some(Entry(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &(u, w) in &self.adj[v] {
                let nd = d + w;
                if nd < dist[u] && nd <= bound {
                    dist[u] = nd;
                    heap.push(Entry(nd, u));
                }
            }
        }
        dist
    }
}

/// Connected components of the subgraph induced by `keep`, as sorted lists.
pub fn components(adj: impl Fn(usize) -> Vec<usize>, keep: &[bool]) -> Vec<Vec<usize>> {
    let mut label = vec![usize::MAX; keep.len()];
    let mut out = Vec::new();
    for s in 0..keep.len() {
        if !keep[s] || label[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut comp = vec![s];
        label[s] = id;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for u in adj(v) {
                if keep[u] && label[u] == usize::MAX {
                    label[u] = id;
                    comp.push(u);
                    stack.push(u);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Faces sharing an edge with `f`.
pub fn face_neighbors(faces: &[Face], topology: &Topology, f: usize) -> Vec<usize> {
    let [a, b, c] = faces[f];
    [[a, b], [b, c], [c, a]]
        .iter()
        .filter_map(|&[i, j]| topology.edge_index(i, j))
        .flat_map(|e| topology.edge_faces[e])
        .filter(|&g| g != f && g != NO_FACE)
        .collect()
}
