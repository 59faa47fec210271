use std::collections::HashMap;

use super::{greedy_independent, LogDensityOracle, QueryCounter};
use crate::error::{invalid_param, Error, Result};
use crate::subset::SubsetState;

/// Undirected multigraph; edge `i` is the `i`-th entry of `edges`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(&(u, v)) = edges.iter().find(|&&(u, v)| u >= vertices || v >= vertices) {
            return Err(invalid_param(format!(
                "edge ({u}, {v}) references a vertex outside 0..{vertices}"
            )));
        }
        Ok(Graph { vertices, edges })
    }

    pub fn complete(vertices: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..vertices {
            for v in u + 1..vertices {
                edges.push((u, v));
            }
        }
        Graph { vertices, edges }
    }

    pub fn path(vertices: usize) -> Self {
        let edges = (1..vertices).map(|v| (v - 1, v)).collect();
        Graph { vertices, edges }
    }

    pub fn cycle(vertices: usize) -> Self {
        let mut g = Self::path(vertices);
        if vertices > 2 {
            g.edges.push((vertices - 1, 0));
        }
        g
    }

    /// The Petersen graph: outer 5-cycle, inner pentagram, five spokes.
    pub fn petersen() -> Self {
        let mut edges = Vec::with_capacity(15);
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
            edges.push((i, 5 + i));
        }
        Graph { vertices: 10, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Stack union-find for at most `N / 2` edges.
    fn acyclic_small<const N: usize>(&self, edge_ids: &[usize]) -> bool {
        let mut labels = [0usize; N];
        let mut parent = [0usize; N];
        let mut used = 0;
        let mut local = |v: usize, labels: &mut [usize; N], parent: &mut [usize; N]| {
            match labels[..used].iter().position(|&x| x == v) {
                Some(p) => p,
                None => {
                    labels[used] = v;
                    parent[used] = used;
                    used += 1;
                    used - 1
                }
            }
        };
        for &e in edge_ids {
            let (u, v) = self.edges[e];
            let a = local(u, &mut labels, &mut parent);
            let b = local(v, &mut labels, &mut parent);
            let (ra, rb) = (find_root(&mut parent, a), find_root(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        true
    }

    /// Whether the listed edges form a forest.
    pub fn is_acyclic(&self, edge_ids: &[usize]) -> bool {
        // Few edges: union-find over the touched endpoints only, on the stack.
        if edge_ids.len() <= 4 {
            return self.acyclic_small::<8>(edge_ids);
        }
        if edge_ids.len() <= 32 {
            return self.acyclic_small::<64>(edge_ids);
        }
        let mut index: HashMap<usize, usize> = HashMap::new();
        let mut uf = UnionFind::new(0);
        for &e in edge_ids {
            let (u, v) = self.edges[e];
            let mut id = |x: usize| {
                *index.entry(x).or_insert_with(|| uf.push())
            };
            let (a, b) = (id(u), id(v));
            if !uf.union(a, b) {
                return false;
            }
        }
        true
    }
}

fn find_root(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(len: usize) -> Self {
        UnionFind {
            parent: (0..len).collect(),
            size: vec![1; len],
        }
    }

    /// Adds a singleton and returns its id.
    pub fn push(&mut self) -> usize {
        let id = self.parent.len();
        self.parent.push(id);
        self.size.push(1);
        id
    }

    pub fn find(&mut self, x: usize) -> usize {
        find_root(&mut self.parent, x)
    }

    /// Merges the sets of `a` and `b`; `false` if they were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Uniform density over size-k forests of a graph (the truncated graphic
/// matroid): `ln mu(S) = 0` when the k edges of `S` are acyclic, `-inf`
/// otherwise.
#[derive(Clone, Debug)]
pub struct ForestDensity {
    graph: Graph,
    k: usize,
    counter: QueryCounter,
}

impl ForestDensity {
    pub fn new(graph: Graph, k: usize) -> Result<Self> {
        if k > graph.edge_count() {
            return Err(invalid_param(format!(
                "k = {k} exceeds the {} edges of the graph",
                graph.edge_count()
            )));
        }
        Ok(ForestDensity {
            graph,
            k,
            counter: QueryCounter::default(),
        })
    }

    /// Spanning trees of a connected graph.
    pub fn spanning_trees(graph: Graph) -> Result<Self> {
        let k = graph.vertex_count().saturating_sub(1);
        Self::new(graph, k)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }
}

impl LogDensityOracle for ForestDensity {
    fn ground_size(&self) -> usize {
        self.graph.edge_count()
    }

    fn degree(&self) -> usize {
        self.k
    }

    #[inline]
    fn eval(&self, elements: &[usize]) -> f64 {
        if self.graph.is_acyclic(elements) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn counter(&self) -> &QueryCounter {
        &self.counter
    }

    fn support_point(&self) -> Result<SubsetState> {
        greedy_independent(self.graph.edge_count(), self.k, |s| self.graph.is_acyclic(s)).ok_or_else(
            || Error::EmptySupport(format!("graph has no forest with {} edges", self.k)),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_forests() {
        let f = ForestDensity::new(Graph::complete(3), 2).unwrap();
        assert_eq!(f.eval(&[0, 1]), 0.0);
        let f3 = ForestDensity::new(Graph::complete(3), 3).unwrap();
        assert_eq!(f3.eval(&[0, 1, 2]), f64::NEG_INFINITY);
        assert!(f3.support_point().is_err());
    }

    #[test]
    fn path_support_point() {
        let f = ForestDensity::new(Graph::path(3), 2).unwrap();
        assert_eq!(f.support_point().unwrap().elements(), &[0, 1]);
    }

    #[test]
    fn loops_and_parallel_edges_are_cycles() {
        let g = Graph::new(2, vec![(0, 0), (0, 1), (1, 0)]).unwrap();
        assert!(!g.is_acyclic(&[0]));
        assert!(g.is_acyclic(&[1]));
        assert!(!g.is_acyclic(&[1, 2]));
    }

    #[test]
    fn large_selection_uses_heap_union_find() {
        let g = Graph::cycle(40);
        let all: Vec<usize> = (0..40).collect();
        assert!(!g.is_acyclic(&all));
        assert!(g.is_acyclic(&all[..39]));
    }

    #[test]
    fn petersen_shape() {
        let g = Graph::petersen();
        assert_eq!(g.edge_count(), 15);
        let mut deg = [0; 10];
        for &(u, v) in g.edges() {
            deg[u] += 1;
            deg[v] += 1;
        }
        assert!(deg.iter().all(|&d| d == 3));
    }
}
