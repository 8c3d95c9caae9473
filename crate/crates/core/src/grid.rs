//! Finite grid graphs and exhaustive edge-subset enumeration.
//!
//! Everything here is small by construction: at most 30 edges, so an edge
//! subset is a bitmask in one machine word and full enumeration over all
//! `2^|E|` subsets is always available. Edge order is a pure function of the
//! construction (lexicographic on endpoint coordinates), which keeps subset
//! indices reproducible across runs — LP variables, fixtures and
//! certificates all index by it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on edge count so subsets fit in a `u32` mask (Q_4 has exactly 32).
pub const MAX_EDGES: usize = 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("hypercube dimension {0} out of range (1..=4)")]
    DimensionOutOfRange(usize),
    #[error("graph has {0} edges, enumeration supports at most {MAX_EDGES}")]
    TooManyEdges(usize),
}

/// Role of an edge in the 4×2 rectangle's two-probability model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeLabel {
    /// Edge inside one of the 2×2 squares.
    IntraSquare,
    /// One of the two edges joining the squares.
    CrossSquare,
    /// No square structure (hypercubes).
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub label: EdgeLabel,
}

/// A subset of a graph's edges, as a bitmask over edge indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeSubset(pub u32);

impl EdgeSubset {
    pub const EMPTY: EdgeSubset = EdgeSubset(0);

    pub fn contains(self, edge_idx: usize) -> bool {
        self.0 >> edge_idx & 1 == 1
    }

    pub fn with(self, edge_idx: usize) -> EdgeSubset {
        EdgeSubset(self.0 | 1 << edge_idx)
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset_of(self, other: EdgeSubset) -> bool {
        self.0 & !other.0 == 0
    }
}

/// A finite grid graph with a deterministic edge ordering.
///
/// Vertices are integer coordinate tuples, sorted lexicographically; edges
/// are sorted by (smaller endpoint, larger endpoint) in that vertex order.
#[derive(Debug, Clone)]
pub struct SmallGridGraph {
    vertices: Vec<Vec<i16>>,
    edges: Vec<Edge>,
}

impl SmallGridGraph {
    fn new(mut vertices: Vec<Vec<i16>>, coord_edges: Vec<(Vec<i16>, Vec<i16>, EdgeLabel)>) -> Self {
        vertices.sort();
        vertices.dedup();
        let index = |c: &Vec<i16>| vertices.binary_search(c).expect("edge endpoint not a vertex");
        let mut edges: Vec<Edge> = coord_edges
            .into_iter()
            .map(|(u, v, label)| {
                let (mut a, mut b) = (index(&u), index(&v));
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                }
                Edge { a, b, label }
            })
            .collect();
        edges.sort_by_key(|e| (e.a, e.b));
        edges.dedup_by_key(|e| (e.a, e.b));
        assert!(edges.len() <= MAX_EDGES);
        SmallGridGraph { vertices, edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertices(&self) -> &[Vec<i16>] {
        &self.vertices
    }

    pub fn subset_count(&self) -> u64 {
        1u64 << self.edges.len()
    }

    pub fn vertex_index(&self, coord: &[i16]) -> Option<usize> {
        self.vertices.binary_search_by(|v| v.as_slice().cmp(coord)).ok()
    }

    pub fn edge_index(&self, u: &[i16], v: &[i16]) -> Option<usize> {
        let (mut a, mut b) = (self.vertex_index(u)?, self.vertex_index(v)?);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        self.edges.iter().position(|e| e.a == a && e.b == b)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.a == v || e.b == v).count()
    }

    /// Edges that share no vertex with edge `idx`.
    pub fn vertex_disjoint_edges(&self, idx: usize) -> Vec<usize> {
        let e = self.edges[idx];
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, f)| f.a != e.a && f.a != e.b && f.b != e.a && f.b != e.b)
            .map(|(j, _)| j)
            .collect()
    }

    /// Component label (union-find root) of every vertex under the open set `s`.
    pub fn components(&self, s: EdgeSubset) -> Vec<usize> {
        let mut parent: Vec<usize> = (0..self.vertices.len()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for (i, e) in self.edges.iter().enumerate() {
            if s.contains(i) {
                let (ra, rb) = (find(&mut parent, e.a), find(&mut parent, e.b));
                if ra != rb {
                    parent[ra] = rb;
                }
            }
        }
        (0..self.vertices.len()).map(|v| find(&mut parent, v)).collect()
    }

    /// True iff the open edges connect all vertices of the graph.
    pub fn is_connected_spanning(&self, s: EdgeSubset) -> bool {
        let comp = self.components(s);
        comp.iter().all(|&c| c == comp[0])
    }

    /// Number of edge subsets forming a connected spanning subgraph.
    pub fn connected_spanning_count(&self) -> u64 {
        (0..self.subset_count())
            .filter(|&m| self.is_connected_spanning(EdgeSubset(m as u32)))
            .count() as u64
    }
}

/// The hypercube `Q_k` on `{0,1}^k`, `1 <= k <= 4`.
///
/// The cap keeps `2^|E|` enumeration within a single word; larger cubes are
/// only ever reached through renormalization, never enumerated.
pub fn build_hypercube(k: usize) -> Result<SmallGridGraph, GridError> {
    if !(1..=4).contains(&k) {
        return Err(GridError::DimensionOutOfRange(k));
    }
    let n = 1usize << k;
    let vertices: Vec<Vec<i16>> = (0..n)
        .map(|i| (0..k).map(|d| (i >> (k - 1 - d) & 1) as i16).collect())
        .collect();
    let mut edges = Vec::new();
    for u in &vertices {
        for d in 0..k {
            let mut v = u.clone();
            v[d] ^= 1;
            if *u < v {
                edges.push((u.clone(), v, EdgeLabel::Plain));
            }
        }
    }
    Ok(SmallGridGraph::new(vertices, edges))
}

/// The 4×2 rectangle `{0,1,2,3}×{0,1}` with its ten induced edges.
///
/// The two edges joining the 2×2 squares, `{(1,0),(2,0)}` and
/// `{(1,1),(2,1)}`, carry [`EdgeLabel::CrossSquare`]; the other eight are
/// [`EdgeLabel::IntraSquare`].
pub fn build_rectangle_4x2() -> SmallGridGraph {
    let vertices: Vec<Vec<i16>> = (0..4i16)
        .flat_map(|x| (0..2i16).map(move |y| vec![x, y]))
        .collect();
    let mut edges = Vec::new();
    for x in 0..4i16 {
        for y in 0..2i16 {
            if x + 1 < 4 {
                let label = if x == 1 { EdgeLabel::CrossSquare } else { EdgeLabel::IntraSquare };
                edges.push((vec![x, y], vec![x + 1, y], label));
            }
            if y + 1 < 2 {
                edges.push((vec![x, y], vec![x, y + 1], EdgeLabel::IntraSquare));
            }
        }
    }
    SmallGridGraph::new(vertices, edges)
}

/// A pair of 3-vertex targets, one in each 2×2 square of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetPair {
    /// Target inside the left square `{0,1}×{0,1}`.
    pub a: [usize; 3],
    /// Target inside the right square `{2,3}×{0,1}`.
    pub b: [usize; 3],
}

/// True iff a single open component contains at least two vertices of `tp.a`
/// and at least two of `tp.b`.
pub fn good_pair_event(g: &SmallGridGraph, s: EdgeSubset, tp: &TargetPair) -> bool {
    let comp = g.components(s);
    for root in tp.a.iter().map(|&v| comp[v]) {
        let in_a = tp.a.iter().filter(|&&v| comp[v] == root).count();
        let in_b = tp.b.iter().filter(|&&v| comp[v] == root).count();
        if in_a >= 2 && in_b >= 2 {
            return true;
        }
    }
    false
}

/// True iff a single open component meets at least three vertices of each
/// 2×2 square of the rectangle.
pub fn three_of_four_event(g: &SmallGridGraph, s: EdgeSubset) -> bool {
    let comp = g.components(s);
    let left: Vec<usize> = square_vertices(g, 0);
    let right: Vec<usize> = square_vertices(g, 1);
    for &v in &left {
        let root = comp[v];
        let in_l = left.iter().filter(|&&w| comp[w] == root).count();
        let in_r = right.iter().filter(|&&w| comp[w] == root).count();
        if in_l >= 3 && in_r >= 3 {
            return true;
        }
    }
    false
}

fn square_vertices(g: &SmallGridGraph, square: i16) -> Vec<usize> {
    let xs = [2 * square, 2 * square + 1];
    let mut out = Vec::with_capacity(4);
    for &x in &xs {
        for y in 0..2i16 {
            out.push(g.vertex_index(&[x, y]).expect("rectangle vertex"));
        }
    }
    out
}

/// The 3-element target `S^{r,s}` of square `(i,0)`: the square minus its
/// vertex `(2i+r, s)`.
fn target(g: &SmallGridGraph, square: i16, r: i16, s: i16) -> [usize; 3] {
    let excluded = [2 * square + r, s];
    let mut out = [0usize; 3];
    let mut n = 0;
    for x in [2 * square, 2 * square + 1] {
        for y in 0..2i16 {
            if [x, y] != excluded {
                out[n] = g.vertex_index(&[x, y]).expect("rectangle vertex");
                n += 1;
            }
        }
    }
    assert_eq!(n, 3);
    out
}

/// The four target-pair configurations C0..C3 on the 4×2 rectangle.
///
/// C0 = (S^{0,1} left, S^{1,1} right), C1 = (S^{1,0}, S^{1,1}),
/// C2 = (S^{0,1}, S^{0,0}), C3 = (S^{1,0}, S^{0,0}).
pub fn config_target_pairs(g: &SmallGridGraph) -> [TargetPair; 4] {
    let s = |sq, r, ss| target(g, sq, r, ss);
    [
        TargetPair { a: s(0, 0, 1), b: s(1, 1, 1) },
        TargetPair { a: s(0, 1, 0), b: s(1, 1, 1) },
        TargetPair { a: s(0, 0, 1), b: s(1, 0, 0) },
        TargetPair { a: s(0, 1, 0), b: s(1, 0, 0) },
    ]
}

/// The ten 2-edge patterns whose closure is forced whenever the
/// three-of-four event fails, as edge-index pairs of the rectangle.
pub fn ten_closed_patterns(g: &SmallGridGraph) -> [[usize; 2]; 10] {
    let v = |x: i16| g.edge_index(&[x, 0], &[x, 1]).unwrap();
    let b = |x: i16| g.edge_index(&[x, 0], &[x + 1, 0]).unwrap();
    let t = |x: i16| g.edge_index(&[x, 1], &[x + 1, 1]).unwrap();
    [
        [v(0), v(1)],
        [v(1), v(2)],
        [v(2), v(3)],
        [b(0), t(0)],
        [b(1), t(1)],
        [b(2), t(2)],
        [b(0), t(1)],
        [b(2), t(1)],
        [b(1), t(0)],
        [b(1), t(2)],
    ]
}

/// Exhaustively checks, over all 1024 subsets of the rectangle's edges, that
/// whenever no component meets three vertices of each square, at least one
/// of the ten 2-edge patterns is entirely closed.
pub fn verify_ten_pattern_cover() -> bool {
    let g = build_rectangle_4x2();
    let patterns = ten_closed_patterns(&g);
    (0..g.subset_count()).all(|m| {
        let s = EdgeSubset(m as u32);
        three_of_four_event(&g, s)
            || patterns.iter().any(|p| !s.contains(p[0]) && !s.contains(p[1]))
    })
}

/// Subset counts per event class, emitted by the CLI as a JSON regression
/// fixture.
#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct EnumerationFixtures {
    pub q3_connected_spanning: u64,
    pub rect_class_counts: [u64; 4],
    pub rect_three_of_four: u64,
}

pub fn enumeration_fixtures() -> EnumerationFixtures {
    let q3 = build_hypercube(3).expect("k=3 in range");
    let rect = build_rectangle_4x2();
    let tps = config_target_pairs(&rect);
    let mut rect_class_counts = [0u64; 4];
    let mut rect_three_of_four = 0u64;
    for m in 0..rect.subset_count() {
        let s = EdgeSubset(m as u32);
        for (i, tp) in tps.iter().enumerate() {
            if good_pair_event(&rect, s, tp) {
                rect_class_counts[i] += 1;
            }
        }
        if three_of_four_event(&rect, s) {
            rect_three_of_four += 1;
        }
    }
    EnumerationFixtures {
        q3_connected_spanning: q3.connected_spanning_count(),
        rect_class_counts,
        rect_three_of_four,
    }
}
