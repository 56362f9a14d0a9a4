//! Noncrossing trees on boundary-circle vertices.
//!
//! Vertices are labelled 1..=n counterclockwise, vertex `j` sitting at
//! boundary position `exp(2*pi*i*(j-1)/n)` with vertex 1 the root. Edges
//! are chords; crossing is decided by the interleaving predicate on
//! labels, never by floating-point geometry.

use std::collections::HashMap;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::counting;

/// Unordered chord `{a, b}`, stored with `a < b`.
pub type Edge = (u32, u32);

/// First violated invariant of a candidate tree, with witness edges.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("a tree needs at least one vertex")]
    NoVertices,
    #[error("edge {edge:?} has a label outside 1..={n} or repeats a vertex")]
    BadLabel { edge: Edge, n: u32 },
    #[error("edge {edge:?} appears more than once")]
    DuplicateEdge { edge: Edge },
    #[error("expected {expected} edges for {n} vertices, found {actual}")]
    EdgeCount { n: u32, expected: usize, actual: usize },
    #[error("edges {first:?} and {second:?} cross")]
    Crossing { first: Edge, second: Edge },
    #[error("vertex {vertex} is not reachable from vertex 1")]
    Disconnected { vertex: u32 },
}

/// Two chords cross iff their endpoints strictly interleave on the circle.
fn crosses(e: Edge, f: Edge) -> bool {
    let (a, b) = e;
    let (c, d) = f;
    (a < c && c < b && b < d) || (c < a && a < d && d < b)
}

/// Checks every invariant of an `n`-vertex noncrossing tree on raw edge
/// data. Total: never panics, reports the first violation found in the
/// order labels, duplicates, edge count, crossings, connectivity.
pub fn validate(n: u32, edges: &[Edge]) -> Result<(), Violation> {
    if n == 0 {
        return Err(Violation::NoVertices);
    }
    for &(a, b) in edges {
        if a < 1 || b < 1 || a > n || b > n || a == b {
            return Err(Violation::BadLabel { edge: (a, b), n });
        }
    }
    let mut sorted: Vec<Edge> = edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    sorted.sort_unstable();
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(Violation::DuplicateEdge { edge: w[0] });
        }
    }
    if edges.len() != (n as usize) - 1 {
        return Err(Violation::EdgeCount {
            n,
            expected: n as usize - 1,
            actual: edges.len(),
        });
    }
    for i in 0..sorted.len() {
        for j in (i + 1)..sorted.len() {
            if crosses(sorted[i], sorted[j]) {
                return Err(Violation::Crossing {
                    first: sorted[i],
                    second: sorted[j],
                });
            }
        }
    }
    // n-1 edges and connected imply acyclic
    let mut seen = vec![false; n as usize + 1];
    let mut stack = vec![1u32];
    seen[1] = true;
    let mut adj: HashMap<u32, Vec<u32>> = HashMap::new();
    for &(a, b) in &sorted {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    while let Some(v) = stack.pop() {
        for &w in adj.get(&v).into_iter().flatten() {
            if !seen[w as usize] {
                seen[w as usize] = true;
                stack.push(w);
            }
        }
    }
    if let Some(v) = (1..=n).find(|&v| !seen[v as usize]) {
        return Err(Violation::Disconnected { vertex: v });
    }
    Ok(())
}

/// A validated noncrossing tree. Immutable; every constructor checks the
/// invariants, so a value of this type is always a genuine nc tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawTree", into = "RawTree")]
pub struct NcTree {
    n: u32,
    edges: Vec<Edge>,
}

#[derive(Serialize, Deserialize, Clone)]
struct RawTree {
    n: u32,
    edges: Vec<Edge>,
}

impl TryFrom<RawTree> for NcTree {
    type Error = Violation;
    fn try_from(raw: RawTree) -> Result<Self, Violation> {
        NcTree::new(raw.n, raw.edges)
    }
}

impl From<NcTree> for RawTree {
    fn from(t: NcTree) -> RawTree {
        RawTree { n: t.n, edges: t.edges }
    }
}

impl NcTree {
    /// Validates and normalizes (edges stored as `(min,max)`, sorted).
    pub fn new(n: u32, edges: Vec<Edge>) -> Result<Self, Violation> {
        validate(n, &edges)?;
        let mut edges: Vec<Edge> = edges.into_iter().map(|(a, b)| (a.min(b), a.max(b))).collect();
        edges.sort_unstable();
        Ok(NcTree { n, edges })
    }

    pub fn order(&self) -> u32 {
        self.n
    }

    /// Edges as sorted `(min,max)` pairs.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degree(&self, j: u32) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == j || b == j).count()
    }

    /// Edges attached to `j`, ordered starting from `j` and going around
    /// the circle anticlockwise: ascending `(other - j) mod n` in 1..n-1.
    pub fn edge_order_at(&self, j: u32) -> Vec<Edge> {
        let n = self.n;
        let mut at: Vec<(u32, Edge)> = self
            .edges
            .iter()
            .filter(|&&(a, b)| a == j || b == j)
            .map(|&(a, b)| {
                let other = if a == j { b } else { a };
                (((other + n) - j) % n, (a, b))
            })
            .collect();
        at.sort_unstable();
        at.into_iter().map(|(_, e)| e).collect()
    }

    /// Sepal zones in their canonical order: vertex by vertex, and at
    /// each vertex consecutive edge pairs under [`Self::edge_order_at`].
    /// Exactly `n - 2` descriptors for `n >= 2`.
    pub fn sepal_zones(&self) -> Vec<SepalDescriptor> {
        let mut out = Vec::new();
        let mut m = 0u32;
        for j in 1..=self.n {
            let at = self.edge_order_at(j);
            for pair in at.windows(2) {
                m += 1;
                out.push(SepalDescriptor {
                    index: m,
                    vertex: j,
                    edge_pair: (pair[0], pair[1]),
                });
            }
        }
        debug_assert_eq!(out.len() as u32, self.n.saturating_sub(2));
        out
    }

    /// Relabels every vertex `j` to `j + s (mod n)`.
    pub fn rotate(&self, s: u32) -> NcTree {
        let n = self.n;
        let shift = |v: u32| (v - 1 + s) % n + 1;
        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .map(|&(a, b)| {
                let (a, b) = (shift(a), shift(b));
                (a.min(b), a.max(b))
            })
            .collect();
        edges.sort_unstable();
        NcTree { n, edges }
    }

    /// Order of the rotational symmetry group: 2 iff rotating by `n/2`
    /// fixes the tree (then the unique antipodal fixed edge is reported),
    /// else 1.
    pub fn symmetry(&self) -> RotationSymmetry {
        if self.n % 2 == 0 && self.rotate(self.n / 2) == *self {
            let half = self.n / 2;
            let fixed = self
                .edges
                .iter()
                .copied()
                .find(|&(a, b)| b == a + half)
                .expect("half-turn symmetric tree must have an antipodal edge");
            RotationSymmetry::HalfTurn { fixed_edge: fixed }
        } else {
            RotationSymmetry::Trivial
        }
    }

    /// Injective serialization of the labelled tree:
    /// `"n;a-b,c-d,..."` over the sorted edge list.
    pub fn canonical_code(&self) -> String {
        let mut s = format!("{};", self.n);
        for (i, (a, b)) in self.edges.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!("{a}-{b}"));
        }
        s
    }

    /// Lexicographic minimum of [`Self::canonical_code`] over all `n`
    /// rotations; equal exactly on rotation classes.
    pub fn rotation_class_code(&self) -> String {
        (0..self.n)
            .map(|s| self.rotate(s).canonical_code())
            .min()
            .expect("n >= 1")
    }

    /// Planar dual with the fixed interleaved labelling: dual vertex `j`
    /// lives in the face containing the boundary arc between primal
    /// vertices `j-1` and `j` (the half-step-clockwise convention).
    pub fn dual(&self) -> NcTree {
        let n = self.n;
        if n == 1 {
            return self.clone();
        }
        // Darts around each vertex in anticlockwise rotation order.
        // Kind ranks: the ccw boundary arc leaves first, chords by
        // anticlockwise target, the cw boundary arc leaves last.
        #[derive(Clone, Copy, PartialEq, Eq, Debug)]
        enum Kind {
            ArcCcw(u32), // travels gap g from vertex g-1 to vertex g
            Chord(usize),
            ArcCw(u32), // travels gap g from vertex g to vertex g-1
        }
        #[derive(Clone, Copy, Debug)]
        struct Dart {
            from: u32,
            to: u32,
            kind: Kind,
        }
        let prev = |v: u32| if v == 1 { n } else { v - 1 };
        let mut darts: Vec<Dart> = Vec::new();
        for g in 1..=n {
            darts.push(Dart { from: prev(g), to: g, kind: Kind::ArcCcw(g) });
            darts.push(Dart { from: g, to: prev(g), kind: Kind::ArcCw(g) });
        }
        for (idx, &(a, b)) in self.edges.iter().enumerate() {
            darts.push(Dart { from: a, to: b, kind: Kind::Chord(idx) });
            darts.push(Dart { from: b, to: a, kind: Kind::Chord(idx) });
        }
        let rank = |k: Kind| match k {
            Kind::ArcCcw(_) => 0u8,
            Kind::Chord(_) => 1,
            Kind::ArcCw(_) => 2,
        };
        let mut rotation: HashMap<u32, Vec<usize>> = HashMap::new();
        for v in 1..=n {
            let mut local: Vec<usize> = (0..darts.len()).filter(|&d| darts[d].from == v).collect();
            local.sort_by_key(|&d| (((darts[d].to + n) - v) % n, rank(darts[d].kind)));
            rotation.insert(v, local);
        }
        let reverse_of = |d: &Dart| -> (u32, u32, Kind) {
            let k = match d.kind {
                Kind::ArcCcw(g) => Kind::ArcCw(g),
                Kind::ArcCw(g) => Kind::ArcCcw(g),
                Kind::Chord(i) => Kind::Chord(i),
            };
            (d.to, d.from, k)
        };
        // Trace faces: after arriving at `to`, continue with the dart
        // clockwise-next from the reversed dart.
        let mut face_of = vec![usize::MAX; darts.len()];
        let mut n_faces = 0usize;
        for start in 0..darts.len() {
            if face_of[start] != usize::MAX {
                continue;
            }
            let face = n_faces;
            n_faces += 1;
            let mut d = start;
            loop {
                face_of[d] = face;
                let (rf, rt, rk) = reverse_of(&darts[d]);
                let local = &rotation[&rf];
                let pos = local
                    .iter()
                    .position(|&x| darts[x].from == rf && darts[x].to == rt && darts[x].kind == rk)
                    .expect("reverse dart present");
                d = local[(pos + local.len() - 1) % local.len()];
                if d == start {
                    break;
                }
            }
        }
        // Bounded faces carry exactly one anticlockwise arc; its gap
        // index is the dual vertex label.
        let mut gap_of_face: HashMap<usize, u32> = HashMap::new();
        for (i, d) in darts.iter().enumerate() {
            if let Kind::ArcCcw(g) = d.kind {
                let prior = gap_of_face.insert(face_of[i], g);
                debug_assert!(prior.is_none(), "two gaps in one face");
            }
        }
        let mut dual_edges: Vec<Edge> = Vec::with_capacity(self.edges.len());
        for idx in 0..self.edges.len() {
            let sides: Vec<u32> = darts
                .iter()
                .enumerate()
                .filter(|(_, d)| d.kind == Kind::Chord(idx))
                .map(|(i, _)| gap_of_face[&face_of[i]])
                .collect();
            debug_assert_eq!(sides.len(), 2);
            dual_edges.push((sides[0].min(sides[1]), sides[0].max(sides[1])));
        }
        NcTree::new(n, dual_edges).expect("dual of an nc tree is an nc tree")
    }
}

/// One sepal zone: the `index`-th zone overall, attached at `vertex`,
/// between two consecutive edges of the circular-start order there.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SepalDescriptor {
    /// 1-based position in the global zone order.
    pub index: u32,
    /// Owning tree vertex.
    pub vertex: u32,
    /// Consecutive edges `(e_l, e_{l+1})` at `vertex`.
    pub edge_pair: (Edge, Edge),
}

/// Result of the half-turn symmetry test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotationSymmetry {
    Trivial,
    HalfTurn { fixed_edge: Edge },
}

impl RotationSymmetry {
    pub fn order(&self) -> u32 {
        match self {
            RotationSymmetry::Trivial => 1,
            RotationSymmetry::HalfTurn { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("enumeration of {n}-trees would emit {count} trees, over the cap {cap}")]
pub struct CapExceeded {
    pub n: u32,
    pub count: counting::BigCount,
    pub cap: u64,
}

type EdgeList = Vec<Edge>;

/// Recursive generator over the interval decomposition: a tree on 1..n
/// splits at the smallest neighbour `j` of vertex 1 into a tree on 2..j,
/// the edge `{1,j}`, and a pair of trees on `j..j+c-1` and `j+c..n,1`.
fn all_edge_lists(n: usize, memo: &mut Vec<Option<Rc<Vec<EdgeList>>>>) -> Rc<Vec<EdgeList>> {
    if let Some(v) = &memo[n] {
        return Rc::clone(v);
    }
    let mut out: Vec<EdgeList> = Vec::new();
    if n == 1 {
        out.push(Vec::new());
    } else {
        for j in 2..=n {
            let m = n + 2 - j; // vertices of the wrap-around block j..n,1
            let left = all_edge_lists(j - 1, memo);
            for g1 in left.iter() {
                for c in 1..=(m - 1) {
                    let ta = all_edge_lists(c, memo);
                    let tb = all_edge_lists(m - c, memo);
                    for ea in ta.iter() {
                        for eb in tb.iter() {
                            let mut edges: EdgeList = Vec::with_capacity(n - 1);
                            // tree on 2..j
                            edges.extend(g1.iter().map(|&(a, b)| (a + 1, b + 1)));
                            edges.push((1, j as u32));
                            // tree on j..j+c-1
                            edges.extend(
                                ea.iter()
                                    .map(|&(a, b)| (a + j as u32 - 1, b + j as u32 - 1)),
                            );
                            // tree on j+c..n,1 (only its last label wraps)
                            let base = (j + c - 1) as u32;
                            let wrap = |v: u32| {
                                let w = v + base;
                                if w == n as u32 + 1 {
                                    1
                                } else {
                                    w
                                }
                            };
                            edges.extend(eb.iter().map(|&(a, b)| {
                                let (a, b) = (wrap(a), wrap(b));
                                (a.min(b), a.max(b))
                            }));
                            out.push(edges);
                        }
                    }
                }
            }
        }
    }
    let rc = Rc::new(out);
    memo[n] = Some(Rc::clone(&rc));
    rc
}

/// Every noncrossing tree of order `n`, each exactly once, sorted by
/// canonical code.
pub fn enumerate(n: u32) -> Vec<NcTree> {
    assert!(n >= 1, "enumerate is defined for n >= 1");
    let mut memo = vec![None; n as usize + 1];
    let lists = all_edge_lists(n as usize, &mut memo);
    let mut trees: Vec<NcTree> = lists
        .iter()
        .map(|edges| {
            let mut edges = edges.clone();
            edges.sort_unstable();
            debug_assert!(validate(n, &edges).is_ok());
            NcTree { n, edges }
        })
        .collect();
    trees.sort_by(|a, b| a.canonical_code().cmp(&b.canonical_code()));
    trees
}

/// [`enumerate`] guarded by an output cap; the exact count is computed
/// first, so no work is done when the cap would be exceeded.
pub fn enumerate_capped(n: u32, cap: u64) -> Result<Vec<NcTree>, CapExceeded> {
    let count = counting::count_A(n as u64);
    if count > counting::BigCount::from(cap) {
        return Err(CapExceeded { n, count, cap });
    }
    Ok(enumerate(n))
}
