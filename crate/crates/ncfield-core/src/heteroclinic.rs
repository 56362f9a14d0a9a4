//! The maximal-degeneracy stratum: fields of degree `k+1` with `k`
//! heteroclinic connections.
//!
//! The separatrix graph, extended by the marked points at infinity and
//! with the separatrix tangent to the positive real direction collapsed
//! into the root, becomes an ordered rooted ternary tree. Together with
//! the flow-oriented connection integrals `nu` (real and positive) it
//! classifies the stratum.

use std::fmt;

use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::{SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::counting::{self, BigCount};
use crate::realization::{eta_residual, newton_solve};
use crate::scalar::{wrap_angle, Scalar, C};
use crate::vector_field::{trace_all, AntiPolyField, Terminal, TraceConfig, TraceError};

/// Ordered rooted tree in which every vertex has zero or three children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TernaryTree {
    Leaf,
    Internal(Box<[TernaryTree; 3]>),
}

impl TernaryTree {
    pub fn internal(children: [TernaryTree; 3]) -> Self {
        TernaryTree::Internal(Box::new(children))
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TernaryTree::Leaf)
    }

    pub fn internal_vertex_count(&self) -> usize {
        match self {
            TernaryTree::Leaf => 0,
            TernaryTree::Internal(ch) => {
                1 + ch.iter().map(|c| c.internal_vertex_count()).sum::<usize>()
            }
        }
    }

    /// Internal edges in the canonical total order: ancestor before
    /// descendant, left before right among incomparable edges. This is
    /// the preorder emission over internal children; vertex ids number
    /// the internal vertices in the same traversal.
    pub fn internal_edge_order(&self) -> Vec<InternalEdge> {
        let mut edges = Vec::new();
        let mut next_id = 0usize;
        fn walk(t: &TernaryTree, my_id: usize, next_id: &mut usize, edges: &mut Vec<InternalEdge>) {
            let TernaryTree::Internal(ch) = t else { return };
            for (pos, child) in ch.iter().enumerate() {
                if let TernaryTree::Internal(_) = child {
                    *next_id += 1;
                    let child_id = *next_id;
                    edges.push(InternalEdge { parent: my_id, child: child_id, child_position: pos });
                    walk(child, child_id, next_id, edges);
                }
            }
        }
        if let TernaryTree::Internal(_) = self {
            walk(self, 0, &mut next_id, &mut edges);
        }
        edges
    }
}

/// Edge between two internal vertices; ids are preorder over internal
/// vertices, `child_position` is 0-based among the three children.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InternalEdge {
    pub parent: usize,
    pub child: usize,
    pub child_position: usize,
}

impl Serialize for TernaryTree {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TernaryTree::Leaf => s.serialize_u32(0),
            TernaryTree::Internal(ch) => {
                let mut seq = s.serialize_seq(Some(3))?;
                for c in ch.iter() {
                    seq.serialize_element(c)?;
                }
                seq.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for TernaryTree {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = TernaryTree;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "0 for a leaf or an array of three subtrees")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<TernaryTree, E> {
                if v == 0 {
                    Ok(TernaryTree::Leaf)
                } else {
                    Err(E::custom("leaves are encoded as 0"))
                }
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<TernaryTree, E> {
                self.visit_u64(v.try_into().map_err(|_| E::custom("leaves are encoded as 0"))?)
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<TernaryTree, A::Error> {
                let a: TernaryTree =
                    seq.next_element()?.ok_or_else(|| serde::de::Error::custom("need 3 children"))?;
                let b: TernaryTree =
                    seq.next_element()?.ok_or_else(|| serde::de::Error::custom("need 3 children"))?;
                let c: TernaryTree =
                    seq.next_element()?.ok_or_else(|| serde::de::Error::custom("need 3 children"))?;
                if seq.next_element::<TernaryTree>()?.is_some() {
                    return Err(serde::de::Error::custom("internal vertices have exactly 3 children"));
                }
                Ok(TernaryTree::internal([a, b, c]))
            }
        }
        d.deserialize_any(V)
    }
}

/// All ordered ternary trees with `m` internal vertices, each once.
pub fn enumerate_ternary(m: usize) -> Vec<TernaryTree> {
    let mut memo: Vec<Vec<TernaryTree>> = vec![vec![TernaryTree::Leaf]];
    for size in 1..=m {
        let mut out = Vec::new();
        for a in 0..size {
            for b in 0..size - a {
                let c = size - 1 - a - b;
                for ta in memo[a].clone() {
                    for tb in memo[b].clone() {
                        for tc in memo[c].clone() {
                            out.push(TernaryTree::internal([ta.clone(), tb.clone(), tc.clone()]));
                        }
                    }
                }
            }
        }
        memo.push(out);
    }
    memo.swap_remove(m)
}

/// [`enumerate_ternary`] guarded by an output cap via the exact count.
pub fn enumerate_ternary_capped(m: usize, cap: u64) -> Result<Vec<TernaryTree>, crate::nc_tree::CapExceeded> {
    let count = counting::count_ternary(m as u64);
    if count > BigCount::from(cap) {
        return Err(crate::nc_tree::CapExceeded { n: m as u32, count, cap });
    }
    Ok(enumerate_ternary(m))
}

/// Number of equivalence classes of fields of degree `k+1` with `k`
/// connections: `A(k+2)`.
pub fn count_hetero_classes(k: u64) -> BigCount {
    counting::count_A(k + 2)
}

/// Classification datum of the maximal-heteroclinic stratum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroInvariant<T> {
    pub tree: TernaryTree,
    pub nu: Vec<T>,
}

#[derive(Debug, Clone, Error)]
pub enum HeteroError {
    #[error("roots are not all simple")]
    MultipleRoot,
    #[error("trace failed: {0}")]
    TraceFailed(#[from] TraceError),
    #[error("separatrix census does not match the stratum: {details}")]
    WrongConnectionCount { details: String },
    #[error("connection integral {index} is not real positive (re={re:e}, im={im:e})")]
    NotRealPositive { index: usize, re: f64, im: f64 },
    #[error("invariant has {actual} components, tree with {internal} internal vertices needs {expected}")]
    NuLengthMismatch { internal: usize, expected: usize, actual: usize },
    #[error("nu component {index} must be positive")]
    NuNotPositive { index: usize },
    #[error("boundary approach stalled at imaginary part {s:e}")]
    BoundaryApproachStalled { s: f64 },
    #[error("realized field failed verification: {details}")]
    VerificationFailed { details: String },
    #[error(transparent)]
    Field(#[from] crate::vector_field::FieldError),
}

#[derive(Debug, Clone, Copy)]
enum SlotTarget {
    Infinity(u32),
    Connection { other: usize },
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    angle: f64,
    outgoing: bool,
    target: SlotTarget,
}

/// Extracts the ternary-tree invariant of a field on the maximal
/// stratum: all roots simple, exactly one separatrix per marked point,
/// and `k` flow-oriented connections with real positive integrals.
pub fn extract_hetero<T: Scalar>(
    f: &AntiPolyField<T>,
    cfg: &TraceConfig<T>,
) -> Result<HeteroInvariant<T>, HeteroError> {
    if f.root_degeneracy().is_some() {
        return Err(HeteroError::MultipleRoot);
    }
    let k = f.k();
    let n_roots = f.roots().len();
    let traces = trace_all(f, cfg)?;

    // census: every marked point exactly once
    let mut marked_seen = vec![0usize; 2 * k + 4];
    let mut landings = Vec::new();
    for (idx, t) in traces.iter().enumerate() {
        match t.terminal {
            Terminal::MarkedPoint { index } => marked_seen[index as usize] += 1,
            Terminal::LandingZero { root, .. } => landings.push((idx, t.origin, root)),
            Terminal::Unresolved => {
                return Err(HeteroError::WrongConnectionCount {
                    details: "unresolved trace".into(),
                })
            }
        }
    }
    if let Some(j) = marked_seen.iter().position(|&c| c != 1) {
        return Err(HeteroError::WrongConnectionCount {
            details: format!("marked point {j} attaches {} separatrices, expected 1", marked_seen[j]),
        });
    }
    if landings.len() != 2 * k {
        return Err(HeteroError::WrongConnectionCount {
            details: format!("{} landing traces, expected {}", landings.len(), 2 * k),
        });
    }

    // pair landing traces into flow-oriented connections
    #[derive(Clone, Copy)]
    struct Connection {
        source: usize,
        sink: usize,
        source_angle: f64,
        sink_angle: f64,
    }
    let mut partial: std::collections::HashMap<(usize, usize), (Option<f64>, Option<f64>)> =
        std::collections::HashMap::new();
    for &(idx, origin, target) in &landings {
        let t = &traces[idx];
        let angle = t.launch_angle.to_f64().unwrap_or(0.0);
        let key = if t.class.is_outgoing() { (origin, target) } else { (target, origin) };
        let entry = partial.entry(key).or_insert((None, None));
        let slot = if t.class.is_outgoing() { &mut entry.0 } else { &mut entry.1 };
        if slot.is_some() {
            return Err(HeteroError::WrongConnectionCount {
                details: format!("connection {key:?} traced twice from the same end"),
            });
        }
        *slot = Some(angle);
    }
    let mut connections = Vec::with_capacity(k);
    for ((source, sink), (out_angle, in_angle)) in partial {
        let (Some(sa), Some(ia)) = (out_angle, in_angle) else {
            return Err(HeteroError::WrongConnectionCount {
                details: format!("connection {source}->{sink} seen from one end only"),
            });
        };
        connections.push(Connection { source, sink, source_angle: sa, sink_angle: ia });
    }
    if connections.len() != k {
        return Err(HeteroError::WrongConnectionCount {
            details: format!("{} distinct connections, expected {k}", connections.len()),
        });
    }

    // four local slots per root, anticlockwise
    let mut slots: Vec<Vec<Slot>> = vec![Vec::with_capacity(4); n_roots];
    for t in &traces {
        if let Terminal::MarkedPoint { index } = t.terminal {
            slots[t.origin].push(Slot {
                angle: t.launch_angle.to_f64().unwrap_or(0.0),
                outgoing: t.class.is_outgoing(),
                target: SlotTarget::Infinity(index),
            });
        }
    }
    for c in &connections {
        slots[c.source].push(Slot {
            angle: c.source_angle,
            outgoing: true,
            target: SlotTarget::Connection { other: c.sink },
        });
        slots[c.sink].push(Slot {
            angle: c.sink_angle,
            outgoing: false,
            target: SlotTarget::Connection { other: c.source },
        });
    }
    for (j, s) in slots.iter_mut().enumerate() {
        if s.len() != 4 {
            return Err(HeteroError::WrongConnectionCount {
                details: format!("root {j} has {} separatrix slots", s.len()),
            });
        }
        s.sort_by(|a, b| a.angle.partial_cmp(&b.angle).unwrap());
    }

    // the tree root owns the separatrix to marked point 0
    let root_vertex = slots
        .iter()
        .position(|s| {
            s.iter()
                .any(|slot| matches!(slot.target, SlotTarget::Infinity(0)))
        })
        .expect("marked point 0 attaches to exactly one root");
    let root_parent_slot = slots[root_vertex]
        .iter()
        .find(|slot| matches!(slot.target, SlotTarget::Infinity(0)))
        .copied()
        .unwrap();
    if !root_parent_slot.outgoing {
        return Err(HeteroError::WrongConnectionCount {
            details: "separatrix to the attracting point 0 is not outgoing".into(),
        });
    }

    // recursive ordered build: children are the remaining slots
    // anticlockwise after the parent slot
    struct Builder<'a> {
        slots: &'a [Vec<Slot>],
        edges: Vec<(usize, usize)>, // (source root, sink root), preorder
        leaves: Vec<u32>,
        visited: Vec<bool>,
    }
    impl Builder<'_> {
        fn build(&mut self, vertex: usize, parent_angle: f64) -> Result<TernaryTree, String> {
            if self.visited[vertex] {
                return Err(format!("connection graph revisits root {vertex}"));
            }
            self.visited[vertex] = true;
            let mut others: Vec<Slot> = self.slots[vertex]
                .iter()
                .filter(|s| (s.angle - parent_angle).abs() > 1e-9)
                .copied()
                .collect();
            if others.len() != 3 {
                return Err(format!("root {vertex} parent slot not found"));
            }
            others.sort_by(|a, b| {
                let wa = wrap_angle(a.angle - parent_angle);
                let wb = wrap_angle(b.angle - parent_angle);
                wa.partial_cmp(&wb).unwrap()
            });
            let mut children = Vec::with_capacity(3);
            for slot in others {
                match slot.target {
                    SlotTarget::Infinity(idx) => {
                        self.leaves.push(idx);
                        children.push(TernaryTree::Leaf);
                    }
                    SlotTarget::Connection { other } => {
                        let (source, sink) =
                            if slot.outgoing { (vertex, other) } else { (other, vertex) };
                        self.edges.push((source, sink));
                        let back = self.slots[other]
                            .iter()
                            .find(|s| match s.target {
                                SlotTarget::Connection { other: o } => {
                                    o == vertex && s.outgoing != slot.outgoing
                                }
                                _ => false,
                            })
                            .ok_or_else(|| format!("missing back slot {vertex}<->{other}"))?;
                        children.push(self.build(other, back.angle)?);
                    }
                }
            }
            Ok(TernaryTree::internal([
                children[0].clone(),
                children[1].clone(),
                children[2].clone(),
            ]))
        }
    }
    let mut builder = Builder {
        slots: &slots,
        edges: Vec::new(),
        leaves: Vec::new(),
        visited: vec![false; n_roots],
    };
    let tree = builder
        .build(root_vertex, root_parent_slot.angle)
        .map_err(|details| HeteroError::WrongConnectionCount { details })?;
    if builder.visited.iter().any(|&v| !v) {
        return Err(HeteroError::WrongConnectionCount {
            details: "connection graph is not connected".into(),
        });
    }
    // leaves must read the circle anticlockwise
    let expect: Vec<u32> = (1..=(2 * k as u32 + 3)).collect();
    if builder.leaves != expect {
        return Err(HeteroError::WrongConnectionCount {
            details: format!("leaf order {:?} is not the boundary order", builder.leaves),
        });
    }

    // flow-oriented integrals in the internal-edge order
    let mut nu = Vec::with_capacity(k);
    for (m, &(source, sink)) in builder.edges.iter().enumerate() {
        let v = f.eval_antideriv(f.roots()[sink]) - f.eval_antideriv(f.roots()[source]);
        if v.im.abs() > T::val(1e-9) || v.re <= T::zero() {
            return Err(HeteroError::NotRealPositive {
                index: m,
                re: v.re.to_f64().unwrap_or(f64::NAN),
                im: v.im.to_f64().unwrap_or(f64::NAN),
            });
        }
        nu.push(v.re);
    }
    debug_assert_eq!(tree.internal_vertex_count(), k + 1);
    debug_assert_eq!(tree.internal_edge_order().len(), k);
    Ok(HeteroInvariant { tree, nu })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SlotKind {
    Out,
    In,
}

impl SlotKind {
    fn flip(self) -> Self {
        match self {
            SlotKind::Out => SlotKind::In,
            SlotKind::In => SlotKind::Out,
        }
    }
}

/// Flow orientation of each internal edge, derived from the alternation
/// of outgoing and incoming slots around every saddle: the collapsed
/// root slot is outgoing, and the edge to the `p`-th child (0-based)
/// carries the parent's slot kind iff `p == 1`.
fn edge_orientations(tree: &TernaryTree) -> Vec<(usize, usize)> {
    let edges = tree.internal_edge_order();
    let m = tree.internal_vertex_count();
    let mut kind = vec![SlotKind::Out; m];
    let mut oriented = Vec::with_capacity(edges.len());
    for e in &edges {
        let at_parent = if e.child_position == 1 { kind[e.parent] } else { kind[e.parent].flip() };
        let (source, sink) =
            if at_parent == SlotKind::Out { (e.parent, e.child) } else { (e.child, e.parent) };
        kind[e.child] = at_parent.flip();
        oriented.push((source, sink));
    }
    oriented
}

/// Disk layout used to seed the boundary solve: leaves at their marked
/// directions, internal vertices at subtree means.
fn seed_positions<T: Scalar>(tree: &TernaryTree, scale: T) -> Vec<C<T>> {
    let m = tree.internal_vertex_count();
    let total_leaves = 2 * m + 1; // leaves 1..=2k+3 with m = k+1
    let step = T::TAU() / T::from_usize(total_leaves + 1).unwrap();
    let mut pos = vec![C::new(T::zero(), T::zero()); m];
    let mut leaf_no = 0usize;
    let mut next_id = 0usize;
    fn walk<T: Scalar>(
        t: &TernaryTree,
        my_id: usize,
        leaf_no: &mut usize,
        next_id: &mut usize,
        step: T,
        pos: &mut Vec<C<T>>,
    ) -> C<T> {
        let TernaryTree::Internal(ch) = t else { unreachable!("walk starts at internal vertices") };
        let mut acc = C::new(T::zero(), T::zero());
        let mut count = T::zero();
        for child in ch.iter() {
            match child {
                TernaryTree::Leaf => {
                    *leaf_no += 1;
                    let angle = step * T::from_usize(*leaf_no).unwrap();
                    acc += Complex::from_polar(T::one(), angle);
                    count += T::one();
                }
                TernaryTree::Internal(_) => {
                    *next_id += 1;
                    let child_id = *next_id;
                    acc += walk(child, child_id, leaf_no, next_id, step, pos);
                    count += T::one();
                }
            }
        }
        let centre = acc / C::new(count, T::zero());
        pos[my_id] = centre;
        centre
    }
    walk(tree, 0, &mut leaf_no, &mut next_id, step, &mut pos);
    // the collapsed marked point at angle zero pulls the root outward
    pos[0] = (pos[0] + C::new(T::one(), T::zero())) * C::new(T::val(0.5), T::zero());
    let rms = (pos.iter().fold(T::zero(), |s, p| s + p.norm_sqr())
        / T::from_usize(m).unwrap())
    .sqrt();
    let factor = if rms > T::zero() { scale / rms } else { T::one() };
    pos.iter().map(|&p| p * C::new(factor, T::zero())).collect()
}

/// Realizes `(tree, nu)` on the stratum boundary: the root system with
/// the internal-edge pairing is solved with targets `nu + i s` along a
/// decreasing schedule of `s`, then once more with the targets exactly
/// real, and the result is verified by re-extraction.
pub fn realize_hetero<T: Scalar>(
    tree: &TernaryTree,
    nu: &[T],
) -> Result<AntiPolyField<T>, HeteroError> {
    realize_hetero_seeded(tree, nu, 0)
}

/// [`realize_hetero`] with an explicit seed for the retry noise.
pub fn realize_hetero_seeded<T: Scalar>(
    tree: &TernaryTree,
    nu: &[T],
    rng_seed: u64,
) -> Result<AntiPolyField<T>, HeteroError> {
    let m = tree.internal_vertex_count();
    if m == 0 || nu.len() != m - 1 {
        return Err(HeteroError::NuLengthMismatch {
            internal: m,
            expected: m.saturating_sub(1),
            actual: nu.len(),
        });
    }
    if let Some(i) = nu.iter().position(|&v| !(v > T::zero())) {
        return Err(HeteroError::NuNotPositive { index: i });
    }
    let k = m - 1;
    let pairing = edge_orientations(tree);
    let mean_nu = if k == 0 {
        T::one()
    } else {
        nu.iter().fold(T::zero(), |s, &v| s + v) / T::from_usize(k).unwrap()
    };
    let scale = (mean_nu * T::from_usize(k + 2).unwrap())
        .max(T::val(0.1))
        .powf(T::one() / T::from_usize(k + 2).unwrap());
    let base = seed_positions(tree, scale);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let schedule: [f64; 8] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];
    let mut last_err = HeteroError::BoundaryApproachStalled { s: schedule[0] };
    'attempts: for attempt in 0..60 {
        let sigma = T::val(0.25 * (attempt as f64 / 8.0).min(1.0)) * scale;
        let mut roots: Vec<C<T>> = base
            .iter()
            .map(|&p| {
                if attempt == 0 {
                    p
                } else {
                    p + C::new(
                        sigma * T::val(rng.gen::<f64>() - 0.5),
                        sigma * T::val(rng.gen::<f64>() - 0.5),
                    )
                }
            })
            .collect();
        for &s in &schedule {
            let targets: Vec<C<T>> = nu.iter().map(|&v| Complex::new(v, T::val(s))).collect();
            match newton_solve(&roots, &pairing, &targets, 80) {
                Ok((next, _)) => roots = next,
                Err(_) => {
                    last_err = HeteroError::BoundaryApproachStalled { s };
                    continue 'attempts;
                }
            }
        }
        // final solve with the targets forced exactly real
        let targets: Vec<C<T>> = nu.iter().map(|&v| Complex::new(v, T::zero())).collect();
        match newton_solve(&roots, &pairing, &targets, 80) {
            Ok((next, _)) => roots = next,
            Err(_) => {
                last_err = HeteroError::BoundaryApproachStalled { s: 0.0 };
                continue 'attempts;
            }
        }
        let field = AntiPolyField::from_roots_centred(roots)?;
        let cfg = TraceConfig::for_field(&field);
        match extract_hetero(&field, &cfg) {
            Ok(inv) => {
                let tol = T::val(1e-8) * (T::one() + mean_nu);
                let nu_ok = inv.nu.len() == nu.len()
                    && inv.nu.iter().zip(nu.iter()).all(|(a, b)| (*a - *b).abs() <= tol);
                if &inv.tree == tree && nu_ok {
                    return Ok(field);
                }
                last_err = HeteroError::VerificationFailed {
                    details: format!(
                        "extracted invariant differs (tree match: {}, nu: {:?})",
                        &inv.tree == tree,
                        inv.nu.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect::<Vec<_>>()
                    ),
                };
            }
            Err(e) => {
                last_err = HeteroError::VerificationFailed {
                    details: format!("re-extraction failed: {e}"),
                };
            }
        }
    }
    Err(last_err)
}

// A local equality-with-residual helper keeps the hetero solve reusing
// the eta system; exposed for tests.
#[doc(hidden)]
pub fn hetero_residual<T: Scalar>(
    tree: &TernaryTree,
    roots: &[C<T>],
    nu: &[T],
) -> Vec<C<T>> {
    let pairing = edge_orientations(tree);
    let targets: Vec<C<T>> = nu.iter().map(|&v| Complex::new(v, T::zero())).collect();
    eta_residual(roots, &pairing, &targets)
}
