//! Invariant extraction and equivalence of generic fields.
//!
//! The combinatorial invariant is the incoming graph: for each zero, its
//! two incoming separatrices end (in reversed time) at two repelling
//! marked points, and those points, read as tree vertices, form an edge.
//! The analytic invariant pairs the zeros on consecutive edges at each
//! vertex through the exact antiderivative, so its value depends only on
//! the endpoints, never on the traced curves.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::nc_tree::{Edge, NcTree, Violation};
use crate::scalar::{Scalar, C};
use crate::vector_field::{
    AntiPolyField, Genericity, Terminal, TraceConfig, TraceError, TracedSeparatrix,
};

/// Absolute tolerance under which an imaginary part counts as zero
/// (stratum boundary) and above which two eta vectors count as equal.
pub const ETA_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error)]
pub enum ExtractError<T: Scalar> {
    #[error("field is not generic: {0:?}")]
    NotGeneric(Genericity<T>),
    #[error("trace failed: {0}")]
    TraceFailed(#[from] TraceError),
    #[error("inconsistent trace at root {root}: {details}")]
    InconsistentTrace { root: usize, details: String },
    #[error("extracted edges do not form a noncrossing tree: {0}")]
    TreeInvalid(#[from] Violation),
    #[error("eta component {index} is within tolerance of real: stratum boundary")]
    ImEtaZero { index: u32, re: f64, im: f64 },
}

/// Trace-backed extraction: the tree plus the zero sitting on each edge.
#[derive(Debug, Clone)]
pub struct Extraction<T: Scalar> {
    pub tree: NcTree,
    /// Root index on each edge, aligned with `tree.edges()`.
    pub edge_roots: Vec<usize>,
    pub traces: Vec<TracedSeparatrix<T>>,
}

impl<T: Scalar> Extraction<T> {
    pub fn root_on_edge(&self, e: Edge) -> usize {
        let pos = self
            .tree
            .edges()
            .iter()
            .position(|&x| x == e)
            .expect("edge belongs to the extracted tree");
        self.edge_roots[pos]
    }
}

/// The full classification datum of a generic field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize + Copy",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub struct InvariantPair<T> {
    pub tree: NcTree,
    #[serde(with = "eta_pairs")]
    pub eta: Vec<Complex<T>>,
}

mod eta_pairs {
    use num_complex::Complex;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<T: Serialize + Copy, S: Serializer>(
        eta: &[Complex<T>],
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let pairs: Vec<(T, T)> = eta.iter().map(|c| (c.re, c.im)).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, T: Deserialize<'de>, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Vec<Complex<T>>, D::Error> {
        let pairs: Vec<(T, T)> = Vec::deserialize(d)?;
        Ok(pairs.into_iter().map(|(re, im)| Complex::new(re, im)).collect())
    }
}

/// Computed analytic invariant together with any orientation flips that
/// were needed to make the imaginary parts positive. Flips are recorded,
/// never silent; with the canonical conventions none occur.
#[derive(Debug, Clone)]
pub struct EtaVector<T> {
    pub values: Vec<C<T>>,
    pub flipped: Vec<u32>,
}

/// Sepal/petal counts of the complement of the separatrix graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ZoneCensus {
    pub sepal_count: usize,
    pub petal_count: usize,
}

fn marked_to_vertex(index: u32) -> u32 {
    debug_assert_eq!(index % 2, 1);
    (index + 1) / 2
}

/// Extracts the combinatorial invariant with its root-to-edge matching.
pub fn extract<T: Scalar>(
    f: &AntiPolyField<T>,
    cfg: &TraceConfig<T>,
) -> Result<Extraction<T>, ExtractError<T>> {
    if let Some(bad) = f.root_degeneracy() {
        return Err(ExtractError::NotGeneric(bad));
    }
    let traces = crate::vector_field::trace_all(f, cfg)?;
    // reuse the trace set for the genericity decision on separatrices
    for t in &traces {
        match t.terminal {
            Terminal::LandingZero { root, .. } => {
                let (from, to) = if t.class.is_outgoing() { (t.origin, root) } else { (root, t.origin) };
                return Err(ExtractError::NotGeneric(Genericity::Heteroclinic { from, to }));
            }
            Terminal::Unresolved => {
                return Err(ExtractError::NotGeneric(Genericity::Indeterminate {
                    unresolved_traces: 1,
                }))
            }
            Terminal::MarkedPoint { .. } => {}
        }
    }
    let n_roots = f.roots().len();
    let mut edges: Vec<Edge> = Vec::with_capacity(n_roots);
    let mut owners: Vec<(Edge, usize)> = Vec::with_capacity(n_roots);
    for j in 0..n_roots {
        let mut incoming: Vec<u32> = Vec::with_capacity(2);
        for t in traces.iter().filter(|t| t.origin == j && !t.class.is_outgoing()) {
            match t.terminal {
                Terminal::MarkedPoint { index } => {
                    if index % 2 == 0 {
                        return Err(ExtractError::InconsistentTrace {
                            root: j,
                            details: format!(
                                "incoming separatrix reached attracting marked point {index}"
                            ),
                        });
                    }
                    incoming.push(index);
                }
                _ => unreachable!("landings were filtered above"),
            }
        }
        for t in traces.iter().filter(|t| t.origin == j && t.class.is_outgoing()) {
            if let Terminal::MarkedPoint { index } = t.terminal {
                if index % 2 == 1 {
                    return Err(ExtractError::InconsistentTrace {
                        root: j,
                        details: format!(
                            "outgoing separatrix reached repelling marked point {index}"
                        ),
                    });
                }
            }
        }
        debug_assert_eq!(incoming.len(), 2);
        if incoming[0] == incoming[1] {
            return Err(ExtractError::InconsistentTrace {
                root: j,
                details: format!(
                    "both incoming separatrices reached marked point {}",
                    incoming[0]
                ),
            });
        }
        let (a, b) = (marked_to_vertex(incoming[0]), marked_to_vertex(incoming[1]));
        let e = (a.min(b), a.max(b));
        edges.push(e);
        owners.push((e, j));
    }
    let tree = NcTree::new(n_roots as u32 + 1, edges)?;
    let edge_roots: Vec<usize> = tree
        .edges()
        .iter()
        .map(|&e| {
            owners
                .iter()
                .find(|(oe, _)| *oe == e)
                .map(|&(_, j)| j)
                .expect("every tree edge has an owner")
        })
        .collect();
    Ok(Extraction { tree, edge_roots, traces })
}

/// The combinatorial invariant alone.
pub fn combinatorial_invariant<T: Scalar>(
    f: &AntiPolyField<T>,
    cfg: &TraceConfig<T>,
) -> Result<NcTree, ExtractError<T>> {
    extract(f, cfg).map(|e| e.tree)
}

/// The analytic invariant for a completed extraction: the `m`-th
/// component is `Q(z_b) - Q(z_a)` over the `m`-th sepal descriptor,
/// oriented to positive imaginary part.
pub fn analytic_invariant<T: Scalar>(
    f: &AntiPolyField<T>,
    extraction: &Extraction<T>,
) -> Result<EtaVector<T>, ExtractError<T>> {
    let zones = extraction.tree.sepal_zones();
    let mut values = Vec::with_capacity(zones.len());
    let mut flipped = Vec::new();
    for zone in &zones {
        let (ea, eb) = zone.edge_pair;
        let za = f.roots()[extraction.root_on_edge(ea)];
        let zb = f.roots()[extraction.root_on_edge(eb)];
        let mut eta = f.eval_antideriv(zb) - f.eval_antideriv(za);
        if eta.im.abs() <= T::val(ETA_TOL) {
            return Err(ExtractError::ImEtaZero {
                index: zone.index,
                re: eta.re.to_f64().unwrap_or(f64::NAN),
                im: eta.im.to_f64().unwrap_or(f64::NAN),
            });
        }
        if eta.im < T::zero() {
            eta = -eta;
            flipped.push(zone.index);
        }
        values.push(eta);
    }
    Ok(EtaVector { values, flipped })
}

/// Extracts the full `(tree, eta)` pair.
pub fn invariant_pair<T: Scalar>(
    f: &AntiPolyField<T>,
    cfg: &TraceConfig<T>,
) -> Result<InvariantPair<T>, ExtractError<T>> {
    let ex = extract(f, cfg)?;
    let eta = analytic_invariant(f, &ex)?;
    Ok(InvariantPair { tree: ex.tree, eta: eta.values })
}

/// Zone counts, computed combinatorially from the extracted tree and
/// cross-checked against its incidence sums.
pub fn zone_census<T: Scalar>(
    f: &AntiPolyField<T>,
    cfg: &TraceConfig<T>,
) -> Result<ZoneCensus, ExtractError<T>> {
    let ex = extract(f, cfg)?;
    let n = ex.tree.order();
    let incidence_sum: usize = (1..=n).map(|j| ex.tree.degree(j).saturating_sub(1)).sum();
    let k = f.k();
    assert_eq!(incidence_sum, k, "incidence sum must equal the sepal count");
    Ok(ZoneCensus { sepal_count: incidence_sum, petal_count: 2 * k + 4 })
}

#[derive(Debug, Clone, Error)]
pub enum ClassifyError<T: Scalar> {
    #[error("degree mismatch: {left} vs {right}")]
    DegreeMismatch { left: usize, right: usize },
    #[error(transparent)]
    Extract(#[from] ExtractError<T>),
}

/// A rotation relating two combinatorial invariants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RotationMatch {
    /// Vertex shift `s` with `rotate(tree1, s) = tree2`.
    pub shift: u32,
    /// Whether the index-translated eta vectors also agree.
    pub eta_matches: bool,
}

/// Equivalence summary of two generic fields of equal degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairClassification {
    pub top_equivalent: bool,
    pub analytic_equivalent: bool,
    pub up_to_rotation: Option<RotationMatch>,
}

/// Index translation of the sepal order under a vertex rotation by `s`:
/// zones of the last `s` vertices move to the front.
pub fn eta_index_shift(tree: &NcTree, s: u32) -> u32 {
    let n = tree.order();
    let k = n - 2;
    if k == 0 {
        return 0;
    }
    let mut t = 0u32;
    for v in (n - s + 1)..=n {
        t += tree.degree(v) as u32 - 1;
    }
    t % k
}

fn eta_close<T: Scalar>(a: &[C<T>], b: &[C<T>]) -> bool {
    a.iter()
        .zip(b.iter())
        .all(|(x, y)| (x - y).norm() <= T::val(ETA_TOL))
}

/// Decides topological, analytic, and rotation equivalence from the two
/// invariant pairs.
pub fn classify_invariants<T: Scalar>(
    p1: &InvariantPair<T>,
    p2: &InvariantPair<T>,
) -> PairClassification {
    let top = p1.tree == p2.tree;
    let analytic = top && eta_close(&p1.eta, &p2.eta);
    let n = p1.tree.order();
    let k = (n - 2) as usize;
    let mut rotation = None;
    for s in 0..n {
        if p1.tree.rotate(s) != p2.tree {
            continue;
        }
        let matches = if k == 0 {
            true
        } else {
            let t = eta_index_shift(&p1.tree, s) as usize;
            let translated: Vec<C<T>> = (0..k).map(|m| p1.eta[(m + k - t) % k]).collect();
            eta_close(&translated, &p2.eta)
        };
        match rotation {
            None => rotation = Some(RotationMatch { shift: s, eta_matches: matches }),
            Some(prev) if !prev.eta_matches && matches => {
                rotation = Some(RotationMatch { shift: s, eta_matches: matches })
            }
            _ => {}
        }
    }
    PairClassification { top_equivalent: top, analytic_equivalent: analytic, up_to_rotation: rotation }
}

/// Full pipeline on two fields.
pub fn classify_pair<T: Scalar>(
    f1: &AntiPolyField<T>,
    f2: &AntiPolyField<T>,
    cfg1: &TraceConfig<T>,
    cfg2: &TraceConfig<T>,
) -> Result<PairClassification, ClassifyError<T>> {
    if f1.degree() != f2.degree() {
        return Err(ClassifyError::DegreeMismatch { left: f1.degree(), right: f2.degree() });
    }
    let p1 = invariant_pair(f1, cfg1)?;
    let p2 = invariant_pair(f2, cfg2)?;
    Ok(classify_invariants(&p1, &p2))
}
