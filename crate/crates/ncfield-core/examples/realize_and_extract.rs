//! Round trip through the classification: prescribe an invariant pair,
//! realize the polynomial, extract the invariants back.

use ncfield_core::invariants::invariant_pair;
use ncfield_core::realization::RealizationProblem;
use ncfield_core::{NcTree, TraceConfig};
use num_complex::Complex64;

fn main() {
    // the path tree on 4 vertices with two prescribed strip widths
    let tree = NcTree::new(4, vec![(1, 2), (2, 3), (3, 4)]).unwrap();
    let eta = vec![Complex64::new(0.4, 1.2), Complex64::new(-0.3, 0.7)];

    let problem = RealizationProblem::new(tree, eta).unwrap();
    let field = problem.realize().expect("every invariant pair is realizable");

    println!("P(z) coefficients (ascending):");
    for c in field.coefficients() {
        println!("  {c}");
    }
    let cfg = TraceConfig::for_field(&field);
    let pair = invariant_pair(&field, &cfg).unwrap();
    println!("extracted tree: {}", pair.tree.canonical_code());
    for (i, v) in pair.eta.iter().enumerate() {
        println!("eta_{} = {v}", i + 1);
    }
}
