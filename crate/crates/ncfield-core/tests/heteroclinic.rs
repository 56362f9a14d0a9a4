//! Maximal-stratum tests: extraction on the real quadratic, the three
//! trees with two internal vertices, and realize/extract round trips.

use num_complex::Complex64;

use ncfield_core::heteroclinic::{
    enumerate_ternary, extract_hetero, realize_hetero, HeteroInvariant, TernaryTree,
};
use ncfield_core::vector_field::AntiPolyField;
use ncfield_core::TraceConfig;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn leaf() -> TernaryTree {
    TernaryTree::Leaf
}

fn cherry() -> TernaryTree {
    TernaryTree::internal([leaf(), leaf(), leaf()])
}

#[test]
fn linear_field_is_single_internal_vertex() {
    let f = AntiPolyField::from_coefficients(vec![c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let cfg = TraceConfig::for_field(&f);
    let inv = extract_hetero(&f, &cfg).unwrap();
    assert_eq!(inv.tree, cherry());
    assert!(inv.nu.is_empty());
}

#[test]
fn real_quadratic_invariant() {
    // P = z^2 - 1: connection from +1 to -1 with integral 4/3; the
    // internal vertex hangs off the middle child of the root
    let f = AntiPolyField::from_coefficients(vec![c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let cfg = TraceConfig::for_field(&f);
    let inv = extract_hetero(&f, &cfg).unwrap();
    assert_eq!(inv.tree, TernaryTree::internal([leaf(), cherry(), leaf()]));
    assert_eq!(inv.nu.len(), 1);
    assert!((inv.nu[0] - 4.0 / 3.0).abs() < 1e-9, "nu = {}", inv.nu[0]);
}

#[test]
fn generic_field_rejected() {
    let f = AntiPolyField::from_coefficients(vec![c(0.0, -1.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
    let cfg = TraceConfig::for_field(&f);
    assert!(extract_hetero(&f, &cfg).is_err());
}

#[test]
fn realize_linear() {
    let f: AntiPolyField<f64> = realize_hetero(&cherry(), &[]).unwrap();
    assert_eq!(f.degree(), 1);
    assert!(f.roots()[0].norm() < 1e-10);
}

#[test]
fn realize_middle_tree_gives_real_quadratic() {
    // nu = 4/3 must reproduce P = z^2 - 1
    let tree = TernaryTree::internal([leaf(), cherry(), leaf()]);
    let f: AntiPolyField<f64> = realize_hetero(&tree, &[4.0 / 3.0]).unwrap();
    let want = [c(-1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
    for (g, w) in f.coefficients().iter().zip(want) {
        assert!((g - w).norm() < 1e-6, "{g} vs {w}");
    }
}

#[test]
fn all_three_two_vertex_trees_round_trip() {
    // the three trees are the three rays of the quadratic bifurcation
    // diagram; each realization is a distinct quadratic
    let trees = enumerate_ternary(2);
    assert_eq!(trees.len(), 3);
    let mut seen = Vec::new();
    for tree in &trees {
        let f: AntiPolyField<f64> = realize_hetero(tree, &[1.0]).unwrap();
        assert_eq!(f.degree(), 2);
        let cfg = TraceConfig::for_field(&f);
        let inv = extract_hetero(&f, &cfg).unwrap();
        assert_eq!(&inv.tree, tree);
        assert!((inv.nu[0] - 1.0).abs() < 1e-6);
        seen.push(f.coefficients()[0]);
    }
    for i in 0..seen.len() {
        for j in 0..i {
            assert!((seen[i] - seen[j]).norm() > 1e-3, "realizations must differ");
        }
    }
}

#[test]
fn cubic_round_trip() {
    // a three-internal-vertex chain with distinct integrals
    let tree = TernaryTree::internal([
        leaf(),
        TernaryTree::internal([leaf(), cherry(), leaf()]),
        leaf(),
    ]);
    let nu = [0.8, 1.4];
    let f: AntiPolyField<f64> = realize_hetero(&tree, &nu).unwrap();
    assert_eq!(f.degree(), 3);
    let cfg = TraceConfig::for_field(&f);
    let inv = extract_hetero(&f, &cfg).unwrap();
    assert_eq!(inv.tree, tree);
    for (a, b) in inv.nu.iter().zip(nu.iter()) {
        assert!((a - b).abs() < 1e-8, "{a} vs {b}");
    }
}

#[test]
fn all_twelve_three_vertex_trees_round_trip() {
    let trees = enumerate_ternary(3);
    assert_eq!(trees.len(), 12);
    let nu = [0.9, 1.2];
    for (i, tree) in trees.iter().enumerate() {
        let f: AntiPolyField<f64> = realize_hetero(tree, &nu)
            .unwrap_or_else(|e| panic!("tree {i} failed: {e}"));
        assert_eq!(f.degree(), 3);
        let cfg = TraceConfig::for_field(&f);
        let inv = extract_hetero(&f, &cfg).unwrap();
        assert_eq!(&inv.tree, tree, "tree {i}");
        for (a, b) in inv.nu.iter().zip(nu.iter()) {
            assert!((a - b).abs() < 1e-7, "tree {i}: {a} vs {b}");
        }
    }
}

#[test]
fn invariant_serde() {
    let inv = HeteroInvariant { tree: TernaryTree::internal([leaf(), cherry(), leaf()]), nu: vec![1.5] };
    let js = serde_json::to_string(&inv).unwrap();
    assert_eq!(js, r#"{"tree":[0,[0,0,0],0],"nu":[1.5]}"#);
    let back: HeteroInvariant<f64> = serde_json::from_str(&js).unwrap();
    assert_eq!(back, inv);
}

#[test]
fn rejects_bad_invariants() {
    assert!(realize_hetero::<f64>(&cherry(), &[1.0]).is_err());
    let tree = TernaryTree::internal([leaf(), cherry(), leaf()]);
    assert!(realize_hetero::<f64>(&tree, &[-1.0]).is_err());
    assert!(realize_hetero::<f64>(&leaf(), &[]).is_err());
}
