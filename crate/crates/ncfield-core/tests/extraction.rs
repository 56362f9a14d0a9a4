//! Cross-module tests of invariant extraction against closed forms and
//! the rotation action.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ncfield_core::invariants::{
    self, classify_invariants, eta_index_shift, invariant_pair, zone_census,
};
use ncfield_core::sampling::random_generic_field;
use ncfield_core::vector_field::AntiPolyField;
use ncfield_core::{NcTree, TraceConfig};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn field(coeffs: &[(f64, f64)]) -> AntiPolyField<f64> {
    AntiPolyField::from_coefficients(coeffs.iter().map(|&(re, im)| c(re, im)).collect()).unwrap()
}

#[test]
fn linear_field_tree_is_single_edge() {
    let f = field(&[(0.0, 0.0), (1.0, 0.0)]);
    let cfg = TraceConfig::for_field(&f);
    let pair = invariant_pair(&f, &cfg).unwrap();
    assert_eq!(pair.tree, NcTree::new(2, vec![(1, 2)]).unwrap());
    assert!(pair.eta.is_empty());
    let census = zone_census(&f, &cfg).unwrap();
    assert_eq!((census.sepal_count, census.petal_count), (0, 4));
}

#[test]
fn perturbed_cubic_gives_valid_order_four_tree() {
    // P = z^3 - z + c for a small generic c
    let f = field(&[(0.08, 0.05), (-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
    let cfg = TraceConfig::for_field(&f);
    let pair = invariant_pair(&f, &cfg).unwrap();
    assert_eq!(pair.tree.order(), 4);
    assert!(ncfield_core::nc_tree::validate(4, pair.tree.edges()).is_ok());
    assert!(ncfield_core::nc_tree::enumerate(4).contains(&pair.tree));
}

#[test]
fn f32_instantiation_traces_and_extracts() {
    // the analytic core is scalar-generic; a coarse f32 run must agree
    // with f64 on the combinatorial invariant
    let f32_field = AntiPolyField::<f32>::from_coefficients(vec![
        num_complex::Complex::new(0.0f32, -1.0),
        num_complex::Complex::new(0.0, 0.0),
        num_complex::Complex::new(1.0, 0.0),
    ])
    .unwrap();
    let cfg = TraceConfig::for_field(&f32_field);
    let tree32 = invariants::extract(&f32_field, &cfg).unwrap().tree;
    let f64_field = field(&[(0.0, -1.0), (0.0, 0.0), (1.0, 0.0)]);
    let cfg64 = TraceConfig::for_field(&f64_field);
    let tree64 = invariants::extract(&f64_field, &cfg64).unwrap().tree;
    assert_eq!(tree32, tree64);
}

#[test]
fn quadratic_eta_closed_form() {
    // P = z^2 - i: |eta_1| = 4/3 with positive imaginary part, i.e.
    // eta_1 = (4/3) e^{3 i pi / 4}; no orientation flip may occur.
    let f = field(&[(0.0, -1.0), (0.0, 0.0), (1.0, 0.0)]);
    let cfg = TraceConfig::for_field(&f);
    let ex = invariants::extract(&f, &cfg).unwrap();
    assert_eq!(ex.tree.order(), 3);
    let eta = invariants::analytic_invariant(&f, &ex).unwrap();
    assert!(eta.flipped.is_empty(), "conventions must give Im > 0 directly");
    assert_eq!(eta.values.len(), 1);
    let want = Complex64::from_polar(4.0 / 3.0, 3.0 * std::f64::consts::FRAC_PI_4);
    assert!(
        (eta.values[0] - want).norm() < 1e-10,
        "eta = {}, want {}",
        eta.values[0],
        want
    );
}

#[test]
fn quadratic_tree_stable_under_tolerance_halving() {
    let f = field(&[(0.0, -1.0), (0.0, 0.0), (1.0, 0.0)]);
    let cfg = TraceConfig::for_field(&f);
    let finer = cfg.with_step_tol(cfg.step_tol / 2.0);
    let p1 = invariant_pair(&f, &cfg).unwrap();
    let p2 = invariant_pair(&f, &finer).unwrap();
    assert_eq!(p1.tree, p2.tree);
    // eta is endpoint-exact: identical values from identical roots
    for (a, b) in p1.eta.iter().zip(p2.eta.iter()) {
        assert!((a - b).norm() < 1e-15);
    }
}

#[test]
fn random_cubic_trees_validate_and_census_matches() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let f: AntiPolyField<f64> = random_generic_field(3, &mut rng).unwrap();
        let cfg = TraceConfig::for_field(&f);
        let pair = invariant_pair(&f, &cfg).unwrap();
        assert_eq!(pair.tree.order(), 4);
        let census = zone_census(&f, &cfg).unwrap();
        assert_eq!(census.sepal_count, 2);
        assert_eq!(census.petal_count, 8);
    }
}

#[test]
fn eta_positive_imaginary_for_random_cubics() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100 {
        let f: AntiPolyField<f64> = random_generic_field(3, &mut rng).unwrap();
        let cfg = TraceConfig::for_field(&f);
        let ex = invariants::extract(&f, &cfg).unwrap();
        let eta = invariants::analytic_invariant(&f, &ex).unwrap();
        assert!(eta.flipped.is_empty(), "orientation flips should not occur");
        for v in &eta.values {
            assert!(v.im > 0.0);
        }
    }
}

#[test]
fn marked_point_coverage_and_counts() {
    use ncfield_core::vector_field::{trace_all, Terminal};
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for degree in 2..=6usize {
        let f: AntiPolyField<f64> = random_generic_field(degree, &mut rng).unwrap();
        let cfg = TraceConfig::for_field(&f);
        let traces = trace_all(&f, &cfg).unwrap();
        let k = degree - 1;
        assert_eq!(traces.len(), 4 * (k + 1), "separatrix count");
        let mut incoming_ends = vec![0usize; 2 * k + 4];
        let mut outgoing_ends = vec![0usize; 2 * k + 4];
        for t in &traces {
            let Terminal::MarkedPoint { index } = t.terminal else {
                panic!("generic field must have no landings")
            };
            if t.class.is_outgoing() {
                outgoing_ends[index as usize] += 1;
            } else {
                incoming_ends[index as usize] += 1;
            }
        }
        for j in 0..(2 * k + 4) {
            if j % 2 == 0 {
                assert!(outgoing_ends[j] >= 1, "attracting point {j} unused");
                assert_eq!(incoming_ends[j], 0);
            } else {
                assert!(incoming_ends[j] >= 1, "repelling point {j} unused");
                assert_eq!(outgoing_ends[j], 0);
            }
        }
        assert_eq!(incoming_ends.iter().sum::<usize>(), 2 * (k + 1));
        assert_eq!(outgoing_ends.iter().sum::<usize>(), 2 * (k + 1));
    }
}

#[test]
fn extraction_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f: AntiPolyField<f64> = random_generic_field(4, &mut rng).unwrap();
    let cfg = TraceConfig::for_field(&f);
    let p1 = invariant_pair(&f, &cfg).unwrap();
    let p2 = invariant_pair(&f, &cfg).unwrap();
    assert_eq!(p1, p2);
}

#[test]
fn self_classification_is_reflexive() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let f: AntiPolyField<f64> = random_generic_field(3, &mut rng).unwrap();
    let cfg = TraceConfig::for_field(&f);
    let cls = invariants::classify_pair(&f, &f, &cfg, &cfg).unwrap();
    assert!(cls.top_equivalent);
    assert!(cls.analytic_equivalent);
    let rot = cls.up_to_rotation.unwrap();
    assert_eq!(rot.shift, 0);
    assert!(rot.eta_matches);
}

#[test]
fn degree_mismatch_detected() {
    let f = field(&[(0.0, 0.0), (1.0, 0.0)]);
    let g = field(&[(0.0, -1.0), (0.0, 0.0), (1.0, 0.0)]);
    let cf = TraceConfig::for_field(&f);
    let cg = TraceConfig::for_field(&g);
    assert!(matches!(
        invariants::classify_pair(&f, &g, &cf, &cg),
        Err(invariants::ClassifyError::DegreeMismatch { .. })
    ));
}

#[test]
fn heteroclinic_field_rejected() {
    let f = field(&[(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
    let cfg = TraceConfig::for_field(&f);
    assert!(matches!(
        invariants::extract(&f, &cfg),
        Err(invariants::ExtractError::NotGeneric(_))
    ));
}

/// Pushforward by a (k+2)-th root of unity rotates the tree by `s` and
/// translates the eta indices.
#[test]
fn rotation_equivariance_for_cubics() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for _ in 0..20 {
        let f: AntiPolyField<f64> = random_generic_field(3, &mut rng).unwrap();
        let cfg = TraceConfig::for_field(&f);
        let p = invariant_pair(&f, &cfg).unwrap();
        let k = 2usize;
        for s in 0..4u32 {
            let g = f.rotation_pushforward(s);
            let cfg_g = TraceConfig::for_field(&g);
            let q = invariant_pair(&g, &cfg_g).unwrap();
            assert_eq!(q.tree, p.tree.rotate(s), "tree rotates by s={s}");
            let t = eta_index_shift(&p.tree, s) as usize;
            for m in 0..k {
                let translated = (m + t) % k;
                assert!(
                    (q.eta[translated] - p.eta[m]).norm() < 1e-9,
                    "s={s} m={m}: {} vs {}",
                    q.eta[translated],
                    p.eta[m]
                );
            }
            // and the classifier reports the rotation
            let cls = classify_invariants(&p, &q);
            let rot = cls.up_to_rotation.expect("rotation must be found");
            assert!(rot.eta_matches);
            if s != 0 {
                assert_eq!(rot.shift, s);
            }
        }
    }
}

/// The combinatorial dual of the incoming tree must equal the outgoing
/// tree built directly from the outgoing separatrices, with attracting
/// point `2j-2` read as dual vertex `j`.
#[test]
fn dual_of_incoming_tree_is_outgoing_tree() {
    use ncfield_core::vector_field::{trace_all, Terminal};
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for degree in 1..=5usize {
        for _ in 0..5 {
            let f: AntiPolyField<f64> = random_generic_field(degree, &mut rng).unwrap();
            let cfg = TraceConfig::for_field(&f);
            let incoming = invariants::extract(&f, &cfg).unwrap().tree;
            let traces = trace_all(&f, &cfg).unwrap();
            let mut out_edges = Vec::new();
            for j in 0..degree {
                let hits: Vec<u32> = traces
                    .iter()
                    .filter(|t| t.origin == j && t.class.is_outgoing())
                    .map(|t| match t.terminal {
                        Terminal::MarkedPoint { index } => index,
                        other => panic!("unexpected terminal {other:?}"),
                    })
                    .collect();
                assert_eq!(hits.len(), 2);
                let v = |i: u32| i / 2 + 1;
                out_edges.push((v(hits[0]).min(v(hits[1])), v(hits[0]).max(v(hits[1]))));
            }
            let outgoing = NcTree::new(degree as u32 + 1, out_edges).unwrap();
            assert_eq!(incoming.dual(), outgoing, "degree {degree}");
        }
    }
}

#[test]
fn quadratic_sectors_are_topologically_distinct() {
    // two samples from different sectors of the quadratic parameter
    // space have different trees
    let fa = field(&[(0.0, -1.0), (0.0, 0.0), (1.0, 0.0)]); // eps = i
    let fb = field(&[(0.0, 1.0), (0.0, 0.0), (1.0, 0.0)]); // eps = -i
    let ca = TraceConfig::for_field(&fa);
    let cb = TraceConfig::for_field(&fb);
    let cls = invariants::classify_pair(&fa, &fb, &ca, &cb).unwrap();
    assert!(!cls.top_equivalent);
}
