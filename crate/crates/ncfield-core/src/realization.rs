//! Inverse solve: from a prescribed `(tree, eta)` pair to the monic
//! centred generic polynomial realizing it.
//!
//! The unknowns are the `k+1` zeros, one per tree edge. The square
//! complex system pairs the antiderivative differences over the sepal
//! descriptors with their targets and closes with the centring equation
//! `sum z = 0`. The solve is a straight-line homotopy in eta-space from
//! a verified seed, with a damped Newton corrector and the extracted
//! tree re-checked at every accepted step.

use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::invariants::{self, ExtractError};
use crate::nc_tree::NcTree;
use crate::scalar::{Scalar, C};
use crate::vector_field::{horner, integrate_coeffs, monic_from_roots, AntiPolyField, TraceConfig};

/// Knobs for the continuation; the defaults match the desk-scale degrees
/// the rest of the crate targets.
#[derive(Debug, Clone, Copy)]
pub struct RealizeOptions {
    pub max_newton_iters: usize,
    pub seed_attempts: usize,
    pub min_homotopy_step: f64,
    /// Re-extract the tree at every accepted continuation step.
    pub verify_tree_each_step: bool,
    pub rng_seed: u64,
}

impl Default for RealizeOptions {
    fn default() -> Self {
        RealizeOptions {
            max_newton_iters: 60,
            seed_attempts: 2000,
            min_homotopy_step: 1e-8,
            verify_tree_each_step: true,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum RealizeError<T: Scalar> {
    #[error("realization targets need a tree of order >= 2, got {order}")]
    TreeTooSmall { order: u32 },
    #[error("target eta has {actual} components, tree of order {order} needs {expected}")]
    EtaLengthMismatch { order: u32, expected: usize, actual: usize },
    #[error("target eta component {index} must have positive imaginary part")]
    EtaNotUpperHalf { index: usize },
    #[error("jacobian condition estimate {condition:e} exceeds the singularity bound")]
    SingularJacobian { condition: f64 },
    #[error("no seed realized the target tree in {attempts} attempts; trees seen: {trees_seen:?}")]
    SeedNotFound { attempts: usize, trees_seen: Vec<String> },
    #[error("homotopy stalled at s = {s} with step {step:e}")]
    HomotopyStalled { s: f64, step: f64 },
    #[error("converged point failed verification: {details}")]
    VerificationFailed { details: String },
    #[error("extraction failed during realization: {0}")]
    Extract(#[from] ExtractError<T>),
}

/// A target `(tree, eta)` with the derived edge pairing.
#[derive(Debug, Clone)]
pub struct RealizationProblem<T: Scalar> {
    tree: NcTree,
    target_eta: Vec<C<T>>,
    /// Per sepal zone: indices into `tree.edges()` of `(e_l, e_{l+1})`.
    pairing: Vec<(usize, usize)>,
    pub options: RealizeOptions,
}

fn edge_index(tree: &NcTree, e: crate::nc_tree::Edge) -> usize {
    tree.edges().iter().position(|&x| x == e).expect("edge of the same tree")
}

/// Pairing induced by the sepal-zone order of a tree.
pub fn sepal_pairing(tree: &NcTree) -> Vec<(usize, usize)> {
    tree.sepal_zones()
        .iter()
        .map(|z| (edge_index(tree, z.edge_pair.0), edge_index(tree, z.edge_pair.1)))
        .collect()
}

impl<T: Scalar> RealizationProblem<T> {
    pub fn new(tree: NcTree, target_eta: Vec<C<T>>) -> Result<Self, RealizeError<T>> {
        if tree.order() < 2 {
            return Err(RealizeError::TreeTooSmall { order: tree.order() });
        }
        let expected = tree.order() as usize - 2;
        if target_eta.len() != expected {
            return Err(RealizeError::EtaLengthMismatch {
                order: tree.order(),
                expected,
                actual: target_eta.len(),
            });
        }
        for (i, v) in target_eta.iter().enumerate() {
            if !(v.im > T::zero()) {
                return Err(RealizeError::EtaNotUpperHalf { index: i });
            }
        }
        let pairing = sepal_pairing(&tree);
        Ok(RealizationProblem { tree, target_eta, pairing, options: RealizeOptions::default() })
    }

    pub fn with_options(mut self, options: RealizeOptions) -> Self {
        self.options = options;
        self
    }

    pub fn tree(&self) -> &NcTree {
        &self.tree
    }

    pub fn target_eta(&self) -> &[C<T>] {
        &self.target_eta
    }

    /// Residual of the prescribed invariants at the given zeros.
    pub fn residual(&self, roots: &[C<T>]) -> Vec<C<T>> {
        eta_residual(roots, &self.pairing, &self.target_eta)
    }

    /// Analytic Jacobian of [`Self::residual`] with respect to the zeros.
    pub fn jacobian(&self, roots: &[C<T>]) -> Vec<Vec<C<T>>> {
        eta_jacobian(roots, &self.pairing)
    }

    /// Zeros of a generic field whose extracted tree equals the target
    /// tree, aligned so that unknown `i` sits on edge `i`. Also returns
    /// that field's own eta (the homotopy start).
    pub fn seed(&self) -> Result<(Vec<C<T>>, Vec<C<T>>), RealizeError<T>> {
        let n = self.tree.order(); // k + 2
        let k = n as usize - 2;
        let radius = T::val(1.0 + 0.3 * k as f64);
        let mids: Vec<C<T>> = self
            .tree
            .edges()
            .iter()
            .map(|&(u, v)| {
                let alpha = |w: u32| {
                    T::PI() * T::from_u32(2 * w - 1).unwrap() / T::from_u32(n).unwrap()
                };
                (Complex::from_polar(T::one(), alpha(u)) + Complex::from_polar(T::one(), alpha(v)))
                    * C::new(T::val(0.5) * radius, T::zero())
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.options.rng_seed);
        let mut trees_seen: Vec<String> = Vec::new();
        for attempt in 0..self.options.seed_attempts {
            // phase 1: the midpoint layout and ramped perturbations of
            // it; phase 2 (every third attempt): unbiased configurations,
            // which reach every stratum eventually
            let candidate: Vec<C<T>> = if attempt == 0 {
                mids.clone()
            } else if attempt % 3 != 0 {
                let sigma = radius * T::val(0.08 + 0.6 * (attempt as f64 / 60.0).min(1.0));
                mids.iter()
                    .map(|&m| {
                        m + C::new(
                            sigma * T::val(2.0 * rng.gen::<f64>() - 1.0),
                            sigma * T::val(2.0 * rng.gen::<f64>() - 1.0),
                        )
                    })
                    .collect()
            } else {
                (0..self.tree.edges().len())
                    .map(|_| crate::sampling::disk_point(&mut rng, radius))
                    .collect()
            };
            let spaced = (0..candidate.len()).all(|i| {
                (0..i).all(|j| (candidate[i] - candidate[j]).norm() > T::val(0.05) * radius)
            });
            if !spaced {
                continue;
            }
            let Ok(field) = AntiPolyField::from_roots_centred(candidate) else { continue };
            if field.root_degeneracy().is_some() {
                continue;
            }
            let cfg = TraceConfig::for_field(&field);
            let Ok(ex) = invariants::extract(&field, &cfg) else { continue };
            if ex.tree != self.tree {
                let code = ex.tree.canonical_code();
                if !trees_seen.contains(&code) {
                    trees_seen.push(code);
                }
                continue;
            }
            // align unknowns with tree edges via the trace matching
            let aligned: Vec<C<T>> = (0..field.roots().len())
                .map(|e| field.roots()[ex.edge_roots[e]])
                .collect();
            let eta0: Vec<C<T>> = self
                .pairing
                .iter()
                .map(|&(a, b)| {
                    field.eval_antideriv(aligned[b]) - field.eval_antideriv(aligned[a])
                })
                .collect();
            if eta0.iter().any(|v| !(v.im > T::zero())) {
                continue;
            }
            return Ok((aligned, eta0));
        }
        Err(RealizeError::SeedNotFound { attempts: self.options.seed_attempts, trees_seen })
    }

    /// Continuation from the seed's eta to the target, Newton-corrected,
    /// with final verification by re-extraction.
    pub fn realize(&self) -> Result<AntiPolyField<T>, RealizeError<T>> {
        let (mut roots, eta0) = self.seed()?;
        let k = self.target_eta.len();
        let lerp = |s: f64| -> Vec<C<T>> {
            let sv = T::val(s);
            (0..k)
                .map(|m| eta0[m] + (self.target_eta[m] - eta0[m]) * C::new(sv, T::zero()))
                .collect()
        };
        let mut s = 0.0f64;
        let mut ds = 0.25f64;
        while s < 1.0 {
            let step_target = lerp((s + ds).min(1.0));
            let attempt = newton_solve(
                &roots,
                &self.pairing,
                &step_target,
                self.options.max_newton_iters,
            );
            let accepted = match attempt {
                Ok((next, iters)) => {
                    if self.options.verify_tree_each_step {
                        match self.tree_matches(&next) {
                            Ok(true) => Some((next, iters)),
                            _ => None,
                        }
                    } else {
                        Some((next, iters))
                    }
                }
                Err(_) => None,
            };
            match accepted {
                Some((next, iters)) => {
                    roots = next;
                    s = (s + ds).min(1.0);
                    if iters <= 5 {
                        ds = (ds * 2.0).min(0.5);
                    }
                    ds = ds.min(1.0 - s).max(self.options.min_homotopy_step);
                    if s >= 1.0 {
                        break;
                    }
                }
                None => {
                    ds *= 0.5;
                    if ds < self.options.min_homotopy_step {
                        return Err(RealizeError::HomotopyStalled { s, step: ds });
                    }
                }
            }
        }
        // final polish at the exact target
        let (roots, _) =
            newton_solve(&roots, &self.pairing, &self.target_eta, self.options.max_newton_iters)
                .map_err(|e| match e {
                    NewtonFailure::Singular { condition } => {
                        RealizeError::SingularJacobian { condition }
                    }
                    NewtonFailure::NotConverged { residual } => RealizeError::VerificationFailed {
                        details: format!("final Newton polish stalled at residual {residual:e}"),
                    },
                })?;
        let field = AntiPolyField::from_roots_centred(roots).expect("k+1 >= 1 roots");
        self.verify(&field)?;
        Ok(field)
    }

    fn tree_matches(&self, roots: &[C<T>]) -> Result<bool, ExtractError<T>> {
        let field = AntiPolyField::from_roots_centred(roots.to_vec())
            .expect("nonempty root vector");
        let cfg = TraceConfig::for_field(&field);
        Ok(invariants::extract(&field, &cfg)?.tree == self.tree)
    }

    fn verify(&self, field: &AntiPolyField<T>) -> Result<(), RealizeError<T>> {
        let cfg = TraceConfig::for_field(field);
        let ex = invariants::extract(field, &cfg)?;
        if ex.tree != self.tree {
            return Err(RealizeError::VerificationFailed {
                details: format!(
                    "extracted tree {} differs from target {}",
                    ex.tree.canonical_code(),
                    self.tree.canonical_code()
                ),
            });
        }
        let eta = invariants::analytic_invariant(field, &ex)?;
        let mut worst = T::zero();
        for (got, want) in eta.values.iter().zip(self.target_eta.iter()) {
            worst = worst.max((got - want).norm());
        }
        if worst > T::val(1e-9) {
            return Err(RealizeError::VerificationFailed {
                details: format!("eta mismatch {:e} exceeds 1e-9", worst.to_f64().unwrap_or(f64::NAN)),
            });
        }
        let in_edge_order: Vec<C<T>> = (0..field.roots().len())
            .map(|e| field.roots()[ex.edge_roots[e]])
            .collect();
        let resid = self.residual(&in_edge_order);
        let max_resid = resid.iter().fold(T::zero(), |m, r| m.max(r.norm()));
        if max_resid > T::val(1e-10) {
            return Err(RealizeError::VerificationFailed {
                details: format!(
                    "residual {:e} exceeds 1e-10",
                    max_resid.to_f64().unwrap_or(f64::NAN)
                ),
            });
        }
        Ok(())
    }
}

/// Residual components for an arbitrary pairing: `Q(z_b) - Q(z_a) -
/// target_m` for each pair, then the centring sum.
pub(crate) fn eta_residual<T: Scalar>(
    roots: &[C<T>],
    pairing: &[(usize, usize)],
    targets: &[C<T>],
) -> Vec<C<T>> {
    let coeffs = monic_from_roots(roots);
    let q = integrate_coeffs(&coeffs);
    let mut out: Vec<C<T>> = pairing
        .iter()
        .zip(targets.iter())
        .map(|(&(a, b), &t)| horner(&q, roots[b]) - horner(&q, roots[a]) - t)
        .collect();
    out.push(roots.iter().fold(C::new(T::zero(), T::zero()), |s, &z| s + z));
    out
}

/// Analytic Jacobian: `d residual_m / d z_i = -(Q_i(z_b) - Q_i(z_a))`
/// with `Q_i` the antiderivative of the product with factor `i` removed;
/// the endpoint terms vanish because `P` is zero at its own roots. The
/// centring row is all ones.
pub(crate) fn eta_jacobian<T: Scalar>(roots: &[C<T>], pairing: &[(usize, usize)]) -> Vec<Vec<C<T>>> {
    let d = roots.len();
    let coeffs = monic_from_roots(roots);
    // deflated antiderivatives Q_i
    let q_deflated: Vec<Vec<C<T>>> = (0..d)
        .map(|i| {
            let mut quotient = vec![C::new(T::zero(), T::zero()); d];
            quotient[d - 1] = coeffs[d]; // monic
            for j in (1..d).rev() {
                let higher = quotient[j];
                quotient[j - 1] = coeffs[j] + roots[i] * higher;
            }
            integrate_coeffs(&quotient)
        })
        .collect();
    let mut jac = Vec::with_capacity(pairing.len() + 1);
    for &(a, b) in pairing {
        let row: Vec<C<T>> = (0..d)
            .map(|i| -(horner(&q_deflated[i], roots[b]) - horner(&q_deflated[i], roots[a])))
            .collect();
        jac.push(row);
    }
    jac.push(vec![C::new(T::one(), T::zero()); d]);
    jac
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum NewtonFailure {
    Singular { condition: f64 },
    NotConverged { residual: f64 },
}

/// Gaussian elimination with partial pivoting on the small dense complex
/// system; the pivot ratio serves as the condition estimate.
pub(crate) fn solve_linear<T: Scalar>(
    mut a: Vec<Vec<C<T>>>,
    mut b: Vec<C<T>>,
) -> Result<Vec<C<T>>, NewtonFailure> {
    let n = b.len();
    let mut max_piv = T::zero();
    for col in 0..n {
        let (pivot_row, pivot_norm) = (col..n)
            .map(|r| (r, a[r][col].norm()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        max_piv = max_piv.max(pivot_norm);
        if pivot_norm == T::zero()
            || max_piv / pivot_norm > T::val(1e12)
        {
            return Err(NewtonFailure::Singular {
                condition: (max_piv / pivot_norm.max(T::epsilon()))
                    .to_f64()
                    .unwrap_or(f64::INFINITY),
            });
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for r in (col + 1)..n {
            let factor = a[r][col] / a[col][col];
            for c in col..n {
                let v = a[col][c];
                a[r][c] = a[r][c] - factor * v;
            }
            let bv = b[col];
            b[r] = b[r] - factor * bv;
        }
    }
    let mut x = vec![C::new(T::zero(), T::zero()); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in (row + 1)..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

fn l2<T: Scalar>(v: &[C<T>]) -> T {
    v.iter().fold(T::zero(), |s, c| s + c.norm_sqr()).sqrt()
}

/// Damped Newton on the eta system: classical backtracking with factor
/// one half, up to twenty halvings, rejecting steps that collide roots.
/// Returns the solution and the iteration count.
pub(crate) fn newton_solve<T: Scalar>(
    start: &[C<T>],
    pairing: &[(usize, usize)],
    targets: &[C<T>],
    max_iters: usize,
) -> Result<(Vec<C<T>>, usize), NewtonFailure> {
    let scale = T::one() + targets.iter().fold(T::zero(), |m, t| m.max(t.norm()));
    let tol = T::tol(1e-12, 5e2) * scale;
    let mut roots = start.to_vec();
    let mut r = eta_residual(&roots, pairing, targets);
    let mut rn = l2(&r);
    for iter in 0..max_iters {
        let max_comp = r.iter().fold(T::zero(), |m, c| m.max(c.norm()));
        if max_comp <= tol {
            return Ok((roots, iter));
        }
        let jac = eta_jacobian(&roots, pairing);
        let neg_r: Vec<C<T>> = r.iter().map(|&c| -c).collect();
        let delta = solve_linear(jac, neg_r)?;
        let mut t = T::one();
        let mut advanced = false;
        for _ in 0..20 {
            let cand: Vec<C<T>> = roots
                .iter()
                .zip(delta.iter())
                .map(|(&z, &d)| z + d * C::new(t, T::zero()))
                .collect();
            let collided = (0..cand.len()).any(|i| {
                (0..i).any(|j| (cand[i] - cand[j]).norm() < T::tol(1e-10, 1e2))
            });
            if !collided {
                let cand_r = eta_residual(&cand, pairing, targets);
                let cand_rn = l2(&cand_r);
                if cand_rn < rn {
                    roots = cand;
                    r = cand_r;
                    rn = cand_rn;
                    advanced = true;
                    break;
                }
            }
            t = t * T::val(0.5);
        }
        if !advanced {
            return Err(NewtonFailure::NotConverged {
                residual: rn.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let max_comp = r.iter().fold(T::zero(), |m, c| m.max(c.norm()));
    if max_comp <= tol {
        Ok((roots, max_iters))
    } else {
        Err(NewtonFailure::NotConverged { residual: rn.to_f64().unwrap_or(f64::NAN) })
    }
}

