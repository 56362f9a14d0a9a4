//! Simultaneous root iteration (Aberth–Ehrlich) for monic polynomials.

use num_complex::Complex;

use crate::scalar::{Scalar, C};

use super::{horner, horner_deriv};

const MAX_ITER: usize = 800;

/// All roots of the monic polynomial with ascending `coeffs`, to residual
/// `max_j |P(z_j)| <= tol`. Starts from perturbed solutions of
/// `z^d = -a_0` so that clustered configurations still separate.
pub(super) fn find_all<T: Scalar>(coeffs: &[C<T>], tol: T) -> Result<Vec<C<T>>, T> {
    let d = coeffs.len() - 1;
    if d == 1 {
        return Ok(vec![-coeffs[0]]);
    }
    let a0 = coeffs[0];
    let max_coeff = coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()));
    let mut radius = a0.norm().powf(T::one() / T::from_usize(d).unwrap());
    if radius < T::val(1e-6) * (T::one() + max_coeff) {
        radius = T::val(0.5) * (T::one() + max_coeff).powf(T::one() / T::from_usize(d).unwrap());
    }
    let base_arg = (-a0).arg() / T::from_usize(d).unwrap();
    let mut z: Vec<C<T>> = (0..d)
        .map(|m| {
            let theta = base_arg
                + T::TAU() * T::from_usize(m).unwrap() / T::from_usize(d).unwrap()
                + T::val(0.2641);
            let r = radius * (T::one() + T::val(0.05) * T::from_usize(m % 3).unwrap());
            Complex::from_polar(r, theta)
        })
        .collect();

    let mut best = T::infinity();
    for _ in 0..MAX_ITER {
        let mut max_resid = T::zero();
        let mut corrections = vec![C::new(T::zero(), T::zero()); d];
        for i in 0..d {
            let p = horner(coeffs, z[i]);
            max_resid = max_resid.max(p.norm());
            let dp = horner_deriv(coeffs, z[i]);
            if dp.norm() == T::zero() {
                // nudge off a critical point
                corrections[i] = C::new(T::val(1e-6) * (T::one() + radius), T::zero());
                continue;
            }
            let newton = p / dp;
            let mut s = C::new(T::zero(), T::zero());
            for j in 0..d {
                if j != i {
                    let diff = z[i] - z[j];
                    if diff.norm() < T::epsilon() * (T::one() + radius) {
                        continue;
                    }
                    s += Complex::new(T::one(), T::zero()) / diff;
                }
            }
            let denom = Complex::new(T::one(), T::zero()) - newton * s;
            corrections[i] = if denom.norm() < T::val(1e-30) { newton } else { newton / denom };
        }
        best = best.min(max_resid);
        if max_resid <= tol {
            return Ok(z);
        }
        for i in 0..d {
            if !corrections[i].re.is_finite() || !corrections[i].im.is_finite() {
                return Err(best);
            }
            z[i] -= corrections[i];
        }
    }
    // clustered (multiple) roots converge linearly; accept if the final
    // sweep actually meets the residual bound
    let max_resid = z.iter().fold(T::zero(), |m, &zi| m.max(horner(coeffs, zi).norm()));
    if max_resid <= tol {
        Ok(z)
    } else {
        Err(max_resid)
    }
}
