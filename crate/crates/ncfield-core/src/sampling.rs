//! Random generic fields for randomized suites and continuation seeds.

use num_complex::Complex;
use rand::Rng;
use thiserror::Error;

use crate::scalar::{Scalar, C};
use crate::vector_field::{AntiPolyField, TraceConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("no generic field of degree {degree} found in {attempts} attempts")]
pub struct SamplingExhausted {
    pub degree: usize,
    pub attempts: usize,
}

/// Uniform point in the disk of the given radius.
pub fn disk_point<T: Scalar, R: Rng>(rng: &mut R, radius: T) -> C<T> {
    let r = radius * T::val(rng.gen::<f64>().sqrt());
    let theta = T::val(rng.gen::<f64>()) * T::TAU();
    Complex::from_polar(r, theta)
}

/// Monic centred field of the given degree with well-separated roots,
/// resampled until it is generic. Deterministic for a fixed RNG state.
pub fn random_generic_field<T: Scalar, R: Rng>(
    degree: usize,
    rng: &mut R,
) -> Result<AntiPolyField<T>, SamplingExhausted> {
    assert!(degree >= 1);
    let attempts = 400;
    let min_gap = T::val(0.25);
    for _ in 0..attempts {
        let roots: Vec<C<T>> = (0..degree).map(|_| disk_point(rng, T::val(1.6))).collect();
        let spaced = (0..degree)
            .all(|i| (0..i).all(|j| (roots[i] - roots[j]).norm() >= min_gap));
        if !spaced {
            continue;
        }
        let f = AntiPolyField::from_roots_centred(roots).expect("degree >= 1");
        let cfg = TraceConfig::for_field(&f);
        if f.is_generic(&cfg) {
            return Ok(f);
        }
    }
    Err(SamplingExhausted { degree, attempts })
}
