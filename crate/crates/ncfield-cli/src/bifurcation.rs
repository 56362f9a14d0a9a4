//! Bifurcation diagram of the quadratic family `dz/dt = conj(z^2 - eps)`.
//!
//! The parameter plane splits along three rays; on each ray the two
//! saddles are joined by a heteroclinic connection, at the origin they
//! collide, and each open sector is one generic stratum.

use num_complex::Complex64;
use serde::Serialize;

use ncfield_core::invariants;
use ncfield_core::vector_field::AntiPolyField;
use ncfield_core::{NcTree, TraceConfig};

/// Flow direction of the connection between the roots `+sqrt(eps)` and
/// `-sqrt(eps)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    /// From `sqrt(eps)` to `-sqrt(eps)` (the integral is negative).
    PlusToMinus,
    /// From `-sqrt(eps)` to `sqrt(eps)` (the integral is positive).
    MinusToPlus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Classification {
    DoubleSaddle,
    Heteroclinic { ray: u8, orientation: Orientation },
    Generic { sector: u8, tree: Option<NcTree> },
}

/// One classified parameter value.
#[derive(Debug, Clone, Serialize)]
pub struct BifurcationSample {
    pub epsilon: (f64, f64),
    pub classification: Classification,
    pub connection_integral: (f64, f64),
}

/// Angular half-width of the ray detection band.
pub const DEFAULT_RAY_TOLERANCE: f64 = 1e-6;

fn quadratic_field(eps: Complex64) -> AntiPolyField<f64> {
    AntiPolyField::from_coefficients(vec![-eps, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)])
        .expect("monic centred quadratic")
}

/// Connection integral from `-sqrt(eps)` to `sqrt(eps)` through the
/// cached antiderivative (closed form: `-4 eps sqrt(eps) / 3`).
pub fn connection_integral(eps: Complex64) -> Complex64 {
    if eps.norm() == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let f = quadratic_field(eps);
    let s = eps.sqrt();
    f.eval_antideriv(s) - f.eval_antideriv(-s)
}

/// Classifies one `eps`: double saddle at the origin, heteroclinic on
/// the three rays (with flow orientation from the sign of the
/// integral), generic in the open sectors. For generic values the
/// stratum tree is attached when `extract_tree` is set and extraction
/// succeeds.
pub fn quadratic_classify(eps: Complex64, ray_tol: f64, extract_tree: bool) -> BifurcationSample {
    let integral = connection_integral(eps);
    let classification = if eps.norm() == 0.0 {
        Classification::DoubleSaddle
    } else {
        let arg = eps.arg();
        let thirds = 2.0 * std::f64::consts::PI / 3.0;
        let mut on_ray = None;
        for ray in 0u8..3 {
            let target = ray as f64 * thirds;
            let mut d = (arg - target) % (2.0 * std::f64::consts::PI);
            if d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            if d < -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            if d.abs() <= ray_tol {
                on_ray = Some(ray);
                break;
            }
        }
        match on_ray {
            Some(ray) => {
                let orientation = if integral.re < 0.0 {
                    Orientation::PlusToMinus
                } else {
                    Orientation::MinusToPlus
                };
                Classification::Heteroclinic { ray, orientation }
            }
            None => {
                let wrapped = if arg < 0.0 { arg + 2.0 * std::f64::consts::PI } else { arg };
                let sector = (wrapped / thirds).floor().min(2.0) as u8;
                let tree = if extract_tree {
                    let f = quadratic_field(eps);
                    let cfg = TraceConfig::for_field(&f);
                    invariants::extract(&f, &cfg).ok().map(|ex| ex.tree)
                } else {
                    None
                };
                Classification::Generic { sector, tree }
            }
        }
    };
    BifurcationSample {
        epsilon: (eps.re, eps.im),
        classification,
        connection_integral: (integral.re, integral.im),
    }
}

/// Grid over the parameter plane.
#[derive(Debug, Clone, Copy)]
pub enum GridSpec {
    Polar { r_min: f64, r_max: f64, r_steps: usize, theta_steps: usize },
    Cartesian { re_min: f64, re_max: f64, im_min: f64, im_max: f64, re_steps: usize, im_steps: usize },
}

impl Default for GridSpec {
    fn default() -> Self {
        // 24 angles hit all three rays exactly; the sectors in between
        // sample every stratum
        GridSpec::Polar { r_min: 0.5, r_max: 1.5, r_steps: 3, theta_steps: 24 }
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<Complex64> {
        match *self {
            GridSpec::Polar { r_min, r_max, r_steps, theta_steps } => {
                let mut out = vec![Complex64::new(0.0, 0.0)];
                for ri in 0..r_steps {
                    let r = if r_steps == 1 {
                        r_min
                    } else {
                        r_min + (r_max - r_min) * ri as f64 / (r_steps - 1) as f64
                    };
                    for ti in 0..theta_steps {
                        let theta = 2.0 * std::f64::consts::PI * ti as f64 / theta_steps as f64;
                        out.push(Complex64::from_polar(r, theta));
                    }
                }
                out
            }
            GridSpec::Cartesian { re_min, re_max, im_min, im_max, re_steps, im_steps } => {
                let mut out = Vec::with_capacity(re_steps * im_steps);
                for i in 0..re_steps {
                    for j in 0..im_steps {
                        let re = if re_steps == 1 {
                            re_min
                        } else {
                            re_min + (re_max - re_min) * i as f64 / (re_steps - 1) as f64
                        };
                        let im = if im_steps == 1 {
                            im_min
                        } else {
                            im_min + (im_max - im_min) * j as f64 / (im_steps - 1) as f64
                        };
                        out.push(Complex64::new(re, im));
                    }
                }
                out
            }
        }
    }
}

pub fn class_label(sample: &BifurcationSample) -> String {
    match &sample.classification {
        Classification::DoubleSaddle => "double_saddle".into(),
        Classification::Heteroclinic { ray, orientation } => {
            let o = match orientation {
                Orientation::PlusToMinus => "plus_to_minus",
                Orientation::MinusToPlus => "minus_to_plus",
            };
            format!("heteroclinic:{ray}:{o}")
        }
        Classification::Generic { sector, .. } => format!("generic:{sector}"),
    }
}

/// CSV rows `re_eps,im_eps,class,re_integral,im_integral,tree`.
pub fn diagram_csv(samples: &[BifurcationSample]) -> String {
    let mut out = String::from("re_eps,im_eps,class,re_integral,im_integral,tree\n");
    for s in samples {
        let tree = match &s.classification {
            Classification::Generic { tree: Some(t), .. } => t.canonical_code(),
            _ => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.epsilon.0,
            s.epsilon.1,
            class_label(s),
            s.connection_integral.0,
            s.connection_integral.1,
            tree
        ));
    }
    out
}

/// Samples a grid; tree extraction for generic points is on by default.
pub fn sample_grid(grid: &GridSpec, ray_tol: f64, extract_trees: bool) -> Vec<BifurcationSample> {
    grid.points()
        .into_iter()
        .map(|eps| quadratic_classify(eps, ray_tol, extract_trees))
        .collect()
}
