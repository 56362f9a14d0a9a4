//! Adaptive tracing of separatrices for `dz/dt = conj(P(z))`.
//!
//! The integrated field is the unit-speed direction field
//! `conj(P(z)) / |P(z)|`: the orbits are the same up to a time
//! rescaling, speed is uniform in arc length, and neither the saddles
//! nor the far field are stiff. Incoming separatrices are traced in
//! reversed time.

use std::io::Write;

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::{angle_diff, Scalar, C};

use super::{nearest_marked_point, AntiPolyField, DegenerateRoot, DirectionClass};

/// Geometry and effort knobs for one trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceConfig<T> {
    /// Offset `epsilon` of the launch point from the origin saddle.
    pub launch_radius: T,
    /// A trace ending within this distance of another zero lands there.
    pub landing_radius: T,
    /// Reaching this radius classifies the trace as escaped to infinity.
    pub escape_radius: T,
    /// Local error tolerance of the embedded pair.
    pub step_tol: T,
    /// Accepted-step budget before the trace is reported unresolved.
    pub max_steps: usize,
}

impl<T: Scalar> TraceConfig<T> {
    /// Defaults scaled to the field: `epsilon = 1e-4 * (min root gap)`,
    /// `delta = 10 epsilon`, `R = max(10, 10 max|z_j|)`, step tolerance
    /// `1e-10` (clamped away from the scalar's epsilon).
    pub fn for_field(f: &AntiPolyField<T>) -> Self {
        let gap = f.min_root_gap().unwrap_or_else(T::one);
        let scale = T::one() + f.max_root_norm();
        let launch = (T::val(1e-4) * gap).max(T::epsilon() * scale * T::val(1e3));
        TraceConfig {
            launch_radius: launch,
            landing_radius: T::val(10.0) * launch,
            escape_radius: T::val(10.0).max(T::val(10.0) * f.max_root_norm()),
            step_tol: T::tol(1e-10, 1e3),
            max_steps: 200_000,
        }
    }

    pub fn with_step_tol(mut self, tol: T) -> Self {
        self.step_tol = tol.max(T::epsilon() * T::val(1e3));
        self
    }
}

/// Where a traced separatrix ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Terminal<T> {
    /// Escaped; `index` is the nearest direction at infinity.
    MarkedPoint { index: u32 },
    /// Entered the landing ball of another zero.
    LandingZero { root: usize, gap: T },
    /// Step budget exhausted without a classification.
    Unresolved,
}

/// A numerically integrated separatrix.
#[derive(Debug, Clone)]
pub struct TracedSeparatrix<T> {
    pub origin: usize,
    pub class: DirectionClass,
    /// Launch angle of the local slot, in `[0, 2 pi)`.
    pub launch_angle: T,
    pub polyline: Vec<C<T>>,
    pub terminal: Terminal<T>,
}

impl<T: Scalar> TracedSeparatrix<T> {
    /// Two-column CSV of the polyline (`re,im`), for plotting.
    pub fn write_polyline_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "re,im")?;
        for p in &self.polyline {
            writeln!(w, "{},{}", p.re, p.im)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TraceError {
    #[error(transparent)]
    DegenerateRoot(#[from] DegenerateRoot),
    #[error("integrator could not meet tolerance above the minimum step near re={re}, im={im}")]
    StepFailure { re: f64, im: f64 },
}

// Dormand-Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = B1 - 5179.0 / 57600.0;
const E3: f64 = B3 - 7571.0 / 16695.0;
const E4: f64 = B4 - 393.0 / 640.0;
const E5: f64 = B5 + 92097.0 / 339200.0;
const E6: f64 = B6 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

/// One embedded step; returns the 5th-order advance and the error
/// estimate against the 4th-order solution.
fn dp_step<T: Scalar, F: Fn(C<T>) -> C<T>>(f: &F, z: C<T>, h: T) -> (C<T>, T) {
    let hc = |x: f64| C::new(h * T::val(x), T::zero());
    let k1 = f(z);
    let k2 = f(z + k1 * hc(A21));
    let k3 = f(z + k1 * hc(A31) + k2 * hc(A32));
    let k4 = f(z + k1 * hc(A41) + k2 * hc(A42) + k3 * hc(A43));
    let k5 = f(z + k1 * hc(A51) + k2 * hc(A52) + k3 * hc(A53) + k4 * hc(A54));
    let k6 = f(z + k1 * hc(A61) + k2 * hc(A62) + k3 * hc(A63) + k4 * hc(A64) + k5 * hc(A65));
    let z5 = z + k1 * hc(B1) + k3 * hc(B3) + k4 * hc(B4) + k5 * hc(B5) + k6 * hc(B6);
    let k7 = f(z5);
    let err = (k1 * hc(E1) + k3 * hc(E3) + k4 * hc(E4) + k5 * hc(E5) + k6 * hc(E6) + k7 * hc(E7))
        .norm();
    (z5, err)
}

/// Traces the separatrix of `f` at root `origin` in the local slot
/// `class`: forwards for outgoing, backwards for incoming. Stops on
/// escape (nearest marked point, refined by a two-radius Richardson
/// estimate), on entering the landing ball of another zero, or when the
/// step budget runs out (`Unresolved`).
pub fn trace<T: Scalar>(
    f: &AntiPolyField<T>,
    origin: usize,
    class: DirectionClass,
    cfg: &TraceConfig<T>,
) -> Result<TracedSeparatrix<T>, TraceError> {
    let dirs = f.separatrix_directions(origin)?;
    let dir = dirs
        .iter()
        .find(|d| d.class == class)
        .expect("all four classes are present");
    let forward = class.is_outgoing();
    let field = |z: C<T>| {
        let p = f.eval(z).conj();
        let n = p.norm();
        let v = if n > T::zero() { p / C::new(n, T::zero()) } else { C::new(T::zero(), T::zero()) };
        if forward {
            v
        } else {
            -v
        }
    };

    let z0 = f.roots()[origin] + Complex::from_polar(cfg.launch_radius, dir.angle);
    let mut z = z0;
    let mut polyline = vec![z0];
    let mut traveled = T::zero();
    let origin_guard = cfg.landing_radius * T::val(4.0);
    let h_max = cfg.escape_radius * T::val(0.1);
    let mut h = (cfg.launch_radius * T::val(0.5)).min(h_max);
    let k = f.k() as u32;

    let nearest_root = |z: C<T>| -> (usize, T) {
        let mut best = (0usize, T::infinity());
        for (i, &r) in f.roots().iter().enumerate() {
            let d = (z - r).norm();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    };

    let mut steps = 0usize;
    loop {
        if steps >= cfg.max_steps {
            return Ok(TracedSeparatrix {
                origin,
                class,
                launch_angle: dir.angle,
                polyline,
                terminal: Terminal::Unresolved,
            });
        }
        let (_, d_near) = nearest_root(z);
        let cap = cfg.landing_radius.max(T::val(0.2) * d_near).min(h_max);
        h = h.min(cap);
        // adaptive attempt loop
        let accepted = loop {
            let (z_new, err) = dp_step(&field, z, h);
            let sc = cfg.step_tol * (T::one() + z.norm().max(z_new.norm()));
            if err <= sc {
                let grow = if err > T::zero() {
                    (T::val(0.9) * (sc / err).powf(T::val(0.2))).min(T::val(5.0))
                } else {
                    T::val(5.0)
                };
                break Some((z_new, (h * grow).min(h_max)));
            }
            let shrink = (T::val(0.9) * (sc / err).powf(T::val(0.2))).max(T::val(0.2));
            h = h * shrink;
            if h < T::epsilon() * (T::one() + z.norm()) * T::val(100.0) {
                break None;
            }
        };
        let Some((z_new, h_next)) = accepted else {
            return Err(TraceError::StepFailure {
                re: z.re.to_f64().unwrap_or(f64::NAN),
                im: z.im.to_f64().unwrap_or(f64::NAN),
            });
        };
        traveled += (z_new - z).norm();
        z = z_new;
        polyline.push(z);
        steps += 1;
        h = h_next;

        if z.norm() >= cfg.escape_radius {
            let index = classify_escape(f, k, &polyline, cfg);
            return Ok(TracedSeparatrix {
                origin,
                class,
                launch_angle: dir.angle,
                polyline,
                terminal: Terminal::MarkedPoint { index },
            });
        }
        for (i, &r) in f.roots().iter().enumerate() {
            if i == origin && traveled < origin_guard {
                continue;
            }
            let d = (z - r).norm();
            if d <= cfg.landing_radius {
                return Ok(TracedSeparatrix {
                    origin,
                    class,
                    launch_angle: dir.angle,
                    polyline,
                    terminal: Terminal::LandingZero { root: i, gap: d },
                });
            }
        }
    }
}

/// Asymptotic direction at escape: `arg z` at the final radius, refined
/// by one Richardson step against the half-radius crossing (the angular
/// error decays like `1/r^2`).
fn classify_escape<T: Scalar>(
    _f: &AntiPolyField<T>,
    k: u32,
    polyline: &[C<T>],
    cfg: &TraceConfig<T>,
) -> u32 {
    let z_end = *polyline.last().expect("nonempty polyline");
    let phi_end = z_end.arg();
    let half = cfg.escape_radius * T::val(0.5);
    let mut phi_half = None;
    for w in polyline.windows(2).rev() {
        let (a, b) = (w[0], w[1]);
        if a.norm() < half && b.norm() >= half {
            let t = (half - a.norm()) / (b.norm() - a.norm());
            let zc = a + (b - a) * C::new(t, T::zero());
            phi_half = Some(zc.arg());
            break;
        }
    }
    let estimate = match phi_half {
        Some(ph) => phi_end + angle_diff(phi_end, ph) / T::val(3.0),
        None => phi_end,
    };
    nearest_marked_point(k, estimate)
}

/// Every separatrix of every root, root-major, slots in the order of
/// [`DirectionClass::ALL`]. The calls are independent; callers may shard
/// them across threads.
pub fn trace_all<T: Scalar>(
    f: &AntiPolyField<T>,
    cfg: &TraceConfig<T>,
) -> Result<Vec<TracedSeparatrix<T>>, TraceError> {
    let mut out = Vec::with_capacity(4 * f.roots().len());
    for j in 0..f.roots().len() {
        for class in DirectionClass::ALL {
            out.push(trace(f, j, class, cfg)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn field(coeffs: &[(f64, f64)]) -> AntiPolyField<f64> {
        AntiPolyField::from_coefficients(coeffs.iter().map(|&(re, im)| c(re, im)).collect())
            .unwrap()
    }

    #[test]
    fn linear_outgoing_reaches_positive_real_direction() {
        let f = field(&[(0.0, 0.0), (1.0, 0.0)]);
        let cfg = TraceConfig::for_field(&f);
        let t = trace(&f, 0, DirectionClass::Outgoing1, &cfg).unwrap();
        assert_eq!(t.terminal, Terminal::MarkedPoint { index: 0 });
        // the polyline starts at the root offset by the launch radius
        let launch = f.roots()[0] + Complex64::from_polar(cfg.launch_radius, t.launch_angle);
        assert_eq!(t.polyline[0], launch);
        assert!((t.polyline[0] - f.roots()[0]).norm() - cfg.launch_radius < 1e-15);
        // explicit solution stays on the positive real axis
        for p in &t.polyline {
            assert!(p.im.abs() < 1e-9);
            assert!(p.re > 0.0);
        }
    }

    #[test]
    fn linear_all_four_axes() {
        let f = field(&[(0.0, 0.0), (1.0, 0.0)]);
        let cfg = TraceConfig::for_field(&f);
        let mut seen = std::collections::HashSet::new();
        for class in DirectionClass::ALL {
            let t = trace(&f, 0, class, &cfg).unwrap();
            match t.terminal {
                Terminal::MarkedPoint { index } => {
                    seen.insert(index);
                    // outgoing even, incoming odd
                    assert_eq!(index % 2 == 0, class.is_outgoing());
                }
                other => panic!("unexpected terminal {other:?}"),
            }
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn real_quadratic_has_heteroclinic_connection() {
        // P = z^2 - 1: the outgoing separatrix of +1 toward -1 runs on
        // the real axis
        let f = field(&[(-1.0, 0.0), (0.0, 0.0), (1.0, 0.0)]);
        let cfg = TraceConfig::for_field(&f);
        let plus = f.roots().iter().position(|r| r.re > 0.0).unwrap();
        let minus = 1 - plus;
        let mut landed = false;
        for class in [DirectionClass::Outgoing1, DirectionClass::Outgoing2] {
            let t = trace(&f, plus, class, &cfg).unwrap();
            if let Terminal::LandingZero { root, gap } = t.terminal {
                assert_eq!(root, minus);
                assert!(gap <= cfg.landing_radius);
                landed = true;
            }
        }
        assert!(landed, "expected a landing trace");
        assert!(!f.is_generic(&cfg));
        assert!(matches!(f.genericity(&cfg), super::super::Genericity::Heteroclinic { .. }));
    }

    #[test]
    fn rotated_quadratic_is_generic_with_six_marked_points() {
        // P = z^2 - i: all 8 separatrices escape, to 6 distinct marked
        // points
        let f = field(&[(0.0, -1.0), (0.0, 0.0), (1.0, 0.0)]);
        let cfg = TraceConfig::for_field(&f);
        let traces = trace_all(&f, &cfg).unwrap();
        assert_eq!(traces.len(), 8);
        let mut seen = std::collections::HashSet::new();
        for t in &traces {
            match t.terminal {
                Terminal::MarkedPoint { index } => {
                    assert_eq!(index % 2 == 0, t.class.is_outgoing());
                    seen.insert(index);
                }
                other => panic!("unexpected terminal {other:?}"),
            }
        }
        assert_eq!(seen.len(), 6);
        assert!(f.is_generic(&cfg));
    }

    #[test]
    fn tolerance_halving_keeps_terminals() {
        let f = field(&[(0.3, 0.4), (-1.0, 0.2), (0.0, 0.0), (1.0, 0.0)]);
        let cfg = TraceConfig::for_field(&f);
        let finer = cfg.with_step_tol(cfg.step_tol / 2.0);
        let a = trace_all(&f, &cfg).unwrap();
        let b = trace_all(&f, &finer).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.terminal, y.terminal);
        }
    }

    #[test]
    fn csv_export() {
        let f = field(&[(0.0, 0.0), (1.0, 0.0)]);
        let cfg = TraceConfig::for_field(&f);
        let t = trace(&f, 0, DirectionClass::Outgoing1, &cfg).unwrap();
        let mut buf = Vec::new();
        t.write_polyline_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("re,im\n"));
        assert_eq!(text.lines().count(), t.polyline.len() + 1);
    }
}
