//! Library side of the `ncfield` command-line tool: quadratic
//! bifurcation sampling, SVG rendering, and file plumbing.

pub mod bifurcation;
pub mod io;
pub mod svg;
