//! Numerical Nevanlinna theory on a closed catalog of meromorphic functions.
//!
//! The crate computes proximity, counting and characteristic functions by
//! circle quadrature and exact divisor enumeration, evaluates the explicit
//! Poisson-Jensen bound for shift quotients f(z+c)/f(z), and runs growth
//! checks for difference polynomials (Clunie / Mohon'ko analogues and the
//! Valiron-Mohon'ko degree identity).

pub mod diffpoly;
pub mod error;
pub mod funcat;
pub mod harness;
pub mod nevanlinna;
pub mod poly;
pub mod quad;
pub mod special;
pub mod tolerances;

pub use error::Error;

/// Double-precision complex scalar used throughout.
pub type C = num_complex::Complex64;

/// log+ x = max(log x, 0), with log+ 0 = 0.
pub fn log_plus(x: f64) -> f64 {
    if x > 1.0 {
        x.ln()
    } else {
        0.0
    }
}
