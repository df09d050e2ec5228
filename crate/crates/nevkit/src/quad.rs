//! Adaptive quadrature over the circle parameter theta in [0, 2pi).
//!
//! Composite midpoint cells on a uniform grid, doubled until two successive
//! estimates agree; cells that contain a flagged singular angle (a divisor
//! sitting close to the integration circle) are refined by graded bisection
//! toward the singularity, down to cell width 1e-8. The log singularities
//! met here are integrable, so the graded tail converges.

use crate::error::{Error, Result};
use crate::tolerances;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct QuadOpts {
    /// Convergence target, used both absolutely and relative to the estimate.
    pub tol: f64,
    /// Hard cap on the uniform cell count.
    pub max_nodes: usize,
    pub start_nodes: usize,
}

impl Default for QuadOpts {
    fn default() -> Self {
        QuadOpts {
            tol: tolerances::QUAD_TOL,
            max_nodes: tolerances::QUAD_MAX_NODES,
            start_nodes: tolerances::QUAD_START_NODES,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    /// The integral over [0, 2pi] (not yet divided by 2pi).
    pub integral: f64,
    pub nodes: usize,
    pub error_est: f64,
}

/// Sample the integrand, nudging off non-finite points (which can only be
/// hit when a sample lands exactly on a divisor angle).
fn sample(g: &(impl Fn(f64) -> f64 + Sync), theta: f64) -> f64 {
    let v = g(theta);
    if v.is_finite() {
        return v;
    }
    for eps in [1e-11, -1e-11, 1e-9, -1e-9] {
        let v = g(theta + eps);
        if v.is_finite() {
            return v;
        }
    }
    0.0
}

/// Composite midpoint rule on [a, b], doubled until the estimate settles.
/// Used on the smooth dyadic shells around a singular angle, where the
/// integrand varies on the scale of the shell itself.
fn refined_interval(g: &(impl Fn(f64) -> f64 + Sync), a: f64, b: f64) -> f64 {
    let mid_sum = |n: usize| -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|i| sample(g, a + (i as f64 + 0.5) * h) * h).sum()
    };
    let mut n = 4;
    let mut prev = mid_sum(n);
    while n < 4096 {
        n *= 2;
        let cur = mid_sum(n);
        if (cur - prev).abs() < 1e-12 * (1.0 + cur.abs()) {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// Graded integration of [a, b] with a singular angle at s inside [a, b]:
/// dyadic shells shrinking toward s down to width 1e-8, each integrated
/// adaptively; the innermost sliver is closed with a single midpoint, whose
/// O(width * |log width|) truncation is far below the quadrature target.
fn graded_cell(g: &(impl Fn(f64) -> f64 + Sync), a: f64, b: f64, s: f64) -> f64 {
    let mut acc = 0.0;
    for to in [b, a] {
        let w = to - s; // signed
        if w == 0.0 {
            continue;
        }
        let mut hi = w;
        loop {
            let lo = hi / 2.0;
            if (hi - lo).abs() < tolerances::MIN_CELL_WIDTH {
                acc += sample(g, s + hi / 2.0) * hi.abs();
                break;
            }
            let (x0, x1) = if w > 0.0 { (s + lo, s + hi) } else { (s + hi, s + lo) };
            acc += refined_interval(g, x0, x1);
            hi = lo;
        }
    }
    acc
}

/// Integral of g over [0, 2pi] with the stated adaptive contract.
pub fn periodic_integral(
    g: impl Fn(f64) -> f64 + Sync,
    singular_angles: &[f64],
    opts: &QuadOpts,
) -> Result<QuadResult> {
    let two_pi = 2.0 * PI;
    let singular: Vec<f64> = singular_angles.iter().map(|s| s.rem_euclid(two_pi)).collect();

    let estimate = |n: usize| -> f64 {
        let h = two_pi / n as f64;
        // A window of fixed angular width around each singular angle gets the
        // graded treatment; if only the cell containing the angle were graded,
        // the neighbouring regular cells would still see the 1/theta^2
        // curvature of the log singularity and the midpoint sums would
        // converge only first order in h, stalling above the tolerance.
        let w = h.max(tolerances::GRADED_WINDOW);
        let mut pts = singular.clone();
        pts.sort_by(f64::total_cmp);
        // merge overlapping windows into groups of grid cells [k0, k1]
        struct Group {
            k0: i64,
            k1: i64,
            angles: Vec<f64>,
        }
        let mut groups: Vec<Group> = Vec::new();
        for s in pts {
            let k0 = ((s - w) / h).floor() as i64;
            let k1 = ((s + w) / h).floor() as i64;
            match groups.last_mut() {
                Some(g) if k0 <= g.k1 => {
                    g.k1 = g.k1.max(k1);
                    g.angles.push(s);
                }
                _ => groups.push(Group { k0, k1, angles: vec![s] }),
            }
        }
        // windows may wrap past 0 or 2pi; merge the first and last group if so
        if groups.len() >= 2 {
            let first_k0 = groups[0].k0;
            if groups.last().unwrap().k1 - n as i64 >= first_k0 {
                let mut first = groups.remove(0);
                let last = groups.last_mut().unwrap();
                last.k1 = last.k1.max(first.k0 + n as i64 + (first.k1 - first.k0));
                last.angles.extend(first.angles.drain(..).map(|s| s + two_pi));
            }
        }
        let mut masked: Vec<usize> = groups
            .iter()
            .flat_map(|g| (g.k0..=g.k1).map(|k| k.rem_euclid(n as i64) as usize))
            .collect();
        masked.sort_unstable();
        masked.dedup();
        let regular: f64 = (0..n)
            .into_par_iter()
            .with_min_len(1024)
            .map(|i| {
                if masked.binary_search(&i).is_ok() {
                    0.0
                } else {
                    sample(&g, (i as f64 + 0.5) * h) * h
                }
            })
            .sum();
        // each group interval is split at midpoints between its singular
        // angles and every piece graded toward its own angle
        let refined: f64 = groups
            .iter()
            .map(|gr| {
                let mut acc = 0.0;
                let mut lo = gr.k0 as f64 * h;
                for (j, &s) in gr.angles.iter().enumerate() {
                    let hi = if j + 1 < gr.angles.len() {
                        (s + gr.angles[j + 1]) / 2.0
                    } else {
                        (gr.k1 + 1) as f64 * h
                    };
                    acc += graded_cell(&g, lo, hi, s.clamp(lo, hi));
                    lo = hi;
                }
                acc
            })
            .sum();
        regular + refined
    };

    let mut n = opts.start_nodes;
    let mut prev = estimate(n);
    let mut last_pair = (f64::NAN, prev);
    while n * 2 <= opts.max_nodes {
        n *= 2;
        let cur = estimate(n);
        let diff = (cur - prev).abs();
        if diff < opts.tol.max(opts.tol * cur.abs()) {
            return Ok(QuadResult { integral: cur, nodes: n, error_est: diff });
        }
        last_pair = (prev, cur);
        prev = cur;
    }
    Err(Error::QuadratureNonConvergence { prev: last_pair.0, last: last_pair.1 })
}
