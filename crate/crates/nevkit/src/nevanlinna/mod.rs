//! Nevanlinna functionals by circle quadrature and closed-form counting,
//! the Poisson-Jensen decomposition of log|f(z+c)/f(z)|, the explicit
//! proximity bound for shift quotients, and the Borel radius factor.

use crate::error::{Error, Result};
use crate::funcat::{DivisorKind, FunctionExpr};
use crate::log_plus;
use crate::quad::{periodic_integral, QuadOpts};
use crate::tolerances;
use crate::C;
use std::f64::consts::PI;

/// Per-radius record of proximity, counting and characteristic values for
/// f and 1/f. T = m_f + N_f by definition.
#[derive(Debug, Clone, Copy)]
pub struct NevanlinnaSample {
    pub r: f64,
    pub m_f: f64,
    pub m_inv: f64,
    pub n_f: f64,
    pub n_inv: f64,
    pub t: f64,
    pub quad_points: usize,
    pub quad_error_est: f64,
}

/// One evaluation of the explicit shift-quotient bound.
#[derive(Debug, Clone, Copy)]
pub struct BoundCheck {
    pub r: f64,
    pub alpha: f64,
    pub delta: f64,
    pub c_mod: f64,
    /// measured m(r, f(z+c)/f(z))
    pub lhs: f64,
    /// bound value
    pub rhs: f64,
    pub pass: bool,
}

/// Angles of divisor points lying within the near-circle band around |z| = r.
pub(crate) fn singular_angles(expr: &FunctionExpr, r: f64) -> Vec<f64> {
    expr.signed_divisors(r * (1.0 + 2.0 * tolerances::NEAR_CIRCLE), true)
        .into_iter()
        .filter(|(q, _)| (q.norm() - r).abs() < tolerances::NEAR_CIRCLE * r)
        .map(|(q, _)| q.arg())
        .collect()
}

fn proximity_with(
    expr: &FunctionExpr,
    r: f64,
    opts: &QuadOpts,
    invert: bool,
) -> Result<(f64, usize, f64)> {
    let angles = singular_angles(expr, r);
    let g = |theta: f64| {
        let z = C::from_polar(r, theta);
        let la = expr.log_abs(z);
        let la = if invert { -la } else { la };
        la.max(0.0)
    };
    let q = periodic_integral(g, &angles, opts)?;
    Ok((q.integral / (2.0 * PI), q.nodes, q.error_est / (2.0 * PI)))
}

/// Proximity function m(r, f): circle mean of log+|f|.
pub fn proximity(expr: &FunctionExpr, r: f64, opts: &QuadOpts) -> Result<f64> {
    Ok(proximity_with(expr, r, opts, false)?.0)
}

/// Integrated counting function N(r): sum of mult * log(r/|q|) over
/// divisor points of the requested kind in the closed disc, plus the
/// origin contribution mult_at_0 * log r. Exact, no quadrature.
pub fn integrated_counting(expr: &FunctionExpr, r: f64, kind: DivisorKind) -> f64 {
    let d = expr.divisors_within_closed(r, kind);
    let mut acc = 0.0;
    for (q, m) in &d.points {
        let dist = q.norm();
        if dist <= tolerances::DIVISOR_MERGE {
            acc += *m as f64 * r.ln();
        } else {
            acc += *m as f64 * (r / dist).ln();
        }
    }
    acc
}

/// Characteristic T(r, f) together with all companion quantities.
pub fn characteristic(expr: &FunctionExpr, r: f64, opts: &QuadOpts) -> Result<NevanlinnaSample> {
    let (m_f, n1, e1) = proximity_with(expr, r, opts, false)?;
    let (m_inv, n2, e2) = proximity_with(expr, r, opts, true)?;
    let n_f = integrated_counting(expr, r, DivisorKind::Pole);
    let n_inv = integrated_counting(expr, r, DivisorKind::Zero);
    Ok(NevanlinnaSample {
        r,
        m_f,
        m_inv,
        n_f,
        n_inv,
        t: m_f + n_f,
        quad_points: n1.max(n2),
        quad_error_est: e1 + e2,
    })
}

/// m(r, f(z+c)/f(z)).
pub fn diff_quotient_proximity(expr: &FunctionExpr, c: C, r: f64, opts: &QuadOpts) -> Result<f64> {
    let q = FunctionExpr::quotient(expr.shifted(c), expr.clone());
    proximity(&q, r, opts)
}

/// m(r, f(z+c)/f(z+h)); reduces to `diff_quotient_proximity` at h = 0.
pub fn shifted_quotient_proximity(
    expr: &FunctionExpr,
    c: C,
    h: C,
    r: f64,
    opts: &QuadOpts,
) -> Result<f64> {
    let q = FunctionExpr::quotient(expr.shifted(c), expr.shifted(h));
    proximity(&q, r, opts)
}

/// The three Poisson-Jensen terms of log|f(z+c)/f(z)| on the comparison
/// circle s = (alpha+1)/2 (r + |c|): boundary integral, zero sum, pole sum.
/// The caller's check is S1 + S2 - S3 = log|f(z+c)/f(z)|.
pub fn poisson_jensen_terms(
    expr: &FunctionExpr,
    c: C,
    alpha: f64,
    z: C,
    r: f64,
    opts: &QuadOpts,
) -> Result<(f64, f64, f64)> {
    if alpha <= 1.0 {
        return Err(Error::ParameterDomain(format!("alpha = {alpha} must exceed 1")));
    }
    if (z.norm() - r).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::ParameterDomain(format!("|z| = {} but r = {r}", z.norm())));
    }
    if expr.ord_at(C::new(0.0, 0.0), 1e-9) != 0 {
        return Err(Error::ParameterDomain("f(0) must be finite and nonzero".into()));
    }
    let s = 0.5 * (alpha + 1.0) * (r + c.norm());
    for (label, x) in [("z", z), ("z+c", z + c)] {
        if (x.norm() - s).abs() < 1e-9 * s {
            return Err(Error::ParameterDomain(format!("{label} lies on the circle |w| = s")));
        }
        let near = expr
            .signed_divisors(x.norm() + 1.0, true)
            .into_iter()
            .any(|(q, _)| (q - x).norm() < 1e-9 * x.norm().max(1.0));
        if near {
            return Err(Error::PointOnDivisor(format!("{label} = {x}")));
        }
    }

    let angles = singular_angles(expr, s);
    let kernel = |theta: f64| {
        let w = C::from_polar(s, theta);
        (((w + z + c) / (w - z - c)) - ((w + z) / (w - z))).re
    };
    let g = |theta: f64| expr.log_abs(C::from_polar(s, theta)) * kernel(theta);
    let s1 = periodic_integral(g, &angles, opts)?.integral / (2.0 * PI);

    let blaschke_pair = |q: C| {
        let num = (s * (z + c - q)).norm() / (s * s - q.conj() * (z + c)).norm();
        let den = (s * s - q.conj() * z).norm() / (s * (z - q)).norm();
        num.ln() + den.ln()
    };
    let sum_over = |kind: DivisorKind| {
        expr.divisors_within(s, kind)
            .points
            .iter()
            .map(|(q, m)| *m as f64 * blaschke_pair(*q))
            .sum::<f64>()
    };
    let s2 = sum_over(DivisorKind::Zero);
    let s3 = sum_over(DivisorKind::Pole);
    Ok((s1, s2, s3))
}

/// Explicit bound on m(r, f(z+c)/f(z)) for r >= 1, alpha > 1, 0 < delta < 1
/// and f(0) != 0, infinity. The default applies the 1/r^delta factor once,
/// matching the self-consistent final chain of estimates; `strict_statement`
/// applies it a second time for comparison.
pub fn lemma_bound(
    expr: &FunctionExpr,
    c: C,
    r: f64,
    alpha: f64,
    delta: f64,
    opts: &QuadOpts,
    strict_statement: bool,
) -> Result<BoundCheck> {
    if r < 1.0 {
        return Err(Error::ParameterDomain(format!("r = {r} must be >= 1")));
    }
    if alpha <= 1.0 {
        return Err(Error::ParameterDomain(format!("alpha = {alpha} must exceed 1")));
    }
    if delta <= 0.0 || delta >= 1.0 {
        return Err(Error::ParameterDomain(format!("delta = {delta} must lie in (0, 1)")));
    }
    if expr.ord_at(C::new(0.0, 0.0), 1e-9) != 0 {
        return Err(Error::ParameterDomain("f(0) must be finite and nonzero".into()));
    }
    let c_mod = c.norm();
    let lhs = diff_quotient_proximity(expr, c, r, opts)?;
    if c_mod == 0.0 {
        let pass = lhs <= tolerances::BOUND_SLACK;
        return Ok(BoundCheck { r, alpha, delta, c_mod, lhs, rhs: 0.0, pass });
    }
    let f0 = expr
        .evaluate(C::new(0.0, 0.0))
        .finite()
        .ok_or_else(|| Error::ParameterDomain("f(0) not finite".into()))?;
    let t_big = characteristic(expr, alpha * (r + c_mod), opts)?.t;
    Ok(lemma_bound_from_parts(
        r,
        alpha,
        delta,
        c_mod,
        lhs,
        t_big,
        log_plus(1.0 / f0.norm()),
        strict_statement,
    ))
}

/// Assemble the bound check from precomputed quadrature values: `lhs` is
/// m(r, f(z+c)/f(z)) and `t_big` is T(alpha (r + |c|), f). Lets a caller
/// sweeping an (alpha, delta) grid reuse both across grid points.
#[allow(clippy::too_many_arguments)]
pub fn lemma_bound_from_parts(
    r: f64,
    alpha: f64,
    delta: f64,
    c_mod: f64,
    lhs: f64,
    t_big: f64,
    log_plus_inv_f0: f64,
    strict_statement: bool,
) -> BoundCheck {
    let bracket =
        8.0 * c_mod * (3.0 * alpha + 1.0) + 8.0 * alpha * (alpha - 1.0) * c_mod.powf(delta);
    let k = bracket / (delta * (1.0 - delta) * (alpha - 1.0).powi(2));
    let mut rhs = k / r.powf(delta) * (t_big + log_plus_inv_f0);
    if strict_statement {
        rhs /= r.powf(delta);
    }
    let pass = lhs <= rhs * (1.0 + tolerances::BOUND_SLACK) + tolerances::BOUND_SLACK;
    BoundCheck { r, alpha, delta, c_mod, lhs, rhs, pass }
}

/// Radius inflation factor alpha = 1 + r / ((r + |c|) T^{eps/2}), defined
/// for T >= e.
pub fn borel_alpha(r: f64, c_mod: f64, t_val: f64, epsilon: f64) -> Result<f64> {
    if t_val < std::f64::consts::E {
        return Err(Error::CharacteristicBelowE(t_val));
    }
    Ok(1.0 + r / ((r + c_mod) * t_val.powf(epsilon / 2.0)))
}
