//! Dense complex polynomials, coefficients stored highest degree first,
//! and a simultaneous-iteration (Aberth-Ehrlich) root finder.

use crate::error::{Error, Result};
use crate::tolerances;
use crate::C;

/// Evaluate by Horner's scheme. Coefficients highest degree first.
pub fn eval(coeffs: &[C], z: C) -> C {
    let mut acc = C::new(0.0, 0.0);
    for &c in coeffs {
        acc = acc * z + c;
    }
    acc
}

/// Formal derivative, highest degree first.
pub fn derivative(coeffs: &[C]) -> Vec<C> {
    let n = coeffs.len();
    if n <= 1 {
        return vec![C::new(0.0, 0.0)];
    }
    coeffs[..n - 1]
        .iter()
        .enumerate()
        .map(|(i, &c)| c * ((n - 1 - i) as f64))
        .collect()
}

/// Product of two coefficient vectors.
pub fn mul(a: &[C], b: &[C]) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Monic polynomial with the given roots, scaled by `lead`.
pub fn from_roots(lead: C, roots: &[C]) -> Vec<C> {
    let mut out = vec![lead];
    for &r in roots {
        out = mul(&out, &[C::new(1.0, 0.0), -r]);
    }
    out
}

/// Strip leading coefficients that are exactly zero (or negligibly small
/// relative to the largest coefficient).
pub fn trim(coeffs: &[C]) -> Vec<C> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    if scale == 0.0 {
        return vec![];
    }
    let cut = scale * 1e-14;
    let start = coeffs.iter().position(|c| c.norm() > cut).unwrap_or(coeffs.len());
    coeffs[start..].to_vec()
}

/// All roots of the polynomial with multiplicities.
///
/// Roots at the origin are deflated exactly from trailing zero coefficients;
/// the rest come from Aberth-Ehrlich iteration, then nearby approximations
/// are clustered into a single root with the cluster size as multiplicity.
pub fn roots(coeffs: &[C]) -> Result<Vec<(C, u32)>> {
    let mut p = trim(coeffs);
    if p.len() <= 1 {
        return Ok(vec![]);
    }
    let scale = p.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    // deflate exact zeros at the origin
    let mut zero_mult = 0u32;
    while p.len() > 1 && p.last().unwrap().norm() <= scale * 1e-14 {
        p.pop();
        zero_mult += 1;
    }
    let mut out: Vec<(C, u32)> = Vec::new();
    if zero_mult > 0 {
        out.push((C::new(0.0, 0.0), zero_mult));
    }
    if p.len() > 1 {
        let raw = aberth(&p)?;
        out.extend(cluster(&raw));
    }
    Ok(out)
}

fn aberth(p: &[C]) -> Result<Vec<C>> {
    let n = p.len() - 1;
    let dp = derivative(p);
    // Cauchy-style radius for initial guesses
    let lead = p[0].norm();
    let radius = 1.0
        + p[1..]
            .iter()
            .map(|c| (c.norm() / lead).powf(1.0 / n as f64))
            .fold(0.0_f64, f64::max);
    let mut zs: Vec<C> = (0..n)
        .map(|k| {
            let ang = 2.0 * std::f64::consts::PI * (k as f64 + 0.35) / n as f64 + 0.1;
            C::from_polar(radius * (0.5 + 0.5 * (k as f64 + 1.0) / n as f64), ang)
        })
        .collect();
    let scale = p.iter().map(|c| c.norm()).fold(0.0_f64, f64::max);
    for _ in 0..400 {
        let mut max_step = 0.0_f64;
        for i in 0..n {
            let zi = zs[i];
            let pv = eval(p, zi);
            if pv.norm() == 0.0 {
                continue;
            }
            let dv = eval(&dp, zi);
            let newton = pv / dv;
            let mut sum = C::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    sum += 1.0 / (zi - zs[j]);
                }
            }
            let denom = C::new(1.0, 0.0) - newton * sum;
            let step = if denom.norm() > 1e-300 { newton / denom } else { newton };
            zs[i] = zi - step;
            max_step = max_step.max(step.norm() / (1.0 + zs[i].norm()));
        }
        if max_step < 1e-15 {
            break;
        }
    }
    // residual check relative to coefficient scale and point magnitude
    let mut worst = 0.0_f64;
    for &z in &zs {
        let local = scale * (1.0 + z.norm()).powi(n as i32);
        worst = worst.max(eval(p, z).norm() / local);
    }
    if worst > tolerances::ROOT_RESIDUAL {
        return Err(Error::RootFinding { coeffs: p.to_vec(), residual: worst });
    }
    Ok(zs)
}

/// Merge near-identical roots into (centroid, multiplicity) pairs.
///
/// Multiple roots come out of the iteration as tight clusters of simple
/// approximations; 1e-6 relative separation is well above the spread that
/// double precision produces for multiplicities up to four.
fn cluster(raw: &[C]) -> Vec<(C, u32)> {
    let mut used = vec![false; raw.len()];
    let mut out = Vec::new();
    for i in 0..raw.len() {
        if used[i] {
            continue;
        }
        let mut members = vec![raw[i]];
        used[i] = true;
        for j in i + 1..raw.len() {
            if !used[j] && (raw[j] - raw[i]).norm() < 1e-6 * (1.0 + raw[i].norm()) {
                members.push(raw[j]);
                used[j] = true;
            }
        }
        let centroid = members.iter().sum::<C>() / members.len() as f64;
        out.push((centroid, members.len() as u32));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn linear_root() {
        let r = roots(&[c(1.0, 0.0), c(-3.0, 0.0)]).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].0 - c(3.0, 0.0)).norm() < 1e-12);
        assert_eq!(r[0].1, 1);
    }

    #[test]
    fn double_root() {
        // (z+1)^2 = z^2 + 2z + 1
        let r = roots(&[c(1.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0].0 - c(-1.0, 0.0)).norm() < 1e-6);
        assert_eq!(r[0].1, 2);
    }

    #[test]
    fn origin_and_complex_roots() {
        // z^3 - i z^2 = z^2 (z - i)
        let r = roots(&[c(1.0, 0.0), c(0.0, -1.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let at0 = r.iter().find(|(z, _)| z.norm() < 1e-12).unwrap();
        assert_eq!(at0.1, 2);
        let ati = r.iter().find(|(z, _)| (z - c(0.0, 1.0)).norm() < 1e-9).unwrap();
        assert_eq!(ati.1, 1);
    }

    #[test]
    fn residuals_small_on_random_quartics() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let coeffs: Vec<C> =
                (0..5).map(|_| c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))).collect();
            let rs = roots(&coeffs).unwrap();
            let total: u32 = rs.iter().map(|(_, m)| m).sum();
            assert_eq!(total as usize, 4);
            for (z, _) in rs {
                assert!(eval(&coeffs, z).norm() < 1e-8 * (1.0 + z.norm()).powi(4));
            }
        }
    }
}
