//! Composite midpoint quadrature with dyadic refinement.
//!
//! Midpoint rules never sample interval endpoints, which keeps integrands
//! with isolated endpoint singularities (weights like |x|^-lambda) usable.

use crate::error::{Error, Result};

/// Cap on subintervals for 1-D refinement.
pub const MAX_SUBDIVISIONS: u32 = 1 << 20;

/// Integrate `f` over `[a, b]`, refining dyadically until three successive
/// composite midpoint estimates agree to `rel_tol` (with `abs_tol` as an
/// absolute floor for near-zero integrals).
///
/// Two-level agreement is not enough: a kink whose offset from its cell's
/// left edge survives a refinement produces bit-identical errors on both
/// levels.
pub fn adaptive_midpoint<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidInput(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let len = b - a;
    let mut n: u32 = 4;
    let mut prev2 = midpoint_sum(&mut f, a, len, n)?;
    let mut prev = midpoint_sum(&mut f, a, len, n * 2)?;
    n *= 2;
    loop {
        n *= 2;
        let cur = midpoint_sum(&mut f, a, len, n)?;
        let tol = rel_tol * cur.abs() + abs_tol;
        if (cur - prev).abs() <= tol && (prev - prev2).abs() <= tol {
            return Ok(cur);
        }
        if n >= MAX_SUBDIVISIONS {
            return Err(Error::QuadratureDivergence(format!(
                "no convergence on [{a}, {b}] after {n} subintervals (last {cur:.6e})"
            )));
        }
        prev2 = prev;
        prev = cur;
    }
}

fn midpoint_sum<F: FnMut(f64) -> Result<f64>>(
    f: &mut F,
    a: f64,
    len: f64,
    n: u32,
) -> Result<f64> {
    let h = len / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let t = a + (i as f64 + 0.5) * h;
        let v = f(t)?;
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("integrand not finite at {t}")));
        }
        acc += v;
    }
    Ok(acc * h)
}

/// Tensor midpoint quadrature of `f` over an axis-aligned box, refined
/// dyadically per axis until successive estimates agree to `rel_tol`.
/// `max_level` caps the per-axis resolution at `2^max_level` cells.
pub fn tensor_midpoint<F: FnMut(&[f64]) -> Result<f64>>(
    mut f: F,
    lo: &[f64],
    hi: &[f64],
    rel_tol: f64,
    max_level: u32,
) -> Result<f64> {
    let dim = lo.len();
    if dim == 0 || hi.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: hi.len() });
    }
    let mut prev2 = tensor_sum(&mut f, lo, hi, 2)?;
    let mut prev = tensor_sum(&mut f, lo, hi, 4)?;
    let mut level = 2u32;
    loop {
        level += 1;
        let cur = tensor_sum(&mut f, lo, hi, 1 << level)?;
        let tol = rel_tol * cur.abs() + f64::MIN_POSITIVE;
        if (cur - prev).abs() <= tol && (prev - prev2).abs() <= tol {
            return Ok(cur);
        }
        if level >= max_level {
            return Err(Error::QuadratureDivergence(format!(
                "tensor quadrature over {lo:?}..{hi:?} stalled at level {level} (last {cur:.6e})"
            )));
        }
        prev2 = prev;
        prev = cur;
    }
}

fn tensor_sum<F: FnMut(&[f64]) -> Result<f64>>(
    f: &mut F,
    lo: &[f64],
    hi: &[f64],
    n: u32,
) -> Result<f64> {
    let dim = lo.len();
    let steps: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| (b - a) / n as f64).collect();
    let cell_vol: f64 = steps.iter().product();
    let mut idx = vec![0u32; dim];
    let mut x = vec![0.0; dim];
    let mut acc = 0.0;
    loop {
        for d in 0..dim {
            x[d] = lo[d] + (idx[d] as f64 + 0.5) * steps[d];
        }
        let v = f(&x)?;
        if !v.is_finite() {
            return Err(Error::Evaluation(format!("integrand not finite at {x:?}")));
        }
        acc += v;
        // odometer increment
        let mut d = 0;
        loop {
            if d == dim {
                return Ok(acc * cell_vol);
            }
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}
