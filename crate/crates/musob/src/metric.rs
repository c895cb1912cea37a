//! Metrics on R^n, including the anisotropic (parabolic) dilation family.
//!
//! An anisotropic metric is built from a diagonal dilation group
//! `T_lambda x = (lambda^a1 x_1, ..., lambda^an x_n)` with exponents
//! `a_i >= 1`. For `x != 0` the map `lambda -> ||T_lambda x||` is strictly
//! increasing, so there is a unique gauge value `rho(x)` with
//! `||T_{1/rho(x)} x|| = 1`, and `d(x, y) = rho(x - y)` is a translation
//! invariant metric satisfying `d(T_lambda x, T_lambda y) = lambda d(x, y)`.
//!
//! With exponents `(1, 2)` and the max norm this is the parabolic distance
//! `d((x, y), (x', y')) = max(|x - x'|, |y - y'|^(1/2))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm used on the unit-sphere side of the gauge equation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseNorm {
    Max,
    Euclidean,
    PNorm(f64),
}

impl BaseNorm {
    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            BaseNorm::Max => v.iter().fold(0.0, |acc, x| acc.max(x.abs())),
            BaseNorm::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
            BaseNorm::PNorm(p) => v.iter().map(|x| x.abs().powf(*p)).sum::<f64>().powf(1.0 / p),
        }
    }

    fn validate(&self) -> Result<()> {
        if let BaseNorm::PNorm(p) = self {
            if !p.is_finite() || *p < 1.0 {
                return Err(Error::InvalidInput(format!("p-norm exponent must be >= 1, got {p}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MetricDescriptor {
    Euclidean,
    Anisotropic { exponents: Vec<f64>, base_norm: BaseNorm },
}

impl MetricDescriptor {
    /// The parabolic-plane metric: exponents `(1, 2)`, max norm.
    pub fn parabolic_plane() -> Self {
        MetricDescriptor::Anisotropic { exponents: vec![1.0, 2.0], base_norm: BaseNorm::Max }
    }

    pub fn validate(&self, dimension: usize) -> Result<()> {
        match self {
            MetricDescriptor::Euclidean => Ok(()),
            MetricDescriptor::Anisotropic { exponents, base_norm } => {
                if exponents.len() != dimension {
                    return Err(Error::DimensionMismatch {
                        expected: dimension,
                        got: exponents.len(),
                    });
                }
                if exponents.iter().any(|a| !a.is_finite() || *a < 1.0) {
                    return Err(Error::InvalidInput(
                        "anisotropic exponents must be finite and >= 1".into(),
                    ));
                }
                base_norm.validate()
            }
        }
    }
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite coordinates: {x:?}")));
    }
    Ok(())
}

/// `||T_lambda x||` for the dilation group of `exponents`.
fn dilated_norm(x: &[f64], exponents: &[f64], base_norm: &BaseNorm, lambda: f64) -> f64 {
    let scaled: Vec<f64> = x
        .iter()
        .zip(exponents)
        .map(|(xi, ai)| lambda.powf(*ai) * xi)
        .collect();
    base_norm.eval(&scaled)
}

const RHO_TOL: f64 = 1e-12;
const BRACKET_LO: f64 = 1.0 / (1u64 << 40) as f64;
const BRACKET_HI: f64 = (1u64 << 40) as f64;
const MAX_BRACKET_EXPANSIONS: usize = 200;

/// The gauge `rho(x)`: the unique `r > 0` with `||T_{1/r} x|| = 1`, and 0 at
/// the origin. For the max norm this is the closed form
/// `max_i |x_i|^(1/a_i)`; otherwise it is found by bisection on the strictly
/// monotone dilated norm, to absolute tolerance 1e-12.
pub fn rho(x: &[f64], metric: &MetricDescriptor) -> Result<f64> {
    check_finite(x)?;
    let (exponents, base_norm) = match metric {
        MetricDescriptor::Anisotropic { exponents, base_norm } => (exponents, base_norm),
        MetricDescriptor::Euclidean => {
            return Err(Error::InvalidInput("rho is defined for anisotropic metrics only".into()))
        }
    };
    metric.validate(x.len())?;
    if x.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    if matches!(base_norm, BaseNorm::Max) {
        return Ok(x
            .iter()
            .zip(exponents)
            .map(|(xi, ai)| xi.abs().powf(1.0 / ai))
            .fold(0.0, f64::max));
    }

    // g(r) = ||T_{1/r} x|| is strictly decreasing in r; bracket the root of
    // g(r) = 1 and bisect.
    let g = |r: f64| dilated_norm(x, exponents, base_norm, 1.0 / r);
    let (mut lo, mut hi) = (BRACKET_LO, BRACKET_HI);
    let mut expansions = 0;
    while g(lo) < 1.0 {
        lo = lo * lo;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS {
            return Err(Error::InvalidInput(format!("could not bracket rho for {x:?}")));
        }
    }
    while g(hi) > 1.0 {
        hi = hi * hi;
        expansions += 1;
        if expansions > MAX_BRACKET_EXPANSIONS {
            return Err(Error::InvalidInput(format!("could not bracket rho for {x:?}")));
        }
    }
    while hi - lo > RHO_TOL {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Distance under `metric`; Euclidean norm of the difference for the
/// Euclidean kind, `rho(x - y)` for the anisotropic kind.
pub fn distance(x: &[f64], y: &[f64], metric: &MetricDescriptor) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    check_finite(x)?;
    check_finite(y)?;
    let diff: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    match metric {
        MetricDescriptor::Euclidean => Ok(diff.iter().map(|v| v * v).sum::<f64>().sqrt()),
        MetricDescriptor::Anisotropic { .. } => rho(&diff, metric),
    }
}

/// Largest pairwise distance of a point set. Exact maximum over all pairs.
pub fn diameter(points: &[Vec<f64>], metric: &MetricDescriptor) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidInput("diameter of an empty point set".into()));
    }
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            best = best.max(distance(&points[i], &points[j], metric)?);
        }
    }
    Ok(best)
}

/// Apply the dilation `T_lambda` of an anisotropic metric to a point.
pub fn dilate(x: &[f64], metric: &MetricDescriptor, lambda: f64) -> Result<Vec<f64>> {
    match metric {
        MetricDescriptor::Anisotropic { exponents, .. } => Ok(x
            .iter()
            .zip(exponents)
            .map(|(xi, ai)| lambda.powf(*ai) * xi)
            .collect()),
        MetricDescriptor::Euclidean => Ok(x.iter().map(|xi| lambda * xi).collect()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn parabolic() -> MetricDescriptor {
        MetricDescriptor::parabolic_plane()
    }

    /// Bisection evaluation forced even where a closed form exists, used as
    /// the independent oracle for the max-norm fast path.
    fn rho_bisect_oracle(x: &[f64], exponents: &[f64], base_norm: &BaseNorm) -> f64 {
        if x.iter().all(|v| *v == 0.0) {
            return 0.0;
        }
        let g = |r: f64| dilated_norm(x, exponents, base_norm, 1.0 / r);
        let (mut lo, mut hi) = (BRACKET_LO, BRACKET_HI);
        while g(lo) < 1.0 {
            lo *= lo;
        }
        while g(hi) > 1.0 {
            hi *= hi;
        }
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if g(mid) >= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn rho_closed_form_matches_bisection() {
        // max-norm closed form vs the bisection oracle
        let x = [3.0, 4.0];
        let r = rho(&x, &parabolic()).unwrap();
        assert!((r - 3.0).abs() < 1e-12, "rho = {r}");
        let oracle = rho_bisect_oracle(&x, &[1.0, 2.0], &BaseNorm::Max);
        assert!((r - oracle).abs() < 1e-12);
    }

    #[test]
    fn rho_at_origin_is_zero() {
        assert_eq!(rho(&[0.0, 0.0], &parabolic()).unwrap(), 0.0);
    }

    #[test]
    fn rho_is_one_on_the_base_unit_sphere() {
        // d(x, y) = 1 iff |x - y| = 1 in the base norm
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let v = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let n = BaseNorm::Max.eval(&v);
            if n < 1e-6 {
                continue;
            }
            let unit = [v[0] / n, v[1] / n];
            let r = rho(&unit, &parabolic()).unwrap();
            assert!((r - 1.0).abs() < 1e-10, "rho({unit:?}) = {r}");
        }
        // same with the Euclidean base norm, exercising the bisection path
        let metric = MetricDescriptor::Anisotropic {
            exponents: vec![1.0, 2.0],
            base_norm: BaseNorm::Euclidean,
        };
        for _ in 0..100 {
            let v = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let n = BaseNorm::Euclidean.eval(&v);
            if n < 1e-6 {
                continue;
            }
            let unit = [v[0] / n, v[1] / n];
            let r = rho(&unit, &metric).unwrap();
            assert!((r - 1.0).abs() < 1e-10, "rho({unit:?}) = {r}");
        }
    }

    #[test]
    fn rho_homogeneity_under_dilation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for metric in [
            parabolic(),
            MetricDescriptor::Anisotropic {
                exponents: vec![1.0, 2.0],
                base_norm: BaseNorm::Euclidean,
            },
            MetricDescriptor::Anisotropic {
                exponents: vec![1.5, 3.0],
                base_norm: BaseNorm::PNorm(3.0),
            },
        ] {
            for _ in 0..50 {
                let x = vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
                let lambda = rng.random_range(0.125..8.0);
                let r = rho(&x, &metric).unwrap();
                let rd = rho(&dilate(&x, &metric, lambda).unwrap(), &metric).unwrap();
                assert!(
                    (rd - lambda * r).abs() <= 1e-10 * (1.0 + lambda * r),
                    "homogeneity broke: {rd} vs {}",
                    lambda * r
                );
            }
        }
    }

    #[test]
    fn dilated_norm_is_strictly_increasing() {
        let x = [0.3, -2.0];
        let norms = [BaseNorm::Max, BaseNorm::Euclidean, BaseNorm::PNorm(1.5)];
        for base in &norms {
            let mut prev = 0.0;
            for i in 1..=64 {
                let lambda = i as f64 * 0.25;
                let v = dilated_norm(&x, &[1.0, 2.0], base, lambda);
                assert!(v > prev, "not increasing at lambda = {lambda}");
                prev = v;
            }
        }
    }

    #[test]
    fn parabolic_distance_examples() {
        let m = parabolic();
        let d = distance(&[0.0, 0.0], &[1.0, 4.0], &m).unwrap();
        assert!((d - 2.0).abs() < 1e-12); // max(1, sqrt(4))
        let d = distance(&[1.0, 2.0], &[1.0, 2.0], &m).unwrap();
        assert_eq!(d, 0.0);
        let d = distance(&[0.0, 0.0], &[0.25, 0.25], &m).unwrap();
        assert!((d - 0.5).abs() < 1e-12); // sqrt(0.25) dominates
        let oracle = rho_bisect_oracle(&[0.25, 0.25], &[1.0, 2.0], &BaseNorm::Max);
        assert!((d - oracle).abs() < 1e-12);
    }

    #[test]
    fn distance_scales_with_dilation() {
        let m = parabolic();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let y = vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let lambda = rng.random_range(0.125..8.0);
            let d = distance(&x, &y, &m).unwrap();
            let dd = distance(
                &dilate(&x, &m, lambda).unwrap(),
                &dilate(&y, &m, lambda).unwrap(),
                &m,
            )
            .unwrap();
            assert!((dd - lambda * d).abs() <= 1e-10 * (1.0 + lambda * d));
        }
    }

    #[test]
    fn triangle_inequality_on_random_triples() {
        let metrics = [
            MetricDescriptor::Euclidean,
            parabolic(),
            MetricDescriptor::Anisotropic {
                exponents: vec![1.0, 2.0],
                base_norm: BaseNorm::Euclidean,
            },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for metric in &metrics {
            for _ in 0..1000 {
                let p: Vec<Vec<f64>> = (0..3)
                    .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
                    .collect();
                let dab = distance(&p[0], &p[1], metric).unwrap();
                let dbc = distance(&p[1], &p[2], metric).unwrap();
                let dac = distance(&p[0], &p[2], metric).unwrap();
                assert!(dab + dbc - dac >= -1e-12, "triangle slack violated for {metric:?}");
                // symmetry is exact by construction
                assert_eq!(dab, distance(&p[1], &p[0], metric).unwrap());
            }
        }
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(diameter(&[vec![1.0, 1.0]], &MetricDescriptor::Euclidean).unwrap(), 0.0);
        let d = diameter(
            &[vec![0.0, 0.0], vec![1.0, 0.0]],
            &MetricDescriptor::Euclidean,
        )
        .unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        // slope-1 segment endpoints under the parabolic metric
        let d = diameter(&[vec![0.0, 0.0], vec![2.0, 2.0]], &parabolic()).unwrap();
        assert!((d - 2.0).abs() < 1e-12); // max(2, sqrt(2))
        assert!(diameter(&[], &MetricDescriptor::Euclidean).is_err());
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(rho(&[f64::NAN, 0.0], &parabolic()).is_err());
        assert!(rho(&[1.0, 1.0], &MetricDescriptor::Euclidean).is_err());
        assert!(distance(&[0.0], &[0.0, 0.0], &MetricDescriptor::Euclidean).is_err());
        let bad = MetricDescriptor::Anisotropic {
            exponents: vec![0.5, 2.0],
            base_norm: BaseNorm::Max,
        };
        assert!(bad.validate(2).is_err());
    }
}
