//! Upper-gradient verification and synthesis.
//!
//! A nonnegative `rho` is an upper gradient for `f` along a family when
//! `|f(x) - f(y)| <= integral of rho` over every path (and subpath) joining
//! `x` and `y`. Verification samples subpaths at dyadic split points;
//! synthesis minimizes the `L^p` norm of a grid density subject to those
//! endpoint constraints, reusing the convex engine. Hajlasz-type pointwise
//! gradients and the weak-gradient repair construction live here as well.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::GroundGrid;
use crate::metric::{self, MetricDescriptor};
use crate::modulus::incidence_rows;
use crate::path::{subpath, path_integral, ParametrizedPath, PathMeasure, Polyline};
use crate::solver::{self, PathProgram, Solution};

/// Dyadic split points per path used for subpath sampling.
pub const DYADIC_SPLITS: usize = 8;

/// Seed for the pair subsample used when a point set is too large to
/// enumerate all pairs.
const PAIR_SUBSAMPLE_SEED: u64 = 0x6d75_736f_6221;
/// All pairs are enumerated up to this many points.
const PAIR_ENUMERATION_LIMIT: usize = 2000;

/// One failed check: the inequality `lhs <= rhs + tol` did not hold between
/// the two recorded points.
#[derive(Clone, Debug)]
pub struct Violation {
    pub path: usize,
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; negative beyond tolerance means violated.
    pub slack: f64,
}

#[derive(Clone, Debug, Default)]
pub struct GradientReport {
    pub violations: Vec<Violation>,
    /// Largest positive `(lhs - rhs) / max(lhs, rhs)` over all checks.
    pub max_relative_violation: f64,
    pub checked_count: usize,
    /// Paths (or pairs) where evaluation failed; these are not violations.
    pub unverifiable: Vec<usize>,
}

impl GradientReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn record(&mut self, path: usize, from: &[f64], to: &[f64], lhs: f64, rhs: f64, tol: f64) {
        self.checked_count += 1;
        let slack = rhs - lhs;
        let rel = (lhs - rhs) / lhs.abs().max(rhs.abs()).max(1e-30);
        self.max_relative_violation = self.max_relative_violation.max(rel.max(0.0));
        if slack < -tol {
            self.violations.push(Violation {
                path,
                from: from.to_vec(),
                to: to.to_vec(),
                lhs,
                rhs,
                slack,
            });
        }
    }
}

/// Check the upper-gradient inequality for `rho` against `f` over every path
/// of the family and all subpaths spanned by 8 dyadic split points
/// (endpoints included). Evaluation failures mark a path unverifiable
/// rather than violated.
pub fn verify_upper_gradient(
    f: &Field,
    rho: &Field,
    family: &[Polyline],
    measure: &PathMeasure,
    tol_check: f64,
) -> GradientReport {
    let mut report = GradientReport::default();
    'paths: for (pid, path) in family.iter().enumerate() {
        let splits: Vec<f64> = (0..=DYADIC_SPLITS)
            .map(|i| i as f64 / DYADIC_SPLITS as f64)
            .collect();
        let points: Vec<Vec<f64>> = splits.iter().map(|t| path.point_at(*t)).collect();
        let mut f_values = Vec::with_capacity(points.len());
        for pt in &points {
            match f.eval_checked(pt) {
                Ok(v) => f_values.push(v),
                Err(_) => {
                    report.unverifiable.push(pid);
                    continue 'paths;
                }
            }
        }
        // integrals over the dyadic pieces; prefix sums give every spanned
        // subpath
        let mut piece_integrals = Vec::with_capacity(DYADIC_SPLITS);
        for w in splits.windows(2) {
            let piece = match subpath(path, w[0], w[1]) {
                Ok(p) => p,
                Err(_) => {
                    report.unverifiable.push(pid);
                    continue 'paths;
                }
            };
            match path_integral(rho, &piece, measure) {
                Ok(v) => piece_integrals.push(v),
                Err(_) => {
                    report.unverifiable.push(pid);
                    continue 'paths;
                }
            }
        }
        let mut prefix = vec![0.0];
        for v in &piece_integrals {
            prefix.push(prefix.last().unwrap() + v);
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let lhs = (f_values[i] - f_values[j]).abs();
                let rhs = prefix[j] - prefix[i];
                report.record(pid, &points[i], &points[j], lhs, rhs, tol_check);
            }
        }
    }
    report
}

/// Minimize the `L^p(m)` norm of a grid density subject to the endpoint
/// constraints `integral over path >= |f(end) - f(start)|`, with rows for
/// each path and each of its 8 dyadic pieces. The returned solution carries
/// the minimizing density and `value = ||rho||_p^p`.
pub fn minimal_upper_gradient(
    f: &Field,
    family: &[Polyline],
    grid: &GroundGrid,
    measure: &PathMeasure,
    p: f64,
    tol_feas: f64,
    tol_gap: f64,
) -> Result<Solution> {
    let mut subpaths: Vec<Polyline> = Vec::with_capacity(family.len() * (DYADIC_SPLITS + 1));
    let mut b = Vec::with_capacity(subpaths.capacity());
    for path in family {
        let mut push = |piece: Polyline| -> Result<()> {
            let lhs =
                (f.eval_checked(piece.start())? - f.eval_checked(piece.end())?).abs();
            b.push(lhs);
            subpaths.push(piece);
            Ok(())
        };
        push(path.clone())?;
        for i in 0..DYADIC_SPLITS {
            push(subpath(path, i as f64 / DYADIC_SPLITS as f64, (i + 1) as f64 / DYADIC_SPLITS as f64)?)?;
        }
    }
    let rows = incidence_rows(&subpaths, grid, measure)?;
    let prog = PathProgram::new(grid.len(), rows, b, grid.measures(), p)?;
    solver::solve(&prog, tol_feas, tol_gap)
}

/// Repair a weak gradient into a strict one:
/// `rho_eps = rho + eps * g / (1 + ||g||_p)`, which dominates `rho`
/// pointwise while moving it by less than `eps` in `L^p(m)`.
pub fn repair_weak_gradient(
    rho: &[f64],
    witness_g: &[f64],
    eps: f64,
    p: f64,
    m: &[f64],
) -> Result<Vec<f64>> {
    if rho.len() != witness_g.len() || rho.len() != m.len() {
        return Err(Error::DimensionMismatch { expected: rho.len(), got: witness_g.len().min(m.len()) });
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let norm_g = lp_norm_weighted(witness_g, m, p);
    if !norm_g.is_finite() {
        return Err(Error::Evaluation(format!("witness norm is {norm_g}")));
    }
    let factor = eps / (1.0 + norm_g);
    let repaired: Vec<f64> = rho.iter().zip(witness_g).map(|(r, g)| r + factor * g).collect();
    debug_assert!(repaired.iter().zip(rho).all(|(a, b)| a >= b));
    Ok(repaired)
}

pub(crate) fn lp_norm_weighted(v: &[f64], m: &[f64], p: f64) -> f64 {
    v.iter()
        .zip(m)
        .map(|(x, w)| w * x.abs().powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Absolute-continuity check along a mass-parametrized path: the hypothesis
/// `|f(gamma(s)) - f(gamma(t))| <= integral of rho over [s, t]` on random
/// pairs, plus the quantitative conclusion that over disjoint mass intervals
/// of small total length the variation of `f` is controlled by the integral
/// of `rho` over their union.
pub fn acc_check(
    f: &Field,
    ppath: &ParametrizedPath,
    rho: &Field,
    n_pairs: usize,
    seed: u64,
    tol_check: f64,
) -> Result<GradientReport> {
    let mut report = GradientReport::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = ppath.h();
    let base = ppath.base();
    let measure = ppath.measure();

    let pair_check = |s: f64, t: f64| -> Result<(f64, f64, Vec<f64>, Vec<f64>)> {
        let ts = ppath.param_of_mass(s)?;
        let tt = ppath.param_of_mass(t)?;
        let from = base.point_at(ts);
        let to = base.point_at(tt);
        let lhs = (f.eval_checked(&from)? - f.eval_checked(&to)?).abs();
        let rhs = if tt - ts > 1e-12 {
            path_integral(rho, &subpath(base, ts, tt)?, measure)?
        } else {
            0.0
        };
        Ok((lhs, rhs, from, to))
    };

    for _ in 0..n_pairs {
        let mut s = rng.random_range(0.0..h);
        let mut t = rng.random_range(0.0..h);
        if s > t {
            std::mem::swap(&mut s, &mut t);
        }
        if t - s < 1e-9 * h {
            continue;
        }
        let (lhs, rhs, from, to) = pair_check(s, t)?;
        report.record(0, &from, &to, lhs, rhs, tol_check);
    }

    // conclusion: 5 disjoint intervals of total mass delta, one per block
    for delta in [h / 10.0, h / 100.0] {
        let blocks = 5;
        let block = h / blocks as f64;
        let ilen = delta / blocks as f64;
        let mut sum_df = 0.0;
        let mut sum_int = 0.0;
        let mut first = Vec::new();
        let mut last = Vec::new();
        for i in 0..blocks {
            let start = i as f64 * block + rng.random_range(0.0..(block - ilen));
            let (lhs, rhs, from, to) = pair_check(start, start + ilen)?;
            sum_df += lhs;
            sum_int += rhs;
            if i == 0 {
                first = from;
            }
            if i == blocks - 1 {
                last = to;
            }
        }
        report.record(0, &first, &last, sum_df, sum_int, tol_check);
    }
    Ok(report)
}

/// Pointwise Hajlasz-gradient check:
/// `|f(x) - f(y)| <= d(x, y)^beta (g(x) + g(y))` on the given pairs, with
/// absolute tolerance 1e-12.
pub fn hajlasz_verify(
    f: &Field,
    g: &Field,
    beta: f64,
    pairs: &[(Vec<f64>, Vec<f64>)],
    metric: &MetricDescriptor,
) -> Result<GradientReport> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidInput(format!("beta must lie in (0, 1], got {beta}")));
    }
    let mut report = GradientReport::default();
    for (idx, (x, y)) in pairs.iter().enumerate() {
        let d = metric::distance(x, y, metric)?;
        let evals = (|| -> Result<(f64, f64, f64, f64)> {
            Ok((f.eval_checked(x)?, f.eval_checked(y)?, g.eval_checked(x)?, g.eval_checked(y)?))
        })();
        match evals {
            Ok((fx, fy, gx, gy)) => {
                let lhs = (fx - fy).abs();
                let rhs = d.powf(beta) * (gx + gy);
                report.record(idx, x, y, lhs, rhs, 1e-12);
            }
            Err(_) => report.unverifiable.push(idx),
        }
    }
    Ok(report)
}

/// Minimal Hajlasz gradient on a finite point set: minimize
/// `sum_i m_i g_i^p` subject to `g_i + g_j >= |f_i - f_j| / d(x_i, x_j)^beta`
/// over point pairs. All pairs are enumerated up to 2000 points; larger sets
/// use a seeded random subsample.
#[allow(clippy::too_many_arguments)]
pub fn hajlasz_minimal(
    f: &Field,
    points: &[Vec<f64>],
    beta: f64,
    p: f64,
    m_weights: &[f64],
    metric: &MetricDescriptor,
    tol_feas: f64,
    tol_gap: f64,
) -> Result<Solution> {
    let values: Vec<f64> = points
        .iter()
        .map(|x| f.eval_checked(x))
        .collect::<Result<_>>()?;
    hajlasz_minimal_values(&values, points, beta, p, m_weights, metric, tol_feas, tol_gap)
}

/// [`hajlasz_minimal`] over precomputed point values. Coincident points
/// carrying different values make the program infeasible.
#[allow(clippy::too_many_arguments)]
pub fn hajlasz_minimal_values(
    values: &[f64],
    points: &[Vec<f64>],
    beta: f64,
    p: f64,
    m_weights: &[f64],
    metric: &MetricDescriptor,
    tol_feas: f64,
    tol_gap: f64,
) -> Result<Solution> {
    if points.len() != m_weights.len() || points.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: points.len(), got: m_weights.len() });
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidInput(format!("beta must lie in (0, 1], got {beta}")));
    }
    if m_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::InvalidInput("point weights must be positive".into()));
    }
    let n = points.len();
    let mut rows = Vec::new();
    let mut b = Vec::new();
    let mut add_pair = |i: usize, j: usize| -> Result<()> {
        let d = metric::distance(&points[i], &points[j], metric)?;
        let df = (values[i] - values[j]).abs();
        if d <= 0.0 {
            return if df > 0.0 { Err(Error::CoincidentPoints { i, j }) } else { Ok(()) };
        }
        if df > 0.0 {
            rows.push(vec![(i, 1.0), (j, 1.0)]);
            b.push(df / d.powf(beta));
        }
        Ok(())
    };
    if n <= PAIR_ENUMERATION_LIMIT {
        for i in 0..n {
            for j in (i + 1)..n {
                add_pair(i, j)?;
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(PAIR_SUBSAMPLE_SEED);
        let samples = PAIR_ENUMERATION_LIMIT * PAIR_ENUMERATION_LIMIT / 2;
        for _ in 0..samples {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j {
                add_pair(i.min(j), i.max(j))?;
            }
        }
    }
    let prog = PathProgram::new(n, rows, b, m_weights.to_vec(), p)?;
    solver::solve(&prog, tol_feas, tol_gap)
}
