//! Newton-type norms on the grid, the sampled maximal function, and the
//! Lipschitz truncation pipeline.
//!
//! The norm of a function is its `L^p(m)` norm plus the `L^p(m)` norm of its
//! minimal upper gradient over a working path family. Truncation thresholds
//! the maximal function of the gradient, keeps the function on the regular
//! set, and extends it across the exceptional set as a Holder function via
//! the inf-convolution formula.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::gradient::{lp_norm_weighted, minimal_upper_gradient};
use crate::grid::GroundGrid;
use crate::metric::{self, MetricDescriptor};
use crate::path::{PathMeasure, Polyline};
use crate::quad;
use crate::solver::Solution;

/// Cell values of a function on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: &GroundGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch { expected: grid.len(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("grid function values must be finite".into()));
        }
        Ok(GridFunction { values })
    }

    /// Sample a field at the cell centers.
    pub fn from_field(grid: &GroundGrid, f: &Field) -> Result<Self> {
        let values = grid
            .cells()
            .iter()
            .map(|c| f.eval_checked(&c.center))
            .collect::<Result<Vec<_>>>()?;
        Ok(GridFunction { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Piecewise-constant field: the value of the nearest cell center
    /// (Euclidean). Lets tabulated functions feed path-endpoint evaluations.
    pub fn as_field(&self, grid: &GroundGrid) -> Field {
        let centers: Vec<Vec<f64>> = grid.cells().iter().map(|c| c.center.clone()).collect();
        let values = self.values.clone();
        Field::from_fn("grid-function", move |x| {
            let mut best = (f64::INFINITY, 0usize);
            for (i, c) in centers.iter().enumerate() {
                let d: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                if d < best.0 {
                    best = (d, i);
                }
            }
            values[best.1]
        })
    }
}

/// `L^p(m)` norm of a grid function.
pub fn lp_norm(f: &GridFunction, grid: &GroundGrid, p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidInput(format!("p must be >= 1, got {p}")));
    }
    if f.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: f.len() });
    }
    Ok(lp_norm_weighted(f.values(), &grid.measures(), p))
}

/// A Newton norm evaluation: `||f||_p + (inf ||rho||_p^p)^(1/p)` over the
/// working family.
#[derive(Clone, Debug)]
pub struct NewtonNorm {
    pub value: f64,
    pub lp_term: f64,
    pub gradient_term: f64,
    pub solution: Solution,
}

/// Newton norm of a field over a grid and path family: the `L^p(m)` norm of
/// its cell samples plus the norm of the minimal upper gradient.
pub fn newton_norm(
    f: &Field,
    family: &[Polyline],
    grid: &GroundGrid,
    measure: &PathMeasure,
    p: f64,
    tol_feas: f64,
    tol_gap: f64,
) -> Result<NewtonNorm> {
    let samples = GridFunction::from_field(grid, f)?;
    let lp_term = lp_norm(&samples, grid, p)?;
    let solution = minimal_upper_gradient(f, family, grid, measure, p, tol_feas, tol_gap)?;
    let gradient_term = solution.value.powf(1.0 / p);
    Ok(NewtonNorm { value: lp_term + gradient_term, lp_term, gradient_term, solution })
}

#[derive(Clone, Debug)]
pub struct LatticeReport {
    pub norm_f: f64,
    pub norm_g: f64,
    pub norm_abs_f: f64,
    pub norm_min: f64,
    pub norm_max: f64,
    /// `norm_f + norm_g` plus tolerance: the bound all three must satisfy.
    pub bound: f64,
    pub ok: bool,
}

/// Lattice stability: `|f|`, `min(f, g)` and `max(f, g)` all have finite
/// Newton norms bounded by `norm(f) + norm(g)` (within solver tolerance).
#[allow(clippy::too_many_arguments)]
pub fn lattice_check(
    f: &Field,
    g: &Field,
    family: &[Polyline],
    grid: &GroundGrid,
    measure: &PathMeasure,
    p: f64,
    tol_feas: f64,
    tol_gap: f64,
) -> Result<LatticeReport> {
    let norm = |h: &Field| -> Result<f64> {
        Ok(newton_norm(h, family, grid, measure, p, tol_feas, tol_gap)?.value)
    };
    let norm_f = norm(f)?;
    let norm_g = norm(g)?;
    let (fa, fb) = (f.clone(), g.clone());
    let abs_f = {
        let f = f.clone();
        Field::from_fn("|f|", move |x| f.eval(x).abs())
    };
    let min_fg = {
        let (f, g) = (fa.clone(), fb.clone());
        Field::from_fn("min(f,g)", move |x| f.eval(x).min(g.eval(x)))
    };
    let max_fg = Field::from_fn("max(f,g)", move |x| fa.eval(x).max(fb.eval(x)));
    let norm_abs_f = norm(&abs_f)?;
    let norm_min = norm(&min_fg)?;
    let norm_max = norm(&max_fg)?;
    let bound = norm_f + norm_g + 1e-6 * (1.0 + norm_f + norm_g);
    let ok = [norm_abs_f, norm_min, norm_max]
        .iter()
        .all(|n| n.is_finite() && *n <= bound);
    Ok(LatticeReport { norm_f, norm_g, norm_abs_f, norm_min, norm_max, bound, ok })
}

#[derive(Clone, Debug)]
pub struct WeightedCharacterizationReport {
    /// Newton norm under `d(mu) = omega ds`, `dm = omega^p dx`.
    pub newton: f64,
    /// `||omega f||_{L^p(dx)} + ||f'||_{L^p(dx)}`.
    pub classical: f64,
    pub ratio: f64,
    /// Relative weighted-`L^p` distance between the minimal gradient and
    /// `|f'| / omega`.
    pub gradient_discrepancy: f64,
    pub ok: bool,
}

/// On a 1-D grid whose cell measures integrate `omega^p dx`, compare the
/// Newton norm of `f` under the weighted path measure against the classical
/// form `||omega f||_p + ||f'||_p` (Lebesgue), and check that the minimal
/// gradient tracks `|f'| / omega`.
pub fn weighted_characterization_check(
    f: &Field,
    omega: &Field,
    p: f64,
    grid1d: &GroundGrid,
    tol: f64,
) -> Result<WeightedCharacterizationReport> {
    if grid1d.dimension() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: grid1d.dimension() });
    }
    let lo = grid1d
        .cells()
        .iter()
        .map(|c| c.lo(0))
        .fold(f64::INFINITY, f64::min);
    let hi = grid1d
        .cells()
        .iter()
        .map(|c| c.hi(0))
        .fold(f64::NEG_INFINITY, f64::max);
    let levels = (grid1d.len() as f64).log2().floor().min(10.0) as u32;
    let family = crate::path::dyadic_interval_family(lo, hi, levels)?;
    let measure = PathMeasure::weighted(omega.clone());

    let nn = newton_norm(f, &family, grid1d, &measure, p, 1e-9, 1e-8)?;

    let fd = derivative_1d(f);
    let classical_lp = quad::adaptive_midpoint(
        |x| {
            let xp = [x];
            Ok((omega.eval_checked(&xp)? * f.eval_checked(&xp)?).abs().powf(p))
        },
        lo,
        hi,
        1e-10,
        1e-300,
    )?
    .powf(1.0 / p);
    let classical_grad = quad::adaptive_midpoint(
        |x| Ok(fd.eval_checked(&[x])?.abs().powf(p)),
        lo,
        hi,
        1e-10,
        1e-300,
    )?
    .powf(1.0 / p);
    let classical = classical_lp + classical_grad;

    // minimal gradient against |f'| / omega, in the weighted norm
    let target: Vec<f64> = grid1d
        .cells()
        .iter()
        .map(|c| Ok(fd.eval_checked(&c.center)?.abs() / omega.eval_checked(&c.center)?))
        .collect::<Result<_>>()?;
    let diff: Vec<f64> = nn
        .solution
        .g
        .iter()
        .zip(&target)
        .map(|(a, b)| a - b)
        .collect();
    let m = grid1d.measures();
    let denom = lp_norm_weighted(&target, &m, p).max(1e-30);
    let gradient_discrepancy = lp_norm_weighted(&diff, &m, p) / denom;

    let ratio = nn.value / classical.max(1e-30);
    Ok(WeightedCharacterizationReport {
        newton: nn.value,
        classical,
        ratio,
        gradient_discrepancy,
        ok: gradient_discrepancy <= tol,
    })
}

/// Central-difference derivative of a 1-D field.
fn derivative_1d(f: &Field) -> Field {
    let f = f.clone();
    Field::from_fn("f'", move |x| {
        let h = 1e-6 * (1.0 + x[0].abs());
        (f.eval(&[x[0] + h]) - f.eval(&[x[0] - h])) / (2.0 * h)
    })
}

// ---------------------------------------------------------------------------
// Maximal function
// ---------------------------------------------------------------------------

/// Noncentered maximal function over the sampled ball family: at each cell,
/// the largest m-average of `h` over any ball (centered at a cell center,
/// radius from `radii`) containing the cell. The degenerate single-cell
/// ball is always included, so `Mh >= h` pointwise.
pub fn maximal_function(
    h: &GridFunction,
    grid: &GroundGrid,
    radii: &[f64],
) -> Result<GridFunction> {
    if h.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: h.len() });
    }
    if radii.is_empty() {
        return Err(Error::InvalidInput("radii list must not be empty".into()));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = grid.len();
    let centers: Vec<&[f64]> = grid.cells().iter().map(|c| c.center.as_slice()).collect();

    let partials: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|z| -> Result<Vec<f64>> {
            let mut local = vec![f64::NEG_INFINITY; n];
            let mut dist: Vec<(f64, usize)> = Vec::with_capacity(n);
            for (i, c) in centers.iter().enumerate() {
                dist.push((metric::distance(c, centers[z], grid.metric())?, i));
            }
            dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut mass = 0.0;
            let mut weight = 0.0;
            let mut idx = 0;
            for &r in &radii {
                while idx < n && dist[idx].0 <= r {
                    let cell = dist[idx].1;
                    mass += grid.cells()[cell].measure * h.values[cell];
                    weight += grid.cells()[cell].measure;
                    idx += 1;
                }
                if weight <= 0.0 {
                    continue;
                }
                let avg = mass / weight;
                for d in dist.iter().take(idx) {
                    if avg > local[d.1] {
                        local[d.1] = avg;
                    }
                }
            }
            Ok(local)
        })
        .collect::<Result<_>>()?;

    // pointwise max is order independent, so the parallel fold is
    // deterministic
    let mut out = h.values.clone();
    for part in partials {
        for (o, v) in out.iter_mut().zip(part) {
            if v > *o {
                *o = v;
            }
        }
    }
    Ok(GridFunction { values: out })
}

/// Dyadic radii `2^-j * diam` for `j = 0..=levels`.
pub fn dyadic_radii(grid: &GroundGrid, levels: u32) -> Result<Vec<f64>> {
    let diam = grid.center_diameter()?;
    Ok((0..=levels).map(|j| diam / (1u64 << j) as f64).collect())
}

// ---------------------------------------------------------------------------
// Lipschitz truncation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct TruncationReport {
    pub k: f64,
    /// Exceptional cells: maximal function of `g^p` above `k^p`.
    pub e_cells: Vec<usize>,
    /// Regular cells, where the truncation equals `f`.
    pub f_cells: Vec<usize>,
    pub f_k: GridFunction,
    /// `||f - f_k||_p` over the grid.
    pub lp_error: f64,
    /// Holder constant of `f` restricted to the regular set (used for the
    /// extension).
    pub holder_constant_regular: f64,
    /// Achieved Holder constant of `f_k` over all cell pairs.
    pub holder_constant: f64,
    pub measure_ek: f64,
}

/// Threshold the maximal function of `g^p` at `k^p`, keep `f` on the regular
/// set, and extend across the exceptional set by the Holder inf-extension
/// with the empirical constant of `f` on the regular set.
///
/// On a finite grid every cell is its own Lebesgue point: the iterated
/// shrinking-ball averages of the construction collapse to the cell value
/// once the radius drops below the cell side, so the regular set keeps the
/// plain cell values.
#[allow(clippy::too_many_arguments)]
pub fn lipschitz_truncation(
    f: &GridFunction,
    g: &GridFunction,
    k: f64,
    beta: f64,
    p: f64,
    grid: &GroundGrid,
    radii: &[f64],
) -> Result<TruncationReport> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidInput(format!("threshold k must be positive, got {k}")));
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidInput(format!("beta must lie in (0, 1], got {beta}")));
    }
    let gp = GridFunction::new(grid, g.values().iter().map(|v| v.abs().powf(p)).collect())?;
    let mg = maximal_function(&gp, grid, radii)?;
    let kp = k.powf(p);
    let mut e_cells = Vec::new();
    let mut f_cells = Vec::new();
    for (i, v) in mg.values().iter().enumerate() {
        if *v > kp {
            e_cells.push(i);
        } else {
            f_cells.push(i);
        }
    }
    if f_cells.is_empty() {
        return Err(Error::AllExceptional { k });
    }

    let metric = grid.metric();
    let centers: Vec<&[f64]> = grid.cells().iter().map(|c| c.center.as_slice()).collect();
    // empirical Holder constant of f on the regular set
    let mut l_reg = 0.0f64;
    for (a, &i) in f_cells.iter().enumerate() {
        for &j in f_cells.iter().skip(a + 1) {
            let d = metric::distance(centers[i], centers[j], metric)?;
            if d > 0.0 {
                l_reg = l_reg.max((f.values[i] - f.values[j]).abs() / d.powf(beta));
            }
        }
    }

    let mut values = f.values.clone();
    for &i in &e_cells {
        let mut best = f64::INFINITY;
        for &j in &f_cells {
            let d = metric::distance(centers[i], centers[j], metric)?;
            best = best.min(f.values[j] + l_reg * d.powf(beta));
        }
        values[i] = best;
    }
    let f_k = GridFunction { values };

    let m = grid.measures();
    let diff: Vec<f64> = f_k
        .values
        .iter()
        .zip(&f.values)
        .map(|(a, b)| a - b)
        .collect();
    let lp_error = lp_norm_weighted(&diff, &m, p);
    let measure_ek: f64 = e_cells.iter().map(|&i| m[i]).sum();

    let mut achieved = 0.0f64;
    for i in 0..grid.len() {
        for j in (i + 1)..grid.len() {
            let d = metric::distance(centers[i], centers[j], metric)?;
            if d > 0.0 {
                achieved = achieved.max((f_k.values[i] - f_k.values[j]).abs() / d.powf(beta));
            }
        }
    }

    Ok(TruncationReport {
        k,
        e_cells,
        f_cells,
        f_k,
        lp_error,
        holder_constant_regular: l_reg,
        holder_constant: achieved,
        measure_ek,
    })
}

/// Holder inf-extension of finitely many seed values:
/// `x -> min_i (v_i + L d(x, x_i)^beta)`. The seeds must be mutually
/// compatible at constant `L`; the extension then reproduces them exactly
/// and is `L`-Holder itself.
pub fn holder_extension(
    values: &[(Vec<f64>, f64)],
    l_const: f64,
    beta: f64,
    metric: &MetricDescriptor,
) -> Result<Field> {
    if values.is_empty() {
        return Err(Error::InvalidInput("extension needs at least one seed value".into()));
    }
    if !(l_const.is_finite() && l_const >= 0.0) {
        return Err(Error::InvalidInput(format!("Holder constant must be >= 0, got {l_const}")));
    }
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            let d = metric::distance(&values[i].0, &values[j].0, metric)?;
            let bound = l_const * d.powf(beta);
            let gap = (values[i].1 - values[j].1).abs();
            if gap > bound + 1e-12 * (1.0 + bound) {
                return Err(Error::HolderIncompatible { i, j });
            }
        }
    }
    let seeds: Vec<(Vec<f64>, f64)> = values.to_vec();
    let metric = metric.clone();
    Ok(Field::from_fn("holder-extension", move |x| {
        let mut best = f64::INFINITY;
        for (pt, v) in &seeds {
            match metric::distance(x, pt, &metric) {
                Ok(d) => best = best.min(v + l_const * d.powf(beta)),
                Err(_) => return f64::NAN,
            }
        }
        best
    }))
}
