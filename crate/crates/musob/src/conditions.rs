//! Numerical checkers for the inequality hypotheses relating space measure,
//! path measure and metric: Poincare constants, arc-chord constants,
//! two-weight cube conditions, power-weight exponent arithmetic, Ahlfors
//! regularity and the embedding inequalities.
//!
//! Every checker scans a finite sample family (balls, cubes, paths or point
//! pairs) and reports the best constant together with the witness achieving
//! it. Constants are maxima over the samples, hence lower bounds for the
//! true suprema.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::GroundGrid;
use crate::metric::{self, MetricDescriptor};
use crate::path::{dyadic_pieces, mu_length, PathMeasure, Polyline};
use crate::quad;
use crate::sobolev::GridFunction;

/// Reading of the integral signs in the Poincare and two-weight displays.
/// `Standard` takes m-averages on the Poincare side and plain integrals in
/// the cube conditions (the reading under which the power-weight example
/// balances); `Alternate` flips both.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AverageConvention {
    #[default]
    Standard,
    Alternate,
}

#[derive(Clone, Debug)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Axis-aligned cube given by center and half-side; the side is `2 * half`.
#[derive(Clone, Debug)]
pub struct Cube {
    pub center: Vec<f64>,
    pub half: f64,
}

impl Cube {
    pub fn volume(&self) -> f64 {
        (2.0 * self.half).powi(self.center.len() as i32)
    }

    pub fn lo(&self) -> Vec<f64> {
        self.center.iter().map(|c| c - self.half).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        self.center.iter().map(|c| c + self.half).collect()
    }
}

/// Origin-or-shifted dyadic cube family: half-sides `2^j` for
/// `j_min <= j <= j_max`.
pub fn dyadic_cubes(center: &[f64], j_min: i32, j_max: i32) -> Vec<Cube> {
    (j_min..=j_max)
        .map(|j| Cube { center: center.to_vec(), half: 2f64.powi(j) })
        .collect()
}

/// The sample achieving a reported constant.
#[derive(Clone, Debug)]
pub enum Witness {
    Ball(Ball),
    Cube(Cube),
    /// Path index and the parameter range of the piece.
    PathPiece { path: usize, lo: f64, hi: f64 },
    Pair { a: Vec<f64>, b: Vec<f64> },
    Global,
}

#[derive(Clone, Debug)]
pub struct ConditionReport {
    /// Max of the defining ratio over the checked samples (a lower bound
    /// for the supremum).
    pub best_constant: f64,
    pub witness: Witness,
    pub samples_checked: usize,
    pub parameters: Vec<(String, f64)>,
    /// Every checked sample with its ratio, in input order.
    pub samples: Vec<(Witness, f64)>,
    /// Samples where the right-hand side vanished while the left did not.
    pub hard_violations: Vec<Witness>,
    /// Samples whose quadrature failed to converge; excluded from the
    /// constant.
    pub flagged: Vec<Witness>,
    /// Samples skipped for emptiness.
    pub skipped: usize,
}

impl ConditionReport {
    fn from_samples(
        samples: Vec<(Witness, f64)>,
        parameters: Vec<(String, f64)>,
        hard_violations: Vec<Witness>,
        flagged: Vec<Witness>,
        skipped: usize,
    ) -> Self {
        let mut best = 0.0f64;
        let mut witness = Witness::Global;
        for (w, v) in &samples {
            if *v > best {
                best = *v;
                witness = w.clone();
            }
        }
        ConditionReport {
            best_constant: best,
            witness,
            samples_checked: samples.len(),
            parameters,
            samples,
            hard_violations,
            flagged,
            skipped,
        }
    }
}

// ---------------------------------------------------------------------------
// Poincare
// ---------------------------------------------------------------------------

/// Best constant in the ball inequality
/// `avg_B |f - f_B| <= C diam(B)^beta (avg_{lambda B} rho^p)^(1/p)`,
/// scanned over the given balls. Under the alternate convention the right
/// side uses the plain integral instead of the average. Balls whose right
/// side vanishes while the left does not are flagged as hard violations.
#[allow(clippy::too_many_arguments)]
pub fn poincare_constant(
    f: &GridFunction,
    rho: &GridFunction,
    balls: &[Ball],
    beta: f64,
    lambda_dilation: f64,
    p: f64,
    grid: &GroundGrid,
    convention: AverageConvention,
) -> Result<ConditionReport> {
    if lambda_dilation < 1.0 {
        return Err(Error::InvalidInput(format!(
            "dilation factor must be >= 1, got {lambda_dilation}"
        )));
    }
    if f.len() != grid.len() || rho.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: f.len() });
    }
    let mut samples = Vec::new();
    let mut hard = Vec::new();
    let mut skipped = 0usize;
    for ball in balls {
        let members = grid.ball_cells(&ball.center, ball.radius)?;
        let m_b: f64 = members.iter().map(|&i| grid.cells()[i].measure).sum();
        if members.is_empty() || m_b <= 0.0 {
            skipped += 1;
            continue;
        }
        let f_b: f64 = members
            .iter()
            .map(|&i| grid.cells()[i].measure * f.values()[i])
            .sum::<f64>()
            / m_b;
        let lhs: f64 = members
            .iter()
            .map(|&i| grid.cells()[i].measure * (f.values()[i] - f_b).abs())
            .sum::<f64>()
            / m_b;
        let dilated = grid.ball_cells(&ball.center, lambda_dilation * ball.radius)?;
        let m_l: f64 = dilated.iter().map(|&i| grid.cells()[i].measure).sum();
        let rho_integral: f64 = dilated
            .iter()
            .map(|&i| grid.cells()[i].measure * rho.values()[i].abs().powf(p))
            .sum();
        let rho_term = match convention {
            AverageConvention::Standard if m_l > 0.0 => (rho_integral / m_l).powf(1.0 / p),
            AverageConvention::Standard => 0.0,
            AverageConvention::Alternate => rho_integral.powf(1.0 / p),
        };
        let centers: Vec<Vec<f64>> =
            members.iter().map(|&i| grid.cells()[i].center.clone()).collect();
        let diam = metric::diameter(&centers, grid.metric())?;
        let rhs = diam.powf(beta) * rho_term;
        let witness = Witness::Ball(ball.clone());
        if rhs > 0.0 {
            samples.push((witness, lhs / rhs));
        } else if lhs > 0.0 {
            hard.push(witness);
        } else {
            skipped += 1;
        }
    }
    Ok(ConditionReport::from_samples(
        samples,
        vec![
            ("p".into(), p),
            ("beta".into(), beta),
            ("lambda".into(), lambda_dilation),
        ],
        hard,
        Vec::new(),
        skipped,
    ))
}

// ---------------------------------------------------------------------------
// Arc-chord
// ---------------------------------------------------------------------------

/// Best constant in `diam(Im gamma)^beta <= C mu(Im gamma)` over the paths
/// and their 8 dyadic pieces. Polyline diameters are exact over vertex
/// pairs: the gauge has convex sublevel sets, so segment extremes sit at
/// vertices.
pub fn arc_chord_constant(
    family: &[Polyline],
    measure: &PathMeasure,
    beta: f64,
    metric: &MetricDescriptor,
) -> Result<ConditionReport> {
    let mut samples = Vec::new();
    for (pid, path) in family.iter().enumerate() {
        let mut probes: Vec<(f64, f64, Polyline)> = vec![(0.0, 1.0, path.clone())];
        for (i, piece) in dyadic_pieces(path, 8)?.into_iter().enumerate() {
            probes.push((i as f64 / 8.0, (i + 1) as f64 / 8.0, piece));
        }
        for (lo, hi, piece) in probes {
            let mass = mu_length(&piece, measure)?;
            if mass <= 0.0 {
                return Err(Error::GammaMuViolation(format!(
                    "path {pid} piece [{lo}, {hi}] has zero mass"
                )));
            }
            let diam = metric::diameter(piece.vertices(), metric)?;
            samples.push((Witness::PathPiece { path: pid, lo, hi }, diam.powf(beta) / mass));
        }
    }
    Ok(ConditionReport::from_samples(
        samples,
        vec![("beta".into(), beta)],
        Vec::new(),
        Vec::new(),
        0,
    ))
}

// ---------------------------------------------------------------------------
// Two-weight cube conditions
// ---------------------------------------------------------------------------

const CUBE_QUAD_REL: f64 = 3e-4;
const CUBE_QUAD_MAX_LEVEL: u32 = 11;

fn cube_integral(f: &Field, cube: &Cube) -> Result<f64> {
    quad::tensor_midpoint(
        |x| f.eval_checked(x),
        &cube.lo(),
        &cube.hi(),
        CUBE_QUAD_REL,
        CUBE_QUAD_MAX_LEVEL,
    )
}

/// Two-weight condition over cubes:
/// `(int_Q w1^(-p'/p))^(1/p') (int_Q w2)^(1/q) <= C |Q|^(1-alpha)`.
/// Under the alternate convention both integrals are cube averages and the
/// volume normalization drops out. Cubes with divergent quadrature are
/// flagged and skipped.
#[allow(clippy::too_many_arguments)]
pub fn apq_check(
    w1: &Field,
    w2: &Field,
    p: f64,
    q: f64,
    alpha: f64,
    cubes: &[Cube],
    convention: AverageConvention,
) -> Result<ConditionReport> {
    if !(p > 1.0 && p.is_finite() && q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidInput(format!("need 1 < p, q < inf, got p = {p}, q = {q}")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidInput(format!("need 0 <= alpha < 1, got {alpha}")));
    }
    if 1.0 / p - alpha > 1.0 / q + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "exponent gate 1/p - alpha <= 1/q fails: {} > {}",
            1.0 / p - alpha,
            1.0 / q
        )));
    }
    let p_conj = p / (p - 1.0);
    let neg_exp = -p_conj / p;
    let w1c = w1.clone();
    let dual_weight = Field::from_fn("w1^(-p'/p)", move |x| w1c.eval(x).powf(neg_exp));

    let results: Vec<(Witness, Option<f64>)> = cubes
        .par_iter()
        .map(|cube| {
            let witness = Witness::Cube(cube.clone());
            let i1 = cube_integral(&dual_weight, cube);
            let i2 = cube_integral(w2, cube);
            match (i1, i2) {
                (Ok(i1), Ok(i2)) => {
                    let ratio = match convention {
                        AverageConvention::Standard => {
                            i1.powf(1.0 / p_conj) * i2.powf(1.0 / q)
                                / cube.volume().powf(1.0 - alpha)
                        }
                        AverageConvention::Alternate => {
                            (i1 / cube.volume()).powf(1.0 / p_conj)
                                * (i2 / cube.volume()).powf(1.0 / q)
                        }
                    };
                    (witness, Some(ratio))
                }
                _ => (witness, None),
            }
        })
        .collect();

    let mut samples = Vec::new();
    let mut flagged = Vec::new();
    for (w, r) in results {
        match r {
            Some(v) => samples.push((w, v)),
            None => flagged.push(w),
        }
    }
    Ok(ConditionReport::from_samples(
        samples,
        vec![("p".into(), p), ("q".into(), q), ("alpha".into(), alpha)],
        Vec::new(),
        flagged,
        0,
    ))
}

/// Growth condition over cubes:
/// `int_Q omega^p dx <= C |Q|^(q(1/p - 1/n))`. The display carries its own
/// normalization, so there is no convention to choose.
pub fn growth_check(
    omega: &Field,
    p: f64,
    q: f64,
    n: usize,
    cubes: &[Cube],
) -> Result<ConditionReport> {
    if !(p > 1.0 && q > 0.0) {
        return Err(Error::InvalidInput(format!("bad exponents p = {p}, q = {q}")));
    }
    let inv_q = 1.0 / q;
    let gate_lo = 1.0 / p - 1.0 / n as f64;
    if inv_q < gate_lo - 1e-12 || inv_q >= 1.0 / p + 1e-12 {
        return Err(Error::InvalidInput(format!(
            "exponent gate 1/p - 1/n <= 1/q < 1/p fails for q = {q}"
        )));
    }
    let omega_c = omega.clone();
    let omega_p = Field::from_fn("omega^p", move |x| omega_c.eval(x).powf(p));
    let exponent = q * (1.0 / p - 1.0 / n as f64);

    let results: Vec<(Witness, Option<f64>)> = cubes
        .par_iter()
        .map(|cube| {
            let witness = Witness::Cube(cube.clone());
            match cube_integral(&omega_p, cube) {
                Ok(i) => (witness, Some(i / cube.volume().powf(exponent))),
                Err(_) => (witness, None),
            }
        })
        .collect();

    let mut samples = Vec::new();
    let mut flagged = Vec::new();
    for (w, r) in results {
        match r {
            Some(v) => samples.push((w, v)),
            None => flagged.push(w),
        }
    }
    Ok(ConditionReport::from_samples(
        samples,
        vec![("p".into(), p), ("q".into(), q), ("n".into(), n as f64)],
        Vec::new(),
        flagged,
        0,
    ))
}

/// The exponent `q = (n - lambda p) p / (n - p)` under which the pair
/// `(1, omega^p)` with `omega = |x|^-lambda` satisfies the cube condition.
/// Requires `1 < p < n`, `0 <= lambda < 1` and `p lambda < n`.
pub fn power_weight_exponent(n: usize, p: f64, lambda: f64) -> Result<f64> {
    let nf = n as f64;
    if !(p > 1.0 && p < nf) {
        return Err(Error::InvalidInput(format!("need 1 < p < n, got p = {p}, n = {n}")));
    }
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidInput(format!("need 0 <= lambda < 1, got {lambda}")));
    }
    if p * lambda >= nf {
        return Err(Error::InvalidInput(format!(
            "need p lambda < n for the weight to be in the admissible class, got {}",
            p * lambda
        )));
    }
    let q = (nf - lambda * p) * p / (nf - p);
    debug_assert!(1.0 / p - 1.0 / nf <= 1.0 / q + 1e-12 && 1.0 / q < 1.0 / p + 1e-12);
    Ok(q)
}

/// The Poincare exponent obtained from the growth condition:
/// `beta = (delta q / p) (n / p - 1)`. Degenerates to zero when `n = p`.
pub fn poincare_beta_from_growth(delta: f64, q: f64, p: f64, n: usize) -> f64 {
    (delta * q / p) * (n as f64 / p - 1.0)
}

// ---------------------------------------------------------------------------
// Ahlfors regularity
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct AhlforsReport {
    /// Smallest sampled `m(B(x, r)) / r^N`.
    pub lower: f64,
    /// Largest sampled `m(B(x, r)) / r^N`.
    pub upper: f64,
    pub samples_checked: usize,
    pub skipped: usize,
    pub witness_lower: Ball,
    pub witness_upper: Ball,
}

/// Sampled Ahlfors bounds `c r^N <= m(B(x, r)) <= C r^N` over the given
/// centers and radii; empty balls are skipped.
pub fn ahlfors_check(
    grid: &GroundGrid,
    n_exp: f64,
    radii: &[f64],
    centers: &[Vec<f64>],
) -> Result<AhlforsReport> {
    if radii.is_empty() || centers.is_empty() {
        return Err(Error::InvalidInput("need at least one radius and center".into()));
    }
    let mut lower = f64::INFINITY;
    let mut upper = 0.0f64;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut witness_lower = Ball { center: centers[0].clone(), radius: radii[0] };
    let mut witness_upper = witness_lower.clone();
    for center in centers {
        for &r in radii {
            let members = grid.ball_cells(center, r)?;
            let mass: f64 = members.iter().map(|&i| grid.cells()[i].measure).sum();
            if members.is_empty() || mass <= 0.0 {
                skipped += 1;
                continue;
            }
            let ratio = mass / r.powf(n_exp);
            checked += 1;
            if ratio < lower {
                lower = ratio;
                witness_lower = Ball { center: center.clone(), radius: r };
            }
            if ratio > upper {
                upper = ratio;
                witness_upper = Ball { center: center.clone(), radius: r };
            }
        }
    }
    if checked == 0 {
        return Err(Error::InvalidInput("every sampled ball was empty".into()));
    }
    Ok(AhlforsReport { lower, upper, samples_checked: checked, skipped, witness_lower, witness_upper })
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

/// Holder-embedding probe: with `alpha = beta - N/p` (requires `p > N/beta`),
/// reports the largest `|f(x) - f(y)| / d(x, y)^alpha` over the given cell
/// pairs, alongside the gradient norm for the comparison ratio.
#[allow(clippy::too_many_arguments)]
pub fn embedding_holder_check(
    f: &GridFunction,
    g: &GridFunction,
    beta: f64,
    n_exp: f64,
    p: f64,
    pairs: &[(usize, usize)],
    grid: &GroundGrid,
) -> Result<ConditionReport> {
    if p <= n_exp / beta {
        return Err(Error::InvalidInput(format!("need p > N/beta, got p = {p}, N/beta = {}", n_exp / beta)));
    }
    let alpha = beta - n_exp / p;
    let g_norm = crate::sobolev::lp_norm(g, grid, p)?;
    let mut samples = Vec::new();
    for &(i, j) in pairs {
        let a = &grid.cells()[i].center;
        let b = &grid.cells()[j].center;
        let d = metric::distance(a, b, grid.metric())?;
        if d <= 0.0 {
            return Err(Error::CoincidentPoints { i, j });
        }
        let ratio = (f.values()[i] - f.values()[j]).abs() / d.powf(alpha);
        samples.push((Witness::Pair { a: a.clone(), b: b.clone() }, ratio));
    }
    let mut report = ConditionReport::from_samples(
        samples,
        vec![
            ("alpha".into(), alpha),
            ("beta".into(), beta),
            ("N".into(), n_exp),
            ("p".into(), p),
            ("g_norm".into(), g_norm),
        ],
        Vec::new(),
        Vec::new(),
        0,
    );
    let best = report.best_constant;
    report
        .parameters
        .push(("constant_over_gnorm".into(), if g_norm > 0.0 { best / g_norm } else { f64::INFINITY }));
    Ok(report)
}

/// Sobolev-embedding probe: with `1/p* = 1/p - 1/(Nq)` (requires
/// `q < p < Nq`), reports the empirical constant in
/// `||u - u_X||_{p*} <= C diam(X)^(beta - 1/q) ||g||_p`.
pub fn embedding_pstar_check(
    f: &GridFunction,
    g: &GridFunction,
    q: f64,
    p: f64,
    n_exp: f64,
    beta: f64,
    grid: &GroundGrid,
) -> Result<ConditionReport> {
    if !(q < p && p < n_exp * q) {
        return Err(Error::InvalidInput(format!(
            "need q < p < Nq, got q = {q}, p = {p}, Nq = {}",
            n_exp * q
        )));
    }
    let inv_pstar = 1.0 / p - 1.0 / (n_exp * q);
    if inv_pstar <= 0.0 {
        return Err(Error::InvalidInput(format!("1/p* = {inv_pstar} must be positive")));
    }
    let pstar = 1.0 / inv_pstar;
    let m = grid.measures();
    let total: f64 = m.iter().sum();
    let mean: f64 = f
        .values()
        .iter()
        .zip(&m)
        .map(|(v, w)| v * w)
        .sum::<f64>()
        / total;
    let centered: Vec<f64> = f.values().iter().map(|v| v - mean).collect();
    let lhs = crate::gradient::lp_norm_weighted(&centered, &m, pstar);
    let diam = grid.center_diameter()?;
    let g_norm = crate::sobolev::lp_norm(g, grid, p)?;
    let rhs = diam.powf(beta - 1.0 / q) * g_norm;
    let ratio = if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
    let samples = vec![(Witness::Global, if lhs == 0.0 { 0.0 } else { ratio })];
    Ok(ConditionReport::from_samples(
        samples,
        vec![
            ("pstar".into(), pstar),
            ("p".into(), p),
            ("q".into(), q),
            ("N".into(), n_exp),
            ("beta".into(), beta),
            ("lhs".into(), lhs),
            ("rhs".into(), rhs),
        ],
        Vec::new(),
        Vec::new(),
        0,
    ))
}
