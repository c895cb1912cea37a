//! Shared convex engine: minimize `sum_c m_c g_c^p` over `g >= 0` subject to
//! sparse constraints `(W g)_row >= b_row`.
//!
//! Solved by dual coordinate ascent. With multipliers `lambda >= 0` per row,
//! stationarity gives the primal reconstruction
//! `g_c = (sum_r lambda_r W_rc / (p m_c))^(1/(p-1))`, and each sweep updates
//! one multiplier at a time so its constraint holds with equality or the
//! multiplier rests at zero. Every iterate yields a valid dual bound, so the
//! reported duality gap is a certificate.

use crate::error::{Error, Result};

/// Default relative feasibility tolerance.
pub const DEFAULT_TOL_FEAS: f64 = 1e-7;
/// Default relative duality-gap tolerance.
pub const DEFAULT_TOL_GAP: f64 = 1e-6;
/// Hard cap on row updates.
const MAX_ROW_UPDATES: usize = 1_000_000;

/// Sparse constraint system: rows are paths, columns are cells.
#[derive(Clone, Debug)]
pub struct PathProgram {
    n_cols: usize,
    rows: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    m: Vec<f64>,
    p: f64,
}

impl PathProgram {
    /// Validates: finite nonnegative entries, `b >= 0`, `m` finite and
    /// strictly positive on every column used by a row, `p > 1`.
    pub fn new(
        n_cols: usize,
        rows: Vec<Vec<(usize, f64)>>,
        b: Vec<f64>,
        m: Vec<f64>,
        p: f64,
    ) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidInput(format!("exponent p must lie in (1, inf), got {p}")));
        }
        if rows.len() != b.len() {
            return Err(Error::DimensionMismatch { expected: rows.len(), got: b.len() });
        }
        if m.len() != n_cols {
            return Err(Error::DimensionMismatch { expected: n_cols, got: m.len() });
        }
        if m.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("cell measures must be finite and >= 0".into()));
        }
        for (r, row) in rows.iter().enumerate() {
            if b[r].is_nan() || b[r] < 0.0 {
                return Err(Error::InvalidInput(format!("b[{r}] = {} must be >= 0", b[r])));
            }
            for &(c, w) in row {
                if c >= n_cols {
                    return Err(Error::DimensionMismatch { expected: n_cols, got: c + 1 });
                }
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "row {r} has entry {w} at column {c}"
                    )));
                }
                if w > 0.0 && m[c] <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "column {c} is used by row {r} but carries zero measure"
                    )));
                }
            }
        }
        Ok(PathProgram { n_cols, rows, b, m, p })
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn objective(&self, g: &[f64]) -> f64 {
        if self.p == 2.0 {
            self.m.iter().zip(g).map(|(m, g)| m * g * g).sum()
        } else {
            self.m.iter().zip(g).map(|(m, g)| m * g.powf(self.p)).sum()
        }
    }

    fn row_dot(&self, r: usize, g: &[f64]) -> f64 {
        self.rows[r].iter().map(|&(c, w)| w * g[c]).sum()
    }
}

/// Outcome of a solve, with the certificates attached.
#[derive(Clone, Debug)]
pub struct Solution {
    /// Feasible optimal density (scaled so every active constraint holds).
    pub g: Vec<f64>,
    /// Objective value of `g`.
    pub value: f64,
    /// Dual multipliers per row (zero on dropped rows).
    pub duals: Vec<f64>,
    /// Largest relative constraint violation of `g` (nonnegative part).
    pub max_violation: f64,
    /// Valid lower bound on the optimum from the dual iterate.
    pub dual_bound: f64,
    /// Relative gap between `value` and `dual_bound`.
    pub duality_gap: f64,
    /// Row updates performed.
    pub iterations: usize,
}

impl Solution {
    /// Complementary-slackness residual: the largest `lambda_r * slack_r`
    /// normalized by the objective scale.
    pub fn complementarity_residual(&self, prog: &PathProgram) -> f64 {
        let scale = self.value.max(self.dual_bound).max(1e-30);
        let mut worst = 0.0f64;
        for (r, lam) in self.duals.iter().enumerate() {
            if *lam <= 0.0 {
                continue;
            }
            let slack = prog.row_dot(r, &self.g) - prog.b[r];
            worst = worst.max(lam * slack.abs() / scale);
        }
        worst
    }
}

/// Per-row residual `b_row - (W g)_row`; nonpositive entries are satisfied.
pub fn admissibility_residual(g: &[f64], prog: &PathProgram) -> Result<Vec<f64>> {
    if g.len() != prog.n_cols {
        return Err(Error::DimensionMismatch { expected: prog.n_cols, got: g.len() });
    }
    Ok((0..prog.n_rows()).map(|r| prog.b[r] - prog.row_dot(r, g)).collect())
}

/// Closed-form optimum of a single-constraint program: minimize
/// `sum m_c g_c^p` subject to `sum w_c g_c >= b_row`. With `p' = p/(p-1)`
/// and `S = sum w_c^{p'} m_c^{1-p'}`, the optimum is
/// `g_c = b_row (w_c / m_c)^{1/(p-1)} / S` with value `b_row^p S^{-(p-1)}`,
/// and the constraint holds with equality.
pub fn single_constraint_optimum(
    w: &[f64],
    b_row: f64,
    m: &[f64],
    p: f64,
) -> Result<(Vec<f64>, f64)> {
    if w.len() != m.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), got: m.len() });
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidInput(format!("exponent p must lie in (1, inf), got {p}")));
    }
    if !(b_row.is_finite() && b_row > 0.0) {
        return Err(Error::InvalidInput(format!("b_row must be positive, got {b_row}")));
    }
    if w.iter().all(|v| *v <= 0.0) {
        return Err(Error::Infeasible { row: 0 });
    }
    let p_conj = p / (p - 1.0);
    let e = 1.0 / (p - 1.0);
    let mut s = 0.0;
    for (wc, mc) in w.iter().zip(m) {
        if *wc > 0.0 {
            if *mc <= 0.0 {
                return Err(Error::InvalidInput("measure must be positive where w > 0".into()));
            }
            s += wc.powf(p_conj) * mc.powf(1.0 - p_conj);
        }
    }
    let g: Vec<f64> = w
        .iter()
        .zip(m)
        .map(|(wc, mc)| if *wc > 0.0 { b_row * (wc / mc).powf(e) / s } else { 0.0 })
        .collect();
    let value = b_row.powf(p) * s.powf(1.0 - p);
    Ok((g, value))
}

/// Dual coordinate ascent on the full program.
pub fn solve(prog: &PathProgram, tol_feas: f64, tol_gap: f64) -> Result<Solution> {
    if !(tol_feas > 0.0 && tol_gap > 0.0) {
        return Err(Error::InvalidInput("tolerances must be positive".into()));
    }
    let p = prog.p;
    let e = 1.0 / (p - 1.0);

    // vacuous rows are dropped; a live row with no positive entry is
    // structurally infeasible
    let mut active: Vec<usize> = (0..prog.n_rows()).filter(|&r| prog.b[r] > 0.0).collect();
    for &r in &active {
        if prog.rows[r].iter().all(|&(_, w)| w <= 0.0) {
            return Err(Error::Infeasible { row: r });
        }
    }
    // sweep narrow rows first: local constraints bind, and the duals of the
    // wide rows they dominate never have to be unwound
    active.sort_by_key(|&r| (prog.rows[r].len(), r));
    if active.is_empty() {
        return Ok(Solution {
            g: vec![0.0; prog.n_cols],
            value: 0.0,
            duals: vec![0.0; prog.n_rows()],
            max_violation: 0.0,
            dual_bound: 0.0,
            duality_gap: 0.0,
            iterations: 0,
        });
    }

    let mut lambda = vec![0.0f64; prog.n_rows()];
    // weighted dual sums s_c = sum_r lambda_r W_rc
    let mut s = vec![0.0f64; prog.n_cols];
    let quadratic = e == 1.0;
    let g_of = |sc: f64, mc: f64| -> f64 {
        if sc <= 0.0 {
            0.0
        } else if quadratic {
            sc / (p * mc)
        } else {
            (sc / (p * mc)).powf(e)
        }
    };

    let mut iterations = 0usize;
    loop {
        for &r in &active {
            iterations += 1;
            let row = &prog.rows[r];
            let b_r = prog.b[r];
            // detach this row's contribution
            for &(c, w) in row {
                s[c] -= lambda[r] * w;
                if s[c] < 0.0 {
                    s[c] = 0.0;
                }
            }
            if quadratic {
                // p = 2 makes the constraint value linear in the multiplier
                let mut c0 = 0.0;
                let mut c1 = 0.0;
                for &(c, w) in row {
                    c0 += w * s[c] / (p * prog.m[c]);
                    c1 += w * w / (p * prog.m[c]);
                }
                let new_lambda = if c0 >= b_r || c1 <= 0.0 { 0.0 } else { (b_r - c0) / c1 };
                lambda[r] = new_lambda;
                for &(c, w) in row {
                    s[c] += new_lambda * w;
                }
                continue;
            }
            let phi = |x: f64, s: &[f64]| -> f64 {
                row.iter()
                    .map(|&(c, w)| w * g_of(s[c] + x * w, prog.m[c]))
                    .sum()
            };
            let mut new_lambda = 0.0;
            if phi(0.0, &s) < b_r {
                // bracket then bisect phi(x) = b_r; phi is strictly increasing
                let mut hi = lambda[r].max(1.0);
                let mut guard = 0;
                while phi(hi, &s) < b_r {
                    hi *= 2.0;
                    guard += 1;
                    if guard > 2000 {
                        return Err(Error::NonConvergence {
                            iterations,
                            max_violation: f64::INFINITY,
                            duality_gap: f64::INFINITY,
                            best_g: s.iter().zip(&prog.m).map(|(sc, mc)| g_of(*sc, *mc)).collect(),
                            best_value: f64::NAN,
                        });
                    }
                }
                let mut lo = 0.0;
                // bisection with a relative target on the constraint value
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let v = phi(mid, &s);
                    if (v - b_r).abs() <= 1e-13 * b_r {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if v < b_r {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * hi.max(1.0) {
                        break;
                    }
                }
                new_lambda = 0.5 * (lo + hi);
            }
            lambda[r] = new_lambda;
            for &(c, w) in row {
                s[c] += new_lambda * w;
            }
        }

        // certificates for this sweep
        let g: Vec<f64> = s.iter().zip(&prog.m).map(|(sc, mc)| g_of(*sc, *mc)).collect();
        let raw_value = prog.objective(&g);
        let mut max_violation = 0.0f64;
        let mut scale_up = 1.0f64;
        for &r in &active {
            let dot = prog.row_dot(r, &g);
            let rel = (prog.b[r] - dot) / prog.b[r];
            max_violation = max_violation.max(rel);
            if dot > 0.0 {
                scale_up = scale_up.max(prog.b[r] / dot);
            } else {
                scale_up = f64::INFINITY;
            }
        }
        let dual_bound = active.iter().map(|&r| lambda[r] * prog.b[r]).sum::<f64>()
            - (p - 1.0) * raw_value;
        let feas_value = if scale_up.is_finite() { scale_up.powf(p) * raw_value } else { f64::INFINITY };
        let duality_gap = (feas_value - dual_bound) / dual_bound.abs().max(1e-300);

        if max_violation <= tol_feas && duality_gap <= tol_gap {
            let g_feas: Vec<f64> = g.iter().map(|v| v * scale_up).collect();
            let value = prog.objective(&g_feas);
            let mut residual_violation = 0.0f64;
            for &r in &active {
                let rel = (prog.b[r] - prog.row_dot(r, &g_feas)) / prog.b[r];
                residual_violation = residual_violation.max(rel.max(0.0));
            }
            return Ok(Solution {
                g: g_feas,
                value,
                duals: lambda,
                max_violation: residual_violation,
                dual_bound,
                duality_gap: (value - dual_bound) / dual_bound.abs().max(1e-300),
                iterations,
            });
        }
        if iterations >= MAX_ROW_UPDATES {
            return Err(Error::NonConvergence {
                iterations,
                max_violation,
                duality_gap,
                best_g: g,
                best_value: raw_value,
            });
        }
    }
}
