//! p-modulus of finite path families over a grid.
//!
//! `modulus_p` discretizes the admissibility constraint "`g` integrates to at
//! least 1 along every path of the family" through cell incidence rows and
//! delegates to the convex engine. The value is an outer measure in the
//! family argument: monotone, countably subadditive, additive on families
//! with disjoint cell support.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GroundGrid;
use crate::path::{incidence, PathMeasure, Polyline};
use crate::solver::{self, PathProgram, Solution};

/// Modulus of a family; infinity is explicit, never a large float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModulusValue {
    Finite(f64),
    Infinite,
}

impl ModulusValue {
    pub fn as_finite(&self) -> Option<f64> {
        match self {
            ModulusValue::Finite(v) => Some(*v),
            ModulusValue::Infinite => None,
        }
    }

    pub fn expect_finite(&self) -> f64 {
        self.as_finite().expect("modulus is infinite")
    }
}

#[derive(Clone, Debug)]
pub struct ModulusResult {
    pub value: ModulusValue,
    /// The optimal admissible density on the grid (empty when infinite).
    pub extremal_g: Vec<f64>,
    /// Mass of the extremal density along each path.
    pub per_path_mass: Vec<f64>,
    pub tol_feas: f64,
    pub tol_gap: f64,
    /// Path that forced the value to infinity, when it is.
    pub offending_path: Option<usize>,
    /// The underlying solve, when one ran.
    pub solution: Option<Solution>,
}

/// Incidence rows of a family against a grid, computed in parallel.
pub fn incidence_rows(
    family: &[Polyline],
    grid: &GroundGrid,
    measure: &PathMeasure,
) -> Result<Vec<Vec<(usize, f64)>>> {
    family
        .par_iter()
        .map(|path| incidence(path, grid, measure))
        .collect()
}

/// p-modulus of a finite family. The empty family has modulus zero; a path
/// with zero total incidence mass makes the family non-admissible and the
/// modulus infinite.
pub fn modulus_p(
    family: &[Polyline],
    grid: &GroundGrid,
    measure: &PathMeasure,
    p: f64,
    tol_feas: f64,
    tol_gap: f64,
) -> Result<ModulusResult> {
    if family.is_empty() {
        return Ok(ModulusResult {
            value: ModulusValue::Finite(0.0),
            extremal_g: vec![0.0; grid.len()],
            per_path_mass: Vec::new(),
            tol_feas,
            tol_gap,
            offending_path: None,
            solution: None,
        });
    }
    let rows = incidence_rows(family, grid, measure)?;
    for (i, row) in rows.iter().enumerate() {
        let total: f64 = row.iter().map(|(_, w)| w).sum();
        if total <= 0.0 {
            return Ok(ModulusResult {
                value: ModulusValue::Infinite,
                extremal_g: Vec::new(),
                per_path_mass: Vec::new(),
                tol_feas,
                tol_gap,
                offending_path: Some(i),
                solution: None,
            });
        }
    }
    let prog = PathProgram::new(grid.len(), rows, vec![1.0; family.len()], grid.measures(), p)?;
    let solution = match solver::solve(&prog, tol_feas, tol_gap) {
        Ok(s) => s,
        Err(Error::Infeasible { row }) => {
            return Ok(ModulusResult {
                value: ModulusValue::Infinite,
                extremal_g: Vec::new(),
                per_path_mass: Vec::new(),
                tol_feas,
                tol_gap,
                offending_path: Some(row),
                solution: None,
            })
        }
        Err(e) => return Err(e),
    };
    let per_path_mass: Vec<f64> = (0..prog.n_rows())
        .map(|r| prog.rows()[r].iter().map(|&(c, w)| w * solution.g[c]).sum())
        .collect();
    Ok(ModulusResult {
        value: ModulusValue::Finite(solution.value),
        extremal_g: solution.g.clone(),
        per_path_mass,
        tol_feas,
        tol_gap,
        offending_path: None,
        solution: Some(solution),
    })
}

/// Certified upper bound from a witness density: if every path of the family
/// carries mass at least `level` under `g`, then `g / level` is admissible
/// and `level^-p * sum m_c g_c^p` bounds the modulus from above.
pub fn modulus_bound_from_witness(
    g: &[f64],
    family: &[Polyline],
    grid: &GroundGrid,
    measure: &PathMeasure,
    level: f64,
    p: f64,
) -> Result<f64> {
    if g.len() != grid.len() {
        return Err(Error::DimensionMismatch { expected: grid.len(), got: g.len() });
    }
    if !(level.is_finite() && level > 0.0) {
        return Err(Error::InvalidInput(format!("witness level must be positive, got {level}")));
    }
    let rows = incidence_rows(family, grid, measure)?;
    for (i, row) in rows.iter().enumerate() {
        let mass: f64 = row.iter().map(|&(c, w)| w * g[c]).sum();
        if mass < level * (1.0 - 1e-9) {
            return Err(Error::WitnessInvalid { path: i, mass, required: level });
        }
    }
    let value: f64 = grid
        .cells()
        .iter()
        .zip(g)
        .map(|(cell, gc)| cell.measure * gc.powf(p))
        .sum();
    Ok(level.powf(-p) * value)
}

#[cfg(test)]
mod tests;
