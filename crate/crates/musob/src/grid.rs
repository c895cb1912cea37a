//! Discretized ground space: a finite family of axis-aligned cubic cells,
//! each carrying a nonnegative space measure, plus a metric descriptor.
//!
//! Cells are boxes in the ambient coordinates regardless of the metric; the
//! metric enters only through distance and diameter evaluations.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::metric::{self, MetricDescriptor};
use crate::quad;

#[derive(Clone, Debug)]
pub struct Cell {
    pub center: Vec<f64>,
    pub side: f64,
    /// Space measure m_c of the cell.
    pub measure: f64,
}

impl Cell {
    pub fn lo(&self, axis: usize) -> f64 {
        self.center[axis] - 0.5 * self.side
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.center[axis] + 0.5 * self.side
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(d, v)| *v >= self.lo(d) - 1e-12 * self.side && *v <= self.hi(d) + 1e-12 * self.side)
    }

    pub fn volume(&self, dimension: usize) -> f64 {
        self.side.powi(dimension as i32)
    }
}

#[derive(Clone, Debug)]
pub struct GroundGrid {
    dimension: usize,
    cells: Vec<Cell>,
    metric: MetricDescriptor,
}

impl GroundGrid {
    /// Build a grid from explicit cells, validating all invariants:
    /// positive sides, finite nonnegative measures with positive total,
    /// pairwise disjoint interiors, and a metric matching the dimension.
    pub fn new(dimension: usize, cells: Vec<Cell>, metric: MetricDescriptor) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        metric.validate(dimension)?;
        if cells.is_empty() {
            return Err(Error::InvalidInput("grid needs at least one cell".into()));
        }
        let mut total = 0.0;
        for (i, c) in cells.iter().enumerate() {
            if c.center.len() != dimension {
                return Err(Error::DimensionMismatch { expected: dimension, got: c.center.len() });
            }
            if !(c.side.is_finite() && c.side > 0.0) {
                return Err(Error::InvalidInput(format!("cell {i} has side {}", c.side)));
            }
            if !(c.measure.is_finite() && c.measure >= 0.0) {
                return Err(Error::InvalidInput(format!("cell {i} has measure {}", c.measure)));
            }
            if c.center.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("cell {i} has a non-finite center")));
            }
            total += c.measure;
        }
        if total <= 0.0 {
            return Err(Error::InvalidInput("total grid measure must be positive".into()));
        }
        for i in 0..cells.len() {
            for j in (i + 1)..cells.len() {
                if interiors_overlap(&cells[i], &cells[j], dimension) {
                    return Err(Error::InvalidInput(format!("cells {i} and {j} overlap")));
                }
            }
        }
        Ok(GroundGrid { dimension, cells, metric })
    }

    /// Uniform grid over `extent` with `resolution[d]` cells per axis. Steps
    /// must agree across axes (cells are cubes). The cell measure is the
    /// integral of `m_weight` over the cell (tensor midpoint quadrature).
    pub fn uniform(
        extent: &[(f64, f64)],
        resolution: &[usize],
        metric: MetricDescriptor,
        m_weight: &Field,
    ) -> Result<Self> {
        let dimension = extent.len();
        if dimension == 0 || resolution.len() != dimension {
            return Err(Error::DimensionMismatch { expected: dimension, got: resolution.len() });
        }
        metric.validate(dimension)?;
        let mut steps = Vec::with_capacity(dimension);
        for (d, ((a, b), n)) in extent.iter().zip(resolution).enumerate() {
            if !(a.is_finite() && b.is_finite() && b > a) || *n == 0 {
                return Err(Error::InvalidInput(format!("bad extent or resolution on axis {d}")));
            }
            steps.push((b - a) / *n as f64);
        }
        let side = steps[0];
        if steps.iter().any(|s| (s - side).abs() > 1e-9 * side) {
            return Err(Error::InvalidInput(
                "cells must be cubes: extent/resolution steps differ across axes".into(),
            ));
        }

        let total: usize = resolution.iter().product();
        let mut cells = Vec::with_capacity(total);
        let mut idx = vec![0usize; dimension];
        loop {
            let center: Vec<f64> = idx
                .iter()
                .enumerate()
                .map(|(d, i)| extent[d].0 + (*i as f64 + 0.5) * side)
                .collect();
            let lo: Vec<f64> = center.iter().map(|c| c - 0.5 * side).collect();
            let hi: Vec<f64> = center.iter().map(|c| c + 0.5 * side).collect();
            let measure =
                quad::tensor_midpoint(|x| m_weight.eval_checked(x), &lo, &hi, 1e-9, 10)?;
            if !(measure.is_finite() && measure >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "m-weight produced measure {measure} on cell at {center:?}"
                )));
            }
            cells.push(Cell { center, side, measure });
            let mut d = 0;
            loop {
                if d == dimension {
                    let grid = GroundGrid { dimension, cells, metric };
                    if grid.total_measure() <= 0.0 {
                        return Err(Error::InvalidInput(
                            "total grid measure must be positive".into(),
                        ));
                    }
                    return Ok(grid);
                }
                idx[d] += 1;
                if idx[d] < resolution[d] {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn metric(&self) -> &MetricDescriptor {
        &self.metric
    }

    pub fn total_measure(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    pub fn measures(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c.measure).collect()
    }

    /// First cell containing `x`, if any.
    pub fn cell_containing(&self, x: &[f64]) -> Option<usize> {
        self.cells.iter().position(|c| c.contains(x))
    }

    /// Indices of cells whose centers lie within metric distance `r` of `z`.
    pub fn ball_cells(&self, z: &[f64], r: f64) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for (i, c) in self.cells.iter().enumerate() {
            if metric::distance(&c.center, z, &self.metric)? <= r {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// Metric diameter of the set of cell centers.
    pub fn center_diameter(&self) -> Result<f64> {
        let centers: Vec<Vec<f64>> = self.cells.iter().map(|c| c.center.clone()).collect();
        metric::diameter(&centers, &self.metric)
    }
}

fn interiors_overlap(a: &Cell, b: &Cell, dimension: usize) -> bool {
    (0..dimension).all(|d| {
        let lo = a.lo(d).max(b.lo(d));
        let hi = a.hi(d).min(b.hi(d));
        hi - lo > 1e-12 * a.side.max(b.side)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_has_lebesgue_measures() {
        let grid = GroundGrid::uniform(
            &[(0.0, 1.0), (0.0, 1.0)],
            &[4, 4],
            MetricDescriptor::Euclidean,
            &Field::constant(1.0),
        )
        .unwrap();
        assert_eq!(grid.len(), 16);
        assert!((grid.total_measure() - 1.0).abs() < 1e-12);
        for c in grid.cells() {
            assert!((c.measure - 1.0 / 16.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_cubic_cells_rejected() {
        let r = GroundGrid::uniform(
            &[(0.0, 1.0), (0.0, 2.0)],
            &[4, 4],
            MetricDescriptor::Euclidean,
            &Field::constant(1.0),
        );
        assert!(r.is_err());
    }

    #[test]
    fn overlapping_cells_rejected() {
        let cells = vec![
            Cell { center: vec![0.0], side: 1.0, measure: 1.0 },
            Cell { center: vec![0.4], side: 1.0, measure: 1.0 },
        ];
        assert!(GroundGrid::new(1, cells, MetricDescriptor::Euclidean).is_err());
        // face-sharing cells are fine
        let cells = vec![
            Cell { center: vec![0.0], side: 1.0, measure: 1.0 },
            Cell { center: vec![1.0], side: 1.0, measure: 1.0 },
        ];
        assert!(GroundGrid::new(1, cells, MetricDescriptor::Euclidean).is_ok());
    }

    #[test]
    fn zero_total_measure_rejected() {
        let cells = vec![Cell { center: vec![0.0], side: 1.0, measure: 0.0 }];
        assert!(GroundGrid::new(1, cells, MetricDescriptor::Euclidean).is_err());
    }

    #[test]
    fn ball_membership_uses_the_metric() {
        let grid = GroundGrid::uniform(
            &[(0.0, 2.0), (0.0, 2.0)],
            &[8, 8],
            MetricDescriptor::parabolic_plane(),
            &Field::constant(1.0),
        )
        .unwrap();
        // parabolic ball of radius r: |dx| <= r but |dy| <= r^2
        let ball = grid.ball_cells(&[1.0, 1.0], 0.5).unwrap();
        for &i in &ball {
            let c = &grid.cells()[i];
            assert!((c.center[0] - 1.0).abs() <= 0.5 + 1e-12);
            assert!((c.center[1] - 1.0).abs() <= 0.25 + 1e-12);
        }
        assert!(!ball.is_empty());
    }
}
