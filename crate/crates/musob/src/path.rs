//! Injective polyline paths, measures along them, and the mu-arc-length
//! parametrization.
//!
//! A path is measured not by Euclidean arc length but by a [`PathMeasure`]:
//! plain arc length, a weighted measure `omega * H^1`, the parabolic height
//! (total vertical variation), or a tabulated density. The cumulative mass
//! `nu(t)` along a path is strictly increasing exactly when every
//! non-trivial subpath has positive mass; such paths admit a reparametrization
//! by cumulative mass, and integrals against the measure turn into plain
//! integrals in the mass parameter.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::GroundGrid;
use crate::quad;

/// Relative tolerance for mass and line-integral quadratures.
const QUAD_REL: f64 = 1e-9;
/// Parameter tolerance of the mass-parametrization inversion.
const PARAM_TOL: f64 = 1e-10;
/// Knots per segment in the cached cumulative-mass table.
const KNOTS_PER_SEGMENT: usize = 64;

// ---------------------------------------------------------------------------
// Polyline
// ---------------------------------------------------------------------------

/// An injective piecewise-linear path. The parameter runs over `[0, 1]`
/// proportionally to Euclidean arc length.
#[derive(Clone, Debug)]
pub struct Polyline {
    vertices: Vec<Vec<f64>>,
    /// Cumulative Euclidean length at each vertex.
    cum: Vec<f64>,
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn point_segment_distance(p: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let dim = p.len();
    let mut uu = 0.0;
    let mut up = 0.0;
    for d in 0..dim {
        let u = b[d] - a[d];
        uu += u * u;
        up += u * (p[d] - a[d]);
    }
    let t = if uu > 0.0 { (up / uu).clamp(0.0, 1.0) } else { 0.0 };
    let mut acc = 0.0;
    for d in 0..dim {
        let q = a[d] + t * (b[d] - a[d]) - p[d];
        acc += q * q;
    }
    acc.sqrt()
}

/// Minimum distance between two segments in R^n (clamped quadratic).
fn segment_segment_distance(a0: &[f64], a1: &[f64], b0: &[f64], b1: &[f64]) -> f64 {
    let dim = a0.len();
    let mut uu = 0.0;
    let mut vv = 0.0;
    let mut uv = 0.0;
    let mut uw = 0.0;
    let mut vw = 0.0;
    for d in 0..dim {
        let u = a1[d] - a0[d];
        let v = b1[d] - b0[d];
        let w = a0[d] - b0[d];
        uu += u * u;
        vv += v * v;
        uv += u * v;
        uw += u * w;
        vw += v * w;
    }
    let det = uu * vv - uv * uv;
    let mut candidates: Vec<(f64, f64)> = Vec::with_capacity(5);
    if det > 1e-30 * uu.max(vv).max(1.0) {
        let s = ((uv * vw - vv * uw) / det).clamp(0.0, 1.0);
        let t = ((uu * vw - uv * uw) / det).clamp(0.0, 1.0);
        candidates.push((s, t));
    }
    // boundary cases: clamp each parameter and optimize the other
    for s in [0.0, 1.0] {
        let t = if vv > 0.0 { ((s * uv + vw) / vv).clamp(0.0, 1.0) } else { 0.0 };
        candidates.push((s, t));
    }
    for t in [0.0, 1.0] {
        let s = if uu > 0.0 { ((t * uv - uw) / uu).clamp(0.0, 1.0) } else { 0.0 };
        candidates.push((s, t));
    }
    let mut best = f64::INFINITY;
    for (s, t) in candidates {
        let mut acc = 0.0;
        for d in 0..dim {
            let q = a0[d] + s * (a1[d] - a0[d]) - b0[d] - t * (b1[d] - b0[d]);
            acc += q * q;
        }
        best = best.min(acc.sqrt());
    }
    best
}

impl Polyline {
    /// Validates: at least two finite vertices of equal dimension, distinct
    /// consecutive vertices, positive total length, and injectivity (no
    /// self-intersection, checked pairwise on segments).
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidInput("polyline needs at least two vertices".into()));
        }
        let dim = vertices[0].len();
        if dim == 0 {
            return Err(Error::InvalidInput("polyline vertices must have dimension >= 1".into()));
        }
        let mut scale = 1.0f64;
        for v in &vertices {
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite vertex {v:?}")));
            }
            scale = v.iter().fold(scale, |acc, x| acc.max(x.abs()));
        }
        let eps = 1e-12 * scale;
        let mut cum = Vec::with_capacity(vertices.len());
        cum.push(0.0);
        for w in vertices.windows(2) {
            let l = euclid(&w[0], &w[1]);
            if l <= eps {
                return Err(Error::InvalidInput("consecutive vertices coincide".into()));
            }
            cum.push(cum.last().unwrap() + l);
        }
        let path = Polyline { vertices, cum };
        path.check_injective(eps)?;
        Ok(path)
    }

    /// Internal constructor for subpaths of a validated polyline.
    fn new_unchecked(vertices: Vec<Vec<f64>>) -> Self {
        let mut cum = Vec::with_capacity(vertices.len());
        cum.push(0.0);
        for w in vertices.windows(2) {
            cum.push(cum.last().unwrap() + euclid(&w[0], &w[1]));
        }
        Polyline { vertices, cum }
    }

    fn check_injective(&self, eps: f64) -> Result<()> {
        let n = self.segment_count();
        for i in 0..n {
            let (a0, a1) = self.segment(i);
            for j in (i + 1)..n {
                let (b0, b1) = self.segment(j);
                if j == i + 1 {
                    // adjacent segments share one vertex; reject doubling back
                    if point_segment_distance(b1, a0, a1) <= eps
                        || point_segment_distance(a0, b0, b1) <= eps
                    {
                        return Err(Error::InvalidInput(format!(
                            "segments {i} and {j} overlap beyond their shared vertex"
                        )));
                    }
                } else if segment_segment_distance(a0, a1, b0, b1) <= eps {
                    return Err(Error::InvalidInput(format!("segments {i} and {j} intersect")));
                }
            }
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn segment_count(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn segment(&self, i: usize) -> (&[f64], &[f64]) {
        (&self.vertices[i], &self.vertices[i + 1])
    }

    pub fn total_length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Parameter of vertex `i` (arc-length fraction).
    pub fn vertex_param(&self, i: usize) -> f64 {
        self.cum[i] / self.total_length()
    }

    /// Locate parameter `t` as (segment index, local parameter).
    fn locate(&self, t: f64) -> (usize, f64) {
        let s = t.clamp(0.0, 1.0) * self.total_length();
        let n = self.segment_count();
        let mut i = match self.cum.binary_search_by(|c| c.partial_cmp(&s).unwrap()) {
            Ok(k) => k,
            Err(k) => k.saturating_sub(1),
        };
        if i >= n {
            i = n - 1;
        }
        let l = self.cum[i + 1] - self.cum[i];
        ((i), ((s - self.cum[i]) / l).clamp(0.0, 1.0))
    }

    pub fn point_at(&self, t: f64) -> Vec<f64> {
        let (i, u) = self.locate(t);
        let (a, b) = self.segment(i);
        a.iter().zip(b).map(|(x, y)| x + u * (y - x)).collect()
    }

    pub fn start(&self) -> &[f64] {
        &self.vertices[0]
    }

    pub fn end(&self) -> &[f64] {
        self.vertices.last().unwrap()
    }
}

// ---------------------------------------------------------------------------
// Path measures
// ---------------------------------------------------------------------------

/// Rule assigning mu-mass along a path.
#[derive(Clone, Debug)]
pub enum PathMeasure {
    /// Euclidean arc length, `d(mu) = ds`.
    ArcLength,
    /// Weighted arc length, `d(mu) = omega ds`.
    Weighted(Field),
    /// Total variation of the last coordinate; on a monotone segment this is
    /// its height. Horizontal segments carry zero mass and are rejected by
    /// the mass-parametrization validator.
    ParabolicHeight,
    /// Tabulated density against arc length: piecewise-linear interpolation
    /// of `(coordinate, density)` pairs read off the given axis.
    Density { axis: usize, table: Vec<(f64, f64)> },
}

impl PathMeasure {
    pub fn weighted(omega: Field) -> Self {
        PathMeasure::Weighted(omega)
    }

    pub fn density(axis: usize, table: Vec<(f64, f64)>) -> Result<Self> {
        if table.len() < 2 {
            return Err(Error::InvalidInput("density table needs at least two knots".into()));
        }
        for w in table.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidInput("density table must increase strictly".into()));
            }
        }
        if table.iter().any(|(x, v)| !x.is_finite() || !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("density table values must be finite and >= 0".into()));
        }
        Ok(PathMeasure::Density { axis, table })
    }

    fn density_at(table: &[(f64, f64)], x: f64) -> f64 {
        if x <= table[0].0 {
            return table[0].1;
        }
        if x >= table[table.len() - 1].0 {
            return table[table.len() - 1].1;
        }
        let j = table.partition_point(|(t, _)| *t <= x);
        let (x0, v0) = table[j - 1];
        let (x1, v1) = table[j];
        v0 + (v1 - v0) * (x - x0) / (x1 - x0)
    }
}

/// mu-mass of the piece `[u0, u1]` (local parameters) of segment `i`.
fn segment_mass(
    path: &Polyline,
    i: usize,
    u0: f64,
    u1: f64,
    measure: &PathMeasure,
) -> Result<f64> {
    debug_assert!(u0 <= u1);
    let (a, b) = path.segment(i);
    let seg_len = euclid(a, b);
    match measure {
        PathMeasure::ArcLength => Ok(seg_len * (u1 - u0)),
        PathMeasure::ParabolicHeight => {
            let dv = (b[b.len() - 1] - a[a.len() - 1]).abs();
            Ok(dv * (u1 - u0))
        }
        PathMeasure::Weighted(omega) => {
            let mut x = vec![0.0; a.len()];
            quad::adaptive_midpoint(
                |u| {
                    for d in 0..a.len() {
                        x[d] = a[d] + u * (b[d] - a[d]);
                    }
                    omega.eval_checked(&x).map(|w| w * seg_len)
                },
                u0,
                u1,
                QUAD_REL,
                1e-300,
            )
        }
        PathMeasure::Density { axis, table } => {
            if *axis >= a.len() {
                return Err(Error::DimensionMismatch { expected: a.len(), got: *axis + 1 });
            }
            quad::adaptive_midpoint(
                |u| {
                    let c = a[*axis] + u * (b[*axis] - a[*axis]);
                    Ok(PathMeasure::density_at(table, c) * seg_len)
                },
                u0,
                u1,
                QUAD_REL,
                1e-300,
            )
        }
    }
}

/// Total mu-mass `h(path) = mu(Im path)`.
pub fn mu_length(path: &Polyline, measure: &PathMeasure) -> Result<f64> {
    let mut acc = 0.0;
    for i in 0..path.segment_count() {
        acc += segment_mass(path, i, 0.0, 1.0, measure)?;
    }
    Ok(acc)
}

/// Cumulative mass `nu(t)`: the mu-mass of the initial piece up to `t`.
pub fn nu_at(path: &Polyline, measure: &PathMeasure, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("parameter {t} outside [0, 1]")));
    }
    let (seg, u) = path.locate(t);
    let mut acc = 0.0;
    for i in 0..seg {
        acc += segment_mass(path, i, 0.0, 1.0, measure)?;
    }
    if u > 0.0 {
        acc += segment_mass(path, seg, 0.0, u, measure)?;
    }
    Ok(acc)
}

/// Restriction of the path to `[s, t]` with interpolated endpoints.
pub fn subpath(path: &Polyline, s: f64, t: f64) -> Result<Polyline> {
    if !(0.0 <= s && s < t && t <= 1.0) {
        return Err(Error::InvalidInput(format!("bad subpath range [{s}, {t}]")));
    }
    let scale = path
        .vertices
        .iter()
        .flat_map(|v| v.iter())
        .fold(1.0f64, |acc, x| acc.max(x.abs()));
    let eps = 1e-12 * scale;
    let mut vertices = vec![path.point_at(s)];
    for (i, v) in path.vertices().iter().enumerate() {
        let p = path.vertex_param(i);
        if p > s && p < t && euclid(vertices.last().unwrap(), v) > eps {
            vertices.push(v.clone());
        }
    }
    let endpoint = path.point_at(t);
    if euclid(vertices.last().unwrap(), &endpoint) > eps {
        vertices.push(endpoint);
    } else if vertices.len() >= 2 {
        *vertices.last_mut().unwrap() = endpoint;
    } else {
        return Err(Error::InvalidInput(format!("subpath [{s}, {t}] is degenerate")));
    }
    Ok(Polyline::new_unchecked(vertices))
}

/// The `n` equal-parameter pieces of a path.
pub fn dyadic_pieces(path: &Polyline, n: usize) -> Result<Vec<Polyline>> {
    (0..n)
        .map(|i| subpath(path, i as f64 / n as f64, (i + 1) as f64 / n as f64))
        .collect()
}

/// Line integral of `g` against the path measure.
pub fn path_integral(g: &Field, path: &Polyline, measure: &PathMeasure) -> Result<f64> {
    path_integral_tol(g, path, measure, QUAD_REL)
}

/// Like [`path_integral`] with an explicit relative quadrature tolerance,
/// for integrands too rough for the default refinement cap (indicators,
/// jumps).
pub fn path_integral_tol(
    g: &Field,
    path: &Polyline,
    measure: &PathMeasure,
    rel_tol: f64,
) -> Result<f64> {
    let mut acc = 0.0;
    for i in 0..path.segment_count() {
        let (a, b) = path.segment(i);
        let seg_len = euclid(a, b);
        let mut x = vec![0.0; a.len()];
        let piece = match measure {
            PathMeasure::ArcLength => quad::adaptive_midpoint(
                |u| {
                    for d in 0..a.len() {
                        x[d] = a[d] + u * (b[d] - a[d]);
                    }
                    g.eval_checked(&x).map(|v| v * seg_len)
                },
                0.0,
                1.0,
                rel_tol,
                1e-300,
            )?,
            PathMeasure::Weighted(omega) => quad::adaptive_midpoint(
                |u| {
                    for d in 0..a.len() {
                        x[d] = a[d] + u * (b[d] - a[d]);
                    }
                    let w = omega.eval_checked(&x)?;
                    g.eval_checked(&x).map(|v| v * w * seg_len)
                },
                0.0,
                1.0,
                rel_tol,
                1e-300,
            )?,
            PathMeasure::ParabolicHeight => {
                let dv = (b[b.len() - 1] - a[a.len() - 1]).abs();
                quad::adaptive_midpoint(
                    |u| {
                        for d in 0..a.len() {
                            x[d] = a[d] + u * (b[d] - a[d]);
                        }
                        g.eval_checked(&x).map(|v| v * dv)
                    },
                    0.0,
                    1.0,
                    rel_tol,
                    1e-300,
                )?
            }
            PathMeasure::Density { axis, table } => quad::adaptive_midpoint(
                |u| {
                    for d in 0..a.len() {
                        x[d] = a[d] + u * (b[d] - a[d]);
                    }
                    let w = PathMeasure::density_at(table, x[*axis]);
                    g.eval_checked(&x).map(|v| v * w * seg_len)
                },
                0.0,
                1.0,
                rel_tol,
                1e-300,
            )?,
        };
        acc += piece;
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Mass parametrization
// ---------------------------------------------------------------------------

/// A path together with its mass parametrization: the cumulative-mass table
/// is cached at construction, and `eval(s)` recovers the point at mass `s`
/// by monotone inversion.
#[derive(Clone, Debug)]
pub struct ParametrizedPath {
    base: Polyline,
    measure: PathMeasure,
    h: f64,
    knots_t: Vec<f64>,
    knots_nu: Vec<f64>,
}

/// Build the mass parametrization of a path. Fails with a
/// [`Error::GammaMuViolation`] when some non-trivial piece carries zero
/// mass (for instance a horizontal segment under the parabolic height).
pub fn parametrize(path: &Polyline, measure: &PathMeasure) -> Result<ParametrizedPath> {
    let mut knots_t = vec![0.0];
    let mut knots_nu = vec![0.0];
    let total_len = path.total_length();
    for i in 0..path.segment_count() {
        let t_lo = path.vertex_param(i);
        let t_hi = path.vertex_param(i + 1);
        for j in 1..=KNOTS_PER_SEGMENT {
            let u0 = (j - 1) as f64 / KNOTS_PER_SEGMENT as f64;
            let u1 = j as f64 / KNOTS_PER_SEGMENT as f64;
            let mass = segment_mass(path, i, u0, u1, measure)?;
            if mass <= 0.0 {
                let t = t_lo + u0 * (t_hi - t_lo);
                return Err(Error::GammaMuViolation(format!(
                    "piece near parameter {t:.6} (length {:.3e}) has zero mass",
                    (u1 - u0) * (path.cum[i + 1] - path.cum[i]) / total_len
                )));
            }
            knots_t.push(t_lo + u1 * (t_hi - t_lo));
            knots_nu.push(knots_nu.last().unwrap() + mass);
        }
    }
    let h = *knots_nu.last().unwrap();
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::GammaMuViolation(format!("total mass {h} is not positive")));
    }
    Ok(ParametrizedPath { base: path.clone(), measure: measure.clone(), h, knots_t, knots_nu })
}

impl ParametrizedPath {
    pub fn base(&self) -> &Polyline {
        &self.base
    }

    pub fn measure(&self) -> &PathMeasure {
        &self.measure
    }

    /// Total mass `h`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Cumulative mass at each vertex of the base polyline. Integrands
    /// composed with the mass chart are smooth between consecutive entries,
    /// so quadratures should split there.
    pub fn vertex_masses(&self) -> Vec<f64> {
        (0..self.base.vertices().len())
            .map(|i| self.knots_nu[i * KNOTS_PER_SEGMENT])
            .collect()
    }

    /// Cumulative mass at parameter `t`, via the cached table plus local
    /// quadrature.
    pub fn nu(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidInput(format!("parameter {t} outside [0, 1]")));
        }
        let j = self.knots_t.partition_point(|k| *k <= t).saturating_sub(1);
        let t_lo = self.knots_t[j];
        if t <= t_lo {
            return Ok(self.knots_nu[j]);
        }
        Ok(self.knots_nu[j] + self.mass_between(t_lo, t)?)
    }

    /// Inverse of `nu`: the parameter at cumulative mass `s`, to parameter
    /// tolerance 1e-10 (bisection on the cached bracket).
    pub fn param_of_mass(&self, s: f64) -> Result<f64> {
        if !(-1e-12 * self.h..=self.h * (1.0 + 1e-12)).contains(&s) {
            return Err(Error::InvalidInput(format!("mass {s} outside [0, {}]", self.h)));
        }
        let s = s.clamp(0.0, self.h);
        let j = match self.knots_nu.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
            Ok(k) => return Ok(self.knots_t[k]),
            Err(k) => k.saturating_sub(1),
        };
        let j = j.min(self.knots_t.len() - 2);
        let (mut lo, mut hi) = (self.knots_t[j], self.knots_t[j + 1]);
        let target = s - self.knots_nu[j];
        while hi - lo > PARAM_TOL {
            let mid = 0.5 * (lo + hi);
            if self.mass_between(self.knots_t[j], mid)? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// The mass-parametrized path evaluated at `s` in `[0, h]`.
    pub fn eval(&self, s: f64) -> Result<Vec<f64>> {
        Ok(self.base.point_at(self.param_of_mass(s)?))
    }

    fn mass_between(&self, t0: f64, t1: f64) -> Result<f64> {
        if t1 <= t0 {
            return Ok(0.0);
        }
        let (seg0, u0) = self.base.locate(t0);
        let (seg1, u1) = self.base.locate(t1);
        if seg0 == seg1 {
            return segment_mass(&self.base, seg0, u0, u1, &self.measure);
        }
        let mut acc = segment_mass(&self.base, seg0, u0, 1.0, &self.measure)?;
        for i in (seg0 + 1)..seg1 {
            acc += segment_mass(&self.base, i, 0.0, 1.0, &self.measure)?;
        }
        acc += segment_mass(&self.base, seg1, 0.0, u1, &self.measure)?;
        Ok(acc)
    }
}

// ---------------------------------------------------------------------------
// Cell incidence
// ---------------------------------------------------------------------------

/// Clip the segment `a + u (b - a)` against an axis-aligned box, returning
/// the local parameter interval inside it.
fn clip_segment_to_box(
    a: &[f64],
    b: &[f64],
    lo: impl Fn(usize) -> f64,
    hi: impl Fn(usize) -> f64,
) -> Option<(f64, f64)> {
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for d in 0..a.len() {
        let p = b[d] - a[d];
        if p.abs() < 1e-300 {
            if a[d] < lo(d) || a[d] > hi(d) {
                return None;
            }
            continue;
        }
        let (ta, tb) = {
            let x = (lo(d) - a[d]) / p;
            let y = (hi(d) - a[d]) / p;
            if x <= y {
                (x, y)
            } else {
                (y, x)
            }
        };
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 >= t1 {
            return None;
        }
    }
    Some((t0, t1))
}

/// Per-cell mu-mass of the path: the sparse incidence row `w[c] = mu(path
/// inside cell c)`. The row sums to `mu_length(path)`; a piece of the path
/// lying in no cell is an out-of-domain error carrying the exit point.
pub fn incidence(
    path: &Polyline,
    grid: &GroundGrid,
    measure: &PathMeasure,
) -> Result<Vec<(usize, f64)>> {
    if path.dimension() != grid.dimension() {
        return Err(Error::DimensionMismatch { expected: grid.dimension(), got: path.dimension() });
    }
    let mut row: BTreeMap<usize, f64> = BTreeMap::new();
    for i in 0..path.segment_count() {
        let (a, b) = path.segment(i);
        let mut clips: Vec<(f64, f64, usize)> = Vec::new();
        for (ci, cell) in grid.cells().iter().enumerate() {
            if let Some((u0, u1)) = clip_segment_to_box(a, b, |d| cell.lo(d), |d| cell.hi(d)) {
                clips.push((u0, u1, ci));
            }
        }
        let mut cuts: Vec<f64> = vec![0.0, 1.0];
        for (u0, u1, _) in &clips {
            cuts.push(u0.clamp(0.0, 1.0));
            cuts.push(u1.clamp(0.0, 1.0));
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
        for w in cuts.windows(2) {
            let (u0, u1) = (w[0], w[1]);
            if u1 - u0 < 1e-14 {
                continue;
            }
            let mid = 0.5 * (u0 + u1);
            let covering = clips
                .iter()
                .find(|(c0, c1, _)| *c0 - 1e-12 <= mid && mid <= *c1 + 1e-12)
                .map(|(_, _, ci)| *ci);
            let ci = match covering {
                Some(ci) => ci,
                None => {
                    let point: Vec<f64> =
                        a.iter().zip(b).map(|(x, y)| x + mid * (y - x)).collect();
                    return Err(Error::OutOfDomain { point });
                }
            };
            let mass = segment_mass(path, i, u0, u1, measure)?;
            *row.entry(ci).or_insert(0.0) += mass;
        }
    }
    Ok(row.into_iter().collect())
}

// ---------------------------------------------------------------------------
// Families
// ---------------------------------------------------------------------------

/// Two-segment tent joining `a` to `b` with line slopes `+k` then `-k`
/// (or the reverse when `upward` is false).
pub fn slope_tent(a: &[f64], b: &[f64], k: f64, upward: bool) -> Result<Polyline> {
    if a.len() != 2 || b.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: a.len().max(b.len()) });
    }
    let (s1, s2) = if upward { (k, -k) } else { (-k, k) };
    let mx = (b[1] - a[1] + s1 * a[0] - s2 * b[0]) / (s1 - s2);
    let my = a[1] + s1 * (mx - a[0]);
    Polyline::new(vec![a.to_vec(), vec![mx, my], b.to_vec()])
}

/// Generate `count` injective polygonal paths, each made of two segments of
/// line slope exactly `+k` and `-k`, joining random endpoint pairs inside
/// `region` and staying inside it. Deterministic in `rng_seed`.
pub fn generate_slope_family(
    k: f64,
    region: &[(f64, f64)],
    count: usize,
    rng_seed: u64,
) -> Result<Vec<Polyline>> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidInput(format!("slope must be positive, got {k}")));
    }
    if region.len() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: region.len() });
    }
    let (x0, x1) = region[0];
    let (y0, y1) = region[1];
    if !(x1 > x0 && y1 > y0) {
        return Err(Error::InvalidInput("degenerate region".into()));
    }
    let width = x1 - x0;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::with_capacity(count);
    let max_attempts = 1000 * count.max(1);
    let inside = |p: &[f64]| p[0] >= x0 && p[0] <= x1 && p[1] >= y0 && p[1] <= y1;
    for _ in 0..max_attempts {
        if out.len() == count {
            break;
        }
        let a = [rng.random_range(x0..x1), rng.random_range(y0..y1)];
        let b = [rng.random_range(x0..x1), rng.random_range(y0..y1)];
        if (a[0] - b[0]).abs() < 1e-6 * width {
            continue;
        }
        let first_upward = rng.random_bool(0.5);
        for upward in [first_upward, !first_upward] {
            let Ok(tent) = slope_tent(&a, &b, k, upward) else { continue };
            let m = &tent.vertices()[1];
            if !inside(m) {
                continue;
            }
            if (m[0] - a[0]).abs() < 1e-9 * width || (m[0] - b[0]).abs() < 1e-9 * width {
                continue;
            }
            out.push(tent);
            break;
        }
    }
    if out.len() < count {
        return Err(Error::RegionTooThin { k });
    }
    Ok(out)
}

/// The dyadic subintervals of `[a, b]` down to `max_level`, as 1-D paths:
/// level `l` contributes the `2^l` intervals of length `(b - a) / 2^l`.
pub fn dyadic_interval_family(a: f64, b: f64, max_level: u32) -> Result<Vec<Polyline>> {
    if a.is_nan() || b.is_nan() || b <= a {
        return Err(Error::InvalidInput(format!("bad interval [{a}, {b}]")));
    }
    let mut out = Vec::new();
    for level in 0..=max_level {
        let n = 1u64 << level;
        let step = (b - a) / n as f64;
        for i in 0..n {
            let lo = a + i as f64 * step;
            out.push(Polyline::new(vec![vec![lo], vec![lo + step]])?);
        }
    }
    Ok(out)
}
