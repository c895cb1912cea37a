use super::*;
use crate::field::Field;
use crate::metric::MetricDescriptor;
use crate::solver::single_constraint_optimum;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

const TF: f64 = 1e-9;
const TG: f64 = 1e-8;

fn grid_1d(a: f64, b: f64, n: usize) -> GroundGrid {
    GroundGrid::uniform(&[(a, b)], &[n], MetricDescriptor::Euclidean, &Field::constant(1.0))
        .unwrap()
}

fn grid_2d(n: usize) -> GroundGrid {
    GroundGrid::uniform(
        &[(0.0, 1.0), (0.0, 1.0)],
        &[n, n],
        MetricDescriptor::Euclidean,
        &Field::constant(1.0),
    )
    .unwrap()
}

fn random_segments(count: usize, seed: u64, lo: f64, hi: f64) -> Vec<Polyline> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let a = vec![rng.random_range(lo..hi), rng.random_range(lo..hi)];
        let b = vec![rng.random_range(lo..hi), rng.random_range(lo..hi)];
        if (a[0] - b[0]).abs() + (a[1] - b[1]).abs() < 0.1 {
            continue;
        }
        out.push(Polyline::new(vec![a, b]).unwrap());
    }
    out
}

#[test]
fn empty_family_has_zero_modulus() {
    let grid = grid_1d(0.0, 1.0, 4);
    let r = modulus_p(&[], &grid, &PathMeasure::ArcLength, 2.0, TF, TG).unwrap();
    assert_eq!(r.value, ModulusValue::Finite(0.0));
}

#[test]
fn single_tube_value() {
    // one straight path of mass L through one cell of measure m: m / L^2
    let grid = grid_1d(0.0, 1.0, 1);
    let path = Polyline::new(vec![vec![0.1], vec![0.9]]).unwrap();
    let r = modulus_p(
        &[path],
        &grid,
        &PathMeasure::ArcLength,
        2.0,
        TF,
        TG,
    )
    .unwrap();
    let value = r.value.expect_finite();
    let expected = 1.0 / (0.8f64 * 0.8);
    assert!(
        (value - expected).abs() <= 1e-6 * expected,
        "got {value}, expected {expected}"
    );
    // matches the closed-form single-constraint optimum
    let (_, oracle) = single_constraint_optimum(&[0.8], 1.0, &[1.0], 2.0).unwrap();
    assert!((value - oracle).abs() <= 1e-6 * oracle);
    assert!(r.per_path_mass.iter().all(|m| *m >= 1.0 - TF));
    // value recomputes from the density
    let recomputed: f64 = grid
        .cells()
        .iter()
        .zip(&r.extremal_g)
        .map(|(c, g)| c.measure * g * g)
        .sum();
    assert!((recomputed - value).abs() <= 1e-12 * value.max(1.0));
}

#[test]
fn monotone_under_family_inclusion() {
    let grid = grid_2d(6);
    let family2 = random_segments(8, 21, 0.05, 0.95);
    let family1 = &family2[..4];
    let m1 = modulus_p(family1, &grid, &PathMeasure::ArcLength, 2.0, TF, TG)
        .unwrap()
        .value
        .expect_finite();
    let m2 = modulus_p(&family2, &grid, &PathMeasure::ArcLength, 2.0, TF, TG)
        .unwrap()
        .value
        .expect_finite();
    assert!(m1 <= m2 + 2.0 * TG * (1.0 + m2));
}

#[test]
fn subadditive_on_unions() {
    let grid = grid_2d(6);
    for seed in 0..10u64 {
        let fam1 = random_segments(4, 100 + seed, 0.05, 0.95);
        let fam2 = random_segments(4, 200 + seed, 0.05, 0.95);
        let union: Vec<Polyline> = fam1.iter().chain(&fam2).cloned().collect();
        let p = 1.5 + (seed as f64) * 0.2;
        let a = modulus_p(&fam1, &grid, &PathMeasure::ArcLength, p, TF, TG)
            .unwrap()
            .value
            .expect_finite();
        let b = modulus_p(&fam2, &grid, &PathMeasure::ArcLength, p, TF, TG)
            .unwrap()
            .value
            .expect_finite();
        let u = modulus_p(&union, &grid, &PathMeasure::ArcLength, p, TF, TG)
            .unwrap()
            .value
            .expect_finite();
        assert!(u <= a + b + 3.0 * TG * (1.0 + a + b), "union {u} vs {a} + {b}");
    }
}

#[test]
fn additive_on_disjoint_supports() {
    // families confined to the left and right halves of a split grid
    let grid = grid_1d(0.0, 2.0, 8);
    let left = vec![Polyline::new(vec![vec![0.1], vec![0.9]]).unwrap()];
    let right = vec![Polyline::new(vec![vec![1.1], vec![1.9]]).unwrap()];
    let union: Vec<Polyline> = left.iter().chain(&right).cloned().collect();
    let a = modulus_p(&left, &grid, &PathMeasure::ArcLength, 2.0, TF, TG)
        .unwrap()
        .value
        .expect_finite();
    let b = modulus_p(&right, &grid, &PathMeasure::ArcLength, 2.0, TF, TG)
        .unwrap()
        .value
        .expect_finite();
    let u = modulus_p(&union, &grid, &PathMeasure::ArcLength, 2.0, TF, TG)
        .unwrap()
        .value
        .expect_finite();
    assert!((u - (a + b)).abs() <= 1e-5 * (a + b), "{u} vs {}", a + b);
}

#[test]
fn overflow_families_have_smaller_modulus() {
    // every path of the big family contains a middle-third subpath from the
    // small family, so an admissible density for the small family is
    // admissible for the big one
    let grid = grid_2d(6);
    let big = random_segments(6, 7, 0.05, 0.95);
    let small: Vec<Polyline> = big
        .iter()
        .map(|p| crate::path::subpath(p, 1.0 / 3.0, 2.0 / 3.0).unwrap())
        .collect();
    let mb = modulus_p(&big, &grid, &PathMeasure::ArcLength, 2.0, TF, TG)
        .unwrap()
        .value
        .expect_finite();
    let ms = modulus_p(&small, &grid, &PathMeasure::ArcLength, 2.0, TF, TG)
        .unwrap()
        .value
        .expect_finite();
    assert!(mb <= ms + 2.0 * TG * (1.0 + ms), "{mb} vs {ms}");
}

#[test]
fn scaling_the_measure_scales_the_modulus() {
    let grid = grid_2d(5);
    let family = random_segments(5, 3, 0.05, 0.95);
    let p = 2.0;
    let base = modulus_p(&family, &grid, &PathMeasure::ArcLength, p, TF, TG)
        .unwrap()
        .value
        .expect_finite();
    for s in [0.5f64, 2.0, 4.0] {
        let scaled_measure = PathMeasure::weighted(Field::constant(s));
        let v = modulus_p(&family, &grid, &scaled_measure, p, TF, TG)
            .unwrap()
            .value
            .expect_finite();
        assert!(
            (v - s.powf(-p) * base).abs() <= 1e-5 * (1.0 + base),
            "s = {s}: {v} vs {}",
            s.powf(-p) * base
        );
    }
}

#[test]
fn zero_mass_path_forces_infinity() {
    // horizontal segment has zero parabolic mass, so no density is admissible
    let grid = grid_2d(4);
    let flat = Polyline::new(vec![vec![0.1, 0.5], vec![0.9, 0.5]]).unwrap();
    let slanted = Polyline::new(vec![vec![0.1, 0.1], vec![0.9, 0.9]]).unwrap();
    let r = modulus_p(
        &[slanted, flat],
        &grid,
        &PathMeasure::ParabolicHeight,
        2.0,
        TF,
        TG,
    )
    .unwrap();
    assert_eq!(r.value, ModulusValue::Infinite);
    assert_eq!(r.offending_path, Some(1));
}

// -- witness bounds ------------------------------------------------------------

#[test]
fn extremal_density_is_its_own_witness() {
    let grid = grid_2d(5);
    let family = random_segments(5, 13, 0.05, 0.95);
    let r = modulus_p(&family, &grid, &PathMeasure::ArcLength, 2.0, TF, TG).unwrap();
    let value = r.value.expect_finite();
    let bound =
        modulus_bound_from_witness(&r.extremal_g, &family, &grid, &PathMeasure::ArcLength, 1.0, 2.0)
            .unwrap();
    assert!((bound - value).abs() <= 1e-9 * (1.0 + value));
    // doubling the witness and the level changes nothing
    let doubled: Vec<f64> = r.extremal_g.iter().map(|v| 2.0 * v).collect();
    let bound2 =
        modulus_bound_from_witness(&doubled, &family, &grid, &PathMeasure::ArcLength, 2.0, 2.0)
            .unwrap();
    assert!((bound2 - bound).abs() <= 1e-12 * (1.0 + bound));
}

#[test]
fn insufficient_witnesses_are_named() {
    let grid = grid_2d(4);
    let family = random_segments(3, 5, 0.05, 0.95);
    let g = vec![1e-6; grid.len()];
    match modulus_bound_from_witness(&g, &family, &grid, &PathMeasure::ArcLength, 1.0, 2.0) {
        Err(Error::WitnessInvalid { path, mass, required }) => {
            assert!(path < 3);
            assert!(mass < required);
        }
        other => panic!("expected witness failure, got {other:?}"),
    }
}

#[test]
fn null_certification_via_tiny_measure_cells() {
    // a family supported on cells of measure 1e-12 admits witness bounds
    // below any epsilon: large densities cost almost nothing there
    let mut cells = Vec::new();
    for i in 0..4 {
        cells.push(crate::grid::Cell {
            center: vec![0.125 + 0.25 * i as f64],
            side: 0.25,
            measure: if i < 2 { 1e-12 } else { 1.0 },
        });
    }
    let grid = GroundGrid::new(1, cells, MetricDescriptor::Euclidean).unwrap();
    let family = vec![Polyline::new(vec![vec![0.05], vec![0.45]]).unwrap()];
    // witness concentrated on the tiny-measure cells
    let g = vec![1e3, 1e3, 0.0, 0.0];
    let bound =
        modulus_bound_from_witness(&g, &family, &grid, &PathMeasure::ArcLength, 1.0, 2.0).unwrap();
    assert!(bound < 1e-5, "bound {bound} should certify a null family");
    // the certificate is invariant under joint witness/level scaling
    let g_bigger: Vec<f64> = g.iter().map(|v| 1e3 * v).collect();
    let b2 = modulus_bound_from_witness(
        &g_bigger,
        &family,
        &grid,
        &PathMeasure::ArcLength,
        1e3,
        2.0,
    )
    .unwrap();
    assert!((b2 - bound).abs() <= 1e-12 * bound.max(1e-30));
}
