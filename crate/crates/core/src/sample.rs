//! Seeded, reproducible generation of random inputs: point sets, bounded grid
//! functions, and sign functions. Every experiment records its seed; the
//! generator of record across the crate is ChaCha8.

use rand::seq::index;
use rand::Rng;

use crate::field::{Field, FieldElement};
use crate::fourier::{GridFunction, LineFunction};
use crate::geometry::{GridSet, ParaboloidSet, Point2};
use crate::scalar::{real_from_f64, Real};

fn cell_point(f: &Field, cell: usize) -> Point2 {
    let q = f.qs();
    Point2::new(
        FieldElement((cell / q) as u32),
        FieldElement((cell % q) as u32),
    )
}

/// Uniform random subset of F_q^2 of the given size, without replacement.
pub fn grid_subset(f: &Field, size: usize, rng: &mut impl Rng) -> GridSet {
    let cells = f.qs() * f.qs();
    let size = size.min(cells);
    let picks = index::sample(rng, cells, size);
    GridSet::from_points(f.clone(), picks.iter().map(|c| cell_point(f, c)))
}

/// Uniform random subset of the paraboloid of the given size.
pub fn paraboloid_subset(f: &Field, size: usize, rng: &mut impl Rng) -> ParaboloidSet {
    let cells = f.qs() * f.qs();
    let size = size.min(cells);
    let picks = index::sample(rng, cells, size);
    ParaboloidSet::from_base_points(f.clone(), picks.iter().map(|c| cell_point(f, c)))
}

/// Includes each paraboloid point independently with probability num/den.
pub fn paraboloid_bernoulli(f: &Field, num: u64, den: u64, rng: &mut impl Rng) -> ParaboloidSet {
    assert!(num <= den && den > 0);
    let mut base = Vec::new();
    for x in f.elements() {
        for y in f.elements() {
            if rng.random_range(0..den) < num {
                base.push(Point2::new(x, y));
            }
        }
    }
    ParaboloidSet::from_base_points(f.clone(), base)
}

/// Random function F_q -> {-1, +1}.
pub fn sign_line<R: Real>(f: &Field, rng: &mut impl Rng) -> LineFunction<R> {
    let one = R::one();
    let values = (0..f.qs())
        .map(|_| if rng.random::<bool>() { one } else { -one })
        .collect();
    LineFunction::from_values(f.clone(), values)
}

/// Random function F_q^2 -> [-1, 1].
pub fn bounded_grid<R: Real>(f: &Field, rng: &mut impl Rng) -> GridFunction<R> {
    let values = (0..f.qs() * f.qs())
        .map(|_| real_from_f64::<R>(rng.random_range(-1.0..=1.0)))
        .collect();
    GridFunction::from_values(f.clone(), values)
}
