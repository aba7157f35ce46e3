//! Independent test oracles. Everything here is deliberately naive: brute
//! force, Monte Carlo, or textbook formulas, with no code shared with the
//! implementations under test.
//!
//! Frozen expected values produced by these oracles (asserted in the unit
//! tests that cite them):
//!
//! * area functional of the unit translation at c = 0: the region
//!   {(x, y) : x < 0 < y < x + 1} is a right triangle with legs 1, so the
//!   oracle converges to 1/2;
//! * area functional of the doubling map at c = 1: the region
//!   {(x, y) : x < 1 < y < 2x} is a right triangle with vertices
//!   (1/2, 1), (1, 1), (1, 2), so the oracle converges to 1/4;
//! * weighted area functional of the two-sided unit translation system at
//!   any c: 1/2 * 1/2 + 1/2 * 1/2 = 1/2;
//! * weighted area functional of the affine four-generator system at c = 1:
//!   1/4 * (1/4 + 1/4 + 1/2 + 1/2) = 3/8.

use rand::Rng;

/// Monte Carlo measure of {(x, y) : x < c < y, y < g(x) or y < g_inv(x)}
/// by rejection sampling in the box [c - span, c] x [c, c + span].
///
/// `span` must be large enough that the region lies inside the box; for the
/// maps used in tests a span of a few units suffices. Standard error is
/// span^2 * sqrt(p(1-p)/n).
pub fn mc_region_area(
    g: impl Fn(f64) -> f64,
    g_inv: impl Fn(f64) -> f64,
    c: f64,
    span: f64,
    n: usize,
    rng: &mut impl Rng,
) -> f64 {
    let mut hits = 0usize;
    for _ in 0..n {
        let x = c - span * rng.gen::<f64>();
        let y = c + span * rng.gen::<f64>();
        if y < g(x) || y < g_inv(x) {
            hits += 1;
        }
    }
    span * span * (hits as f64) / (n as f64)
}

/// Standard error of a binomial fraction estimate.
pub fn binomial_sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Midpoint-rule integral of f over [a, b]; crude oracle for exact
/// piecewise integrals (accurate to O(h^2) away from kinks, O(h) overall).
pub fn midpoint_integral(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
    let h = (b - a) / steps as f64;
    (0..steps).map(|i| f(a + (i as f64 + 0.5) * h) * h).sum()
}
