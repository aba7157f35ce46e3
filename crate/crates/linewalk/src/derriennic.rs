//! Drift-removing coordinate change built from a stationary measure.
//!
//! Integrating the measure gives a monotone chart D (a signed cumulative
//! mass function): in the new coordinate y = D(x) the pushed-forward
//! measure is close to Lebesgue, the conjugated generators D∘g∘D⁻¹ have
//! zero drift, each is Lipschitz with constant at most the reciprocal of
//! its weight, and displacements are uniformly bounded by a function of the
//! averaged area functional. This module builds the chart from an empirical
//! pool, conjugates a generator system through it as exact piecewise-linear
//! fits, and checks each of those conclusions numerically.
//!
//! Charts built from Monte Carlo pools carry sampling noise; the drift
//! check therefore compares against a bootstrap spread over charts built
//! from resampled pools rather than against zero.

use rand::Rng;
use thiserror::Error;

use crate::homeo::{rat, rat_from_f64, rat_int, rat_to_f64, root2_surrogate, PLHomeo, Rat};
use crate::stationary::EmpiricalRadonMeasure;
use crate::stream::StreamFactory;
use crate::walkgroup::{Generator, GeneratorSystem, SystemError, ValidationReport};

#[derive(Debug, Error)]
pub enum ChartError {
    #[error("chart needs a pool with at least two distinct positions")]
    Degenerate,
    #[error("anchor {anchor} lies outside the sampled hull [{lo}, {hi}]")]
    AnchorOutsideHull { anchor: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Error)]
pub enum ConjugateError {
    #[error("monotone fit degenerated to fewer than two nodes even after grid refinement")]
    DegenerateFit,
    #[error("self-paired generator {name} did not conjugate to an involution")]
    SelfPairedNonInvolutive { name: String },
    #[error(transparent)]
    System(#[from] SystemError),
}

/// Monotone piecewise-linear coordinate change built by integrating an
/// empirical measure: node values are cumulative masses, shifted so the
/// anchor maps to 0 exactly, extended affinely beyond the sampled hull with
/// slopes matching the boundary density.
#[derive(Clone, Debug)]
pub struct DerriennicChart {
    xs: Vec<f64>,
    ys: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
    anchor: f64,
}

impl DerriennicChart {
    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    /// Sampled hull in original coordinates.
    pub fn hull(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().expect("nonempty"))
    }

    /// Chart image of the hull.
    pub fn image_hull(&self) -> (f64, f64) {
        (self.ys[0], *self.ys.last().expect("nonempty"))
    }

    pub fn node_count(&self) -> usize {
        self.xs.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    /// Largest gap between adjacent node positions: the x-resolution below
    /// which the chart cannot distinguish points.
    pub fn resolution_x(&self) -> f64 {
        self.xs
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    /// Largest single mass step: the y-resolution of the chart image.
    pub fn resolution_y(&self) -> f64 {
        self.ys
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let m = self.xs.len();
        if x < self.xs[0] {
            return self.ys[0] - (self.xs[0] - x) * self.left_slope;
        }
        if x > self.xs[m - 1] {
            return self.ys[m - 1] + (x - self.xs[m - 1]) * self.right_slope;
        }
        let j = self.xs.partition_point(|&p| p <= x);
        if j == 0 {
            return self.ys[0];
        }
        if j == m {
            return self.ys[m - 1];
        }
        let t = (x - self.xs[j - 1]) / (self.xs[j] - self.xs[j - 1]);
        self.ys[j - 1] + t * (self.ys[j] - self.ys[j - 1])
    }

    pub fn eval_inverse(&self, y: f64) -> f64 {
        let m = self.ys.len();
        if y < self.ys[0] {
            return self.xs[0] - (self.ys[0] - y) / self.left_slope;
        }
        if y > self.ys[m - 1] {
            return self.xs[m - 1] + (y - self.ys[m - 1]) / self.right_slope;
        }
        let j = self.ys.partition_point(|&p| p <= y);
        if j == 0 {
            return self.xs[0];
        }
        if j == m {
            return self.xs[m - 1];
        }
        let t = (y - self.ys[j - 1]) / (self.ys[j] - self.ys[j - 1]);
        self.xs[j - 1] + t * (self.xs[j] - self.xs[j - 1])
    }

    /// Mass the measure assigns to {x : D(x) in [y_lo, y_hi)}; under a
    /// well-built chart this is close to y_hi - y_lo.
    pub fn pushforward_mass(&self, nu: &EmpiricalRadonMeasure, y_lo: f64, y_hi: f64) -> f64 {
        nu.mass_half_open(self.eval_inverse(y_lo), self.eval_inverse(y_hi))
    }
}

/// Fraction of the total mass over which each tail slope is estimated.
const TAIL_MASS_FRACTION: f64 = 0.1;

/// Integrate the pool into a chart anchored at x0.
pub fn build_chart(nu: &EmpiricalRadonMeasure, x0: f64) -> Result<DerriennicChart, ChartError> {
    if nu.len() < 2 {
        return Err(ChartError::Degenerate);
    }
    let (lo, hi) = nu.hull().expect("nonempty");
    if x0 < lo || x0 > hi {
        return Err(ChartError::AnchorOutsideHull {
            anchor: x0,
            lo,
            hi,
        });
    }
    let mut xs: Vec<f64> = Vec::with_capacity(nu.len() + 1);
    let mut ys: Vec<f64> = Vec::with_capacity(nu.len() + 1);
    let mut acc = 0.0;
    for (x, w) in nu.samples() {
        xs.push(x);
        ys.push(acc);
        acc += w;
    }
    // Make the anchor an exact node so D(x0) = 0 holds bit for bit.
    if let Err(j) = xs.binary_search_by(|p| p.total_cmp(&x0)) {
        let t = (x0 - xs[j - 1]) / (xs[j] - xs[j - 1]);
        let v = ys[j - 1] + t * (ys[j] - ys[j - 1]);
        xs.insert(j, x0);
        ys.insert(j, v);
    }
    // Strictness floor: cumulative sums can stall in f64 when one weight
    // drops below the ulp of the running total; nudge such steps upward by
    // a sliver so the chart stays strictly increasing and invertible.
    let floor = 1e-9 * (hi - lo) / xs.len() as f64;
    for i in 1..ys.len() {
        if ys[i] <= ys[i - 1] {
            ys[i] = ys[i - 1] + floor;
        }
    }
    let anchor_idx = xs
        .binary_search_by(|p| p.total_cmp(&x0))
        .expect("anchor inserted above");
    let shift = ys[anchor_idx];
    for y in &mut ys {
        *y -= shift;
    }
    ys[anchor_idx] = 0.0;
    let left_slope = tail_slope(&xs, &ys, true);
    let right_slope = tail_slope(&xs, &ys, false);
    Ok(DerriennicChart {
        xs,
        ys,
        left_slope,
        right_slope,
        anchor: x0,
    })
}

/// Density of the outer `TAIL_MASS_FRACTION` of mass at one end, used as
/// the affine extension slope.
fn tail_slope(xs: &[f64], ys: &[f64], left: bool) -> f64 {
    let m = xs.len();
    let span = ys[m - 1] - ys[0];
    let target = span * TAIL_MASS_FRACTION;
    let (i, j) = if left {
        let mut j = 1;
        while j + 1 < m && ys[j] - ys[0] < target {
            j += 1;
        }
        (0, j)
    } else {
        let mut i = m - 2;
        while i > 0 && ys[m - 1] - ys[i] < target {
            i -= 1;
        }
        (i, m - 1)
    };
    let dx = xs[j] - xs[i];
    if dx > 0.0 {
        (ys[j] - ys[i]) / dx
    } else {
        1.0
    }
}

/// n evenly spaced points from lo to hi inclusive (n >= 2).
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo < hi);
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Fit D∘g∘D⁻¹ as an exact-rational piecewise-linear map through the nodes
/// (D(x_i), D(g(x_i))) for uniformly spaced x_i; both coordinate lists are
/// ascending by monotonicity of D and g, so the fit is monotone by
/// construction. f64-equal adjacent nodes are dropped; unit tails extend
/// the fit beyond the sampled range.
fn fit_conjugated(
    chart: &DerriennicChart,
    g: &PLHomeo,
    grid_nodes: usize,
) -> Result<PLHomeo, ConjugateError> {
    let compiled = g.compiled();
    let (lo, hi) = chart.hull();
    for attempt in 0..2 {
        let nodes = grid_nodes << attempt;
        let grid = uniform_grid(lo, hi, nodes);
        let mut nx: Vec<f64> = Vec::with_capacity(nodes);
        let mut ny: Vec<f64> = Vec::with_capacity(nodes);
        for x in grid {
            let u = chart.eval(x);
            let v = chart.eval(compiled.eval(x));
            if nx.last().is_none_or(|&p| u > p) && ny.last().is_none_or(|&p| v > p) {
                nx.push(u);
                ny.push(v);
            }
        }
        if nx.len() < nodes / 2 && attempt == 0 {
            continue;
        }
        if nx.len() < 2 {
            return Err(ConjugateError::DegenerateFit);
        }
        let bx: Vec<Rat> = nx.iter().map(|&x| rat_from_f64(x)).collect();
        let by: Vec<Rat> = ny.iter().map(|&y| rat_from_f64(y)).collect();
        let mut slopes = Vec::with_capacity(bx.len() + 1);
        slopes.push(rat_int(1));
        for i in 0..bx.len() - 1 {
            slopes.push((&by[i + 1] - &by[i]) / (&bx[i + 1] - &bx[i]));
        }
        slopes.push(rat_int(1));
        let fitted = PLHomeo::from_breakpoints(bx, slopes, by[0].clone())
            .expect("nodes are strictly ascending in both coordinates");
        return Ok(fitted);
    }
    Err(ConjugateError::DegenerateFit)
}

/// Conjugate every generator through the chart, preserving names, weights,
/// and the pairing. Each pair is fitted once and its partner taken as the
/// exact inverse of the fit, so the conjugated system passes the symmetry
/// validation by construction.
pub fn conjugate(
    system: &GeneratorSystem,
    chart: &DerriennicChart,
    grid_nodes: usize,
) -> Result<GeneratorSystem, ConjugateError> {
    assert!(grid_nodes >= 2);
    let n = system.generators.len();
    let mut maps: Vec<Option<PLHomeo>> = vec![None; n];
    for i in 0..n {
        let j = system.pairing[i];
        if j < i {
            continue;
        }
        let fitted = fit_conjugated(chart, &system.generators[i].map, grid_nodes)?;
        if j == i {
            if fitted.invert() != fitted {
                return Err(ConjugateError::SelfPairedNonInvolutive {
                    name: system.generators[i].name.clone(),
                });
            }
            maps[i] = Some(fitted);
        } else {
            maps[j] = Some(fitted.invert());
            maps[i] = Some(fitted);
        }
    }
    let generators = system
        .generators
        .iter()
        .zip(maps)
        .map(|(g, m)| Generator {
            name: g.name.clone(),
            map: m.expect("every index filled by its pair"),
            weight: g.weight.clone(),
        })
        .collect();
    Ok(GeneratorSystem::new(generators, system.pairing.clone())?)
}

/// Diagnostic: how far the inverse of a fit sits from the fit of the
/// inverse, sup over a y-grid spanning the chart image, max over pairs.
/// Zero would mean the two estimation routes agree perfectly; pool noise
/// keeps it positive.
pub fn pairing_gap(
    system: &GeneratorSystem,
    chart: &DerriennicChart,
    grid_nodes: usize,
) -> Result<f64, ConjugateError> {
    let (ylo, yhi) = chart.image_hull();
    let probe = uniform_grid(ylo, yhi, 257);
    let mut worst = 0.0f64;
    for i in 0..system.generators.len() {
        let j = system.pairing[i];
        if j <= i {
            continue;
        }
        let via_invert = fit_conjugated(chart, &system.generators[i].map, grid_nodes)?.invert();
        let direct = fit_conjugated(chart, &system.generators[j].map, grid_nodes)?;
        let a = via_invert.compiled();
        let b = direct.compiled();
        for &y in &probe {
            worst = worst.max((a.eval(y) - b.eval(y)).abs());
        }
    }
    Ok(worst)
}

/// Drift of a system sampled on a grid.
#[derive(Clone, Debug)]
pub struct DriftProfile {
    /// (grid point, drift there), exact arithmetic rounded at the end.
    pub points: Vec<(f64, f64)>,
    pub max_abs: f64,
}

/// Evaluate the exact drift at each grid point.
pub fn drift_profile(system: &GeneratorSystem, grid: &[f64]) -> DriftProfile {
    let points: Vec<(f64, f64)> = grid
        .iter()
        .map(|&x| (x, rat_to_f64(&system.drift_at(&rat_from_f64(x)))))
        .collect();
    let max_abs = points.iter().map(|(_, d)| d.abs()).fold(0.0, f64::max);
    DriftProfile { points, max_abs }
}

/// One generator's slope verdict.
#[derive(Clone, Debug)]
pub struct SlopeVerdict {
    pub name: String,
    pub max_slope: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Check max piece slope <= (1 + tolerance) / weight per generator.
pub fn lipschitz_check(system: &GeneratorSystem, tolerance: f64) -> Vec<SlopeVerdict> {
    system
        .generators
        .iter()
        .map(|g| {
            let max_slope = rat_to_f64(&g.map.max_slope());
            let bound = (1.0 + tolerance) / rat_to_f64(&g.weight);
            SlopeVerdict {
                name: g.name.clone(),
                max_slope,
                bound,
                ok: max_slope <= bound,
            }
        })
        .collect()
}

/// One generator's displacement verdict.
#[derive(Clone, Debug)]
pub struct DisplacementVerdict {
    pub name: String,
    pub sup_displacement: f64,
    pub bound: f64,
    pub ok: bool,
}

/// Displacement report: sup |g(x) - x| on the grid against the area bound.
#[derive(Clone, Debug)]
pub struct DisplacementReport {
    /// max over the grid of the weighted area functional.
    pub phi_bar: f64,
    pub verdicts: Vec<DisplacementVerdict>,
}

/// Check sup |g(x) - x| <= sqrt(2 phi_bar) / weight x (1 + tolerance),
/// with phi_bar the grid max of the weighted area functional.
pub fn displacement_check(
    system: &GeneratorSystem,
    grid: &[f64],
    tolerance: f64,
) -> DisplacementReport {
    let phi_bar = grid
        .iter()
        .map(|&x| rat_to_f64(&system.phi_mu(&rat_from_f64(x))))
        .fold(0.0, f64::max);
    let verdicts = system
        .generators
        .iter()
        .map(|g| {
            let c = g.map.compiled();
            let sup = grid
                .iter()
                .map(|&x| (c.eval(x) - x).abs())
                .fold(0.0, f64::max);
            let bound = (2.0 * phi_bar).sqrt() / rat_to_f64(&g.weight) * (1.0 + tolerance);
            DisplacementVerdict {
                name: g.name.clone(),
                sup_displacement: sup,
                bound,
                ok: sup <= bound,
            }
        })
        .collect();
    DisplacementReport { phi_bar, verdicts }
}

/// Per-grid-point spread of the post-chart drift over charts rebuilt from
/// resampled pools: the noise floor against which the drift is judged.
#[allow(clippy::too_many_arguments)]
pub fn bootstrap_drift_sigma(
    system: &GeneratorSystem,
    nu: &EmpiricalRadonMeasure,
    x0: f64,
    grid_x: &[f64],
    grid_nodes: usize,
    replicas: usize,
    factory: &StreamFactory,
    stream_base: u64,
) -> Result<Vec<f64>, PipelineError> {
    assert!(replicas >= 2);
    let mut per_point: Vec<Vec<f64>> = vec![Vec::with_capacity(replicas); grid_x.len()];
    for r in 0..replicas {
        let mut rng = factory.stream(stream_base + r as u64);
        let resampled = resample_pool(nu, &mut rng)?;
        let chart = build_chart(&resampled, x0)?;
        let conjugated = conjugate(system, &chart, grid_nodes)?;
        for (slot, &x) in per_point.iter_mut().zip(grid_x) {
            let y = chart.eval(x);
            slot.push(rat_to_f64(&conjugated.drift_at(&rat_from_f64(y))));
        }
    }
    Ok(per_point
        .into_iter()
        .map(|vals| {
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            var.sqrt()
        })
        .collect())
}

fn resample_pool(
    nu: &EmpiricalRadonMeasure,
    rng: &mut impl Rng,
) -> Result<EmpiricalRadonMeasure, PipelineError> {
    Ok(crate::stationary::resample(nu, rng)?)
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Conjugate(#[from] ConjugateError),
    #[error(transparent)]
    Measure(#[from] crate::stationary::MeasureError),
}

/// Knobs of the end-to-end chart pipeline.
#[derive(Clone, Debug)]
pub struct PipelineConfig {
    /// Fit nodes per conjugated generator.
    pub grid_nodes: usize,
    /// Points of the drift/displacement grid inside the image of K.
    pub drift_grid_points: usize,
    /// Relative slack on the Lipschitz and displacement bounds.
    pub tolerance: f64,
    /// Chart replicas for the drift noise floor; None skips the bootstrap.
    pub bootstrap_replicas: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            grid_nodes: 512,
            drift_grid_points: 11,
            tolerance: 0.1,
            bootstrap_replicas: Some(12),
        }
    }
}

/// Everything the chart pipeline produces.
#[derive(Clone, Debug)]
pub struct PipelineReport {
    pub chart_nodes: usize,
    /// Grid in original coordinates spanning K.
    pub grid_x: Vec<f64>,
    /// The same grid pushed through the chart; drift is evaluated here.
    pub grid_y: Vec<f64>,
    pub drift: DriftProfile,
    /// Bootstrap noise floor per grid point, when requested.
    pub drift_sigma: Option<Vec<f64>>,
    pub lipschitz: Vec<SlopeVerdict>,
    pub displacement: DisplacementReport,
    pub pairing_gap: f64,
    pub validation: ValidationReport,
    pub conjugated: GeneratorSystem,
}

impl PipelineReport {
    /// Drift flat within 3 sigma at every grid point (requires bootstrap).
    pub fn drift_within_noise(&self, z: f64) -> Option<bool> {
        let sigma = self.drift_sigma.as_ref()?;
        Some(
            self.drift
                .points
                .iter()
                .zip(sigma)
                .all(|((_, d), s)| d.abs() <= z * s.max(f64::MIN_POSITIVE)),
        )
    }

    pub fn all_lipschitz_ok(&self) -> bool {
        self.lipschitz.iter().all(|v| v.ok)
    }

    pub fn all_displacement_ok(&self) -> bool {
        self.displacement.verdicts.iter().all(|v| v.ok)
    }
}

/// Build the chart at the midpoint of K, conjugate, and run every check.
pub fn run_pipeline(
    system: &GeneratorSystem,
    nu: &EmpiricalRadonMeasure,
    cfg: &PipelineConfig,
    factory: &StreamFactory,
    stream_base: u64,
) -> Result<PipelineReport, PipelineError> {
    let k = system.recurrence_interval();
    let x0 = k.midpoint_f64();
    let chart = build_chart(nu, x0)?;
    let conjugated = conjugate(system, &chart, cfg.grid_nodes)?;
    let grid_x = uniform_grid(k.a_f64(), k.b_f64(), cfg.drift_grid_points);
    let grid_y: Vec<f64> = grid_x.iter().map(|&x| chart.eval(x)).collect();
    let drift = drift_profile(&conjugated, &grid_y);
    let drift_sigma = match cfg.bootstrap_replicas {
        Some(r) => Some(bootstrap_drift_sigma(
            system,
            nu,
            x0,
            &grid_x,
            cfg.grid_nodes,
            r,
            factory,
            stream_base,
        )?),
        None => None,
    };
    let lipschitz = lipschitz_check(&conjugated, cfg.tolerance);
    let displacement = displacement_check(&conjugated, &grid_y, cfg.tolerance);
    let gap = pairing_gap(system, &chart, cfg.grid_nodes)?;
    let validation = conjugated.validate();
    Ok(PipelineReport {
        chart_nodes: chart.node_count(),
        grid_x,
        grid_y,
        drift,
        drift_sigma,
        lipschitz,
        displacement,
        pairing_gap: gap,
        validation,
        conjugated,
    })
}

/// Make any system minimal-acting the way the theory reduces the general
/// case: adjoin unit and (surrogate) sqrt-2 translations in both
/// directions, halving existing weights so the total stays one; the four
/// new letters carry weight 1/8 each.
pub fn augment_to_minimal(system: &GeneratorSystem) -> GeneratorSystem {
    let half = rat(1, 2);
    let mut pairs: Vec<(String, PLHomeo, Rat)> = Vec::new();
    for i in 0..system.generators.len() {
        let j = system.pairing[i];
        let g = &system.generators[i];
        if j == i {
            // Self-paired weights were doubled at construction; pass the
            // halved per-side value so reconstruction doubles it back.
            pairs.push((g.name.clone(), g.map.clone(), &g.weight * &half / rat_int(2)));
        } else if j > i {
            pairs.push((g.name.clone(), g.map.clone(), &g.weight * &half));
        }
    }
    let taken: Vec<String> = pairs.iter().map(|p| p.0.clone()).collect();
    let fresh = |base: &str| -> String {
        let mut name = base.to_string();
        let mut k = 2;
        while taken.iter().any(|t| t == &name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        name
    };
    pairs.push((
        fresh("aug_unit"),
        PLHomeo::translation(rat_int(1)),
        rat(1, 8),
    ));
    pairs.push((
        fresh("aug_root2"),
        PLHomeo::translation(root2_surrogate()),
        rat(1, 8),
    ));
    let borrowed: Vec<(&str, PLHomeo, Rat)> = pairs
        .iter()
        .map(|(n, m, w)| (n.as_str(), m.clone(), w.clone()))
        .collect();
    GeneratorSystem::from_symmetric_pairs(borrowed)
        .expect("augmenting a valid system preserves validity")
}
