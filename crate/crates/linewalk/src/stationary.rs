//! Stationary Radon measures from stopped-run pooling, and their probes.
//!
//! The construction chains stopped excursions: stop points of one run seed
//! the next, their Cesàro pool estimates the stop-point distribution, and
//! pooling the occupied positions of runs launched from that distribution
//! yields a measure invariant for the walk, normalized so the recurrence
//! interval carries mass one.
//!
//! Return times to the stopping region have heavy tails (the walks are null
//! recurrent), so excursions are capped, and an excursion whose record count
//! would exceed a budget is systematically thinned: keep every j-th
//! position, doubling j as needed, then spread the excursion's total
//! duration evenly over the kept records. Expectation is preserved; memory
//! stays bounded no matter how long a single excursion runs.
//!
//! Determinism contract: each excursion owns one RNG stream and its records
//! are compacted locally, the global pool is canonicalized by sorting on
//! (position, weight) before weights are merged, and every reduction is
//! order-independent after that, so results are byte-identical across
//! thread counts.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::chain::{stopped_walk_fold, BumpProfile, CompiledSystem, WalkError, DEFAULT_STOP_CAP};
use crate::homeo::rat_to_f64;
use crate::stream::StreamFactory;
use crate::walkgroup::{GeneratorSystem, RecurrenceInterval};

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("sample positions and weights must be finite")]
    NonFinite,
    #[error("sample weights must be nonnegative")]
    NegativeWeight,
    #[error("cannot normalize: the target interval carries zero mass")]
    ZeroNormalizer,
}

#[derive(Debug, Error)]
pub enum StationaryError {
    #[error(transparent)]
    Walk(#[from] WalkError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("the stop-point pool is empty")]
    EmptyStopPool,
}

/// A locally finite measure given by weighted samples: sorted positions,
/// merged exact duplicates, prefix sums for O(log n) interval masses.
#[derive(Clone, Debug)]
pub struct EmpiricalRadonMeasure {
    positions: Vec<f64>,
    weights: Vec<f64>,
    /// prefix[i] = total weight of positions[..i]; one entry longer.
    prefix: Vec<f64>,
    anchor: f64,
}

impl EmpiricalRadonMeasure {
    /// Build from (position, weight) samples. Zero-weight samples are
    /// dropped; duplicate positions are merged by adding weights in a
    /// canonical order, so the result is independent of input order.
    pub fn from_weighted_samples(
        samples: impl IntoIterator<Item = (f64, f64)>,
        anchor: f64,
    ) -> Result<Self, MeasureError> {
        let mut pool: Vec<(f64, f64)> = Vec::new();
        for (x, w) in samples {
            if !x.is_finite() || !w.is_finite() || !anchor.is_finite() {
                return Err(MeasureError::NonFinite);
            }
            if w < 0.0 {
                return Err(MeasureError::NegativeWeight);
            }
            if w > 0.0 {
                pool.push((x, w));
            }
        }
        pool.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut positions = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        for (x, w) in pool {
            if positions.last() == Some(&x) {
                *weights.last_mut().expect("parallel vectors") += w;
            } else {
                positions.push(x);
                weights.push(w);
            }
        }
        let mut prefix = Vec::with_capacity(weights.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for w in &weights {
            acc += w;
            prefix.push(acc);
        }
        Ok(EmpiricalRadonMeasure {
            positions,
            weights,
            prefix,
            anchor,
        })
    }

    /// Samples with weight one each.
    pub fn from_points(points: impl IntoIterator<Item = f64>, anchor: f64) -> Result<Self, MeasureError> {
        Self::from_weighted_samples(points.into_iter().map(|x| (x, 1.0)), anchor)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.positions.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        *self.prefix.last().expect("prefix never empty")
    }

    /// Smallest and largest sample position; None when empty.
    pub fn hull(&self) -> Option<(f64, f64)> {
        Some((*self.positions.first()?, *self.positions.last()?))
    }

    /// Mass of (-inf, x).
    pub fn mass_below(&self, x: f64) -> f64 {
        let i = self.positions.partition_point(|&p| p < x);
        self.prefix[i]
    }

    /// Mass of the half-open interval [lo, hi); exactly additive in the
    /// sense that [a,b) and [b,c) masses sum to the [a,c) mass bit for bit.
    pub fn mass_half_open(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        self.mass_below(hi) - self.mass_below(lo)
    }

    /// Mass of the single point x (0 unless x is a sample position).
    pub fn point_mass(&self, x: f64) -> f64 {
        let i = self.positions.partition_point(|&p| p < x);
        if self.positions.get(i) == Some(&x) {
            self.weights[i]
        } else {
            0.0
        }
    }

    /// Mass of the closed interval [lo, hi].
    pub fn mass_closed(&self, lo: f64, hi: f64) -> f64 {
        if hi < lo {
            return 0.0;
        }
        self.mass_half_open(lo, hi) + self.point_mass(hi)
    }

    /// Signed cumulative mass from the anchor, with the half-open convention
    /// F(x) = mass[anchor, x) for x >= anchor and -mass[x, anchor) below, so
    /// F(anchor) = 0 exactly even when the anchor carries an atom.
    pub fn signed_cdf(&self, x: f64) -> f64 {
        if x >= self.anchor {
            self.mass_half_open(self.anchor, x)
        } else {
            -self.mass_half_open(x, self.anchor)
        }
    }

    /// Integral of f against the measure, in sorted-position order.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.positions
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Same measure with every weight multiplied by c > 0.
    pub fn scaled(&self, c: f64) -> Self {
        let weights: Vec<f64> = self.weights.iter().map(|w| w * c).collect();
        let mut prefix = Vec::with_capacity(weights.len() + 1);
        let mut acc = 0.0;
        prefix.push(acc);
        for w in &weights {
            acc += w;
            prefix.push(acc);
        }
        EmpiricalRadonMeasure {
            positions: self.positions.clone(),
            weights,
            prefix,
            anchor: self.anchor,
        }
    }

    /// Rescale so the closed interval [lo, hi] gets mass one.
    pub fn normalized_on(&self, lo: f64, hi: f64) -> Result<Self, MeasureError> {
        let m = self.mass_closed(lo, hi);
        if m <= 0.0 {
            return Err(MeasureError::ZeroNormalizer);
        }
        Ok(self.scaled(1.0 / m))
    }

    /// Sample positions whose merged weight exceeds the threshold.
    pub fn atoms_above(&self, threshold: f64) -> Vec<(f64, f64)> {
        self.samples().filter(|&(_, w)| w > threshold).collect()
    }

    /// Position where the cumulative mass first reaches q x total (0<=q<=1).
    pub fn quantile(&self, q: f64) -> Option<f64> {
        if self.is_empty() {
            return None;
        }
        let target = q.clamp(0.0, 1.0) * self.total_mass();
        let i = self.prefix[1..].partition_point(|&m| m < target);
        Some(self.positions[i.min(self.positions.len() - 1)])
    }
}

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("probe needs at least two nodes")]
    TooFewNodes,
    #[error("probe breakpoints must be finite and strictly increasing")]
    BadBreakpoints,
    #[error("probe must vanish at both ends of its hull")]
    NonZeroTails,
}

/// Compactly supported continuous piecewise-linear probe function.
#[derive(Clone, Debug, PartialEq)]
pub struct TestFunction {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl TestFunction {
    pub fn new(nodes: &[(f64, f64)]) -> Result<Self, ProbeError> {
        if nodes.len() < 2 {
            return Err(ProbeError::TooFewNodes);
        }
        if nodes
            .iter()
            .any(|(x, y)| !x.is_finite() || !y.is_finite())
            || nodes.windows(2).any(|w| w[0].0 >= w[1].0)
        {
            return Err(ProbeError::BadBreakpoints);
        }
        if nodes[0].1 != 0.0 || nodes[nodes.len() - 1].1 != 0.0 {
            return Err(ProbeError::NonZeroTails);
        }
        Ok(TestFunction {
            xs: nodes.iter().map(|n| n.0).collect(),
            ys: nodes.iter().map(|n| n.1).collect(),
        })
    }

    /// Mollified indicator: 1 on [lo, hi], linear ramps of the given width.
    pub fn plateau(lo: f64, hi: f64, ramp: f64) -> Self {
        assert!(ramp > 0.0 && lo <= hi);
        TestFunction::new(&[(lo - ramp, 0.0), (lo, 1.0), (hi, 1.0), (hi + ramp, 0.0)])
            .expect("plateau nodes are well formed")
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] || x >= *self.xs.last().expect("nonempty") {
            return 0.0;
        }
        let i = self.xs.partition_point(|&p| p <= x) - 1;
        let t = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.ys[i] + t * (self.ys[i + 1] - self.ys[i])
    }

    pub fn support(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().expect("nonempty"))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.ys.iter().all(|&y| y >= 0.0)
    }

    /// Exact check that the probe is identically 1 on [lo, hi].
    pub fn is_one_on(&self, lo: f64, hi: f64) -> bool {
        self.eval(lo) == 1.0
            && self.eval(hi) == 1.0
            && self
                .xs
                .iter()
                .zip(&self.ys)
                .filter(|(&x, _)| lo < x && x < hi)
                .all(|(_, &y)| y == 1.0)
    }

    /// Same probe with values multiplied by c.
    pub fn scaled(&self, c: f64) -> Self {
        TestFunction {
            xs: self.xs.clone(),
            ys: self.ys.iter().map(|y| y * c).collect(),
        }
    }
}

/// Knobs of the stopped-excursion machinery.
#[derive(Clone, Copy, Debug)]
pub struct StopConfig {
    /// Hard cap on a single stopping time; exceeding it is an error.
    pub cap: usize,
    /// Max kept occupation records per excursion before thinning doubles.
    pub record_budget: usize,
}

impl Default for StopConfig {
    fn default() -> Self {
        StopConfig {
            cap: DEFAULT_STOP_CAP,
            record_budget: 1 << 17,
        }
    }
}

impl StopConfig {
    pub fn with_cap(cap: usize) -> Self {
        StopConfig {
            cap,
            ..Default::default()
        }
    }
}

/// One excursion's occupation, possibly thinned: records visited in time
/// order, each standing for `weight` time units; weights sum to duration.
struct ThinnedOccupation {
    records: Vec<f64>,
    weight: f64,
    duration: usize,
}

fn run_thinned_excursion(
    cs: &CompiledSystem,
    profile: &BumpProfile,
    x0: f64,
    cfg: &StopConfig,
    rng: &mut impl Rng,
) -> Result<ThinnedOccupation, WalkError> {
    let budget = cfg.record_budget.max(2);
    let mut records: Vec<f64> = Vec::new();
    let mut stride = 1usize;
    let mut countdown = 0usize; // steps until the next recorded position
    let (duration, _stop) = stopped_walk_fold(cs, profile, x0, cfg.cap, rng, |x| {
        if countdown == 0 {
            if records.len() == 2 * budget {
                // Keep records at even indices: the same systematic sample
                // at double the stride.
                let mut keep = 0;
                for i in (0..records.len()).step_by(2) {
                    records[keep] = records[i];
                    keep += 1;
                }
                records.truncate(keep);
                stride *= 2;
            }
            records.push(x);
            countdown = stride - 1;
        } else {
            countdown -= 1;
        }
    })?;
    let weight = duration as f64 / records.len() as f64;
    Ok(ThinnedOccupation {
        records,
        weight,
        duration,
    })
}

/// Sort and merge one excursion's records so equal positions collapse
/// before entering the shared pool (deterministic regardless of scheduling).
fn compact_records(records: Vec<f64>, weight: f64) -> Vec<(f64, f64)> {
    let mut sorted = records;
    sorted.sort_unstable_by(f64::total_cmp);
    let mut out: Vec<(f64, f64)> = Vec::new();
    for x in sorted {
        match out.last_mut() {
            Some((p, w)) if *p == x => *w += weight,
            _ => out.push((x, weight)),
        }
    }
    out
}

/// Cesàro pool of stop points: `batches` independent chains start at the
/// midpoint of K; within a chain each excursion starts where the previous
/// one stopped. Pools at least `iterations` stop points in total, equally
/// weighted, normalized to a probability measure. All mass lies in the
/// support of the profile by construction.
#[allow(clippy::too_many_arguments)]
pub fn krylov_bogolyubov(
    cs: &CompiledSystem,
    profile: &BumpProfile,
    k: &RecurrenceInterval,
    iterations: usize,
    batches: usize,
    cfg: &StopConfig,
    factory: &StreamFactory,
    stream_base: u64,
) -> Result<EmpiricalRadonMeasure, StationaryError> {
    assert!(iterations >= 1 && batches >= 1);
    let per_chain = iterations.div_ceil(batches);
    let start = k.midpoint_f64();
    let chains: Result<Vec<Vec<f64>>, WalkError> = (0..batches as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = factory.stream(stream_base + b);
            let mut stops = Vec::with_capacity(per_chain);
            let mut x = start;
            for _ in 0..per_chain {
                let (_, stop) = stopped_walk_fold(cs, profile, x, cfg.cap, &mut rng, |_| {})?;
                stops.push(stop);
                x = stop;
            }
            Ok(stops)
        })
        .collect();
    let all: Vec<f64> = chains?.into_iter().flatten().collect();
    if all.is_empty() {
        return Err(StationaryError::EmptyStopPool);
    }
    let n = all.len() as f64;
    let nu0 = EmpiricalRadonMeasure::from_weighted_samples(
        all.into_iter().map(|x| (x, 1.0 / n)),
        start,
    )?;
    Ok(nu0)
}

/// The pooled occupation measure with its provenance numbers.
#[derive(Clone, Debug)]
pub struct StationaryEstimate {
    /// Pooled occupation measure, normalized so ν(K) = 1.
    pub nu: EmpiricalRadonMeasure,
    pub k: RecurrenceInterval,
    pub runs: usize,
    pub mean_duration: f64,
    pub max_duration: usize,
    /// K-mass of the raw per-run-weighted pool, before renormalization.
    pub raw_k_mass: f64,
}

impl StationaryEstimate {
    /// Atoms above resolution x ν(K) = resolution, since ν(K) = 1.
    pub fn atoms(&self, resolution: f64) -> Vec<(f64, f64)> {
        self.nu.atoms_above(resolution)
    }
}

/// One run's contribution to the pool: locally compacted records plus the
/// run's duration.
type CompactedRun = (Vec<(f64, f64)>, usize);

/// Pool occupations of stopped runs started from ν₀: every ν₀ sample point
/// launches `samples_per_start` excursions, contributing its ν₀ weight split
/// evenly among them; the pooled measure is renormalized so ν(K) = 1.
#[allow(clippy::too_many_arguments)]
pub fn build_stationary(
    cs: &CompiledSystem,
    nu0: &EmpiricalRadonMeasure,
    profile: &BumpProfile,
    k: &RecurrenceInterval,
    samples_per_start: usize,
    cfg: &StopConfig,
    factory: &StreamFactory,
    stream_base: u64,
) -> Result<StationaryEstimate, StationaryError> {
    assert!(samples_per_start >= 1);
    if nu0.is_empty() {
        return Err(StationaryError::EmptyStopPool);
    }
    let starts: Vec<(f64, f64)> = nu0.samples().collect();
    let nu0_total = nu0.total_mass();
    let runs = starts.len() * samples_per_start;
    let results: Result<Vec<CompactedRun>, WalkError> = (0..runs as u64)
        .into_par_iter()
        .map(|idx| {
            let (start_pos, start_w) = starts[idx as usize / samples_per_start];
            let mut rng = factory.stream(stream_base + idx);
            let exc = run_thinned_excursion(cs, profile, start_pos, cfg, &mut rng)?;
            let w = exc.weight * start_w / (nu0_total * samples_per_start as f64);
            Ok((compact_records(exc.records, w), exc.duration))
        })
        .collect();
    let results = results?;
    let mut durations_total = 0usize;
    let mut max_duration = 0usize;
    let mut pool: Vec<(f64, f64)> = Vec::new();
    for (records, duration) in results {
        durations_total += duration;
        max_duration = max_duration.max(duration);
        pool.extend(records);
    }
    let raw = EmpiricalRadonMeasure::from_weighted_samples(pool, k.midpoint_f64())?;
    let raw_k_mass = raw.mass_closed(k.a_f64(), k.b_f64());
    let nu = raw
        .normalized_on(k.a_f64(), k.b_f64())
        .map_err(StationaryError::Measure)?;
    Ok(StationaryEstimate {
        nu,
        k: k.clone(),
        runs,
        mean_duration: durations_total as f64 / runs as f64,
        max_duration,
        raw_k_mass,
    })
}

/// Per-probe |∫Pφ dν − ∫φ dν| / ∫|φ| dν, where Pφ(x) is the weighted
/// average of φ over one random step from x.
pub fn stationarity_residuals(
    system: &GeneratorSystem,
    nu: &EmpiricalRadonMeasure,
    probes: &[TestFunction],
) -> Vec<f64> {
    let cs = CompiledSystem::new(system);
    let weights: Vec<f64> = system
        .generators
        .iter()
        .map(|g| rat_to_f64(&g.weight))
        .collect();
    probes
        .iter()
        .map(|probe| {
            let direct = nu.integrate(|x| probe.eval(x));
            let stepped = nu.integrate(|x| {
                weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w * probe.eval(cs.step(x, i)))
                    .sum()
            });
            let scale = nu.integrate(|x| probe.eval(x).abs());
            if scale == 0.0 {
                0.0
            } else {
                (stepped - direct).abs() / scale
            }
        })
        .collect()
}

/// Max over probes of the per-probe residuals.
pub fn stationarity_residual(
    system: &GeneratorSystem,
    nu: &EmpiricalRadonMeasure,
    probes: &[TestFunction],
) -> f64 {
    stationarity_residuals(system, nu, probes)
        .into_iter()
        .fold(0.0, f64::max)
}

/// Weighted resample with replacement, same size as the pool, via inverse
/// transform on the cumulative weights.
pub fn resample(
    nu: &EmpiricalRadonMeasure,
    rng: &mut impl Rng,
) -> Result<EmpiricalRadonMeasure, MeasureError> {
    let n = nu.len();
    let w = nu.total_mass() / n as f64;
    let samples: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let q: f64 = rng.gen();
            (nu.quantile(q).expect("nonempty pool"), w)
        })
        .collect();
    EmpiricalRadonMeasure::from_weighted_samples(samples, nu.anchor())
}

/// Per-probe residual scale induced by sampling noise alone: each replica
/// resamples the pool with replacement and re-measures the residuals; the
/// floor is the per-probe median over replicas. A residual within a small
/// multiple of this floor is indistinguishable from Monte Carlo noise.
pub fn bootstrap_residual_floor(
    system: &GeneratorSystem,
    nu: &EmpiricalRadonMeasure,
    probes: &[TestFunction],
    replicas: usize,
    factory: &StreamFactory,
    stream_base: u64,
) -> Result<Vec<f64>, MeasureError> {
    assert!(replicas > 0, "at least one replica");
    let mut per_probe: Vec<Vec<f64>> = vec![Vec::with_capacity(replicas); probes.len()];
    for r in 0..replicas {
        let mut rng = factory.stream(stream_base + r as u64);
        let replica = resample(nu, &mut rng)?;
        for (j, res) in stationarity_residuals(system, &replica, probes)
            .into_iter()
            .enumerate()
        {
            per_probe[j].push(res);
        }
    }
    Ok(per_probe
        .into_iter()
        .map(|v| median(&v).expect("replicas > 0"))
        .collect())
}

/// Outcome of the along-one-trajectory ratio average.
#[derive(Clone, Debug)]
pub enum RatioErgodic {
    /// S_N(ψ)/S_N(φ) with both partial sums reported.
    Ratio { value: f64, psi_sum: f64, phi_sum: f64 },
    /// The φ-sum is still exactly zero: the walk has not yet visited the
    /// probe's support. Increase N.
    NotYetRecurrent { psi_sum: f64 },
}

impl RatioErgodic {
    pub fn value(&self) -> Option<f64> {
        match self {
            RatioErgodic::Ratio { value, .. } => Some(*value),
            RatioErgodic::NotYetRecurrent { .. } => None,
        }
    }
}

/// Time-average ratio of two probes along one walk of N steps from x.
/// Callers wanting the invariant-measure interpretation should pass φ ≥ 0
/// equal to 1 on the recurrence interval.
pub fn ratio_ergodic(
    cs: &CompiledSystem,
    x: f64,
    psi: &TestFunction,
    phi: &TestFunction,
    n: usize,
    rng: &mut impl Rng,
) -> RatioErgodic {
    let mut psi_sum = 0.0;
    let mut phi_sum = 0.0;
    crate::chain::scan_walk(cs, x, n, rng, |_, pos| {
        psi_sum += psi.eval(pos);
        phi_sum += phi.eval(pos);
    });
    if phi_sum == 0.0 {
        RatioErgodic::NotYetRecurrent { psi_sum }
    } else {
        RatioErgodic::Ratio {
            value: psi_sum / phi_sum,
            psi_sum,
            phi_sum,
        }
    }
}

/// Mass of a symmetric window under a per-run-weighted occupation pool.
#[derive(Clone, Debug)]
pub struct WindowMass {
    pub radius: f64,
    pub runs: usize,
    /// ν-mass of [−radius, +radius], weights 1/runs per excursion.
    pub mass_per_run: f64,
}

/// Probe unbounded growth: run progressively larger stopped-run pools and
/// report the per-run mass of [−M, M] at each radius, plus the final pooled
/// measure for nested-window queries. Pool i uses base_runs x (i+1)
/// excursions, all started from the midpoint of K.
#[allow(clippy::too_many_arguments)]
pub fn bi_infiniteness_probe(
    cs: &CompiledSystem,
    profile: &BumpProfile,
    k: &RecurrenceInterval,
    radii: &[f64],
    base_runs: usize,
    cfg: &StopConfig,
    factory: &StreamFactory,
    stream_base: u64,
) -> Result<(Vec<WindowMass>, EmpiricalRadonMeasure), StationaryError> {
    assert!(!radii.is_empty() && base_runs >= 1);
    assert!(radii.windows(2).all(|w| w[0] < w[1]), "radii must ascend");
    let start = k.midpoint_f64();
    let total_runs = base_runs * radii.len();
    let results: Result<Vec<Vec<(f64, f64)>>, WalkError> = (0..total_runs as u64)
        .into_par_iter()
        .map(|idx| {
            let mut rng = factory.stream(stream_base + idx);
            let exc = run_thinned_excursion(cs, profile, start, cfg, &mut rng)?;
            Ok(compact_records(exc.records, exc.weight))
        })
        .collect();
    let results = results?;
    let mut masses = Vec::with_capacity(radii.len());
    let mut pool: Vec<(f64, f64)> = Vec::new();
    let mut consumed = 0usize;
    for (i, &radius) in radii.iter().enumerate() {
        let runs_here = base_runs * (i + 1);
        while consumed < runs_here {
            pool.extend(results[consumed].iter().copied());
            consumed += 1;
        }
        let measure = EmpiricalRadonMeasure::from_weighted_samples(pool.iter().copied(), start)?;
        masses.push(WindowMass {
            radius,
            runs: runs_here,
            mass_per_run: measure.mass_closed(-radius, radius) / runs_here as f64,
        });
    }
    let final_measure = EmpiricalRadonMeasure::from_weighted_samples(
        pool.into_iter().map(|(x, w)| (x, w / consumed as f64)),
        start,
    )?;
    Ok((masses, final_measure))
}

/// Agreement of ratio averages across two starting points and, optionally,
/// against direct integrals of a built measure.
#[derive(Clone, Debug)]
pub struct UniquenessReport {
    pub values_x1: Vec<f64>,
    pub values_x2: Vec<f64>,
    pub median_x1: Option<f64>,
    pub median_x2: Option<f64>,
    /// ∫ψdν / ∫φdν on the supplied measure, when one was given.
    pub measure_ratio: Option<f64>,
    pub not_yet_recurrent: usize,
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

/// Replicate ratio_ergodic from two starts over independent streams and
/// summarize by medians; optionally compare with a built measure's ratio.
#[allow(clippy::too_many_arguments)]
pub fn uniqueness_cross_check(
    cs: &CompiledSystem,
    x1: f64,
    x2: f64,
    psi: &TestFunction,
    phi: &TestFunction,
    n: usize,
    trials: usize,
    nu: Option<&EmpiricalRadonMeasure>,
    factory: &StreamFactory,
    stream_base: u64,
) -> UniquenessReport {
    assert!(x1 != x2, "cross-check needs two distinct starts");
    let run = |start: f64, base: u64| -> Vec<RatioErgodic> {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = factory.stream(base + t);
                ratio_ergodic(cs, start, psi, phi, n, &mut rng)
            })
            .collect()
    };
    let r1 = run(x1, stream_base);
    let r2 = run(x2, stream_base + trials as u64);
    let not_yet = r1
        .iter()
        .chain(&r2)
        .filter(|r| matches!(r, RatioErgodic::NotYetRecurrent { .. }))
        .count();
    let values_x1: Vec<f64> = r1.iter().filter_map(RatioErgodic::value).collect();
    let values_x2: Vec<f64> = r2.iter().filter_map(RatioErgodic::value).collect();
    let measure_ratio = nu.and_then(|m| {
        let den = m.integrate(|x| phi.eval(x));
        (den != 0.0).then(|| m.integrate(|x| psi.eval(x)) / den)
    });
    UniquenessReport {
        median_x1: median(&values_x1),
        median_x2: median(&values_x2),
        values_x1,
        values_x2,
        measure_ratio,
        not_yet_recurrent: not_yet,
    }
}
