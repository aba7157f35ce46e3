//! The measure-induced distance on the line, its martingale property along
//! coupled walks, contraction experiments, and a heuristic structure
//! classifier for the generated group.
//!
//! The distance between two points is the measure of the interval between
//! them. Driving two starts through one shared letter sequence keeps them
//! ordered, and when the measure is stationary the distance between the
//! coupled walkers is a martingale: flat in mean at every step. Strongly
//! contracting systems squeeze the coupled gap towards zero with high
//! probability, while the Euclidean gap keeps oscillating; both effects are
//! measured here.
//!
//! Determinism: every Monte Carlo summary is reduced in a fixed order
//! (per-trial results are collected by trial index, chunk sums are merged
//! in chunk order), so reports do not depend on the worker-thread count.

use rand::Rng;
use rayon::prelude::*;

use crate::chain::{scan_coupled, CompiledSystem};
use crate::homeo::PLHomeo;
use crate::stationary::EmpiricalRadonMeasure;
use crate::stream::StreamFactory;
use crate::walkgroup::GeneratorSystem;

/// Distance induced by a measure: d(x, y) is the mass of the half-open
/// interval [min(x,y), max(x,y)). The half-open convention agrees with the
/// closed-interval mass whenever the endpoints carry no atoms, and it makes
/// d(x, x) = 0 and additivity over ordered triples hold bit for bit even
/// when they do.
#[derive(Clone, Debug)]
pub struct NuDistance {
    nu: EmpiricalRadonMeasure,
}

impl NuDistance {
    pub fn new(nu: EmpiricalRadonMeasure) -> Self {
        NuDistance { nu }
    }

    pub fn measure(&self) -> &EmpiricalRadonMeasure {
        &self.nu
    }

    pub fn dist(&self, x: f64, y: f64) -> f64 {
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        self.nu.mass_half_open(lo, hi)
    }
}

/// Per-step flatness report for the coupled-distance martingale.
#[derive(Clone, Debug)]
pub struct MartingaleReport {
    /// d(x, y) at step 0.
    pub initial: f64,
    /// Mean of d(X_k^x, X_k^y) over trials, for k = 1..=n.
    pub means: Vec<f64>,
    /// Standard error of each mean (sample sd / sqrt(trials)).
    pub sigmas: Vec<f64>,
    /// max over k of |mean_k - initial| / sigma_k; an exactly preserved
    /// distance (zero variance, mean equal to initial) scores 0, while a
    /// drifted mean with zero variance scores infinity.
    pub max_abs_z: f64,
    pub trials: usize,
}

impl MartingaleReport {
    /// Largest deviation |mean_k - initial| in distance units.
    pub fn max_abs_deviation(&self) -> f64 {
        self.means
            .iter()
            .map(|m| (m - self.initial).abs())
            .fold(0.0, f64::max)
    }
}

const TRIAL_CHUNK: usize = 64;

/// Check mean flatness of d(X_k^x, X_k^y) along coupled trials.
#[allow(clippy::too_many_arguments)]
pub fn martingale_check(
    cs: &CompiledSystem,
    d: &NuDistance,
    x: f64,
    y: f64,
    n: usize,
    trials: usize,
    factory: &StreamFactory,
    stream_base: u64,
) -> MartingaleReport {
    assert!(x < y, "martingale check wants ordered distinct starts");
    assert!(n >= 1 && trials >= 1);
    let initial = d.dist(x, y);
    let chunks = trials.div_ceil(TRIAL_CHUNK);
    // Per-chunk elementwise sums, merged in chunk order afterwards so the
    // floating-point reduction is independent of scheduling.
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks as u64)
        .into_par_iter()
        .map(|c| {
            let lo = c as usize * TRIAL_CHUNK;
            let hi = (lo + TRIAL_CHUNK).min(trials);
            let mut sum = vec![0.0; n];
            let mut sumsq = vec![0.0; n];
            for t in lo..hi {
                let mut rng = factory.stream(stream_base + t as u64);
                scan_coupled(cs, x, y, n, &mut rng, |k, a, b| {
                    if k >= 1 {
                        let v = d.dist(a, b);
                        sum[k - 1] += v;
                        sumsq[k - 1] += v * v;
                    }
                });
            }
            (sum, sumsq)
        })
        .collect();
    let mut sum = vec![0.0; n];
    let mut sumsq = vec![0.0; n];
    for (s, q) in partial {
        for k in 0..n {
            sum[k] += s[k];
            sumsq[k] += q[k];
        }
    }
    let tf = trials as f64;
    let mut means = Vec::with_capacity(n);
    let mut sigmas = Vec::with_capacity(n);
    let mut max_abs_z = 0.0f64;
    for k in 0..n {
        let mean = sum[k] / tf;
        let var = (sumsq[k] / tf - mean * mean).max(0.0);
        let sigma = (var / tf).sqrt();
        let dev = (mean - initial).abs();
        let z = if sigma > 0.0 {
            dev / sigma
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        max_abs_z = max_abs_z.max(z);
        means.push(mean);
        sigmas.push(sigma);
    }
    MartingaleReport {
        initial,
        means,
        sigmas,
        max_abs_z,
        trials,
    }
}

/// Lower and upper ends of the Wilson score interval for a binomial
/// proportion at normal quantile z (1.96 for 95%).
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let s = successes as f64;
    let z2 = z * z;
    let denom = n + z2;
    let center = (s + z2 / 2.0) / denom;
    let half = z * (s * (n - s) / n + z2 / 4.0).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Gated-gap summary at one checkpoint step.
#[derive(Clone, Debug)]
pub struct CheckpointSummary {
    pub step: usize,
    /// Trials whose X-walker sat inside the gate J at this step.
    pub gated: usize,
    pub median_gap: Option<f64>,
    pub q90_gap: Option<f64>,
}

/// Outcome of the coupled contraction experiment.
#[derive(Clone, Debug)]
pub struct ContractionReport {
    pub initial_gap: f64,
    pub checkpoints: Vec<CheckpointSummary>,
    /// Trials with at least one gated step.
    pub trials_gated: usize,
    /// Among those, trials whose gap at their last gated step fell below
    /// `contraction_factor` times the initial gap.
    pub trials_contracted: usize,
    /// Median over gated trials of the gap at each trial's last gated step;
    /// the natural "gap at horizon n" when few walks sit in the gate at
    /// exactly step n.
    pub median_last_gated: Option<f64>,
    pub contraction_factor: f64,
    /// Wilson 95% interval for trials_contracted / trials_gated.
    pub contracted_ci: (f64, f64),
    pub trials: usize,
}

/// Run coupled walks from x < y and record |X_k^y - X_k^x| whenever the
/// X-walker lies in the gate [j_lo, j_hi], summarized at checkpoints
/// n/4, n/2, n and through each trial's last gated gap.
#[allow(clippy::too_many_arguments)]
pub fn contraction_experiment(
    cs: &CompiledSystem,
    x: f64,
    y: f64,
    j_lo: f64,
    j_hi: f64,
    n: usize,
    trials: usize,
    contraction_factor: f64,
    factory: &StreamFactory,
    stream_base: u64,
) -> ContractionReport {
    assert!(x < y && j_lo <= j_hi && n >= 4 && trials >= 1);
    let initial_gap = y - x;
    let mut steps: Vec<usize> = vec![n / 4, n / 2, n];
    steps.dedup();
    let per_trial: Vec<(Vec<Option<f64>>, Option<f64>)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = factory.stream(stream_base + t);
            let mut at_cp: Vec<Option<f64>> = vec![None; steps.len()];
            let mut last_gated: Option<f64> = None;
            let mut next_cp = 0usize;
            scan_coupled(cs, x, y, n, &mut rng, |k, a, b| {
                if k == 0 {
                    return;
                }
                let gated = j_lo <= a && a <= j_hi;
                if gated {
                    last_gated = Some(b - a);
                }
                while next_cp < steps.len() && steps[next_cp] == k {
                    if gated {
                        at_cp[next_cp] = Some(b - a);
                    }
                    next_cp += 1;
                }
            });
            (at_cp, last_gated)
        })
        .collect();
    let checkpoints = steps
        .iter()
        .enumerate()
        .map(|(i, &step)| {
            let mut gaps: Vec<f64> = per_trial
                .iter()
                .filter_map(|(cp, _)| cp[i])
                .collect();
            gaps.sort_unstable_by(f64::total_cmp);
            CheckpointSummary {
                step,
                gated: gaps.len(),
                median_gap: quantile_sorted(&gaps, 0.5),
                q90_gap: quantile_sorted(&gaps, 0.9),
            }
        })
        .collect();
    let trials_gated = per_trial.iter().filter(|(_, l)| l.is_some()).count();
    let trials_contracted = per_trial
        .iter()
        .filter_map(|(_, l)| *l)
        .filter(|g| *g < contraction_factor * initial_gap)
        .count();
    let mut last_gaps: Vec<f64> = per_trial.iter().filter_map(|(_, l)| *l).collect();
    last_gaps.sort_unstable_by(f64::total_cmp);
    ContractionReport {
        initial_gap,
        checkpoints,
        trials_gated,
        trials_contracted,
        median_last_gated: quantile_sorted(&last_gaps, 0.5),
        contraction_factor,
        contracted_ci: wilson_interval(trials_contracted, trials_gated, 1.96),
        trials,
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    Some(sorted[idx.min(sorted.len() - 1)])
}

/// One row of a coupled-gap trace, ready for CSV export.
#[derive(Clone, Debug)]
pub struct GapSample {
    pub step: usize,
    pub pos_x: f64,
    pub pos_y: f64,
    pub gap_euclid: f64,
    pub gap_nu: f64,
    pub gated: bool,
}

/// Record the full coupled-gap trace of one walk pair, gap measured both in
/// Euclidean and in measure distance, with the gate flag per step.
#[allow(clippy::too_many_arguments)]
pub fn gap_trace(
    cs: &CompiledSystem,
    d: &NuDistance,
    x: f64,
    y: f64,
    j_lo: f64,
    j_hi: f64,
    n: usize,
    rng: &mut impl Rng,
) -> Vec<GapSample> {
    let mut rows = Vec::with_capacity(n + 1);
    scan_coupled(cs, x, y, n, rng, |k, a, b| {
        rows.push(GapSample {
            step: k,
            pos_x: a,
            pos_y: b,
            gap_euclid: b - a,
            gap_nu: d.dist(a, b),
            gated: j_lo <= a && a <= j_hi,
        });
    });
    rows
}

/// Extremes of the coupled gaps along one run, Euclidean and measure-valued.
#[derive(Clone, Debug)]
pub struct CoupledExtremes {
    pub initial_euclid: f64,
    pub max_euclid: f64,
    pub min_euclid: f64,
    pub final_euclid: f64,
    pub initial_nu: f64,
    pub max_nu: f64,
    pub min_nu: f64,
    pub final_nu: f64,
}

/// Stream one long coupled run and keep only the gap extremes (steps >= 1)
/// plus the endpoints; O(1) memory regardless of n.
pub fn coupled_extremes(
    cs: &CompiledSystem,
    d: &NuDistance,
    x: f64,
    y: f64,
    n: usize,
    rng: &mut impl Rng,
) -> CoupledExtremes {
    assert!(x < y && n >= 1);
    let mut out = CoupledExtremes {
        initial_euclid: y - x,
        max_euclid: f64::NEG_INFINITY,
        min_euclid: f64::INFINITY,
        final_euclid: 0.0,
        initial_nu: d.dist(x, y),
        max_nu: f64::NEG_INFINITY,
        min_nu: f64::INFINITY,
        final_nu: 0.0,
    };
    scan_coupled(cs, x, y, n, rng, |k, a, b| {
        if k == 0 {
            return;
        }
        let ge = b - a;
        let gn = d.dist(a, b);
        out.max_euclid = out.max_euclid.max(ge);
        out.min_euclid = out.min_euclid.min(ge);
        out.max_nu = out.max_nu.max(gn);
        out.min_nu = out.min_nu.min(gn);
        out.final_euclid = ge;
        out.final_nu = gn;
    });
    out
}

/// Verdicts of the heuristic structure classifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StructureClass {
    DiscreteOrbit,
    TranslationLike,
    LiftLike,
    StrongContractionLike,
    Inconclusive,
}

impl std::fmt::Display for StructureClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StructureClass::DiscreteOrbit => "discrete-orbit",
            StructureClass::TranslationLike => "translation-like",
            StructureClass::LiftLike => "lift-like",
            StructureClass::StrongContractionLike => "strong-contraction-like",
            StructureClass::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

/// Numeric knobs of the classifier; the defaults suit the bundled presets.
#[derive(Clone, Debug)]
pub struct ClassifierConfig {
    /// Half-width of the window around the base point where orbit gaps are
    /// examined.
    pub orbit_window: f64,
    /// Orbit points closer than this count as one point.
    pub dedup_tol: f64,
    /// Minimal adjacent orbit gap that counts as "bounded below". Dense
    /// orbits explored by random words of the default length already show
    /// gaps an order of magnitude under this (rationally independent
    /// translations reach spacing ~1/(2m) for step multiples m), while a
    /// unit-lattice orbit sits at 1.
    pub gap_floor: f64,
    /// Need at least this many distinct in-window points to trust the gap.
    pub min_window_points: usize,
    /// Even-indexed samples draw their word length from 1..=this.
    pub max_word_len: usize,
    /// Odd-indexed samples draw from 1..=this; longer words let slowly
    /// mixing orbits (rationally independent translations) reveal their
    /// fine spacing, which short words cannot reach diffusively.
    pub max_word_len_long: usize,
    /// Steps of the coupled probe for the constant-gap test.
    pub coupled_steps: usize,
    /// Gap wobble below this is "constant".
    pub coupled_tol: f64,
    /// Size of the confirming contraction experiment.
    pub contraction_steps: usize,
    pub contraction_trials: usize,
    /// Median gated gap below this fraction of the initial gap confirms
    /// strong contraction.
    pub contraction_factor: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            orbit_window: 2.0,
            dedup_tol: 1e-9,
            gap_floor: 0.05,
            min_window_points: 3,
            max_word_len: 30,
            max_word_len_long: 300,
            coupled_steps: 500,
            coupled_tol: 1e-9,
            contraction_steps: 2000,
            contraction_trials: 200,
            contraction_factor: 0.5,
        }
    }
}

/// Classifier verdict with the evidence that produced it.
#[derive(Clone, Debug)]
pub struct StructureReport {
    pub verdict: StructureClass,
    /// Distinct orbit points seen inside the examination window.
    pub window_points: usize,
    /// Smallest adjacent gap among them, when there were at least two.
    pub min_orbit_gap: Option<f64>,
    /// Median gated gap over initial gap from the confirming experiment,
    /// when it ran.
    pub contraction_ratio: Option<f64>,
    pub notes: Vec<String>,
}

/// Heuristic decision tree: discrete orbit, then translation behavior, then
/// commutation with the unit shift, then confirmed strong contraction;
/// anything else is inconclusive.
pub fn classify_structure(
    system: &GeneratorSystem,
    samples: usize,
    factory: &StreamFactory,
    stream_base: u64,
) -> StructureReport {
    classify_structure_with(system, samples, &ClassifierConfig::default(), factory, stream_base)
}

pub fn classify_structure_with(
    system: &GeneratorSystem,
    samples: usize,
    cfg: &ClassifierConfig,
    factory: &StreamFactory,
    stream_base: u64,
) -> StructureReport {
    let cs = CompiledSystem::new(system);
    let k = system.recurrence_interval();
    let base = k.midpoint_f64();
    let mut notes = Vec::new();

    // (a) Orbit of the base point under random words, examined in a window.
    let mut rng = factory.stream(stream_base);
    let mut points = vec![base];
    for i in 0..samples {
        let max_len = if i % 2 == 0 {
            cfg.max_word_len
        } else {
            cfg.max_word_len_long
        };
        let len = rng.gen_range(1..=max_len);
        let mut p = base;
        for _ in 0..len {
            let letter = cs.sample_letter(&mut rng);
            p = cs.step(p, letter);
        }
        points.push(p);
    }
    points.retain(|p| (p - base).abs() <= cfg.orbit_window);
    points.sort_unstable_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() <= cfg.dedup_tol);
    let window_points = points.len();
    let min_orbit_gap = points
        .windows(2)
        .map(|w| w[1] - w[0])
        .min_by(f64::total_cmp);
    if window_points < cfg.min_window_points {
        notes.push(format!(
            "only {window_points} distinct orbit points in the window; cannot judge discreteness"
        ));
    } else if let Some(gap) = min_orbit_gap {
        if gap >= cfg.gap_floor {
            notes.push(format!("min orbit gap {gap:.6} >= floor {}", cfg.gap_floor));
            return StructureReport {
                verdict: StructureClass::DiscreteOrbit,
                window_points,
                min_orbit_gap,
                contraction_ratio: None,
                notes,
            };
        }
    }

    // (b) All generators are translations, or the coupled gap is constant.
    let all_translations = system
        .generators
        .iter()
        .all(|g| g.map.as_translation().is_some());
    let coupled_constant = {
        let mut rng = factory.stream(stream_base + 1);
        let y0 = base + 0.4;
        let mut constant = true;
        scan_coupled(&cs, base, y0, cfg.coupled_steps, &mut rng, |_, a, b| {
            if ((b - a) - 0.4).abs() > cfg.coupled_tol {
                constant = false;
            }
        });
        constant
    };
    if all_translations || coupled_constant {
        notes.push(if all_translations {
            "every generator is a translation".to_string()
        } else {
            "coupled gap constant along the probe run".to_string()
        });
        return StructureReport {
            verdict: StructureClass::TranslationLike,
            window_points,
            min_orbit_gap,
            contraction_ratio: None,
            notes,
        };
    }

    // (c) Exact commutation with the unit shift.
    let shift = PLHomeo::translation(crate::homeo::rat_int(1));
    let commutes = system
        .generators
        .iter()
        .all(|g| g.map.compose(&shift) == shift.compose(&g.map));
    if commutes {
        notes.push("all generators commute with the unit shift".to_string());
        return StructureReport {
            verdict: StructureClass::LiftLike,
            window_points,
            min_orbit_gap,
            contraction_ratio: None,
            notes,
        };
    }

    // (d) Confirm strong contraction by a small gated experiment.
    let report = contraction_experiment(
        &cs,
        base,
        base + 0.4,
        k.a_f64(),
        k.b_f64(),
        cfg.contraction_steps,
        cfg.contraction_trials,
        cfg.contraction_factor,
        factory,
        stream_base + 2,
    );
    let final_median = report.checkpoints.last().and_then(|c| c.median_gap);
    let ratio = final_median.map(|m| m / report.initial_gap);
    match ratio {
        Some(r) if r < cfg.contraction_factor => {
            notes.push(format!("median gated gap shrank to {r:.4} of initial"));
            StructureReport {
                verdict: StructureClass::StrongContractionLike,
                window_points,
                min_orbit_gap,
                contraction_ratio: ratio,
                notes,
            }
        }
        Some(r) => {
            notes.push(format!(
                "median gated gap only reached {r:.4} of initial; heuristics disagree"
            ));
            StructureReport {
                verdict: StructureClass::Inconclusive,
                window_points,
                min_orbit_gap,
                contraction_ratio: ratio,
                notes,
            }
        }
        None => {
            notes.push("no gated trials at the final checkpoint".to_string());
            StructureReport {
                verdict: StructureClass::Inconclusive,
                window_points,
                min_orbit_gap,
                contraction_ratio: None,
                notes,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homeo::{rat, rat_int};
    use crate::walkgroup::Generator;

    fn lattice_measure(radius: i64) -> EmpiricalRadonMeasure {
        EmpiricalRadonMeasure::from_points((-radius..=radius).map(|i| i as f64), 0.0).unwrap()
    }

    fn translations_discrete() -> (GeneratorSystem, CompiledSystem) {
        let sys = GeneratorSystem::from_symmetric_pairs(vec![(
            "t1",
            PLHomeo::translation(rat_int(1)),
            rat(1, 2),
        )])
        .unwrap();
        let cs = CompiledSystem::new(&sys);
        (sys, cs)
    }

    fn affine_system() -> (GeneratorSystem, CompiledSystem) {
        let sys = GeneratorSystem::from_symmetric_pairs(vec![
            ("d", PLHomeo::scaling(rat_int(2)).unwrap(), rat(1, 4)),
            ("t", PLHomeo::translation(rat_int(1)), rat(1, 4)),
        ])
        .unwrap();
        let cs = CompiledSystem::new(&sys);
        (sys, cs)
    }

    #[test]
    fn distance_is_zero_on_diagonal_and_additive() {
        let d = NuDistance::new(lattice_measure(50));
        assert_eq!(d.dist(3.0, 3.0), 0.0);
        assert_eq!(d.dist(0.0, 0.0), 0.0); // atom at 0 does not break it
        for (x, y, z) in [(0.25, 3.5, 7.75), (-9.0, 0.0, 2.0), (-20.5, -20.0, 18.0)] {
            assert_eq!(d.dist(x, z), d.dist(x, y) + d.dist(y, z));
        }
        assert_eq!(d.dist(5.0, 1.0), d.dist(1.0, 5.0));
        assert_eq!(d.dist(0.0, 3.0), 3.0); // atoms at 0, 1, 2
    }

    #[test]
    fn coupled_translations_keep_distance_exactly() {
        let (_, cs) = translations_discrete();
        // Pool wide enough that 80 steps cannot reach its edge; starts a
        // half-integer apart so [x, y) always traps exactly one atom.
        let d = NuDistance::new(lattice_measure(400));
        let factory = StreamFactory::new(7);
        let report = martingale_check(&cs, &d, 0.5, 1.5, 80, 50, &factory, 0);
        // Integer translations shift both endpoints by the same integer, so
        // the lattice mass between them never changes.
        assert_eq!(report.initial, 1.0);
        assert_eq!(report.max_abs_z, 0.0);
        assert!(report.means.iter().all(|&m| m == 1.0));
        assert!(report.sigmas.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn martingale_equal_starts_rejected() {
        let (_, cs) = translations_discrete();
        let d = NuDistance::new(lattice_measure(10));
        let factory = StreamFactory::new(1);
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
            martingale_check(&cs, &d, 0.5, 0.5, 10, 4, &factory, 0)
        }));
        assert!(result.is_err());
    }

    #[test]
    fn martingale_report_is_thread_count_invariant_shape() {
        // Exercise the chunked reduction with a trial count that is not a
        // multiple of the chunk size.
        let (_, cs) = translations_discrete();
        let d = NuDistance::new(lattice_measure(300));
        let factory = StreamFactory::new(3);
        let report = martingale_check(&cs, &d, 0.1, 0.9, 5, TRIAL_CHUNK + 7, &factory, 0);
        assert_eq!(report.means.len(), 5);
        assert_eq!(report.trials, TRIAL_CHUNK + 7);
    }

    #[test]
    fn wilson_interval_brackets_the_point_estimate() {
        let (lo, hi) = wilson_interval(8, 10, 1.96);
        assert!(0.0 < lo && lo < 0.8 && 0.8 < hi && hi < 1.0);
        let (lo0, hi0) = wilson_interval(0, 10, 1.96);
        assert_eq!(lo0, 0.0);
        assert!(hi0 > 0.0);
        let (lo1, hi1) = wilson_interval(10, 10, 1.96);
        assert!(lo1 < 1.0);
        assert_eq!(hi1, 1.0);
        assert_eq!(wilson_interval(0, 0, 1.96), (0.0, 1.0));
    }

    #[test]
    fn contraction_translations_keep_the_gap() {
        let (_, cs) = translations_discrete();
        let factory = StreamFactory::new(17);
        // Quarter-integer starts: n + 0.25 and n + 0.75 are exact f64s and
        // their difference is exactly 0.5 at every step.
        let report =
            contraction_experiment(&cs, 0.25, 0.75, 0.0, 1.0, 400, 60, 0.1, &factory, 0);
        assert_eq!(report.initial_gap, 0.5);
        for cp in &report.checkpoints {
            if cp.gated > 0 {
                assert_eq!(cp.median_gap, Some(0.5));
                assert_eq!(cp.q90_gap, Some(0.5));
            }
        }
        assert_eq!(report.trials_contracted, 0);
        assert_eq!(report.contracted_ci.0, 0.0);
    }

    #[test]
    fn contraction_affine_squeezes_the_gated_gap() {
        let (_, cs) = affine_system();
        let factory = StreamFactory::new(23);
        // Being gated at the final step is rare (the walk is null
        // recurrent, return probability ~ 0.4/sqrt(n)), so the trial count
        // buys only a handful of gated samples there.
        let report =
            contraction_experiment(&cs, 0.3, 0.7, 0.0, 1.001, 1500, 800, 0.1, &factory, 0);
        let last = report.checkpoints.last().unwrap();
        assert!(last.gated >= 3, "too few gated trials: {}", last.gated);
        let median = last.median_gap.unwrap();
        assert!(
            median < 0.2 * report.initial_gap,
            "median gated gap {median} did not shrink"
        );
        assert!(
            report.contracted_ci.0 > 0.0,
            "contracting fraction CI includes 0"
        );
    }

    #[test]
    fn gap_trace_rows_are_consistent() {
        let (_, cs) = affine_system();
        let d = NuDistance::new(lattice_measure(100));
        let factory = StreamFactory::new(5);
        let rows = gap_trace(&cs, &d, 0.2, 0.8, 0.0, 1.0, 50, &mut factory.stream(0));
        assert_eq!(rows.len(), 51);
        assert_eq!(rows[0].step, 0);
        for row in &rows {
            assert!(row.gap_euclid >= 0.0, "coupling lost order");
            assert_eq!(row.gap_euclid, row.pos_y - row.pos_x);
            assert_eq!(row.gated, 0.0 <= row.pos_x && row.pos_x <= 1.0);
            assert_eq!(row.gap_nu, d.dist(row.pos_x, row.pos_y));
        }
    }

    #[test]
    fn coupled_extremes_bracket_the_final_gap() {
        let (_, cs) = affine_system();
        let d = NuDistance::new(lattice_measure(1000));
        let factory = StreamFactory::new(29);
        let ext = coupled_extremes(&cs, &d, 0.2, 0.8, 300, &mut factory.stream(0));
        assert!(ext.min_euclid <= ext.final_euclid && ext.final_euclid <= ext.max_euclid);
        assert!(ext.min_nu <= ext.final_nu && ext.final_nu <= ext.max_nu);
        assert!(ext.min_euclid >= 0.0);
    }

    #[test]
    fn classifier_discrete_translations() {
        let (sys, _) = translations_discrete();
        let factory = StreamFactory::new(101);
        let report = classify_structure(&sys, 500, &factory, 0);
        assert_eq!(report.verdict, StructureClass::DiscreteOrbit);
        assert!(report.min_orbit_gap.unwrap() > 0.5);
    }

    #[test]
    fn classifier_minimal_translations() {
        let root2 = rat(131_836_323, 93_222_358);
        let sys = GeneratorSystem::from_symmetric_pairs(vec![
            ("t1", PLHomeo::translation(rat_int(1)), rat(1, 4)),
            ("tr2", PLHomeo::translation(root2), rat(1, 4)),
        ])
        .unwrap();
        let factory = StreamFactory::new(103);
        let report = classify_structure(&sys, 2000, &factory, 0);
        assert_eq!(report.verdict, StructureClass::TranslationLike);
        // Dense orbit: the observed minimal gap sits well under the floor
        // (words of ~30 letters reach root-2 multiples m with |m| ~ 16,
        // giving spacing ~1/(2m) ~ 0.03).
        assert!(report.min_orbit_gap.unwrap() < 0.05);
    }

    #[test]
    fn classifier_affine_contracts() {
        let (sys, _) = affine_system();
        let factory = StreamFactory::new(107);
        let report = classify_structure(&sys, 2000, &factory, 0);
        assert_eq!(report.verdict, StructureClass::StrongContractionLike);
        assert!(report.contraction_ratio.unwrap() < 0.5);
    }

    #[test]
    fn classifier_lifted_rotation() {
        let ell = PLHomeo::unit_lift(vec![(rat_int(0), rat_int(0)), (rat(1, 3), rat(2, 3))])
            .unwrap();
        let sys = GeneratorSystem::from_symmetric_pairs(vec![
            ("t1", PLHomeo::translation(rat_int(1)), rat(1, 4)),
            ("ell", ell, rat(1, 4)),
        ])
        .unwrap();
        let factory = StreamFactory::new(109);
        let report = classify_structure(&sys, 2000, &factory, 0);
        assert_eq!(report.verdict, StructureClass::LiftLike);
    }

    #[test]
    fn classifier_degenerate_identityish_is_inconclusive() {
        // A single pair of inverse elbows fixing (-inf, 0]: walks from the
        // base point wiggle inside a bounded orbit, nothing contracts the
        // gate, nothing commutes with the unit shift.
        let elbow = PLHomeo::from_breakpoints(
            vec![rat_int(0), rat_int(1)],
            vec![rat_int(1), rat_int(2), rat_int(1)],
            rat_int(0),
        )
        .unwrap();
        let sys = GeneratorSystem::from_symmetric_pairs(vec![("e", elbow, rat(1, 2))]).unwrap();
        let factory = StreamFactory::new(113);
        let report = classify_structure(&sys, 400, &factory, 0);
        // The orbit of the midpoint accumulates (gaps shrink) yet the gap
        // between coupled walkers is not constant and nothing commutes with
        // the shift; whether the mini experiment confirms contraction is
        // scenario-dependent, but a crash-free verdict must come back.
        assert!(matches!(
            report.verdict,
            StructureClass::Inconclusive | StructureClass::StrongContractionLike
        ));
        assert!(!report.notes.is_empty());
    }

    #[test]
    fn quantile_sorted_picks_nearest_rank() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.5), Some(3.0));
        assert_eq!(quantile_sorted(&v, 0.9), Some(5.0));
        assert_eq!(quantile_sorted(&v, 0.0), Some(1.0));
        assert_eq!(quantile_sorted(&[], 0.5), None);
    }

    #[test]
    fn display_names_are_kebab() {
        assert_eq!(StructureClass::DiscreteOrbit.to_string(), "discrete-orbit");
        assert_eq!(
            StructureClass::StrongContractionLike.to_string(),
            "strong-contraction-like"
        );
    }

    #[test]
    fn weights_survive_into_generator_list() {
        // Guard: the classifier's translation test reads generator maps.
        let (sys, _) = translations_discrete();
        assert!(sys.generators.iter().all(|g: &Generator| g.map.as_translation().is_some()));
    }
}
