//! The walk engine: float trajectories driven by a compiled system.
//!
//! All trajectory arithmetic runs in f64 through [`CompiledMap`] evaluation,
//! which clamps each piece to its node values. That makes every compiled map
//! monotone (non-strictly) as a float function, so two walks driven by the
//! same letter sequence can never swap order: coupling comparisons are exact,
//! not approximate.
//!
//! Positions themselves are carried as [`WidePos`], a f64 with an unbounded
//! binary exponent. Plain f64 has two absorbing states a recurrent walk must
//! never see: past |x| = 2^1023 a doubling overflows to infinity, and every
//! generator fixes infinity, so a walk that wanders that deep can never come
//! back. With multiplicative generators the true walk reaches depth 2^1024
//! about once per thousand deep excursions, which silently turned a
//! recurrent system into a transient one and surfaced as stopping-time cap
//! breaches. Beyond every breakpoint each generator acts by one affine tail
//! branch whose additive part is below half an ulp, so the deep regime is
//! just mantissa-times-slope with an integer exponent: [`WidePos`] runs that
//! regime exactly, bit for bit what f64 would do if its exponent never
//! saturated, and walks that stay under 2^500 take the ordinary path
//! unchanged.
//!
//! Streaming scanners (`scan_walk`, `scan_coupled`) visit positions without
//! storing them, so long horizons cost O(1) memory; the Vec-returning
//! wrappers exist for short paths and tests.

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::homeo::compiled::CompiledMap;
use crate::homeo::rat_to_f64;
use crate::stream::StreamFactory;
use crate::walkgroup::{GeneratorSystem, RecurrenceInterval};

/// Default hard cap on stopping times: long enough for heavy-tailed but
/// almost-surely-finite return times, short enough to flag a walk that is
/// structurally unable to return.
pub const DEFAULT_STOP_CAP: usize = 10_000_000;

/// Positions with |value| below this power of two step through full
/// piecewise evaluation; deeper ones step through tail branches only.
const DEEP_EXP: i64 = 500;

/// A walk position with an unbounded binary exponent.
///
/// `Near(x)` is an ordinary f64 with |x| < 2^500, stepped through full
/// [`CompiledMap`] evaluation. `Deep` is m * 2^e with |m| in [1, 2) and
/// e >= 500: far beyond every breakpoint and every stopping support, where
/// a generator acts by its tail branch and the branch's additive part
/// rounds away below half an ulp. Deep steps multiply the mantissa in f64
/// and carry the exponent as an integer, which reproduces exactly what
/// f64 arithmetic would produce if its exponent field never overflowed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum WidePos {
    Near(f64),
    Deep { m: f64, e: i64 },
}

impl WidePos {
    pub fn new(x: f64) -> Self {
        debug_assert!(x.is_finite());
        if x.abs() < DEEP_THRESHOLD {
            WidePos::Near(x)
        } else {
            let bits = x.to_bits();
            let e = ((bits >> 52) & 0x7ff) as i64 - 1023;
            let m = f64::from_bits(bits & !(0x7ffu64 << 52) | (1023u64 << 52));
            WidePos::Deep { m, e }
        }
    }

    /// The position as f64, saturating to +-MAX once the exponent leaves
    /// f64 range. Saturation only ever applies astronomically far from
    /// every compact set a statistic reads.
    pub fn to_f64(self) -> f64 {
        match self {
            WidePos::Near(x) => x,
            WidePos::Deep { m, e } => {
                if e <= 1023 {
                    m * exp2i(e)
                } else {
                    f64::MAX.copysign(m)
                }
            }
        }
    }

    pub fn is_deep(self) -> bool {
        matches!(self, WidePos::Deep { .. })
    }
}

const DEEP_THRESHOLD: f64 = 3.273390607896142e150; // 2^500

/// 2^e as f64 for |e| well inside the normal exponent range.
fn exp2i(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// A generator system lowered to f64: compiled maps plus cumulative weights
/// and the per-letter tail branches that drive the deep regime.
#[derive(Clone, Debug)]
pub struct CompiledSystem {
    maps: Vec<CompiledMap>,
    cumulative: Vec<f64>,
    /// (left slope, right slope) of each map's tail branches.
    outer_slopes: Vec<(f64, f64)>,
}

impl CompiledSystem {
    pub fn new(system: &GeneratorSystem) -> Self {
        let maps: Vec<CompiledMap> = system.generators.iter().map(|g| g.map.compiled()).collect();
        let outer_slopes = maps
            .iter()
            .map(|m| {
                let ((sl, tl), (sr, tr)) = m.outer_pieces();
                assert!(
                    sl > 0.0 && sr > 0.0 && sl.is_finite() && sr.is_finite(),
                    "tail slopes of an orientation-preserving map must be positive and finite"
                );
                let bound = exp2i(400);
                assert!(
                    sl < bound && sr < bound && tl.abs() < bound && tr.abs() < bound,
                    "tail coefficients far beyond any realistic system"
                );
                (sl, sr)
            })
            .collect();
        let mut acc = 0.0;
        let cumulative = system
            .generators
            .iter()
            .map(|g| {
                acc += rat_to_f64(&g.weight);
                acc
            })
            .collect();
        CompiledSystem {
            maps,
            cumulative,
            outer_slopes,
        }
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Sample a letter index by weight.
    pub fn sample_letter(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        match self
            .cumulative
            .iter()
            .position(|&c| u < c)
        {
            Some(i) => i,
            None => self.maps.len() - 1,
        }
    }

    /// Apply generator `letter` to position x.
    ///
    /// Plain f64 in, plain f64 out: callers that walk long trajectories
    /// should go through [`CompiledSystem::step_wide`] so a deep walk is
    /// never absorbed at infinity.
    pub fn step(&self, x: f64, letter: usize) -> f64 {
        self.maps[letter].eval(x)
    }

    /// Apply generator `letter` to a wide position.
    ///
    /// Near positions take the ordinary evaluation path and promote when
    /// the image crosses 2^500; deep ones multiply by the tail slope of
    /// their side and demote when they come back under. Sequences of steps
    /// agree bit for bit with plain f64 evaluation whenever the latter
    /// stays finite.
    pub fn step_wide(&self, p: WidePos, letter: usize) -> WidePos {
        match p {
            WidePos::Near(x) => WidePos::new(self.maps[letter].eval(x)),
            WidePos::Deep { m, e } => {
                let (sl, sr) = self.outer_slopes[letter];
                let mut m2 = m * if m < 0.0 { sl } else { sr };
                let mut e2 = e;
                while m2.abs() >= 2.0 {
                    m2 *= 0.5;
                    e2 += 1;
                }
                while m2.abs() < 1.0 {
                    m2 *= 2.0;
                    e2 -= 1;
                }
                if e2 < DEEP_EXP {
                    WidePos::Near(m2 * exp2i(e2))
                } else {
                    WidePos::Deep { m: m2, e: e2 }
                }
            }
        }
    }
}

/// Drive one walk for `steps` moves, calling `visit(n, x_n)` for every
/// position including the start (n = 0).
pub fn scan_walk(
    cs: &CompiledSystem,
    x0: f64,
    steps: usize,
    rng: &mut impl Rng,
    mut visit: impl FnMut(usize, f64),
) {
    let mut p = WidePos::new(x0);
    visit(0, p.to_f64());
    for n in 1..=steps {
        p = cs.step_wide(p, cs.sample_letter(rng));
        visit(n, p.to_f64());
    }
}

/// Drive two walks through the same letter sequence, calling
/// `visit(n, x_n, y_n)` for every step including the start.
pub fn scan_coupled(
    cs: &CompiledSystem,
    x0: f64,
    y0: f64,
    steps: usize,
    rng: &mut impl Rng,
    mut visit: impl FnMut(usize, f64, f64),
) {
    let mut x = WidePos::new(x0);
    let mut y = WidePos::new(y0);
    visit(0, x.to_f64(), y.to_f64());
    for n in 1..=steps {
        let letter = cs.sample_letter(rng);
        x = cs.step_wide(x, letter);
        y = cs.step_wide(y, letter);
        visit(n, x.to_f64(), y.to_f64());
    }
}

/// Full path X_0..X_steps as a Vec.
pub fn simulate(cs: &CompiledSystem, x0: f64, steps: usize, rng: &mut impl Rng) -> Vec<f64> {
    let mut path = Vec::with_capacity(steps + 1);
    scan_walk(cs, x0, steps, rng, |_, x| path.push(x));
    path
}

/// Two full coupled paths driven by one letter sequence.
pub fn simulate_coupled(
    cs: &CompiledSystem,
    x0: f64,
    y0: f64,
    steps: usize,
    rng: &mut impl Rng,
) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(steps + 1);
    let mut ys = Vec::with_capacity(steps + 1);
    scan_coupled(cs, x0, y0, steps, rng, |_, x, y| {
        xs.push(x);
        ys.push(y);
    });
    (xs, ys)
}

/// Final position X_steps without storing the path.
pub fn final_position(cs: &CompiledSystem, x0: f64, steps: usize, rng: &mut impl Rng) -> f64 {
    let mut last = x0;
    scan_walk(cs, x0, steps, rng, |_, x| last = x);
    last
}

/// One recorded walk: positions X_0..X_n, the letters that produced them,
/// and the stream coordinates that make it reproducible.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub start: f64,
    /// X_0..X_n; positions[k+1] = step(positions[k], letters[k]).
    pub positions: Vec<f64>,
    pub letters: Vec<usize>,
    pub master_seed: u64,
    pub stream_index: u64,
}

/// Record a full trajectory from stream `index` of `factory`. Identical
/// (system, x0, n, master seed, index) always reproduce it bit for bit.
pub fn simulate_trajectory(
    cs: &CompiledSystem,
    x0: f64,
    steps: usize,
    factory: &StreamFactory,
    index: u64,
) -> Trajectory {
    let mut rng = factory.stream(index);
    let mut positions = Vec::with_capacity(steps + 1);
    let mut letters = Vec::with_capacity(steps);
    let mut x = WidePos::new(x0);
    positions.push(x.to_f64());
    for _ in 0..steps {
        let letter = cs.sample_letter(&mut rng);
        x = cs.step_wide(x, letter);
        letters.push(letter);
        positions.push(x.to_f64());
    }
    Trajectory {
        start: x0,
        positions,
        letters,
        master_seed: factory.master_seed(),
        stream_index: index,
    }
}

/// Number of trajectory positions inside the closed interval K.
pub fn visit_count(trajectory: &Trajectory, k: &RecurrenceInterval) -> usize {
    let (lo, hi) = (k.a_f64(), k.b_f64());
    trajectory
        .positions
        .iter()
        .filter(|&&x| lo <= x && x <= hi)
        .count()
}

/// Ensemble statistics of one-sided excursions and per-step side fractions.
#[derive(Clone, Debug)]
pub struct OscillationStats {
    /// Fraction of trajectories whose running max reached the up threshold A.
    pub frac_exceed_up: f64,
    /// Fraction whose running min reached the mirrored threshold 2 x0 - A.
    pub frac_exceed_down: f64,
    /// Per step k: fraction of trajectories with X_k >= x0 (index 0 is 1).
    pub frac_stay_above_start: Vec<f64>,
}

/// Run `trials` independent walks of length n from x0 and tabulate the
/// statistics above. The down threshold is the up threshold mirrored about
/// the start, so a symmetric system treats both the same way.
pub fn oscillation_stats(
    cs: &CompiledSystem,
    x0: f64,
    steps: usize,
    trials: usize,
    up_threshold: f64,
    factory: &StreamFactory,
    stream_base: u64,
) -> OscillationStats {
    let down_threshold = 2.0 * x0 - up_threshold;
    let (up, down, above) = (0..trials as u64)
        .into_par_iter()
        .fold(
            || (0usize, 0usize, vec![0usize; steps + 1]),
            |(mut up, mut down, mut above), t| {
                let mut rng = factory.stream(stream_base + t);
                let mut hit_up = false;
                let mut hit_down = false;
                scan_walk(cs, x0, steps, &mut rng, |n, x| {
                    hit_up |= x >= up_threshold;
                    hit_down |= x <= down_threshold;
                    if x >= x0 {
                        above[n] += 1;
                    }
                });
                up += hit_up as usize;
                down += hit_down as usize;
                (up, down, above)
            },
        )
        .reduce(
            || (0usize, 0usize, vec![0usize; steps + 1]),
            |(u1, d1, a1), (u2, d2, a2)| {
                let merged = a1.iter().zip(&a2).map(|(x, y)| x + y).collect();
                (u1 + u2, d1 + d2, merged)
            },
        );
    OscillationStats {
        frac_exceed_up: up as f64 / trials as f64,
        frac_exceed_down: down as f64 / trials as f64,
        frac_stay_above_start: above.iter().map(|&c| c as f64 / trials as f64).collect(),
    }
}

/// Cumulative visit counts to [lo, hi] at each checkpoint horizon:
/// entry k counts positions X_n with n <= checkpoints[k] and lo <= X_n <= hi.
/// Checkpoints must be ascending; the walk runs to the last one.
pub fn visit_counts_at(
    cs: &CompiledSystem,
    x0: f64,
    lo: f64,
    hi: f64,
    checkpoints: &[usize],
    rng: &mut impl Rng,
) -> Vec<usize> {
    assert!(checkpoints.windows(2).all(|w| w[0] < w[1]), "checkpoints must ascend");
    let steps = *checkpoints.last().expect("at least one checkpoint");
    let mut counts = Vec::with_capacity(checkpoints.len());
    let mut current = 0usize;
    let mut next_idx = 0usize;
    scan_walk(cs, x0, steps, rng, |n, x| {
        if lo <= x && x <= hi {
            current += 1;
        }
        while next_idx < checkpoints.len() && n == checkpoints[next_idx] {
            counts.push(current);
            next_idx += 1;
        }
    });
    counts
}

/// Count of sign changes of X_n - level along a path (zero values extend
/// the previous sign).
pub fn crossing_count(path: &[f64], level: f64) -> usize {
    let mut crossings = 0usize;
    let mut sign = 0i8;
    for &x in path {
        let s = if x > level {
            1
        } else if x < level {
            -1
        } else {
            0
        };
        if s != 0 {
            if sign != 0 && s != sign {
                crossings += 1;
            }
            sign = s;
        }
    }
    crossings
}

/// Continuous taper used as a stopping rate: exactly 1 on the core interval,
/// 0 outside the support, linear on the two ramps.
#[derive(Clone, Debug)]
pub struct BumpProfile {
    pub core_lo: f64,
    pub core_hi: f64,
    pub support_lo: f64,
    pub support_hi: f64,
}

impl BumpProfile {
    pub fn new(core_lo: f64, core_hi: f64, support_lo: f64, support_hi: f64) -> Self {
        assert!(
            support_lo < core_lo && core_lo < core_hi && core_hi < support_hi,
            "ramps must have positive width around the core"
        );
        BumpProfile {
            core_lo,
            core_hi,
            support_lo,
            support_hi,
        }
    }

    /// Core on K, support widened by `widen_frac` of K's width on each side.
    pub fn around(k: &RecurrenceInterval, widen_frac: f64) -> Self {
        let (a, b) = (k.a_f64(), k.b_f64());
        let pad = widen_frac * (b - a);
        Self::new(a, b, a - pad, b + pad)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.support_lo || x >= self.support_hi {
            0.0
        } else if x < self.core_lo {
            (x - self.support_lo) / (self.core_lo - self.support_lo)
        } else if x <= self.core_hi {
            1.0
        } else {
            (self.support_hi - x) / (self.support_hi - self.core_hi)
        }
    }
}

#[derive(Debug, Error)]
pub enum WalkError {
    #[error("stopping time exceeded cap of {cap} steps; walk is not returning to the stopping region")]
    StoppingTimeCap { cap: usize },
}

/// One stopped excursion. The prefix holds X_0..X_T, so the stop point is
/// the last entry and the occupied (pre-stop) positions are all the others.
#[derive(Clone, Debug)]
pub struct StoppedRun {
    pub prefix: Vec<f64>,
}

impl StoppedRun {
    /// Stopping time T >= 1.
    pub fn duration(&self) -> usize {
        self.prefix.len() - 1
    }

    /// X_T, the point whose stop draw was accepted.
    pub fn stop_point(&self) -> f64 {
        *self.prefix.last().expect("prefix holds X_0..X_T")
    }

    /// Occupied positions X_0..X_{T-1}; exactly T of them.
    pub fn occupation(&self) -> &[f64] {
        &self.prefix[..self.prefix.len() - 1]
    }
}

/// Walk the stop draw: move, then stop with probability `profile(X_{n+1})`.
/// `on_occupied` sees every pre-stop position as it happens; the return
/// value carries the stopping time and the stop point.
pub fn stopped_walk_fold(
    cs: &CompiledSystem,
    profile: &BumpProfile,
    x0: f64,
    cap: usize,
    rng: &mut impl Rng,
    mut on_occupied: impl FnMut(f64),
) -> Result<(usize, f64), WalkError> {
    let mut x = WidePos::new(x0);
    let mut occupied = 0usize;
    loop {
        if occupied >= cap {
            return Err(WalkError::StoppingTimeCap { cap });
        }
        on_occupied(x.to_f64());
        occupied += 1;
        let next = cs.step_wide(x, cs.sample_letter(rng));
        // A deep position sits far outside every profile support, so the
        // saturated f64 view evaluates to stop rate zero, exactly as the
        // true position would.
        let p = profile.eval(next.to_f64());
        if p > 0.0 && rng.gen::<f64>() < p {
            return Ok((occupied, next.to_f64()));
        }
        x = next;
    }
}

/// Run from x0 and record the whole stopped prefix. The stopping time is
/// always at least 1 because the draw happens after moving.
pub fn stopped_walk(
    cs: &CompiledSystem,
    profile: &BumpProfile,
    x0: f64,
    cap: usize,
    rng: &mut impl Rng,
) -> Result<StoppedRun, WalkError> {
    let mut prefix = Vec::new();
    let (_, stop) = stopped_walk_fold(cs, profile, x0, cap, rng, |x| prefix.push(x))?;
    prefix.push(stop);
    Ok(StoppedRun { prefix })
}

/// Frequency of word insertions at visits: over `trials` walks of length n,
/// count indices k <= n - |word| with X_k in K whose next |word| letters
/// spell `word` exactly.
#[derive(Clone, Debug)]
pub struct WordEventStats {
    /// Fraction of trials with at least one insertion hit.
    pub hit_fraction: f64,
    /// Mean number of insertion hits per trial.
    pub mean_hits: f64,
    /// Mean number of K-visits at indices k <= n - |word| per trial.
    pub mean_eligible_visits: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn word_event_frequency(
    cs: &CompiledSystem,
    x0: f64,
    k: &RecurrenceInterval,
    word: &[usize],
    steps: usize,
    trials: usize,
    factory: &StreamFactory,
    stream_base: u64,
) -> WordEventStats {
    assert!(word.len() <= steps, "word longer than the horizon");
    let (lo, hi) = (k.a_f64(), k.b_f64());
    let (trials_hit, total_hits, total_eligible) = (0..trials as u64)
        .into_par_iter()
        .fold(
            || (0usize, 0usize, 0usize),
            |(mut th, mut hits, mut eligible), t| {
                let mut rng = factory.stream(stream_base + t);
                let mut positions = Vec::with_capacity(steps + 1);
                let mut letters = Vec::with_capacity(steps);
                let mut x = WidePos::new(x0);
                positions.push(x.to_f64());
                for _ in 0..steps {
                    let letter = cs.sample_letter(&mut rng);
                    x = cs.step_wide(x, letter);
                    letters.push(letter);
                    positions.push(x.to_f64());
                }
                let mut trial_hits = 0usize;
                for start in 0..=steps - word.len() {
                    if lo <= positions[start] && positions[start] <= hi {
                        eligible += 1;
                        if letters[start..start + word.len()] == *word {
                            trial_hits += 1;
                        }
                    }
                }
                th += (trial_hits > 0) as usize;
                hits += trial_hits;
                (th, hits, eligible)
            },
        )
        .reduce(
            || (0, 0, 0),
            |(a1, b1, c1), (a2, b2, c2)| (a1 + a2, b1 + b2, c1 + c2),
        );
    WordEventStats {
        hit_fraction: trials_hit as f64 / trials as f64,
        mean_hits: total_hits as f64 / trials as f64,
        mean_eligible_visits: total_eligible as f64 / trials as f64,
    }
}
