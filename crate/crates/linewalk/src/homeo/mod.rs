//! Exact increasing piecewise-linear homeomorphisms of the real line.
//!
//! # Representation
//!
//! Every map is stored in one of three exact forms over arbitrary-precision
//! rationals:
//!
//! * `Affine`: g(x) = a x + b with a > 0 and no breakpoints;
//! * `Finite`: strictly ascending breakpoints x_0 < ... < x_{m-1} with node
//!   values y_i = g(x_i) and m + 1 piece slopes (two affine tails);
//! * `Lift`: a unit-periodic lift, g(x + 1) = g(x) + 1, described by its
//!   finitely many breakpoints within one period. Only this form can hold a
//!   non-translation map commuting with the unit translation, since such a
//!   map has a breakpoint in every period.
//!
//! # Canonical form
//!
//! Constructors and operations always canonicalize: a node survives only if
//! the slopes on its two sides differ, a breakpoint-free map collapses to
//! `Affine`, and a slope-one lift collapses to a translation. Canonical data
//! is unique per function, so derived equality is function equality.
//!
//! # Conventions
//!
//! `compose(g, h)` is g after h. Slopes are indexed by piece: slope 0 is the
//! left tail. All arithmetic in this module is exact; the floating-point
//! evaluation path used by simulations lives in [`compiled`].

pub mod compiled;
pub mod fixed;
pub mod phi;
pub mod serde_impl;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational scalar used throughout the algebraic layer.
pub type Rat = num_rational::BigRational;

/// Shorthand for the rational p/q. Panics if q = 0.
pub fn rat(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// Shorthand for the integer rational n.
pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Exact rational value of a finite f64 (every finite f64 is dyadic).
pub fn rat_from_f64(x: f64) -> Rat {
    Rat::from_float(x).expect("finite float")
}

/// Nearest f64 to a rational.
pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64().expect("rational in f64 range")
}

/// Rational stand-in for sqrt(2): a continued-fraction convergent so close
/// that it rounds to the same f64 as the true square root. Combined with
/// unit translations its orbits have spacing no coarser than the reciprocal
/// denominator (~1.1e-8), far below every tolerance used here, so they act
/// dense at simulation resolution while staying exactly rational.
pub fn root2_surrogate() -> Rat {
    rat(131_836_323, 93_222_358)
}

/// Construction errors for [`PLHomeo`].
#[derive(Debug, Error)]
pub enum HomeoError {
    #[error("breakpoints must be strictly ascending")]
    NonAscendingBreakpoints,
    #[error("expected one slope per piece: {expected} for {breakpoints} breakpoints, got {got}")]
    SlopeCount {
        breakpoints: usize,
        expected: usize,
        got: usize,
    },
    #[error("slopes must be strictly positive")]
    NonPositiveSlope,
    #[error("lift core breakpoints must be strictly ascending within [0, 1)")]
    InvalidLiftBreakpoints,
    #[error("lift core values must be strictly increasing with positive wrap slope")]
    InvalidLiftValues,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Repr {
    /// g(x) = slope * x + offset.
    Affine { slope: Rat, offset: Rat },
    /// Nodes (xs[i], ys[i]); slopes[i] is the piece left of xs[i], plus a final right tail.
    Finite {
        xs: Vec<Rat>,
        ys: Vec<Rat>,
        slopes: Vec<Rat>,
    },
    /// Unit-periodic lift: nodes (us[i], vs[i]) with us in [0, 1), extended by g(x+1) = g(x)+1.
    Lift { us: Vec<Rat>, vs: Vec<Rat> },
}

/// An increasing piecewise-linear homeomorphism of the line, in canonical form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PLHomeo {
    repr: Repr,
}

/// One affine piece of a map restricted to [x0, x1]: value y0 at x0, constant slope.
#[derive(Clone, Debug)]
pub struct Piece {
    pub x0: Rat,
    pub x1: Rat,
    pub y0: Rat,
    pub slope: Rat,
}

impl Piece {
    /// Value at the right end of the piece.
    pub fn y1(&self) -> Rat {
        &self.y0 + &self.slope * (&self.x1 - &self.x0)
    }
}

impl PLHomeo {
    // ---- constructors ----

    pub fn identity() -> Self {
        Self::affine(rat_int(1), rat_int(0)).unwrap()
    }

    /// g(x) = a x + b, requires a > 0.
    pub fn affine(a: Rat, b: Rat) -> Result<Self, HomeoError> {
        if a <= Rat::zero() {
            return Err(HomeoError::NonPositiveSlope);
        }
        Ok(PLHomeo {
            repr: Repr::Affine { slope: a, offset: b },
        })
    }

    /// Translation x + c.
    pub fn translation(c: Rat) -> Self {
        Self::affine(rat_int(1), c).unwrap()
    }

    /// Scaling a x, requires a > 0.
    pub fn scaling(a: Rat) -> Result<Self, HomeoError> {
        Self::affine(a, rat_int(0))
    }

    /// Build from strictly ascending breakpoints, one slope per piece
    /// (breakpoints + 1, leftmost tail first), and the value at the first
    /// breakpoint. An empty breakpoint list is rejected here, use [`affine`].
    pub fn from_breakpoints(
        breakpoints: Vec<Rat>,
        slopes: Vec<Rat>,
        anchor_value: Rat,
    ) -> Result<Self, HomeoError> {
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HomeoError::NonAscendingBreakpoints);
        }
        if slopes.len() != breakpoints.len() + 1 {
            return Err(HomeoError::SlopeCount {
                breakpoints: breakpoints.len(),
                expected: breakpoints.len() + 1,
                got: slopes.len(),
            });
        }
        if slopes.iter().any(|s| *s <= Rat::zero()) {
            return Err(HomeoError::NonPositiveSlope);
        }
        if breakpoints.is_empty() {
            return Self::affine(slopes.into_iter().next().unwrap(), anchor_value);
        }
        let mut ys = Vec::with_capacity(breakpoints.len());
        ys.push(anchor_value);
        for i in 1..breakpoints.len() {
            let rise = &slopes[i] * (&breakpoints[i] - &breakpoints[i - 1]);
            let y = &ys[i - 1] + rise;
            ys.push(y);
        }
        let left = slopes[0].clone();
        let right = slopes[breakpoints.len()].clone();
        Ok(Self::canonical_finite(breakpoints, ys, left, right))
    }

    /// Build a unit-periodic lift from its core nodes (u_i, v_i) with
    /// strictly ascending u_i in [0, 1) and strictly increasing v_i whose
    /// wrap-around rise v_0 + 1 - v_last is positive.
    pub fn unit_lift(core_nodes: Vec<(Rat, Rat)>) -> Result<Self, HomeoError> {
        if core_nodes.is_empty() {
            return Err(HomeoError::InvalidLiftBreakpoints);
        }
        let (us, vs): (Vec<Rat>, Vec<Rat>) = core_nodes.into_iter().unzip();
        if us[0] < Rat::zero() || us[us.len() - 1] >= Rat::one() {
            return Err(HomeoError::InvalidLiftBreakpoints);
        }
        if us.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HomeoError::InvalidLiftBreakpoints);
        }
        if vs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HomeoError::InvalidLiftValues);
        }
        if &vs[0] + rat_int(1) <= vs[vs.len() - 1] {
            return Err(HomeoError::InvalidLiftValues);
        }
        Ok(Self::canonical_lift(us, vs))
    }

    // ---- canonicalization ----

    /// Canonical map through the given finite nodes with the given tail slopes.
    /// Interior slopes are the exact secants; collinear nodes are dropped.
    fn canonical_finite(xs: Vec<Rat>, ys: Vec<Rat>, left: Rat, right: Rat) -> Self {
        debug_assert_eq!(xs.len(), ys.len());
        let m = xs.len();
        if m == 0 {
            unreachable!("canonical_finite requires at least one node");
        }
        // slopes[i] is the piece left of node i; slopes[m] is the right tail.
        let mut slopes = Vec::with_capacity(m + 1);
        slopes.push(left);
        for i in 1..m {
            slopes.push((&ys[i] - &ys[i - 1]) / (&xs[i] - &xs[i - 1]));
        }
        slopes.push(right);
        let keep: Vec<usize> = (0..m).filter(|&i| slopes[i] != slopes[i + 1]).collect();
        if keep.is_empty() {
            let offset = &ys[0] - &slopes[0] * &xs[0];
            return PLHomeo {
                repr: Repr::Affine {
                    slope: slopes.into_iter().next().unwrap(),
                    offset,
                },
            };
        }
        let kept_slopes: Vec<Rat> = keep
            .iter()
            .map(|&i| slopes[i].clone())
            .chain(std::iter::once(slopes[m].clone()))
            .collect();
        let kept_xs: Vec<Rat> = keep.iter().map(|&i| xs[i].clone()).collect();
        let kept_ys: Vec<Rat> = keep.iter().map(|&i| ys[i].clone()).collect();
        PLHomeo {
            repr: Repr::Finite {
                xs: kept_xs,
                ys: kept_ys,
                slopes: kept_slopes,
            },
        }
    }

    /// Canonical lift through the given core nodes; collinear nodes are
    /// dropped cyclically and a slope-one core collapses to a translation.
    fn canonical_lift(us: Vec<Rat>, vs: Vec<Rat>) -> Self {
        let m = us.len();
        // piece_slopes[i] is the slope on [us[i], us[i+1]] (cyclic wrap at m-1).
        let piece_slopes: Vec<Rat> = (0..m)
            .map(|i| {
                if i + 1 < m {
                    (&vs[i + 1] - &vs[i]) / (&us[i + 1] - &us[i])
                } else {
                    (&vs[0] + rat_int(1) - &vs[m - 1]) / (&us[0] + rat_int(1) - &us[m - 1])
                }
            })
            .collect();
        let keep: Vec<usize> = (0..m)
            .filter(|&i| piece_slopes[(i + m - 1) % m] != piece_slopes[i])
            .collect();
        if keep.is_empty() {
            // Equal slope everywhere plus unit periodicity forces slope one.
            let offset = &vs[0] - &us[0];
            return PLHomeo::translation(offset);
        }
        debug_assert!(keep.len() >= 2, "a single essential lift node is impossible");
        PLHomeo {
            repr: Repr::Lift {
                us: keep.iter().map(|&i| us[i].clone()).collect(),
                vs: keep.iter().map(|&i| vs[i].clone()).collect(),
            },
        }
    }

    // ---- accessors ----

    /// Breakpoints of the map: finite list, or the core breakpoints for a lift.
    pub fn breakpoints(&self) -> Vec<Rat> {
        match &self.repr {
            Repr::Affine { .. } => Vec::new(),
            Repr::Finite { xs, .. } => xs.clone(),
            Repr::Lift { us, .. } => us.clone(),
        }
    }

    /// Piece slopes, leftmost first (cyclic core slopes for a lift).
    pub fn piece_slopes(&self) -> Vec<Rat> {
        match &self.repr {
            Repr::Affine { slope, .. } => vec![slope.clone()],
            Repr::Finite { slopes, .. } => slopes.clone(),
            Repr::Lift { us, vs } => (0..us.len())
                .map(|i| self.lift_piece_slope(us, vs, i))
                .collect(),
        }
    }

    /// Value at the first breakpoint; for an affine map, the offset.
    pub fn anchor_value(&self) -> Rat {
        match &self.repr {
            Repr::Affine { offset, .. } => offset.clone(),
            Repr::Finite { ys, .. } => ys[0].clone(),
            Repr::Lift { vs, .. } => vs[0].clone(),
        }
    }

    /// Some(c) when the map is the translation x + c.
    pub fn as_translation(&self) -> Option<Rat> {
        match &self.repr {
            Repr::Affine { slope, offset } if slope.is_one() => Some(offset.clone()),
            _ => None,
        }
    }

    /// Some((a, b)) when the map is affine a x + b.
    pub fn as_affine(&self) -> Option<(Rat, Rat)> {
        match &self.repr {
            Repr::Affine { slope, offset } => Some((slope.clone(), offset.clone())),
            _ => None,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(&self.repr, Repr::Affine { slope, offset } if slope.is_one() && offset.is_zero())
    }

    /// True for the unit-periodic representation.
    pub fn is_lift(&self) -> bool {
        matches!(&self.repr, Repr::Lift { .. })
    }

    /// Largest piece slope.
    pub fn max_slope(&self) -> Rat {
        self.piece_slopes().into_iter().max().unwrap()
    }

    /// Smallest piece slope.
    pub fn min_slope(&self) -> Rat {
        self.piece_slopes().into_iter().min().unwrap()
    }

    fn lift_piece_slope(&self, us: &[Rat], vs: &[Rat], i: usize) -> Rat {
        let m = us.len();
        if i + 1 < m {
            (&vs[i + 1] - &vs[i]) / (&us[i + 1] - &us[i])
        } else {
            (&vs[0] + rat_int(1) - &vs[m - 1]) / (&us[0] + rat_int(1) - &us[m - 1])
        }
    }

    // ---- evaluation ----

    /// Exact value g(x).
    pub fn eval(&self, x: &Rat) -> Rat {
        match &self.repr {
            Repr::Affine { slope, offset } => slope * x + offset,
            Repr::Finite { xs, ys, slopes } => {
                let j = xs.partition_point(|b| b <= x);
                if j == 0 {
                    &ys[0] + &slopes[0] * (x - &xs[0])
                } else {
                    &ys[j - 1] + &slopes[j] * (x - &xs[j - 1])
                }
            }
            Repr::Lift { us, vs } => {
                let k = (x - &us[0]).floor();
                let t = x - &k;
                let j = us.partition_point(|u| u <= &t).max(1) - 1;
                let s = self.lift_piece_slope(us, vs, j);
                &vs[j] + s * (&t - &us[j]) + k
            }
        }
    }

    /// Exact value g^{-1}(y), without materializing the inverse.
    pub fn eval_inverse(&self, y: &Rat) -> Rat {
        match &self.repr {
            Repr::Affine { slope, offset } => (y - offset) / slope,
            Repr::Finite { xs, ys, slopes } => {
                let j = ys.partition_point(|v| v <= y);
                if j == 0 {
                    &xs[0] + (y - &ys[0]) / &slopes[0]
                } else {
                    &xs[j - 1] + (y - &ys[j - 1]) / &slopes[j]
                }
            }
            Repr::Lift { us, vs } => {
                let k = (y - &vs[0]).floor();
                let t = y - &k;
                let j = vs.partition_point(|v| v <= &t).max(1) - 1;
                let s = self.lift_piece_slope(us, vs, j);
                &us[j] + (&t - &vs[j]) / s + k
            }
        }
    }

    // ---- algebra ----

    /// Composition g after h (self after other). Breakpoints of the result
    /// are the breakpoints of h together with the h-preimages of the
    /// breakpoints of g. Composing a lift with anything other than a lift or
    /// a translation leaves both finite families and panics.
    pub fn compose(&self, other: &PLHomeo) -> PLHomeo {
        let self_liftish = self.is_lift() || self.as_translation().is_some();
        let other_liftish = other.is_lift() || other.as_translation().is_some();
        if self.is_lift() || other.is_lift() {
            assert!(
                self_liftish && other_liftish,
                "compose: mixing a unit-periodic lift with a non-translation finite map \
                 is not representable with finite breakpoint data"
            );
            return self.lift_compose(other);
        }
        let mut bps = other.breakpoints();
        for b in self.breakpoints() {
            bps.push(other.eval_inverse(&b));
        }
        bps.sort();
        bps.dedup();
        if bps.is_empty() {
            let (a1, b1) = self.as_affine().unwrap();
            let (a2, b2) = other.as_affine().unwrap();
            let offset = &a1 * &b2 + &b1;
            return PLHomeo::affine(a1 * a2, offset).unwrap();
        }
        let ys: Vec<Rat> = bps.iter().map(|x| self.eval(&other.eval(x))).collect();
        let left = self.leftmost_slope() * other.leftmost_slope();
        let right = self.rightmost_slope() * other.rightmost_slope();
        Self::canonical_finite(bps, ys, left, right)
    }

    fn lift_compose(&self, other: &PLHomeo) -> PLHomeo {
        let (gu, _gv) = self.lift_nodes();
        let (hu, _hv) = other.lift_nodes();
        let mut cands: Vec<Rat> = hu;
        for u in gu {
            cands.push(reduce_unit(&other.eval_inverse(&u)));
        }
        cands.sort();
        cands.dedup();
        let vals: Vec<Rat> = cands.iter().map(|u| self.eval(&other.eval(u))).collect();
        Self::canonical_lift(cands, vals)
    }

    /// Core nodes viewed as a lift; a translation yields the single node (0, c).
    fn lift_nodes(&self) -> (Vec<Rat>, Vec<Rat>) {
        match &self.repr {
            Repr::Lift { us, vs } => (us.clone(), vs.clone()),
            Repr::Affine { slope, offset } if slope.is_one() => {
                (vec![rat_int(0)], vec![offset.clone()])
            }
            _ => unreachable!("lift_nodes on a non-liftish map"),
        }
    }

    /// Exact inverse map.
    pub fn invert(&self) -> PLHomeo {
        match &self.repr {
            Repr::Affine { slope, offset } => {
                PLHomeo::affine(slope.recip(), -offset / slope).unwrap()
            }
            Repr::Finite { xs, ys, slopes } => PLHomeo {
                repr: Repr::Finite {
                    xs: ys.clone(),
                    ys: xs.clone(),
                    slopes: slopes.iter().map(|s| s.recip()).collect(),
                },
            },
            Repr::Lift { us, vs } => {
                let mut nodes: Vec<(Rat, Rat)> = us
                    .iter()
                    .zip(vs)
                    .map(|(u, v)| {
                        let k = v.floor();
                        (v - &k, u - &k)
                    })
                    .collect();
                nodes.sort_by(|a, b| a.0.cmp(&b.0));
                let (w, x): (Vec<Rat>, Vec<Rat>) = nodes.into_iter().unzip();
                Self::canonical_lift(w, x)
            }
        }
    }

    fn leftmost_slope(&self) -> Rat {
        match &self.repr {
            Repr::Affine { slope, .. } => slope.clone(),
            Repr::Finite { slopes, .. } => slopes[0].clone(),
            Repr::Lift { .. } => unreachable!("tail slope of a lift"),
        }
    }

    fn rightmost_slope(&self) -> Rat {
        match &self.repr {
            Repr::Affine { slope, .. } => slope.clone(),
            Repr::Finite { slopes, .. } => slopes[slopes.len() - 1].clone(),
            Repr::Lift { .. } => unreachable!("tail slope of a lift"),
        }
    }

    // ---- piece enumeration ----

    /// The affine pieces covering [lo, hi], clipped to it, in order.
    /// Used by the exact integration routines. Requires lo <= hi.
    pub fn pieces_between(&self, lo: &Rat, hi: &Rat) -> Vec<Piece> {
        assert!(lo <= hi, "pieces_between requires lo <= hi");
        let mut cuts: Vec<Rat> = vec![lo.clone()];
        match &self.repr {
            Repr::Affine { .. } => {}
            Repr::Finite { xs, .. } => {
                for x in xs {
                    if x > lo && x < hi {
                        cuts.push(x.clone());
                    }
                }
            }
            Repr::Lift { us, .. } => {
                // Breakpoints in [lo, hi] are us[i] + k over a bounded k range.
                let k_lo = (lo - &us[us.len() - 1]).floor();
                let k_hi = (hi - &us[0]).floor();
                let mut k = k_lo;
                while k <= k_hi {
                    for u in us {
                        let b = u + &k;
                        if &b > lo && &b < hi {
                            cuts.push(b);
                        }
                    }
                    k += Rat::one();
                }
                cuts[1..].sort();
            }
        }
        cuts.push(hi.clone());
        cuts.windows(2)
            .filter(|w| w[0] < w[1])
            .map(|w| {
                let y0 = self.eval(&w[0]);
                let y1 = self.eval(&w[1]);
                let slope = (&y1 - &y0) / (&w[1] - &w[0]);
                Piece {
                    x0: w[0].clone(),
                    x1: w[1].clone(),
                    y0,
                    slope,
                }
            })
            .collect()
    }
}

/// x reduced into [0, 1) by subtracting its floor.
fn reduce_unit(x: &Rat) -> Rat {
    x - x.floor()
}

/// Absolute value helper for rationals.
pub fn rat_abs(r: &Rat) -> Rat {
    r.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pl(bps: &[(i64, i64)], slopes: &[(i64, i64)], anchor: (i64, i64)) -> PLHomeo {
        PLHomeo::from_breakpoints(
            bps.iter().map(|&(p, q)| rat(p, q)).collect(),
            slopes.iter().map(|&(p, q)| rat(p, q)).collect(),
            rat(anchor.0, anchor.1),
        )
        .unwrap()
    }

    /// The elbow map: identity left of 0, slope two right of 0.
    fn elbow() -> PLHomeo {
        pl(&[(0, 1)], &[(1, 1), (2, 1)], (0, 1))
    }

    /// The standard example lift: core nodes (0, 0) and (1/3, 2/3).
    fn example_lift() -> PLHomeo {
        PLHomeo::unit_lift(vec![
            (rat_int(0), rat_int(0)),
            (rat(1, 3), rat(2, 3)),
        ])
        .unwrap()
    }

    #[test]
    fn eval_identity_and_affine() {
        let id = PLHomeo::identity();
        assert_eq!(id.eval(&rat(37, 10)), rat(37, 10));
        let double = PLHomeo::scaling(rat_int(2)).unwrap();
        assert_eq!(double.eval(&rat_int(3)), rat_int(6));
    }

    #[test]
    fn eval_piecewise_example() {
        let g = elbow();
        assert_eq!(g.eval(&rat_int(1)), rat_int(2));
        assert_eq!(g.eval(&rat_int(-1)), rat_int(-1));
        assert_eq!(g.eval(&rat(1, 2)), rat_int(1));
    }

    #[test]
    fn eval_inverse_matches_eval() {
        let g = elbow();
        for x in [-3i64, -1, 0, 1, 5] {
            let x = rat_int(x);
            assert_eq!(g.eval_inverse(&g.eval(&x)), x);
        }
    }

    #[test]
    fn compose_affine_pair() {
        let double = PLHomeo::scaling(rat_int(2)).unwrap();
        let shift = PLHomeo::translation(rat_int(3));
        let c = double.compose(&shift);
        assert_eq!(c, PLHomeo::affine(rat_int(2), rat_int(6)).unwrap());
    }

    #[test]
    fn compose_moves_breakpoints_through_inner_map() {
        // elbow after unit translation: single breakpoint at -1.
        let g = elbow();
        let h = PLHomeo::translation(rat_int(1));
        let c = g.compose(&h);
        assert_eq!(c.breakpoints(), vec![rat_int(-1)]);
        assert_eq!(c.eval(&rat_int(-1)), rat_int(0));
        assert_eq!(c.eval(&rat_int(0)), rat_int(2));
    }

    #[test]
    fn compose_collapses_inverse_pair_to_identity() {
        let g = elbow();
        assert!(g.compose(&g.invert()).is_identity());
        assert!(g.invert().compose(&g).is_identity());
    }

    #[test]
    fn invert_swaps_roles() {
        let g = elbow();
        let inv = g.invert();
        assert_eq!(inv.eval(&rat_int(2)), rat_int(1));
        assert_eq!(inv.eval(&rat_int(-1)), rat_int(-1));
        assert_eq!(inv.breakpoints(), vec![rat_int(0)]);
    }

    #[test]
    fn canonicalization_drops_collinear_nodes() {
        // Slope one on both sides of the listed breakpoint: affine in disguise.
        let g = pl(&[(2, 1)], &[(1, 1), (1, 1)], (5, 1));
        assert_eq!(g, PLHomeo::affine(rat_int(1), rat_int(3)).unwrap());
    }

    #[test]
    fn lift_eval_and_periodicity() {
        let l = example_lift();
        assert_eq!(l.eval(&rat_int(0)), rat_int(0));
        assert_eq!(l.eval(&rat(1, 6)), rat(1, 3));
        assert_eq!(l.eval(&rat(1, 2)), rat(3, 4));
        assert_eq!(l.eval(&rat_int(5)), rat_int(5));
        // g(x + 1) = g(x) + 1 on a non-breakpoint sample.
        let x = rat(7, 5);
        assert_eq!(l.eval(&(&x + rat_int(1))), l.eval(&x) + rat_int(1));
    }

    #[test]
    fn lift_commutes_with_unit_translation_exactly() {
        let l = example_lift();
        let t = PLHomeo::translation(rat_int(1));
        assert_eq!(l.compose(&t), t.compose(&l));
    }

    #[test]
    fn lift_inverse_round_trip() {
        let l = example_lift();
        assert!(l.compose(&l.invert()).is_identity());
        let again = l.invert().invert();
        assert_eq!(again, l);
    }

    #[test]
    fn slope_one_lift_collapses_to_translation() {
        let l = PLHomeo::unit_lift(vec![
            (rat_int(0), rat(1, 2)),
            (rat(1, 2), rat_int(1)),
        ])
        .unwrap();
        assert_eq!(l.as_translation(), Some(rat(1, 2)));
    }

    #[test]
    #[should_panic(expected = "not representable")]
    fn lift_times_scaling_panics() {
        let l = example_lift();
        let double = PLHomeo::scaling(rat_int(2)).unwrap();
        let _ = double.compose(&l);
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(PLHomeo::from_breakpoints(
            vec![rat_int(1), rat_int(0)],
            vec![rat_int(1), rat_int(1), rat_int(1)],
            rat_int(0)
        )
        .is_err());
        assert!(PLHomeo::from_breakpoints(
            vec![rat_int(0)],
            vec![rat_int(1), rat_int(-1)],
            rat_int(0)
        )
        .is_err());
        assert!(PLHomeo::affine(rat_int(0), rat_int(1)).is_err());
    }

    #[test]
    fn pieces_between_covers_interval() {
        let g = elbow();
        let pieces = g.pieces_between(&rat_int(-2), &rat_int(3));
        assert_eq!(pieces.len(), 2);
        assert_eq!(pieces[0].x0, rat_int(-2));
        assert_eq!(pieces[1].x1, rat_int(3));
        assert_eq!(pieces[0].y1(), rat_int(0));
    }

    #[test]
    fn lift_pieces_between_enumerates_periods() {
        let l = example_lift();
        let pieces = l.pieces_between(&rat_int(0), &rat_int(2));
        // Two pieces per period.
        assert_eq!(pieces.len(), 4);
        let total_rise: Rat = pieces.iter().map(|p| p.y1() - p.y0.clone()).sum();
        assert_eq!(total_rise, rat_int(2));
    }
}
