//! Fixed-point sets of piecewise-linear maps: disjoint closed spans
//! (isolated points are degenerate spans), with a periodic variant for
//! unit-periodic lifts. Supports emptiness, intersection, and picking a
//! witness point, which is what the irreducibility check consumes.

use num_traits::{One, Zero};

use super::{rat_int, PLHomeo, Piece, Rat, Repr};

/// A closed span [lo, hi]; a missing bound means unbounded on that side.
/// lo == hi encodes an isolated point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedSpan {
    pub lo: Option<Rat>,
    pub hi: Option<Rat>,
}

impl ClosedSpan {
    pub fn point(x: Rat) -> Self {
        ClosedSpan {
            lo: Some(x.clone()),
            hi: Some(x),
        }
    }

    pub fn bounded(lo: Rat, hi: Rat) -> Self {
        debug_assert!(lo <= hi);
        ClosedSpan {
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    fn contains(&self, x: &Rat) -> bool {
        self.lo.as_ref().is_none_or(|l| l <= x) && self.hi.as_ref().is_none_or(|h| x <= h)
    }

    /// Intersection of two closed spans, when nonempty.
    fn meet(&self, other: &ClosedSpan) -> Option<ClosedSpan> {
        let lo = match (&self.lo, &other.lo) {
            (Some(a), Some(b)) => Some(a.max(b).clone()),
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        };
        let hi = match (&self.hi, &other.hi) {
            (Some(a), Some(b)) => Some(a.min(b).clone()),
            (Some(a), None) | (None, Some(a)) => Some(a.clone()),
            (None, None) => None,
        };
        if let (Some(l), Some(h)) = (&lo, &hi) {
            if l > h {
                return None;
            }
        }
        Some(ClosedSpan { lo, hi })
    }

    /// Any point inside the span.
    fn witness(&self) -> Rat {
        match (&self.lo, &self.hi) {
            (Some(l), _) => l.clone(),
            (None, Some(h)) => h.clone(),
            (None, None) => rat_int(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum FixedKind {
    /// Disjoint ascending spans; empty vector means empty set.
    Finite(Vec<ClosedSpan>),
    /// Spans within [0, 1), repeated at every integer shift.
    PeriodicUnit(Vec<ClosedSpan>),
    /// The whole line (identity map).
    All,
}

/// The set of fixed points of a map.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedSet {
    kind: FixedKind,
}

impl FixedSet {
    pub fn empty() -> Self {
        FixedSet {
            kind: FixedKind::Finite(Vec::new()),
        }
    }

    pub fn whole_line() -> Self {
        FixedSet {
            kind: FixedKind::All,
        }
    }

    fn finite(mut spans: Vec<ClosedSpan>) -> Self {
        spans = merge_spans(spans);
        FixedSet {
            kind: FixedKind::Finite(spans),
        }
    }

    fn periodic(mut spans: Vec<ClosedSpan>) -> Self {
        spans = merge_spans(spans);
        if spans.is_empty() {
            return Self::empty();
        }
        FixedSet {
            kind: FixedKind::PeriodicUnit(spans),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(&self.kind, FixedKind::Finite(s) if s.is_empty())
    }

    /// The spans of a finite fixed set, ascending. Panics on periodic sets
    /// and the whole line, which have no finite span list.
    pub fn spans(&self) -> &[ClosedSpan] {
        match &self.kind {
            FixedKind::Finite(s) => s,
            _ => panic!("spans: fixed set is not a finite union of spans"),
        }
    }

    pub fn contains(&self, x: &Rat) -> bool {
        match &self.kind {
            FixedKind::All => true,
            FixedKind::Finite(spans) => spans.iter().any(|s| s.contains(x)),
            FixedKind::PeriodicUnit(spans) => {
                let t = x - x.floor();
                spans.iter().any(|s| s.contains(&t))
            }
        }
    }

    /// A point of the set, if any.
    pub fn witness(&self) -> Option<Rat> {
        match &self.kind {
            FixedKind::All => Some(rat_int(0)),
            FixedKind::Finite(spans) => spans.first().map(|s| s.witness()),
            FixedKind::PeriodicUnit(spans) => spans.first().map(|s| s.witness()),
        }
    }

    /// Set intersection. Exact in every case except one: intersecting an
    /// unbounded finite span with a periodic set clips the unbounded span to
    /// a single representative period, which preserves emptiness and
    /// witnesses (the only properties consumed downstream) because a
    /// periodic set meets an unbounded span iff it meets one period of it.
    pub fn intersect(&self, other: &FixedSet) -> FixedSet {
        use FixedKind::*;
        match (&self.kind, &other.kind) {
            (All, _) => other.clone(),
            (_, All) => self.clone(),
            (Finite(a), Finite(b)) => {
                let mut out = Vec::new();
                for sa in a {
                    for sb in b {
                        if let Some(m) = sa.meet(sb) {
                            out.push(m);
                        }
                    }
                }
                FixedSet::finite(out)
            }
            (PeriodicUnit(a), PeriodicUnit(b)) => {
                let mut out = Vec::new();
                for sa in a {
                    for sb in b {
                        if let Some(m) = sa.meet(sb) {
                            out.push(m);
                        }
                    }
                }
                FixedSet::periodic(out)
            }
            (Finite(f), PeriodicUnit(p)) | (PeriodicUnit(p), Finite(f)) => {
                let mut out = Vec::new();
                for span in f {
                    let clipped = clip_to_representative(span);
                    let (lo, hi) = (clipped.lo.clone().unwrap(), clipped.hi.clone().unwrap());
                    // Integer shifts k with [lo, hi] meeting [k, k + 1).
                    let mut k = lo.floor();
                    while k <= hi {
                        for ps in p {
                            let shifted = ClosedSpan {
                                lo: ps.lo.as_ref().map(|l| l + &k),
                                hi: ps.hi.as_ref().map(|h| h + &k),
                            };
                            if let Some(m) = clipped.meet(&shifted) {
                                out.push(m);
                            }
                        }
                        k += Rat::one();
                    }
                }
                FixedSet::finite(out)
            }
        }
    }
}

/// Bound an unbounded span to a length-one representative window.
fn clip_to_representative(span: &ClosedSpan) -> ClosedSpan {
    match (&span.lo, &span.hi) {
        (Some(l), Some(h)) => ClosedSpan::bounded(l.clone(), h.clone()),
        (Some(l), None) => ClosedSpan::bounded(l.clone(), l + rat_int(1)),
        (None, Some(h)) => ClosedSpan::bounded(h - rat_int(1), h.clone()),
        (None, None) => ClosedSpan::bounded(rat_int(0), rat_int(1)),
    }
}

/// Sort spans and merge overlapping or touching ones.
fn merge_spans(mut spans: Vec<ClosedSpan>) -> Vec<ClosedSpan> {
    spans.sort_by(|a, b| match (&a.lo, &b.lo) {
        (None, None) => std::cmp::Ordering::Equal,
        (None, Some(_)) => std::cmp::Ordering::Less,
        (Some(_), None) => std::cmp::Ordering::Greater,
        (Some(x), Some(y)) => x.cmp(y),
    });
    let mut out: Vec<ClosedSpan> = Vec::new();
    for s in spans {
        if let Some(last) = out.last_mut() {
            let touches = match (&last.hi, &s.lo) {
                (None, _) => true,
                (Some(h), Some(l)) => l <= h,
                (Some(_), None) => true,
            };
            if touches {
                last.hi = match (&last.hi, &s.hi) {
                    (None, _) | (_, None) => None,
                    (Some(a), Some(b)) => Some(a.max(b).clone()),
                };
                continue;
            }
        }
        out.push(s);
    }
    out
}

/// Fixed points of one affine piece over its closed domain.
fn piece_fixed(piece: &Piece, dom_lo: Option<&Rat>, dom_hi: Option<&Rat>) -> Option<ClosedSpan> {
    let one = Rat::one();
    if piece.slope == one {
        // g - id constant on the piece.
        if piece.y0 == piece.x0 {
            return Some(ClosedSpan {
                lo: dom_lo.cloned(),
                hi: dom_hi.cloned(),
            });
        }
        return None;
    }
    // Solve y0 + s (x - x0) = x.
    let x_star = (&piece.y0 - &piece.slope * &piece.x0) / (&one - &piece.slope);
    let in_lo = dom_lo.is_none_or(|l| l <= &x_star);
    let in_hi = dom_hi.is_none_or(|h| &x_star <= h);
    if in_lo && in_hi {
        Some(ClosedSpan::point(x_star))
    } else {
        None
    }
}

impl PLHomeo {
    /// The exact fixed-point set.
    pub fn fixed_points(&self) -> FixedSet {
        match &self.repr {
            Repr::Affine { slope, offset } => {
                if slope.is_one() {
                    if offset.is_zero() {
                        FixedSet::whole_line()
                    } else {
                        FixedSet::empty()
                    }
                } else {
                    let x = offset / (Rat::one() - slope);
                    FixedSet::finite(vec![ClosedSpan::point(x)])
                }
            }
            Repr::Finite { xs, ys, slopes } => {
                let m = xs.len();
                let mut spans = Vec::new();
                // Left tail: anchored at the first node.
                let left = Piece {
                    x0: xs[0].clone(),
                    x1: xs[0].clone(),
                    y0: ys[0].clone(),
                    slope: slopes[0].clone(),
                };
                if let Some(s) = piece_fixed(&left, None, Some(&xs[0])) {
                    spans.push(s);
                }
                for i in 0..m - 1 {
                    let piece = Piece {
                        x0: xs[i].clone(),
                        x1: xs[i + 1].clone(),
                        y0: ys[i].clone(),
                        slope: slopes[i + 1].clone(),
                    };
                    if let Some(s) = piece_fixed(&piece, Some(&xs[i]), Some(&xs[i + 1])) {
                        spans.push(s);
                    }
                }
                let right = Piece {
                    x0: xs[m - 1].clone(),
                    x1: xs[m - 1].clone(),
                    y0: ys[m - 1].clone(),
                    slope: slopes[m].clone(),
                };
                if let Some(s) = piece_fixed(&right, Some(&xs[m - 1]), None) {
                    spans.push(s);
                }
                FixedSet::finite(spans)
            }
            Repr::Lift { us, vs } => {
                let m = us.len();
                let mut parts = Vec::new();
                for i in 0..m {
                    let (x1, _y1) = if i + 1 < m {
                        (us[i + 1].clone(), vs[i + 1].clone())
                    } else {
                        (&us[0] + rat_int(1), &vs[0] + rat_int(1))
                    };
                    let piece = Piece {
                        x0: us[i].clone(),
                        x1: x1.clone(),
                        y0: vs[i].clone(),
                        slope: self.lift_piece_slope(us, vs, i),
                    };
                    if let Some(span) = piece_fixed(&piece, Some(&us[i]), Some(&x1)) {
                        // Reduce into [0, 1), splitting at 1 if needed.
                        let (lo, hi) = (span.lo.unwrap(), span.hi.unwrap());
                        if hi < Rat::one() {
                            parts.push(ClosedSpan::bounded(lo, hi));
                        } else if lo >= Rat::one() {
                            parts.push(ClosedSpan::bounded(lo - rat_int(1), hi - rat_int(1)));
                        } else {
                            // Span crosses the period boundary: split. The
                            // endpoint at 1 coincides with 0 of the next
                            // period, harmless for a set union.
                            parts.push(ClosedSpan::bounded(lo, Rat::one()));
                            parts.push(ClosedSpan::bounded(rat_int(0), hi - rat_int(1)));
                        }
                    }
                }
                FixedSet::periodic(parts)
            }
        }
    }
}
