//! Floating-point evaluation path for simulations.
//!
//! A [`CompiledMap`] caches the node data of a map as f64 and evaluates in
//! O(log pieces). Piece values are clamped to the node values on both ends,
//! which makes evaluation monotone (non-strictly) in floating point even
//! across piece boundaries; exact monotone coupling of trajectories relies
//! on this.

use num_traits::ToPrimitive;

use super::{PLHomeo, Repr};

/// f64 form of a map, built once and evaluated in hot loops.
#[derive(Clone, Debug)]
pub enum CompiledMap {
    Affine {
        a: f64,
        b: f64,
    },
    Pl {
        xs: Vec<f64>,
        ys: Vec<f64>,
        /// One slope per piece, left tail first (xs.len() + 1 entries).
        slopes: Vec<f64>,
    },
    Lift {
        us: Vec<f64>,
        vs: Vec<f64>,
        /// Cyclic core piece slopes (us.len() entries, last one wraps).
        slopes: Vec<f64>,
    },
}

impl CompiledMap {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CompiledMap::Affine { a, b } => a * x + b,
            CompiledMap::Pl { xs, ys, slopes } => {
                let j = xs.partition_point(|b| *b <= x);
                if j == 0 {
                    let v = ys[0] + slopes[0] * (x - xs[0]);
                    v.min(ys[0])
                } else {
                    let v = ys[j - 1] + slopes[j] * (x - xs[j - 1]);
                    if j < xs.len() {
                        v.clamp(ys[j - 1], ys[j])
                    } else {
                        v.max(ys[j - 1])
                    }
                }
            }
            CompiledMap::Lift { us, vs, slopes } => {
                let k = (x - us[0]).floor();
                let t = x - k;
                let j = us.partition_point(|u| *u <= t).max(1) - 1;
                let v = vs[j] + slopes[j] * (t - us[j]);
                let upper = if j + 1 < vs.len() { vs[j + 1] } else { vs[0] + 1.0 };
                v.clamp(vs[j], upper) + k
            }
        }
    }
}

impl CompiledMap {
    /// The two tail pieces as (slope, intercept) pairs, left tail first.
    ///
    /// Outside its breakpoint hull every piecewise map acts by a single
    /// affine branch; these are the coefficients of that branch on each
    /// side. A lift commutes with integer translation, so far from the
    /// origin it moves points by a bounded amount: its tails are reported
    /// as slope one with zero intercept, which is what its action rounds
    /// to once |x| dwarfs the displacement.
    pub fn outer_pieces(&self) -> ((f64, f64), (f64, f64)) {
        match self {
            CompiledMap::Affine { a, b } => ((*a, *b), (*a, *b)),
            CompiledMap::Pl { xs, ys, slopes } => {
                let s0 = slopes[0];
                let sn = slopes[slopes.len() - 1];
                let left = (s0, ys[0] - s0 * xs[0]);
                let right = (sn, ys[ys.len() - 1] - sn * xs[xs.len() - 1]);
                (left, right)
            }
            CompiledMap::Lift { .. } => ((1.0, 0.0), (1.0, 0.0)),
        }
    }
}

impl PLHomeo {
    /// Compile to the f64 evaluation form.
    pub fn compiled(&self) -> CompiledMap {
        let f = |r: &super::Rat| r.to_f64().expect("node in f64 range");
        match &self.repr {
            Repr::Affine { slope, offset } => CompiledMap::Affine {
                a: f(slope),
                b: f(offset),
            },
            Repr::Finite { xs, ys, slopes } => CompiledMap::Pl {
                xs: xs.iter().map(f).collect(),
                ys: ys.iter().map(f).collect(),
                slopes: slopes.iter().map(f).collect(),
            },
            Repr::Lift { us, vs } => CompiledMap::Lift {
                us: us.iter().map(f).collect(),
                vs: vs.iter().map(f).collect(),
                slopes: (0..us.len())
                    .map(|i| f(&self.lift_piece_slope(us, vs, i)))
                    .collect(),
            },
        }
    }
}
