//! Serialization of maps and rationals.
//!
//! Rationals travel as reduced strings, "p/q" or plain "p" for integers.
//! Maps serialize as one of:
//!
//! ```json
//! {"affine": ["a", "b"]}
//! {"breakpoints": [...], "slopes": [...], "anchor_value": "p/q"}
//! {"unit_lift": {"breakpoints": [...], "values": [...]}}
//! ```
//!
//! The first two are the interchange forms for finite maps; the third is the
//! unit-periodic extension.

use std::str::FromStr;

use num_bigint::BigInt;
use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use super::{PLHomeo, Rat, Repr};

/// Serialize a rational as its canonical string.
pub fn rat_to_string(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse "p/q" or "p".
pub fn rat_from_str(s: &str) -> Result<Rat, String> {
    let s = s.trim();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n = BigInt::from_str(num).map_err(|e| format!("bad numerator {num:?}: {e}"))?;
    let d = BigInt::from_str(den).map_err(|e| format!("bad denominator {den:?}: {e}"))?;
    if d == BigInt::from(0) {
        return Err(format!("zero denominator in {s:?}"));
    }
    Ok(Rat::new(n, d))
}

/// Wrapper giving rationals their string wire form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatStr(pub Rat);

impl Serialize for RatStr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&rat_to_string(&self.0))
    }
}

impl<'de> Deserialize<'de> for RatStr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        rat_from_str(&raw).map(RatStr).map_err(de::Error::custom)
    }
}

fn rats(v: &[Rat]) -> Vec<RatStr> {
    v.iter().cloned().map(RatStr).collect()
}

fn unrats(v: Vec<RatStr>) -> Vec<Rat> {
    v.into_iter().map(|r| r.0).collect()
}

#[derive(Serialize, Deserialize)]
struct LiftWire {
    breakpoints: Vec<RatStr>,
    values: Vec<RatStr>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MapWire {
    Affine {
        affine: [RatStr; 2],
    },
    Finite {
        breakpoints: Vec<RatStr>,
        slopes: Vec<RatStr>,
        anchor_value: RatStr,
    },
    Lift {
        unit_lift: LiftWire,
    },
}

impl Serialize for PLHomeo {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let wire = match &self.repr {
            Repr::Affine { slope, offset } => MapWire::Affine {
                affine: [RatStr(slope.clone()), RatStr(offset.clone())],
            },
            Repr::Finite { xs, slopes, ys } => MapWire::Finite {
                breakpoints: rats(xs),
                slopes: rats(slopes),
                anchor_value: RatStr(ys[0].clone()),
            },
            Repr::Lift { us, vs } => MapWire::Lift {
                unit_lift: LiftWire {
                    breakpoints: rats(us),
                    values: rats(vs),
                },
            },
        };
        wire.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PLHomeo {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let wire = MapWire::deserialize(d)?;
        match wire {
            MapWire::Affine { affine: [a, b] } => {
                PLHomeo::affine(a.0, b.0).map_err(de::Error::custom)
            }
            MapWire::Finite {
                breakpoints,
                slopes,
                anchor_value,
            } => PLHomeo::from_breakpoints(unrats(breakpoints), unrats(slopes), anchor_value.0)
                .map_err(de::Error::custom),
            MapWire::Lift { unit_lift } => {
                let nodes = unrats(unit_lift.breakpoints)
                    .into_iter()
                    .zip(unrats(unit_lift.values))
                    .collect();
                PLHomeo::unit_lift(nodes).map_err(de::Error::custom)
            }
        }
    }
}
