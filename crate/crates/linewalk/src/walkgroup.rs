//! Weighted symmetric generating systems and their structural checks.
//!
//! A system is a finite list of named generators with rational weights that
//! sum to one, plus an involutive pairing that matches each generator with
//! its exact inverse at equal weight. The two load-bearing checks are:
//!
//! * symmetry: the pairing really is an involution onto exact inverses with
//!   equal weights, so the step distribution equals its pushforward under
//!   inversion;
//! * irreducibility: the generators share no common fixed point, checked
//!   exactly by intersecting fixed-point sets.
//!
//! Also here: the drift field, the weighted area functional, and the
//! recurrence interval [A, B] chosen so that g(A) < B for every generator.

use num_traits::{One, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homeo::serde_impl::RatStr;
use crate::homeo::{rat, rat_int, rat_to_f64, PLHomeo, Rat};

/// One named generator with its sampling weight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub name: String,
    pub map: PLHomeo,
    /// Sampling weight in (0, 1); serialized as a rational string.
    #[serde(with = "weight_wire")]
    pub weight: Rat,
}

mod weight_wire {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(w: &Rat, s: S) -> Result<S::Ok, S::Error> {
        RatStr(w.clone()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        Ok(RatStr::deserialize(d)?.0)
    }
}

/// A finite weighted generating system with an inverse pairing.
/// `pairing[i] = j` states that generator j is the inverse of generator i.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSystem {
    pub generators: Vec<Generator>,
    pub pairing: Vec<usize>,
}

/// Structural rejection: the data cannot form a system at all.
#[derive(Debug, Error)]
pub enum SystemError {
    #[error("a generating system needs at least one generator")]
    Empty,
    #[error("pairing length {got} does not match generator count {expected}")]
    PairingLength { expected: usize, got: usize },
    #[error("pairing index {index} out of range")]
    PairingRange { index: usize },
}

/// Outcome of one validation check.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Full validation report; `ok()` is the conjunction of all checks.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )?;
        }
        Ok(())
    }
}

/// The recurrence interval K = [a, b].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecurrenceInterval {
    pub a: Rat,
    pub b: Rat,
}

impl RecurrenceInterval {
    pub fn a_f64(&self) -> f64 {
        rat_to_f64(&self.a)
    }

    pub fn b_f64(&self) -> f64 {
        rat_to_f64(&self.b)
    }

    pub fn midpoint_f64(&self) -> f64 {
        (self.a_f64() + self.b_f64()) / 2.0
    }
}

impl GeneratorSystem {
    /// Build a system from explicit generators and pairing.
    /// Structural problems are rejected here; semantic problems (weights,
    /// symmetry, irreducibility) are reported by [`validate`].
    pub fn new(generators: Vec<Generator>, pairing: Vec<usize>) -> Result<Self, SystemError> {
        if generators.is_empty() {
            return Err(SystemError::Empty);
        }
        if pairing.len() != generators.len() {
            return Err(SystemError::PairingLength {
                expected: generators.len(),
                got: pairing.len(),
            });
        }
        if let Some(&index) = pairing.iter().find(|&&j| j >= generators.len()) {
            return Err(SystemError::PairingRange { index });
        }
        Ok(GeneratorSystem {
            generators,
            pairing,
        })
    }

    /// Build a symmetric system from (name, map, weight-per-element) pairs:
    /// each entry contributes the map and its exact inverse, both at the
    /// given weight, with the inverse named `<name>_inv`.
    pub fn from_symmetric_pairs(pairs: Vec<(&str, PLHomeo, Rat)>) -> Result<Self, SystemError> {
        let mut generators = Vec::new();
        let mut pairing = Vec::new();
        for (name, map, weight) in pairs {
            let i = generators.len();
            let inv = map.invert();
            if inv == map {
                generators.push(Generator {
                    name: name.to_string(),
                    map,
                    weight: weight * rat_int(2),
                });
                pairing.push(i);
            } else {
                generators.push(Generator {
                    name: name.to_string(),
                    map,
                    weight: weight.clone(),
                });
                generators.push(Generator {
                    name: format!("{name}_inv"),
                    map: inv,
                    weight,
                });
                pairing.push(i + 1);
                pairing.push(i);
            }
        }
        Self::new(generators, pairing)
    }

    /// Total weight; one for a well-formed system.
    pub fn total_weight(&self) -> Rat {
        self.generators.iter().map(|g| g.weight.clone()).sum()
    }

    /// Semantic validation: weights, symmetry, irreducibility.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();

        let positive = self.generators.iter().all(|g| g.weight > Rat::zero());
        let total = self.total_weight();
        let weights_ok = positive && total.is_one();
        checks.push(Check {
            name: "weights",
            passed: weights_ok,
            detail: if weights_ok {
                "all positive, total 1".to_string()
            } else {
                format!(
                    "weights must be positive with total 1, total is {}",
                    crate::homeo::serde_impl::rat_to_string(&total)
                )
            },
        });

        let mut symmetry_faults = Vec::new();
        for (i, g) in self.generators.iter().enumerate() {
            let j = self.pairing[i];
            if self.pairing[j] != i {
                symmetry_faults.push(format!("pairing not involutive at {}", g.name));
                continue;
            }
            let partner = &self.generators[j];
            if partner.map != g.map.invert() {
                symmetry_faults.push(format!("{} is not the exact inverse of {}", partner.name, g.name));
            }
            if partner.weight != g.weight {
                symmetry_faults.push(format!(
                    "weight({}) differs from weight({})",
                    partner.name, g.name
                ));
            }
        }
        checks.push(Check {
            name: "symmetry",
            passed: symmetry_faults.is_empty(),
            detail: if symmetry_faults.is_empty() {
                "pairing is an involution onto exact inverses at equal weight".to_string()
            } else {
                symmetry_faults.join("; ")
            },
        });

        let mut common = self.generators[0].map.fixed_points();
        for g in &self.generators[1..] {
            if common.is_empty() {
                break;
            }
            common = common.intersect(&g.map.fixed_points());
        }
        let witness = common.witness();
        checks.push(Check {
            name: "irreducibility",
            passed: witness.is_none(),
            detail: match &witness {
                None => "no common fixed point".to_string(),
                Some(w) => format!(
                    "common fixed point at {}",
                    crate::homeo::serde_impl::rat_to_string(w)
                ),
            },
        });

        ValidationReport { checks }
    }

    /// Sample a generator index by weight.
    pub fn sample_letter(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (i, g) in self.generators.iter().enumerate() {
            acc += rat_to_f64(&g.weight);
            if u < acc {
                return i;
            }
        }
        self.generators.len() - 1
    }

    /// Compose a word of letters, first letter applied first:
    /// word [l1, l2, ..., ln] yields g_{ln} after ... after g_{l1}.
    pub fn compose_word(&self, word: &[usize]) -> PLHomeo {
        word.iter().fold(PLHomeo::identity(), |acc, &l| {
            self.generators[l].map.compose(&acc)
        })
    }

    /// Mean displacement field at x: sum of weight(g) (g(x) - x). Exact.
    pub fn drift_at(&self, x: &Rat) -> Rat {
        self.generators
            .iter()
            .map(|g| &g.weight * (g.map.eval(x) - x))
            .sum()
    }

    /// Weighted area functional at level c. Exact.
    pub fn phi_mu(&self, c: &Rat) -> Rat {
        self.generators
            .iter()
            .map(|g| &g.weight * g.map.phi(c))
            .sum()
    }

    /// Largest absolute drift over a grid; zero exactly for systems whose
    /// step distribution has no mean displacement anywhere.
    pub fn derriennic_residual(&self, grid: &[Rat]) -> Rat {
        use num_traits::Signed;
        grid.iter()
            .map(|x| self.drift_at(x).abs())
            .max()
            .unwrap_or_else(Rat::zero)
    }

    /// The recurrence interval [A, B] with A given and
    /// B = max_g g(A) + margin, so g(A) < B for every generator.
    pub fn recurrence_interval_from(&self, a: Rat, margin: Rat) -> RecurrenceInterval {
        let top = self
            .generators
            .iter()
            .map(|g| g.map.eval(&a))
            .max()
            .expect("nonempty system");
        RecurrenceInterval {
            b: top + margin,
            a,
        }
    }

    /// Default recurrence interval: A = 0, margin 1/1000.
    pub fn recurrence_interval(&self) -> RecurrenceInterval {
        self.recurrence_interval_from(rat_int(0), rat(1, 1000))
    }

    /// Weight of the lightest generator; appears in Lipschitz bounds.
    pub fn min_weight(&self) -> Rat {
        self.generators
            .iter()
            .map(|g| g.weight.clone())
            .min()
            .expect("nonempty system")
    }
}
