//! Named generator systems used throughout the experiments.
//!
//! Each preset is a small symmetric system chosen to land in a different
//! dynamical regime:
//!
//! * `translations-discrete`: unit translations only. Orbits are lattices,
//!   the invariant measure is counting measure, nothing contracts.
//! * `translations-minimal`: unit translations plus a rational stand-in for
//!   sqrt(2). Orbits are dense at simulation resolution, the action is
//!   conjugate to nothing smaller than itself, still no contraction.
//! * `affine`: a doubling map and a unit translation. Non-abelian, drifts
//!   under no coordinate change built from Lebesgue measure alone, and
//!   contracts gated coupled trajectories.
//! * `lifted-rotation`: a unit translation and a lift of a circle map that
//!   commutes with it. The walk projects to a circle walk; on the line it
//!   neither contracts nor stays on a lattice.
//! * `thompson-like`: a unit translation and a dyadic stretch fixing the
//!   complement of [0, 1]. Piecewise structure with dyadic breakpoints.
//!
//! All weights are uniform and symmetric, so every preset passes
//! [`GeneratorSystem::validate`]. The recurrence interval and the stopping
//! profile derive from the system itself, keeping the presets free of magic
//! constants beyond the generator lists.

use crate::chain::{BumpProfile, CompiledSystem};
use crate::homeo::{rat, rat_int, root2_surrogate, PLHomeo};
use crate::walkgroup::{GeneratorSystem, RecurrenceInterval};

/// Fraction by which the stopping profile's support widens past the
/// recurrence interval on each side.
pub const PROFILE_WIDEN_FRAC: f64 = 0.2;

/// A named generator system bundled with the derived geometry the
/// experiments need: the recurrence interval and a stopping profile.
#[derive(Debug, Clone)]
pub struct Scenario {
    name: &'static str,
    summary: &'static str,
    system: GeneratorSystem,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn summary(&self) -> &'static str {
        self.summary
    }

    pub fn system(&self) -> &GeneratorSystem {
        &self.system
    }

    pub fn into_system(self) -> GeneratorSystem {
        self.system
    }

    pub fn k(&self) -> RecurrenceInterval {
        self.system.recurrence_interval()
    }

    /// Smooth cutoff supported slightly beyond K, identically one on K.
    pub fn profile(&self) -> BumpProfile {
        BumpProfile::around(&self.k(), PROFILE_WIDEN_FRAC)
    }

    pub fn compile(&self) -> CompiledSystem {
        CompiledSystem::new(&self.system)
    }
}

/// Preset names in presentation order.
pub const PRESET_NAMES: [&str; 5] = [
    "translations-discrete",
    "translations-minimal",
    "affine",
    "lifted-rotation",
    "thompson-like",
];

/// Look up a preset by name; `None` for unknown names.
pub fn preset(name: &str) -> Option<Scenario> {
    let build = |name, summary, pairs: Vec<(&str, PLHomeo, crate::homeo::Rat)>| Scenario {
        name,
        summary,
        system: GeneratorSystem::from_symmetric_pairs(pairs)
            .expect("preset systems are well formed by construction"),
    };
    match name {
        "translations-discrete" => Some(build(
            "translations-discrete",
            "unit translations; lattice orbits, counting measure",
            vec![("unit", PLHomeo::translation(rat_int(1)), rat(1, 2))],
        )),
        "translations-minimal" => Some(build(
            "translations-minimal",
            "unit and near-sqrt(2) translations; dense orbits",
            vec![
                ("unit", PLHomeo::translation(rat_int(1)), rat(1, 4)),
                ("root2", PLHomeo::translation(root2_surrogate()), rat(1, 4)),
            ],
        )),
        "affine" => Some(build(
            "affine",
            "doubling and unit translation; contracting non-abelian action",
            vec![
                ("double", PLHomeo::scaling(rat_int(2)).expect("slope 2 > 0"), rat(1, 4)),
                ("unit", PLHomeo::translation(rat_int(1)), rat(1, 4)),
            ],
        )),
        "lifted-rotation" => Some(build(
            "lifted-rotation",
            "unit translation and a commuting circle-map lift",
            vec![
                ("unit", PLHomeo::translation(rat_int(1)), rat(1, 4)),
                ("lift", circle_lift(), rat(1, 4)),
            ],
        )),
        "thompson-like" => Some(build(
            "thompson-like",
            "unit translation and a dyadic stretch of [0, 1]",
            vec![
                ("unit", PLHomeo::translation(rat_int(1)), rat(1, 4)),
                ("stretch", dyadic_stretch(), rat(1, 4)),
            ],
        )),
        _ => None,
    }
}

/// All presets in presentation order.
pub fn all_presets() -> Vec<Scenario> {
    PRESET_NAMES
        .iter()
        .map(|name| preset(name).expect("every listed name resolves"))
        .collect()
}

/// Lift of a circle homeomorphism: maps 0 to 0 and 1/3 to 2/3 on the core
/// period, extended by commuting with the unit translation. Its rotation
/// behavior makes orbits accumulate without ever forming a lattice.
fn circle_lift() -> PLHomeo {
    PLHomeo::unit_lift(vec![(rat_int(0), rat_int(0)), (rat(1, 3), rat(2, 3))])
        .expect("two strictly increasing core nodes")
}

/// Identity off [0, 1], slope 2 on it: sends [0, 1] onto [0, 2] and shifts
/// everything to the right of 1 by one. All breakpoints and slopes dyadic.
fn dyadic_stretch() -> PLHomeo {
    PLHomeo::from_breakpoints(
        vec![rat_int(0), rat_int(1)],
        vec![rat_int(1), rat_int(2), rat_int(1)],
        rat_int(0),
    )
    .expect("strictly increasing breakpoints, positive slopes")
}
